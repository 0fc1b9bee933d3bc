//! Mapping class group action on curve classes via explicit Dehn-twist
//! automorphisms along a five-curve twist chain.
//!
//! The twist curves form a chain (consecutive curves cross once, the rest
//! are disjoint) whose twists generate the genus-2 mapping class group:
//! b1, a1, b1 b2, a2, b2.  Each twist acts on the fundamental group by the
//! path-crossing formula: a generator's image is the product of one
//! conjugated copy of the twist curve per crossing of the generator's
//! basepoint path with a lift of the curve, ordered along the path, times
//! the generator.  The automorphism table is derived from crossing data in
//! the hyperbolic model once, and frozen as a versioned asset so the
//! convention is auditable; loading re-checks that every table row induces
//! a genuine automorphism (the relator maps to a conjugate of itself).

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::fuchsian::{FuchsianError, Hp, HyperbolicStructure};
use crate::intersection::{segment_crossings, IntersectionError};
use crate::words::{CurveClass, Presentation, Word, WordError};

/// Number of chain twists for genus 2 (3g - 1).
pub const TWIST_COUNT: usize = 5;

/// Frozen automorphism table: the derivation output of
/// `derive_twist_images` for the five chain curves, in the convention
/// recorded in its header.
const TWIST_TABLE_ASSET: &str = include_str!("../assets/twist_table_genus2.txt");

/// Errors from mapping-class computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum McgError {
    #[error("twist index {0} out of range (have {TWIST_COUNT})")]
    BadIndex(usize),
    #[error("malformed twist table: {0}")]
    BadTable(String),
    #[error("cannot parse mapping-class word: {0:?}")]
    Parse(String),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Geometry(#[from] FuchsianError),
    #[error(transparent)]
    Crossing(#[from] IntersectionError),
}

/// One Dehn twist along a chain curve, or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MCGGenerator {
    index: usize,
    positive: bool,
}

impl MCGGenerator {
    pub fn new(index: usize, positive: bool) -> Result<MCGGenerator, McgError> {
        if index >= TWIST_COUNT {
            return Err(McgError::BadIndex(index));
        }
        Ok(MCGGenerator { index, positive })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn positive(&self) -> bool {
        self.positive
    }

    pub fn inverse(&self) -> MCGGenerator {
        MCGGenerator {
            index: self.index,
            positive: !self.positive,
        }
    }
}

impl fmt::Display for MCGGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}{}", self.index, if self.positive { "" } else { "'" })
    }
}

/// A word in the twist generators; applied leftmost-outermost.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct MCGWord(pub Vec<MCGGenerator>);

impl MCGWord {
    pub fn identity() -> MCGWord {
        MCGWord(Vec::new())
    }

    /// Parse whitespace-separated tokens like `T0 T3' T1`.
    pub fn parse(text: &str) -> Result<MCGWord, McgError> {
        let mut gens = Vec::new();
        for tok in text.split_whitespace() {
            let rest = tok
                .strip_prefix('T')
                .ok_or_else(|| McgError::Parse(tok.into()))?;
            let (num, positive) = match rest.strip_suffix('\'') {
                Some(n) => (n, false),
                None => (rest, true),
            };
            let index: usize = num.parse().map_err(|_| McgError::Parse(tok.into()))?;
            gens.push(MCGGenerator::new(index, positive)?);
        }
        Ok(MCGWord(gens))
    }

    /// The inverse mapping class (reversed order, inverted twists).
    pub fn inverse(&self) -> MCGWord {
        MCGWord(self.0.iter().rev().map(|g| g.inverse()).collect())
    }

    /// Concatenation g.h (h applied first).
    pub fn compose(&self, other: &MCGWord) -> MCGWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MCGWord(v)
    }
}

impl fmt::Display for MCGWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|g| g.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// The frozen twist system: chain curves and the automorphism table for
/// each twist and its inverse.
pub struct TwistSystem {
    presentation: Presentation,
    curves: [Word; TWIST_COUNT],
    /// images[i][j] = image of generator j (letter 2j) under twist i.
    forward: [[Word; 4]; TWIST_COUNT],
    backward: [[Word; 4]; TWIST_COUNT],
}

impl TwistSystem {
    /// Load the frozen genus-2 table and re-check that every row induces
    /// an automorphism: the relator must map to a conjugate of itself.
    pub fn standard() -> Result<TwistSystem, McgError> {
        let sys = TwistSystem::from_asset(TWIST_TABLE_ASSET)?;
        let p = &sys.presentation;
        let relator = p.relator();
        for i in 0..TWIST_COUNT {
            for gen in [
                MCGGenerator::new(i, true).unwrap(),
                MCGGenerator::new(i, false).unwrap(),
            ] {
                let image = sys.apply_generator_to_word(gen, &relator);
                if !p.are_conjugate(&image, &relator)? {
                    return Err(McgError::BadTable(format!(
                        "twist {gen} does not send the relator to a conjugate of itself"
                    )));
                }
            }
        }
        Ok(sys)
    }

    fn from_asset(text: &str) -> Result<TwistSystem, McgError> {
        let p = Presentation::new(2);
        let mut version_seen = false;
        let mut curves: Vec<Option<Word>> = vec![None; TWIST_COUNT];
        let mut forward: Vec<Vec<Option<Word>>> = vec![vec![None; 4]; TWIST_COUNT];
        let mut backward: Vec<Vec<Option<Word>>> = vec![vec![None; 4]; TWIST_COUNT];
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if rest.trim().starts_with("twist-table v1") {
                    version_seen = true;
                }
                continue;
            }
            let mut parts = line.splitn(2, "->");
            let lhs = parts.next().unwrap().trim();
            if let Some(curve_spec) = lhs.strip_prefix("curve ") {
                let mut it = curve_spec.splitn(2, ' ');
                let idx: usize = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| McgError::BadTable(format!("bad curve line: {line}")))?;
                let word = p.parse_word(
                    it.next()
                        .ok_or_else(|| McgError::BadTable(format!("bad curve line: {line}")))?,
                )?;
                if idx >= TWIST_COUNT {
                    return Err(McgError::BadTable(format!("curve index {idx} out of range")));
                }
                curves[idx] = Some(word);
                continue;
            }
            let rhs = parts
                .next()
                .ok_or_else(|| McgError::BadTable(format!("missing '->': {line}")))?
                .trim();
            let mut it = lhs.split_whitespace();
            let twist_tok = it
                .next()
                .ok_or_else(|| McgError::BadTable(format!("bad row: {line}")))?;
            let sym_tok = it
                .next()
                .ok_or_else(|| McgError::BadTable(format!("bad row: {line}")))?;
            let twist_rest = twist_tok
                .strip_prefix('T')
                .ok_or_else(|| McgError::BadTable(format!("bad twist token: {twist_tok}")))?;
            let (num, positive) = match twist_rest.strip_suffix('\'') {
                Some(n) => (n, false),
                None => (twist_rest, true),
            };
            let idx: usize = num
                .parse()
                .map_err(|_| McgError::BadTable(format!("bad twist token: {twist_tok}")))?;
            if idx >= TWIST_COUNT {
                return Err(McgError::BadTable(format!("twist index {idx} out of range")));
            }
            let sym_word = p.parse_word(sym_tok)?;
            if sym_word.len() != 1 || sym_word.0[0] % 2 != 0 {
                return Err(McgError::BadTable(format!(
                    "table rows must map positive generators, got {sym_tok}"
                )));
            }
            let j = (sym_word.0[0] / 2) as usize;
            let image = p.parse_word(rhs)?;
            if positive {
                forward[idx][j] = Some(image);
            } else {
                backward[idx][j] = Some(image);
            }
        }
        if !version_seen {
            return Err(McgError::BadTable("missing version header".into()));
        }
        let unwrap_all = |rows: Vec<Vec<Option<Word>>>, what: &str| {
            let mut out: Vec<[Word; 4]> = Vec::with_capacity(TWIST_COUNT);
            for (i, row) in rows.into_iter().enumerate() {
                let mut arr: Vec<Word> = Vec::with_capacity(4);
                for (j, cell) in row.into_iter().enumerate() {
                    arr.push(cell.ok_or_else(|| {
                        McgError::BadTable(format!("missing {what} row for twist {i}, generator {j}"))
                    })?);
                }
                out.push(arr.try_into().unwrap());
            }
            Ok::<[[Word; 4]; TWIST_COUNT], McgError>(out.try_into().unwrap())
        };
        let curves: Vec<Word> = curves
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| McgError::BadTable(format!("missing curve {i}"))))
            .collect::<Result<_, _>>()?;
        Ok(TwistSystem {
            presentation: p,
            curves: curves.try_into().unwrap(),
            forward: unwrap_all(forward, "forward")?,
            backward: unwrap_all(backward, "backward")?,
        })
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    /// The chain curve the twist acts along.
    pub fn curve(&self, index: usize) -> Result<&Word, McgError> {
        self.curves.get(index).ok_or(McgError::BadIndex(index))
    }

    /// Image of a single positive generator symbol under one twist.
    pub fn twist_image(&self, t: MCGGenerator, generator: usize) -> Result<&Word, McgError> {
        if generator >= 4 {
            return Err(McgError::BadIndex(generator));
        }
        let table = if t.positive {
            &self.forward
        } else {
            &self.backward
        };
        Ok(&table[t.index][generator])
    }

    /// Apply one twist's automorphism to a word (exact, element-level).
    pub fn apply_generator_to_word(&self, t: MCGGenerator, w: &Word) -> Word {
        let table = if t.positive {
            &self.forward
        } else {
            &self.backward
        };
        let mut out: Vec<u8> = Vec::with_capacity(4 * w.len());
        for &l in w.letters() {
            let j = (l / 2) as usize;
            let img = &table[t.index][j];
            if l % 2 == 0 {
                out.extend_from_slice(&img.0);
            } else {
                out.extend_from_slice(&img.inverse().0);
            }
        }
        Word(out).free_reduce()
    }

    /// Apply a mapping-class word to a curve class (leftmost generator
    /// outermost).  Intermediate words are shortened with the conjugacy
    /// reduction, which is sound because automorphisms send conjugates to
    /// conjugates and the result is a class.
    pub fn apply_mcg(&self, g: &MCGWord, c: &CurveClass) -> Result<CurveClass, McgError> {
        let mut w = c.word().clone();
        for t in g.0.iter().rev() {
            w = self.apply_generator_to_word(*t, &w);
            w = self.presentation.dehn_reduce(&w);
        }
        Ok(self.presentation.canonical_class(&w)?)
    }

    /// Relation check over sample words: adjacent chain twists satisfy the
    /// braid relation, non-adjacent ones commute, as outer automorphisms
    /// (equal canonical classes on every sample).
    pub fn verify_relations(&self, samples: &[Word]) -> Result<RelationReport, McgError> {
        let mut report = RelationReport::default();
        for i in 0..TWIST_COUNT {
            for j in (i + 1)..TWIST_COUNT {
                let ti = MCGGenerator::new(i, true).unwrap();
                let tj = MCGGenerator::new(j, true).unwrap();
                let (lhs, rhs, kind) = if j == i + 1 {
                    (
                        MCGWord(vec![ti, tj, ti]),
                        MCGWord(vec![tj, ti, tj]),
                        "braid",
                    )
                } else {
                    (MCGWord(vec![ti, tj]), MCGWord(vec![tj, ti]), "commute")
                };
                for w in samples {
                    let c = match self.presentation.canonical_class(w) {
                        Ok(c) => c,
                        Err(WordError::TrivialClass) => continue,
                        Err(e) => return Err(e.into()),
                    };
                    report.checks += 1;
                    let a = self.apply_mcg(&lhs, &c)?;
                    let b = self.apply_mcg(&rhs, &c)?;
                    if a != b {
                        report.failures.push(format!(
                            "{kind} failure T{i},T{j} on {w}: {} vs {}",
                            a.word(),
                            b.word()
                        ));
                    }
                }
            }
        }
        Ok(report)
    }
}

/// Outcome of `verify_relations`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RelationReport {
    pub checks: usize,
    pub failures: Vec<String>,
}

impl RelationReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Geometric derivation of twist automorphisms
// ---------------------------------------------------------------------------

/// Basepoint for the path-crossing derivation: a generic point away from
/// the axes of all short geodesics.
fn derivation_basepoint() -> Hp {
    Hp::new(0.0834, 1.0417)
}

/// Derive the automorphism of one Dehn twist along `curve` from crossing
/// data: for each generator, the crossings of its basepoint path with the
/// lifts of the curve each contribute a conjugated copy of the curve.
///
/// Convention knobs (frozen in the shipped table): factors ordered along
/// the path from its start (the loop detours around the curve in traversal
/// order), and a crossing from the lift's positive side inserts the curve
/// with exponent `handedness`.
pub fn derive_twist_images(
    x: &HyperbolicStructure,
    curve: &CurveClass,
    reverse_order: bool,
    handedness: i8,
) -> Result<[Word; 4], McgError> {
    let rep = x.representation();
    let p0 = derivation_basepoint();
    let mut images: Vec<Word> = Vec::with_capacity(4);
    for j in 0..4u8 {
        let letter = 2 * j;
        let target = p0.transform(rep.letter(letter));
        let mut crossings = segment_crossings(x, curve, p0, target)?;
        if reverse_order {
            crossings.reverse();
        }
        let mut word = Word::identity();
        for cr in &crossings {
            let expo = if cr.positive_side {
                handedness
            } else {
                -handedness
            };
            let core = if expo > 0 {
                curve.word().clone()
            } else {
                curve.word().inverse()
            };
            let factor = cr.conjugator.concat(&core).concat(&cr.conjugator.inverse());
            word = word.concat(&factor);
        }
        word = word.concat(&Word(vec![letter])).free_reduce();
        images.push(word);
    }
    Ok(images.try_into().unwrap())
}

/// Render a full twist table in the asset format (used by the discovery
/// notebook to regenerate the frozen file).
pub fn render_twist_table(
    x: &HyperbolicStructure,
    chain: &[CurveClass; TWIST_COUNT],
    reverse_order: bool,
    handedness: i8,
) -> Result<String, McgError> {
    let mut out = String::new();
    out.push_str("# twist-table v1\n");
    out.push_str("# genus 2\n");
    out.push_str(&format!(
        "# convention: chain twists; factor order {}, handedness {:+}\n",
        if reverse_order { "path-end first" } else { "path-start first" },
        handedness
    ));
    for (i, c) in chain.iter().enumerate() {
        out.push_str(&format!("curve {} {}\n", i, c.word()));
    }
    let gen_names = ["a1", "b1", "a2", "b2"];
    for (i, c) in chain.iter().enumerate() {
        let fwd = derive_twist_images(x, c, reverse_order, handedness)?;
        let bwd = derive_twist_images(x, c, reverse_order, -handedness)?;
        for j in 0..4 {
            out.push_str(&format!("T{} {} -> {}\n", i, gen_names[j], fwd[j]));
        }
        for j in 0..4 {
            out.push_str(&format!("T{}' {} -> {}\n", i, gen_names[j], bwd[j]));
        }
    }
    Ok(out)
}

/// The frozen chain curves: b1, a1, b1 b2, a2, b2 (consecutive pairs cross
/// once, all other pairs are disjoint; the middle curve was found by
/// searching short simple classes for that crossing profile).
pub fn chain_curves(p: &Presentation) -> Result<[CurveClass; TWIST_COUNT], McgError> {
    let words = ["b1", "a1", "b1 b2", "a2", "b2"];
    let mut out = Vec::with_capacity(TWIST_COUNT);
    for s in words {
        out.push(p.canonical_class(&p.parse_word(s)?)?);
    }
    Ok(out.try_into().unwrap())
}
