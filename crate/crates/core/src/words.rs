//! Words in the fundamental group of a closed orientable genus-g surface and
//! conjugacy canonical forms for free homotopy classes of closed curves.
//!
//! The group is presented on 2g generators `a1, b1, ..., ag, bg` with the
//! single relator `prod_i [a_i, b_i]` of length 4g.  Letters are packed into
//! bytes: generator `j` (in the order a1, b1, a2, b2, ...) contributes the
//! positive letter `2j` and the inverse letter `2j + 1`, so the natural byte
//! order realizes the frozen tie-break `a1 < a1^-1 < b1 < b1^-1 < a2 < ...`
//! used by every shortlex comparison in the crate.
//!
//! Free homotopy classes of unoriented closed curves correspond to conjugacy
//! classes up to inversion.  The canonical form is computed by length
//! reduction (replacing any cyclic subword sharing more than half of the
//! relator with its shorter complement), followed by closure under the
//! length-preserving half-relator exchanges, rotation, and inversion; the
//! shortlex-least member of the closure is the canonical word.  The closure
//! step is what makes the form conjugation-invariant: half-exchanges relate
//! minimal-length conjugates that rotation alone cannot.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on the closure explored while canonicalizing one word.  Words met
/// in orbit enumeration carry at most a handful of half-relator windows, so
/// closures stay tiny; the cap exists so that adversarial inputs (long
/// products of commutator blocks) fail loudly instead of stalling.
const CLOSURE_NODE_CAP: usize = 200_000;

/// Errors from word algebra and canonicalization.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    /// The input word represents the identity, which is not a curve class.
    #[error("word reduces to the identity and carries no curve class")]
    TrivialClass,
    /// A letter byte does not name a generator of this presentation.
    #[error("letter code {0} is out of range for genus {1}")]
    InvalidLetter(u8, u32),
    /// A textual word failed to parse.
    #[error("cannot parse word text: {0}")]
    Parse(String),
    /// The half-exchange closure exceeded its node budget.
    #[error("canonicalization closure exceeded {0} nodes")]
    ClosureBudget(usize),
}

/// A letter is a packed byte: `2 * generator + (1 if inverted)`.
pub type Letter = u8;

/// Invert a letter by flipping its low bit.
#[inline]
pub fn invert_letter(l: Letter) -> Letter {
    l ^ 1
}

/// A freely reduced or raw word in the surface group generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Word(pub Vec<Letter>);

impl Word {
    /// The empty word.
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Word from raw letter bytes.
    pub fn from_letters(letters: impl Into<Vec<Letter>>) -> Self {
        Word(letters.into())
    }

    /// Number of letters.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True for the empty word.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The inverse word (reverse order, each letter inverted).
    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&l| invert_letter(l)).collect())
    }

    /// Concatenation without reduction.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Free reduction: cancel adjacent inverse pairs until none remain.
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last().is_some_and(|&t| t == invert_letter(l)) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Cyclic reduction of a freely reduced word: strip inverse first/last
    /// pairs.  The result represents a conjugate of the input.
    pub fn cyclic_reduce(&self) -> Word {
        let w = self.free_reduce();
        let mut v = w.0;
        let mut start = 0usize;
        let mut end = v.len();
        while end > start + 1 && v[start] == invert_letter(v[end - 1]) {
            start += 1;
            end -= 1;
        }
        v.truncate(end);
        v.drain(..start);
        Word(v)
    }

    /// Letter slice.
    pub fn letters(&self) -> &[Letter] {
        &self.0
    }
}

/// Render a letter as text: generator family `a`/`b`, 1-based handle index,
/// uppercase for the inverse.
fn letter_to_string(l: Letter) -> String {
    let generator = l >> 1;
    let family = if generator % 2 == 0 { 'a' } else { 'b' };
    let family = if l & 1 == 1 {
        family.to_ascii_uppercase()
    } else {
        family
    };
    format!("{family}{}", generator / 2 + 1)
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|&l| letter_to_string(l)).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// The fixed presentation of the genus-g surface group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presentation {
    genus: u32,
}

impl Presentation {
    /// Presentation for a closed orientable surface of the given genus.
    /// Genus at least 2 is required: these are the hyperbolic cases.
    pub fn new(genus: u32) -> Self {
        assert!(genus >= 2, "surface group algebra requires genus >= 2");
        Presentation { genus }
    }

    /// Surface genus.
    pub fn genus(&self) -> u32 {
        self.genus
    }

    /// Number of generators, 2g.
    pub fn generator_count(&self) -> usize {
        2 * self.genus as usize
    }

    /// Number of letter codes, 4g.
    pub fn letter_count(&self) -> usize {
        4 * self.genus as usize
    }

    /// The relator `prod_i [a_i, b_i]`, length 4g.
    pub fn relator(&self) -> Word {
        let mut v = Vec::with_capacity(self.letter_count());
        for i in 0..self.genus {
            let a = 4 * i as u8;
            let b = 4 * i as u8 + 2;
            v.extend_from_slice(&[a, b, a + 1, b + 1]);
        }
        Word(v)
    }

    /// All rotations of the relator and of its inverse: the words against
    /// which cyclic subwords are matched during reduction.
    pub fn symmetrized_relators(&self) -> Vec<Vec<Letter>> {
        let r = self.relator().0;
        let ri = Word(r.clone()).inverse().0;
        let n = r.len();
        let mut out = Vec::with_capacity(2 * n);
        for base in [r, ri] {
            for s in 0..n {
                let mut rot = Vec::with_capacity(n);
                rot.extend_from_slice(&base[s..]);
                rot.extend_from_slice(&base[..s]);
                out.push(rot);
            }
        }
        out
    }

    /// Validate that every letter is in range for this genus.
    pub fn validate(&self, w: &Word) -> Result<(), WordError> {
        for &l in &w.0 {
            if l as usize >= self.letter_count() {
                return Err(WordError::InvalidLetter(l, self.genus));
            }
        }
        Ok(())
    }

    /// Parse whitespace-separated letters like `a1 B2 a1`; uppercase means
    /// inverse.
    pub fn parse_word(&self, text: &str) -> Result<Word, WordError> {
        let mut letters = Vec::new();
        for tok in text.split_whitespace() {
            let mut chars = tok.chars();
            let family = chars
                .next()
                .ok_or_else(|| WordError::Parse(format!("empty token in {text:?}")))?;
            let idx: u32 = chars
                .as_str()
                .parse()
                .map_err(|_| WordError::Parse(format!("bad generator index in {tok:?}")))?;
            if idx == 0 || idx > self.genus {
                return Err(WordError::Parse(format!(
                    "handle index {idx} out of range for genus {}",
                    self.genus
                )));
            }
            let (fam, inv) = match family {
                'a' => (0u8, 0u8),
                'b' => (1, 0),
                'A' => (0, 1),
                'B' => (1, 1),
                other => {
                    return Err(WordError::Parse(format!(
                        "unknown generator family {other:?} in {tok:?}"
                    )))
                }
            };
            let generator = 2 * (idx as u8 - 1) + fam;
            letters.push(2 * generator + inv);
        }
        Ok(Word(letters))
    }

    /// Longest match of the cyclic subword of `w` starting at `i` against a
    /// prefix of any symmetrized relator rotation, capped at `4g - 1`.
    fn longest_relator_match(&self, w: &[Letter], i: usize, sym: &[Vec<Letter>]) -> usize {
        let n = w.len();
        let cap = (self.letter_count() - 1).min(n);
        let mut best = 0;
        for r in sym {
            let mut k = 0;
            while k < cap && w[(i + k) % n] == r[k] {
                k += 1;
            }
            best = best.max(k);
        }
        best
    }

    /// Apply one replacement of the cyclic subword `w[i..i+p]` (cyclically)
    /// by the inverse of the complementary relator piece, then re-reduce.
    /// Valid whenever that subword is a prefix of some symmetrized rotation.
    fn replace_piece(
        &self,
        w: &[Letter],
        i: usize,
        p: usize,
        sym: &[Vec<Letter>],
    ) -> Option<Word> {
        let n = w.len();
        let rot = sym.iter().find(|r| {
            (0..p).all(|k| w[(i + k) % n] == r[k])
        })?;
        // rot = u v with u the matched piece; u = v^{-1} in the group.
        let complement = Word(rot[p..].to_vec()).inverse();
        let mut rest = Vec::with_capacity(n - p);
        for k in p..n {
            rest.push(w[(i + k) % n]);
        }
        let mut out = complement.0;
        out.extend_from_slice(&rest);
        Some(Word(out).cyclic_reduce())
    }

    /// One pass of length reduction on a cyclic word: find any cyclic subword
    /// strictly longer than half the relator and replace it by the shorter
    /// complement.  Returns the reduced word if a replacement applied.
    fn shorten_once(&self, w: &[Letter], sym: &[Vec<Letter>]) -> Option<Word> {
        let n = w.len();
        let half = self.letter_count() / 2;
        if n == 0 {
            return None;
        }
        for i in 0..n {
            let m = self.longest_relator_match(w, i, sym);
            if m > half {
                return self.replace_piece(w, i, m, sym);
            }
        }
        None
    }

    /// Cyclic length reduction to a local minimum: repeatedly replace
    /// over-long relator pieces.  Accepts a cyclically reduced word; returns
    /// a cyclically reduced word with no cyclic subword longer than half the
    /// relator.  The full relator reduces to the empty word.
    pub fn dehn_reduce(&self, w: &Word) -> Word {
        let mut cur = w.cyclic_reduce();
        let sym = self.symmetrized_relators();
        while let Some(next) = self.shorten_once(&cur.0, &sym) {
            cur = next;
        }
        cur
    }

    /// Shortlex-least rotation of a cyclic word (letters compare as bytes,
    /// lengths are equal, so this is plain lexicographic over rotations).
    fn min_rotation(w: &[Letter]) -> Vec<Letter> {
        let n = w.len();
        if n == 0 {
            return Vec::new();
        }
        let mut best: Option<Vec<Letter>> = None;
        for s in 0..n {
            let mut rot = Vec::with_capacity(n);
            rot.extend_from_slice(&w[s..]);
            rot.extend_from_slice(&w[..s]);
            if best.as_ref().is_none_or(|b| rot < *b) {
                best = Some(rot);
            }
        }
        best.unwrap()
    }

    /// All single half-relator exchanges of a cyclic word: length-preserving
    /// replacements of an exactly-half piece by the inverse complement.
    /// Exchanges whose result re-reduces shorter are returned as well; the
    /// caller treats those as shortenings.
    fn half_exchanges(&self, w: &[Letter], sym: &[Vec<Letter>]) -> Vec<Word> {
        let n = w.len();
        let half = self.letter_count() / 2;
        let mut out = Vec::new();
        if n < half {
            return out;
        }
        for i in 0..n {
            let m = self.longest_relator_match(w, i, sym);
            if m >= half {
                if let Some(next) = self.replace_piece(w, i, half, sym) {
                    out.push(next);
                }
            }
        }
        out
    }

    /// Smallest cyclic period of `w`; `w.len()` when primitive as a word.
    fn cyclic_period(w: &[Letter]) -> usize {
        let n = w.len();
        'outer: for p in 1..n {
            if n % p != 0 {
                continue;
            }
            for i in 0..n {
                if w[i] != w[(i + p) % n] {
                    continue 'outer;
                }
            }
            return p;
        }
        n
    }

    /// Canonical conjugacy form of the unoriented free homotopy class of `w`.
    ///
    /// Pipeline: free and cyclic reduction, length descent by relator-piece
    /// replacement, literal power factoring, then shortlex minimum over the
    /// closure of the class under rotation, inversion, and half-relator
    /// exchanges.  The result is the same for every representative of the
    /// class and for its inverse.
    pub fn canonical_class(&self, w: &Word) -> Result<CurveClass, WordError> {
        self.validate(w)?;
        let word = self.canonical_word(w)?;
        Ok(CurveClass { word })
    }

    fn canonical_word(&self, w: &Word) -> Result<Word, WordError> {
        let sym = self.symmetrized_relators();
        let mut cur = w.cyclic_reduce();
        loop {
            if cur.is_empty() {
                return Err(WordError::TrivialClass);
            }
            // Greedy descent to a length local minimum.
            while let Some(next) = self.shorten_once(&cur.0, &sym) {
                cur = next;
                if cur.is_empty() {
                    return Err(WordError::TrivialClass);
                }
            }
            // Literal powers factor through their root: the class of u^k is
            // determined by the class of u, and concatenating the canonical
            // root keeps closures small for high powers.
            let period = Self::cyclic_period(&cur.0);
            if period < cur.len() {
                let k = cur.len() / period;
                let root = Word(cur.0[..period].to_vec());
                let root_canon = self.canonical_word(&root)?;
                let mut v = Vec::with_capacity(root_canon.len() * k);
                for _ in 0..k {
                    v.extend_from_slice(&root_canon.0);
                }
                // The power of the canonical root is already its own closure
                // minimum; re-entering the loop would rediscover it.
                return Ok(Word(v));
            }
            // Closure under half-relator exchanges at fixed length.
            let start = Self::min_rotation(&cur.0);
            let start_inv = Self::min_rotation(&Word(start.clone()).inverse().0);
            let mut seen: HashSet<Vec<Letter>> = HashSet::new();
            let mut queue: VecDeque<Vec<Letter>> = VecDeque::new();
            let mut best = start.clone().min(start_inv.clone());
            seen.insert(start.clone());
            seen.insert(start_inv.clone());
            queue.push_back(start);
            queue.push_back(start_inv);
            let mut descended: Option<Word> = None;
            'bfs: while let Some(node) = queue.pop_front() {
                for next in self.half_exchanges(&node, &sym) {
                    if next.len() < node.len() {
                        // The exchange uncovered a cancellation: restart the
                        // descent from the strictly shorter word.
                        descended = Some(next);
                        break 'bfs;
                    }
                    let key = Self::min_rotation(&next.0);
                    if seen.insert(key.clone()) {
                        if key < best {
                            best = key.clone();
                        }
                        queue.push_back(key);
                    }
                    if seen.len() > CLOSURE_NODE_CAP {
                        return Err(WordError::ClosureBudget(CLOSURE_NODE_CAP));
                    }
                }
            }
            match descended {
                Some(next) => {
                    cur = next;
                    continue;
                }
                None => return Ok(Word(best)),
            }
        }
    }

    /// Whether two words represent the same unoriented free homotopy class.
    pub fn are_conjugate(&self, w1: &Word, w2: &Word) -> Result<bool, WordError> {
        let c1 = self.canonical_class(w1);
        let c2 = self.canonical_class(w2);
        match (c1, c2) {
            (Ok(a), Ok(b)) => Ok(a == b),
            (Err(WordError::TrivialClass), Err(WordError::TrivialClass)) => Ok(true),
            (Err(WordError::TrivialClass), Ok(_)) | (Ok(_), Err(WordError::TrivialClass)) => {
                Ok(false)
            }
            (Err(e), _) | (_, Err(e)) => Err(e),
        }
    }

    /// Conjugate `w` by `v` (returns `v w v^-1` freely reduced).
    pub fn conjugate(&self, w: &Word, v: &Word) -> Word {
        v.concat(w).concat(&v.inverse()).free_reduce()
    }

    /// Exact group-element equality (the word problem, not conjugacy):
    /// u = v iff u v^-1 is trivial, and the small-cancellation reduction
    /// sends every representative of the trivial element to the empty word.
    pub fn elements_equal(&self, u: &Word, v: &Word) -> Result<bool, WordError> {
        self.validate(u)?;
        self.validate(v)?;
        Ok(self.dehn_reduce(&u.concat(&v.inverse())).is_empty())
    }

    /// First-homology class of a word: signed letter counts per generator.
    pub fn homology_class(&self, w: &Word) -> Vec<i64> {
        let mut out = vec![0i64; self.generator_count()];
        for &l in &w.0 {
            let g = (l / 2) as usize;
            if l % 2 == 0 {
                out[g] += 1;
            } else {
                out[g] -= 1;
            }
        }
        out
    }

    /// Symplectic pairing of first-homology classes.  Its absolute value
    /// lower-bounds the geometric crossing number and matches its parity.
    pub fn algebraic_pairing(&self, u: &Word, v: &Word) -> i64 {
        let hu = self.homology_class(u);
        let hv = self.homology_class(v);
        let mut s = 0i64;
        for i in 0..self.genus() as usize {
            s += hu[2 * i] * hv[2 * i + 1] - hu[2 * i + 1] * hv[2 * i];
        }
        s
    }
}

/// An unoriented free homotopy class of essential closed curves, keyed by
/// its canonical word.  Equality and hashing go through the canonical word,
/// so classes can serve directly as visited-set keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CurveClass {
    word: Word,
}

impl CurveClass {
    /// The canonical word of the class.
    pub fn word(&self) -> &Word {
        &self.word
    }

    /// Word length of the canonical representative.
    pub fn len(&self) -> usize {
        self.word.len()
    }

    /// Whether the canonical word is empty (never true for constructed
    /// classes; present for API completeness).
    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// Whether the class is primitive (not a proper power).  Canonical words
    /// of proper powers are literal repetitions of the canonical root, so a
    /// literal period test decides.
    pub fn is_primitive(&self) -> bool {
        Presentation::cyclic_period(&self.word.0) == self.word.len()
    }

    /// Exponent of the class over its primitive root (1 when primitive).
    pub fn power_exponent(&self) -> usize {
        self.word.len() / Presentation::cyclic_period(&self.word.0)
    }

    /// The primitive root class.
    pub fn primitive_root(&self) -> CurveClass {
        let p = Presentation::cyclic_period(&self.word.0);
        CurveClass {
            word: Word(self.word.0[..p].to_vec()),
        }
    }
}

impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p2() -> Presentation {
        Presentation::new(2)
    }

    #[test]
    fn letters_follow_frozen_order() {
        let p = p2();
        let w = p.parse_word("a1 A1 b1 B1 a2 A2 b2 B2").unwrap();
        assert_eq!(w.letters(), &[0, 1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(w.to_string(), "a1 A1 b1 B1 a2 A2 b2 B2");
    }

    #[test]
    fn relator_is_product_of_commutators() {
        let p = p2();
        assert_eq!(
            p.relator(),
            p.parse_word("a1 b1 A1 B1 a2 b2 A2 B2").unwrap()
        );
        assert_eq!(p.relator().len(), 8);
    }

    #[test]
    fn free_reduction_cancels_pairs() {
        let p = p2();
        let w = p.parse_word("a1 b1 B1 A1 a2").unwrap();
        assert_eq!(w.free_reduce(), p.parse_word("a2").unwrap());
        let w = p.parse_word("a1 A1").unwrap();
        assert!(w.free_reduce().is_empty());
    }

    #[test]
    fn element_equality_distinguishes_conjugates() {
        let p = p2();
        let a1 = p.parse_word("a1").unwrap();
        let conj = p.conjugate(&a1, &p.parse_word("b1").unwrap());
        assert!(!p.elements_equal(&a1, &conj).unwrap());
        assert!(p.are_conjugate(&a1, &conj).unwrap());
        // The relator and its square are trivial elements.
        assert!(p.elements_equal(&p.relator(), &Word::identity()).unwrap());
        let sq = p.relator().concat(&p.relator());
        assert!(p.elements_equal(&sq, &Word::identity()).unwrap());
        // Relator consequence: u * relator = u as elements.
        let u = p.parse_word("a1 b2 A1").unwrap();
        assert!(p.elements_equal(&u.concat(&p.relator()), &u).unwrap());
    }

    #[test]
    fn cyclic_reduction_strips_conjugation() {
        let p = p2();
        let w = p.parse_word("b1 a1 a2 B1").unwrap();
        assert_eq!(w.cyclic_reduce(), p.parse_word("a1 a2").unwrap());
    }

    #[test]
    fn relator_dehn_reduces_to_identity() {
        let p = p2();
        let reduced = p.dehn_reduce(&p.relator());
        assert!(reduced.is_empty());
    }

    #[test]
    fn overlong_piece_replaced_by_short_complement() {
        // Five consecutive relator letters collapse to the complement
        // spelled by the relator's inverse: with the relator
        // a1 b1 A1 B1 a2 b2 A2 B2, the prefix of length five equals
        // (b2 A2 B2)^-1 = b2 a2 B2 as a group element, and as a cyclic
        // word that conjugacy class is plain a2.
        let p = p2();
        let w = p.parse_word("a1 b1 A1 B1 a2").unwrap();
        let reduced = p.dehn_reduce(&w);
        assert_eq!(reduced, p.parse_word("a2").unwrap());
        assert!(p.are_conjugate(&w, &reduced).unwrap());
        let also = p.parse_word("b2 a2 B2").unwrap();
        assert!(p.are_conjugate(&w, &also).unwrap());
    }

    #[test]
    fn commutator_halves_are_identified() {
        // The relator identifies [a1,b1] with the inverse of [a2,b2]; their
        // canonical classes must coincide even though no rotation or
        // inversion relates the words.
        let p = p2();
        let left = p.parse_word("a1 b1 A1 B1").unwrap();
        let right = p.parse_word("b2 a2 B2 A2").unwrap();
        assert!(p.are_conjugate(&left, &right).unwrap());
    }

    #[test]
    fn canonical_form_is_conjugation_invariant() {
        let p = p2();
        let w = p.parse_word("a1 b1 a2").unwrap();
        let conjugators = [
            "a1", "b1", "A2", "b2 a1", "B1 a2 b1", "a1 a1 b2", "A1 B2 a2 a1",
        ];
        let base = p.canonical_class(&w).unwrap();
        for c in conjugators {
            let v = p.parse_word(c).unwrap();
            let conj = p.conjugate(&w, &v);
            assert_eq!(p.canonical_class(&conj).unwrap(), base, "conjugator {c}");
        }
    }

    #[test]
    fn inverse_represents_same_unoriented_class() {
        let p = p2();
        for text in ["a1", "a1 b1", "a1 b1 A1 B1", "a1 b2 A1 a2"] {
            let w = p.parse_word(text).unwrap();
            assert!(p.are_conjugate(&w, &w.inverse()).unwrap(), "word {text}");
        }
    }

    #[test]
    fn distinct_generators_are_distinct_classes() {
        let p = p2();
        let a1 = p.parse_word("a1").unwrap();
        let a2 = p.parse_word("a2").unwrap();
        assert!(!p.are_conjugate(&a1, &a2).unwrap());
    }

    #[test]
    fn trivial_class_is_reported() {
        let p = p2();
        assert_eq!(
            p.canonical_class(&Word::identity()),
            Err(WordError::TrivialClass)
        );
        assert_eq!(
            p.canonical_class(&p.relator()),
            Err(WordError::TrivialClass)
        );
        let w = p.parse_word("a1 b1 B1 A1").unwrap();
        assert_eq!(p.canonical_class(&w), Err(WordError::TrivialClass));
    }

    #[test]
    fn powers_factor_consistently() {
        let p = p2();
        // [a1,b1]^2 written as a literal square and as the mixed word using
        // the relator-exchanged second block must agree.
        let square = p.parse_word("a1 b1 A1 B1 a1 b1 A1 B1").unwrap();
        let mixed = p.parse_word("a1 b1 A1 B1 b2 a2 B2 A2").unwrap();
        assert!(p.are_conjugate(&square, &mixed).unwrap());
        let c = p.canonical_class(&square).unwrap();
        assert!(!c.is_primitive());
        assert_eq!(c.power_exponent(), 2);
        assert_eq!(
            c.primitive_root(),
            p.canonical_class(&p.parse_word("a1 b1 A1 B1").unwrap())
                .unwrap()
        );
    }

    #[test]
    fn high_powers_canonicalize_quickly() {
        let p = p2();
        let block = p.parse_word("a1 b1 A1 B1").unwrap();
        let mut w = Word::identity();
        for _ in 0..25 {
            w = w.concat(&block);
        }
        let c = p.canonical_class(&w).unwrap();
        assert_eq!(c.power_exponent(), 25);
    }

    #[test]
    fn parse_rejects_garbage() {
        let p = p2();
        assert!(p.parse_word("a3").is_err());
        assert!(p.parse_word("c1").is_err());
        assert!(p.parse_word("a0").is_err());
        assert!(p.parse_word("a").is_err());
    }

    #[test]
    fn display_round_trips() {
        let p = p2();
        let w = p.parse_word("a1 B2 A1 b1").unwrap();
        assert_eq!(p.parse_word(&w.to_string()).unwrap(), w);
    }
}
