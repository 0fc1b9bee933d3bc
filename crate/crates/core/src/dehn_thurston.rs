//! Pants-decomposition coordinates for simple multicurves.
//!
//! A fixed pants decomposition of the genus-2 surface (one separating and
//! two nonseparating curves, with a dual curve crossing each) assigns to a
//! weighted multicurve three coordinate pairs (m_i, t_i): m_i counts
//! weighted crossings with the i-th pants curve, and t_i measures twisting
//! around it.  Twisting is extracted from crossing numbers alone: the
//! function k -> i(lambda, T^k(dual_i)) is eventually linear in |k| with
//! slope m_i * i(P_i, dual_i), and the offset between its two asymptotic
//! branches reads off the twist.  The twist convention is the same frozen
//! automorphism convention as the mapping-class tables, stored in a
//! versioned asset and re-derived from geometry in tests.
//!
//! Coordinates live in the per-pair quotient of the plane by the antipodal
//! map; the normal form takes m_i >= 0 and, when m_i = 0, t_i >= 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuchsian::{FuchsianError, HyperbolicStructure};
use crate::intersection::{pairing_number, stable_self_intersection, IntersectionError};
use crate::mcg::McgError;
use crate::tol;
use crate::words::{CurveClass, Presentation, Word, WordError};

/// Number of pants curves (3g - 3 at genus 2).
pub const PANTS_COUNT: usize = 3;

const PANTS_TWIST_ASSET: &str = include_str!("../assets/pants_twists_genus2.txt");

/// Errors from coordinate operations.
#[derive(Debug, Error)]
pub enum DtError {
    #[error("component is not simple: {0}")]
    NotSimple(String),
    #[error("components are not disjoint: {0} crosses {1}")]
    NotDisjoint(String, String),
    #[error("coordinate dimension mismatch: {want} pairs vs {got}")]
    DimensionMismatch { want: usize, got: usize },
    #[error("need at least {need} sample entries, have {have}")]
    InsufficientSample { need: usize, have: usize },
    #[error("twist extraction failed: {0}")]
    TwistExtraction(String),
    #[error("bad pants twist table: {0}")]
    BadTable(String),
    #[error("crossing count did not stabilize for {0}")]
    Unstable(String),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Geometry(#[from] FuchsianError),
    #[error(transparent)]
    Crossing(#[from] IntersectionError),
    #[error(transparent)]
    Mcg(#[from] McgError),
}

// ---------------------------------------------------------------------------
// Coordinate vectors
// ---------------------------------------------------------------------------

/// Coordinate vector: one (crossing, twisting) pair per pants curve, in
/// normal form for the quotient by the antipodal map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DTVector {
    pairs: Vec<(f64, f64)>,
}

impl DTVector {
    /// Build from raw pairs, normalizing each to the quotient normal form
    /// (m >= 0; t >= 0 whenever m = 0).
    pub fn new(pairs: Vec<(f64, f64)>) -> DTVector {
        let pairs = pairs
            .into_iter()
            .map(|(m, t)| {
                if m < 0.0 || (m == 0.0 && t < 0.0) {
                    (-m, -t)
                } else {
                    (m, t)
                }
            })
            .collect();
        DTVector { pairs }
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// Scale every coordinate (degree-1 homogeneity of the coordinate map).
    pub fn scale(&self, k: f64) -> DTVector {
        DTVector::new(self.pairs.iter().map(|&(m, t)| (k * m, k * t)).collect())
    }

    /// Whether every coordinate is within tolerance of an integer.
    pub fn is_integral(&self) -> bool {
        self.pairs
            .iter()
            .all(|&(m, t)| (m - m.round()).abs() <= tol::INTEGRALITY_TOL
                && (t - t.round()).abs() <= tol::INTEGRALITY_TOL)
    }

    /// Nearest integer vector (valid after `is_integral`).
    pub fn rounded(&self) -> Vec<(i64, i64)> {
        self.pairs
            .iter()
            .map(|&(m, t)| (m.round() as i64, t.round() as i64))
            .collect()
    }

    /// Distance in the product of plane quotients: per pair the smaller of
    /// the two lift distances, combined in square norm.
    pub fn distance(&self, other: &DTVector) -> Result<f64, DtError> {
        if self.pairs.len() != other.pairs.len() {
            return Err(DtError::DimensionMismatch {
                want: self.pairs.len(),
                got: other.pairs.len(),
            });
        }
        let mut sq = 0.0;
        for (&(mu, tu), &(mv, tv)) in self.pairs.iter().zip(&other.pairs) {
            let direct = (mu - mv).hypot(tu - tv);
            let flipped = (mu + mv).hypot(tu + tv);
            let d = direct.min(flipped);
            sq += d * d;
        }
        Ok(sq.sqrt())
    }

    /// CSV header matching [`DTVector::csv_row`].
    pub fn csv_header() -> String {
        (1..=PANTS_COUNT)
            .flat_map(|i| [format!("m{i}"), format!("t{i}")])
            .collect::<Vec<_>>()
            .join(",")
    }

    /// One CSV row of the coordinates.
    pub fn csv_row(&self) -> String {
        self.pairs
            .iter()
            .flat_map(|&(m, t)| [format!("{m}"), format!("{t}")])
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Distance between coordinate vectors (see [`DTVector::distance`]).
pub fn dt_distance(u: &DTVector, v: &DTVector) -> Result<f64, DtError> {
    u.distance(v)
}

// ---------------------------------------------------------------------------
// The frozen pants decomposition
// ---------------------------------------------------------------------------

/// The fixed genus-2 pants decomposition with dual curves and the twist
/// automorphism tables along each pants curve.
pub struct PantsDecomposition {
    presentation: Presentation,
    pants: [CurveClass; PANTS_COUNT],
    duals: [CurveClass; PANTS_COUNT],
    forward: [[Word; 4]; PANTS_COUNT],
    backward: [[Word; 4]; PANTS_COUNT],
}

impl PantsDecomposition {
    /// The frozen decomposition: the separating curve a1 b1 A1 B1 and the
    /// two handle curves a1, a2, with duals a1 a2, b1, b2.  Twist tables
    /// load from the versioned asset; each is re-checked to send the
    /// surface relator to a conjugate of itself.
    pub fn standard() -> Result<PantsDecomposition, DtError> {
        Self::from_asset(PANTS_TWIST_ASSET)
    }

    fn from_asset(text: &str) -> Result<PantsDecomposition, DtError> {
        let p = Presentation::new(2);
        let mut lines = text.lines();
        match lines.next() {
            Some("# pants-twist-table v1") => {}
            other => {
                return Err(DtError::BadTable(format!(
                    "unsupported header {other:?}"
                )))
            }
        }
        let mut curves: Vec<Word> = Vec::new();
        let mut duals: Vec<Word> = Vec::new();
        let mut forward: Vec<[Word; 4]> = (0..PANTS_COUNT)
            .map(|_| std::array::from_fn(|_| Word::identity()))
            .collect();
        let mut backward = forward.clone();
        let mut seen = [[false; 8]; PANTS_COUNT];
        let gen_names = ["a1", "b1", "a2", "b2"];
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            if head == "curve" || head == "dual" {
                let idx: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| DtError::BadTable(format!("bad index in {line:?}")))?;
                if idx != if head == "curve" { curves.len() } else { duals.len() } {
                    return Err(DtError::BadTable(format!("out-of-order {line:?}")));
                }
                let rest: Vec<&str> = parts.collect();
                let w = p.parse_word(&rest.join(" "))?;
                if head == "curve" {
                    curves.push(w);
                } else {
                    duals.push(w);
                }
                continue;
            }
            // Row shape: P<i>['] <generator> -> <image word>
            let (name, primed) = match head.strip_suffix('\'') {
                Some(n) => (n, true),
                None => (head, false),
            };
            let idx: usize = name
                .strip_prefix('P')
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| DtError::BadTable(format!("bad row head {head:?}")))?;
            if idx >= PANTS_COUNT {
                return Err(DtError::BadTable(format!("pants index {idx} out of range")));
            }
            let sym = parts
                .next()
                .ok_or_else(|| DtError::BadTable(format!("missing generator in {line:?}")))?;
            let j = gen_names
                .iter()
                .position(|g| *g == sym)
                .ok_or_else(|| DtError::BadTable(format!("unknown generator {sym:?}")))?;
            if parts.next() != Some("->") {
                return Err(DtError::BadTable(format!("missing arrow in {line:?}")));
            }
            let rest: Vec<&str> = parts.collect();
            let image = p.parse_word(&rest.join(" "))?;
            let slot = if primed { &mut backward } else { &mut forward };
            slot[idx][j] = image;
            seen[idx][j + if primed { 4 } else { 0 }] = true;
        }
        if curves.len() != PANTS_COUNT || duals.len() != PANTS_COUNT {
            return Err(DtError::BadTable(format!(
                "expected {PANTS_COUNT} curves and duals, got {} and {}",
                curves.len(),
                duals.len()
            )));
        }
        if !seen.iter().all(|s| s.iter().all(|&b| b)) {
            return Err(DtError::BadTable("missing table rows".into()));
        }
        let pants: Vec<CurveClass> = curves
            .iter()
            .map(|w| p.canonical_class(w))
            .collect::<Result<_, _>>()?;
        let dual_classes: Vec<CurveClass> = duals
            .iter()
            .map(|w| p.canonical_class(w))
            .collect::<Result<_, _>>()?;
        let pd = PantsDecomposition {
            presentation: p,
            pants: pants.try_into().unwrap(),
            duals: dual_classes.try_into().unwrap(),
            forward: forward.try_into().unwrap(),
            backward: backward.try_into().unwrap(),
        };
        pd.check_relator_preserved()?;
        Ok(pd)
    }

    /// Every loaded automorphism must send the relator to a conjugate of
    /// itself; a corrupted table fails here rather than downstream.
    fn check_relator_preserved(&self) -> Result<(), DtError> {
        let relator = Word(vec![0, 2, 1, 3, 4, 6, 5, 7]);
        for i in 0..PANTS_COUNT {
            for positive in [true, false] {
                let image = self.apply_twist_word(i, positive, &relator);
                if !self.presentation.are_conjugate(&image, &relator)? {
                    return Err(DtError::BadTable(format!(
                        "twist {i} (positive={positive}) does not preserve the relator"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn pants_curve(&self, i: usize) -> &CurveClass {
        &self.pants[i]
    }

    pub fn dual_curve(&self, i: usize) -> &CurveClass {
        &self.duals[i]
    }

    /// Substitute the twist automorphism along pants curve `i` through a
    /// word (letter-by-letter image, inverse letters through the inverse
    /// image), freely reduced.
    fn apply_twist_word(&self, i: usize, positive: bool, w: &Word) -> Word {
        let table = if positive {
            &self.forward[i]
        } else {
            &self.backward[i]
        };
        let mut out: Vec<u8> = Vec::with_capacity(4 * w.len());
        for &l in &w.0 {
            let img = &table[(l / 2) as usize];
            if l % 2 == 0 {
                out.extend_from_slice(&img.0);
            } else {
                out.extend_from_slice(&img.inverse().0);
            }
        }
        Word(out).free_reduce()
    }

    /// Class of T^k applied along pants curve `i` to `c` (conjugacy-level;
    /// the reduction between steps keeps representatives short).
    pub fn twist_power(&self, i: usize, k: i64, c: &CurveClass) -> Result<CurveClass, DtError> {
        let mut w = c.word().clone();
        for _ in 0..k.unsigned_abs() {
            w = self.apply_twist_word(i, k > 0, &w);
            w = self.presentation.dehn_reduce(&w);
        }
        Ok(self.presentation.canonical_class(&w)?)
    }
}

// ---------------------------------------------------------------------------
// The coordinate map
// ---------------------------------------------------------------------------

/// Crossing number insisting on a stabilized count.
fn settled(
    x: &HyperbolicStructure,
    c: &CurveClass,
    d: &CurveClass,
) -> Result<u64, DtError> {
    let r = pairing_number(x, c, d)?;
    if !r.stabilized {
        return Err(DtError::Unstable(format!("{} / {}", c.word(), d.word())));
    }
    Ok(r.crossings)
}

/// Coordinates of a weighted multicurve.  Components must be simple and
/// pairwise disjoint; duplicate classes merge by adding weights.
pub fn dt_of_multicurve(
    x: &HyperbolicStructure,
    components: &[(CurveClass, u32)],
    pd: &PantsDecomposition,
) -> Result<DTVector, DtError> {
    // Merge duplicates, keep deterministic order.
    let mut merged: BTreeMap<CurveClass, u64> = BTreeMap::new();
    for (c, w) in components {
        assert!(*w > 0, "weights must be positive");
        *merged.entry(c.clone()).or_insert(0) += *w as u64;
    }
    let comps: Vec<(CurveClass, u64)> = merged.into_iter().collect();
    for (c, _) in &comps {
        let si = stable_self_intersection(x, c)?;
        if !si.stabilized {
            return Err(DtError::Unstable(c.word().to_string()));
        }
        if si.crossings != 0 {
            return Err(DtError::NotSimple(c.word().to_string()));
        }
    }
    for (i, (ci, _)) in comps.iter().enumerate() {
        for (cj, _) in comps.iter().skip(i + 1) {
            if settled(x, ci, cj)? != 0 {
                return Err(DtError::NotDisjoint(
                    ci.word().to_string(),
                    cj.word().to_string(),
                ));
            }
        }
    }
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(PANTS_COUNT);
    for i in 0..PANTS_COUNT {
        let pc = &pd.pants[i];
        let mut m: u64 = 0;
        let mut parallel: u64 = 0;
        for (c, w) in &comps {
            if c == pc {
                parallel += w;
            } else {
                m += w * settled(x, c, pc)?;
            }
        }
        let t = if m == 0 {
            parallel as f64
        } else {
            extract_twist(x, pd, i, m, &comps)?
        };
        pairs.push((m as f64, t));
    }
    Ok(DTVector::new(pairs))
}

/// Twisting of the multicurve around pants curve `i`, read from crossing
/// numbers with twisted duals: phi(k) = sum_j w_j i(c_j, T^k dual_i) is
/// eventually linear with slope s = m * i(P_i, dual_i) on both sides, and
/// (phi(-K) - phi(K)) / 2 = s * twist / m once both slopes lock.  Twist
/// invariance rewrites each term as i(T^-k c_j, dual_i); keeping the short
/// dual fixed matters because the crossing search is exponential in the
/// shorter curve of the pair and only linear in the longer one.
fn extract_twist(
    x: &HyperbolicStructure,
    pd: &PantsDecomposition,
    i: usize,
    m: u64,
    comps: &[(CurveClass, u64)],
) -> Result<f64, DtError> {
    let q = settled(x, &pd.duals[i], &pd.pants[i])?;
    debug_assert!(q > 0, "dual must cross its pants curve");
    let s = (m * q) as i64;
    let phi = |k: i64| -> Result<i64, DtError> {
        let mut total: i64 = 0;
        for (c, w) in comps {
            let moved = pd.twist_power(i, -k, c)?;
            total += (*w * settled(x, &moved, &pd.duals[i])?) as i64;
        }
        Ok(total)
    };
    let mut k = 2i64;
    while k <= 32 {
        let (pm1, pm, pp, pp1) = (phi(-k - 1)?, phi(-k)?, phi(k)?, phi(k + 1)?);
        if pm1 - pm == s && pp1 - pp == s {
            let t_raw = (pm - pp) as f64 / 2.0;
            return Ok(t_raw / q as f64);
        }
        k *= 2;
    }
    Err(DtError::TwistExtraction(format!(
        "slopes did not lock for pants curve {i} (expected slope {s})"
    )))
}

// ---------------------------------------------------------------------------
// Regularity probes
// ---------------------------------------------------------------------------

/// Weighted multicurve alias shared with the counting module.
pub type Multicurve = Vec<(CurveClass, u32)>;

/// Empirical length-vs-coordinate regularity data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// Largest |length difference| / coordinate distance over sample pairs.
    pub empirical_k: f64,
    /// Full-sample constant over first-half constant (1 = saturated).
    pub stability_ratio: f64,
    /// Pairs with positive coordinate distance.
    pub pairs_used: usize,
}

/// Ratio of length differences to coordinate distances over a sample of
/// multicurves.  Needs at least four entries so the half-sample constant
/// is meaningful.
pub fn lipschitz_probe(
    x: &HyperbolicStructure,
    pd: &PantsDecomposition,
    sample: &[Multicurve],
) -> Result<LipschitzReport, DtError> {
    if sample.len() < 4 {
        return Err(DtError::InsufficientSample {
            need: 4,
            have: sample.len(),
        });
    }
    let mut data: Vec<(DTVector, f64)> = Vec::with_capacity(sample.len());
    for mc in sample {
        let v = dt_of_multicurve(x, mc, pd)?;
        let mut len = 0.0;
        for (c, w) in mc {
            len += *w as f64 * x.geodesic_length(c)?;
        }
        data.push((v, len));
    }
    let constant = |slice: &[(DTVector, f64)]| -> Result<(f64, usize), DtError> {
        let mut k = 0.0f64;
        let mut used = 0usize;
        for (a, (va, la)) in slice.iter().enumerate() {
            for (vb, lb) in slice.iter().skip(a + 1) {
                let d = va.distance(vb)?;
                if d > 1e-12 {
                    k = k.max((la - lb).abs() / d);
                    used += 1;
                }
            }
        }
        Ok((k, used))
    };
    let (full, pairs_used) = constant(&data)?;
    let (half, _) = constant(&data[..data.len() / 2])?;
    let stability_ratio = if half > 0.0 {
        full / half
    } else if full > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Ok(LipschitzReport {
        empirical_k: full,
        stability_ratio,
        pairs_used,
    })
}

/// Midpoint-convexity data for the length function on integral coordinate
/// vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// Sample pairs whose coordinate midpoint was itself in the sample.
    pub checked: usize,
    /// Midpoints with length above the average beyond the slack.
    pub violations: usize,
    /// Largest observed length(mid) - average excess (negative = convex).
    pub worst_excess: f64,
}

/// Check length midpoint-convexity over a sample of integral multicurves:
/// whenever the coordinate midpoint of two sample vectors is again a
/// sample vector, its length must not exceed the average of the endpoint
/// lengths beyond the pinned slack.
pub fn convexity_probe(
    x: &HyperbolicStructure,
    pd: &PantsDecomposition,
    sample: &[Multicurve],
) -> Result<ConvexityReport, DtError> {
    let mut by_coord: BTreeMap<Vec<(i64, i64)>, f64> = BTreeMap::new();
    let mut coords: Vec<(Vec<(i64, i64)>, f64)> = Vec::with_capacity(sample.len());
    for mc in sample {
        let v = dt_of_multicurve(x, mc, pd)?;
        if !v.is_integral() {
            return Err(DtError::TwistExtraction(format!(
                "non-integral coordinates {:?} for an integral multicurve",
                v.pairs()
            )));
        }
        let key = v.rounded();
        let mut len = 0.0;
        for (c, w) in mc {
            len += *w as f64 * x.geodesic_length(c)?;
        }
        by_coord.insert(key.clone(), len);
        coords.push((key, len));
    }
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for (a, (ka, la)) in coords.iter().enumerate() {
        for (kb, lb) in coords.iter().skip(a + 1) {
            let mid: Option<Vec<(i64, i64)>> = ka
                .iter()
                .zip(kb)
                .map(|(&(ma, ta), &(mb, tb))| {
                    ((ma + mb) % 2 == 0 && (ta + tb) % 2 == 0)
                        .then(|| ((ma + mb) / 2, (ta + tb) / 2))
                })
                .collect();
            let Some(mid) = mid else { continue };
            let Some(&lmid) = by_coord.get(&mid) else {
                continue;
            };
            checked += 1;
            let excess = lmid - 0.5 * (la + lb);
            worst = worst.max(excess);
            if excess > tol::CONVEXITY_SLACK {
                violations += 1;
            }
        }
    }
    Ok(ConvexityReport {
        checked,
        violations,
        worst_excess: if checked > 0 { worst } else { 0.0 },
    })
}


#[cfg(test)]
mod probe {
    use super::*;

    #[test]
    #[ignore]
    fn probe_twist_phi_profile() {
        let x = HyperbolicStructure::octagon();
        let pd = PantsDecomposition::standard().unwrap();
        for i in 0..PANTS_COUNT {
            println!(
                "pants {i}: P = {} (len {:.4})  dual = {} (len {:.4})",
                pd.pants[i].word(),
                x.geodesic_length(&pd.pants[i]).unwrap(),
                pd.duals[i].word(),
                x.geodesic_length(&pd.duals[i]).unwrap(),
            );
            for k in -4i64..=4 {
                let t0 = std::time::Instant::now();
                let twisted = pd.twist_power(i, k, &pd.duals[i]).unwrap();
                let n = settled(&x, &twisted, &pd.duals[i]).unwrap();
                println!(
                    "  k={k:+}  i(T^k d, d) = {n}   word len {:>3}  geo len {:>8.4}  ({} ms)",
                    twisted.word().len(),
                    x.geodesic_length(&twisted).unwrap(),
                    t0.elapsed().as_millis()
                );
            }
        }
    }
}
