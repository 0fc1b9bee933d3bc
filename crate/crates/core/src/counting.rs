//! Orbit enumeration and counting functions: curve counts under a length
//! or intersection threshold, simple-curve and integral-multicurve counts,
//! and power-law fitting of the resulting growth data.
//!
//! Enumeration is breadth-first over Dehn-twist images with threshold
//! pruning.  No finite procedure certifies completeness of such a search,
//! so every published count carries a stability flag recorded from an
//! actual re-run at a raised pruning slack; unstable counts are never
//! silently reported as complete.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuchsian::{FuchsianError, HyperbolicStructure};
use crate::intersection::{filling_system_check, stable_intersection_number, IntersectionError};
use crate::mcg::{McgError, TwistSystem, TWIST_COUNT};
use crate::words::{CurveClass, WordError};

/// Default cap on visited classes per enumeration.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;
/// Default pruning slack and its escalation notch for stability re-runs.
pub const DEFAULT_SLACK: f64 = 1.2;
pub const ESCALATED_SLACK: f64 = 1.5;

/// Errors from counting operations.
#[derive(Debug, Error)]
pub enum CountError {
    #[error("node budget {budget} exhausted after visiting {visited} classes")]
    BudgetExceeded { budget: usize, visited: usize },
    #[error("crossing count did not stabilize for {0}")]
    Unstable(String),
    #[error("need at least {need} data points, have {have}")]
    InsufficientData { need: usize, have: usize },
    #[error("components must be simple and pairwise disjoint: {0}")]
    NotSimpleOrDisjoint(String),
    #[error("combiner weights must match component count ({want}), got {got}")]
    CombinerMismatch { want: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] FuchsianError),
    #[error(transparent)]
    Crossing(#[from] IntersectionError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Mcg(#[from] McgError),
}

// ---------------------------------------------------------------------------
// Currents
// ---------------------------------------------------------------------------

/// A computable stand-in for a geodesic current: either the length current
/// of a hyperbolic structure or a weighted closed curve.
pub struct CurrentProxy<'a> {
    kind: CurrentKind<'a>,
    filling_certified: bool,
}

enum CurrentKind<'a> {
    /// Pairs with a class by geodesic length on the structure.
    Liouville(&'a HyperbolicStructure),
    /// Pairs with a class by weight times crossing number.
    WeightedCurve(CurveClass, f64),
}

impl<'a> CurrentProxy<'a> {
    /// The length current of a hyperbolic structure (always filling: every
    /// nontrivial class has positive length).
    pub fn liouville(x: &'a HyperbolicStructure) -> CurrentProxy<'a> {
        CurrentProxy {
            kind: CurrentKind::Liouville(x),
            filling_certified: true,
        }
    }

    /// A weighted curve; the filling certificate is computed on `x`.
    pub fn weighted_curve(
        x: &HyperbolicStructure,
        class: CurveClass,
        weight: f64,
    ) -> Result<CurrentProxy<'a>, CountError> {
        assert!(weight > 0.0, "curve weight must be positive");
        let filling = crate::intersection::is_filling(x, &class)?.filling;
        Ok(CurrentProxy {
            kind: CurrentKind::WeightedCurve(class, weight),
            filling_certified: filling,
        })
    }

    pub fn filling_certified(&self) -> bool {
        self.filling_certified
    }

    /// Pairing with a curve class: length for the Liouville kind, weighted
    /// crossing number for the curve kind.
    pub fn pairing(
        &self,
        x: &HyperbolicStructure,
        gamma: &CurveClass,
    ) -> Result<f64, CountError> {
        match &self.kind {
            CurrentKind::Liouville(s) => Ok(s.geodesic_length(gamma)?),
            CurrentKind::WeightedCurve(c, w) => {
                let n = settled_pairing(x, c, gamma)?;
                Ok(w * n as f64)
            }
        }
    }
}

/// Crossing number between possibly-equal classes, insisting on a
/// stabilized count.
fn settled_pairing(
    x: &HyperbolicStructure,
    c: &CurveClass,
    d: &CurveClass,
) -> Result<u64, CountError> {
    let r = crate::intersection::pairing_number(x, c, d)?;
    if !r.stabilized {
        return Err(CountError::Unstable(format!(
            "pair {} / {}",
            c.word(),
            d.word()
        )));
    }
    Ok(r.crossings)
}

// ---------------------------------------------------------------------------
// Combiners
// ---------------------------------------------------------------------------

/// Homogeneous degree-1 combiner applied to the vector of per-component
/// pairings of a multicurve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CombinerSpec {
    Sum,
    Max,
    /// (sum of (w_i x_i)^p)^(1/p) with p >= 1 and positive weights.
    WeightedPNorm { p: f64, weights: Vec<f64> },
}

impl CombinerSpec {
    pub fn apply(&self, values: &[f64]) -> Result<f64, CountError> {
        match self {
            CombinerSpec::Sum => Ok(values.iter().sum()),
            CombinerSpec::Max => Ok(values.iter().fold(0.0f64, |a, &b| a.max(b))),
            CombinerSpec::WeightedPNorm { p, weights } => {
                assert!(*p >= 1.0, "p-norm needs p >= 1");
                if weights.len() != values.len() {
                    return Err(CountError::CombinerMismatch {
                        want: values.len(),
                        got: weights.len(),
                    });
                }
                let s: f64 = values
                    .iter()
                    .zip(weights)
                    .map(|(x, w)| (w * x).powf(*p))
                    .sum();
                Ok(s.powf(1.0 / *p))
            }
        }
    }

    /// Lower bound of the combiner on the nonnegative unit simplex
    /// (positivity constant; closed form per kind).
    pub fn lower_constant(&self, k: usize) -> f64 {
        match self {
            CombinerSpec::Sum => 1.0,
            CombinerSpec::Max => 1.0 / k as f64,
            CombinerSpec::WeightedPNorm { p, weights } => {
                if *p <= 1.0 + 1e-12 {
                    return weights.iter().cloned().fold(f64::INFINITY, f64::min);
                }
                // Lagrange point on the simplex: exponent q = p/(p-1).
                let q = p / (p - 1.0);
                let s: f64 = weights.iter().map(|w| w.powf(-q)).sum();
                s.powf(-1.0 / q)
            }
        }
    }

    /// Upper bound of the combiner on the nonnegative unit simplex.
    pub fn upper_constant(&self) -> f64 {
        match self {
            CombinerSpec::Sum => 1.0,
            CombinerSpec::Max => 1.0,
            CombinerSpec::WeightedPNorm { weights, .. } => {
                weights.iter().cloned().fold(0.0f64, f64::max)
            }
        }
    }

    /// Lipschitz constant with respect to the sum norm.
    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            CombinerSpec::Sum | CombinerSpec::Max => 1.0,
            CombinerSpec::WeightedPNorm { weights, .. } => {
                weights.iter().cloned().fold(0.0f64, f64::max)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Orbit enumeration
// ---------------------------------------------------------------------------

/// Result of an orbit enumeration: classes within the threshold, keyed and
/// ordered canonically, with their pairing values.
#[derive(Debug, Clone)]
pub struct OrbitSet {
    /// Classes with pairing <= L, with the pairing value.
    pub kept: BTreeMap<CurveClass, f64>,
    /// Total classes visited (kept + pruned boundary).
    pub visited: usize,
}

/// Enumerate the twist-orbit of `beta` keeping classes whose pairing with
/// `alpha` is at most `L`; classes with pairing at most
/// `max(slack * L, L + expand_floor)` are expanded.  The multiplicative
/// slack makes the kept set independent of traversal order; the additive
/// floor keeps the search connected near the bottom of the spectrum, where
/// reaching a short class can require passing through a longer one.
pub fn enumerate_orbit(
    x: &HyperbolicStructure,
    sys: &TwistSystem,
    alpha: &CurrentProxy,
    beta: &CurveClass,
    l: f64,
    slack: f64,
    expand_floor: f64,
    budget: usize,
) -> Result<OrbitSet, CountError> {
    assert!(slack >= 1.0, "slack must be at least 1");
    assert!(expand_floor >= 0.0);
    let bound = (slack * l).max(l + expand_floor);
    let mut kept: BTreeMap<CurveClass, f64> = BTreeMap::new();
    let mut seen: BTreeSet<CurveClass> = BTreeSet::new();
    let mut queue: VecDeque<CurveClass> = VecDeque::new();
    let start = beta.clone();
    let v0 = alpha.pairing(x, &start)?;
    seen.insert(start.clone());
    if v0 <= l {
        kept.insert(start.clone(), v0);
    }
    if v0 <= bound {
        queue.push_back(start);
    }
    while let Some(cur) = queue.pop_front() {
        for child in twist_neighbors(sys, &cur)? {
            if seen.contains(&child) {
                continue;
            }
            if seen.len() >= budget {
                return Err(CountError::BudgetExceeded {
                    budget,
                    visited: seen.len(),
                });
            }
            let v = alpha.pairing(x, &child)?;
            seen.insert(child.clone());
            if v <= l {
                kept.insert(child.clone(), v);
            }
            if v <= bound {
                queue.push_back(child);
            }
        }
    }
    Ok(OrbitSet {
        kept,
        visited: seen.len(),
    })
}

/// The 2 * TWIST_COUNT one-twist images of a class.
fn twist_neighbors(
    sys: &TwistSystem,
    c: &CurveClass,
) -> Result<Vec<CurveClass>, CountError> {
    let mut out = Vec::with_capacity(2 * TWIST_COUNT);
    for i in 0..TWIST_COUNT {
        for positive in [true, false] {
            let g = crate::mcg::MCGGenerator::new(i, positive).unwrap();
            let w = sys.apply_generator_to_word(g, c.word());
            let w = sys.presentation().dehn_reduce(&w);
            out.push(sys.presentation().canonical_class(&w)?);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reports and fitting
// ---------------------------------------------------------------------------

/// Counting data over a threshold grid with an attached power-law fit and
/// an honesty flag from the slack-escalated re-run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub thresholds: Vec<f64>,
    pub counts: Vec<u64>,
    pub fitted_exponent: Option<f64>,
    pub fitted_constant: Option<f64>,
    pub error_decay_exponent: Option<f64>,
    pub slack: f64,
    pub stable: bool,
}

impl CountReport {
    fn from_values(
        thresholds: &[f64],
        values: impl Iterator<Item = f64> + Clone,
        slack: f64,
        stable: bool,
    ) -> CountReport {
        let counts: Vec<u64> = thresholds
            .iter()
            .map(|&l| values.clone().filter(|&v| v <= l).count() as u64)
            .collect();
        let fit = fit_power_law(thresholds, &counts).ok();
        CountReport {
            thresholds: thresholds.to_vec(),
            counts,
            fitted_exponent: fit.map(|f| f.0),
            fitted_constant: fit.map(|f| f.1),
            error_decay_exponent: fit.and_then(|f| f.2),
            slack,
            stable,
        }
    }
}

/// Least-squares power law N = C * L^e over the top half of the positive
/// grid.  The error-decay exponent comes from differences of consecutive
/// local slopes in log-log space: for N = C L^e (1 + D L^-k) the second
/// log-log derivative decays exactly like L^-k, independently of the
/// fitted main term.  None when the data sits on an exact power law.
pub fn fit_power_law(
    thresholds: &[f64],
    counts: &[u64],
) -> Result<(f64, f64, Option<f64>), CountError> {
    assert_eq!(thresholds.len(), counts.len());
    let pts: Vec<(f64, f64)> = thresholds
        .iter()
        .zip(counts)
        .filter(|(_, &n)| n > 0)
        .map(|(&l, &n)| (l.ln(), (n as f64).ln()))
        .collect();
    if pts.len() < 4 {
        return Err(CountError::InsufficientData {
            need: 4,
            have: pts.len(),
        });
    }
    let top = &pts[pts.len() / 2..];
    let (e, b) = linear_fit(top);
    let c = b.exp();
    let slopes: Vec<(f64, f64)> = pts
        .windows(2)
        .map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            (0.5 * (x0 + x1), (y1 - y0) / (x1 - x0))
        })
        .collect();
    let curvature: Vec<(f64, f64)> = slopes
        .windows(2)
        .map(|w| {
            let (u0, s0) = w[0];
            let (u1, s1) = w[1];
            (0.5 * (u0 + u1), (s1 - s0) / (u1 - u0))
        })
        .filter(|(_, d)| d.abs() > 1e-9)
        .map(|(u, d)| (u, d.abs().ln()))
        .collect();
    let kappa = if curvature.len() >= 2 {
        Some(-linear_fit(&curvature).0)
    } else {
        None
    };
    Ok((e, c, kappa))
}

fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return (0.0, sy / n);
    }
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

// ---------------------------------------------------------------------------
// Counting operations
// ---------------------------------------------------------------------------

/// Count the twist-orbit of `beta` under the pairing threshold per grid
/// point; one enumeration at the top threshold, stability from a re-run at
/// the escalated slack.
pub fn count_curve_orbit(
    x: &HyperbolicStructure,
    sys: &TwistSystem,
    alpha: &CurrentProxy,
    beta: &CurveClass,
    grid: &[f64],
    slack: f64,
    budget: usize,
) -> Result<CountReport, CountError> {
    assert!(!grid.is_empty());
    let lmax = grid.iter().cloned().fold(f64::MIN, f64::max);
    let base = enumerate_orbit(x, sys, alpha, beta, lmax, slack, 0.0, budget)?;
    let recheck =
        enumerate_orbit(x, sys, alpha, beta, lmax, ESCALATED_SLACK.max(slack), 0.0, budget)?;
    let stable = base.kept == recheck.kept;
    Ok(CountReport::from_values(
        grid,
        base.kept.values().cloned(),
        slack,
        stable,
    ))
}

/// A weighted multicurve tuple in canonical order.
type Tuple = Vec<(CurveClass, u32)>;

fn canonical_tuple(mut t: Tuple) -> Tuple {
    t.sort_by(|a, b| a.0.word().0.cmp(&b.0.word().0).then(a.1.cmp(&b.1)));
    t
}

/// Combined pairing of a weighted tuple under `f`.
fn tuple_value(
    x: &HyperbolicStructure,
    alpha: &CurrentProxy,
    f: &CombinerSpec,
    t: &Tuple,
) -> Result<f64, CountError> {
    let mut vals = Vec::with_capacity(t.len());
    for (c, w) in t {
        vals.push(*w as f64 * alpha.pairing(x, c)?);
    }
    f.apply(&vals)
}

/// Count the diagonal twist-orbit of a weighted multicurve under the
/// combined pairing threshold.
pub fn count_multicurve(
    x: &HyperbolicStructure,
    sys: &TwistSystem,
    alpha: &CurrentProxy,
    components: &[(CurveClass, u32)],
    f: &CombinerSpec,
    grid: &[f64],
    slack: f64,
    budget: usize,
) -> Result<CountReport, CountError> {
    assert!(!grid.is_empty());
    let lmax = grid.iter().cloned().fold(f64::MIN, f64::max);
    let run = |eff_slack: f64| -> Result<BTreeMap<Tuple, f64>, CountError> {
        let mut kept: BTreeMap<Tuple, f64> = BTreeMap::new();
        let mut seen: BTreeSet<Tuple> = BTreeSet::new();
        let mut queue: VecDeque<Tuple> = VecDeque::new();
        let start = canonical_tuple(components.to_vec());
        let v0 = tuple_value(x, alpha, f, &start)?;
        seen.insert(start.clone());
        if v0 <= lmax {
            kept.insert(start.clone(), v0);
        }
        if v0 <= eff_slack * lmax {
            queue.push_back(start);
        }
        while let Some(cur) = queue.pop_front() {
            for i in 0..TWIST_COUNT {
                for positive in [true, false] {
                    let g = crate::mcg::MCGGenerator::new(i, positive).unwrap();
                    let mut child: Tuple = Vec::with_capacity(cur.len());
                    for (c, w) in &cur {
                        let img = sys.apply_generator_to_word(g, c.word());
                        let img = sys.presentation().dehn_reduce(&img);
                        child.push((sys.presentation().canonical_class(&img)?, *w));
                    }
                    let child = canonical_tuple(child);
                    if seen.contains(&child) {
                        continue;
                    }
                    if seen.len() >= budget {
                        return Err(CountError::BudgetExceeded {
                            budget,
                            visited: seen.len(),
                        });
                    }
                    let v = tuple_value(x, alpha, f, &child)?;
                    seen.insert(child.clone());
                    if v <= lmax {
                        kept.insert(child.clone(), v);
                    }
                    if v <= eff_slack * lmax {
                        queue.push_back(child);
                    }
                }
            }
        }
        Ok(kept)
    };
    let base = run(slack)?;
    let recheck = run(ESCALATED_SLACK.max(slack))?;
    let stable = base == recheck;
    Ok(CountReport::from_values(
        grid,
        base.values().cloned(),
        slack,
        stable,
    ))
}

/// All simple closed geodesics of length at most `L`: pruned twist-orbit
/// search from one nonseparating and one separating seed (the two
/// topological types of simple classes at genus 2).  The expansion floor
/// is twice the shortest generator length: near the bottom of the length
/// spectrum the sub-level orbit graph can be disconnected, and a purely
/// multiplicative slack would silently miss classes whose twist paths
/// pass through longer curves.
pub fn enumerate_simple(
    x: &HyperbolicStructure,
    sys: &TwistSystem,
    l: f64,
    slack: f64,
    budget: usize,
) -> Result<Vec<(CurveClass, f64)>, CountError> {
    let p = sys.presentation();
    let seeds = [
        p.canonical_class(&p.parse_word("a1")?)?,
        p.canonical_class(&p.parse_word("a1 b1 A1 B1")?)?,
    ];
    let mut shortest = f64::INFINITY;
    for g in ["a1", "b1", "a2", "b2"] {
        let c = p.canonical_class(&p.parse_word(g)?)?;
        shortest = shortest.min(x.geodesic_length(&c)?);
    }
    let floor = 2.0 * shortest;
    let alpha = CurrentProxy::liouville(x);
    let mut all: BTreeMap<CurveClass, f64> = BTreeMap::new();
    for seed in seeds {
        let set = enumerate_orbit(x, sys, &alpha, &seed, l, slack, floor, budget)?;
        all.extend(set.kept);
    }
    Ok(all.into_iter().collect())
}

/// Integral-multicurve count: weighted collections of pairwise-disjoint
/// simple classes with total length at most the threshold, assembled from
/// the simple-curve list.  Returns the report and the top-threshold count
/// divided by L^(6g-6).
pub fn count_integral_multicurves(
    x: &HyperbolicStructure,
    sys: &TwistSystem,
    grid: &[f64],
    slack: f64,
    budget: usize,
) -> Result<(CountReport, f64), CountError> {
    assert!(!grid.is_empty());
    let lmax = grid.iter().cloned().fold(f64::MIN, f64::max);
    let count_at = |eff_slack: f64| -> Result<Vec<u64>, CountError> {
        let simple = enumerate_simple(x, sys, lmax, eff_slack, budget)?;
        let disjoint = disjoint_pairs(x, &simple)?;
        let totals: Vec<u64> = grid
            .iter()
            .map(|&l| count_weighted_collections(&simple, &disjoint, l))
            .collect();
        Ok(totals)
    };
    let counts = count_at(slack)?;
    let recheck = count_at(ESCALATED_SLACK.max(slack))?;
    let stable = counts == recheck;
    let fit = fit_power_law(grid, &counts).ok();
    let exp = 6 * x.genus() as i32 - 6;
    let c_estimate = *counts.last().unwrap() as f64 / lmax.powi(exp);
    Ok((
        CountReport {
            thresholds: grid.to_vec(),
            counts,
            fitted_exponent: fit.map(|f| f.0),
            fitted_constant: fit.map(|f| f.1),
            error_decay_exponent: fit.and_then(|f| f.2),
            slack,
            stable,
        },
        c_estimate,
    ))
}

/// Adjacency of the disjointness graph over the simple-class list, as a
/// set of index pairs (i < j).  The zero-pairing test goes through the
/// algebraic pairing prefilter before any geometric enumeration.
fn disjoint_pairs(
    x: &HyperbolicStructure,
    simple: &[(CurveClass, f64)],
) -> Result<BTreeSet<(usize, usize)>, CountError> {
    use rayon::prelude::*;
    let p = x.presentation();
    let candidates: Vec<(usize, usize)> = (0..simple.len())
        .flat_map(|i| ((i + 1)..simple.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| p.algebraic_pairing(simple[i].0.word(), simple[j].0.word()) == 0)
        .collect();
    let results: Vec<Result<Option<(usize, usize)>, CountError>> = candidates
        .par_iter()
        .map(|&(i, j)| {
            let r = stable_intersection_number(x, &simple[i].0, &simple[j].0)?;
            if !r.stabilized {
                return Err(CountError::Unstable(format!(
                    "pair {} / {}",
                    simple[i].0.word(),
                    simple[j].0.word()
                )));
            }
            Ok((r.crossings == 0).then_some((i, j)))
        })
        .collect();
    let mut out = BTreeSet::new();
    for r in results {
        if let Some(pair) = r? {
            out.insert(pair);
        }
    }
    Ok(out)
}

/// Count weight assignments over cliques of the disjointness graph with
/// total weighted length <= l.  Genus 2 admits at most three pairwise
/// disjoint distinct simple classes.
fn count_weighted_collections(
    simple: &[(CurveClass, f64)],
    disjoint: &BTreeSet<(usize, usize)>,
    l: f64,
) -> u64 {
    let n = simple.len();
    let mut total = 0u64;
    // Enumerate cliques of size 1..=3 in index order; for each clique the
    // number of positive-integer weight vectors with sum(w_k * len_k) <= l
    // is a small lattice count.
    for i in 0..n {
        let li = simple[i].1;
        if li > l {
            continue;
        }
        total += count_weights(&[li], l);
        for j in (i + 1)..n {
            if !disjoint.contains(&(i, j)) {
                continue;
            }
            let lj = simple[j].1;
            if li + lj > l {
                continue;
            }
            total += count_weights(&[li, lj], l);
            for k in (j + 1)..n {
                if !disjoint.contains(&(i, k)) || !disjoint.contains(&(j, k)) {
                    continue;
                }
                let lk = simple[k].1;
                if li + lj + lk > l {
                    continue;
                }
                total += count_weights(&[li, lj, lk], l);
            }
        }
    }
    total
}

/// A weighted multicurve: pairwise-disjoint simple classes with positive
/// integer weights.
pub type WeightedMulticurve = Vec<(CurveClass, u32)>;

/// Materialize every weighted disjoint collection of simple classes with
/// total length at most `l`, with its total length, in deterministic
/// (length, components) order.
pub fn enumerate_integral_multicurves(
    x: &HyperbolicStructure,
    sys: &TwistSystem,
    l: f64,
    slack: f64,
    budget: usize,
) -> Result<Vec<(WeightedMulticurve, f64)>, CountError> {
    let simple = enumerate_simple(x, sys, l, slack, budget)?;
    let disjoint = disjoint_pairs(x, &simple)?;
    let n = simple.len();
    let mut out: Vec<(WeightedMulticurve, f64)> = Vec::new();
    let mut emit = |idxs: &[usize]| {
        let lens: Vec<f64> = idxs.iter().map(|&i| simple[i].1).collect();
        for weights in weight_vectors(&lens, l) {
            let total: f64 = weights
                .iter()
                .zip(&lens)
                .map(|(&w, &len)| w as f64 * len)
                .sum();
            let mc: WeightedMulticurve = idxs
                .iter()
                .zip(&weights)
                .map(|(&i, &w)| (simple[i].0.clone(), w))
                .collect();
            out.push((mc, total));
        }
    };
    for i in 0..n {
        if simple[i].1 > l {
            continue;
        }
        emit(&[i]);
        for j in (i + 1)..n {
            if !disjoint.contains(&(i, j)) || simple[i].1 + simple[j].1 > l {
                continue;
            }
            emit(&[i, j]);
            for k in (j + 1)..n {
                if !disjoint.contains(&(i, k)) || !disjoint.contains(&(j, k)) {
                    continue;
                }
                if simple[i].1 + simple[j].1 + simple[k].1 > l {
                    continue;
                }
                emit(&[i, j, k]);
            }
        }
    }
    out.sort_by(|a, b| {
        a.1.total_cmp(&b.1).then_with(|| {
            let wa: Vec<_> = a.0.iter().map(|(c, w)| (c.word().0.clone(), *w)).collect();
            let wb: Vec<_> = b.0.iter().map(|(c, w)| (c.word().0.clone(), *w)).collect();
            wa.cmp(&wb)
        })
    });
    Ok(out)
}

/// All positive integer weight vectors w with dot(w, lens) <= l.
fn weight_vectors(lens: &[f64], l: f64) -> Vec<Vec<u32>> {
    match lens {
        [] => vec![vec![]],
        [first, rest @ ..] => {
            let mut all = Vec::new();
            let mut w = 1u32;
            loop {
                let used = w as f64 * first;
                let tail_min: f64 = rest.iter().sum();
                if used + tail_min > l {
                    break;
                }
                for mut tail in weight_vectors(rest, l - used) {
                    let mut v = vec![w];
                    v.append(&mut tail);
                    all.push(v);
                }
                w += 1;
            }
            all
        }
    }
}

/// Number of positive integer weight vectors w with dot(w, lens) <= l.
fn count_weights(lens: &[f64], l: f64) -> u64 {
    match lens {
        [] => 1,
        [first, rest @ ..] => {
            let mut total = 0u64;
            let mut w = 1u64;
            loop {
                let used = w as f64 * first;
                let tail_min: f64 = rest.iter().sum();
                if used + tail_min > l {
                    break;
                }
                total += count_weights(rest, l - used);
                w += 1;
            }
            total
        }
    }
}

/// Certify that a weighted multicurve fills the surface (precondition for
/// headline orbit counts).
pub fn multicurve_fills(
    x: &HyperbolicStructure,
    components: &[(CurveClass, u32)],
) -> Result<bool, CountError> {
    let classes: Vec<CurveClass> = components.iter().map(|(c, _)| c.clone()).collect();
    Ok(filling_system_check(x, &classes)?.filling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intersection::stable_self_intersection;
    use crate::mcg::MCGWord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn octagon() -> HyperbolicStructure {
        HyperbolicStructure::octagon()
    }

    fn sys() -> TwistSystem {
        TwistSystem::standard().unwrap()
    }

    fn class(x: &HyperbolicStructure, s: &str) -> CurveClass {
        let p = x.presentation();
        p.canonical_class(&p.parse_word(s).unwrap()).unwrap()
    }

    #[test]
    fn power_law_fit_recovers_exact_law() {
        let grid: Vec<f64> = (4..=12).map(|k| k as f64).collect();
        let counts: Vec<u64> = grid.iter().map(|l| (7.0 * l.powi(6)).round() as u64).collect();
        let (e, c, _kappa) = fit_power_law(&grid, &counts).unwrap();
        assert!((e - 6.0).abs() < 2e-3, "exponent {e}");
        assert!((c - 7.0).abs() / 7.0 < 2e-2, "constant {c}");
    }

    #[test]
    fn power_law_fit_is_exact_on_unrounded_data() {
        // With exact real counts (no integer rounding) the fit is sharp.
        let grid: Vec<f64> = (4..=12).map(|k| k as f64).collect();
        let pts: Vec<(f64, f64)> = grid.iter().map(|l| (l.ln(), (7.0 * l.powi(6)).ln())).collect();
        let (slope, intercept) = super::linear_fit(&pts);
        assert!((slope - 6.0).abs() < 1e-9);
        assert!((intercept.exp() - 7.0).abs() < 1e-9);
    }

    #[test]
    fn power_law_fit_sees_error_decay() {
        let grid: Vec<f64> = (4..=20).map(|k| k as f64).collect();
        let counts: Vec<u64> = grid
            .iter()
            .map(|l| (7.0 * l.powi(6) * (1.0 + 1.0 / l)).round() as u64)
            .collect();
        let (e, _, kappa) = fit_power_law(&grid, &counts).unwrap();
        assert!((e - 6.0).abs() < 0.1, "exponent {e}");
        let k = kappa.expect("perturbed law must leave curvature");
        assert!((k - 1.0).abs() < 0.4, "kappa {k}");
    }

    #[test]
    fn constant_counts_fit_exponent_zero() {
        let grid: Vec<f64> = (4..=10).map(|k| k as f64).collect();
        let counts: Vec<u64> = grid.iter().map(|_| 5).collect();
        let (e, c, _) = fit_power_law(&grid, &counts).unwrap();
        assert!(e.abs() < 1e-12);
        assert!((c - 5.0).abs() < 1e-9);
    }

    #[test]
    fn fit_requires_enough_points() {
        assert!(matches!(
            fit_power_law(&[1.0, 2.0], &[1, 2]),
            Err(CountError::InsufficientData { .. })
        ));
    }

    #[test]
    fn orbit_thresholds_behave_at_the_base_point() {
        let x = octagon();
        let sys = sys();
        let alpha = CurrentProxy::liouville(&x);
        let beta = class(&x, "a1");
        let len = x.geodesic_length(&beta).unwrap();
        let below = enumerate_orbit(&x, &sys, &alpha, &beta, len - 0.1, 1.2, 0.0, 100_000).unwrap();
        assert!(below.kept.is_empty());
        let at = enumerate_orbit(&x, &sys, &alpha, &beta, len + 1e-9, 1.2, 0.0, 100_000).unwrap();
        assert!(at.kept.contains_key(&beta));
    }

    #[test]
    fn orbit_set_is_independent_of_the_seed_representative() {
        let x = octagon();
        let sys = sys();
        let alpha = CurrentProxy::liouville(&x);
        let beta = class(&x, "a1");
        let l = 6.5;
        let base = enumerate_orbit(&x, &sys, &alpha, &beta, l, 1.2, 0.0, 1_000_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..3 {
            let g = MCGWord(
                (0..3)
                    .map(|_| {
                        crate::mcg::MCGGenerator::new(
                            rng.random_range(0..TWIST_COUNT),
                            rng.random(),
                        )
                        .unwrap()
                    })
                    .collect(),
            );
            let moved = sys.apply_mcg(&g, &beta).unwrap();
            if alpha.pairing(&x, &moved).unwrap() > l {
                continue;
            }
            let other = enumerate_orbit(&x, &sys, &alpha, &moved, l, 1.2, 0.0, 1_000_000).unwrap();
            assert_eq!(base.kept, other.kept, "seed {}", moved.word());
        }
    }

    #[test]
    fn curve_orbit_report_is_consistent() {
        let x = octagon();
        let sys = sys();
        let alpha = CurrentProxy::liouville(&x);
        let beta = class(&x, "a1");
        let grid = [3.5, 4.5, 5.5, 6.5];
        let report =
            count_curve_orbit(&x, &sys, &alpha, &beta, &grid, 1.2, 1_000_000).unwrap();
        assert!(report.stable);
        for w in report.counts.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let top = enumerate_orbit(&x, &sys, &alpha, &beta, 6.5, 1.2, 0.0, 1_000_000).unwrap();
        assert_eq!(*report.counts.last().unwrap() as usize, top.kept.len());
    }

    #[test]
    fn max_combiner_on_single_component_reduces_to_curve_count() {
        let x = octagon();
        let sys = sys();
        let alpha = CurrentProxy::liouville(&x);
        let beta = class(&x, "a1");
        let grid = [3.5, 4.5, 5.5, 6.5];
        let single = count_curve_orbit(&x, &sys, &alpha, &beta, &grid, 1.2, 1_000_000).unwrap();
        let multi = count_multicurve(
            &x,
            &sys,
            &alpha,
            &[(beta, 1)],
            &CombinerSpec::Max,
            &grid,
            1.2,
            1_000_000,
        )
        .unwrap();
        assert_eq!(single.counts, multi.counts);
        assert_eq!(single.stable, multi.stable);
    }

    #[test]
    fn sum_combiner_is_degree_one_homogeneous() {
        let x = octagon();
        let sys = sys();
        let alpha = CurrentProxy::liouville(&x);
        let c1 = class(&x, "a1");
        let c2 = class(&x, "a2");
        let grid = [8.0, 10.0, 12.0];
        let doubled_grid: Vec<f64> = grid.iter().map(|l| 2.0 * l).collect();
        let base = count_multicurve(
            &x,
            &sys,
            &alpha,
            &[(c1.clone(), 1), (c2.clone(), 1)],
            &CombinerSpec::Sum,
            &grid,
            1.2,
            1_000_000,
        )
        .unwrap();
        let doubled = count_multicurve(
            &x,
            &sys,
            &alpha,
            &[(c1, 2), (c2, 2)],
            &CombinerSpec::Sum,
            &doubled_grid,
            1.2,
            1_000_000,
        )
        .unwrap();
        assert_eq!(base.counts, doubled.counts);
    }

    #[test]
    fn combiner_constants_are_coherent() {
        let sum = CombinerSpec::Sum;
        assert_eq!(sum.lower_constant(3), 1.0);
        assert_eq!(sum.upper_constant(), 1.0);
        let max = CombinerSpec::Max;
        assert!((max.lower_constant(4) - 0.25).abs() < 1e-15);
        let pn = CombinerSpec::WeightedPNorm {
            p: 2.0,
            weights: vec![1.0, 2.0],
        };
        let v = pn.apply(&[3.0, 4.0]).unwrap();
        assert!((v - (9.0f64 + 64.0).sqrt()).abs() < 1e-12);
        // Lower constant at p=2: Lagrange closed form on the simplex.
        let m = pn.lower_constant(2);
        let q = 2.0;
        let expect = (1.0f64.powf(-q) + 2.0f64.powf(-q)).powf(-1.0 / q);
        assert!((m - expect).abs() < 1e-12);
        assert_eq!(pn.upper_constant(), 2.0);
    }

    #[test]
    fn simple_enumeration_is_empty_below_the_systole() {
        let x = octagon();
        let sys = sys();
        let out = enumerate_simple(&x, &sys, 2.9, 1.2, 100_000).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn systolic_simple_classes_are_found_and_stable() {
        let x = octagon();
        let sys = sys();
        let lo = enumerate_simple(&x, &sys, 3.1, 1.2, 1_000_000).unwrap();
        let hi = enumerate_simple(&x, &sys, 3.1, 1.5, 1_000_000).unwrap();
        assert_eq!(lo, hi, "slack escalation changed the systolic census");
        // The octagon surface has exactly 12 systolic geodesics; the count
        // is frozen against the exhaustive short-word census below.
        assert_eq!(lo.len(), 12);
        for (c, len) in &lo {
            assert!((len - 3.0571).abs() < 1e-3, "stray length {len}");
            let si = stable_self_intersection(&x, c).unwrap();
            assert!(si.stabilized && si.crossings == 0, "{} not simple", c.word());
        }
        // The four standard handle generators are all systolic.
        for s in ["a1", "b1", "a2", "b2"] {
            assert!(lo.iter().any(|(c, _)| *c == class(&x, s)), "{s} missing");
        }
    }

    #[test]
    fn systole_census_matches_exhaustive_word_enumeration() {
        // Independent oracle for the count of 12: canonicalize every freely
        // reduced word up to length 6 (systolic classes have short
        // canonical words) and keep the systolic lengths.
        let x = octagon();
        let p = x.presentation();
        let mut classes: BTreeSet<CurveClass> = BTreeSet::new();
        let mut stack: Vec<Vec<u8>> = (0..8u8).map(|l| vec![l]).collect();
        while let Some(w) = stack.pop() {
            let word = crate::words::Word(w.clone());
            let c = p.canonical_class(&word).unwrap();
            if (x.geodesic_length(&c).unwrap() - 3.0571).abs() < 1e-3 {
                classes.insert(c);
            }
            if w.len() < 6 {
                for l in 0..8u8 {
                    if *w.last().unwrap() ^ 1 != l {
                        let mut v = w.clone();
                        v.push(l);
                        stack.push(v);
                    }
                }
            }
        }
        let sys = sys();
        let orbit: BTreeSet<CurveClass> = enumerate_simple(&x, &sys, 3.1, 1.2, 1_000_000)
            .unwrap()
            .into_iter()
            .map(|(c, _)| c)
            .collect();
        assert_eq!(classes.len(), 12);
        assert_eq!(classes, orbit);
    }

    #[test]
    fn integral_multicurves_below_systole_count_zero() {
        let x = octagon();
        let sys = sys();
        let grid = [1.0, 2.0, 2.9];
        let (report, _) = count_integral_multicurves(&x, &sys, &grid, 1.2, 100_000).unwrap();
        assert_eq!(report.counts, vec![0, 0, 0]);
    }

    #[test]
    fn single_class_weights_count_by_floor() {
        // Restrict the threshold low enough that only weighted copies of
        // systolic classes (no pairs: two disjoint systoles already exceed
        // the bound) can appear.
        let x = octagon();
        let sys = sys();
        let grid = [3.2, 6.0];
        let (report, _) = count_integral_multicurves(&x, &sys, &grid, 1.2, 1_000_000).unwrap();
        let simple = enumerate_simple(&x, &sys, 6.0, 1.2, 1_000_000).unwrap();
        let expect_low: u64 = simple
            .iter()
            .map(|(_, l)| (3.2 / l).floor() as u64)
            .sum();
        assert_eq!(report.counts[0], expect_low);
        // At 6.0 no two distinct classes fit (2 * systole > 6.0 only
        // marginally: 6.1142 > 6.0), so the count is again a floor sum.
        let expect_high: u64 = simple
            .iter()
            .map(|(_, l)| (6.0 / l).floor() as u64)
            .sum();
        assert_eq!(report.counts[1], expect_high);
    }

    #[test]
    fn materialized_multicurves_match_the_count() {
        let x = octagon();
        let sys = sys();
        let grid = [3.2, 5.0, 6.2];
        let (report, _) = count_integral_multicurves(&x, &sys, &grid, 1.2, 1_000_000).unwrap();
        let all = enumerate_integral_multicurves(&x, &sys, 6.2, 1.2, 1_000_000).unwrap();
        for (i, &l) in grid.iter().enumerate() {
            let n = all.iter().filter(|(_, total)| *total <= l).count() as u64;
            assert_eq!(report.counts[i], n, "threshold {l}");
        }
        // Weights and disjointness hold on every materialized collection.
        for (mc, total) in all.iter().take(40) {
            let len_sum: f64 = mc
                .iter()
                .map(|(c, w)| *w as f64 * x.geodesic_length(c).unwrap())
                .sum();
            assert!((len_sum - total).abs() < 1e-9);
            for (i, (ci, _)) in mc.iter().enumerate() {
                for (cj, _) in mc.iter().skip(i + 1) {
                    let r = stable_intersection_number(&x, ci, cj).unwrap();
                    assert_eq!(r.crossings, 0);
                }
            }
        }
    }

    #[test]
    fn report_serialization_round_trips() {
        let report = CountReport {
            thresholds: vec![1.0, 2.0],
            counts: vec![3, 9],
            fitted_exponent: Some(6.0),
            fitted_constant: Some(7.0),
            error_decay_exponent: None,
            slack: 1.2,
            stable: true,
        };
        let text = serde_json::to_string(&report).unwrap();
        let back: CountReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn weighted_curve_current_pairs_by_weighted_crossings() {
        let x = octagon();
        let filling = class(&x, "a1 a2 b1 b2");
        let alpha = CurrentProxy::weighted_curve(&x, filling, 2.0).unwrap();
        assert!(alpha.filling_certified());
        let b1 = class(&x, "b1");
        // The filling quadruple crosses b1 in a frozen number of points;
        // the weighted pairing doubles it.
        let raw = settled_pairing(&x, &class(&x, "a1 a2 b1 b2"), &b1).unwrap();
        assert_eq!(alpha.pairing(&x, &b1).unwrap(), 2.0 * raw as f64);
        let nonfilling = CurrentProxy::weighted_curve(&x, class(&x, "a1"), 1.0).unwrap();
        assert!(!nonfilling.filling_certified());
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let x = octagon();
        let sys = sys();
        let alpha = CurrentProxy::liouville(&x);
        let beta = class(&x, "a1");
        let err = enumerate_orbit(&x, &sys, &alpha, &beta, 8.0, 1.2, 0.0, 10).unwrap_err();
        assert!(matches!(err, CountError::BudgetExceeded { budget: 10, .. }));
    }
}

#[cfg(test)]
mod probe {
    use super::*;

    #[test]
    #[ignore]
    fn probe_simple_census_growth() {
        let x = HyperbolicStructure::octagon();
        let sys = TwistSystem::standard().unwrap();
        for l in [3.1_f64, 5.0, 6.5, 8.0, 9.5] {
            let t0 = std::time::Instant::now();
            let out = enumerate_simple(&x, &sys, l, 1.2, 5_000_000).unwrap();
            println!("L={l:5.1}  simple={:6}  elapsed={:?}", out.len(), t0.elapsed());
        }
    }
}

