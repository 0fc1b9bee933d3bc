//! Geometric intersection numbers, self-intersection numbers, and filling
//! tests, computed from axis-crossing data of lifts in the universal cover.
//!
//! The count of transverse crossings between the geodesics of classes `c`
//! and `d` equals the number of deck-group orbits of pairs (lift of c,
//! lift of d) with linked endpoint pairs on the boundary circle.  Working
//! in the frame where the lift of `c` is the imaginary axis, every such
//! orbit has a representative line crossing the fundamental segment of the
//! axis, and distinct orbits give distinct (position along the axis modulo
//! the translation length, crossing angle) keys.  Lines are enumerated by a
//! geometric-ball search: a line's anchor points are spaced by the
//! translation length of `d` along it, so every crossing has a
//! representative whose anchor lies within half that length of the
//! fundamental segment; distance to a geodesic segment is convex, so
//! shortest-word paths to such representatives fellow-travel
//! region-hugging geodesics.  The search visits the elements whose anchor
//! image stays within that radius plus a fellow-traveler slack,
//! deduplicating group elements by quantized matrix.  The slack is
//! certified empirically: depth escalation until two consecutive counts
//! agree, agreement under a widened region, and an unpruned brute-force
//! oracle in the tests.

use std::collections::{HashMap, HashSet, VecDeque};

use thiserror::Error;

use crate::dd::Dd;
use crate::fuchsian::{
    arccosh, axis_frame, Axis, FuchsianError, Hp, HyperbolicStructure, Mat2,
};
use crate::tol;
use crate::words::{CurveClass, Word, WordError};

/// Hard ceiling on enumerated group elements per crossing search.
const MAX_ENUM_NODES: usize = 20_000_000;

/// Extra enumeration depth the stabilization loops may add on top of the
/// starting depth before giving up.  The pruning region saturates once the
/// depth covers it, so escalation normally terminates well before this.
const STABLE_DEPTH_HEADROOM: usize = 18;

/// Additive fellow-traveler margin, on top of one letter displacement,
/// added to the anchor-spacing radius when pruning the ball search.
const REGION_SLACK: f64 = 2.0;

/// Errors from intersection computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntersectionError {
    /// intersection_number(c, c) is disallowed by contract.
    #[error("intersection_number on a class and itself; use self_intersection")]
    SelfPairDisallowed,
    /// A linking predicate stayed ambiguous at extended precision.
    #[error("numerically ambiguous linking test: {0}")]
    NumericalAmbiguity(String),
    /// The enumeration budget was exhausted before the depth was reached.
    #[error("crossing enumeration exceeded {0} nodes")]
    BudgetExhausted(usize),
    #[error(transparent)]
    Geometry(#[from] FuchsianError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Result of a crossing count at a given enumeration depth.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingData {
    /// Word-length bound on enumerated coset representatives.
    pub depth: usize,
    /// Number of crossings found (stable value once `stabilized`).
    pub crossings: u64,
    /// Count agreed between `depth` and `depth + 1`.
    pub stabilized: bool,
}

// ---------------------------------------------------------------------------
// Core enumeration
// ---------------------------------------------------------------------------

/// A segment of the imaginary axis between heights `lo` and `hi`, as the
/// pruning target of the lift search.
#[derive(Clone, Copy)]
struct AxisSegment {
    lo: f64,
    hi: f64,
}

impl AxisSegment {
    fn dist(&self, p: &Hp) -> f64 {
        let r = (p.re * p.re + p.im * p.im).sqrt();
        if r >= self.lo && r <= self.hi {
            return arccosh(r / p.im);
        }
        let t = r.clamp(self.lo, self.hi);
        let dx = p.re;
        let dy = p.im - t;
        arccosh(1.0 + (dx * dx + dy * dy) / (2.0 * p.im * t))
    }
}

/// One crossing record before clustering.
#[derive(Debug, Clone, Copy)]
struct RawCrossing {
    /// Position along the base axis, folded to [0, len_a).
    pos_a: f64,
    /// Crossing angle invariant: atan of the crossing line's center/height
    /// ratio in the folded frame; constant across deck representatives.
    angle_a: f64,
    /// How many base translation lengths the conjugator was folded by
    /// (diagnostic; read by the census probes).
    #[cfg_attr(not(test), allow(dead_code))]
    fold: i64,
    /// Refolded conjugator: the enumerated element times the deck power
    /// that brings its crossing into the fundamental window.
    conj: Mat2,
}

/// The working frame for crossings of the classes `a` (base) and `b`:
/// everything conjugated so the lift of `a` is the imaginary axis.
struct CrossingFrame {
    /// Generator letters conjugated into the frame (index = letter code).
    letters: Vec<Mat2>,
    /// Matrix of `b` in the frame.
    bmat: Mat2,
    /// Axis of `b` in the frame.
    baxis: Axis,
    /// Image of the representation base point in the frame: the tracking
    /// point of the pruned search.  Letter displacements are small at this
    /// point (all generator axes pass near the base point), so the search
    /// steps stay bounded no matter how long the curves are.
    z0: Hp,
    /// Max displacement of `z0` per letter (frame-independent constant).
    lambda: f64,
    /// Distance from `z0` to the axis of `b`.
    d0: f64,
    /// Pruning window in axis-position (log-height) coordinates: one
    /// fundamental segment of the base translation, centered on the
    /// position of `z0` so the seed starts inside it.
    s_lo: f64,
    s_hi: f64,
    /// Translation lengths.
    len_a: f64,
    len_b: f64,
    /// Both classes are the same word: conjugators stabilizing the base
    /// axis (near-diagonal in this frame) must be skipped.
    self_mode: bool,
}

impl CrossingFrame {
    fn build(
        x: &HyperbolicStructure,
        a: &Word,
        b: &Word,
    ) -> Result<CrossingFrame, IntersectionError> {
        let rep = x.representation();
        let amat = rep.evaluate(a);
        let frame = axis_frame(&amat)?;
        let finv = frame.inverse();
        let nl = 4 * x.genus() as usize;
        let letters: Vec<Mat2> = (0..nl as u8)
            .map(|l| finv.mul(rep.letter(l)).mul(&frame))
            .collect();
        let bmat = finv.mul(&rep.evaluate(b)).mul(&frame);
        let baxis = Axis::of(&bmat)?;
        let len_a = Axis::of(&amat)?.length;
        let len_b = baxis.length;
        // Tracking point: image of the base point i.  For cyclically
        // reduced words both axes pass within a bounded distance of the
        // base point, so z0 is near the window and the letter step sizes
        // are the generator displacements of i (independent of the frame).
        let z0 = Hp::new(0.0, 1.0).transform(&finv);
        let lambda = letters
            .iter()
            .map(|m| z0.dist(&z0.transform(m)))
            .fold(0.0f64, f64::max);
        // Distance from z0 to b's axis, from the point displacement law
        // sinh(d(p, g p) / 2) = cosh(dist(p, axis)) sinh(len / 2).
        let disp = z0.dist(&z0.transform(&bmat));
        let ratio = ((disp / 2.0).sinh() / (len_b / 2.0).sinh()).max(1.0);
        let d0 = arccosh(ratio);
        // Center the pruning window on z0's axis position: any fundamental
        // segment sees one representative per crossing orbit, and this one
        // keeps the seed inside the region.
        let (pos0, _) = axis_coords(&z0);
        Ok(CrossingFrame {
            letters,
            bmat,
            baxis,
            z0,
            lambda,
            d0,
            s_lo: pos0 - len_a / 2.0,
            s_hi: pos0 + len_a / 2.0,
            len_a,
            len_b,
            self_mode: a == b,
        })
    }

    /// Enumerate the group elements reachable by words of length <= depth
    /// whose tracking-point image stays inside the pruning region around
    /// the fundamental segment; report each element once, factored as an
    /// exact diagonal translation along the base axis times a localized
    /// matrix of bounded norm, so that no downstream computation ever sees
    /// the exponential dynamic range of far translates.  `extra_slack`
    /// widens the region (used by the certification tests).
    fn enumerate(
        &self,
        depth: usize,
        extra_slack: f64,
        mut visit: impl FnMut(&Mat2, f64),
    ) -> Result<(), IntersectionError> {
        // Every crossing orbit has a representative m with m z0 within
        // len_b/2 + d0 of the window (slide along b's axis by b-powers);
        // the connecting word-geodesic fellow-travels the in-window
        // geodesic within the step size plus a hyperbolicity margin.
        let r_keep = self.len_b / 2.0 + self.d0 + self.lambda + REGION_SLACK + extra_slack;
        // Dedup by the localized matrix: its entries stay bounded, so the
        // scale-relative key is immune to the far-translate noise that the
        // raw matrices accumulate.  Group elements differing by an exact
        // power of the base translation collapse onto one key; that is the
        // intended quotient, because such conjugators produce deck
        // translates of the same lift, hence the same crossing orbit, and
        // their search subtrees are deck images of each other.
        let mut visited: HashSet<MatKey> = HashSet::new();
        let mut queue: VecDeque<(Mat2, f64, usize)> = VecDeque::new();
        visited.insert(mat_key(&Mat2::IDENTITY));
        visit(&Mat2::IDENTITY, 0.0);
        queue.push_back((Mat2::IDENTITY, 0.0, 0));
        // Invariant: a dequeued (mh, t) stands for the group element
        // D(t) * mh, where D is the exact diagonal translation by t along
        // the base axis; mh keeps its tracking image near position 0.
        while let Some((m, t, len)) = queue.pop_front() {
            if len >= depth {
                continue;
            }
            for l in 0..self.letters.len() {
                let m2 = m.mul(&self.letters[l]);
                let p = self.z0.transform(&m2);
                let (s_loc, d_p) = axis_coords(&p);
                let s_p = t + s_loc;
                if axis_segment_dist(s_p, d_p, self.s_lo, self.s_hi) > r_keep {
                    continue;
                }
                // Re-localize: pull the accumulated translation out of the
                // matrix as an exact diagonal factor, so products never
                // grow with the distance walked along the axis and entry
                // error accumulates linearly, not exponentially.
                let m2h = Mat2::diag_translation(-s_loc).mul(&m2);
                if visited.insert(mat_key(&m2h)) {
                    if visited.len() > MAX_ENUM_NODES {
                        return Err(IntersectionError::BudgetExhausted(MAX_ENUM_NODES));
                    }
                    visit(&m2h, s_p);
                    queue.push_back((m2h, s_p, len + 1));
                }
            }
        }
        Ok(())
    }

    /// Test whether the lift `m . axis(b)` crosses the imaginary axis; on
    /// a crossing, return the raw record.  `m` is the localized matrix and
    /// `t_shift` its diagonal offset, as produced by `enumerate`: the true
    /// conjugator is D(t_shift) * m.  Every predicate below is invariant
    /// under that diagonal factor, so it works on the bounded matrix.
    fn crossing_of(
        &self,
        m: &Mat2,
        t_shift: f64,
    ) -> Result<Option<RawCrossing>, IntersectionError> {
        if self.self_mode {
            // Conjugators stabilizing the base axis are the diagonal ones
            // in this frame; their lift is the axis itself, not a
            // crossing.  Product noise keeps the off-diagonals well under
            // the structural floor for genuinely distinct geodesics.
            let s = m.max_entry();
            if m.b.abs() <= tol::COINCIDENT_AXIS_REL * s
                && m.c.abs() <= tol::COINCIDENT_AXIS_REL * s
            {
                return Ok(None);
            }
        }
        let p1 = self.baxis.repelling.transform(m);
        let p2 = self.baxis.attracting.transform(m);
        // The lift crosses the imaginary axis iff its endpoints have
        // opposite signs as reals: sign(x/y) = sign(x*y).
        let s1 = p1.x * p1.y;
        let s2 = p2.x * p2.y;
        let n1 = p1.x * p1.x + p1.y * p1.y;
        let n2 = p2.x * p2.x + p2.y * p2.y;
        if s1.abs() > tol::ENDPOINT_ANGLE_TOL * n1 && s2.abs() > tol::ENDPOINT_ANGLE_TOL * n2 {
            if s1 * s2 >= 0.0 {
                return Ok(None);
            }
            return Ok(Some(self.record(&p1, &p2, m, t_shift)));
        }
        // Extended-precision fallback straight from the matrix entries.
        match self.crossing_dd(m)? {
            Some(linked) => {
                if linked {
                    Ok(Some(self.record(&p1, &p2, m, t_shift)))
                } else {
                    Ok(None)
                }
            }
            None => Ok(None),
        }
    }

    /// Double-double re-evaluation of the linking predicate.  Returns
    /// Ok(None) when the lift provably coincides with the base axis (same
    /// geodesic: no transverse crossing).
    fn crossing_dd(&self, m: &Mat2) -> Result<Option<bool>, IntersectionError> {
        // Endpoints of the conjugated element's axis, computed at extended
        // precision from the conjugated matrix.
        let conj = m.mul(&self.bmat).mul(&m.inverse());
        // Coincident-axis check: conjugate is diagonal in this frame.  For
        // distinct classes that would mean two distinct primitive roots
        // sharing a geodesic, which the callers exclude, so report it as
        // an ambiguity instead of guessing.
        let scale = conj.max_entry();
        if conj.b.abs() <= tol::COINCIDENT_AXIS_REL * scale
            && conj.c.abs() <= tol::COINCIDENT_AXIS_REL * scale
        {
            if self.self_mode {
                return Ok(None);
            }
            return Err(IntersectionError::NumericalAmbiguity(
                "distinct classes with near-coincident axes".into(),
            ));
        }
        let a = Dd::from(conj.a);
        let b = Dd::from(conj.b);
        let c = Dd::from(conj.c);
        let d = Dd::from(conj.d);
        let t = a.add(d);
        let disc = t.mul(t).sub(Dd::from(4.0)).sqrt();
        let two = Dd::from(2.0);
        let mut sign = 1i32;
        for pm in [1.0, -1.0] {
            let l = if pm > 0.0 {
                t.add(disc).div(two)
            } else {
                t.sub(disc).div(two)
            };
            let v1 = (b, l.sub(a));
            let v2 = (l.sub(d), c);
            let n1 = v1.0.mul(v1.0).add(v1.1.mul(v1.1));
            let n2 = v2.0.mul(v2.0).add(v2.1.mul(v2.1));
            let (x, y) = if n1.hi >= n2.hi { v1 } else { v2 };
            let prod = x.mul(y);
            let norm = x.mul(x).add(y.mul(y));
            // Double-double noise on the eigenvector product is ~1e-31 of
            // the squared scale; 3e-30 keeps a ~30x margin above it.  The
            // signal itself shrinks like exp(-len(base)) for crossings near
            // the far end of the base window, so this bound is what caps
            // the usable base-curve length (~65) rather than enum cost.
            if prod.hi.abs() <= 3e-30 * norm.hi {
                return Err(IntersectionError::NumericalAmbiguity(format!(
                    "axis endpoint sign undecidable at extended precision \
                     (|xy| = {:.3e}, scale {:.3e})",
                    prod.hi, norm.hi
                )));
            }
            sign *= prod.signum();
        }
        Ok(Some(sign < 0))
    }

    fn record(
        &self,
        p1: &crate::fuchsian::Bp,
        p2: &crate::fuchsian::Bp,
        m: &Mat2,
        t_shift: f64,
    ) -> RawCrossing {
        // Affine endpoint logs of the localized lift: s = x/y, and
        // ln|s| = ln|x| - ln|y| evaluated at bounded dynamic range, so
        // positions carry no exponential cancellation noise no matter how
        // far along the base axis the crossing sits.
        let ls = p1.x.abs().ln() - p1.y.abs().ln();
        let lt = p2.x.abs().ln() - p2.y.abs().ln();
        // Crossing height h = sqrt(|s t|); true axis position = ln h plus
        // the diagonal offset, folded into [0, len_a).
        let pos_raw = 0.5 * (ls + lt) + t_shift;
        let fold = (pos_raw / self.len_a).floor();
        let pos_a = pos_raw - fold * self.len_a;
        // Scale-invariant crossing angle: atan((s + t) / (2 sqrt(-s t))),
        // with the exponents centered at the crossing height (the common
        // shift cancels in the ratio, and keeps everything finite).
        let mid = 0.5 * (ls + lt);
        let s = sign_val(p1) * (ls - mid).exp();
        let t = sign_val(p2) * (lt - mid).exp();
        let h = (-s * t).sqrt();
        let angle_a = ((s + t) / (2.0 * h)).atan();
        RawCrossing {
            pos_a,
            angle_a,
            fold: fold as i64,
            conj: *m,
        }
    }
}

fn sign_val(p: &crate::fuchsian::Bp) -> f64 {
    if (p.x * p.y).is_sign_negative() {
        -1.0
    } else {
        1.0
    }
}

/// Axis-adapted coordinates of an upper half-plane point: position along
/// the imaginary axis (log of the Euclidean distance from the origin) and
/// signed transversal offset.  Well-conditioned at every height, unlike
/// the raw coordinates whose dynamic range grows exponentially with the
/// position.
fn axis_coords(p: &Hp) -> (f64, f64) {
    let s = 0.5 * (p.re * p.re + p.im * p.im).ln();
    let d = (p.re / p.im).asinh();
    (s, d)
}

/// Distance from the point with axis coordinates (s, d) to the imaginary
/// axis segment between positions s_lo and s_hi, via the hyperbolic
/// Pythagorean identity cosh(dist) = cosh(leg1) cosh(leg2).
fn axis_segment_dist(s: f64, d: f64, s_lo: f64, s_hi: f64) -> f64 {
    if s >= s_lo && s <= s_hi {
        return d.abs();
    }
    let ds = if s < s_lo { s_lo - s } else { s - s_hi };
    arccosh(ds.cosh() * d.cosh())
}

/// Quantized tracking-point key identifying an enumerated group element:
/// the action is free, so element <-> orbit point is a bijection, and the
/// orbit is systole-separated in the metric.  At the 1e-10 quantum the
/// transversal cosh compression near the region edge still leaves
/// thousands of quanta between distinct points, while accumulated
/// evaluation noise stays near 1e-13.
fn track_key(s: f64, d: f64) -> (i64, i64) {
    ((s * 1e10).round() as i64, (d * 1e10).round() as i64)
}

/// Foot of the perpendicular from the frame origin `i` to the axis whose
/// frame matrix is given (the image of `i` under the frame map lies on the
/// axis and is a convenient anchor).
fn project_to_axis(frame: &Mat2) -> Hp {
    Hp::new(0.0, 1.0).transform(frame)
}

/// Quantized matrix key identifying a group element up to sign.  Distinct
/// elements in a ball of geometric radius ~16 have relative matrix
/// separation far above the 1e-9 quantum (the trace gap 2 cosh(sys/2) - 2
/// bounds the smallest singular value of the quotient minus identity), and
/// floating-point noise sits far below it.
type MatKey = (i64, i64, i64, i64, i64);

fn mat_key(m: &Mat2) -> MatKey {
    let s = m.max_entry();
    let entries = [m.a, m.b, m.c, m.d];
    let mut sign = 1.0;
    for e in entries {
        if e.abs() > 0.5 * s {
            sign = e.signum();
            break;
        }
    }
    let q = |v: f64| (v * sign / s * 1e9).round() as i64;
    (
        q(m.a),
        q(m.b),
        q(m.c),
        q(m.d),
        (s.ln() * 1e9).round() as i64,
    )
}

/// Cluster raw crossings into distinct surface crossings: sort by folded
/// position, merge records within tolerance in (position, angle), treating
/// the position circle of circumference `len` as wrapping.
fn cluster(mut raws: Vec<RawCrossing>, len: f64) -> Vec<RawCrossing> {
    if raws.is_empty() {
        return raws;
    }
    raws.sort_by(|a, b| {
        a.pos_a
            .total_cmp(&b.pos_a)
            .then(a.angle_a.total_cmp(&b.angle_a))
    });
    let mut out: Vec<RawCrossing> = Vec::new();
    for r in raws {
        let dup = out.iter().any(|o| {
            let mut dp = (o.pos_a - r.pos_a).abs();
            dp = dp.min(len - dp); // wraparound
            dp <= tol::CROSSING_POSITION_TOL
                && (o.angle_a - r.angle_a).abs() <= tol::CROSSING_POSITION_TOL
        });
        if !dup {
            out.push(r);
        }
    }
    out
}

/// Count distinct crossings between the geodesics of `a` and `b` at the
/// given enumeration depth.  The geometrically longer curve serves as the
/// base axis (window cost is linear in its length) and the shorter one is
/// enumerated (region cost is exponential in half its length).
fn crossing_count(
    x: &HyperbolicStructure,
    a: &Word,
    b: &Word,
    depth: usize,
) -> Result<u64, IntersectionError> {
    crossing_count_slack(x, a, b, depth, 0.0)
}

fn crossing_count_slack(
    x: &HyperbolicStructure,
    a: &Word,
    b: &Word,
    depth: usize,
    extra_slack: f64,
) -> Result<u64, IntersectionError> {
    let la = x.word_length(a)?;
    let lb = x.word_length(b)?;
    let (base, moving) = if la >= lb { (a, b) } else { (b, a) };
    let frame = CrossingFrame::build(x, base, moving)?;
    let mut raws = Vec::new();
    let mut err = None;
    frame.enumerate(depth, extra_slack, |m, t| {
        if err.is_some() {
            return;
        }
        match frame.crossing_of(m, t) {
            Ok(Some(r)) => raws.push(r),
            Ok(None) => {}
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(cluster(raws, frame.len_a).len() as u64)
}

// ---------------------------------------------------------------------------
// Public counting operations
// ---------------------------------------------------------------------------

/// The two primitive roots trace the same unoriented geodesic.  Canonical
/// classes close over inversion, so equality is the whole test.
fn coincident_roots(
    _x: &HyperbolicStructure,
    rc: &CurveClass,
    rd: &CurveClass,
) -> Result<bool, IntersectionError> {
    Ok(rc == rd)
}

/// Geometric intersection number of two distinct classes at a fixed
/// enumeration depth; `stabilized` reports agreement with depth + 1.
/// Symmetric by construction: the pair is ordered canonically before
/// computing.
pub fn intersection_number(
    x: &HyperbolicStructure,
    c: &CurveClass,
    d: &CurveClass,
    depth: usize,
) -> Result<CrossingData, IntersectionError> {
    if c == d {
        return Err(IntersectionError::SelfPairDisallowed);
    }
    // Coincident geodesics (classes sharing an unoriented primitive root):
    // two copies of the same geodesic; transverse representatives realize
    // twice the root's self-intersection per power pair.
    let rc = c.primitive_root();
    let rd = d.primitive_root();
    if coincident_roots(x, &rc, &rd)? {
        let si = self_intersection(x, &rc, depth)?;
        let k = (c.power_exponent() * d.power_exponent()) as u64;
        return Ok(CrossingData {
            depth: si.depth,
            crossings: 2 * si.crossings * k,
            stabilized: si.stabilized,
        });
    }
    let (a, b) = if c.word().0 <= d.word().0 {
        (c.word(), d.word())
    } else {
        (d.word(), c.word())
    };
    let n0 = crossing_count(x, a, b, depth)?;
    let n1 = crossing_count(x, a, b, depth + 1)?;
    Ok(CrossingData {
        depth,
        crossings: n1,
        stabilized: n0 == n1,
    })
}

/// Number of transverse double points of the geodesic representative at a
/// fixed depth.  For a power c = r^k of a primitive root: the minimal
/// transverse realization of the k-fold cover has
/// k^2 * si(r) + (k - 1) double points.
pub fn self_intersection(
    x: &HyperbolicStructure,
    c: &CurveClass,
    depth: usize,
) -> Result<CrossingData, IntersectionError> {
    let root = c.primitive_root();
    let k = c.power_exponent() as u64;
    // Raw records: each geometric self-crossing contributes two (one per
    // branch), so a complete census is even.  An odd raw count means the
    // enumeration is still partial at this depth.
    let n0 = crossing_count(x, root.word(), root.word(), depth)?;
    let n1 = crossing_count(x, root.word(), root.word(), depth + 1)?;
    Ok(CrossingData {
        depth,
        crossings: k * k * (n1 / 2) + (k - 1),
        stabilized: n0 == n1 && n1 % 2 == 0,
    })
}

/// Default starting depth per the depth policy: word length of the longer
/// curve plus 4g.
fn default_depth(x: &HyperbolicStructure, c: &CurveClass, d: &CurveClass) -> usize {
    c.len().max(d.len()) + 4 * x.genus() as usize
}

/// Pairing of two possibly-equal classes: equal classes count as parallel
/// copies of one geodesic made transverse (zero for simple primitives),
/// everything else delegates to [`stable_intersection_number`].
pub fn pairing_number(
    x: &HyperbolicStructure,
    c: &CurveClass,
    d: &CurveClass,
) -> Result<CrossingData, IntersectionError> {
    if c == d {
        let si = stable_self_intersection(x, &c.primitive_root())?;
        let k = (c.power_exponent() * d.power_exponent()) as u64;
        return Ok(CrossingData {
            depth: si.depth,
            crossings: 2 * si.crossings * k,
            stabilized: si.stabilized,
        });
    }
    stable_intersection_number(x, c, d)
}

/// Intersection number with automatic +2 depth escalation until two
/// consecutive depths agree; `stabilized = false` with the deepest count if
/// the ceiling is hit (never silently wrong).
pub fn stable_intersection_number(
    x: &HyperbolicStructure,
    c: &CurveClass,
    d: &CurveClass,
) -> Result<CrossingData, IntersectionError> {
    if c == d {
        return Err(IntersectionError::SelfPairDisallowed);
    }
    let rc = c.primitive_root();
    let rd = d.primitive_root();
    if coincident_roots(x, &rc, &rd)? {
        let si = stable_self_intersection(x, &rc)?;
        let k = (c.power_exponent() * d.power_exponent()) as u64;
        return Ok(CrossingData {
            depth: si.depth,
            crossings: 2 * si.crossings * k,
            stabilized: si.stabilized,
        });
    }
    let (a, b) = if c.word().0 <= d.word().0 {
        (c.word(), d.word())
    } else {
        (d.word(), c.word())
    };
    let mut depth = default_depth(x, c, d);
    let ceiling = depth + STABLE_DEPTH_HEADROOM;
    let mut prev = crossing_count(x, a, b, depth)?;
    while depth + 2 <= ceiling {
        let next = crossing_count(x, a, b, depth + 2)?;
        if next == prev {
            return Ok(CrossingData {
                depth: depth + 2,
                crossings: next,
                stabilized: true,
            });
        }
        prev = next;
        depth += 2;
    }
    Ok(CrossingData {
        depth,
        crossings: prev,
        stabilized: false,
    })
}

/// Self-intersection with automatic depth escalation.
pub fn stable_self_intersection(
    x: &HyperbolicStructure,
    c: &CurveClass,
) -> Result<CrossingData, IntersectionError> {
    let root = c.primitive_root();
    let k = c.power_exponent() as u64;
    let mut depth = root.len() + 4 * x.genus() as usize;
    let ceiling = depth + STABLE_DEPTH_HEADROOM;
    let count_at =
        |d: usize| -> Result<u64, IntersectionError> { crossing_count(x, root.word(), root.word(), d) };
    let mut prev = count_at(depth)?;
    while depth + 2 <= ceiling {
        let next = count_at(depth + 2)?;
        if next == prev && next % 2 == 0 {
            return Ok(CrossingData {
                depth: depth + 2,
                crossings: k * k * (next / 2) + (k - 1),
                stabilized: true,
            });
        }
        prev = next;
        depth += 2;
    }
    Ok(CrossingData {
        depth,
        crossings: k * k * (prev / 2) + (k - 1),
        stabilized: false,
    })
}

/// Unpruned oracle: enumerate every freely reduced conjugator up to the
/// given length with no geometric pruning and count distinct crossings.
/// Exponential in depth; used to cross-check the pruned search in tests.
pub fn brute_force_crossings(
    x: &HyperbolicStructure,
    c: &CurveClass,
    d: &CurveClass,
    depth: usize,
) -> Result<u64, IntersectionError> {
    let frame = CrossingFrame::build(x, c.word(), d.word())?;
    let nl = 4 * x.genus() as usize;
    let mut raws = Vec::new();
    let mut err = None;
    let mut stack: Vec<(Mat2, Vec<u8>)> = vec![(Mat2::IDENTITY, Vec::new())];
    while let Some((m, w)) = stack.pop() {
        if err.is_some() {
            break;
        }
        match frame.crossing_of(&m, 0.0) {
            Ok(Some(r)) => raws.push(r),
            Ok(None) => {}
            Err(e) => err = Some(e),
        }
        if w.len() < depth {
            for l in 0..nl as u8 {
                if let Some(&last) = w.last() {
                    if last ^ 1 == l {
                        continue;
                    }
                }
                let mut w2 = w.clone();
                w2.push(l);
                stack.push((m.mul(&frame.letters[l as usize]), w2));
            }
        }
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(cluster(raws, frame.len_a).len() as u64)
}

// ---------------------------------------------------------------------------
// Segment crossings (support for geometric twist derivations)
// ---------------------------------------------------------------------------

/// One crossing of a fixed geodesic segment by a lift of a simple curve.
#[derive(Debug, Clone)]
pub struct SegmentCrossing {
    /// Position along the segment, in length units from its start.
    pub param: f64,
    /// True when the segment crosses from the lift's left to its right
    /// side, with the lift oriented by its translation direction.
    pub positive_side: bool,
    /// Conjugating word: the crossing lift is this word applied to the axis
    /// of the curve.
    pub conjugator: Word,
}

/// All crossings of the geodesic segment from `from` to `to` by lifts of
/// the (simple) curve `c`, ordered along the segment.  Enumeration depth
/// escalates until two consecutive depths agree on the crossing list.
pub fn segment_crossings(
    x: &HyperbolicStructure,
    c: &CurveClass,
    from: Hp,
    to: Hp,
) -> Result<Vec<SegmentCrossing>, IntersectionError> {
    let mut depth = c.len() + 4 * x.genus() as usize;
    let ceiling = depth + STABLE_DEPTH_HEADROOM;
    let mut prev = segment_crossings_at(x, c, from, to, depth)?;
    loop {
        let next = segment_crossings_at(x, c, from, to, depth + 2)?;
        let same = next.len() == prev.len()
            && next
                .iter()
                .zip(prev.iter())
                .all(|(a, b)| (a.param - b.param).abs() <= tol::CROSSING_POSITION_TOL);
        if same {
            return Ok(next);
        }
        prev = next;
        depth += 2;
        if depth > ceiling {
            return Err(IntersectionError::BudgetExhausted(ceiling));
        }
    }
}

fn segment_crossings_at(
    x: &HyperbolicStructure,
    c: &CurveClass,
    from: Hp,
    to: Hp,
    depth: usize,
) -> Result<Vec<SegmentCrossing>, IntersectionError> {
    // Frame the segment onto the imaginary axis: from -> i*1, to above it.
    let seg_frame = frame_through(&from, &to)?;
    let finv = seg_frame.inverse();
    let f_from = from.transform(&finv);
    let f_to = to.transform(&finv);
    debug_assert!(f_from.re.abs() < 1e-6 && f_to.re.abs() < 1e-6);
    let (h_lo, h_hi) = (f_from.im.min(f_to.im), f_from.im.max(f_to.im));
    let upward = f_to.im >= f_from.im;

    let rep = x.representation();
    let nl = 4 * x.genus() as usize;
    let letters: Vec<Mat2> = (0..nl as u8)
        .map(|l| finv.mul(rep.letter(l)).mul(&seg_frame))
        .collect();
    let cmat = finv.mul(&rep.evaluate(c.word())).mul(&seg_frame);
    let caxis = Axis::of(&cmat)?;
    let anchor = project_to_axis(&axis_frame(&cmat)?);
    let alpha = letters
        .iter()
        .map(|m| anchor.dist(&anchor.transform(m)))
        .fold(0.0f64, f64::max);
    let seg = AxisSegment { lo: h_lo, hi: h_hi };
    let r_keep = caxis.length / 2.0 + alpha + REGION_SLACK;

    let mut found: Vec<(f64, bool, Word, f64)> = Vec::new();
    let mut visited: HashSet<MatKey> = HashSet::new();
    visited.insert(mat_key(&Mat2::IDENTITY));
    let mut queue: VecDeque<(Mat2, Vec<u8>)> = VecDeque::new();
    queue.push_back((Mat2::IDENTITY, Vec::new()));
    while let Some((m, w)) = queue.pop_front() {
        if visited.len() > MAX_ENUM_NODES {
            return Err(IntersectionError::BudgetExhausted(MAX_ENUM_NODES));
        }
        // Does the lift m . axis(c) separate the segment endpoints?
        let p1 = caxis.repelling.transform(&m);
        let p2 = caxis.attracting.transform(&m);
        let s1 = p1.x * p1.y;
        let s2 = p2.x * p2.y;
        let n1 = p1.x * p1.x + p1.y * p1.y;
        let n2 = p2.x * p2.x + p2.y * p2.y;
        if s1.abs() <= tol::ENDPOINT_ANGLE_TOL * n1 || s2.abs() <= tol::ENDPOINT_ANGLE_TOL * n2 {
            return Err(IntersectionError::NumericalAmbiguity(
                "segment crossing endpoint near axis".into(),
            ));
        }
        if s1 * s2 < 0.0 {
            // Lift crosses the segment's geodesic; crossing height:
            let ls = p1.x.abs().ln() - p1.y.abs().ln();
            let lt = p2.x.abs().ln() - p2.y.abs().ln();
            let hpos = 0.5 * (ls + lt); // ln of crossing height
            if hpos > h_lo.ln() - 1e-12 && hpos < h_hi.ln() + 1e-12 {
                // Parameter from the segment start, in length units.
                let param = if upward {
                    hpos - h_lo.ln()
                } else {
                    h_hi.ln() - hpos
                };
                // Side sign: the repelling endpoint's sign tells which side
                // the lift is oriented across the vertical; combined with
                // segment direction gives the crossing sign.
                let rep_side_positive = s1 > 0.0;
                let positive_side = rep_side_positive == upward;
                // Crossing angle invariant for dedup.
                let s = sign_val(&p1) * ls.exp();
                let t = sign_val(&p2) * lt.exp();
                let ang = ((s + t) / (2.0 * (-s * t).sqrt())).atan();
                found.push((param, positive_side, Word(w.clone()), ang));
            }
        }
        if w.len() < depth {
            for l in 0..nl as u8 {
                if let Some(&last) = w.last() {
                    if last ^ 1 == l {
                        continue;
                    }
                }
                let m2 = m.mul(&letters[l as usize]);
                let p = anchor.transform(&m2);
                if seg.dist(&p) > r_keep {
                    continue;
                }
                if visited.insert(mat_key(&m2)) {
                    let mut w2 = w.clone();
                    w2.push(l);
                    queue.push_back((m2, w2));
                }
            }
        }
    }
    // Dedup lifts: same crossing parameter and angle = same line (words
    // differing by the curve's stabilizer).  Prefer the shortest word.
    found.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.3.total_cmp(&b.3))
            .then(a.2.len().cmp(&b.2.len()))
    });
    let mut out: Vec<SegmentCrossing> = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for (param, positive_side, conjugator, ang) in found {
        if let Some((lp, la)) = last {
            if (param - lp).abs() <= tol::CROSSING_POSITION_TOL
                && (ang - la).abs() <= tol::CROSSING_POSITION_TOL
            {
                continue;
            }
        }
        last = Some((param, ang));
        out.push(SegmentCrossing {
            param,
            positive_side,
            conjugator,
        });
    }
    Ok(out)
}

/// An isometry mapping the imaginary axis onto the geodesic through two
/// distinct interior points.
fn frame_through(z1: &Hp, z2: &Hp) -> Result<Mat2, IntersectionError> {
    if (z1.re - z2.re).abs() < 1e-12 {
        // Vertical line x = c: frame is the horizontal translation z + c.
        return Ok(Mat2::new(1.0, z1.re, 0.0, 1.0));
    }
    // Circle center on the real axis through both points.
    let m = (z1.re * z1.re + z1.im * z1.im - z2.re * z2.re - z2.im * z2.im)
        / (2.0 * (z1.re - z2.re));
    let r = ((z1.re - m) * (z1.re - m) + z1.im * z1.im).sqrt();
    let (u, v) = (m - r, m + r);
    // Map 0 -> u, inf -> v: columns (v, 1; u, 1) normalized.
    let det = v - u;
    let s = det.sqrt().recip();
    Ok(Mat2::new(v * s, u * s, s, s))
}

// ---------------------------------------------------------------------------
// Filling tests via face tracing
// ---------------------------------------------------------------------------

/// Why a filling test returned its verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillingReason {
    /// All complementary faces are disks: the system fills.
    AllDisks,
    /// A component is simple and disjoint from the rest: annular complement.
    DegenerateGraph,
    /// The union is disconnected, so some complement region is not a disk.
    Disconnected,
    /// Euler count shows a non-disk complementary region.
    ComplementNotDisks,
}

/// Outcome of a filling test with the face-tracing census.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FillingOutcome {
    pub filling: bool,
    pub reason: FillingReason,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
}

/// One crossing event of the union graph under construction.
struct Event {
    /// (curve index, position, tangent angle) for the two passages.
    passages: [(usize, f64, f64); 2],
}

/// Does the geodesic representative of `c` fill the surface?  Traces the
/// complementary faces of its self-crossing graph.  A simple class returns
/// false with `DegenerateGraph`.
pub fn is_filling(
    x: &HyperbolicStructure,
    c: &CurveClass,
) -> Result<FillingOutcome, IntersectionError> {
    let root = c.primitive_root();
    filling_system_check(x, std::slice::from_ref(&root))
}

/// Does the union of the two geodesics fill?  Vertices include mutual and
/// self crossings.
pub fn filling_pair_check(
    x: &HyperbolicStructure,
    c: &CurveClass,
    d: &CurveClass,
) -> Result<FillingOutcome, IntersectionError> {
    let rc = c.primitive_root();
    let rd = d.primitive_root();
    if coincident_roots(x, &rc, &rd)? {
        return is_filling(x, &rc);
    }
    filling_system_check(x, &[rc, rd])
}

/// Filling test for a system of curves (their geodesic union).
pub fn filling_system_check(
    x: &HyperbolicStructure,
    curves: &[CurveClass],
) -> Result<FillingOutcome, IntersectionError> {
    // Deduplicate coincident (unoriented) geodesics.
    let mut roots: Vec<CurveClass> = Vec::new();
    for c in curves {
        let r = c.primitive_root();
        let mut dup = false;
        for seen in &roots {
            if coincident_roots(x, seen, &r)? {
                dup = true;
                break;
            }
        }
        if !dup {
            roots.push(r);
        }
    }
    let mut events: Vec<Event> = Vec::new();
    for (i, ci) in roots.iter().enumerate() {
        // Self-crossings of curve i.
        for ev in crossing_events(x, ci, ci, i, i)? {
            events.push(ev);
        }
        // Mutual crossings with later curves.
        for (j, cj) in roots.iter().enumerate().skip(i + 1) {
            for ev in crossing_events(x, ci, cj, i, j)? {
                events.push(ev);
            }
        }
    }
    build_and_trace(x.genus(), roots.len(), events)
}

/// Crossing events of curves `a` (index ia) and `b` (index ib), with
/// positions along both curves and tangent angles at the crossing point.
/// For a == b, each geometric self-crossing yields one event.
fn crossing_events(
    x: &HyperbolicStructure,
    a: &CurveClass,
    b: &CurveClass,
    ia: usize,
    ib: usize,
) -> Result<Vec<Event>, IntersectionError> {
    // Escalate depth until the event list stabilizes; a None means the
    // census was provably partial (unpaired self-crossing branches).
    let mut depth = a.len().max(b.len()) + 4 * x.genus() as usize;
    let ceiling = depth + STABLE_DEPTH_HEADROOM;
    let mut prev = crossing_events_at(x, a, b, ia, ib, depth)?;
    loop {
        let next = crossing_events_at(x, a, b, ia, ib, depth + 2)?;
        if let (Some(p), Some(n)) = (&prev, &next) {
            if p.len() == n.len() {
                return Ok(next.unwrap());
            }
        }
        prev = next;
        depth += 2;
        if depth > ceiling {
            return Err(IntersectionError::BudgetExhausted(ceiling));
        }
    }
}

fn crossing_events_at(
    x: &HyperbolicStructure,
    a: &CurveClass,
    b: &CurveClass,
    ia: usize,
    ib: usize,
    depth: usize,
) -> Result<Option<Vec<Event>>, IntersectionError> {
    let frame = CrossingFrame::build(x, a.word(), b.word())?;
    let mut raws = Vec::new();
    let mut err = None;
    frame.enumerate(depth, 0.0, |m, t| {
        if err.is_some() {
            return;
        }
        match frame.crossing_of(m, t) {
            Ok(Some(r)) => raws.push(r),
            Ok(None) => {}
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let clustered = cluster(raws, frame.len_a);
    let bframe = axis_frame(&frame.bmat)?;
    let bframe_inv = bframe.inverse();
    let mut events = Vec::new();
    for r in &clustered {
        // The stored conjugator is localized: its crossing sits at bounded
        // height, and the diagonal offset cancels in everything below (the
        // angle is scale-invariant, and the offset drops out of m^-1 z).
        let m = r.conj;
        let p1 = frame.baxis.repelling.transform(&m);
        let p2 = frame.baxis.attracting.transform(&m);
        let s = p1.value();
        let t = p2.value();
        let h = (-s * t).sqrt();
        let z = Hp::new(0.0, h);
        // Tangent of the base axis at z: straight up (toward attracting).
        let ang_a = std::f64::consts::FRAC_PI_2;
        // Tangent of the crossing lift at z, toward its attracting end:
        // i * (z - c) with z - c = (-c, h) gives the Euclidean direction
        // (-h, -c), which heads toward the smaller endpoint.
        let c = (s + t) / 2.0;
        let mut dir = (-h, -c);
        // Flip if the attracting endpoint is the larger one.
        if t > s {
            dir = (-dir.0, -dir.1);
        }
        let ang_b = dir.1.atan2(dir.0);
        // Position of the crossing along b, in b's own frame.
        let y = z.transform(&m.inverse()).transform(&bframe_inv);
        let pos_b_raw = 0.5 * (y.re * y.re + y.im * y.im).ln();
        let pos_b = pos_b_raw.rem_euclid(frame.len_b);
        events.push(Event {
            passages: [(ia, r.pos_a, ang_a), (ib, pos_b, ang_b)],
        });
    }
    if ia == ib {
        // Each geometric self-crossing appears twice, once from each
        // branch; keep one representative per unordered pair.  Unpaired
        // records mean the census is partial at this depth.
        let n = events.len();
        let mut kept: Vec<Event> = Vec::new();
        for ev in events {
            let (p, q) = (ev.passages[0].1, ev.passages[1].1);
            let dup = kept.iter().any(|k| {
                let (kp, kq) = (k.passages[0].1, k.passages[1].1);
                close_mod(p, kq, frame.len_a) && close_mod(q, kp, frame.len_a)
            });
            if !dup {
                kept.push(ev);
            }
        }
        if kept.len() * 2 != n {
            return Ok(None);
        }
        return Ok(Some(kept));
    }
    Ok(Some(events))
}

fn close_mod(a: f64, b: f64, len: f64) -> bool {
    let mut d = (a - b).abs();
    d = d.min(len - d);
    d <= 10.0 * tol::CROSSING_POSITION_TOL
}

/// Assemble the 4-valent graph and trace complementary faces.
fn build_and_trace(
    genus: u32,
    n_curves: usize,
    events: Vec<Event>,
) -> Result<FillingOutcome, IntersectionError> {
    let v = events.len();
    // A curve with no passage is simple and disjoint from the rest.
    let mut passages_per_curve: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n_curves];
    for (ei, ev) in events.iter().enumerate() {
        for (slot, &(curve, _, _)) in ev.passages.iter().enumerate() {
            passages_per_curve[curve].push((ei, slot));
        }
    }
    if passages_per_curve.iter().any(|p| p.is_empty()) || v == 0 {
        return Ok(FillingOutcome {
            filling: false,
            reason: FillingReason::DegenerateGraph,
            vertices: v,
            edges: 0,
            faces: 0,
        });
    }
    // Connectivity of the union via shared events.
    let mut uf: Vec<usize> = (0..n_curves).collect();
    fn find(uf: &mut Vec<usize>, i: usize) -> usize {
        if uf[i] != i {
            let r = find(uf, uf[i]);
            uf[i] = r;
        }
        uf[i]
    }
    for ev in &events {
        let a = find(&mut uf, ev.passages[0].0);
        let b = find(&mut uf, ev.passages[1].0);
        uf[a] = b;
    }
    let root0 = find(&mut uf, 0);
    if (1..n_curves).any(|i| find(&mut uf, i) != root0) {
        return Ok(FillingOutcome {
            filling: false,
            reason: FillingReason::Disconnected,
            vertices: v,
            edges: 2 * v,
            faces: 0,
        });
    }
    // Sort passages along each curve; arcs join consecutive ones.
    for list in passages_per_curve.iter_mut() {
        list.sort_by(|x, y| {
            let px = events[x.0].passages[x.1].1;
            let py = events[y.0].passages[y.1].1;
            px.total_cmp(&py)
        });
    }
    // Darts: two per arc.  dart = (arc, end); arcs listed per curve.
    // For each dart record (event, angle at that event).
    #[derive(Clone, Copy)]
    struct Dart {
        event: usize,
        angle: f64,
        reverse: usize,
    }
    let mut darts: Vec<Dart> = Vec::new();
    for list in &passages_per_curve {
        let n = list.len();
        for k in 0..n {
            let (e_tail, s_tail) = list[k];
            let (e_head, s_head) = list[(k + 1) % n];
            let ang_out = events[e_tail].passages[s_tail].2;
            let ang_in = events[e_head].passages[s_head].2 + std::f64::consts::PI;
            let id = darts.len();
            darts.push(Dart {
                event: e_tail,
                angle: ang_out,
                reverse: id + 1,
            });
            darts.push(Dart {
                event: e_head,
                angle: ang_in,
                reverse: id,
            });
        }
    }
    let e = darts.len() / 2;
    debug_assert_eq!(e, 2 * v);
    // Rotation at each vertex: darts sorted by angle (mod 2 pi).
    let mut at_vertex: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (i, d) in darts.iter().enumerate() {
        at_vertex[d.event].push(i);
    }
    let norm = |a: f64| a.rem_euclid(2.0 * std::f64::consts::PI);
    for list in at_vertex.iter_mut() {
        list.sort_by(|&x, &y| norm(darts[x].angle).total_cmp(&norm(darts[y].angle)));
        debug_assert_eq!(list.len(), 4);
    }
    // Position of each dart in its vertex rotation.
    let mut pos_in_vertex = vec![0usize; darts.len()];
    for list in &at_vertex {
        for (k, &d) in list.iter().enumerate() {
            pos_in_vertex[d] = k;
        }
    }
    // Face tracing: next dart = clockwise successor of the reverse dart.
    let next = |d: usize| -> usize {
        let r = darts[d].reverse;
        let vlist = &at_vertex[darts[r].event];
        let k = pos_in_vertex[r];
        vlist[(k + vlist.len() - 1) % vlist.len()]
    };
    let mut seen = vec![false; darts.len()];
    let mut faces = 0usize;
    for start in 0..darts.len() {
        if seen[start] {
            continue;
        }
        faces += 1;
        let mut d = start;
        loop {
            seen[d] = true;
            d = next(d);
            if d == start {
                break;
            }
        }
    }
    let chi_target = 2 - 2 * genus as i64;
    let chi = v as i64 - e as i64 + faces as i64;
    if chi == chi_target {
        Ok(FillingOutcome {
            filling: true,
            reason: FillingReason::AllDisks,
            vertices: v,
            edges: e,
            faces,
        })
    } else {
        Ok(FillingOutcome {
            filling: false,
            reason: FillingReason::ComplementNotDisks,
            vertices: v,
            edges: e,
            faces,
        })
    }
}

/// A memoizing wrapper over stable intersection counts keyed by canonical
/// class pairs, for callers that test the same pairs repeatedly.
#[derive(Default)]
pub struct CrossingCache {
    map: HashMap<(Word, Word), u64>,
}

impl CrossingCache {
    pub fn new() -> CrossingCache {
        CrossingCache::default()
    }

    /// Stable intersection number through the cache.  Self pairs route to
    /// self-intersection doubling per the coincident-geodesic convention.
    pub fn intersection(
        &mut self,
        x: &HyperbolicStructure,
        c: &CurveClass,
        d: &CurveClass,
    ) -> Result<u64, IntersectionError> {
        let key = if c.word().0 <= d.word().0 {
            (c.word().clone(), d.word().clone())
        } else {
            (d.word().clone(), c.word().clone())
        };
        if let Some(&n) = self.map.get(&key) {
            return Ok(n);
        }
        let n = if c == d {
            let k = c.power_exponent() as u64;
            2 * k * k * stable_self_intersection(x, &c.primitive_root())?.crossings
        } else {
            stable_intersection_number(x, c, d)?.crossings
        };
        self.map.insert(key, n);
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::FNCoordinates;

    fn octagon() -> HyperbolicStructure {
        HyperbolicStructure::octagon()
    }

    fn class(x: &HyperbolicStructure, s: &str) -> CurveClass {
        x.presentation().canonical_class(&x.presentation().parse_word(s).unwrap()).unwrap()
    }

    #[test]
    fn generators_cross_once_within_handles() {
        let x = octagon();
        let a1 = class(&x, "a1");
        let b1 = class(&x, "b1");
        let r = stable_intersection_number(&x, &a1, &b1).unwrap();
        assert!(r.stabilized);
        assert_eq!(r.crossings, 1);
    }

    #[test]
    fn disjoint_handles_do_not_cross() {
        let x = octagon();
        let a1 = class(&x, "a1");
        let a2 = class(&x, "a2");
        let b2 = class(&x, "b2");
        assert_eq!(stable_intersection_number(&x, &a1, &a2).unwrap().crossings, 0);
        assert_eq!(stable_intersection_number(&x, &a1, &b2).unwrap().crossings, 0);
    }

    #[test]
    fn separating_curve_misses_all_generators() {
        let x = octagon();
        let sep = class(&x, "a1 b1 A1 B1");
        for g in ["a1", "b1", "a2", "b2"] {
            let c = class(&x, g);
            let r = stable_intersection_number(&x, &sep, &c).unwrap();
            assert!(r.stabilized, "{g} not stabilized");
            assert_eq!(r.crossings, 0, "separating curve should miss {g}");
        }
    }

    #[test]
    fn symmetry_is_exact() {
        let x = octagon();
        let c = class(&x, "a1 b1");
        let d = class(&x, "b1 a2");
        let r1 = intersection_number(&x, &c, &d, 10).unwrap();
        let r2 = intersection_number(&x, &d, &c, 10).unwrap();
        assert_eq!(r1.crossings, r2.crossings);
    }

    #[test]
    fn self_pair_is_rejected() {
        let x = octagon();
        let c = class(&x, "a1");
        assert!(matches!(
            intersection_number(&x, &c, &c, 8),
            Err(IntersectionError::SelfPairDisallowed)
        ));
    }

    #[test]
    fn widened_region_finds_no_extra_crossings() {
        let x = octagon();
        let pairs = [("a1", "b1"), ("a1 b1", "b1 a2"), ("a1 a2 B1", "b1 b2")];
        for (s, t) in pairs {
            let c = class(&x, s);
            let d = class(&x, t);
            for depth in [8, 10] {
                let narrow =
                    crossing_count_slack(&x, c.word(), d.word(), depth, 0.0).unwrap();
                let wide = crossing_count_slack(&x, c.word(), d.word(), depth, 2.5).unwrap();
                assert_eq!(narrow, wide, "pair ({s}, {t}) at depth {depth}");
            }
        }
    }

    #[test]
    fn brute_force_agrees_with_pruned_search() {
        let x = octagon();
        let pairs = [
            ("a1", "b1"),
            ("a1", "a2"),
            ("a1 b1", "b1 a2"),
            ("a1 a2", "b1"),
        ];
        for (s, t) in pairs {
            let c = class(&x, s);
            let d = class(&x, t);
            let pruned = intersection_number(&x, &c, &d, 6).unwrap().crossings;
            let brute = brute_force_crossings(&x, &c, &d, 6).unwrap();
            // Brute force explores without sorting the pair, so compare
            // both orders.
            let brute2 = brute_force_crossings(&x, &d, &c, 6).unwrap();
            assert_eq!(pruned, brute.max(brute2), "pair ({s}, {t})");
        }
    }

    #[test]
    fn generators_are_simple() {
        let x = octagon();
        for g in ["a1", "b1", "a2", "b2"] {
            let c = class(&x, g);
            let r = stable_self_intersection(&x, &c).unwrap();
            assert!(r.stabilized);
            assert_eq!(r.crossings, 0, "{g} must be simple");
        }
    }

    #[test]
    fn doubled_handle_word_has_self_crossings() {
        let x = octagon();
        let c = class(&x, "a1 b1 a1 B1");
        let r = stable_self_intersection(&x, &c).unwrap();
        assert!(r.stabilized);
        assert!(r.crossings > 0, "expected self-crossings, got 0");
    }

    #[test]
    fn powers_follow_the_cover_formula() {
        let x = octagon();
        let a1sq = class(&x, "a1 a1");
        let r = stable_self_intersection(&x, &a1sq).unwrap();
        assert_eq!(r.crossings, 1); // k^2 * 0 + (k - 1)
    }

    #[test]
    fn simple_curve_never_fills() {
        let x = octagon();
        let out = is_filling(&x, &class(&x, "a1")).unwrap();
        assert!(!out.filling);
        assert_eq!(out.reason, FillingReason::DegenerateGraph);
    }

    #[test]
    fn handle_pair_does_not_fill_genus_two() {
        let x = octagon();
        let out = filling_pair_check(&x, &class(&x, "a1"), &class(&x, "b1")).unwrap();
        assert!(!out.filling);
        assert_eq!(out.vertices, 1);
        assert_eq!(out.edges, 2);
    }

    #[test]
    fn disjoint_simple_pair_reports_degenerate() {
        let x = octagon();
        let out = filling_pair_check(&x, &class(&x, "a1"), &class(&x, "a2")).unwrap();
        assert!(!out.filling);
        assert_eq!(out.reason, FillingReason::DegenerateGraph);
    }

    #[test]
    fn counts_match_on_fn_surface() {
        let fnc = FNCoordinates::genus2([3.0, 2.4, 2.8], [0.3, -0.2, 0.5]);
        let x = HyperbolicStructure::from_fenchel_nielsen("fn", &fnc).unwrap();
        let a1 = class(&x, "a1");
        let b1 = class(&x, "b1");
        let a2 = class(&x, "a2");
        assert_eq!(stable_intersection_number(&x, &a1, &b1).unwrap().crossings, 1);
        assert_eq!(stable_intersection_number(&x, &a1, &a2).unwrap().crossings, 0);
        let sep = class(&x, "a1 b1 A1 B1");
        assert_eq!(stable_intersection_number(&x, &sep, &b1).unwrap().crossings, 0);
    }

    #[test]
    #[ignore = "lab probe: prints a census of short-word invariants"]
    fn probe_short_word_census() {
        let x = octagon();
        let words = [
            "a1 b1 a1 B1",
            "a1 b1",
            "a1 a2",
            "a1 b2",
            "b1 a2",
            "a1 b1 a2",
            "a1 b1 a2 b2",
            "a1 b1 A2 B2",
            "a1 a2 b1 b2",
            "a1 b2 a2 b1",
        ];
        for s in words {
            let c = class(&x, s);
            let len = x.word_length(c.word()).unwrap();
            match stable_self_intersection(&x, &c) {
                Ok(si) => print!(
                    "{s:16} len {len:.4}  si {}{}",
                    si.crossings,
                    if si.stabilized { "" } else { "?" }
                ),
                Err(e) => print!("{s:16} len {len:.4}  si ERR {e}"),
            }
            match is_filling(&x, &c) {
                Ok(f) => println!(
                    "  filling {} ({:?}, V={} E={} F={})",
                    f.filling, f.reason, f.vertices, f.edges, f.faces
                ),
                Err(e) => println!("  filling ERR {e}"),
            }
        }
    }

    #[test]
    #[ignore = "lab probe: dumps raw crossing records for one pair"]
    fn probe_pair_records() {
        let x = octagon();
        let p = x.presentation();
        let a = p.parse_word("a1 a1 B1 B2").unwrap();
        let b = p.parse_word("a1").unwrap();
        let la = x.word_length(&a).unwrap();
        let lb = x.word_length(&b).unwrap();
        println!("len(a) {la:.6} len(b) {lb:.6}");
        let (base, moving) = if la >= lb { (&a, &b) } else { (&b, &a) };
        let frame = CrossingFrame::build(&x, base, moving).unwrap();
        for depth in [8usize, 10, 12, 14] {
            let mut raws = Vec::new();
            let mut err = None;
            frame
                .enumerate(depth, 0.0, |m, t| {
                    if err.is_some() {
                        return;
                    }
                    match frame.crossing_of(m, t) {
                        Ok(Some(r)) => raws.push(r),
                        Ok(None) => {}
                        Err(e) => err = Some(e),
                    }
                })
                .unwrap();
            if let Some(e) = err {
                println!("depth {depth}: ERR {e}");
                continue;
            }
            let kept = cluster(raws.clone(), frame.len_a);
            println!("depth {depth}: raw {} kept {}", raws.len(), kept.len());
            for r in &kept {
                println!(
                    "  pos {:.9} angle {:.9} fold {} conj [{:.6} {:.6}; {:.6} {:.6}] tr {:.6}",
                    r.pos_a,
                    r.angle_a,
                    r.fold,
                    r.conj.a,
                    r.conj.b,
                    r.conj.c,
                    r.conj.d,
                    r.conj.trace()
                );
            }
        }
    }

    #[test]
    #[ignore = "lab probe: replicates a twist-invariance pair end to end"]
    fn probe_twist_image_pair() {
        let x = octagon();
        let sys = crate::mcg::TwistSystem::standard().unwrap();
        let p = x.presentation();
        let c = class(&x, "b1 b2");
        let d = class(&x, "a1");
        let g = crate::mcg::MCGWord::parse("T4 T1 T1").unwrap();
        let gc = sys.apply_mcg(&g, &c).unwrap();
        let gd = sys.apply_mcg(&g, &d).unwrap();
        println!("gc = {}  gd = {}", gc.word(), gd.word());
        let by_hand = p
            .canonical_class(&p.parse_word("b1 A1 A1 b2").unwrap())
            .unwrap();
        println!("by_hand = {}  equal_class {}", by_hand.word(), by_hand == gc);
        let r = stable_intersection_number(&x, &gc, &gd).unwrap();
        println!(
            "i(gc, gd) = {} stabilized {} depth {}",
            r.crossings, r.stabilized, r.depth
        );
    }

    #[test]
    fn systolic_classes_are_simple() {
        // Any closed geodesic with a transverse self-crossing splits into
        // two loops, so its length is at least twice the systole; classes
        // at the systole length are therefore simple.
        let x = octagon();
        for s in ["a1 b1", "a1 b1 A2 B2"] {
            let c = class(&x, s);
            let len = x.word_length(c.word()).unwrap();
            assert!((len - 3.0571).abs() < 1e-3, "{s} not systolic: {len}");
            let si = stable_self_intersection(&x, &c).unwrap();
            assert!(si.stabilized);
            assert_eq!(si.crossings, 0, "{s} must be simple");
        }
    }

    #[test]
    fn quadruple_product_fills_with_three_crossings() {
        let x = octagon();
        let c = class(&x, "a1 a2 b1 b2");
        let si = stable_self_intersection(&x, &c).unwrap();
        assert!(si.stabilized);
        assert_eq!(si.crossings, 3);
        let out = is_filling(&x, &c).unwrap();
        assert!(out.filling);
        assert_eq!(
            (out.vertices, out.edges, out.faces),
            (3, 6, 1),
            "one complementary disk: 3 - 6 + 1 = -2 matches genus 2"
        );
    }

    #[test]
    fn cross_handle_words_have_one_self_crossing() {
        let x = octagon();
        for s in ["a1 b2", "b1 a2"] {
            let c = class(&x, s);
            let si = stable_self_intersection(&x, &c).unwrap();
            assert!(si.stabilized);
            assert_eq!(si.crossings, 1, "{s}");
        }
    }

    #[test]
    fn classes_are_unoriented() {
        // Canonical forms close over inversion, so a class and its inverse
        // are one unoriented geodesic and cannot form a crossing pair.
        let x = octagon();
        let p = x.presentation();
        let c = class(&x, "a1");
        let cinv = p.canonical_class(&p.parse_word("A1").unwrap()).unwrap();
        assert_eq!(c, cinv);
        assert!(matches!(
            intersection_number(&x, &c, &cinv, 8),
            Err(IntersectionError::SelfPairDisallowed)
        ));
    }

    #[test]
    fn cache_round_trips() {
        let x = octagon();
        let mut cache = CrossingCache::new();
        let c = class(&x, "a1");
        let d = class(&x, "b1");
        assert_eq!(cache.intersection(&x, &c, &d).unwrap(), 1);
        assert_eq!(cache.intersection(&x, &d, &c).unwrap(), 1);
    }
}
