//! Discrete faithful matrix representations of surface groups and the
//! geometry of the hyperbolic plane needed by the rest of the crate.
//!
//! The upper half-plane model is used throughout: isometries are real 2x2
//! matrices of determinant one acting by Möbius transformations, boundary
//! points live on the projective line and are handled in homogeneous
//! coordinates so that infinity needs no special cases, and the translation
//! length of a hyperbolic matrix is `2 * arccosh(|trace| / 2)`.
//!
//! Two constructions are provided: the regular-octagon surface of genus 2
//! (side pairings of the regular hyperbolic octagon with angle sum 2*pi,
//! re-expressed in standard generators), and a Fenchel–Nielsen style
//! construction that glues two one-holed tori from pairs of pants with
//! prescribed cuff lengths and twists.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dd::Dd;
use crate::tol;
use crate::words::{CurveClass, Presentation, Word, WordError};

/// Errors from structure construction and length computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuchsianError {
    /// A word evaluated to a matrix with |trace| <= 2: no closed geodesic.
    #[error("element is not hyperbolic (|trace| = {trace:.6})")]
    NonHyperbolicElement { trace: f64 },
    /// The built representation failed its relator or length checks.
    #[error("construction failed: relator residual {residual:.3e}")]
    ConstructionFailure { residual: f64 },
    /// Only genus 2 constructions ship in this laboratory.
    #[error("genus {0} is not supported by this construction")]
    UnsupportedGenus(u32),
    /// Invalid length/twist data.
    #[error("invalid Fenchel-Nielsen data: {0}")]
    InvalidCoordinates(String),
    /// A boundary predicate stayed ambiguous even at extended precision.
    #[error("numerically ambiguous boundary configuration: {0}")]
    NumericalAmbiguity(String),
    /// Word-level failure surfaced through a geometry call.
    #[error(transparent)]
    Word(#[from] WordError),
}

// ---------------------------------------------------------------------------
// 2x2 matrices
// ---------------------------------------------------------------------------

/// A real 2x2 matrix, normally of determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
        Mat2 { a, b, c, d }
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Inverse assuming determinant one.
    pub fn inverse(&self) -> Mat2 {
        Mat2 {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Largest absolute entry.
    pub fn max_entry(&self) -> f64 {
        self.a
            .abs()
            .max(self.b.abs())
            .max(self.c.abs())
            .max(self.d.abs())
    }

    /// Max-entry distance to plus or minus the identity, whichever is
    /// smaller: the natural residual for relators in PSL(2, R).
    pub fn residual_to_unit(&self) -> f64 {
        let plus = (self.a - 1.0)
            .abs()
            .max((self.d - 1.0).abs())
            .max(self.b.abs())
            .max(self.c.abs());
        let minus = (self.a + 1.0)
            .abs()
            .max((self.d + 1.0).abs())
            .max(self.b.abs())
            .max(self.c.abs());
        plus.min(minus)
    }

    /// Rescale so the determinant is exactly one (guards drift in long
    /// products); requires a positive determinant.
    pub fn renormalized(&self) -> Mat2 {
        let det = self.det();
        debug_assert!(det > 0.0, "renormalizing a matrix with det {det}");
        let s = det.sqrt().recip();
        Mat2 {
            a: self.a * s,
            b: self.b * s,
            c: self.c * s,
            d: self.d * s,
        }
    }

    /// Translation by `t` along the imaginary axis, toward infinity.
    pub fn diag_translation(t: f64) -> Mat2 {
        let e = (t / 2.0).exp();
        Mat2::new(e, 0.0, 0.0, 1.0 / e)
    }

    /// Rotation about the point `i` by angle `phi` (derivative at `i` turns
    /// tangent vectors by `phi` counterclockwise).
    pub fn rotation_about_i(phi: f64) -> Mat2 {
        let (s, c) = (phi / 2.0).sin_cos();
        Mat2::new(c, s, -s, c)
    }

    /// Translation by `t` through the point `i` in the direction of the
    /// positive real axis (axis is the unit half-circle).
    pub fn horizontal_translation(t: f64) -> Mat2 {
        let ch = (t / 2.0).cosh();
        let sh = (t / 2.0).sinh();
        Mat2::new(ch, sh, sh, ch)
    }
}

/// Stable arccosh for x >= 1.
pub fn arccosh(x: f64) -> f64 {
    if x < 1.0 {
        return f64::NAN;
    }
    (x + ((x - 1.0) * (x + 1.0)).sqrt()).ln()
}

/// Translation length of a matrix from its trace, if hyperbolic.
pub fn trace_to_length(trace: f64) -> Result<f64, FuchsianError> {
    let t = trace.abs();
    if t <= 2.0 + tol::HYPERBOLIC_TRACE_MARGIN {
        return Err(FuchsianError::NonHyperbolicElement { trace });
    }
    Ok(2.0 * arccosh(t / 2.0))
}

// ---------------------------------------------------------------------------
// Boundary points and axes
// ---------------------------------------------------------------------------

/// A boundary point of the hyperbolic plane in homogeneous coordinates
/// `(x : y)`, representing the real number x/y (infinity when y = 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bp {
    pub x: f64,
    pub y: f64,
}

impl Bp {
    pub fn new(x: f64, y: f64) -> Bp {
        // Scale to unit infinity-norm so wedge magnitudes are comparable.
        let m = x.abs().max(y.abs());
        if m == 0.0 {
            return Bp { x: 0.0, y: 0.0 };
        }
        Bp { x: x / m, y: y / m }
    }

    pub fn infinity() -> Bp {
        Bp { x: 1.0, y: 0.0 }
    }

    pub fn from_real(v: f64) -> Bp {
        Bp::new(v, 1.0)
    }

    /// Affine value; infinite when y = 0.
    pub fn value(&self) -> f64 {
        self.x / self.y
    }

    pub fn is_infinite(&self) -> bool {
        self.y == 0.0
    }

    /// Image under a Möbius matrix (projective action).
    pub fn transform(&self, m: &Mat2) -> Bp {
        Bp::new(m.a * self.x + m.b * self.y, m.c * self.x + m.d * self.y)
    }
}

/// Wedge (2x2 determinant) of two boundary points; zero iff equal in RP^1.
pub fn wedge(p: &Bp, q: &Bp) -> f64 {
    p.x * q.y - p.y * q.x
}

/// The oriented axis of a hyperbolic matrix: repelling and attracting fixed
/// points, plus the translation length.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Axis {
    pub repelling: Bp,
    pub attracting: Bp,
    pub length: f64,
}

impl Axis {
    /// Axis of a hyperbolic matrix.
    pub fn of(m: &Mat2) -> Result<Axis, FuchsianError> {
        let t = m.trace();
        let length = trace_to_length(t)?;
        let s = (t * t - 4.0).sqrt();
        let (l_att, l_rep) = if t > 0.0 {
            ((t + s) / 2.0, (t - s) / 2.0)
        } else {
            ((t - s) / 2.0, (t + s) / 2.0)
        };
        Ok(Axis {
            repelling: eigen_bp(m, l_rep),
            attracting: eigen_bp(m, l_att),
            length,
        })
    }

    /// Image axis under an isometry.
    pub fn transform(&self, g: &Mat2) -> Axis {
        Axis {
            repelling: self.repelling.transform(g),
            attracting: self.attracting.transform(g),
            length: self.length,
        }
    }
}

/// Eigenvector of `m` for eigenvalue `l`, as a boundary point.  Of the two
/// candidate rows of `m - l`, pick the numerically larger one.
fn eigen_bp(m: &Mat2, l: f64) -> Bp {
    let v1 = (m.b, l - m.a);
    let v2 = (l - m.d, m.c);
    let n1 = v1.0 * v1.0 + v1.1 * v1.1;
    let n2 = v2.0 * v2.0 + v2.1 * v2.1;
    if n1 >= n2 {
        Bp::new(v1.0, v1.1)
    } else {
        Bp::new(v2.0, v2.1)
    }
}

/// Result of a linking test between two axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linking {
    /// The endpoint pairs separate each other: the geodesics cross once.
    Linked,
    /// Disjoint closures of the endpoint pairs: no crossing.
    Unlinked,
    /// A shared endpoint within tolerance even at extended precision.
    Ambiguous,
}

/// Do the axes of `m1` and `m2` cross?  Decided by the sign of the product
/// of the four endpoint wedges; falls back to double-double recomputation of
/// the endpoints straight from the matrix entries when any wedge is within
/// [`tol::ENDPOINT_ANGLE_TOL`] of zero.
pub fn axes_linked(a1: &Axis, m1: &Mat2, a2: &Axis, m2: &Mat2) -> Linking {
    let w11 = wedge(&a1.repelling, &a2.repelling);
    let w12 = wedge(&a1.repelling, &a2.attracting);
    let w21 = wedge(&a1.attracting, &a2.repelling);
    let w22 = wedge(&a1.attracting, &a2.attracting);
    let min = w11.abs().min(w12.abs()).min(w21.abs()).min(w22.abs());
    if min > tol::ENDPOINT_ANGLE_TOL {
        let sign = w11.signum() * w12.signum() * w21.signum() * w22.signum();
        return if sign < 0.0 {
            Linking::Linked
        } else {
            Linking::Unlinked
        };
    }
    linked_dd(m1, m2)
}

/// Double-double endpoints of the axis of `m` (repelling, attracting).
fn axis_endpoints_dd(m: &Mat2) -> [(Dd, Dd); 2] {
    let a = Dd::from(m.a);
    let b = Dd::from(m.b);
    let c = Dd::from(m.c);
    let d = Dd::from(m.d);
    let t = a.add(d);
    let four = Dd::from(4.0);
    let s = t.mul(t).sub(four).sqrt();
    let two = Dd::from(2.0);
    let (l_att, l_rep) = if t.hi > 0.0 {
        (t.add(s).div(two), t.sub(s).div(two))
    } else {
        (t.sub(s).div(two), t.add(s).div(two))
    };
    let mut out = [(Dd::from(0.0), Dd::from(0.0)); 2];
    for (slot, l) in [(0usize, l_rep), (1, l_att)] {
        let v1 = (b, l.sub(a));
        let v2 = (l.sub(d), c);
        let n1 = v1.0.mul(v1.0).add(v1.1.mul(v1.1));
        let n2 = v2.0.mul(v2.0).add(v2.1.mul(v2.1));
        out[slot] = if n1.hi >= n2.hi { v1 } else { v2 };
    }
    out
}

fn linked_dd(m1: &Mat2, m2: &Mat2) -> Linking {
    let e1 = axis_endpoints_dd(m1);
    let e2 = axis_endpoints_dd(m2);
    let mut sign = 1i32;
    for p in &e1 {
        for q in &e2 {
            let w = p.0.mul(q.1).sub(p.1.mul(q.0));
            // Scale-aware zero test: compare against the coordinate sizes.
            let scale = p.0.hi.abs().max(p.1.hi.abs()) * q.0.hi.abs().max(q.1.hi.abs());
            if w.hi.abs() <= scale * 1e-28 {
                return Linking::Ambiguous;
            }
            sign *= w.signum();
        }
    }
    if sign < 0 {
        Linking::Linked
    } else {
        Linking::Unlinked
    }
}

// ---------------------------------------------------------------------------
// Interior points
// ---------------------------------------------------------------------------

/// A point of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hp {
    pub re: f64,
    pub im: f64,
}

impl Hp {
    pub fn new(re: f64, im: f64) -> Hp {
        Hp { re, im }
    }

    /// Möbius action of a determinant-one matrix.
    pub fn transform(&self, m: &Mat2) -> Hp {
        // (a z + b) / (c z + d) with z = re + i im.
        let nr = m.a * self.re + m.b;
        let ni = m.a * self.im;
        let dr = m.c * self.re + m.d;
        let di = m.c * self.im;
        let den = dr * dr + di * di;
        Hp {
            re: (nr * dr + ni * di) / den,
            im: (ni * dr - nr * di) / den,
        }
    }

    /// Hyperbolic distance to another point.
    pub fn dist(&self, o: &Hp) -> f64 {
        let dx = self.re - o.re;
        let dy = self.im - o.im;
        let q = (dx * dx + dy * dy) / (2.0 * self.im * o.im);
        arccosh(1.0 + q)
    }
}

/// Normalizing map for a hyperbolic matrix: an isometry sending 0 to the
/// repelling and infinity to the attracting fixed point, so that the
/// conjugated matrix is diagonal and translation is upward.
pub fn axis_frame(m: &Mat2) -> Result<Mat2, FuchsianError> {
    let axis = Axis::of(m)?;
    let att = axis.attracting;
    let rep = axis.repelling;
    let det = att.x * rep.y - att.y * rep.x;
    if det.abs() < 1e-300 {
        return Err(FuchsianError::NumericalAmbiguity(
            "degenerate axis frame".into(),
        ));
    }
    let (ax, ay, s) = if det > 0.0 {
        (att.x, att.y, det.sqrt().recip())
    } else {
        (-att.x, -att.y, (-det).sqrt().recip())
    };
    Ok(Mat2::new(ax * s, rep.x * s, ay * s, rep.y * s))
}

/// Like [`axis_frame`] but with the axis orientation reversed: 0 goes to the
/// attracting and infinity to the repelling fixed point.
pub fn axis_frame_reversed(m: &Mat2) -> Result<Mat2, FuchsianError> {
    // Compose with z -> -1/z, which swaps 0 and infinity.
    let j = Mat2::new(0.0, -1.0, 1.0, 0.0);
    Ok(axis_frame(m)?.mul(&j))
}

/// Translation by `t` along the axis of `m`, toward its attracting point.
pub fn translate_along_axis(m: &Mat2, t: f64) -> Result<Mat2, FuchsianError> {
    let s = axis_frame(m)?;
    Ok(s.mul(&Mat2::diag_translation(t)).mul(&s.inverse()))
}

// ---------------------------------------------------------------------------
// Representations
// ---------------------------------------------------------------------------

/// Matrices for the standard generators of a surface group.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Representation {
    genus: u32,
    gens: Vec<Mat2>,
    invs: Vec<Mat2>,
}

impl Representation {
    /// Build from one matrix per generator (a1, b1, ..., ag, bg order).
    pub fn new(genus: u32, gens: Vec<Mat2>) -> Representation {
        assert_eq!(gens.len(), 2 * genus as usize);
        let invs = gens.iter().map(Mat2::inverse).collect();
        Representation { genus, gens, invs }
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    /// Matrix of a single letter.
    pub fn letter(&self, l: u8) -> &Mat2 {
        let g = (l >> 1) as usize;
        if l & 1 == 0 {
            &self.gens[g]
        } else {
            &self.invs[g]
        }
    }

    /// Matrix of a word (left-to-right product).
    pub fn evaluate(&self, w: &Word) -> Mat2 {
        let mut m = Mat2::IDENTITY;
        for &l in w.letters() {
            m = m.mul(self.letter(l));
        }
        m
    }

    /// Max-entry distance of the represented relator from plus or minus the
    /// identity.
    pub fn relator_residual(&self) -> f64 {
        let p = Presentation::new(self.genus);
        self.evaluate(&p.relator()).residual_to_unit()
    }

    /// Generator matrices in order.
    pub fn generators(&self) -> &[Mat2] {
        &self.gens
    }

    /// Smallest margin `|trace| - 2` over all nontrivial freely reduced
    /// words of length at most `max_len`.  A discrete cocompact torsion-free
    /// group has every nontrivial element hyperbolic, and no word this short
    /// can be a relator consequence, so a nonpositive margin certifies a
    /// broken construction.
    pub fn short_spectrum_margin(&self, max_len: usize) -> f64 {
        let nl = 4 * self.genus as usize;
        let mut best = f64::INFINITY;
        // Depth-first over freely reduced words, carrying the product.
        let mut stack: Vec<(Mat2, u8, usize)> = Vec::new();
        for l in 0..nl as u8 {
            stack.push((self.letter(l).clone(), l, 1));
        }
        while let Some((m, last, len)) = stack.pop() {
            best = best.min(m.trace().abs() - 2.0);
            if len < max_len {
                for l in 0..nl as u8 {
                    if l == last ^ 1 {
                        continue;
                    }
                    stack.push((m.mul(self.letter(l)), l, len + 1));
                }
            }
        }
        best
    }
}

// ---------------------------------------------------------------------------
// The regular-octagon surface (genus 2)
// ---------------------------------------------------------------------------

/// Words over the four octagon side-pairing translations expressing the
/// standard generators a1, b1, a2, b2.  Byte code `2k` is the translation
/// `t_k`, `2k + 1` its inverse.  Discovered once by the certified search in
/// `tests/discovery.rs` and frozen here; the permanent tests re-verify that
/// the quadruple satisfies the surface relator, that its homology classes
/// form a basis, and that all four generators have the side-pairing
/// translation length `2 * arccosh(1 + sqrt 2)`.
const OCTAGON_GENERATOR_WORDS: [&[u8]; 4] = [OCT_A1, OCT_B1, OCT_A2, OCT_B2];

// From the discovery run: a1 = t0, b1 = t1^-1, a2 = t1^-1 t0 t3,
// b2 = t3^-1 t2.  All four have trace 2 + 2*sqrt(2) (the systole), the
// homology determinant is 1, and [a1,b1][a2,b2] = -I.
const OCT_A1: &[u8] = &[0];
const OCT_B1: &[u8] = &[3];
const OCT_A2: &[u8] = &[3, 0, 6];
const OCT_B2: &[u8] = &[7, 4];

/// The eight side-pairing translations of the regular octagon: `t_k`
/// translates by twice the apothem along the direction `k * pi / 4` through
/// the center `i`; opposite sides are identified.
pub fn octagon_translations() -> [Mat2; 4] {
    // cosh(apothem) = cot(pi/8) = 1 + sqrt 2.
    let ch = 1.0 + 2f64.sqrt();
    let sh = (ch * ch - 1.0).sqrt();
    let g = Mat2::new(ch, sh, sh, ch); // translation by 2*apothem through i
    let mut out = [Mat2::IDENTITY; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let r = Mat2::rotation_about_i(k as f64 * std::f64::consts::FRAC_PI_4);
        *slot = r.mul(&g).mul(&r.inverse());
    }
    out
}

/// Evaluate a word over the octagon translation alphabet.
pub fn octagon_word(word: &[u8]) -> Mat2 {
    let t = octagon_translations();
    let mut m = Mat2::IDENTITY;
    for &l in word {
        let k = (l >> 1) as usize;
        let f = if l & 1 == 0 { t[k] } else { t[k].inverse() };
        m = m.mul(&f);
    }
    m
}

// ---------------------------------------------------------------------------
// Fenchel-Nielsen data and structures
// ---------------------------------------------------------------------------

/// Length and twist parameters over the frozen genus-2 pants decomposition.
///
/// Index 0 is the separating curve (class of `[a1, b1]`), index 1 the first
/// handle curve (class of `a1`), index 2 the second handle curve (class of
/// `a2`).  Twists are in length units along the pants curve; increasing a
/// twist post-composes the gluing with translation toward the attracting
/// fixed point of the pants-curve holonomy (the frozen positive direction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FNCoordinates {
    pub genus: u32,
    pub lengths: Vec<f64>,
    pub twists: Vec<f64>,
}

impl FNCoordinates {
    pub fn genus2(lengths: [f64; 3], twists: [f64; 3]) -> FNCoordinates {
        FNCoordinates {
            genus: 2,
            lengths: lengths.to_vec(),
            twists: twists.to_vec(),
        }
    }

    fn validate(&self) -> Result<(), FuchsianError> {
        if self.genus != 2 {
            return Err(FuchsianError::UnsupportedGenus(self.genus));
        }
        let n = 3 * self.genus as usize - 3;
        if self.lengths.len() != n || self.twists.len() != n {
            return Err(FuchsianError::InvalidCoordinates(format!(
                "expected {n} lengths and twists"
            )));
        }
        for &l in &self.lengths {
            if !(l.is_finite() && l > 0.0) {
                return Err(FuchsianError::InvalidCoordinates(format!(
                    "cuff length {l} must be positive and finite"
                )));
            }
        }
        for &t in &self.twists {
            if !t.is_finite() {
                return Err(FuchsianError::InvalidCoordinates(
                    "twists must be finite".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A marked hyperbolic structure: a labeled discrete faithful representation
/// together with a per-structure geodesic length cache.
#[derive(Debug)]
pub struct HyperbolicStructure {
    label: String,
    presentation: Presentation,
    rep: Representation,
    lengths: RwLock<HashMap<Word, f64>>,
}

impl HyperbolicStructure {
    /// Wrap a representation that already satisfies the relator.
    pub fn from_representation(
        label: impl Into<String>,
        rep: Representation,
    ) -> Result<HyperbolicStructure, FuchsianError> {
        let residual = rep.relator_residual();
        let bound = tol::RELATOR_RESIDUAL_MAX;
        if residual > bound {
            return Err(FuchsianError::ConstructionFailure { residual });
        }
        Ok(HyperbolicStructure {
            label: label.into(),
            presentation: Presentation::new(rep.genus()),
            rep,
            lengths: RwLock::new(HashMap::new()),
        })
    }

    /// The regular-octagon surface: the genus-2 structure with maximal
    /// symmetry whose standard generators all have length
    /// `2 * arccosh(1 + sqrt 2)`.
    pub fn octagon() -> HyperbolicStructure {
        let gens: Vec<Mat2> = OCTAGON_GENERATOR_WORDS
            .iter()
            .map(|w| octagon_word(w))
            .collect();
        let rep = Representation::new(2, gens);
        let residual = rep.relator_residual();
        assert!(
            residual <= tol::OCTAGON_RESIDUAL_MAX,
            "octagon relator residual {residual:.3e}"
        );
        HyperbolicStructure {
            label: "octagon".into(),
            presentation: Presentation::new(2),
            rep,
            lengths: RwLock::new(HashMap::new()),
        }
    }

    /// The standard structure for a genus: only genus 2 is provided.
    pub fn standard(genus: u32) -> Result<HyperbolicStructure, FuchsianError> {
        if genus == 2 {
            Ok(Self::octagon())
        } else {
            Err(FuchsianError::UnsupportedGenus(genus))
        }
    }

    /// Build a genus-2 structure from Fenchel–Nielsen data over the frozen
    /// pants decomposition.  Two pairs of pants with cuff data
    /// `(l1, l1, l0)` and `(l2, l2, l0)` are closed into one-holed tori by
    /// the handle gluings and joined along the separating curve.
    pub fn from_fenchel_nielsen(
        label: impl Into<String>,
        fnc: &FNCoordinates,
    ) -> Result<HyperbolicStructure, FuchsianError> {
        fnc.validate()?;
        let l_sep = fnc.lengths[0];
        let (a1, b1) = holed_torus(fnc.lengths[1], l_sep, fnc.twists[1])?;
        let (x2, y2) = holed_torus(fnc.lengths[2], l_sep, fnc.twists[2])?;
        let w1 = commutator(&a1, &b1);
        let w2 = commutator(&x2, &y2);
        // Conjugate the second torus so that [a2, b2] = [a1, b1]^{-1}.
        let g = axis_frame_reversed(&w1)?
            .mul(&Mat2::diag_translation(fnc.twists[0]))
            .mul(&axis_frame(&w2)?.inverse());
        let a2 = g.mul(&x2).mul(&g.inverse()).renormalized();
        let b2 = g.mul(&y2).mul(&g.inverse()).renormalized();
        let rep = Representation::new(2, vec![a1, b1, a2, b2]);
        let structure = Self::from_representation(label, rep)?;
        // Cuff length round trip: the three pants curves must reproduce the
        // requested lengths from their traces.
        let p = &structure.presentation;
        let cuffs = [
            (p.parse_word("a1 b1 A1 B1").unwrap(), l_sep),
            (p.parse_word("a1").unwrap(), fnc.lengths[1]),
            (p.parse_word("a2").unwrap(), fnc.lengths[2]),
        ];
        for (w, want) in cuffs {
            let got = structure.word_length(&w)?;
            if ((got - want) / want).abs() > tol::ROUNDTRIP_REL_TOL {
                return Err(FuchsianError::ConstructionFailure {
                    residual: (got - want).abs(),
                });
            }
        }
        Ok(structure)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn representation(&self) -> &Representation {
        &self.rep
    }

    pub fn genus(&self) -> u32 {
        self.rep.genus()
    }

    /// Geodesic length of the free homotopy class of a word (no caching).
    pub fn word_length(&self, w: &Word) -> Result<f64, FuchsianError> {
        trace_to_length(self.rep.evaluate(w).trace())
    }

    /// Geodesic length of a curve class, cached per structure.
    pub fn geodesic_length(&self, c: &CurveClass) -> Result<f64, FuchsianError> {
        if let Some(&l) = self.lengths.read().unwrap().get(c.word()) {
            return Ok(l);
        }
        let l = self.word_length(c.word())?;
        self.lengths.write().unwrap().insert(c.word().clone(), l);
        Ok(l)
    }

    /// Length together with a conservative forward error bound from the
    /// letter count and entry growth of the matrix product.
    pub fn length_with_error(&self, c: &CurveClass) -> Result<(f64, f64), FuchsianError> {
        let m = self.rep.evaluate(c.word());
        let t = m.trace();
        let l = trace_to_length(t)?;
        // Each of the n multiplications contributes a few ulps relative to
        // the running entry magnitude; arccosh differentiates to
        // 2 / sqrt(t^2 - 4) in the trace.
        let n = c.word().len() as f64;
        let entry_err = 8.0 * n * f64::EPSILON * m.max_entry().max(1.0);
        let dl_dt = 2.0 / ((t * t - 4.0).max(f64::MIN_POSITIVE)).sqrt();
        Ok((l, entry_err * dl_dt))
    }

    /// Axis of the class representative in the base frame.
    pub fn axis(&self, c: &CurveClass) -> Result<Axis, FuchsianError> {
        Axis::of(&self.rep.evaluate(c.word()))
    }

    /// Pull the structure back along an automorphism given by generator
    /// images: the new structure represents generator `x` by the matrix of
    /// `images[x]`.  Used for marking-equivariance checks.
    pub fn pullback(
        &self,
        label: impl Into<String>,
        images: &[Word],
    ) -> Result<HyperbolicStructure, FuchsianError> {
        let gens: Vec<Mat2> = images.iter().map(|w| self.rep.evaluate(w)).collect();
        HyperbolicStructure::from_representation(label.into(), Representation::new(self.genus(), gens))
    }
}

/// Commutator `m n m^-1 n^-1`.
pub fn commutator(m: &Mat2, n: &Mat2) -> Mat2 {
    m.mul(n).mul(&m.inverse()).mul(&n.inverse())
}

/// Matrices (X, Y) for a pair of pants with cuff lengths `(l1, l2, l3)`:
/// X and Y are the first two boundary holonomies, the third is `(XY)^-1`.
/// All three traces are negative (the discrete pants convention); X has the
/// imaginary axis as its axis, Y an axis over the positive reals, and the
/// convex core lies to the right of every oriented cuff axis.
fn pants_matrices(l1: f64, l2: f64, l3: f64) -> (Mat2, Mat2) {
    let p = -(l1 / 2.0).exp();
    let y = -2.0 * (l2 / 2.0).cosh();
    let z = -2.0 * (l3 / 2.0).cosh();
    let x_mat = Mat2::new(p, 0.0, 0.0, 1.0 / p);
    let a = (p * z - y) / (p * p - 1.0);
    let d = y - a;
    let b = a * d - 1.0;
    let y_mat = Mat2::new(a, b, 1.0, d);
    (x_mat, y_mat)
}

/// Close a pants with cuffs `(l, l, boundary)` into a one-holed torus by
/// gluing the two l-cuffs with the given twist.  Returns the handle
/// generators (x, t) of the torus; its boundary is `t^-1 x t x^-1`, of
/// length `boundary`.
fn holed_torus(l: f64, boundary: f64, twist: f64) -> Result<(Mat2, Mat2), FuchsianError> {
    let (x, y) = pants_matrices(l, l, boundary);
    let t = axis_frame_reversed(&x)?
        .mul(&Mat2::diag_translation(twist))
        .mul(&axis_frame(&y)?.inverse());
    Ok((x, t.renormalized()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_algebra_basics() {
        let m = Mat2::new(2.0, 1.0, 1.0, 1.0);
        let id = m.mul(&m.inverse());
        assert!(id.residual_to_unit() < 1e-15);
        assert!((m.det() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_fixes_center() {
        let r = Mat2::rotation_about_i(0.7);
        let i = Hp::new(0.0, 1.0);
        let img = i.transform(&r);
        assert!(i.dist(&img) < 1e-12);
        assert!((r.det() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn translation_length_matches_trace() {
        let t = Mat2::diag_translation(1.8);
        assert!((trace_to_length(t.trace()).unwrap() - 1.8).abs() < 1e-12);
        let h = Mat2::horizontal_translation(2.5);
        assert!((trace_to_length(h.trace()).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn axis_of_horizontal_translation() {
        let h = Mat2::horizontal_translation(2.0);
        let axis = Axis::of(&h).unwrap();
        assert!((axis.attracting.value() - 1.0).abs() < 1e-12);
        assert!((axis.repelling.value() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn linking_detects_crossing() {
        // Unit half-circle (-1, 1) vs vertical axis (0, inf): linked.
        let h = Mat2::horizontal_translation(2.0);
        let v = Mat2::diag_translation(2.0);
        let ah = Axis::of(&h).unwrap();
        let av = Axis::of(&v).unwrap();
        assert_eq!(axes_linked(&ah, &h, &av, &v), Linking::Linked);
        // Two disjoint half-circles: unlinked.
        let shift = Mat2::new(1.0, 5.0, 0.0, 1.0); // z -> z + 5
        let h2 = shift.mul(&h).mul(&shift.inverse());
        let ah2 = Axis::of(&h2).unwrap();
        assert_eq!(axes_linked(&ah, &h, &ah2, &h2), Linking::Unlinked);
    }

    #[test]
    fn axis_frame_diagonalizes() {
        let m = Mat2::new(3.0, 2.0, 4.0, 3.0); // trace 6, det 1
        let s = axis_frame(&m).unwrap();
        let d = s.inverse().mul(&m).mul(&s);
        assert!(d.b.abs() < 1e-9 && d.c.abs() < 1e-9);
        assert!(d.a.abs() > d.d.abs()); // attracting eigenvalue on top
        assert!((s.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn translate_along_axis_commutes() {
        let m = Mat2::new(3.0, 2.0, 4.0, 3.0);
        let t = translate_along_axis(&m, 0.9).unwrap();
        let comm = t.mul(&m).mul(&t.inverse());
        let diff = (comm.a - m.a)
            .abs()
            .max((comm.b - m.b).abs())
            .max((comm.c - m.c).abs())
            .max((comm.d - m.d).abs());
        assert!(diff < 1e-9, "translation along axis must commute: {diff}");
    }

    #[test]
    fn octagon_residual_and_lengths() {
        let s = HyperbolicStructure::octagon();
        assert!(s.representation().relator_residual() <= tol::OCTAGON_RESIDUAL_MAX);
        let expected = 2.0 * arccosh(1.0 + 2f64.sqrt());
        let p = s.presentation().clone();
        for g in ["a1", "b1", "a2", "b2"] {
            let w = p.parse_word(g).unwrap();
            let l = s.word_length(&w).unwrap();
            assert!(
                (l - expected).abs() < 1e-9,
                "generator {g} length {l} vs {expected}"
            );
        }
        assert!((expected - 3.0571).abs() < 1e-3);
    }

    #[test]
    fn octagon_short_spectrum_is_hyperbolic() {
        let s = HyperbolicStructure::octagon();
        let margin = s.representation().short_spectrum_margin(5);
        assert!(margin > 1e-6, "short spectrum margin {margin}");
    }

    #[test]
    fn pants_traces_match_cuffs() {
        let (x, y) = pants_matrices(2.0, 2.5, 3.0);
        assert!((trace_to_length(x.trace()).unwrap() - 2.0).abs() < 1e-12);
        assert!((trace_to_length(y.trace()).unwrap() - 2.5).abs() < 1e-12);
        let xy = x.mul(&y);
        assert!((trace_to_length(xy.trace()).unwrap() - 3.0).abs() < 1e-10);
        assert!(x.trace() < -2.0 && y.trace() < -2.0 && xy.trace() < -2.0);
    }

    #[test]
    fn holed_torus_boundary_length() {
        let (x, t) = holed_torus(2.2, 3.4, 0.3).unwrap();
        let boundary = commutator(&x, &t);
        assert!((trace_to_length(boundary.trace()).unwrap() - 3.4).abs() < 1e-9);
    }

    #[test]
    fn fn_round_trip() {
        let fnc = FNCoordinates::genus2([3.4, 2.2, 2.6], [0.25, -0.4, 0.7]);
        let s = HyperbolicStructure::from_fenchel_nielsen("fn-test", &fnc).unwrap();
        assert!(s.representation().relator_residual() <= tol::RELATOR_RESIDUAL_MAX);
        let p = s.presentation().clone();
        let sep = p.parse_word("a1 b1 A1 B1").unwrap();
        assert!((s.word_length(&sep).unwrap() - 3.4).abs() / 3.4 < tol::ROUNDTRIP_REL_TOL);
        assert!((s.word_length(&p.parse_word("a1").unwrap()).unwrap() - 2.2).abs() / 2.2
            < tol::ROUNDTRIP_REL_TOL);
        assert!((s.word_length(&p.parse_word("a2").unwrap()).unwrap() - 2.6).abs() / 2.6
            < tol::ROUNDTRIP_REL_TOL);
    }

    #[test]
    fn fn_structure_is_discrete_to_short_depth() {
        let fnc = FNCoordinates::genus2([3.4, 2.2, 2.6], [0.25, -0.4, 0.7]);
        let s = HyperbolicStructure::from_fenchel_nielsen("fn-test", &fnc).unwrap();
        let margin = s.representation().short_spectrum_margin(5);
        assert!(margin > 1e-6, "short spectrum margin {margin}");
    }

    #[test]
    fn twist_changes_geometry_but_not_cuffs() {
        let f0 = FNCoordinates::genus2([3.0, 2.4, 2.8], [0.0, 0.0, 0.0]);
        let f1 = FNCoordinates::genus2([3.0, 2.4, 2.8], [0.6, 0.0, 0.0]);
        let s0 = HyperbolicStructure::from_fenchel_nielsen("t0", &f0).unwrap();
        let s1 = HyperbolicStructure::from_fenchel_nielsen("t1", &f1).unwrap();
        let p = s0.presentation().clone();
        let cuff = p.parse_word("a1").unwrap();
        assert!(
            (s0.word_length(&cuff).unwrap() - s1.word_length(&cuff).unwrap()).abs() < 1e-9
        );
        // A curve crossing the separating curve must change length.
        let crossing = p.parse_word("b1 b2").unwrap();
        let d = (s0.word_length(&crossing).unwrap() - s1.word_length(&crossing).unwrap()).abs();
        assert!(d > 1e-6, "twist should move transversal lengths, moved {d}");
    }

    #[test]
    fn lengths_are_conjugation_invariant() {
        let s = HyperbolicStructure::octagon();
        let p = s.presentation().clone();
        let w = p.parse_word("a1 b2 A2").unwrap();
        let v = p.parse_word("b1 a2").unwrap();
        let conj = p.conjugate(&w, &v);
        let l1 = s.word_length(&w).unwrap();
        let l2 = s.word_length(&conj).unwrap();
        assert!((l1 - l2).abs() < 1e-9 * l1.max(1.0));
    }

    #[test]
    fn non_hyperbolic_is_reported() {
        let s = HyperbolicStructure::octagon();
        assert!(matches!(
            s.word_length(&Word::identity()),
            Err(FuchsianError::NonHyperbolicElement { .. })
        ));
    }

    #[test]
    fn unsupported_genus_is_an_error() {
        assert!(matches!(
            HyperbolicStructure::standard(3),
            Err(FuchsianError::UnsupportedGenus(3))
        ));
    }
}
