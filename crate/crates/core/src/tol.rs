//! Numeric tolerances used across the crate, gathered in one place.
//!
//! Every constant documents what it guards and why the value is safe at the
//! scale this laboratory operates at (genus 2, curve lengths up to a few
//! hundred, double-precision arithmetic throughout with an optional
//! double-double fallback for boundary predicates).

/// Maximum max-entry deviation of the represented relator from plus or minus
/// the identity for a structure built from length/twist data.  The gluing
/// construction satisfies the relator exactly in exact arithmetic; the
/// residual only tracks floating-point error, which stays far below this for
/// moderate cuff lengths.
pub const RELATOR_RESIDUAL_MAX: f64 = 1e-9;

/// Residual bound for the regular-octagon surface, whose matrices are
/// closed-form algebraic numbers; eight multiplications of entries of size
/// about 6 keep the error near 1e-14.
pub const OCTAGON_RESIDUAL_MAX: f64 = 1e-12;

/// Relative agreement required when a cuff length is recovered from a trace
/// after a build round trip.
pub const ROUNDTRIP_REL_TOL: f64 = 1e-6;

/// Two boundary points of the hyperbolic plane closer than this (in the
/// projective angle coordinate) are treated as numerically coincident, which
/// triggers the extended-precision fallback rather than a guess.
pub const ENDPOINT_ANGLE_TOL: f64 = 1e-9;

/// Positions of crossings along a closed geodesic are deduplicated at this
/// resolution (absolute, in length units along the curve).  Distinct
/// essential crossings of the curves this laboratory handles are separated
/// by far more than this.
pub const CROSSING_POSITION_TOL: f64 = 1e-7;

/// Traces within this of the parabolic threshold 2 make a length undefined.
pub const HYPERBOLIC_TRACE_MARGIN: f64 = 1e-12;

/// Relative tolerance used when two real numbers produced by length
/// computations are compared for equality in tests and dedup prefilters.
pub const LENGTH_REL_TOL: f64 = 1e-9;

/// Additive slop allowed when checking the triangle inequality of the
/// length-ratio metric; the check is exact up to rounding in logs.
pub const TRIANGLE_SLACK: f64 = 1e-12;

/// Midpoint convexity violations smaller than this are rounding noise.
pub const CONVEXITY_SLACK: f64 = 1e-6;

/// Integral coordinates must round-trip through f64 within this.
pub const INTEGRALITY_TOL: f64 = 1e-9;

/// Lengths of distinct canonical classes that agree within this relative
/// tolerance on every available structure are logged as candidate
/// isospectral pairs instead of being merged.
pub const ISOSPECTRAL_REL_TOL: f64 = 1e-6;

/// A matrix whose off-diagonal entries are below this times its largest
/// entry, in a frame where a reference axis is the imaginary axis, is
/// treated as stabilizing that axis.  Accumulated rounding noise in deck
/// products sits around 1e-12 relative; distinct closed geodesics of the
/// lengths in play never hug each other this closely.
pub const COINCIDENT_AXIS_REL: f64 = 1e-8;
