//! A desk-scale laboratory for closed curves on hyperbolic surfaces.
//!
//! The crate builds explicit genus-2 hyperbolic surfaces, represents free
//! homotopy classes of closed curves as words in the fundamental group,
//! computes geodesic lengths and geometric intersection numbers from the
//! matrix representation, acts on curves by Dehn-twist generators of the
//! mapping class group, and runs counting experiments whose growth rates
//! are compared against polynomial and exponential laws.
//!
//! Module map:
//! - [`words`]: surface-group words, reduction, conjugacy canonical forms.
//! - [`fuchsian`]: discrete matrix representations; the regular-octagon
//!   surface and Fenchel–Nielsen style constructions; geodesic lengths.
//! - [`mcg`]: mapping-class-group action by twist automorphisms.
//! - [`intersection`]: geometric intersection and self-intersection numbers
//!   via linked axis pairs; filling certification by face tracing.
//! - [`dehn_thurston`]: pants-decomposition coordinates for multicurves and
//!   regularity probes (Lipschitz, convexity).
//! - [`counting`]: orbit enumeration, simple/multicurve counts, power-law
//!   fits, and machine-readable reports.
//! - [`thurston`]: the asymmetric length-ratio metric, distance lower
//!   bounds, and metric-ball orbit counts.
//! - [`cache`]: append-only length caches with integrity checksums.

pub mod cache;
pub mod counting;
pub mod dd;
pub mod dehn_thurston;
pub mod fuchsian;
pub mod intersection;
pub mod mcg;
pub mod thurston;
pub mod tol;
pub mod words;

pub use fuchsian::{FNCoordinates, HyperbolicStructure, Mat2, Representation};
pub use words::{CurveClass, Presentation, Word};
