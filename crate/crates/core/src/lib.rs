//! Numerical toolkit for Kreĭn–Feller operators `-Δ_μ` on model Riemannian
//! manifolds.
//!
//! The crate builds finite measures (Dirac combinations on the circle,
//! invariant measures of an iterated function system on the upper
//! hemisphere, graph self-similar measures on the flat torus), discretizes
//! the operator they define on circle domains, and evolves linear and
//! semi-linear wave, heat and Schrödinger equations in the resulting
//! eigenbasis.
//!
//! Module map:
//!
//! * [`geometry`]: chart points and distances on `S¹`, `S²₊`, `T²`.
//! * [`measure`]: atomic, IFS and GIFS measures and ball-mass queries.
//! * [`spectral`]: hat-function assembly and the generalized eigensolver.
//! * [`evolution`]: closed-form-in-time modal evolution and norms.
//! * [`semilinear`]: Picard iteration for Lipschitz nonlinearities.
//! * [`analysis`]: dimension estimates, bi-Lipschitz scans, graph checks.
//! * [`oracle`]: closed-form eigenpairs and solutions on the circle.
//! * [`io`]: CSV/JSON artifact formats.
//! * [`cli`]: problem specs and the `kf` subcommands.

// NaN-rejecting `!(x > 0.0)` guards and index loops over paired arrays are
// deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod io;
pub mod measure;
pub mod numeric;
pub mod oracle;
pub mod semilinear;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
