//! Numerical checks of the standing hypotheses: the `L∞`-dimension gate,
//! bi-Lipschitz bounds of the halving map, GIFS connectivity and upper
//! s-regularity.

mod bilipschitz;
mod dimension;
mod graph;
mod regularity;

pub use bilipschitz::{
    bilipschitz_scan, halving_ratio, BiLipschitzReport, Checkpoint, ScanGrid, ScanPoint,
};
pub use dimension::{atom_ball_masses, estimate_dim_infinity, BallMasses, DimensionEstimate};
pub use graph::{gifs_strongly_connected, is_closed_walk, strongly_connected, Connectivity};
pub use regularity::{s_regularity_check, RegularityReport, Violation};
