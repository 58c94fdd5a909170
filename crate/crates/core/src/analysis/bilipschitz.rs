use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::sphere_distance_raw;

/// Resolutions of the `(a, b, α)` scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScanGrid {
    pub na: usize,
    pub nb: usize,
    pub nalpha: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub ratio: f64,
}

/// A limit check near a degenerate corner of the parameter box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub ratio: f64,
    pub target: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiLipschitzReport {
    pub grid: ScanGrid,
    pub cutoff: f64,
    pub pairs_scanned: usize,
    pub pairs_skipped: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: ScanPoint,
    pub argmax: ScanPoint,
    pub checkpoints: Vec<Checkpoint>,
    /// Grid points with ratio outside `(0, 1)`, at most 16.
    pub counterexamples: Vec<ScanPoint>,
    /// `0 < min ≤ max < 1` and no counterexamples.
    pub bounds_hold: bool,
}

/// `d(f p, f q) / d(p, q)` for the halving map `f` and the pair
/// `p = (π/2 − a, 0)`, `q = (π/2 − b, α)`; `None` when `d(p, q) ≤ cutoff`.
pub fn halving_ratio(a: f64, b: f64, alpha: f64, cutoff: f64) -> Option<f64> {
    let (pp, qp) = (FRAC_PI_2 - a, FRAC_PI_2 - b);
    let d = sphere_distance_raw(pp, 0.0, qp, alpha);
    if d <= cutoff {
        return None;
    }
    Some(sphere_distance_raw(pp / 2.0, 0.0, qp / 2.0, alpha) / d)
}

fn checkpoint(name: &str, a: f64, b: f64, alpha: f64) -> Checkpoint {
    let ratio = halving_ratio(a, b, alpha, 0.0).expect("checkpoint pairs are distinct");
    Checkpoint {
        name: name.into(),
        a,
        b,
        alpha,
        ratio,
        target: 0.5,
        deviation: (ratio - 0.5).abs(),
    }
}

/// Fixed probes: both points approaching the equator along a meridian, both
/// approaching the pole, and the equator–pole pair.
fn checkpoints() -> Vec<Checkpoint> {
    vec![
        checkpoint("low1", 0.0, 1e-4, 0.0),
        checkpoint("low2", FRAC_PI_2 - 2e-4, FRAC_PI_2 - 1e-4, 1.0),
        checkpoint("case3", 0.0, FRAC_PI_2, 0.0),
    ]
}

/// Scans `a_i = i(π/2)/N_a`, `b = a + j(π/2 − a)/N_b`, `α_l = 2πl/N_α`.
pub fn bilipschitz_scan(grid: ScanGrid, cutoff: f64) -> Result<BiLipschitzReport> {
    if grid.na < 8 || grid.nb < 8 || grid.nalpha < 8 {
        return Err(Error::Invalid(format!(
            "scan resolutions must be at least 8, got {grid:?}"
        )));
    }
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::Invalid(format!(
            "cutoff must be positive, got {cutoff}"
        )));
    }
    struct Acc {
        scanned: usize,
        skipped: usize,
        min: Option<ScanPoint>,
        max: Option<ScanPoint>,
        bad: Vec<ScanPoint>,
    }
    let rows: Vec<Acc> = (0..=grid.na)
        .into_par_iter()
        .map(|i| {
            let a = i as f64 * FRAC_PI_2 / grid.na as f64;
            let mut acc = Acc {
                scanned: 0,
                skipped: 0,
                min: None,
                max: None,
                bad: Vec::new(),
            };
            for j in 0..=grid.nb {
                let b = a + j as f64 * (FRAC_PI_2 - a) / grid.nb as f64;
                for l in 0..grid.nalpha {
                    let alpha = TAU * l as f64 / grid.nalpha as f64;
                    let Some(ratio) = halving_ratio(a, b, alpha, cutoff) else {
                        acc.skipped += 1;
                        continue;
                    };
                    acc.scanned += 1;
                    let p = ScanPoint { a, b, alpha, ratio };
                    if acc.min.is_none_or(|m| ratio < m.ratio) {
                        acc.min = Some(p);
                    }
                    if acc.max.is_none_or(|m| ratio > m.ratio) {
                        acc.max = Some(p);
                    }
                    if !(ratio > 0.0 && ratio < 1.0) && acc.bad.len() < 16 {
                        acc.bad.push(p);
                    }
                }
            }
            acc
        })
        .collect();
    // sequential merge in row order keeps ties deterministic
    let mut scanned = 0;
    let mut skipped = 0;
    let mut min: Option<ScanPoint> = None;
    let mut max: Option<ScanPoint> = None;
    let mut bad = Vec::new();
    for r in rows {
        scanned += r.scanned;
        skipped += r.skipped;
        if let Some(p) = r.min {
            if min.is_none_or(|m| p.ratio < m.ratio) {
                min = Some(p);
            }
        }
        if let Some(p) = r.max {
            if max.is_none_or(|m| p.ratio > m.ratio) {
                max = Some(p);
            }
        }
        bad.extend(r.bad);
    }
    bad.truncate(16);
    let (argmin, argmax) = match (min, max) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Invalid("cutoff excludes every grid pair".into())),
    };
    Ok(BiLipschitzReport {
        grid,
        cutoff,
        pairs_scanned: scanned,
        pairs_skipped: skipped,
        min_ratio: argmin.ratio,
        max_ratio: argmax.ratio,
        bounds_hold: bad.is_empty()
            && argmin.ratio > 0.0
            && argmin.ratio <= argmax.ratio
            && argmax.ratio < 1.0,
        argmin,
        argmax,
        checkpoints: checkpoints(),
        counterexamples: bad,
    })
}
