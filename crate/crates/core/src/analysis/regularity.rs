use serde::Serialize;

use super::dimension::atom_ball_masses;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    /// Index of the atom at the ball center.
    pub center: usize,
    pub radius: f64,
    pub mass: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub s: f64,
    /// Constant in `μ(B(x, r)) ≤ C r^s`, chosen as `μ(M) r₀^{−s}` so that
    /// the bound is exact at the top of the ladder.
    pub constant: f64,
    /// `t(1 − p) ≥ 1`: the exponent is nonpositive and nothing is scanned.
    pub vacuous: bool,
    pub radii: Vec<f64>,
    pub balls_checked: usize,
    /// First violations found (at most 32), scanning centers then radii.
    pub violations: Vec<Violation>,
    pub violation_count: usize,
}

/// Checks `μ(B(x, r)) ≤ C r^s` with `s = ln(t − tp)/ln c` on atom-centered
/// balls for every radius of the ladder.
pub fn s_regularity_check(
    m: &DiscreteMeasure,
    c: f64,
    p: f64,
    t: u32,
    radii: &[f64],
) -> Result<RegularityReport> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Invalid(format!(
            "contraction c must lie in (0, 1), got {c}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Invalid(format!(
            "probability p must lie in (0, 1), got {p}"
        )));
    }
    if t < 1 {
        return Err(Error::Invalid("t must be at least 1".into()));
    }
    if radii.is_empty() {
        return Err(Error::Invalid("radius ladder is empty".into()));
    }
    let t = t as f64;
    let s = (t - t * p).ln() / c.ln();
    let vacuous = t * (1.0 - p) >= 1.0;
    let constant = m.total_mass() * radii[0].powf(-s);
    let mut report = RegularityReport {
        s,
        constant,
        vacuous,
        radii: radii.to_vec(),
        balls_checked: 0,
        violations: Vec::new(),
        violation_count: 0,
    };
    if vacuous {
        return Ok(report);
    }
    let bm = atom_ball_masses(m, radii)?;
    for (i, row) in bm.masses.iter().enumerate() {
        for (&r, &mass) in radii.iter().zip(row) {
            report.balls_checked += 1;
            let bound = constant * r.powf(s);
            if mass > bound * (1.0 + 1e-12) {
                report.violation_count += 1;
                if report.violations.len() < 32 {
                    report.violations.push(Violation {
                        center: i,
                        radius: r,
                        mass,
                        bound,
                    });
                }
            }
        }
    }
    Ok(report)
}
