//! Forcing evaluation and Simpson quadrature of Duhamel integrals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interpolation used between the samples of a sampled forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Four-point Lagrange, exact for cubics.
    Cubic,
}

/// Right-hand side `f(t)` in coefficient form.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingTerm {
    Zero,
    Constant(Vec<Complex64>),
    Sampled {
        times: Vec<f64>,
        values: Vec<Vec<Complex64>>,
        interpolation: Interpolation,
    },
}

impl ForcingTerm {
    pub fn sampled(
        times: Vec<f64>,
        values: Vec<Vec<Complex64>>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::Invalid(format!(
                "sampled forcing needs ≥ 2 samples and one value row per time ({} times, {} rows)",
                times.len(),
                values.len()
            )));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Invalid(
                "forcing sample times must be strictly increasing".into(),
            ));
        }
        let width = values[0].len();
        if values.iter().any(|v| v.len() != width) {
            return Err(Error::Invalid("forcing rows have different lengths".into()));
        }
        Ok(ForcingTerm::Sampled {
            times,
            values,
            interpolation,
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ForcingTerm::Zero)
    }

    /// Checks the coefficient count and, for samples, coverage of `[0, t_end]`.
    pub fn validate(&self, modes: usize, t_end: f64) -> Result<()> {
        match self {
            ForcingTerm::Zero => Ok(()),
            ForcingTerm::Constant(v) => {
                if v.len() != modes {
                    return Err(Error::Invalid(format!(
                        "forcing has {} modes, basis has {modes}",
                        v.len()
                    )));
                }
                Ok(())
            }
            ForcingTerm::Sampled { times, values, .. } => {
                if values[0].len() != modes {
                    return Err(Error::Invalid(format!(
                        "forcing has {} modes, basis has {modes}",
                        values[0].len()
                    )));
                }
                let slack = 1e-12 * t_end.abs().max(1.0);
                if times[0] > slack || *times.last().unwrap() < t_end - slack {
                    return Err(Error::Invalid(format!(
                        "forcing samples span [{}, {}], need [0, {t_end}]",
                        times[0],
                        times.last().unwrap()
                    )));
                }
                Ok(())
            }
        }
    }

    /// Coefficient `k` at time `t`.
    pub fn mode_at(&self, k: usize, t: f64) -> Complex64 {
        match self {
            ForcingTerm::Zero => Complex64::new(0.0, 0.0),
            ForcingTerm::Constant(v) => v[k],
            ForcingTerm::Sampled {
                times,
                values,
                interpolation,
            } => interpolate(times, t, *interpolation, |q| values[q][k]),
        }
    }

    /// All coefficients at time `t`.
    pub fn at(&self, modes: usize, t: f64) -> Vec<Complex64> {
        (0..modes).map(|k| self.mode_at(k, t)).collect()
    }

    pub fn describe(&self) -> String {
        match self {
            ForcingTerm::Zero => "zero".into(),
            ForcingTerm::Constant(_) => "constant".into(),
            ForcingTerm::Sampled {
                times,
                interpolation,
                ..
            } => {
                format!("sampled ({} samples, {interpolation:?})", times.len())
            }
        }
    }
}

fn interpolate(
    times: &[f64],
    t: f64,
    how: Interpolation,
    val: impl Fn(usize) -> Complex64,
) -> Complex64 {
    let n = times.len();
    let q = times.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
    match how {
        Interpolation::Linear => {
            let (t0, t1) = (times[q], times[q + 1]);
            let s = (t - t0) / (t1 - t0);
            val(q) * (1.0 - s) + val(q + 1) * s
        }
        Interpolation::Cubic => {
            if n < 4 {
                return interpolate(times, t, Interpolation::Linear, val);
            }
            let start = q.saturating_sub(1).min(n - 4);
            let idx = [start, start + 1, start + 2, start + 3];
            let mut acc = Complex64::new(0.0, 0.0);
            for &i in &idx {
                let mut w = 1.0;
                for &j in &idx {
                    if j != i {
                        w *= (t - times[j]) / (times[i] - times[j]);
                    }
                }
                acc += val(i) * w;
            }
            acc
        }
    }
}

/// Uniform grid `t_s = T s / steps`, `s = 0..=steps`.
pub fn time_grid(t_end: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Invalid(format!(
            "final time must be positive, got {t_end}"
        )));
    }
    if steps < 1 {
        return Err(Error::Invalid("need at least one time step".into()));
    }
    let mut g: Vec<f64> = (0..=steps)
        .map(|s| t_end * s as f64 / steps as f64)
        .collect();
    g[steps] = t_end;
    Ok(g)
}

/// Forcing of one mode sampled at the grid nodes and interval midpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSamples {
    pub nodes: Vec<Complex64>,
    pub mids: Vec<Complex64>,
}

impl ModeSamples {
    pub fn new(f: &ForcingTerm, k: usize, grid: &[f64]) -> Self {
        Self::shifted(f, k, grid, 0.0)
    }

    /// Samples of `τ ↦ f(t0 + τ)`.
    pub fn shifted(f: &ForcingTerm, k: usize, grid: &[f64], t0: f64) -> Self {
        let nodes = grid.iter().map(|&t| f.mode_at(k, t0 + t)).collect();
        let mids = grid
            .windows(2)
            .map(|w| f.mode_at(k, t0 + 0.5 * (w[0] + w[1])))
            .collect();
        ModeSamples { nodes, mids }
    }

    /// Node values only; midpoints by Lagrange interpolation through (up
    /// to) four neighbouring nodes.
    pub fn from_nodes(grid: &[f64], nodes: Vec<Complex64>) -> Self {
        let how = if grid.len() >= 4 {
            Interpolation::Cubic
        } else {
            Interpolation::Linear
        };
        let mids = grid
            .windows(2)
            .map(|w| interpolate(grid, 0.5 * (w[0] + w[1]), how, |q| nodes[q]))
            .collect();
        ModeSamples { nodes, mids }
    }

    pub fn add(&mut self, other: &ModeSamples) {
        for (a, b) in self.nodes.iter_mut().zip(&other.nodes) {
            *a += b;
        }
        for (a, b) in self.mids.iter_mut().zip(&other.mids) {
            *a += b;
        }
    }
}

/// `∫₀^{t_s} kernel(t_s − τ) γ(τ) dτ` for every grid time `t_s`, by Simpson's
/// rule on each grid interval (with its midpoint as the inner node).
pub fn duhamel(
    grid: &[f64],
    gamma: &ModeSamples,
    kernel: impl Fn(f64) -> Complex64,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for s in 1..grid.len() {
        let ts = grid[s];
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..s {
            let (a, b) = (grid[j], grid[j + 1]);
            let m = 0.5 * (a + b);
            let h = b - a;
            acc += (kernel(ts - a) * gamma.nodes[j]
                + kernel(ts - m) * gamma.mids[j] * 4.0
                + kernel(ts - b) * gamma.nodes[j + 1])
                * (h / 6.0);
        }
        out[s] = acc;
    }
    out
}
