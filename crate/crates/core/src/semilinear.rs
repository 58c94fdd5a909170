//! Semi-linear equations `∂u = L u + F(u) + f` by Picard iteration on the
//! modal Duhamel representation.
//!
//! The nonlinearity acts on nodal values at the atoms of `μ` (functions in
//! `L²(μ)` are determined there) and is projected back with the measure
//! inner product. When an iteration stagnates, the current time slice is
//! bisected and the solution is continued slice by slice.

use std::collections::VecDeque;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::quadrature::ModeSamples;
use crate::evolution::{evolve_mode, CoefVec, Equation, ForcingTerm, Trajectory};
use crate::spectral::SpectralBasis;

/// Globally Lipschitz nonlinearity applied pointwise at the atoms.
///
/// `Sin` and `Tanh` act on real and imaginary parts separately, which keeps
/// them Lipschitz with constant `|scale|` on complex values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    Linear { c: f64 },
    Sin { scale: f64 },
    Tanh { scale: f64 },
}

impl Nonlinearity {
    pub fn lipschitz(&self) -> f64 {
        match *self {
            Nonlinearity::Linear { c } => c.abs(),
            Nonlinearity::Sin { scale } | Nonlinearity::Tanh { scale } => scale.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.lipschitz() == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lipschitz().is_finite() {
            return Err(Error::Invalid(format!(
                "nonlinearity {self:?} has a non-finite constant"
            )));
        }
        Ok(())
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        match *self {
            Nonlinearity::Linear { c } => z * c,
            Nonlinearity::Sin { scale } => Complex64::new(z.re.sin(), z.im.sin()) * scale,
            Nonlinearity::Tanh { scale } => Complex64::new(z.re.tanh(), z.im.tanh()) * scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    /// Stop once the sup-in-time difference of successive iterates drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial number of slices of `[0, T]`.
    pub time_slices: usize,
    /// Quadrature steps per initial slice.
    pub steps_per_slice: usize,
    /// Slices are not bisected below this many steps.
    #[serde(default = "default_min_steps")]
    pub min_slice_steps: usize,
}

fn default_min_steps() -> usize {
    2
}

impl Default for PicardConfig {
    fn default() -> Self {
        PicardConfig {
            tol: 1e-10,
            max_iter: 50,
            time_slices: 1,
            steps_per_slice: 200,
            min_slice_steps: 2,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::Invalid(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::Invalid("max_iter must be at least 1".into()));
        }
        if self.time_slices < 1 {
            return Err(Error::Invalid("need at least one time slice".into()));
        }
        if self.min_slice_steps < 1 {
            return Err(Error::Invalid("min_slice_steps must be at least 1".into()));
        }
        if self.steps_per_slice < self.min_slice_steps {
            return Err(Error::Invalid(format!(
                "steps_per_slice {} is below min_slice_steps {}",
                self.steps_per_slice, self.min_slice_steps
            )));
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.time_slices * self.steps_per_slice
    }
}

/// One successive-difference ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionRatio {
    pub ratio: f64,
    /// `ratio ≥ 1`: no contraction at this step.
    pub flagged: bool,
}

/// Ratios of successive differences; empty for fewer than two iterations.
pub fn contraction_report(history: &[f64]) -> Vec<ContractionRatio> {
    history
        .windows(2)
        .map(|w| {
            let ratio = if w[0] == 0.0 {
                if w[1] == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                w[1] / w[0]
            };
            ContractionRatio {
                ratio,
                flagged: ratio >= 1.0,
            }
        })
        .collect()
}

/// Iteration history on one time slice (including abandoned attempts).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceReport {
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    /// Number of bisections that produced this slice.
    pub depth: usize,
    pub differences: Vec<f64>,
    pub ratios: Vec<ContractionRatio>,
    pub converged: bool,
    /// `‖u − Φ(u)‖` for the accepted iterate; absent for abandoned attempts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardReport {
    pub equation: Equation,
    pub nonlinearity: Nonlinearity,
    pub tol: f64,
    pub slices: Vec<SliceReport>,
    pub bisections: usize,
    pub total_iterations: usize,
}

impl PicardReport {
    /// Largest fixed-point residual over accepted slices.
    pub fn max_fixed_point_residual(&self) -> f64 {
        self.slices
            .iter()
            .filter_map(|s| s.fixed_point_residual)
            .fold(0.0, f64::max)
    }
}

type States = Vec<Vec<Complex64>>;

/// The Duhamel map on one slice, with local time starting at 0.
struct SliceMap<'a> {
    eq: Equation,
    basis: &'a SpectralBasis,
    nonlin: Nonlinearity,
    grid: Vec<f64>,
    external: Vec<ModeSamples>,
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
}

impl SliceMap<'_> {
    /// `Φ(u)`, or the linear solution when `u` is `None`.
    fn apply(&self, u: Option<&States>) -> (States, Option<States>) {
        let n = self.alpha.len();
        let lam = &self.basis.eigenvalues;
        let nonlinear: Option<States> = u.map(|u| {
            u.par_iter()
                .map(|c| {
                    let vals: Vec<Complex64> = self
                        .basis
                        .reconstruct_atoms(c)
                        .into_iter()
                        .map(|z| self.nonlin.apply(z))
                        .collect();
                    self.basis.project_atoms(&vals)
                })
                .collect()
        });
        let per_mode: Vec<(Vec<Complex64>, Option<Vec<Complex64>>)> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut gamma = self.external[k].clone();
                if let Some(fu) = &nonlinear {
                    let nodes = fu.iter().map(|row| row[k]).collect();
                    gamma.add(&ModeSamples::from_nodes(&self.grid, nodes));
                }
                evolve_mode(
                    self.eq,
                    lam[k],
                    self.alpha[k],
                    self.beta[k],
                    Some(&gamma),
                    &self.grid,
                )
            })
            .collect();
        let len = self.grid.len();
        let states = (0..len)
            .map(|s| per_mode.iter().map(|m| m.0[s]).collect())
            .collect();
        let velocities = (self.eq == Equation::Wave).then(|| {
            (0..len)
                .map(|s| per_mode.iter().map(|m| m.1.as_ref().unwrap()[s]).collect())
                .collect()
        });
        (states, velocities)
    }

    /// `sup_s (Σ_{λ>0} λ|Δ|² + Σ_{λ=0} |Δ|²)^{1/2}`.
    fn distance(&self, a: &States, b: &States) -> f64 {
        let lam = &self.basis.eigenvalues;
        a.iter()
            .zip(b)
            .map(|(x, y)| {
                x.iter()
                    .zip(y)
                    .zip(lam.iter())
                    .map(|((p, q), &l)| (if l > 0.0 { l } else { 1.0 }) * (p - q).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

enum Outcome {
    Converged {
        states: States,
        velocities: Option<States>,
    },
    Stalled,
}

fn iterate(map: &SliceMap, cfg: &PicardConfig, report: &mut SliceReport) -> Outcome {
    let (mut u, mut v) = map.apply(None);
    let mut stalls = 0;
    for _ in 0..cfg.max_iter {
        let (next, next_v) = map.apply(Some(&u));
        let d = map.distance(&next, &u);
        if let Some(&prev) = report.differences.last() {
            stalls = if d >= prev { stalls + 1 } else { 0 };
        }
        report.differences.push(d);
        u = next;
        v = next_v;
        if d < cfg.tol {
            let (check, _) = map.apply(Some(&u));
            report.fixed_point_residual = Some(map.distance(&check, &u));
            report.converged = true;
            break;
        }
        if !d.is_finite() || stalls >= 2 {
            break;
        }
    }
    report.ratios = contraction_report(&report.differences);
    if report.converged {
        Outcome::Converged {
            states: u,
            velocities: v,
        }
    } else {
        Outcome::Stalled
    }
}

/// Solves the semi-linear problem with initial data `g` (and velocity `h`
/// for the wave equation), external forcing `f` and nonlinearity `F` on
/// `[0, t_end]`, using a uniform grid of `cfg.total_steps()` steps.
#[allow(clippy::too_many_arguments)]
pub fn picard_solve(
    eq: Equation,
    basis: &SpectralBasis,
    g: &CoefVec,
    h: Option<&CoefVec>,
    f: &ForcingTerm,
    nonlin: Nonlinearity,
    t_end: f64,
    cfg: &PicardConfig,
) -> Result<(Trajectory, PicardReport)> {
    cfg.validate()?;
    nonlin.validate()?;
    let n = basis.len();
    if g.len() != n {
        return Err(Error::Invalid(format!(
            "initial data has {} modes, basis has {n}",
            g.len()
        )));
    }
    match (eq, h) {
        (Equation::Wave, None) => {
            return Err(Error::Invalid(
                "the wave equation needs an initial velocity h".into(),
            ))
        }
        (Equation::Wave, Some(h)) if h.len() != n => {
            return Err(Error::Invalid(format!(
                "initial velocity has {} modes, basis has {n}",
                h.len()
            )))
        }
        (Equation::Heat | Equation::Schrodinger, Some(_)) => {
            return Err(Error::Invalid(format!("{eq:?} takes no initial velocity")))
        }
        _ => {}
    }
    let grid = crate::evolution::time_grid(t_end, cfg.total_steps())?;
    f.validate(n, t_end)?;

    let zero = Complex64::new(0.0, 0.0);
    let mut states: States = vec![g.coeffs.clone()];
    let mut velocities: Option<States> = h.map(|h| vec![h.coeffs.clone()]);
    let mut report = PicardReport {
        equation: eq,
        nonlinearity: nonlin,
        tol: cfg.tol,
        slices: Vec::new(),
        bisections: 0,
        total_iterations: 0,
    };
    let mut queue: VecDeque<(usize, usize, usize)> = (0..cfg.time_slices)
        .map(|i| (i * cfg.steps_per_slice, (i + 1) * cfg.steps_per_slice, 0))
        .collect();

    while let Some((s0, s1, depth)) = queue.pop_front() {
        let t0 = grid[s0];
        let local: Vec<f64> = grid[s0..=s1].iter().map(|t| t - t0).collect();
        let external = (0..n)
            .map(|k| ModeSamples::shifted(f, k, &local, t0))
            .collect();
        let map = SliceMap {
            eq,
            basis,
            nonlin,
            grid: local,
            external,
            alpha: states.last().unwrap().clone(),
            beta: velocities
                .as_ref()
                .map_or(vec![zero; n], |v| v.last().unwrap().clone()),
        };
        let mut slice = SliceReport {
            t_start: t0,
            t_end: grid[s1],
            steps: s1 - s0,
            depth,
            differences: Vec::new(),
            ratios: Vec::new(),
            converged: false,
            fixed_point_residual: None,
        };
        let outcome = iterate(&map, cfg, &mut slice);
        report.total_iterations += slice.differences.len();
        let diagnostics = format!(
            "slice [{}, {}] ({} steps): differences {:?}",
            slice.t_start, slice.t_end, slice.steps, slice.differences
        );
        report.slices.push(slice);
        match outcome {
            Outcome::Converged {
                states: u,
                velocities: v,
            } => {
                states.extend(u.into_iter().skip(1));
                if let (Some(all), Some(v)) = (velocities.as_mut(), v) {
                    all.extend(v.into_iter().skip(1));
                }
            }
            Outcome::Stalled => {
                let steps = s1 - s0;
                if steps / 2 < cfg.min_slice_steps {
                    return Err(Error::NonConvergence(format!(
                        "{diagnostics}; slice cannot be bisected below {} steps",
                        cfg.min_slice_steps
                    )));
                }
                let mid = s0 + steps / 2;
                report.bisections += 1;
                queue.push_front((mid, s1, depth + 1));
                queue.push_front((s0, mid, depth + 1));
            }
        }
    }

    let traj = Trajectory::new(eq, basis.eigenvalues.clone(), grid, states, velocities);
    Ok((traj, report))
}
