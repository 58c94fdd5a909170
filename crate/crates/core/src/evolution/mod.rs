//! Modal evolution of the linear wave, heat and Schrödinger equations.
//!
//! Each coefficient evolves exactly in time; only the Duhamel integrals of
//! the forcing are approximated (Simpson's rule).

pub mod quadrature;

pub use quadrature::{time_grid, ForcingTerm, Interpolation};

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use quadrature::{duhamel, ModeSamples};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Wave,
    Heat,
    Schrodinger,
}

/// Coefficients `a_k` of a function in an eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefVec {
    pub coeffs: Vec<Complex64>,
    pub eigenvalues: Arc<[f64]>,
}

/// The norms of a coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub mu: f64,
    #[serde(rename = "domE")]
    pub dom_e: f64,
    pub dual: f64,
}

impl CoefVec {
    pub fn new(coeffs: Vec<Complex64>, eigenvalues: Arc<[f64]>) -> Result<Self> {
        if coeffs.len() != eigenvalues.len() {
            return Err(Error::Invalid(format!(
                "{} coefficients for {} eigenvalues",
                coeffs.len(),
                eigenvalues.len()
            )));
        }
        Ok(CoefVec {
            coeffs,
            eigenvalues,
        })
    }

    pub fn zeros(eigenvalues: Arc<[f64]>) -> Self {
        CoefVec {
            coeffs: vec![Complex64::new(0.0, 0.0); eigenvalues.len()],
            eigenvalues,
        }
    }

    pub fn unit(eigenvalues: Arc<[f64]>, k: usize) -> Self {
        let mut v = Self::zeros(eigenvalues);
        v.coeffs[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(values: &[f64], eigenvalues: Arc<[f64]>) -> Result<Self> {
        Self::new(
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            eigenvalues,
        )
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    pub fn mu(&self) -> f64 {
        weighted_norm(&self.coeffs, &self.eigenvalues, |_| 1.0)
    }

    pub fn dom_e(&self) -> f64 {
        weighted_norm(&self.coeffs, &self.eigenvalues, |l| l)
    }

    /// Dual norm `√Σ_{λ_k>0} |a_k|²/λ_k`; zero modes are left out.
    pub fn dual(&self) -> f64 {
        weighted_norm(&self.coeffs, &self.eigenvalues, |l| {
            if l > 0.0 {
                1.0 / l
            } else {
                0.0
            }
        })
    }

    /// `√Σ λ_k^α |a_k|²` with `0⁰ = 1`, so `ealpha(0) = mu` and `ealpha(1) = domE`.
    pub fn ealpha(&self, alpha: f64) -> Result<f64> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::Invalid(format!("E_α needs α ≥ 0, got {alpha}")));
        }
        Ok(weighted_norm(&self.coeffs, &self.eigenvalues, |l| {
            l.powf(alpha)
        }))
    }

    pub fn norms(&self) -> Norms {
        Norms {
            mu: self.mu(),
            dom_e: self.dom_e(),
            dual: self.dual(),
        }
    }

    fn check_same(&self, other: &CoefVec) -> Result<()> {
        if self.len() != other.len() || self.eigenvalues != other.eigenvalues {
            return Err(Error::Invalid(
                "coefficient vectors refer to different bases".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &CoefVec) -> Result<CoefVec> {
        self.check_same(other)?;
        Ok(CoefVec {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
            eigenvalues: self.eigenvalues.clone(),
        })
    }

    pub fn scale(&self, s: Complex64) -> CoefVec {
        CoefVec {
            coeffs: self.coeffs.iter().map(|a| a * s).collect(),
            eigenvalues: self.eigenvalues.clone(),
        }
    }
}

fn weighted_norm(a: &[Complex64], lam: &[f64], w: impl Fn(f64) -> f64) -> f64 {
    let terms: Vec<f64> = a
        .iter()
        .zip(lam)
        .map(|(c, &l)| w(l) * c.norm_sqr())
        .collect();
    pairwise_sum(&terms).sqrt()
}

/// Energy of a state: `½‖v‖²_μ + ½‖u‖²_domE` for the wave equation
/// (with velocity `v`), `½‖u‖²_domE` otherwise.
pub fn energy(eq: Equation, u: &[Complex64], v: Option<&[Complex64]>, lam: &[f64]) -> f64 {
    let pot = weighted_norm(u, lam, |l| l).powi(2);
    match (eq, v) {
        (Equation::Wave, Some(v)) => 0.5 * weighted_norm(v, lam, |_| 1.0).powi(2) + 0.5 * pot,
        _ => 0.5 * pot,
    }
}

/// Norm traces at one grid time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormTrace {
    pub mu: f64,
    #[serde(rename = "domE")]
    pub dom_e: f64,
    pub energy: f64,
    /// Wave only: `‖∂_t u‖_μ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity_mu: Option<f64>,
    /// Wave only: dual norm of `∂_t u` (zero modes omitted).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity_dual: Option<f64>,
}

/// Time grid with coefficient snapshots and norm traces.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub equation: Equation,
    pub eigenvalues: Arc<[f64]>,
    pub times: Vec<f64>,
    /// `states[s][k]`: coefficient `k` of `u(t_s)`.
    pub states: Vec<Vec<Complex64>>,
    /// Wave only: coefficients of `∂_t u(t_s)`.
    pub velocities: Option<Vec<Vec<Complex64>>>,
    pub traces: Vec<NormTrace>,
}

impl Trajectory {
    pub fn new(
        equation: Equation,
        eigenvalues: Arc<[f64]>,
        times: Vec<f64>,
        states: Vec<Vec<Complex64>>,
        velocities: Option<Vec<Vec<Complex64>>>,
    ) -> Self {
        let traces = compute_traces(equation, &eigenvalues, &states, velocities.as_deref());
        Trajectory {
            equation,
            eigenvalues,
            times,
            states,
            velocities,
            traces,
        }
    }

    pub fn state(&self, s: usize) -> CoefVec {
        CoefVec {
            coeffs: self.states[s].clone(),
            eigenvalues: self.eigenvalues.clone(),
        }
    }

    /// Mode `k` over all grid times.
    pub fn mode(&self, k: usize) -> Vec<Complex64> {
        self.states.iter().map(|s| s[k]).collect()
    }

    pub fn final_state(&self) -> CoefVec {
        self.state(self.states.len() - 1)
    }
}

pub fn compute_traces(
    eq: Equation,
    lam: &[f64],
    states: &[Vec<Complex64>],
    velocities: Option<&[Vec<Complex64>]>,
) -> Vec<NormTrace> {
    states
        .iter()
        .enumerate()
        .map(|(s, u)| {
            let v = velocities.map(|v| v[s].as_slice());
            NormTrace {
                mu: weighted_norm(u, lam, |_| 1.0),
                dom_e: weighted_norm(u, lam, |l| l),
                energy: energy(eq, u, v, lam),
                velocity_mu: v.map(|v| weighted_norm(v, lam, |_| 1.0)),
                velocity_dual: v
                    .map(|v| weighted_norm(v, lam, |l| if l > 0.0 { 1.0 / l } else { 0.0 })),
            }
        })
        .collect()
}

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Solution of one mode on the grid: `(c_k(t_s), d_k(t_s))`, with `d_k` the
/// velocity for the wave equation and `None` otherwise.
pub(crate) fn evolve_mode(
    eq: Equation,
    lam: f64,
    alpha: Complex64,
    beta: Complex64,
    gamma: Option<&ModeSamples>,
    grid: &[f64],
) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
    match eq {
        Equation::Wave => {
            let omega = lam.sqrt();
            let mut c: Vec<Complex64>;
            let mut d: Vec<Complex64>;
            if lam == 0.0 {
                c = grid.iter().map(|&t| alpha + beta * t).collect();
                d = vec![beta; grid.len()];
                if let Some(g) = gamma {
                    let ic = duhamel(grid, g, re);
                    let id = duhamel(grid, g, |_| re(1.0));
                    for s in 0..grid.len() {
                        c[s] += ic[s];
                        d[s] += id[s];
                    }
                }
            } else {
                c = grid
                    .iter()
                    .map(|&t| {
                        let (sn, cs) = (omega * t).sin_cos();
                        alpha * cs + beta * (sn / omega)
                    })
                    .collect();
                d = grid
                    .iter()
                    .map(|&t| {
                        let (sn, cs) = (omega * t).sin_cos();
                        -alpha * (omega * sn) + beta * cs
                    })
                    .collect();
                if let Some(g) = gamma {
                    let ic = duhamel(grid, g, |x| re((omega * x).sin() / omega));
                    let id = duhamel(grid, g, |x| re((omega * x).cos()));
                    for s in 0..grid.len() {
                        c[s] += ic[s];
                        d[s] += id[s];
                    }
                }
            }
            (c, Some(d))
        }
        Equation::Heat => {
            let mut c: Vec<Complex64> = grid.iter().map(|&t| alpha * (-lam * t).exp()).collect();
            if let Some(g) = gamma {
                let ic = duhamel(grid, g, |x| re((-lam * x).exp()));
                for (a, b) in c.iter_mut().zip(ic) {
                    *a += b;
                }
            }
            (c, None)
        }
        Equation::Schrodinger => {
            let phase = |t: f64| Complex64::from_polar(1.0, -lam * t);
            let mut c: Vec<Complex64> = grid.iter().map(|&t| alpha * phase(t)).collect();
            if let Some(g) = gamma {
                let ic = duhamel(grid, g, phase);
                for (a, b) in c.iter_mut().zip(ic) {
                    *a -= I * b;
                }
            }
            (c, None)
        }
    }
}

/// Evolves initial data `g` (and `h = ∂_t u(0)` for the wave equation) under
/// forcing `f` over a given grid starting at `grid[0] = 0`.
pub fn evolve_on_grid(
    eq: Equation,
    g: &CoefVec,
    h: Option<&CoefVec>,
    f: &ForcingTerm,
    grid: &[f64],
) -> Result<Trajectory> {
    if grid.len() < 2 || grid[0] != 0.0 || !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Invalid(
            "time grid must start at 0 and increase strictly".into(),
        ));
    }
    let n = g.len();
    let h = match (eq, h) {
        (Equation::Wave, Some(h)) => {
            g.check_same(h)?;
            Some(h)
        }
        (Equation::Wave, None) => {
            return Err(Error::Invalid(
                "the wave equation needs an initial velocity h".into(),
            ))
        }
        (_, Some(_)) => return Err(Error::Invalid(format!("{eq:?} takes no initial velocity"))),
        (_, None) => None,
    };
    f.validate(n, *grid.last().unwrap())?;
    let lam = g.eigenvalues.clone();
    let per_mode: Vec<(Vec<Complex64>, Option<Vec<Complex64>>)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let samples = (!f.is_zero()).then(|| ModeSamples::new(f, k, grid));
            let beta = h.map_or(Complex64::new(0.0, 0.0), |h| h.coeffs[k]);
            evolve_mode(eq, lam[k], g.coeffs[k], beta, samples.as_ref(), grid)
        })
        .collect();
    let steps = grid.len();
    let states: Vec<Vec<Complex64>> = (0..steps)
        .map(|s| per_mode.iter().map(|m| m.0[s]).collect())
        .collect();
    let velocities = (eq == Equation::Wave).then(|| {
        (0..steps)
            .map(|s| per_mode.iter().map(|m| m.1.as_ref().unwrap()[s]).collect())
            .collect()
    });
    Ok(Trajectory::new(eq, lam, grid.to_vec(), states, velocities))
}

pub fn wave_evolve(
    g: &CoefVec,
    h: &CoefVec,
    f: &ForcingTerm,
    t_end: f64,
    steps: usize,
) -> Result<Trajectory> {
    evolve_on_grid(Equation::Wave, g, Some(h), f, &time_grid(t_end, steps)?)
}

pub fn heat_evolve(g: &CoefVec, f: &ForcingTerm, t_end: f64, steps: usize) -> Result<Trajectory> {
    evolve_on_grid(Equation::Heat, g, None, f, &time_grid(t_end, steps)?)
}

pub fn schrodinger_evolve(
    g: &CoefVec,
    f: &ForcingTerm,
    t_end: f64,
    steps: usize,
) -> Result<Trajectory> {
    evolve_on_grid(Equation::Schrodinger, g, None, f, &time_grid(t_end, steps)?)
}

/// Number of Simpson panels used when a single time is requested.
pub const POINT_PANELS: usize = 512;

fn state_at(
    eq: Equation,
    g: &CoefVec,
    h: Option<&CoefVec>,
    f: &ForcingTerm,
    t: f64,
) -> Result<Vec<Complex64>> {
    if t == 0.0 {
        return Ok(g.coeffs.clone());
    }
    if t < 0.0 {
        return Err(Error::Invalid(format!("time must be nonnegative, got {t}")));
    }
    let traj = evolve_on_grid(eq, g, h, f, &time_grid(t, POINT_PANELS)?)?;
    Ok(traj.states.last().unwrap().clone())
}

/// Wave acceleration `K(t) = f(t) − L u(t)`, componentwise `γ_k(t) − λ_k c_k(t)`.
pub fn wave_accel(g: &CoefVec, h: &CoefVec, f: &ForcingTerm, t: f64) -> Result<CoefVec> {
    let c = state_at(Equation::Wave, g, Some(h), f, t)?;
    generator(Equation::Wave, &c, f, t, g.eigenvalues.clone())
}

/// Heat generator `K(t) = −L u(t) + f(t)`.
pub fn heat_generator(g: &CoefVec, f: &ForcingTerm, t: f64) -> Result<CoefVec> {
    let c = state_at(Equation::Heat, g, None, f, t)?;
    generator(Equation::Heat, &c, f, t, g.eigenvalues.clone())
}

/// Schrödinger generator `K(t) = −i L u(t) − i f(t)`.
pub fn schrodinger_generator(g: &CoefVec, f: &ForcingTerm, t: f64) -> Result<CoefVec> {
    let c = state_at(Equation::Schrodinger, g, None, f, t)?;
    generator(Equation::Schrodinger, &c, f, t, g.eigenvalues.clone())
}

fn generator(
    eq: Equation,
    c: &[Complex64],
    f: &ForcingTerm,
    t: f64,
    lam: Arc<[f64]>,
) -> Result<CoefVec> {
    let coeffs = c
        .iter()
        .enumerate()
        .map(|(k, &ck)| {
            let fk = f.mode_at(k, t);
            match eq {
                Equation::Wave | Equation::Heat => fk - ck * lam[k],
                Equation::Schrodinger => -I * (ck * lam[k]) - I * fk,
            }
        })
        .collect();
    CoefVec::new(coeffs, lam)
}

/// Largest centered finite-difference residual of the weak form tested
/// against `φ_k`, over the interior grid times.
pub fn weak_residual(traj: &Trajectory, f: &ForcingTerm, k: usize) -> Result<f64> {
    let n = traj.times.len();
    if n < 4 {
        return Err(Error::Invalid(format!(
            "weak residual needs at least 3 steps, got {}",
            n - 1
        )));
    }
    if k >= traj.eigenvalues.len() {
        return Err(Error::Invalid(format!("mode {k} out of range")));
    }
    let dt = traj.times[1] - traj.times[0];
    let uniform = traj
        .times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt);
    if !uniform {
        return Err(Error::Invalid("weak residual needs a uniform grid".into()));
    }
    let lam = traj.eigenvalues[k];
    let c = traj.mode(k);
    let mut worst = 0.0f64;
    for s in 1..n - 1 {
        let gam = f.mode_at(k, traj.times[s]);
        let r = match traj.equation {
            Equation::Wave => (c[s + 1] - c[s] * 2.0 + c[s - 1]) / (dt * dt) + c[s] * lam - gam,
            Equation::Heat => (c[s + 1] - c[s - 1]) / (2.0 * dt) + c[s] * lam - gam,
            Equation::Schrodinger => I * (c[s + 1] - c[s - 1]) / (2.0 * dt) - c[s] * lam - gam,
        };
        worst = worst.max(r.norm());
    }
    Ok(worst)
}
