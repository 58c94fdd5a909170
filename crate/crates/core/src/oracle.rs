//! Closed-form eigenpairs and solutions for Dirac measures on the circle.
//!
//! Two settings are covered: a unit point mass at `θ = 0` on the Dirichlet
//! arc `(−π/2, π/2)`, and unit masses at `θ = 0` and `θ = π` on the full
//! circle. Both have the tent eigenfunction with slopes `±2/π` and
//! eigenvalue `4/π`; the full circle adds the constants with eigenvalue 0.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::Equation;
use crate::geometry::{circle_distance_raw, ChartPoint};
use crate::measure::{dirac_measure, DiscreteMeasure};
use crate::spectral::{fix_sign, Domain};

pub const TENT_EIGENVALUE: f64 = 4.0 / PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// One atom at `θ = 0`, arc `(−π/2, π/2)`, Dirichlet ends.
    HalfCircleDirichletDirac,
    /// Atoms at `θ = 0` and `θ = π`, whole circle.
    FullCircleTwoDirac,
}

impl Setting {
    pub fn domain(self) -> Domain {
        match self {
            Setting::HalfCircleDirichletDirac => Domain::Arc {
                lo: -FRAC_PI_2,
                hi: FRAC_PI_2,
            },
            Setting::FullCircleTwoDirac => Domain::FullCircle,
        }
    }

    pub fn atoms(self) -> Vec<f64> {
        match self {
            Setting::HalfCircleDirichletDirac => vec![0.0],
            Setting::FullCircleTwoDirac => vec![0.0, PI],
        }
    }

    pub fn measure(self) -> DiscreteMeasure {
        let pts: Vec<ChartPoint> = self
            .atoms()
            .into_iter()
            .map(|t| ChartPoint::circle(t).expect("atoms lie in the chart"))
            .collect();
        dirac_measure(&pts, &vec![1.0; pts.len()]).expect("unit masses are valid")
    }
}

/// Eigenfunction shapes appearing in the two settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `1 − 2|θ|/π`, with `θ` taken in `[−π, π]`.
    Tent,
    Constant,
}

impl Shape {
    fn eval(self, theta: f64) -> f64 {
        match self {
            Shape::Tent => (PI - 2.0 * circle_distance_raw(theta, 0.0)) / PI,
            Shape::Constant => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormProblem {
    pub setting: Setting,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub shapes: Vec<Shape>,
    /// `‖φ_k‖_μ` of the unnormalized eigenfunctions.
    pub mu_norms: Vec<f64>,
}

pub fn oracle_eigen(setting: Setting) -> ClosedFormProblem {
    match setting {
        Setting::HalfCircleDirichletDirac => ClosedFormProblem {
            setting,
            eigenvalues: vec![TENT_EIGENVALUE],
            shapes: vec![Shape::Tent],
            mu_norms: vec![1.0],
        },
        Setting::FullCircleTwoDirac => ClosedFormProblem {
            setting,
            eigenvalues: vec![0.0, TENT_EIGENVALUE],
            shapes: vec![Shape::Constant, Shape::Tent],
            mu_norms: vec![2f64.sqrt(), 2f64.sqrt()],
        },
    }
}

impl ClosedFormProblem {
    fn check(&self, k: usize, theta: f64) -> Result<()> {
        if k >= self.eigenvalues.len() {
            return Err(Error::Invalid(format!("eigenfunction {k} out of range")));
        }
        if let Domain::Arc { lo, hi } = self.setting.domain() {
            if !(lo..=hi).contains(&theta) {
                return Err(Error::Domain(format!(
                    "θ = {theta} lies outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Unnormalized eigenfunction `φ_k(θ)`.
    pub fn raw(&self, k: usize, theta: f64) -> Result<f64> {
        self.check(k, theta)?;
        Ok(self.shapes[k].eval(theta))
    }

    /// `φ_k / ‖φ_k‖_μ`.
    pub fn normalized(&self, k: usize, theta: f64) -> Result<f64> {
        Ok(self.raw(k, theta)? / self.mu_norms[k])
    }

    /// Normalized eigenfunction at the given nodes, with the sign of the
    /// largest entry made positive (ties resolved to the first node).
    pub fn nodal_vector(&self, k: usize, nodes: &[f64]) -> Result<Vec<f64>> {
        let mut v = nodes
            .iter()
            .map(|&t| self.normalized(k, t))
            .collect::<Result<Vec<f64>>>()?;
        fix_sign(&mut v);
        Ok(v)
    }
}

/// Parameters of the closed-form solutions: `c` is the constant forcing of
/// the heat equation, `c1`, `c2` the initial data `c1 + c2 φ₂` of the
/// full-circle heat problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    #[serde(default)]
    pub c: f64,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            c: 0.0,
            c1: 1.0,
            c2: 1.0,
        }
    }
}

fn check_params(eq: Equation, params: &OracleParams) -> Result<()> {
    if eq != Equation::Heat && params.c != 0.0 {
        return Err(Error::Invalid(format!(
            "no closed form for the {eq:?} equation with forcing c = {}",
            params.c
        )));
    }
    Ok(())
}

/// Initial data `u(0)` at `θ`: `φ/4` in all cases except the full-circle
/// heat problem, which starts from `c1 + c2 φ₂`.
pub fn oracle_initial(
    setting: Setting,
    eq: Equation,
    params: &OracleParams,
    theta: f64,
) -> Result<f64> {
    check_params(eq, params)?;
    let p = oracle_eigen(setting);
    let tent = p.raw(p.shapes.len() - 1, theta)?;
    Ok(match (setting, eq) {
        (Setting::FullCircleTwoDirac, Equation::Heat) => params.c1 + params.c2 * tent,
        _ => tent / 4.0,
    })
}

/// Constant forcing `f ≡ c` (heat only).
pub fn oracle_forcing(eq: Equation, params: &OracleParams) -> f64 {
    if eq == Equation::Heat {
        params.c
    } else {
        0.0
    }
}

/// Exact solution `u(t)` at the given angles. The wave equation starts at
/// rest.
///
/// On the full circle the constant forcing has no `φ₂` component, so the
/// heat solution is `c1 + c t + c2 φ₂ e^{−4t/π}`; the forcing feeds the
/// constant mode linearly in time.
pub fn oracle_solution(
    setting: Setting,
    eq: Equation,
    params: &OracleParams,
    t: f64,
    thetas: &[f64],
) -> Result<Vec<Complex64>> {
    check_params(eq, params)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Invalid(format!("time must be nonnegative, got {t}")));
    }
    let p = oracle_eigen(setting);
    let lam = TENT_EIGENVALUE;
    thetas
        .iter()
        .map(|&theta| {
            let phi = p.raw(p.shapes.len() - 1, theta)?;
            Ok(match (setting, eq) {
                (_, Equation::Wave) => Complex64::new(phi / 4.0 * (lam.sqrt() * t).cos(), 0.0),
                (_, Equation::Schrodinger) => Complex64::from_polar(phi / 4.0, -lam * t),
                (Setting::HalfCircleDirichletDirac, Equation::Heat) => {
                    let cpi = params.c * PI;
                    Complex64::new(phi / 4.0 * ((-lam * t).exp() * (1.0 - cpi) + cpi), 0.0)
                }
                (Setting::FullCircleTwoDirac, Equation::Heat) => Complex64::new(
                    params.c1 + params.c * t + params.c2 * phi * (-lam * t).exp(),
                    0.0,
                ),
            })
        })
        .collect()
}
