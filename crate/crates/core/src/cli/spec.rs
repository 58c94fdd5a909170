//! Problem specification files.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analysis::ScanGrid;
use crate::error::{Error, Result};
use crate::evolution::{CoefVec, Equation, ForcingTerm, Interpolation};
use crate::geometry::ChartPoint;
use crate::measure::{
    dirac_measure, gifs_invariant_measure, ifs_invariant_measure, Atom, DiscreteMeasure, GifsSpec,
    IfsSpec, Provenance,
};
use crate::oracle::{oracle_forcing, oracle_initial, OracleParams, Setting};
use crate::semilinear::{Nonlinearity, PicardConfig};
use crate::spectral::{eigenbasis, Domain, SpectralBasis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    /// The measure of a closed-form setting.
    Oracle { setting: Setting },
    /// Point masses on the circle.
    Dirac { thetas: Vec<f64>, weights: Vec<f64> },
    /// Explicit atoms on any manifold.
    Atoms { atoms: Vec<Atom> },
    /// Atoms read from a JSON file holding a list of atoms (relative paths
    /// resolve against the spec file).
    File { path: PathBuf },
    /// Three-map IFS on the upper hemisphere.
    Ifs {
        depth: u32,
        #[serde(default)]
        probabilities: Option<Vec<f64>>,
    },
    /// Tabulated torus GIFS, union of vertex measures normalized to mass one.
    Gifs {
        depth: u32,
        #[serde(default)]
        delete_edges: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Oracle {
        setting: Setting,
        #[serde(default)]
        params: OracleParams,
    },
    /// Values at every mesh node.
    Nodal {
        g: Vec<f64>,
        #[serde(default)]
        h: Option<Vec<f64>>,
    },
    /// Coefficients as `[re, im]` pairs.
    Coefficients {
        g: Vec<[f64; 2]>,
        #[serde(default)]
        h: Option<Vec<[f64; 2]>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingSpec {
    Zero,
    /// The constant function `f ≡ value`, projected onto the basis.
    ConstantFunction {
        value: f64,
    },
    /// Constant coefficients as `[re, im]` pairs.
    Coefficients {
        values: Vec<[f64; 2]>,
    },
    /// Coefficient samples `values[time][mode] = [re, im]`.
    Sampled {
        times: Vec<f64>,
        values: Vec<Vec<[f64; 2]>>,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionSpec {
    #[serde(default = "half")]
    pub delta0: f64,
    #[serde(default = "half")]
    pub rho: f64,
    #[serde(default = "twelve")]
    pub levels: usize,
}

fn half() -> f64 {
    0.5
}

fn twelve() -> usize {
    12
}

impl Default for DimensionSpec {
    fn default() -> Self {
        DimensionSpec {
            delta0: 0.5,
            rho: 0.5,
            levels: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilipSpec {
    pub na: usize,
    pub nb: usize,
    pub nalpha: usize,
    pub cutoff: f64,
}

impl Default for BilipSpec {
    fn default() -> Self {
        BilipSpec {
            na: 64,
            nb: 64,
            nalpha: 128,
            cutoff: 1e-3,
        }
    }
}

impl BilipSpec {
    pub fn grid(&self) -> ScanGrid {
        ScanGrid {
            na: self.na,
            nb: self.nb,
            nalpha: self.nalpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularitySpec {
    pub c: f64,
    pub p: f64,
    pub t: u32,
    pub r0: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Perturbation added to one eigenvalue before evolving, as a
    /// sensitivity control for the energy check.
    #[serde(default)]
    pub perturb_eigenvalue: Option<(usize, f64)>,
    /// Random probe data sets per invariant check.
    #[serde(default)]
    pub probes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub equation: Option<Equation>,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub forcing: Option<ForcingSpec>,
    #[serde(default)]
    pub nonlinearity: Option<Nonlinearity>,
    #[serde(default)]
    pub picard: Option<PicardConfig>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
    /// Times that must fall on the grid; nodal values there go to `samples.csv`.
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub dimension: Option<DimensionSpec>,
    #[serde(default)]
    pub bilip: Option<BilipSpec>,
    #[serde(default)]
    pub s_regularity: Option<RegularitySpec>,
    #[serde(default)]
    pub gifs_delete_edges: Vec<usize>,
    #[serde(default)]
    pub verify: Option<VerifySpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Directory of the spec file, for resolving relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub const DEFAULT_RESOLUTION: usize = 64;
pub const DEFAULT_SIGMA: f64 = 1.0;

fn missing(field: &str) -> Error {
    Error::Invalid(format!("spec is missing `{field}`"))
}

fn complex(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

impl ProblemSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut spec: ProblemSpec = serde_json::from_str(&text)?;
        spec.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(spec)
    }

    pub fn measure(&self) -> Result<DiscreteMeasure> {
        let spec = self.measure.as_ref().ok_or_else(|| missing("measure"))?;
        match spec {
            MeasureSpec::Oracle { setting } => Ok(setting.measure()),
            MeasureSpec::Dirac { thetas, weights } => {
                let pts = thetas
                    .iter()
                    .map(|&t| ChartPoint::circle(t))
                    .collect::<Result<Vec<_>>>()?;
                dirac_measure(&pts, weights)
            }
            MeasureSpec::Atoms { atoms } => DiscreteMeasure::new(atoms.clone(), Provenance::Atomic),
            MeasureSpec::File { path } => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    self.base_dir.join(path)
                };
                let text = std::fs::read_to_string(&full)?;
                let atoms: Vec<Atom> = serde_json::from_str(&text)?;
                DiscreteMeasure::new(atoms, Provenance::Atomic)
            }
            MeasureSpec::Ifs {
                depth,
                probabilities,
            } => {
                let ifs = match probabilities {
                    Some(p) => IfsSpec::three_map(p.clone())?,
                    None => IfsSpec::three_map_uniform(),
                };
                ifs_invariant_measure(&ifs, IfsSpec::default_seed(), *depth)
            }
            MeasureSpec::Gifs {
                depth,
                delete_edges,
            } => {
                let g = GifsSpec::torus_table().without_edges(delete_edges);
                Ok(gifs_invariant_measure(&g, *depth)?.combined())
            }
        }
    }

    /// Domain, defaulting to the oracle setting's when the measure names one.
    pub fn domain(&self) -> Result<Domain> {
        if let Some(d) = self.domain {
            return Ok(d);
        }
        match (&self.measure, &self.initial) {
            (Some(MeasureSpec::Oracle { setting }), _)
            | (_, Some(InitialSpec::Oracle { setting, .. })) => Ok(setting.domain()),
            _ => Err(missing("domain")),
        }
    }

    pub fn basis(&self) -> Result<SpectralBasis> {
        let resolution = self.resolution.unwrap_or(DEFAULT_RESOLUTION);
        eigenbasis(
            self.domain()?,
            resolution,
            &self.measure()?,
            self.sigma.unwrap_or(DEFAULT_SIGMA),
        )
    }

    pub fn equation(&self) -> Result<Equation> {
        self.equation.ok_or_else(|| missing("equation"))
    }

    /// Initial coefficients `g` and, for the wave equation, `h`.
    pub fn initial_data(&self, basis: &SpectralBasis) -> Result<(CoefVec, Option<CoefVec>)> {
        let eq = self.equation()?;
        let lam = basis.eigenvalues.clone();
        let nodes = &basis.mesh.nodes;
        let project = |vals: &[f64]| -> Result<CoefVec> {
            if vals.len() != nodes.len() {
                return Err(Error::Invalid(format!(
                    "nodal data has {} values, mesh has {} nodes",
                    vals.len(),
                    nodes.len()
                )));
            }
            let z: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            CoefVec::new(basis.project(&z)?, lam.clone())
        };
        let (g, h) = match self.initial.as_ref().ok_or_else(|| missing("initial"))? {
            InitialSpec::Oracle { setting, params } => {
                let vals = nodes
                    .iter()
                    .map(|&t| oracle_initial(*setting, eq, params, t))
                    .collect::<Result<Vec<f64>>>()?;
                (project(&vals)?, None)
            }
            InitialSpec::Nodal { g, h } => {
                (project(g)?, h.as_ref().map(|h| project(h)).transpose()?)
            }
            InitialSpec::Coefficients { g, h } => (
                CoefVec::new(complex(g), lam.clone())?,
                h.as_ref()
                    .map(|h| CoefVec::new(complex(h), lam.clone()))
                    .transpose()?,
            ),
        };
        match eq {
            Equation::Wave => {
                let h = h.unwrap_or_else(|| CoefVec::zeros(lam.clone()));
                Ok((g, Some(h)))
            }
            _ if h.is_some() => Err(Error::Invalid(format!(
                "{eq:?} takes no initial velocity h"
            ))),
            _ => Ok((g, None)),
        }
    }

    /// Forcing in coefficient form. Without an explicit forcing, oracle
    /// initial data brings its own constant forcing.
    pub fn forcing(&self, basis: &SpectralBasis) -> Result<ForcingTerm> {
        let constant = |value: f64| -> Result<ForcingTerm> {
            if value == 0.0 {
                return Ok(ForcingTerm::Zero);
            }
            let vals = vec![Complex64::new(value, 0.0); basis.mesh.nodes.len()];
            Ok(ForcingTerm::Constant(basis.project(&vals)?))
        };
        match (&self.forcing, &self.initial) {
            (Some(ForcingSpec::Zero), _) | (None, None) => Ok(ForcingTerm::Zero),
            (None, Some(InitialSpec::Oracle { params, .. })) => {
                constant(oracle_forcing(self.equation()?, params))
            }
            (None, Some(_)) => Ok(ForcingTerm::Zero),
            (Some(ForcingSpec::ConstantFunction { value }), _) => constant(*value),
            (Some(ForcingSpec::Coefficients { values }), _) => {
                Ok(ForcingTerm::Constant(complex(values)))
            }
            (
                Some(ForcingSpec::Sampled {
                    times,
                    values,
                    interpolation,
                }),
                _,
            ) => ForcingTerm::sampled(
                times.clone(),
                values.iter().map(|row| complex(row)).collect(),
                *interpolation,
            ),
        }
    }

    pub fn t_end(&self) -> Result<f64> {
        self.t_end.ok_or_else(|| missing("t_end"))
    }

    pub fn steps(&self) -> Result<usize> {
        let s = self.steps.ok_or_else(|| missing("steps"))?;
        if s == 0 {
            return Err(Error::Invalid("steps must be at least 1".into()));
        }
        Ok(s)
    }
}
