use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use super::{Atom, DiscreteMeasure, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{rotate, sphere_halving_map, Axis, ChartPoint};

/// A contraction of `S²₊`: the halving map, optionally followed by a rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphereMap {
    Halving,
    HalvingThenRotate { axis: Axis, angle: f64 },
}

impl SphereMap {
    pub fn apply(&self, p: &ChartPoint) -> Result<ChartPoint> {
        let h = sphere_halving_map(p)?;
        match *self {
            SphereMap::Halving => Ok(h),
            SphereMap::HalvingThenRotate { axis, angle } => rotate(&h, axis, angle),
        }
    }
}

/// Region the IFS is required to preserve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IfsRegion {
    /// Quarter sphere `{0 ≤ θ ≤ π/2}`.
    #[default]
    Quarter,
    /// The whole upper hemisphere.
    Hemisphere,
}

impl IfsRegion {
    const SLACK: f64 = 1e-12;

    pub fn contains(&self, p: &ChartPoint) -> bool {
        match (self, p) {
            (IfsRegion::Hemisphere, ChartPoint::UpperSphere { .. }) => true,
            (IfsRegion::Quarter, ChartPoint::UpperSphere { phi, theta }) => {
                *phi == 0.0 || *theta <= FRAC_PI_2 + Self::SLACK
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsSpec {
    pub maps: Vec<SphereMap>,
    pub probabilities: Vec<f64>,
    #[serde(default)]
    pub region: IfsRegion,
}

impl IfsSpec {
    /// The three maps `f₁ = f`, `f₂ = R_y(π/4)∘f`, `f₃ = R_x(−π/4)∘f` on the
    /// quarter sphere, with the given weights.
    pub fn three_map(probabilities: Vec<f64>) -> Result<Self> {
        let spec = IfsSpec {
            maps: vec![
                SphereMap::Halving,
                SphereMap::HalvingThenRotate {
                    axis: Axis::Y,
                    angle: FRAC_PI_4,
                },
                SphereMap::HalvingThenRotate {
                    axis: Axis::X,
                    angle: -FRAC_PI_4,
                },
            ],
            probabilities,
            region: IfsRegion::Quarter,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Three-map system with uniform weights.
    pub fn three_map_uniform() -> Self {
        Self::three_map(vec![1.0 / 3.0; 3]).expect("uniform weights are valid")
    }

    /// Default seed `(φ, θ) = (π/4, π/4)`, inside the quarter sphere.
    pub fn default_seed() -> ChartPoint {
        ChartPoint::sphere(FRAC_PI_4, FRAC_PI_4).expect("seed in chart")
    }

    pub fn validate(&self) -> Result<()> {
        if self.maps.is_empty() {
            return Err(Error::Invalid("IFS needs at least one map".into()));
        }
        if self.maps.len() != self.probabilities.len() {
            return Err(Error::Invalid(format!(
                "{} maps but {} probabilities",
                self.maps.len(),
                self.probabilities.len()
            )));
        }
        if let Some(p) = self
            .probabilities
            .iter()
            .find(|p| !(p.is_finite() && **p > 0.0))
        {
            return Err(Error::Invalid(format!(
                "IFS probability {p} is not positive"
            )));
        }
        let s: f64 = self.probabilities.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "IFS probabilities sum to {s}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Depth-`L` approximation of the invariant measure: atoms `f_τ(seed)` over
/// all words `τ` of length `L` with weights `p_τ`.
///
/// Atoms are ordered lexicographically by word with the outermost map as
/// the leading letter, so the atoms sharing a length-`k` prefix form a
/// contiguous block of length `m^(L−k)`.
pub fn ifs_invariant_measure(
    spec: &IfsSpec,
    seed: ChartPoint,
    depth: u32,
) -> Result<DiscreteMeasure> {
    spec.validate()?;
    if !spec.region.contains(&seed) {
        return Err(Error::OutOfChart(format!(
            "seed {seed:?} lies outside the IFS region {:?}",
            spec.region
        )));
    }
    let mut atoms = vec![Atom {
        point: seed,
        weight: 1.0,
    }];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(atoms.len() * spec.maps.len());
        for (map, &p) in spec.maps.iter().zip(&spec.probabilities) {
            for a in &atoms {
                let point = map.apply(&a.point)?;
                if !spec.region.contains(&point) {
                    return Err(Error::OutOfChart(format!(
                        "map {map:?} sends {:?} to {point:?}, outside {:?}",
                        a.point, spec.region
                    )));
                }
                next.push(Atom {
                    point,
                    weight: p * a.weight,
                });
            }
        }
        atoms = next;
    }
    DiscreteMeasure::new(atoms, Provenance::IfsDepth { depth })
}
