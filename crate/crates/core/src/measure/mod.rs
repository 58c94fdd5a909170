//! Finite positive measures represented as weighted atom clouds.

mod gifs;
mod ifs;

pub use gifs::{
    gifs_invariant_measure, ContainmentCheck, GifsEdge, GifsMeasure, GifsSpec, Rational, Rect,
};
pub use ifs::{ifs_invariant_measure, IfsRegion, IfsSpec, SphereMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, ChartPoint, Manifold};
use crate::numeric::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub point: ChartPoint,
    pub weight: f64,
}

/// How a measure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Exact atomic measure.
    Atomic,
    /// Depth-`L` word expansion of an IFS invariant measure.
    IfsDepth { depth: u32 },
    /// Depth-`L` graph recursion; `normalized` records whether the union of
    /// the vertex measures was rescaled to a probability.
    GifsDepth { depth: u32, normalized: bool },
}

impl Provenance {
    /// True for depth-truncated approximations of a non-atomic measure.
    pub fn is_approximation(&self) -> bool {
        !matches!(self, Provenance::Atomic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
    total_mass: f64,
    provenance: Provenance,
}

impl DiscreteMeasure {
    /// Validates positivity, finiteness and a common manifold.
    pub fn new(atoms: Vec<Atom>, provenance: Provenance) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::Invalid("measure needs at least one atom".into()))?;
        let manifold = first.point.manifold();
        for (i, a) in atoms.iter().enumerate() {
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(Error::Invalid(format!(
                    "atom {i} has nonpositive weight {}",
                    a.weight
                )));
            }
            if a.point.manifold() != manifold {
                return Err(Error::Domain(format!(
                    "atom {i} lies on {:?}, expected {manifold:?}",
                    a.point.manifold()
                )));
            }
        }
        let w: Vec<f64> = atoms.iter().map(|a| a.weight).collect();
        let total_mass = pairwise_sum(&w);
        Ok(DiscreteMeasure {
            atoms,
            total_mass,
            provenance,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn manifold(&self) -> Manifold {
        self.atoms[0].point.manifold()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn points(&self) -> Vec<ChartPoint> {
        self.atoms.iter().map(|a| a.point).collect()
    }

    /// Rescales all weights so the total mass is one.
    pub fn normalized(&self) -> Self {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                point: a.point,
                weight: a.weight / self.total_mass,
            })
            .collect::<Vec<_>>();
        let w: Vec<f64> = atoms.iter().map(|a| a.weight).collect();
        DiscreteMeasure {
            total_mass: pairwise_sum(&w),
            atoms,
            provenance: match self.provenance {
                Provenance::GifsDepth { depth, .. } => Provenance::GifsDepth {
                    depth,
                    normalized: true,
                },
                p => p,
            },
        }
    }
}

/// Weighted Dirac combination `Σ w_i δ_{p_i}`.
pub fn dirac_measure(points: &[ChartPoint], weights: &[f64]) -> Result<DiscreteMeasure> {
    if points.is_empty() {
        return Err(Error::Invalid(
            "dirac measure needs at least one point".into(),
        ));
    }
    if points.len() != weights.len() {
        return Err(Error::Invalid(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    let atoms = points
        .iter()
        .zip(weights)
        .map(|(&point, &weight)| Atom { point, weight })
        .collect();
    DiscreteMeasure::new(atoms, Provenance::Atomic)
}

/// An open ball `B(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallQuery {
    pub center: ChartPoint,
    pub radius: f64,
}

impl BallQuery {
    pub fn new(center: ChartPoint, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Invalid(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(BallQuery { center, radius })
    }
}

/// `μ(B(x, r))` with the open-ball convention `d < r`.
pub fn ball_mass(m: &DiscreteMeasure, q: &BallQuery) -> Result<f64> {
    if q.center.manifold() != m.manifold() {
        return Err(Error::Domain(format!(
            "ball centered on {:?} but measure lives on {:?}",
            q.center.manifold(),
            m.manifold()
        )));
    }
    let mut inside = Vec::new();
    for a in &m.atoms {
        if distance(&q.center, &a.point)? < q.radius {
            inside.push(a.weight);
        }
    }
    Ok(pairwise_sum(&inside))
}

/// `max_x μ(B(x, r))` over the given candidate centers.
pub fn sup_ball_mass(m: &DiscreteMeasure, radius: f64, centers: &[ChartPoint]) -> Result<f64> {
    if centers.is_empty() {
        return Err(Error::Invalid(
            "sup_ball_mass needs at least one center".into(),
        ));
    }
    let mut best = 0.0f64;
    for &c in centers {
        best = best.max(ball_mass(m, &BallQuery::new(c, radius)?)?);
    }
    Ok(best)
}
