use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::circle_distance_raw;

/// Domain on the circle: a Dirichlet arc or the whole periodic circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Arc { lo: f64, hi: f64 },
    FullCircle,
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        if let Domain::Arc { lo, hi } = *self {
            if !(lo.is_finite() && hi.is_finite() && lo < hi && hi - lo < TAU) {
                return Err(Error::Invalid(format!(
                    "arc ({lo}, {hi}) must satisfy lo < hi and hi − lo < 2π"
                )));
            }
        }
        Ok(())
    }
}

/// Piecewise-linear mesh on a circle domain.
///
/// Arc meshes list both endpoints; full-circle meshes list `N` nodes in
/// `[−π, π)` and close periodically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub domain: Domain,
    pub nodes: Vec<f64>,
}

/// Relative distance (in units of the local spacing) within which a required
/// node snaps onto an existing one.
const SNAP: f64 = 1e-9;

impl Mesh1D {
    pub fn element_count(&self) -> usize {
        match self.domain {
            Domain::Arc { .. } => self.nodes.len() - 1,
            Domain::FullCircle => self.nodes.len(),
        }
    }

    /// Element `e` as `(left node, right node, length)`.
    pub fn element(&self, e: usize) -> (usize, usize, f64) {
        let n = self.nodes.len();
        match self.domain {
            Domain::Arc { .. } => (e, e + 1, self.nodes[e + 1] - self.nodes[e]),
            Domain::FullCircle => {
                if e + 1 < n {
                    (e, e + 1, self.nodes[e + 1] - self.nodes[e])
                } else {
                    (e, 0, self.nodes[0] + TAU - self.nodes[e])
                }
            }
        }
    }

    /// Indices of nodes carrying degrees of freedom.
    pub fn free_nodes(&self) -> Vec<usize> {
        match self.domain {
            Domain::Arc { .. } => (1..self.nodes.len() - 1).collect(),
            Domain::FullCircle => (0..self.nodes.len()).collect(),
        }
    }

    /// Node index at angle `theta` within tolerance `tol`, if any.
    pub fn find_node(&self, theta: f64, tol: f64) -> Option<usize> {
        self.nodes
            .iter()
            .position(|&t| circle_distance_raw(t, theta) <= tol)
    }

    /// Whether `theta` lies in the closed domain.
    pub fn contains(&self, theta: f64, tol: f64) -> bool {
        match self.domain {
            Domain::FullCircle => true,
            Domain::Arc { lo, hi } => {
                let lifted = lift_into(theta, lo);
                lifted <= hi + tol || circle_distance_raw(theta, lo) <= tol
            }
        }
    }
}

/// Representative of `theta` (mod 2π) in `[lo, lo + 2π)`.
fn lift_into(theta: f64, lo: f64) -> f64 {
    if theta >= lo && theta < lo + TAU {
        theta
    } else {
        lo + (theta - lo).rem_euclid(TAU)
    }
}

/// Uniform mesh with `resolution` elements, refined to contain every
/// required angle.
pub fn build_mesh(domain: Domain, resolution: usize, required: &[f64]) -> Result<Mesh1D> {
    domain.validate()?;
    if resolution < 2 {
        return Err(Error::Invalid(format!(
            "mesh resolution must be at least 2, got {resolution}"
        )));
    }
    let n = resolution;
    let mut nodes: Vec<f64> = match domain {
        Domain::Arc { lo, hi } => (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect(),
        Domain::FullCircle => (0..n).map(|i| -PI + TAU * i as f64 / n as f64).collect(),
    };
    if let Domain::Arc { hi, .. } = domain {
        nodes[n] = hi;
    }
    let h = match domain {
        Domain::Arc { lo, hi } => (hi - lo) / n as f64,
        Domain::FullCircle => TAU / n as f64,
    };
    for &r in required {
        if !r.is_finite() {
            return Err(Error::Invalid(format!("required node {r} is not finite")));
        }
        let t = match domain {
            Domain::Arc { lo, hi } => {
                let t = lift_into(r, lo);
                let t = if circle_distance_raw(r, lo) <= SNAP * h {
                    lo
                } else {
                    t
                };
                if t > hi + SNAP * h {
                    return Err(Error::Invalid(format!(
                        "required node {r} lies outside the arc ({lo}, {hi})"
                    )));
                }
                t.min(hi)
            }
            Domain::FullCircle => {
                let t = lift_into(r, -PI);
                if TAU - (t + PI) <= SNAP * h {
                    -PI
                } else {
                    t
                }
            }
        };
        let pos = nodes.partition_point(|&x| x < t);
        let near = [pos.checked_sub(1), Some(pos)]
            .into_iter()
            .flatten()
            .filter(|&i| i < nodes.len())
            .find(|&i| (nodes[i] - t).abs() <= SNAP * h);
        match near {
            Some(i) => {
                let fixed =
                    matches!(domain, Domain::Arc { .. }) && (i == 0 || i == nodes.len() - 1);
                if !fixed {
                    nodes[i] = t;
                }
            }
            None => nodes.insert(pos, t),
        }
    }
    Ok(Mesh1D { domain, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn arc_with_zero() {
        let m = build_mesh(
            Domain::Arc {
                lo: -FRAC_PI_2,
                hi: FRAC_PI_2,
            },
            4,
            &[0.0],
        )
        .unwrap();
        let want = [-FRAC_PI_2, -FRAC_PI_4, 0.0, FRAC_PI_4, FRAC_PI_2];
        assert_eq!(m.nodes.len(), 5);
        for (a, b) in m.nodes.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(m.nodes[2], 0.0);
        assert_eq!(m.free_nodes(), vec![1, 2, 3]);
        assert_eq!(m.element_count(), 4);
    }

    #[test]
    fn full_circle_with_poles() {
        let m = build_mesh(Domain::FullCircle, 8, &[0.0, PI]).unwrap();
        assert_eq!(m.nodes.len(), 8);
        assert_eq!(m.find_node(0.0, 1e-12), Some(4));
        assert_eq!(m.find_node(PI, 1e-12), Some(0));
        assert_eq!(m.nodes[4], 0.0);
        let (a, b, h) = m.element(7);
        assert_eq!((a, b), (7, 0));
        assert!((h - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn off_grid_insert() {
        let m = build_mesh(Domain::FullCircle, 8, &[0.3]).unwrap();
        assert_eq!(m.nodes.len(), 9);
        assert!(m.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(m.nodes.contains(&0.3));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_mesh(Domain::FullCircle, 1, &[]).is_err());
        let arc = Domain::Arc {
            lo: -FRAC_PI_2,
            hi: FRAC_PI_2,
        };
        assert!(build_mesh(arc, 4, &[2.0]).is_err());
        assert!(build_mesh(Domain::Arc { lo: 1.0, hi: 0.0 }, 4, &[]).is_err());
    }

    proptest! {
        #[test]
        fn required_nodes_present(req in prop::collection::vec(-PI..PI, 0..6), n in 2usize..40) {
            let m = build_mesh(Domain::FullCircle, n, &req).unwrap();
            prop_assert!(m.nodes.windows(2).all(|w| w[0] < w[1]));
            for r in req {
                prop_assert!(m.find_node(r, 1e-12).is_some());
            }
        }
    }
}
