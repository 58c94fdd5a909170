use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    circle_distance_raw, sphere_distance_unit, torus_distance_raw, unit_vector, ChartPoint,
};
use crate::measure::DiscreteMeasure;
use crate::numeric::fit_line;

/// Atom-centered ball masses on a radius ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct BallMasses {
    /// `masses[i][j] = μ(B(x_i, r_j))`.
    pub masses: Vec<Vec<f64>>,
    /// Smallest positive distance between two atoms (`None` for one location).
    pub min_gap: Option<f64>,
}

enum Coords {
    Circle(Vec<f64>),
    Sphere(Vec<[f64; 3]>),
    Torus(Vec<(f64, f64)>),
}

impl Coords {
    fn new(points: &[ChartPoint]) -> Self {
        match points[0] {
            ChartPoint::Circle { .. } => Coords::Circle(
                points
                    .iter()
                    .map(|p| match *p {
                        ChartPoint::Circle { theta } => theta,
                        _ => unreachable!("measure atoms share a manifold"),
                    })
                    .collect(),
            ),
            ChartPoint::UpperSphere { .. } => Coords::Sphere(
                points
                    .iter()
                    .map(|p| match *p {
                        ChartPoint::UpperSphere { phi, theta } => unit_vector(phi, theta),
                        _ => unreachable!("measure atoms share a manifold"),
                    })
                    .collect(),
            ),
            ChartPoint::Torus { .. } => Coords::Torus(
                points
                    .iter()
                    .map(|p| match *p {
                        ChartPoint::Torus { x, y } => (x, y),
                        _ => unreachable!("measure atoms share a manifold"),
                    })
                    .collect(),
            ),
        }
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        match self {
            Coords::Circle(t) => circle_distance_raw(t[i], t[j]),
            Coords::Sphere(v) => sphere_distance_unit(v[i], v[j]),
            Coords::Torus(p) => torus_distance_raw(p[i].0, p[i].1, p[j].0, p[j].1),
        }
    }
}

/// Open-ball masses around every atom for a strictly decreasing radius
/// ladder, in `O(n² log levels)` without materializing the distance matrix.
pub fn atom_ball_masses(m: &DiscreteMeasure, radii: &[f64]) -> Result<BallMasses> {
    if radii.is_empty()
        || !radii.windows(2).all(|w| w[0] > w[1])
        || radii.iter().any(|r| !(*r > 0.0))
    {
        return Err(Error::Invalid(
            "radii must be positive and strictly decreasing".into(),
        ));
    }
    let coords = Coords::new(&m.points());
    let weights: Vec<f64> = m.atoms().iter().map(|a| a.weight).collect();
    let n = weights.len();
    let levels = radii.len();
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            // bucket[q]: atoms with r_q > d ≥ r_{q+1} (and the last bucket is d < r_last)
            let mut bucket = vec![0.0; levels + 1];
            let mut gap = f64::INFINITY;
            for (j, &w) in weights.iter().enumerate() {
                let d = coords.dist(i, j);
                if d > 0.0 && d < gap {
                    gap = d;
                }
                // number of radii strictly greater than d
                let q = radii.partition_point(|&r| r > d);
                bucket[q] += w;
            }
            let mut masses = vec![0.0; levels];
            let mut acc = 0.0;
            for q in (0..levels).rev() {
                acc += bucket[q + 1];
                masses[q] = acc;
            }
            (masses, gap)
        })
        .collect();
    let gap = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(BallMasses {
        masses: rows.into_iter().map(|r| r.0).collect(),
        min_gap: gap.is_finite().then_some(gap),
    })
}

/// Finite-scale surrogate for `dim_∞(μ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    /// Radii actually used, `δ_j = δ₀ ρʲ` above the atom-gap floor.
    pub radii: Vec<f64>,
    pub sup_masses: Vec<f64>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    pub pointwise_slopes: Vec<f64>,
    pub min_pointwise_slope: f64,
    /// Manifold dimension `n`; the gate tests `slope − stderr > n − 2`.
    pub manifold_dimension: usize,
    pub gate: bool,
    /// All sup-masses equal on the ladder.
    pub degenerate: bool,
    pub min_gap: Option<f64>,
    /// Levels dropped because they fell below the atom gap.
    pub levels_dropped: usize,
}

/// Regresses `ln S(δ)` on `ln δ` for `S(δ) = sup_x μ(B(x, δ))` over atom
/// centers. For depth-truncated approximations the ladder stops at the
/// minimum inter-atom gap, below which the measure looks purely atomic.
pub fn estimate_dim_infinity(
    m: &DiscreteMeasure,
    delta0: f64,
    rho: f64,
    levels: usize,
    n: usize,
) -> Result<DimensionEstimate> {
    if !(delta0.is_finite() && delta0 > 0.0) {
        return Err(Error::Invalid(format!("δ₀ must be positive, got {delta0}")));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Invalid(format!("ρ must lie in (0, 1), got {rho}")));
    }
    if levels < 3 {
        return Err(Error::Invalid(format!(
            "need at least 3 levels, got {levels}"
        )));
    }
    let full: Vec<f64> = (0..levels).map(|j| delta0 * rho.powi(j as i32)).collect();
    let bm = atom_ball_masses(m, &full)?;
    let keep = match (m.provenance().is_approximation(), bm.min_gap) {
        (true, Some(gap)) => full.iter().take_while(|&&d| d >= gap).count(),
        _ => levels,
    };
    if keep < 2 {
        return Err(Error::Invalid(format!(
            "only {keep} ladder level(s) lie above the atom gap {:?}; raise δ₀ or the depth",
            bm.min_gap
        )));
    }
    let radii = full[..keep].to_vec();
    let sup_masses: Vec<f64> = (0..keep)
        .map(|j| bm.masses.iter().map(|row| row[j]).fold(0.0, f64::max))
        .collect();
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = sup_masses.iter().map(|s| s.ln()).collect();
    let fit = fit_line(&lx, &ly)
        .ok_or_else(|| Error::Invalid("dimension regression is singular".into()))?;
    let pointwise_slopes: Vec<f64> = (1..keep)
        .map(|j| (ly[j] - ly[j - 1]) / (lx[j] - lx[j - 1]))
        .collect();
    let min_pointwise_slope = pointwise_slopes
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let degenerate = sup_masses.iter().all(|&s| s == sup_masses[0]);
    let (slope, stderr) = if degenerate {
        (0.0, 0.0)
    } else {
        (fit.slope, fit.slope_stderr)
    };
    Ok(DimensionEstimate {
        gate: slope - stderr > n as f64 - 2.0,
        radii,
        sup_masses,
        slope,
        slope_stderr: stderr,
        intercept: fit.intercept,
        pointwise_slopes,
        min_pointwise_slope,
        manifold_dimension: n,
        degenerate,
        min_gap: bm.min_gap,
        levels_dropped: levels - keep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{ball_mass, dirac_measure, ifs_invariant_measure, BallQuery, IfsSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(t: f64) -> ChartPoint {
        ChartPoint::circle(t).unwrap()
    }

    #[test]
    fn dirac_slopes_vanish() {
        let m = dirac_measure(&[c(0.0)], &[1.0]).unwrap();
        let e = estimate_dim_infinity(&m, 0.5, 0.5, 8, 1).unwrap();
        assert_eq!(e.slope, 0.0);
        assert!(e.degenerate);
        assert!(e.gate);
        let m2 = dirac_measure(&[c(0.0), c(PI)], &[1.0, 1.0]).unwrap();
        let e = estimate_dim_infinity(&m2, 0.5, 0.5, 8, 1).unwrap();
        assert!(e.slope.abs() <= 1e-6);
        assert_eq!(e.levels_dropped, 0);
    }

    #[test]
    fn ifs_depth_eight_positive() {
        let m = ifs_invariant_measure(&IfsSpec::three_map_uniform(), IfsSpec::default_seed(), 8)
            .unwrap();
        let e = estimate_dim_infinity(&m, 0.5, 0.5, 16, 2).unwrap();
        assert!(e.slope > 0.2, "slope {}", e.slope);
        assert!(e.gate);
        assert!(e.levels_dropped > 0);
        assert!(e.radii.last().unwrap() >= &e.min_gap.unwrap());
        assert!(e.sup_masses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bad_parameters() {
        let m = dirac_measure(&[c(0.0)], &[1.0]).unwrap();
        assert!(estimate_dim_infinity(&m, 0.5, 1.0, 8, 1).is_err());
        assert!(estimate_dim_infinity(&m, 0.5, 0.5, 2, 1).is_err());
        assert!(estimate_dim_infinity(&m, -1.0, 0.5, 8, 1).is_err());
    }

    proptest! {
        #[test]
        fn fast_masses_match_direct(thetas in prop::collection::vec(-PI..PI, 1..15), r0 in 0.1..3.0f64) {
            let pts: Vec<_> = thetas.iter().map(|&t| c(t)).collect();
            let w: Vec<f64> = (0..pts.len()).map(|i| 0.5 + i as f64).collect();
            let m = dirac_measure(&pts, &w).unwrap();
            let radii = [r0, r0 / 2.0, r0 / 4.0, r0 / 8.0];
            let bm = atom_ball_masses(&m, &radii).unwrap();
            for (i, row) in bm.masses.iter().enumerate() {
                for (j, &r) in radii.iter().enumerate() {
                    let direct = ball_mass(&m, &BallQuery::new(pts[i], r).unwrap()).unwrap();
                    prop_assert!((row[j] - direct).abs() <= 1e-12 * m.total_mass());
                }
                prop_assert!(row.windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }
}
