//! Chart coordinates and geodesic distances on `S¹`, the closed upper
//! hemisphere `S²₊` and the flat torus `T² = ℝ²/ℤ²`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed below the equator before a point counts as leaving `S²₊`.
const Z_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    Circle,
    UpperSphere,
    Torus,
}

impl Manifold {
    /// Topological dimension `n`.
    pub fn dimension(self) -> usize {
        match self {
            Manifold::Circle => 1,
            Manifold::UpperSphere | Manifold::Torus => 2,
        }
    }
}

/// A point in chart coordinates.
///
/// Circle: `θ ∈ [−π, π]` (the endpoints are the same point).
/// UpperSphere: polar angle `φ ∈ [0, π/2]`, azimuth `θ ∈ [0, 2π)`, with the
/// pole stored as `θ = 0`.
/// Torus: `(x, y) ∈ [0, 1)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "manifold", rename_all = "snake_case")]
pub enum ChartPoint {
    Circle { theta: f64 },
    UpperSphere { phi: f64, theta: f64 },
    Torus { x: f64, y: f64 },
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Invalid(format!("{what} must be finite, got {v}")))
    }
}

fn wrap_azimuth(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if TAU - t < 1e-14 {
        0.0
    } else {
        t
    }
}

fn wrap_unit(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl ChartPoint {
    /// Circle point; angles outside `[−π, π]` are reduced.
    pub fn circle(theta: f64) -> Result<Self> {
        let theta = finite(theta, "theta")?;
        let theta = if (-PI..=PI).contains(&theta) {
            theta
        } else {
            let r = (theta + PI).rem_euclid(TAU) - PI;
            if r < -PI {
                -PI
            } else {
                r
            }
        };
        Ok(ChartPoint::Circle { theta })
    }

    /// Upper hemisphere point; `φ` must lie in `[0, π/2]`.
    pub fn sphere(phi: f64, theta: f64) -> Result<Self> {
        let phi = finite(phi, "phi")?;
        let theta = finite(theta, "theta")?;
        if !(0.0..=FRAC_PI_2).contains(&phi) {
            return Err(Error::OutOfChart(format!(
                "polar angle {phi} outside [0, π/2]"
            )));
        }
        let theta = if phi == 0.0 { 0.0 } else { wrap_azimuth(theta) };
        Ok(ChartPoint::UpperSphere { phi, theta })
    }

    /// Torus point; coordinates are reduced mod 1.
    pub fn torus(x: f64, y: f64) -> Result<Self> {
        let x = finite(x, "x")?;
        let y = finite(y, "y")?;
        Ok(ChartPoint::Torus {
            x: wrap_unit(x),
            y: wrap_unit(y),
        })
    }

    pub fn manifold(&self) -> Manifold {
        match self {
            ChartPoint::Circle { .. } => Manifold::Circle,
            ChartPoint::UpperSphere { .. } => Manifold::UpperSphere,
            ChartPoint::Torus { .. } => Manifold::Torus,
        }
    }

    /// Unit vector in ℝ³ for a sphere point.
    pub fn to_cartesian(&self) -> Result<[f64; 3]> {
        match *self {
            ChartPoint::UpperSphere { phi, theta } => {
                let (sp, cp) = phi.sin_cos();
                let (st, ct) = theta.sin_cos();
                Ok([sp * ct, sp * st, cp])
            }
            _ => Err(Error::Domain(format!(
                "cartesian embedding needs an upper-sphere point, got {:?}",
                self.manifold()
            ))),
        }
    }

    /// Inverse of [`ChartPoint::to_cartesian`]. The input is normalized; a
    /// `z` component below `−1e−12` is out of chart.
    pub fn from_cartesian(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Invalid(format!("cannot normalize vector {v:?}")));
        }
        let [x, y, z] = [v[0] / norm, v[1] / norm, v[2] / norm];
        if z < -Z_SLACK {
            return Err(Error::OutOfChart(format!(
                "image ({x}, {y}, {z}) lies below the equator"
            )));
        }
        let rho = x.hypot(y);
        let phi = rho.atan2(z).min(FRAC_PI_2);
        let theta = if rho == 0.0 { 0.0 } else { y.atan2(x) };
        ChartPoint::sphere(phi, theta)
    }
}

fn mismatch(what: &str, p: &ChartPoint, q: &ChartPoint) -> Error {
    Error::Domain(format!(
        "{what} needs matching manifolds, got {:?} and {:?}",
        p.manifold(),
        q.manifold()
    ))
}

/// Great-circle distance on `S²₊`, in radians.
pub fn sphere_distance(p: &ChartPoint, q: &ChartPoint) -> Result<f64> {
    match (*p, *q) {
        (
            ChartPoint::UpperSphere { phi: p1, theta: t1 },
            ChartPoint::UpperSphere { phi: p2, theta: t2 },
        ) => Ok(sphere_distance_raw(p1, t1, p2, t2)),
        _ => Err(mismatch("sphere_distance", p, q)),
    }
}

/// Distance for raw polar/azimuth angles, no chart checks.
///
/// Evaluated as `atan2(|u × v|, u · v)` on the unit vectors, which is the
/// arccos of the clamped cosine `cos φ₁ cos φ₂ + sin φ₁ sin φ₂ cos(θ₁ − θ₂)`
/// without its loss of precision for nearby points.
pub fn sphere_distance_raw(phi1: f64, theta1: f64, phi2: f64, theta2: f64) -> f64 {
    sphere_distance_unit(unit_vector(phi1, theta1), unit_vector(phi2, theta2))
}

/// Unit vector of polar/azimuth angles.
pub fn unit_vector(phi: f64, theta: f64) -> [f64; 3] {
    let (s, c) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    [s * ct, s * st, c]
}

/// Angle between two unit vectors.
pub fn sphere_distance_unit(u: [f64; 3], v: [f64; 3]) -> f64 {
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).clamp(-1.0, 1.0);
    sin.atan2(cos)
}

/// Flat torus distance: Euclidean distance minimized over the nine lifts.
pub fn torus_distance(p: &ChartPoint, q: &ChartPoint) -> Result<f64> {
    match (*p, *q) {
        (ChartPoint::Torus { x: x1, y: y1 }, ChartPoint::Torus { x: x2, y: y2 }) => {
            Ok(torus_distance_raw(x1, y1, x2, y2))
        }
        _ => Err(mismatch("torus_distance", p, q)),
    }
}

pub fn torus_distance_raw(x1: f64, y1: f64, x2: f64, y2: f64) -> f64 {
    let mut best = f64::INFINITY;
    for kx in [-1.0, 0.0, 1.0] {
        for ky in [-1.0, 0.0, 1.0] {
            let d = (x1 - x2 + kx).hypot(y1 - y2 + ky);
            if d < best {
                best = d;
            }
        }
    }
    best
}

/// Arc-length distance on the unit circle.
pub fn circle_distance(p: &ChartPoint, q: &ChartPoint) -> Result<f64> {
    match (*p, *q) {
        (ChartPoint::Circle { theta: a }, ChartPoint::Circle { theta: b }) => {
            Ok(circle_distance_raw(a, b))
        }
        _ => Err(mismatch("circle_distance", p, q)),
    }
}

pub fn circle_distance_raw(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// Geodesic distance on whichever manifold both points share.
pub fn distance(p: &ChartPoint, q: &ChartPoint) -> Result<f64> {
    match p.manifold() {
        Manifold::Circle => circle_distance(p, q),
        Manifold::UpperSphere => sphere_distance(p, q),
        Manifold::Torus => torus_distance(p, q),
    }
}

/// `(φ, θ) ↦ (φ/2, θ)`: the map pulling every point halfway to the pole.
pub fn sphere_halving_map(p: &ChartPoint) -> Result<ChartPoint> {
    match *p {
        ChartPoint::UpperSphere { phi, theta } => ChartPoint::sphere(phi / 2.0, theta),
        _ => Err(Error::Domain(format!(
            "halving map needs an upper-sphere point, got {:?}",
            p.manifold()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Rotation matrix about a coordinate axis (right-handed).
pub fn rotation_matrix(axis: Axis, angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    match axis {
        Axis::X => [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        Axis::Y => [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
    }
}

pub fn apply3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

/// Rotate a sphere point; fails if the image drops below the equator.
pub fn rotate(p: &ChartPoint, axis: Axis, angle: f64) -> Result<ChartPoint> {
    let v = p.to_cartesian()?;
    ChartPoint::from_cartesian(apply3(&rotation_matrix(axis, angle), v))
}

/// Angles `(a, b, α)` describing a pair of sphere points: `a = π/2 − φ₁`,
/// `b = π/2 − φ₂` with `b ≥ a`, `α` the azimuth gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereAngles {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
}

impl SphereAngles {
    pub fn new(a: f64, b: f64, alpha: f64) -> Result<Self> {
        let ok = (0.0..=FRAC_PI_2).contains(&a)
            && (0.0..=FRAC_PI_2).contains(&b)
            && b >= a
            && (0.0..TAU).contains(&alpha);
        if !ok {
            return Err(Error::Invalid(format!(
                "sphere angles out of range: a={a}, b={b}, alpha={alpha}"
            )));
        }
        Ok(SphereAngles { a, b, alpha })
    }

    /// The pair of points `p = (π/2 − a, 0)`, `q = (π/2 − b, α)`.
    pub fn points(&self) -> Result<(ChartPoint, ChartPoint)> {
        Ok((
            ChartPoint::sphere(FRAC_PI_2 - self.a, 0.0)?,
            ChartPoint::sphere(FRAC_PI_2 - self.b, self.alpha)?,
        ))
    }

    /// Distance in the latitude form `arccos(sin a sin b + cos a cos b cos α)`.
    pub fn distance(&self) -> f64 {
        let c = self.a.sin() * self.b.sin() + self.a.cos() * self.b.cos() * self.alpha.cos();
        c.clamp(-1.0, 1.0).acos()
    }
}
