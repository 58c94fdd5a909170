//! Artifact formats. Reals are written as shortest round-trip decimals, so
//! re-reading a file reproduces every value bit for bit.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{compute_traces, Equation, NormTrace, Trajectory};
use crate::spectral::SpectralBasis;

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn f(x: f64) -> String {
    format!("{x}")
}

/// Column names of a trajectory file with `n` modes.
pub fn trajectory_header(n: usize, velocities: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for k in 0..n {
        h.push(format!("re_a{k}"));
        h.push(format!("im_a{k}"));
    }
    if velocities {
        for k in 0..n {
            h.push(format!("re_v{k}"));
            h.push(format!("im_v{k}"));
        }
    }
    h.extend(["mu", "domE", "energy"].map(String::from));
    h
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let n = traj.eigenvalues.len();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(trajectory_header(n, traj.velocities.is_some()))?;
    for (s, &t) in traj.times.iter().enumerate() {
        let mut row = vec![f(t)];
        for z in &traj.states[s] {
            row.push(f(z.re));
            row.push(f(z.im));
        }
        if let Some(v) = &traj.velocities {
            for z in &v[s] {
                row.push(f(z.re));
                row.push(f(z.im));
            }
        }
        let tr = &traj.traces[s];
        row.extend([f(tr.mu), f(tr.dom_e), f(tr.energy)]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A trajectory file read back into memory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub velocities: Option<Vec<Vec<Complex64>>>,
    /// `(mu, domE, energy)` columns as written.
    pub norms: Vec<[f64; 3]>,
}

impl TrajectoryTable {
    /// Largest deviation between the stored norm columns and norms
    /// recomputed from the stored coefficients.
    pub fn norm_mismatch(&self, eq: Equation, eigenvalues: &[f64]) -> f64 {
        let traces: Vec<NormTrace> =
            compute_traces(eq, eigenvalues, &self.states, self.velocities.as_deref());
        traces
            .iter()
            .zip(&self.norms)
            .map(|(tr, n)| {
                (tr.mu - n[0])
                    .abs()
                    .max((tr.dom_e - n[1]).abs())
                    .max((tr.energy - n[2]).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn parse(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("not a number: {s:?}")))
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryTable> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let n = header.iter().filter(|h| h.starts_with("re_a")).count();
    let velocities = header.iter().any(|h| h.starts_with("re_v"));
    if header != trajectory_header(n, velocities) {
        return Err(Error::Invalid(format!(
            "unexpected trajectory header {header:?}"
        )));
    }
    let mut table = TrajectoryTable {
        times: Vec::new(),
        states: Vec::new(),
        velocities: velocities.then(Vec::new),
        norms: Vec::new(),
    };
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = rec.iter().map(parse).collect::<Result<_>>()?;
        table.times.push(v[0]);
        let pairs = |off: usize| -> Vec<Complex64> {
            (0..n)
                .map(|k| Complex64::new(v[off + 2 * k], v[off + 2 * k + 1]))
                .collect()
        };
        table.states.push(pairs(1));
        if let Some(vel) = table.velocities.as_mut() {
            vel.push(pairs(1 + 2 * n));
        }
        let m = v.len();
        table.norms.push([v[m - 3], v[m - 2], v[m - 1]]);
    }
    Ok(table)
}

/// Long-format nodal values `t, node, theta, re, im` reconstructed from the
/// coefficients at every mesh node.
pub fn write_nodal_csv(path: &Path, traj: &Trajectory, basis: &SpectralBasis) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "node", "theta", "re", "im"])?;
    for (s, &t) in traj.times.iter().enumerate() {
        let u = basis.reconstruct(&traj.states[s]);
        for (j, (z, theta)) in u.iter().zip(&basis.mesh.nodes).enumerate() {
            w.write_record([f(t), j.to_string(), f(*theta), f(z.re), f(z.im)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Two-column series with the given header.
pub fn write_series_csv(path: &Path, header: [&str; 2], x: &[f64], y: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (a, b) in x.iter().zip(y) {
        w.write_record([f(*a), f(*b)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{wave_evolve, CoefVec, ForcingTerm};
    use std::sync::Arc;

    #[test]
    fn trajectory_round_trip() {
        let lam: Arc<[f64]> = Arc::from(vec![0.0, 4.0 / std::f64::consts::PI, 3.3]);
        let g = CoefVec::new(
            vec![
                Complex64::new(0.1, 0.0),
                Complex64::new(0.25, -0.3),
                Complex64::new(1e-17, 2.5),
            ],
            lam.clone(),
        )
        .unwrap();
        let h = CoefVec::from_real(&[0.3, 0.0, -1.0 / 3.0], lam.clone()).unwrap();
        let traj = wave_evolve(&g, &h, &ForcingTerm::Zero, 2.0, 17).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_trajectory_csv(&p, &traj).unwrap();
        let back = read_trajectory_csv(&p).unwrap();
        assert_eq!(back.times, traj.times);
        assert_eq!(back.states, traj.states);
        assert_eq!(back.velocities, traj.velocities);
        assert!(back.norm_mismatch(Equation::Wave, &lam) <= 1e-12);
        assert_eq!(back.norm_mismatch(Equation::Wave, &lam), 0.0);
    }

    #[test]
    fn rejects_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "x,y\n1,2\n").unwrap();
        assert!(read_trajectory_csv(&p).is_err());
    }
}
