//! End-to-end pipelines (measure, eigenbasis, evolution) checked against
//! values worked out by hand from the closed-form solutions.

use std::f64::consts::PI;

use krein_feller::analysis::s_regularity_check;
use krein_feller::evolution::{evolve_on_grid, time_grid, CoefVec, Equation, ForcingTerm};
use krein_feller::geometry::ChartPoint;
use krein_feller::measure::{ball_mass, dirac_measure, ifs_invariant_measure, BallQuery, IfsSpec};
use krein_feller::oracle::Setting;
use krein_feller::spectral::{eigenbasis, SpectralBasis};
use krein_feller::Complex64;

/// Tent `(π − 2|θ|)/π`, written out here rather than taken from the oracle.
fn tent(theta: f64) -> f64 {
    let d = theta.abs().min(2.0 * PI - theta.abs());
    (PI - 2.0 * d) / PI
}

fn basis(setting: Setting, n: usize) -> SpectralBasis {
    eigenbasis(setting.domain(), n, &setting.measure(), 1.0).unwrap()
}

fn project(b: &SpectralBasis, f: impl Fn(f64) -> f64) -> CoefVec {
    let vals: Vec<Complex64> = b
        .mesh
        .nodes
        .iter()
        .map(|&t| Complex64::new(f(t), 0.0))
        .collect();
    CoefVec::new(b.project(&vals).unwrap(), b.eigenvalues.clone()).unwrap()
}

fn constant_forcing(b: &SpectralBasis, c: f64) -> ForcingTerm {
    let vals = vec![Complex64::new(c, 0.0); b.mesh.nodes.len()];
    ForcingTerm::Constant(b.project(&vals).unwrap())
}

/// Nodal values at the last grid time.
fn final_values(
    b: &SpectralBasis,
    eq: Equation,
    g: &CoefVec,
    f: &ForcingTerm,
    t: f64,
    steps: usize,
) -> Vec<Complex64> {
    let h = (eq == Equation::Wave).then(|| CoefVec::zeros(b.eigenvalues.clone()));
    let traj = evolve_on_grid(eq, g, h.as_ref(), f, &time_grid(t, steps).unwrap()).unwrap();
    b.reconstruct(traj.states.last().unwrap())
}

#[test]
fn wave_half_period_flips_sign() {
    let b = basis(Setting::HalfCircleDirichletDirac, 24);
    let g = project(&b, |t| tent(t) / 4.0);
    let u = final_values(
        &b,
        Equation::Wave,
        &g,
        &ForcingTerm::Zero,
        PI * PI.sqrt() / 2.0,
        10,
    );
    for (z, &t) in u.iter().zip(&b.mesh.nodes) {
        assert!((z.re + tent(t) / 4.0).abs() < 1e-13, "θ={t}");
        assert_eq!(z.im, 0.0);
    }
}

#[test]
fn schrodinger_quarter_turn() {
    // phase e^{−i(4/π)t}: −i at t = π²/8, −1 at t = π²/4
    let b = basis(Setting::HalfCircleDirichletDirac, 24);
    let g = project(&b, |t| tent(t) / 4.0);
    let u = final_values(
        &b,
        Equation::Schrodinger,
        &g,
        &ForcingTerm::Zero,
        PI * PI / 8.0,
        7,
    );
    for (z, &t) in u.iter().zip(&b.mesh.nodes) {
        assert!(z.re.abs() < 1e-13);
        assert!((z.im + tent(t) / 4.0).abs() < 1e-13);
    }
    let u = final_values(
        &b,
        Equation::Schrodinger,
        &g,
        &ForcingTerm::Zero,
        PI * PI / 4.0,
        7,
    );
    for (z, &t) in u.iter().zip(&b.mesh.nodes) {
        assert!((z.re + tent(t) / 4.0).abs() < 1e-13);
        assert!(z.im.abs() < 1e-13);
    }
}

#[test]
fn heat_equilibria() {
    let b = basis(Setting::HalfCircleDirichletDirac, 24);
    let g = project(&b, |t| tent(t) / 4.0);
    // e^{−(4/π)·40} ≈ 1e−22
    for (c, eq) in [(0.125, PI / 32.0), (0.75, 3.0 * PI / 16.0)] {
        let u = final_values(&b, Equation::Heat, &g, &constant_forcing(&b, c), 40.0, 4000);
        for (z, &t) in u.iter().zip(&b.mesh.nodes) {
            assert!((z.re - eq * tent(t)).abs() < 1e-10, "c={c} θ={t}");
        }
    }
}

#[test]
fn full_circle_heat_at_quarter_pi() {
    let b = basis(Setting::FullCircleTwoDirac, 32);
    let g = project(&b, |t| 1.0 + tent(t));
    let u = final_values(&b, Equation::Heat, &g, &ForcingTerm::Zero, PI / 4.0, 5);
    let e = (-1.0f64).exp();
    for (z, &t) in u.iter().zip(&b.mesh.nodes) {
        assert!((z.re - (1.0 + tent(t) * e)).abs() < 1e-13, "θ={t}");
    }
}

#[test]
fn tent_coefficient_and_norms() {
    let b = basis(Setting::HalfCircleDirichletDirac, 16);
    // ‖tent‖_μ = 1, so φ/4 has the single coefficient 1/4
    let g = project(&b, |t| tent(t) / 4.0);
    assert!((g.coeffs[0].re - 0.25).abs() < 1e-14);
    let e1 = CoefVec::from_real(&[1.0], b.eigenvalues.clone()).unwrap();
    assert!((e1.dom_e() - 2.0 / PI.sqrt()).abs() < 1e-12);
}

#[test]
fn measures_and_regularity() {
    let c = |t: f64| ChartPoint::circle(t).unwrap();
    let two = dirac_measure(&[c(0.0), c(PI)], &[1.0, 1.0]).unwrap();
    assert_eq!(
        ball_mass(&two, &BallQuery::new(c(0.0), 3.0).unwrap()).unwrap(),
        1.0
    );
    assert_eq!(
        ball_mass(&two, &BallQuery::new(c(0.0), 3.2).unwrap()).unwrap(),
        2.0
    );

    let m =
        ifs_invariant_measure(&IfsSpec::three_map_uniform(), IfsSpec::default_seed(), 2).unwrap();
    assert_eq!(m.len(), 9);
    assert!(m
        .atoms()
        .iter()
        .all(|a| (a.weight - 1.0 / 9.0).abs() < 1e-15));

    let r = s_regularity_check(&m, 0.5, 0.5, 1, &[0.5, 0.25]).unwrap();
    assert!((r.s - 1.0).abs() < 1e-15);
    assert!(!r.vacuous);
    let r = s_regularity_check(&m, 0.5, 1.0 / 3.0, 12, &[0.5]).unwrap();
    assert!(r.vacuous);
}
