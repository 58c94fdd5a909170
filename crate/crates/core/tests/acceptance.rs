//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use krein_feller::analysis::{
    bilipschitz_scan, estimate_dim_infinity, gifs_strongly_connected, is_closed_walk, ScanGrid,
};
use krein_feller::cli::commands::{oracle_solution_error, weak_residual_ratios};
use krein_feller::cli::spec::ProblemSpec;
use krein_feller::evolution::{wave_evolve, CoefVec, Equation, ForcingTerm, Trajectory};
use krein_feller::geometry::ChartPoint;
use krein_feller::measure::{dirac_measure, ifs_invariant_measure, GifsSpec, IfsSpec, Rational};
use krein_feller::oracle::{OracleParams, Setting, TENT_EIGENVALUE};
use krein_feller::semilinear::{picard_solve, Nonlinearity, PicardConfig};
use krein_feller::spectral::{eigenbasis, Domain};
use krein_feller::Complex64;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lift<T>(r: krein_feller::Result<T>) -> Result<T, String> {
    r.map_err(|e| format!("error: {e}"))
}

fn ac1() -> Outcome {
    let mu = Setting::HalfCircleDirichletDirac.measure();
    let dom = Domain::Arc {
        lo: -PI / 2.0,
        hi: PI / 2.0,
    };
    let mut worst = 0.0f64;
    let mut slowest = Duration::ZERO;
    for n in [4, 5, 8, 13, 32, 64, 128, 256] {
        let t0 = Instant::now();
        let b = lift(eigenbasis(dom, n, &mu, 1.0))?;
        slowest = slowest.max(t0.elapsed());
        if b.len() != 1 {
            return Err(format!("N={n}: {} finite eigenvalues", b.len()));
        }
        worst = worst.max((b.eigenvalues[0] - 4.0 / PI).abs());
    }
    check(
        worst <= 1e-9 && slowest < Duration::from_secs(1),
        format!("max |λ − 4/π| = {worst:.2e} over N ∈ [4, 256], slowest {slowest:?}"),
    )
}

fn ac2() -> Outcome {
    let b = lift(eigenbasis(
        Domain::FullCircle,
        64,
        &Setting::FullCircleTwoDirac.measure(),
        1.0,
    ))?;
    if b.len() != 2 {
        return Err(format!("{} finite eigenvalues", b.len()));
    }
    let err = b.eigenvalues[0]
        .abs()
        .max((b.eigenvalues[1] - 4.0 / PI).abs());
    let v = b.nodal_vector(0);
    let spread = v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
    check(
        err <= 1e-9 && spread <= 1e-9,
        format!("spectrum error {err:.2e}, first eigenvector spread {spread:.2e}"),
    )
}

fn relative_energy_drift(t: &Trajectory) -> f64 {
    let e0 = t.traces[0].energy;
    t.traces
        .iter()
        .map(|x| (x.energy - e0).abs() / e0)
        .fold(0.0, f64::max)
}

fn ac3() -> Outcome {
    let setting = Setting::HalfCircleDirichletDirac;
    let (err, traj) = lift(oracle_solution_error(
        setting,
        Equation::Wave,
        &OracleParams::default(),
        64,
        PI * PI.sqrt(),
        199,
    ))?;
    let drift = relative_energy_drift(&traj);
    check(
        traj.times.len() == 200 && err <= 1e-8 && drift <= 1e-10,
        format!(
            "{} times, max nodal error {err:.2e}, relative energy drift {drift:.2e}",
            traj.times.len()
        ),
    )
}

fn ac4() -> Outcome {
    let half = Setting::HalfCircleDirichletDirac;
    let mut parts = Vec::new();
    let mut ok = true;
    // (c, expected sign of successive μ-norm differences)
    for (c, dir) in [(0.0, -1.0), (0.125, -1.0), (0.75, 1.0)] {
        let params = OracleParams {
            c,
            ..Default::default()
        };
        let (err, traj) = lift(oracle_solution_error(
            half,
            Equation::Heat,
            &params,
            64,
            4.0,
            200,
        ))?;
        let mu: Vec<f64> = traj.traces.iter().map(|t| t.mu).collect();
        let monotone = mu.windows(2).all(|w| dir * (w[1] - w[0]) > 0.0);
        let eq = c / TENT_EIGENVALUE;
        let toward = (mu.last().unwrap() - eq).abs() < (mu[0] - eq).abs();
        ok &= err <= 1e-8 && monotone && toward;
        parts.push(format!("c={c}: err {err:.1e} monotone {monotone}"));
    }
    let (err, _) = lift(oracle_solution_error(
        Setting::FullCircleTwoDirac,
        Equation::Heat,
        &OracleParams::default(),
        64,
        4.0,
        200,
    ))?;
    ok &= err <= 1e-8;
    parts.push(format!("1 + φ₂e^(−4t/π): err {err:.1e}"));
    check(ok, parts.join("; "))
}

fn ac5() -> Outcome {
    let (err, traj) = lift(oracle_solution_error(
        Setting::HalfCircleDirichletDirac,
        Equation::Schrodinger,
        &OracleParams::default(),
        64,
        PI * PI,
        200,
    ))?;
    let m0 = traj.traces[0].mu;
    let dev = traj
        .traces
        .iter()
        .map(|t| (t.mu - m0).abs())
        .fold(0.0, f64::max);
    check(
        dev <= 1e-10 && err <= 1e-8,
        format!("norm deviation {dev:.2e}, max re/im error {err:.2e}"),
    )
}

fn ac6() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for setting in [
        Setting::HalfCircleDirichletDirac,
        Setting::FullCircleTwoDirac,
    ] {
        for (eq, t_end) in [
            (Equation::Wave, 2.0),
            (Equation::Heat, 1.0),
            (Equation::Schrodinger, 2.0),
        ] {
            let (_, ratios) = lift(weak_residual_ratios(setting, eq, t_end, 20))?;
            ok &= ratios.len() == 3 && ratios.iter().all(|r| (3.5..=4.5).contains(r));
            parts.push(format!(
                "{eq:?} {setting:?} {:.3}/{:.3}/{:.3}",
                ratios[0], ratios[1], ratios[2]
            ));
        }
    }
    check(ok, parts.join("; "))
}

fn ac7() -> Outcome {
    // c'' + λc = γ with c(0) = g, c'(0) = h
    let (lam, g, h, gamma) = (2.5f64, 0.3, -0.7, 1.1);
    let w = lam.sqrt();
    let t_end = 3.0;
    let exact = |t: f64| gamma / lam + (g - gamma / lam) * (w * t).cos() + h * (w * t).sin() / w;
    let eig: std::sync::Arc<[f64]> = std::sync::Arc::from(vec![lam]);
    let g0 = lift(CoefVec::from_real(&[g], eig.clone()))?;
    let h0 = lift(CoefVec::from_real(&[h], eig.clone()))?;
    let f = ForcingTerm::Constant(vec![Complex64::new(gamma, 0.0)]);
    let mut errs = Vec::new();
    for j in 0..6 {
        let traj = lift(wave_evolve(&g0, &h0, &f, t_end, 4 << j))?;
        let e = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, s)| (s[0] - exact(t)).norm())
            .fold(0.0, f64::max);
        errs.push(e);
    }
    let mut ok = true;
    let mut ratios = Vec::new();
    for w in errs.windows(2) {
        if w[1] < 1e-12 {
            break;
        }
        let r = w[0] / w[1];
        ok &= (12.0..=20.0).contains(&r);
        ratios.push(r);
    }
    ok &= ratios.len() >= 3;
    check(
        ok,
        format!(
            "errors {:?}, ratios {:?}",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    )
}

fn oracle_spec(setting: &str, eq: &str) -> Result<ProblemSpec, String> {
    let text = format!(
        r#"{{"measure": {{"kind": "oracle", "setting": "{setting}"}}, "resolution": 64,
            "equation": "{eq}", "initial": {{"kind": "oracle", "setting": "{setting}"}},
            "forcing": {{"kind": "zero"}}}}"#
    );
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn ac8() -> Outcome {
    let eps = 0.1;
    let nl = Nonlinearity::Linear { c: eps };
    let cfg = PicardConfig {
        tol: 1e-10,
        max_iter: 50,
        time_slices: 1,
        steps_per_slice: 200,
        min_slice_steps: 2,
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for setting in ["half_circle_dirichlet_dirac", "full_circle_two_dirac"] {
        let spec = oracle_spec(setting, "heat")?;
        let b = lift(spec.basis())?;
        let (g, _) = lift(spec.initial_data(&b))?;
        let (traj, rep) = lift(picard_solve(
            Equation::Heat,
            &b,
            &g,
            None,
            &ForcingTerm::Zero,
            nl,
            1.0,
            &cfg,
        ))?;
        let mut err = 0.0f64;
        for (&t, s) in traj.times.iter().zip(&traj.states) {
            let e2: f64 = (0..b.len())
                .map(|k| {
                    let lam = b.eigenvalues[k];
                    let want = g.coeffs[k] * (-(lam - eps) * t).exp();
                    let d = (s[k] - want).norm_sqr();
                    if lam > 0.0 {
                        lam * d
                    } else {
                        d
                    }
                })
                .sum();
            err = err.max(e2.sqrt());
        }
        ok &= rep.total_iterations <= 20 && rep.bisections == 0 && err <= 1e-6;
        parts.push(format!(
            "heat {setting}: {} iterations, domE error {err:.1e}",
            rep.total_iterations
        ));

        let spec = oracle_spec(setting, "schrodinger")?;
        let (g, _) = lift(spec.initial_data(&b))?;
        let (traj, rep) = lift(picard_solve(
            Equation::Schrodinger,
            &b,
            &g,
            None,
            &ForcingTerm::Zero,
            nl,
            1.0,
            &cfg,
        ))?;
        let modulus = traj
            .states
            .iter()
            .flat_map(|s| {
                s.iter()
                    .zip(&g.coeffs)
                    .map(|(a, b)| (a.norm() - b.norm()).abs())
            })
            .fold(0.0, f64::max);
        let m0 = traj.traces[0].mu;
        let norm_dev = traj
            .traces
            .iter()
            .map(|t| (t.mu - m0).abs())
            .fold(0.0, f64::max);
        ok &= rep.total_iterations <= 20 && modulus <= 1e-6 && norm_dev <= 1e-6;
        parts.push(format!(
            "schrödinger: {} iterations, modulus deviation {:.1e}",
            rep.total_iterations,
            modulus.max(norm_dev)
        ));
    }
    check(ok, parts.join("; "))
}

fn ac9() -> Outcome {
    let t0 = Instant::now();
    let r = lift(bilipschitz_scan(
        ScanGrid {
            na: 64,
            nb: 64,
            nalpha: 128,
        },
        1e-3,
    ))?;
    let elapsed = t0.elapsed();
    let dev = r
        .checkpoints
        .iter()
        .map(|c| c.deviation)
        .fold(0.0, f64::max);
    let ok = r.checkpoints.len() == 3
        && 0.0 < r.min_ratio
        && r.min_ratio <= r.max_ratio
        && r.max_ratio < 1.0
        && dev <= 1e-3
        && elapsed < Duration::from_secs(30);
    check(
        ok,
        format!(
            "c = {:.6}, r = {:.6}, checkpoint deviation {dev:.1e}, {elapsed:?}",
            r.min_ratio, r.max_ratio
        ),
    )
}

fn ac10() -> Outcome {
    let g = GifsSpec::torus_table();
    let one = Rational::from_integer(1);
    let sums_ok = g.row_sums().iter().all(|s| *s == one);
    let cont = g.containment(1e-12);
    let cont_ok = cont.iter().all(|c| c.contained);
    let conn = gifs_strongly_connected(&g);
    let walk_ok = conn.witness.as_ref().is_some_and(|w| {
        let mut seen = w.clone();
        seen.sort_unstable();
        seen.dedup();
        is_closed_walk(&g.adjacency(), w) && seen.len() == g.vertex_count()
    });
    check(
        g.edges.len() == 48 && sums_ok && cont_ok && conn.strongly_connected && walk_ok,
        format!(
            "{} edges, exact row sums {sums_ok}, containment {cont_ok}, witness of length {}",
            g.edges.len(),
            conn.witness.as_ref().map_or(0, Vec::len)
        ),
    )
}

fn ac11() -> Outcome {
    let c = |t: f64| ChartPoint::circle(t).map_err(|e| e.to_string());
    let one = lift(dirac_measure(&[c(0.0)?], &[1.0]))?;
    let two = lift(dirac_measure(&[c(0.0)?, c(PI)?], &[1.0, 1.0]))?;
    let s1 = lift(estimate_dim_infinity(&one, 0.5, 0.5, 12, 1))?.slope;
    let s2 = lift(estimate_dim_infinity(&two, 0.5, 0.5, 12, 1))?.slope;
    let ifs = lift(ifs_invariant_measure(
        &IfsSpec::three_map_uniform(),
        IfsSpec::default_seed(),
        8,
    ))?;
    let e = lift(estimate_dim_infinity(&ifs, 0.5, 0.5, 12, 2))?;
    check(
        s1.abs() <= 1e-6 && s2.abs() <= 1e-6 && e.slope > 0.2 && e.gate,
        format!(
            "Dirac {s1:.1e}, two Diracs {s2:.1e}, IFS depth 8 slope {:.4} ± {:.4}",
            e.slope, e.slope_stderr
        ),
    )
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

fn ac12() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_kf");
    let specs = Path::new(env!("CARGO_MANIFEST_DIR")).join("specs");
    let tmp = std::env::temp_dir().join(format!("kf-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&tmp);
    let mut compared = 0;
    let runs = [
        ("solve", "wave_half_circle.json"),
        ("solve", "semilinear_heat.json"),
        ("verify", "verify.json"),
    ];
    let result = (|| {
        for (cmd, spec) in runs {
            let mut outs: Vec<PathBuf> = Vec::new();
            for (i, threads) in ["1", "1", "3"].iter().enumerate() {
                let out = tmp.join(format!("{cmd}-{spec}-{i}"));
                let status = Command::new(bin)
                    .arg(cmd)
                    .arg("--spec")
                    .arg(specs.join(spec))
                    .arg("--out")
                    .arg(&out)
                    .args(["--seed", "42", "--threads", threads])
                    .status()
                    .map_err(|e| e.to_string())?;
                if status.code() != Some(0) {
                    return Err(format!("{cmd} {spec} exited with {status}"));
                }
                outs.push(out);
            }
            let first = files(&outs[0]);
            for other in &outs[1..] {
                if files(other) != first {
                    return Err(format!("{cmd} {spec}: outputs differ between runs"));
                }
            }
            compared += first.len();
        }
        Ok(format!(
            "{compared} files byte-identical across 3 runs each (1, 1, 3 threads)"
        ))
    })();
    let _ = fs::remove_dir_all(&tmp);
    result
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("AC1 half-circle eigenvalue 4/π", ac1),
        ("AC2 full-circle spectrum {0, 4/π}", ac2),
        ("AC3 wave closed form and energy", ac3),
        ("AC4 heat closed forms and norm trends", ac4),
        ("AC5 Schrödinger unitarity and closed form", ac5),
        ("AC6 weak-form residual order", ac6),
        ("AC7 Duhamel quadrature order", ac7),
        ("AC8 semi-linear shifted-eigenvalue equivalence", ac8),
        ("AC9 bi-Lipschitz scan", ac9),
        ("AC10 torus GIFS checks", ac10),
        ("AC11 dimension gate", ac11),
        ("AC12 determinism", ac12),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t0 = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let ms = t0.elapsed().as_secs_f64() * 1e3;
        match r {
            Ok(d) => println!("PASS {name} ({ms:.0} ms): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name} ({ms:.0} ms): {d}");
            }
        }
    }
    println!("{} of 12 acceptance criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
