use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::spec::{BilipSpec, DimensionSpec, ProblemSpec, RegularitySpec};
use crate::analysis::{
    bilipschitz_scan, estimate_dim_infinity, gifs_strongly_connected, is_closed_walk,
    s_regularity_check, BiLipschitzReport, Connectivity, RegularityReport,
};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve_on_grid, time_grid, weak_residual, CoefVec, Equation, ForcingTerm, Trajectory,
};
use crate::io::{write_json, write_nodal_csv, write_series_csv, write_trajectory_csv};
use crate::measure::{
    gifs_invariant_measure, ifs_invariant_measure, ContainmentCheck, GifsSpec, IfsSpec,
};
use crate::oracle::{
    oracle_eigen, oracle_forcing, oracle_initial, oracle_solution, OracleParams, Setting,
};
use crate::semilinear::picard_solve;
use crate::spectral::{eigenbasis, EigenbasisFile, SpectralBasis};

/// Whether a command's numerical checks passed.
pub type Passed = bool;

/// Closed walk through all vertices of the tabulated torus GIFS.
pub const TABULATED_WALK: [usize; 18] = [1, 8, 12, 2, 9, 11, 3, 4, 5, 6, 2, 9, 7, 8, 10, 12, 5, 1];

const ORACLE_RESOLUTION: usize = 32;

#[derive(Serialize)]
struct EigReport {
    #[serde(flatten)]
    basis: EigenbasisFile,
    mass_rank: usize,
    max_residual: f64,
    stiffness_norm: f64,
    orthonormality_defect: f64,
}

pub fn cmd_eig(spec: &ProblemSpec, out: &Path) -> Result<Passed> {
    let b = spec.basis()?;
    let report = EigReport {
        basis: b.export(),
        mass_rank: b.pencil.mass_rank(),
        max_residual: b.max_residual(),
        stiffness_norm: b.stiffness_norm(),
        orthonormality_defect: b.orthonormality_defect(),
    };
    write_json(&out.join("eigenbasis.json"), &report)?;
    Ok(true)
}

#[derive(Serialize)]
struct SolveManifest {
    command: &'static str,
    equation: Equation,
    semilinear: bool,
    modes: usize,
    eigenvalues: Vec<f64>,
    mesh_nodes: usize,
    t_end: f64,
    steps: usize,
    forcing: String,
    sample_times: Vec<f64>,
    sample_indices: Vec<usize>,
    initial_norms: [f64; 3],
    final_norms: [f64; 3],
    max_relative_energy_drift: f64,
    files: Vec<&'static str>,
}

fn sample_indices(grid: &[f64], samples: &[f64]) -> Result<Vec<usize>> {
    let t_end = *grid.last().unwrap();
    let tol = 1e-9 * t_end.max(1.0);
    samples
        .iter()
        .map(|&t| {
            let q = grid.partition_point(|&x| x < t - tol);
            if q < grid.len() && (grid[q] - t).abs() <= tol {
                Ok(q)
            } else {
                Err(Error::Invalid(format!(
                    "sample time {t} is not a grid time; adjust steps"
                )))
            }
        })
        .collect()
}

fn energy_drift(traj: &Trajectory) -> f64 {
    let e0 = traj.traces[0].energy;
    let scale = if e0 > 0.0 { e0 } else { 1.0 };
    traj.traces
        .iter()
        .map(|t| (t.energy - e0).abs() / scale)
        .fold(0.0, f64::max)
}

pub fn cmd_solve(spec: &ProblemSpec, out: &Path) -> Result<Passed> {
    let b = spec.basis()?;
    let eq = spec.equation()?;
    let (g, h) = spec.initial_data(&b)?;
    let f = spec.forcing(&b)?;
    let t_end = spec.t_end()?;
    let steps = spec.steps()?;
    let grid = time_grid(t_end, steps)?;
    let indices = sample_indices(&grid, &spec.sample_times)?;
    let mut files = vec!["trajectory.csv", "nodal.csv", "manifest.json"];

    let semilinear = spec.nonlinearity.is_some();
    let traj = match spec.nonlinearity {
        Some(nl) => {
            let mut cfg = spec.picard.unwrap_or_default();
            if cfg.time_slices == 0 || steps % cfg.time_slices != 0 {
                return Err(Error::Invalid(format!(
                    "steps {steps} must be a multiple of time_slices {}",
                    cfg.time_slices
                )));
            }
            cfg.steps_per_slice = steps / cfg.time_slices;
            let (traj, report) = picard_solve(eq, &b, &g, h.as_ref(), &f, nl, t_end, &cfg)?;
            write_json(&out.join("iterations.json"), &report)?;
            files.push("iterations.json");
            traj
        }
        None => evolve_on_grid(eq, &g, h.as_ref(), &f, &grid)?,
    };
    write_trajectory_csv(&out.join("trajectory.csv"), &traj)?;
    write_nodal_csv(&out.join("nodal.csv"), &traj, &b)?;
    if !indices.is_empty() {
        let mut w = csv::Writer::from_path(out.join("samples.csv"))?;
        w.write_record(["t", "node", "theta", "re", "im"])?;
        for &s in &indices {
            let u = b.reconstruct(&traj.states[s]);
            for (j, (z, th)) in u.iter().zip(&b.mesh.nodes).enumerate() {
                w.write_record([
                    format!("{}", traj.times[s]),
                    j.to_string(),
                    format!("{th}"),
                    format!("{}", z.re),
                    format!("{}", z.im),
                ])?;
            }
        }
        w.flush()?;
        files.push("samples.csv");
    }
    let norms = |s: usize| {
        let t = &traj.traces[s];
        [t.mu, t.dom_e, t.energy]
    };
    let manifest = SolveManifest {
        command: "solve",
        equation: eq,
        semilinear,
        modes: b.len(),
        eigenvalues: b.eigenvalues.to_vec(),
        mesh_nodes: b.mesh.nodes.len(),
        t_end,
        steps,
        forcing: f.describe(),
        sample_times: spec.sample_times.clone(),
        sample_indices: indices,
        initial_norms: norms(0),
        final_norms: norms(traj.times.len() - 1),
        max_relative_energy_drift: energy_drift(&traj),
        files,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(true)
}

pub fn cmd_dim(spec: &ProblemSpec, out: &Path) -> Result<Passed> {
    let m = spec.measure()?;
    let d = spec.dimension.unwrap_or_default();
    let n = m.manifold().dimension();
    let est = estimate_dim_infinity(&m, d.delta0, d.rho, d.levels, n)?;
    write_json(&out.join("dimension.json"), &est)?;
    let lx: Vec<f64> = est.radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = est.sup_masses.iter().map(|s| s.ln()).collect();
    write_series_csv(
        &out.join("dimension.csv"),
        ["ln_delta", "ln_sup_mass"],
        &lx,
        &ly,
    )?;
    Ok(true)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn below(name: &str, value: f64, tolerance: f64, detail: String) -> Self {
        Check {
            name: name.into(),
            pass: value <= tolerance,
            value,
            tolerance,
            detail,
        }
    }
}

#[derive(Serialize)]
struct VerifyReport {
    seed: u64,
    probes: usize,
    checks: Vec<Check>,
    all_pass: bool,
}

fn setting_name(s: Setting) -> &'static str {
    match s {
        Setting::HalfCircleDirichletDirac => "half_circle",
        Setting::FullCircleTwoDirac => "full_circle",
    }
}

/// `x_kᵀ K x_k` for every basis vector: eigenvalues recomputed from the
/// stiffness matrix, independent of the values stored in the basis.
fn rayleigh_eigenvalues(b: &SpectralBasis) -> Vec<f64> {
    b.vectors
        .iter()
        .map(|x| {
            let v = DVector::from_column_slice(x);
            v.dot(&(&b.pencil.k * &v))
        })
        .collect()
}

fn random_coeffs(rng: &mut ChaCha8Rng, lam: &Arc<[f64]>, complex: bool) -> CoefVec {
    let coeffs = (0..lam.len())
        .map(|_| {
            let im = if complex {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            };
            Complex64::new(rng.gen_range(-1.0..1.0), im)
        })
        .collect();
    CoefVec::new(coeffs, lam.clone()).expect("lengths match")
}

fn oracle_data(
    b: &SpectralBasis,
    setting: Setting,
    eq: Equation,
    params: &OracleParams,
) -> Result<CoefVec> {
    let vals: Vec<Complex64> = b
        .mesh
        .nodes
        .iter()
        .map(|&t| oracle_initial(setting, eq, params, t).map(|v| Complex64::new(v, 0.0)))
        .collect::<Result<_>>()?;
    CoefVec::new(b.project(&vals)?, b.eigenvalues.clone())
}

fn oracle_forcing_term(
    b: &SpectralBasis,
    eq: Equation,
    params: &OracleParams,
) -> Result<ForcingTerm> {
    let c = oracle_forcing(eq, params);
    if c == 0.0 {
        return Ok(ForcingTerm::Zero);
    }
    Ok(ForcingTerm::Constant(b.project(&vec![
        Complex64::new(
            c, 0.0
        );
        b.mesh.nodes.len()
    ])?))
}

/// Residuals of the weak form on oracle data for 4 grids `steps·2^j`, and
/// the successive ratios.
pub fn weak_residual_ratios(
    setting: Setting,
    eq: Equation,
    t_end: f64,
    steps: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = eigenbasis(setting.domain(), ORACLE_RESOLUTION, &setting.measure(), 1.0)?;
    let params = OracleParams::default();
    let g = oracle_data(&b, setting, eq, &params)?;
    let h = (eq == Equation::Wave).then(|| CoefVec::zeros(b.eigenvalues.clone()));
    let f = oracle_forcing_term(&b, eq, &params)?;
    let k = b.len() - 1;
    let mut res = Vec::new();
    for j in 0..4 {
        let traj = evolve_on_grid(eq, &g, h.as_ref(), &f, &time_grid(t_end, steps << j)?)?;
        res.push(weak_residual(&traj, &f, k)?);
    }
    let ratios = res.windows(2).map(|w| w[0] / w[1]).collect();
    Ok((res, ratios))
}

pub fn cmd_verify(spec: &ProblemSpec, seed: u64, out: &Path) -> Result<Passed> {
    let vs = spec.verify.clone().unwrap_or_default();
    let probes = vs.probes.unwrap_or(4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    for setting in [
        Setting::HalfCircleDirichletDirac,
        Setting::FullCircleTwoDirac,
    ] {
        let name = setting_name(setting);
        let b = eigenbasis(setting.domain(), ORACLE_RESOLUTION, &setting.measure(), 1.0)?;
        let true_lam: Arc<[f64]> = Arc::from(rayleigh_eigenvalues(&b));
        let mut run_lam = b.eigenvalues.to_vec();
        if let Some((k, delta)) = vs.perturb_eigenvalue {
            if k >= run_lam.len() {
                return Err(Error::Invalid(format!(
                    "perturbed eigenvalue {k} out of range"
                )));
            }
            run_lam[k] += delta;
        }
        let run_lam: Arc<[f64]> = Arc::from(run_lam);
        let params = OracleParams::default();

        // wave energy, measured with the stiffness-matrix eigenvalues
        let mut data = vec![(
            oracle_data(&b, setting, Equation::Wave, &params)?,
            CoefVec::zeros(b.eigenvalues.clone()),
        )];
        for _ in 0..probes {
            data.push((
                random_coeffs(&mut rng, &b.eigenvalues, false),
                random_coeffs(&mut rng, &b.eigenvalues, false),
            ));
        }
        let t_wave = PI * PI.sqrt();
        let mut drift = 0.0f64;
        for (g, h) in &data {
            let g = CoefVec::new(g.coeffs.clone(), run_lam.clone())?;
            let h = CoefVec::new(h.coeffs.clone(), run_lam.clone())?;
            let traj = evolve_on_grid(
                Equation::Wave,
                &g,
                Some(&h),
                &ForcingTerm::Zero,
                &time_grid(t_wave, 200)?,
            )?;
            let remeasured = Trajectory::new(
                Equation::Wave,
                true_lam.clone(),
                traj.times.clone(),
                traj.states.clone(),
                traj.velocities.clone(),
            );
            drift = drift.max(energy_drift(&remeasured));
        }
        checks.push(Check::below(
            &format!("energy_conservation/{name}"),
            drift,
            1e-10,
            format!("{} data sets, wave on [0, π√π], relative drift", data.len()),
        ));

        // heat contraction and Schrödinger unitarity on random data
        let mut growth = 0.0f64;
        let mut unitarity = 0.0f64;
        for _ in 0..probes.max(1) {
            let g = random_coeffs(&mut rng, &run_lam, true);
            let grid = time_grid(3.0, 150)?;
            let heat = evolve_on_grid(Equation::Heat, &g, None, &ForcingTerm::Zero, &grid)?;
            for w in heat.traces.windows(2) {
                growth = growth.max(w[1].mu - w[0].mu).max(w[1].dom_e - w[0].dom_e);
            }
            let sch = evolve_on_grid(Equation::Schrodinger, &g, None, &ForcingTerm::Zero, &grid)?;
            let m0 = sch.traces[0].mu;
            unitarity = unitarity.max(
                sch.traces
                    .iter()
                    .map(|t| (t.mu - m0).abs())
                    .fold(0.0, f64::max),
            );
        }
        checks.push(Check::below(
            &format!("heat_contraction/{name}"),
            growth,
            1e-14,
            "largest step increase of the μ and dom E norms".into(),
        ));
        checks.push(Check::below(
            &format!("schrodinger_unitarity/{name}"),
            unitarity,
            1e-10,
            "largest deviation of ‖u(t)‖_μ from ‖g‖_μ".into(),
        ));

        for (eq, t_end) in [
            (Equation::Wave, 2.0),
            (Equation::Heat, 1.0),
            (Equation::Schrodinger, 2.0),
        ] {
            let (res, ratios) = weak_residual_ratios(setting, eq, t_end, 20)?;
            let worst = ratios.iter().map(|r| (r - 4.0).abs()).fold(0.0, f64::max);
            checks.push(Check::below(
                &format!("weak_residual_order/{eq:?}/{name}").to_lowercase(),
                worst,
                0.5,
                format!("residuals {res:?}, ratios {ratios:?} (target 4)"),
            ));
        }
    }

    let bilip = bilipschitz_scan(
        spec.bilip.unwrap_or_default().grid(),
        spec.bilip.unwrap_or_default().cutoff,
    )?;
    let (bilip_ok, dev) = bilip_verdict(&bilip);
    checks.push(Check {
        name: "bilipschitz_scan".into(),
        pass: bilip_ok,
        value: dev,
        tolerance: 1e-3,
        detail: format!(
            "ratios in [{}, {}], checkpoint deviation from 1/2",
            bilip.min_ratio, bilip.max_ratio
        ),
    });

    let gifs = GifsSpec::torus_table().without_edges(&spec.gifs_delete_edges);
    gifs.validate()?;
    let conn = gifs_strongly_connected(&gifs);
    let walk_ok = conn
        .witness
        .as_ref()
        .is_some_and(|w| is_closed_walk(&gifs.adjacency(), w));
    checks.push(Check {
        name: "gifs_strongly_connected".into(),
        pass: conn.strongly_connected && walk_ok,
        value: conn.witness.as_ref().map_or(0.0, |w| w.len() as f64),
        tolerance: 0.0,
        detail: format!("witness {:?}", conn.witness),
    });

    let reg_spec = spec.s_regularity.unwrap_or(RegularitySpec {
        c: 0.5,
        p: 0.25,
        t: 12,
        r0: 0.25,
        levels: 6,
    });
    let gm = gifs_invariant_measure(&gifs, 3)?.combined();
    let reg = run_regularity(&gm, &reg_spec)?;
    checks.push(Check {
        name: "s_regularity".into(),
        pass: reg.vacuous || reg.violation_count == 0,
        value: reg.s,
        tolerance: 0.0,
        detail: if reg.vacuous {
            format!(
                "t(1 − p) ≥ 1: exponent s = {} is not positive, bound flagged vacuous",
                reg.s
            )
        } else {
            format!(
                "{} violations over {} balls",
                reg.violation_count, reg.balls_checked
            )
        },
    });

    let ifs = ifs_invariant_measure(&IfsSpec::three_map_uniform(), IfsSpec::default_seed(), 8)?;
    let d = DimensionSpec::default();
    let est = estimate_dim_infinity(&ifs, d.delta0, d.rho, d.levels, 2)?;
    checks.push(Check {
        name: "dimension_gate/ifs_depth_8".into(),
        pass: est.gate,
        value: est.slope,
        tolerance: 0.0,
        detail: format!(
            "slope {} ± {}, gate slope − stderr > 0",
            est.slope, est.slope_stderr
        ),
    });

    let all_pass = checks.iter().all(|c| c.pass);
    write_json(
        &out.join("verify.json"),
        &VerifyReport {
            seed,
            probes,
            checks,
            all_pass,
        },
    )?;
    Ok(all_pass)
}

fn run_regularity(
    m: &crate::measure::DiscreteMeasure,
    r: &RegularitySpec,
) -> Result<RegularityReport> {
    if r.levels == 0 || !(r.r0 > 0.0) {
        return Err(Error::Invalid(
            "s_regularity needs r0 > 0 and at least one level".into(),
        ));
    }
    let radii: Vec<f64> = (0..r.levels).map(|k| r.r0 * r.c.powi(k as i32)).collect();
    s_regularity_check(m, r.c, r.p, r.t, &radii)
}

fn bilip_verdict(r: &BiLipschitzReport) -> (bool, f64) {
    let dev = r
        .checkpoints
        .iter()
        .map(|c| c.deviation)
        .fold(0.0, f64::max);
    (r.bounds_hold && dev <= 1e-3, dev)
}

pub fn cmd_bilip(spec: &ProblemSpec, out: &Path) -> Result<Passed> {
    let bs: BilipSpec = spec.bilip.unwrap_or_default();
    let report = bilipschitz_scan(bs.grid(), bs.cutoff)?;
    write_json(&out.join("bilip.json"), &report)?;
    Ok(bilip_verdict(&report).0)
}

#[derive(Serialize)]
struct GifsReport {
    vertices: usize,
    edges: usize,
    deleted_edges: Vec<usize>,
    row_sums: Vec<String>,
    row_sums_exact: bool,
    all_contained: bool,
    max_excess: f64,
    containment: Vec<ContainmentCheck>,
    connectivity: Connectivity,
    tabulated_walk_valid: bool,
}

pub fn cmd_gifs_check(spec: &ProblemSpec, out: &Path) -> Result<Passed> {
    let g = GifsSpec::torus_table().without_edges(&spec.gifs_delete_edges);
    let sums = g.row_sums();
    let one = crate::measure::Rational::from_integer(1);
    let containment = g.containment(1e-12);
    let report = GifsReport {
        vertices: g.vertex_count(),
        edges: g.edges.len(),
        deleted_edges: spec.gifs_delete_edges.clone(),
        row_sums: sums.iter().map(|s| s.to_string()).collect(),
        row_sums_exact: sums.iter().all(|s| *s == one),
        all_contained: containment.iter().all(|c| c.contained),
        max_excess: containment.iter().map(|c| c.max_excess).fold(0.0, f64::max),
        containment,
        connectivity: gifs_strongly_connected(&g),
        tabulated_walk_valid: is_closed_walk(&g.adjacency(), &TABULATED_WALK),
    };
    write_json(&out.join("gifs.json"), &report)?;
    g.validate()?;
    Ok(report.all_contained && report.connectivity.strongly_connected)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Serialize)]
struct OracleReport {
    resolution: usize,
    comparisons: Vec<OracleComparison>,
    all_pass: bool,
}

/// Largest nodal error of a linear solve against the closed form, over all
/// grid times and mesh nodes.
pub fn oracle_solution_error(
    setting: Setting,
    eq: Equation,
    params: &OracleParams,
    resolution: usize,
    t_end: f64,
    steps: usize,
) -> Result<(f64, Trajectory)> {
    let b = eigenbasis(setting.domain(), resolution, &setting.measure(), 1.0)?;
    let g = oracle_data(&b, setting, eq, params)?;
    let h = (eq == Equation::Wave).then(|| CoefVec::zeros(b.eigenvalues.clone()));
    let f = oracle_forcing_term(&b, eq, params)?;
    let traj = evolve_on_grid(eq, &g, h.as_ref(), &f, &time_grid(t_end, steps)?)?;
    let mut err = 0.0f64;
    for (s, &t) in traj.times.iter().enumerate() {
        let want = oracle_solution(setting, eq, params, t, &b.mesh.nodes)?;
        let got = b.reconstruct(&traj.states[s]);
        for (w, z) in want.iter().zip(&got) {
            err = err.max((w.re - z.re).abs()).max((w.im - z.im).abs());
        }
    }
    Ok((err, traj))
}

pub fn oracle_comparisons(resolution: usize) -> Result<Vec<OracleComparison>> {
    let mut out = Vec::new();
    let mut push = |name: String, error: f64, tolerance: f64| {
        out.push(OracleComparison {
            name,
            error,
            tolerance,
            pass: error <= tolerance,
        })
    };
    for setting in [
        Setting::HalfCircleDirichletDirac,
        Setting::FullCircleTwoDirac,
    ] {
        let name = setting_name(setting);
        let p = oracle_eigen(setting);
        let b = eigenbasis(setting.domain(), resolution, &setting.measure(), 1.0)?;
        let count_err = if b.len() == p.eigenvalues.len() {
            0.0
        } else {
            f64::INFINITY
        };
        let lam_err = b
            .eigenvalues
            .iter()
            .zip(&p.eigenvalues)
            .map(|(a, e)| (a - e).abs())
            .fold(count_err, f64::max);
        push(format!("eigenvalues/{name}"), lam_err, 1e-9);
        let mut vec_err = 0.0f64;
        for k in 0..b.len().min(p.eigenvalues.len()) {
            let want = p.nodal_vector(k, &b.mesh.nodes)?;
            for (w, g) in want.iter().zip(b.nodal_vector(k)) {
                vec_err = vec_err.max((w - g).abs());
            }
        }
        push(format!("eigenvectors/{name}"), vec_err, 1e-9);

        let t_wave = PI * PI.sqrt();
        let (e, _) = oracle_solution_error(
            setting,
            Equation::Wave,
            &OracleParams::default(),
            resolution,
            t_wave,
            200,
        )?;
        push(format!("wave/{name}"), e, 1e-8);
        let heat_cases: Vec<OracleParams> = match setting {
            Setting::HalfCircleDirichletDirac => [0.0, 0.125, 0.75]
                .iter()
                .map(|&c| OracleParams {
                    c,
                    ..Default::default()
                })
                .collect(),
            Setting::FullCircleTwoDirac => vec![OracleParams::default()],
        };
        for params in heat_cases {
            let (e, _) =
                oracle_solution_error(setting, Equation::Heat, &params, resolution, 2.0, 200)?;
            push(format!("heat/{name}/c={}", params.c), e, 1e-8);
        }
        let (e, _) = oracle_solution_error(
            setting,
            Equation::Schrodinger,
            &OracleParams::default(),
            resolution,
            PI * PI,
            200,
        )?;
        push(format!("schrodinger/{name}"), e, 1e-8);
    }
    Ok(out)
}

pub fn cmd_oracle_compare(spec: &ProblemSpec, out: &Path) -> Result<Passed> {
    let resolution = spec.resolution.unwrap_or(ORACLE_RESOLUTION);
    let comparisons = oracle_comparisons(resolution)?;
    let all_pass = comparisons.iter().all(|c| c.pass);
    write_json(
        &out.join("oracle_compare.json"),
        &OracleReport {
            resolution,
            comparisons,
            all_pass,
        },
    )?;
    Ok(all_pass)
}
