//! The `kf` command-line front end.
//!
//! Every subcommand reads a JSON [`ProblemSpec`](spec::ProblemSpec) and
//! writes its artifacts into the output directory. Exit codes: 0 when the
//! command ran and its checks passed, 1 when a numerical check failed, 2
//! when the input was invalid. Failures also leave an `error.json` with a
//! `kind` tag and a message.

pub mod commands;
pub mod spec;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::write_json;
use spec::ProblemSpec;

#[derive(Debug, Parser)]
#[command(name = "kf", version, about = "Kreĭn–Feller spectral solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Problem spec (JSON). Optional for commands with built-in defaults.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomized probes; overrides the spec's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenpairs of the discretized operator.
    Eig,
    /// Linear or semi-linear evolution.
    Solve,
    /// Finite-scale L∞-dimension estimate.
    Dim,
    /// Invariant and acceptance checks.
    Verify,
    /// Bi-Lipschitz scan of the halving map.
    Bilip,
    /// Checks of the tabulated torus GIFS.
    GifsCheck,
    /// Solver against closed-form solutions on the circle.
    OracleCompare,
}

impl Command {
    fn needs_spec(self) -> bool {
        matches!(self, Command::Eig | Command::Solve | Command::Dim)
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    kind: &'a str,
    message: String,
    exit_code: i32,
}

fn load_spec(cli: &Cli) -> Result<ProblemSpec> {
    match &cli.spec {
        Some(p) => ProblemSpec::load(p),
        None if cli.command.needs_spec() => {
            Err(Error::Config("--spec is required for this command".into()))
        }
        None => Ok(ProblemSpec::default()),
    }
}

/// Runs a parsed command and returns whether its checks passed.
pub fn execute(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // a pool that already exists (tests running several commands) is kept
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let spec = load_spec(cli)?;
    let seed = cli.seed.or(spec.seed).unwrap_or(0);
    let out: &Path = &cli.out;
    std::fs::create_dir_all(out)?;
    match cli.command {
        Command::Eig => commands::cmd_eig(&spec, out),
        Command::Solve => commands::cmd_solve(&spec, out),
        Command::Dim => commands::cmd_dim(&spec, out),
        Command::Verify => commands::cmd_verify(&spec, seed, out),
        Command::Bilip => commands::cmd_bilip(&spec, out),
        Command::GifsCheck => commands::cmd_gifs_check(&spec, out),
        Command::OracleCompare => commands::cmd_oracle_compare(&spec, out),
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!(
                "kf: numerical checks failed; see the report in {}",
                cli.out.display()
            );
            1
        }
        Err(e) => {
            let code = if e.is_validation() { 2 } else { 1 };
            eprintln!("kf: {e}");
            if std::fs::create_dir_all(&cli.out).is_ok() {
                let report = ErrorReport {
                    kind: e.kind(),
                    message: e.to_string(),
                    exit_code: code,
                };
                let _ = write_json(&cli.out.join("error.json"), &report);
            }
            code
        }
    }
}
