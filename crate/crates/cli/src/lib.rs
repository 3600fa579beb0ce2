//! Command-line front end: config loading, stage orchestration and report output.

pub mod config;
pub mod report;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{ConfigError, ConstructRun, OnepointRun, Overrides, SelftestRun};
use run::RunOutput;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "QDOMAIN_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "qdomain", version, about = "Construct and certify quadrature domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "qdomain-out")]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Multiplies every tolerance in the config.
    #[arg(long, global = true)]
    pub tolerance_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Build a quadrature domain and certify its identity.
    Construct,
    /// Certify the one-point identity for a polynomial automorphism.
    Onepoint,
    /// Check the Bergman kernels of the canonical domains.
    Selftest,
}

fn workers() -> Result<Option<usize>, ConfigError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError::Invalid(format!("{WORKERS_ENV}={s} is not a positive integer"))),
        },
    }
}

fn require(path: &Option<PathBuf>) -> Result<&PathBuf, ConfigError> {
    path.as_ref()
        .ok_or_else(|| ConfigError::Invalid("--config is required for this command".into()))
}

enum Prepared {
    Construct(ConstructRun),
    Onepoint(OnepointRun),
    Selftest(SelftestRun),
}

fn prepare(cli: &Cli) -> Result<(Prepared, f64), ConfigError> {
    let ov = Overrides {
        seed: cli.seed,
        tolerance_scale: cli.tolerance_scale,
    };
    let scale = ov.scale()?;
    let p = match cli.command {
        Command::Construct => Prepared::Construct(config::read::<ConstructRun>(require(&cli.config)?)?.prepare(&ov)?),
        Command::Onepoint => Prepared::Onepoint(config::read::<OnepointRun>(require(&cli.config)?)?.prepare(&ov)?),
        Command::Selftest => {
            let run = match &cli.config {
                Some(p) => config::read::<SelftestRun>(p)?,
                None => SelftestRun::default(),
            };
            Prepared::Selftest(run.prepare(&ov)?)
        }
    };
    Ok((p, scale))
}

fn execute(p: &Prepared, scale: f64) -> RunOutput {
    match p {
        Prepared::Construct(r) => run::cmd_construct(r, scale),
        Prepared::Onepoint(r) => run::cmd_onepoint(r, scale),
        Prepared::Selftest(r) => run::cmd_selftest(r, scale),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run_cli(cli: &Cli) -> i32 {
    let (prepared, scale) = match prepare(cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("qdomain: {e}");
            return EXIT_USAGE;
        }
    };
    let threads = match workers() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("qdomain: {e}");
            return EXIT_USAGE;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let out = match builder.build() {
        Ok(pool) => pool.install(|| execute(&prepared, scale)),
        Err(e) => {
            eprintln!("qdomain: cannot start worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = report::write_outputs(&cli.out, &out.report, &out.timing, out.cloud.as_ref()) {
        eprintln!("qdomain: cannot write outputs to {}: {e}", cli.out.display());
        return EXIT_FAIL;
    }
    for s in &out.report.stages {
        let mark = if s.pass { "ok  " } else { "FAIL" };
        println!("{mark} {:<24} {}", s.stage, s.detail.as_deref().unwrap_or(""));
    }
    for n in &out.report.notes {
        println!("note: {n}");
    }
    if out.report.passed() {
        println!("PASS  ({})", cli.out.display());
        EXIT_PASS
    } else {
        println!(
            "FAIL at stage {}  ({})",
            out.report.failed_stage.as_deref().unwrap_or("?"),
            cli.out.display()
        );
        EXIT_FAIL
    }
}

/// Parses `args` (including the program name) and runs; clap usage errors map to exit code 2.
pub fn run_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run_cli(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            code
        }
    }
}
