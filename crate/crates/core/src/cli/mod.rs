//! The `tclass` command-line front end.
//!
//! Every command reads one JSON document (`--config`), writes its results
//! under `--out`, and exits with 0 (success), 1 (configuration or input
//! error) or 2 (the run did not converge, or a check failed).

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::algorithms::{run, Driver, Outcome, Schedule, StoppingRule};
use crate::crosscheck::{self, Suite};
use crate::error::Error;
use crate::hilbert::Vector;
use crate::operators::{
    certify_f_quasi_nonexpansive, certify_monotone_lipschitz, certify_nonexpansive,
    certify_strict_pseudocontraction, certify_tclass, certify_vi_solution, CertReport, Sampler,
    VIInstance,
};
use crate::problems::{vi_grid_oracle_report, BuildOptions, InstanceSpec};
use crate::spectral_norm;

pub use config::{Check, CertifyConfig, CrosscheckConfig, OracleConfig, ProblemRef, RunConfig, Variant};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_FAILED: u8 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Parser)]
#[command(name = "tclass", version, about = "Haugazeau and Mann iterations for T-class operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a driver and write the trace CSV plus a JSON sidecar.
    Run(CommonArgs),
    /// Run a sampling certifier and write its report.
    Certify(CommonArgs),
    /// Run an oracle cross-check suite and write its summary.
    Crosscheck(CommonArgs),
    /// Solve a small VI by the brute-force grid oracle.
    Oracle(CommonArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Overrides the stopping tolerances of `run` and the tolerance of `crosscheck`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Trace format for `run`.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// Where a command reads relative paths from and writes its outputs to.
#[derive(Debug, Clone)]
pub struct Context {
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl Context {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            base_dir: PathBuf::from("."),
            out_dir: out_dir.into(),
            format: Format::Csv,
        }
    }

    fn write(&self, name: &Path, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        let io = |source| CliError::Io {
            path: path.clone(),
            source,
        };
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
        std::fs::write(&path, contents).map_err(io)?;
        Ok(path)
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let (Command::Run(args)
    | Command::Certify(args)
    | Command::Crosscheck(args)
    | Command::Oracle(args)) = &cli.command;
    let ctx = Context {
        base_dir: args
            .config
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
        out_dir: args.out.clone(),
        format: args.format,
    };
    let result = match &cli.command {
        Command::Run(_) => load::<RunConfig>(&args.config).map(|mut cfg| {
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            if let Some(m) = args.max_iter {
                cfg.max_iter = Some(m);
            }
            if let Some(t) = args.tol {
                cfg.tol_step = Some(t);
                cfg.tol_residual = Some(t);
            }
            cmd_run(&cfg, &ctx)
        }),
        Command::Certify(_) => load::<CertifyConfig>(&args.config).map(|mut cfg| {
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            cmd_certify(&cfg, &ctx)
        }),
        Command::Crosscheck(_) => load::<CrosscheckConfig>(&args.config).map(|mut cfg| {
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            if let Some(t) = args.tol {
                cfg.tol = Some(t);
            }
            cmd_crosscheck(&cfg, &ctx)
        }),
        Command::Oracle(_) => load::<OracleConfig>(&args.config).map(|cfg| cmd_oracle(&cfg, &ctx)),
    };
    result.unwrap_or_else(|e| report_error(&e))
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn report_error(e: &CliError) -> u8 {
    eprintln!("error: {e}");
    EXIT_ERROR
}

fn to_json(value: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
struct RunSidecar<'a> {
    outcome: Outcome,
    converged: bool,
    exit_code: u8,
    iterations: usize,
    final_x: &'a Vector,
    final_residual: f64,
    final_dist_oracle: Option<f64>,
    driver: Driver,
    variant: &'static str,
    seed: u64,
    trace: &'a Path,
    instance: &'a InstanceSpec,
    schedule: &'a Schedule,
    stopping: &'a StoppingRule,
}

/// Builds the instance, validates the schedule, runs the driver and writes
/// the trace and sidecar.
pub fn cmd_run(cfg: &RunConfig, ctx: &Context) -> u8 {
    run_inner(cfg, ctx).unwrap_or_else(|e| report_error(&e))
}

fn run_inner(cfg: &RunConfig, ctx: &Context) -> Result<u8, CliError> {
    let spec = cfg.problem.resolve(&ctx.base_dir)?;
    let opts = BuildOptions {
        sampler: Sampler::new(5.0, cfg.seed),
        grid_resolution: None,
    };
    let instance = spec.build(&opts)?;
    if let Some(v) = cfg.variant {
        if v.name() != instance.variant() {
            return Err(CliError::Config(format!(
                "variant {:?} does not match the instance ({})",
                v.name(),
                instance.variant()
            )));
        }
    }
    let schedule = cfg.schedule();
    let stopping = cfg.stopping();
    stopping.validate()?;
    if cfg.driver == Driver::Mann {
        schedule.validate_epsilon()?;
    }
    let operators = instance.operators(&schedule)?;
    let oracle = instance.oracle.as_ref().filter(|o| !o.is_empty());
    let trace = run(cfg.driver, &cfg.x0, &*operators, &schedule, &stopping, oracle)?;

    let (trace_name, body) = match ctx.format {
        Format::Csv => (cfg.trace.clone(), trace.to_csv()),
        Format::Json => (cfg.trace.with_extension("json"), to_json(&trace)),
    };
    ctx.write(&trace_name, &body)?;

    let exit_code = if trace.outcome.is_converged() {
        EXIT_OK
    } else {
        EXIT_FAILED
    };
    let last = trace.last();
    let sidecar = RunSidecar {
        outcome: trace.outcome,
        converged: trace.outcome.is_converged(),
        exit_code,
        iterations: trace.iterations(),
        final_x: &last.x,
        final_residual: last.residual,
        final_dist_oracle: last.dist_oracle,
        driver: cfg.driver,
        variant: instance.variant(),
        seed: cfg.seed,
        trace: &trace_name,
        instance: instance.spec(),
        schedule: &schedule,
        stopping: &stopping,
    };
    ctx.write(&cfg.sidecar, &to_json(&sidecar))?;
    println!(
        "{:?} after {} iterations; x = {:?}, residual = {:e}",
        trace.outcome,
        trace.iterations(),
        last.x.coords(),
        last.residual
    );
    Ok(exit_code)
}

/// Runs the configured certifier and writes its [`CertReport`].
pub fn cmd_certify(cfg: &CertifyConfig, ctx: &Context) -> u8 {
    certify_inner(cfg, ctx).unwrap_or_else(|e| report_error(&e))
}

fn certify_report(cfg: &CertifyConfig) -> Result<CertReport, CliError> {
    if !(cfg.radius > 0.0 && cfg.radius.is_finite()) {
        return Err(CliError::Config("radius must be positive and finite".into()));
    }
    let sampler = Sampler::new(cfg.radius, cfg.seed);
    let map = cfg.operator.to_mapping()?;
    let n = cfg.n_samples;
    let need = |what: &str| CliError::Config(format!("check {:?} needs `{what}`", cfg.check));
    let report = match cfg.check {
        Check::Spc => {
            let kappa = cfg.kappa.ok_or_else(|| need("kappa"))?;
            certify_strict_pseudocontraction(&map, kappa, &sampler, n)?
        }
        Check::Monotone => {
            certify_monotone_lipschitz(&map, lipschitz(cfg)?, &sampler, n)?
        }
        Check::Nonexpansive => certify_nonexpansive(&map, &sampler, n)?,
        Check::FQuasiNonexpansive => {
            if cfg.points.is_empty() {
                return Err(need("points"));
            }
            certify_f_quasi_nonexpansive(&map, &cfg.points, &sampler, n)?
        }
        Check::Tclass => {
            if cfg.points.is_empty() {
                return Err(need("points"));
            }
            certify_tclass(&map, &cfg.points, &sampler, n)?
        }
        Check::ViSolution => {
            let set = cfg.set.as_ref().ok_or_else(|| need("set"))?;
            let u = cfg.u.as_ref().ok_or_else(|| need("u"))?;
            let vi = VIInstance::new(set.clone(), map, lipschitz(cfg)?, (0.1, 0.9))?;
            certify_vi_solution(&vi, u, &sampler, n)?
        }
    };
    Ok(report)
}

fn lipschitz(cfg: &CertifyConfig) -> Result<f64, CliError> {
    if let Some(k) = cfg.k {
        return Ok(k);
    }
    let norm = spectral_norm(&cfg.operator.matrix()?);
    Ok(if norm > 0.0 { norm } else { 1.0 })
}

fn certify_inner(cfg: &CertifyConfig, ctx: &Context) -> Result<u8, CliError> {
    let report = certify_report(cfg)?;
    ctx.write(&cfg.report, &to_json(&report))?;
    println!(
        "{}: {} over {} samples (worst margin {:e})",
        report.check,
        if report.passed { "pass" } else { "fail" },
        report.n_samples,
        report.worst_margin
    );
    Ok(if report.passed { EXIT_OK } else { EXIT_FAILED })
}

/// Runs a cross-check suite and writes `{suite, n_cases, max_discrepancy, failures}`.
pub fn cmd_crosscheck(cfg: &CrosscheckConfig, ctx: &Context) -> u8 {
    crosscheck_inner(cfg, ctx).unwrap_or_else(|e| report_error(&e))
}

fn crosscheck_inner(cfg: &CrosscheckConfig, ctx: &Context) -> Result<u8, CliError> {
    let summary = match cfg.suite {
        Suite::HaugazeauVsQp => crosscheck::haugazeau_vs_qp(
            cfg.n_cases.unwrap_or(10_000),
            &cfg.dims,
            cfg.seed,
            cfg.tol.unwrap_or(1e-9),
        )?,
        Suite::Lemma1Membership => crosscheck::lemma1_membership(
            cfg.n_cases.unwrap_or(100),
            cfg.n_probes,
            cfg.seed,
            cfg.tol.unwrap_or(1e-9),
        )?,
        Suite::ViOracle => crosscheck::vi_oracle(cfg.resolution, cfg.tol.unwrap_or(2.0))?,
    };
    ctx.write(&cfg.summary, &to_json(&summary))?;
    println!(
        "{}: {} cases, max discrepancy {:e}, {} failures",
        summary.suite.name(),
        summary.n_cases,
        summary.max_discrepancy,
        summary.failures
    );
    Ok(if summary.passed() { EXIT_OK } else { EXIT_FAILED })
}

/// Solves VI(set, operator) on a grid and writes the solution report.
pub fn cmd_oracle(cfg: &OracleConfig, ctx: &Context) -> u8 {
    oracle_inner(cfg, ctx).unwrap_or_else(|e| report_error(&e))
}

fn oracle_inner(cfg: &OracleConfig, ctx: &Context) -> Result<u8, CliError> {
    let g = vi_grid_oracle_report(&cfg.set, &cfg.operator.to_mapping()?, cfg.resolution)?;
    ctx.write(&cfg.report, &to_json(&g))?;
    println!("u = {:?} (defect {:e}, spacing {:e})", g.point.coords(), g.defect, g.spacing);
    Ok(EXIT_OK)
}
