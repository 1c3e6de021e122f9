//! Experiment drivers behind the `ldcpf` binary.
//!
//! Each `cmd_*` function loads a case, runs one experiment and returns a
//! value that renders as CSV or JSON. [`run`] writes the rendering and turns
//! solver failures into errors with distinct exit codes.

pub mod experiments;

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{certify_radial, Certificate};
use crate::caseio::{case_to_json, network_to_case, read_case, to_network, StartPolicy};
use crate::error::{Error, Result};
use crate::netmodel::{Network, TopologyCache};
use crate::solvers::{solve, Method, PsiGuard, SolveOptions, SolveReport, Termination};

use experiments::{compare, error_table, loadability_limit, nr_solvable, robustness, SuccessRate, LAMBDA_RESOLUTION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::InvalidNetwork(format!("unknown format `{s}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// How the case injections are scaled before an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Loading {
    Base,
    /// Fixed multiplier of every non-slack injection.
    Lambda(f64),
    /// Fraction of the Newton-Raphson loadability limit.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub case: PathBuf,
    pub start: StartPolicy,
    pub methods: Vec<Method>,
    pub loading: Loading,
    pub k: Vec<usize>,
    pub phi_deg: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub psi_guard: PsiGuard,
    pub out: Option<PathBuf>,
    /// Output format; each command has its own default.
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn new(case: impl Into<PathBuf>) -> Self {
        Self {
            case: case.into(),
            start: StartPolicy::Hot,
            methods: Method::ALL.to_vec(),
            loading: Loading::Base,
            k: vec![1, 2, 3],
            phi_deg: vec![15.0, 20.0, 25.0, 30.0, 40.0, 70.0, 80.0],
            trials: 1000,
            seed: 0,
            tolerance: 1e-10,
            max_iterations: 50,
            psi_guard: PsiGuard::Fail,
            out: None,
            format: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidNetwork(m));
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(phi) = self.phi_deg.iter().find(|p| !(**p >= 0.0)) {
            return bad(format!("phi must be non-negative, got {phi}"));
        }
        match self.loading {
            Loading::Lambda(l) if !(l.is_finite()) => bad(format!("lambda must be finite, got {l}")),
            Loading::Fraction(f) if !(f > 0.0 && f.is_finite()) => bad(format!("stress fraction must be positive, got {f}")),
            _ => Ok(()),
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions::default()
            .with_tolerance(self.tolerance)
            .with_max_iterations(self.max_iterations)
            .with_guard(self.psi_guard)
    }

    fn case_name(&self) -> String {
        self.case
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

/// A case prepared for an experiment.
pub struct Loaded {
    pub net: Network,
    pub cache: TopologyCache,
    pub lambda: f64,
    pub lambda_star: Option<f64>,
}

/// Reads the case and applies the configured loading.
pub fn load(cfg: &ExperimentConfig) -> Result<Loaded> {
    cfg.validate()?;
    let base = to_network(&read_case(&cfg.case)?, cfg.start)?;
    let cache = TopologyCache::build(&base)?;
    let (lambda, lambda_star) = match cfg.loading {
        Loading::Base => (1.0, None),
        Loading::Lambda(l) => (l, None),
        Loading::Fraction(f) => {
            let star = loadability_limit(&base, &cache)?;
            (f * star, Some(star))
        }
    };
    Ok(Loaded {
        net: base.scaled(lambda),
        cache,
        lambda,
        lambda_star,
    })
}

/// Output of a command.
pub trait Render: Serialize {
    fn csv(&self) -> String;

    /// The error to exit with after the output is written.
    fn failure(&self) -> Option<Error> {
        None
    }

    fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => Ok(self.csv()),
            Format::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize)]
pub struct BusAngle {
    pub bus: usize,
    pub theta_deg: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSolution {
    pub method: Method,
    pub termination: Termination,
    pub iterations: usize,
    pub injection_residual: f64,
    pub kvl_residual: f64,
    pub angles: Vec<BusAngle>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub case: String,
    pub lambda: f64,
    pub solutions: Vec<MethodSolution>,
    pub certificate: Option<Certificate>,
    /// Why no certificate was issued.
    pub certificate_note: Option<String>,
    /// `(k, error_bound(k))` for certified cases.
    pub error_bounds: Vec<(usize, f64)>,
    #[serde(skip)]
    failure: Option<Error>,
}

impl Render for SolveOutput {
    fn csv(&self) -> String {
        let mut s = String::from("method,bus,theta_deg,iterations,converged,inj_residual,kvl_residual\n");
        for m in &self.solutions {
            for a in &m.angles {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    m.method,
                    a.bus,
                    a.theta_deg,
                    m.iterations,
                    m.termination == Termination::Converged,
                    m.injection_residual,
                    m.kvl_residual
                );
            }
        }
        s
    }

    fn failure(&self) -> Option<Error> {
        self.failure.clone()
    }
}

/// Runs each configured method and certifies radial cases.
pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<SolveOutput> {
    let Loaded { net, cache, lambda, .. } = load(cfg)?;
    let ids = net.reduced_ids();
    let opts = cfg.solve_options();
    let mut failure = None;
    let mut solutions = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let rep = solve(method, &net, &cache, &opts)?;
        if let Err(e) = rep.ensure_converged() {
            failure.get_or_insert(e);
        }
        solutions.push(MethodSolution {
            method,
            termination: rep.trace.termination.clone(),
            iterations: rep.iterations(),
            injection_residual: rep.state.injection_residual,
            kvl_residual: rep.state.kvl_residual,
            angles: ids
                .iter()
                .zip(&rep.state.theta_r)
                .map(|(&bus, t)| BusAngle {
                    bus,
                    theta_deg: t.to_degrees(),
                })
                .collect(),
        });
    }
    let (certificate, certificate_note) = if cache.is_radial() {
        match certify_radial(&net, &cache) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some(format!("network is meshed ({} independent cycles)", cache.c())))
    };
    let error_bounds = certificate
        .as_ref()
        .map(|c| (0..=10).filter_map(|k| Some((k, c.error_bound(k)?))).collect())
        .unwrap_or_default();
    Ok(SolveOutput {
        case: cfg.case_name(),
        lambda,
        solutions,
        certificate,
        certificate_note,
        error_bounds,
        failure,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareOutput {
    pub case: String,
    pub lambda: f64,
    pub traces: Vec<SolveReport>,
}

impl Render for CompareOutput {
    fn csv(&self) -> String {
        let kmax = self.traces.iter().map(|r| r.iterations()).max().unwrap_or(0);
        let mut s = String::from("method,k,theta_err_deg,psi_step,inj_residual,kvl_residual\n");
        for rep in &self.traces {
            let m = rep.trace.method;
            for r in &rep.trace.records {
                let _ = writeln!(
                    s,
                    "{m},{},{},{},{},{}",
                    r.k,
                    opt(r.theta_err_deg),
                    opt(r.psi_step),
                    r.inj_residual,
                    r.kvl_residual
                );
            }
            if let (true, Some(last)) = (m.is_one_shot(), rep.trace.records.last()) {
                for k in last.k + 1..=kmax {
                    let _ = writeln!(
                        s,
                        "{m},{k},{},,{},{}",
                        opt(last.theta_err_deg),
                        last.inj_residual,
                        last.kvl_residual
                    );
                }
            }
        }
        s
    }
}

/// Per-iteration errors of each method against the flat-start Newton reference.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<CompareOutput> {
    let Loaded { net, cache, lambda, .. } = load(cfg)?;
    Ok(CompareOutput {
        case: cfg.case_name(),
        lambda,
        traces: compare(&net, &cache, &cfg.methods, &cfg.solve_options())?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub k: usize,
    /// Absent when the iteration failed before `k`.
    pub theta_err_deg: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableOutput {
    pub case: String,
    pub lambda: f64,
    pub rows: Vec<TableRow>,
}

impl Render for TableOutput {
    fn csv(&self) -> String {
        let mut s = String::from("case,k,theta_err_deg\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", self.case, r.k, opt(r.theta_err_deg));
        }
        s
    }
}

/// Frozen-cycle L-MDCPF error after each configured `k`.
pub fn cmd_table(cfg: &ExperimentConfig) -> Result<TableOutput> {
    let Loaded { net, cache, lambda, .. } = load(cfg)?;
    let rows = error_table(&net, &cache, &cfg.k, cfg.tolerance)?
        .into_iter()
        .map(|(k, theta_err_deg)| TableRow { k, theta_err_deg })
        .collect();
    Ok(TableOutput {
        case: cfg.case_name(),
        lambda,
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StressOutput {
    pub case: String,
    pub lambda_star: f64,
    pub fraction: Option<f64>,
    pub lambda: f64,
    pub solvable: bool,
    pub resolution: f64,
    pub method: &'static str,
    /// The scaled case in the canonical JSON schema.
    pub scaled_case: serde_json::Value,
}

impl Render for StressOutput {
    fn csv(&self) -> String {
        format!(
            "case,lambda_star,fraction,lambda,solvable\n{},{},{},{},{}\n",
            self.case,
            self.lambda_star,
            opt(self.fraction),
            self.lambda,
            self.solvable
        )
    }
}

/// Loadability limit by bisection and the case scaled to the requested loading.
///
/// Without `--lambda` or `--stress-fraction` the fraction is 0.9.
pub fn cmd_stress(cfg: &ExperimentConfig) -> Result<StressOutput> {
    cfg.validate()?;
    let base = to_network(&read_case(&cfg.case)?, cfg.start)?;
    let cache = TopologyCache::build(&base)?;
    let lambda_star = loadability_limit(&base, &cache)?;
    let (fraction, lambda) = match cfg.loading {
        Loading::Base => (Some(0.9), 0.9 * lambda_star),
        Loading::Fraction(f) => (Some(f), f * lambda_star),
        Loading::Lambda(l) => (None, l),
    };
    let scaled = base.scaled(lambda);
    let json = case_to_json(&network_to_case(&scaled))?;
    Ok(StressOutput {
        case: cfg.case_name(),
        lambda_star,
        fraction,
        lambda,
        solvable: nr_solvable(&base, &cache, lambda)?,
        resolution: LAMBDA_RESOLUTION,
        method: "uniform scaling of non-slack injections; Newton-Raphson from flat start decides solvability",
        scaled_case: serde_json::from_str(&json)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RobustnessOutput {
    pub case: String,
    pub lambda: f64,
    pub seed: u64,
    pub rates: Vec<SuccessRate>,
}

impl Render for RobustnessOutput {
    fn csv(&self) -> String {
        let mut s = String::from("phi_deg,method,success_rate\n");
        for r in &self.rates {
            let _ = writeln!(s, "{},{},{}", r.phi_deg, r.method, r.rate());
        }
        s
    }
}

/// Success rates from random initial angles.
pub fn cmd_robustness(cfg: &ExperimentConfig) -> Result<RobustnessOutput> {
    let Loaded { net, cache, lambda, .. } = load(cfg)?;
    let rates = robustness(
        &net,
        &cache,
        &cfg.methods,
        &cfg.phi_deg,
        cfg.trials,
        cfg.seed,
        &cfg.solve_options(),
    )?;
    Ok(RobustnessOutput {
        case: cfg.case_name(),
        lambda,
        seed: cfg.seed,
        rates,
    })
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 3,
        Error::Syntax { .. } | Error::MissingTable(_) | Error::Json(_) => 4,
        Error::InvalidNetwork(_)
        | Error::Topology(_)
        | Error::NonInductiveBranch { .. }
        | Error::ReferenceBusCount(_) => 5,
        Error::Hypothesis(_) => 6,
        Error::InfeasibleCertificate(_) => 7,
        Error::PsiOutOfRange { .. } => 8,
        Error::MaxIterations(_) => 9,
        Error::Diverged(_) => 10,
        Error::LinearFailure(_) | Error::Indefinite { .. } | Error::Singular { .. } | Error::NotSymmetric { .. } => 11,
        Error::Reference(_) => 12,
        Error::BaseCaseInfeasible => 13,
        Error::DimensionMismatch { .. } => 1,
    }
}

/// Command-line flags shared by every subcommand.
#[derive(Debug, Clone, clap::Args)]
pub struct Args {
    /// MATPOWER `.m` or canonical JSON case file.
    #[arg(long)]
    pub case: PathBuf,
    /// `hot` uses case-file voltage magnitudes, `cold` sets them to 1 pu.
    #[arg(long, default_value = "hot")]
    pub start: StartPolicy,
    /// Comma-separated subset of dcpf,mdcpf,ldcpf,lmdcpf,nr,cnr.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    /// Multiply every non-slack injection by this factor.
    #[arg(long, conflicts_with = "stress_fraction")]
    pub lambda: Option<f64>,
    /// Load to this fraction of the loadability limit.
    #[arg(long)]
    pub stress_fraction: Option<f64>,
    /// Iteration counts reported by `table`.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Initial-angle spreads in degrees for `robustness`.
    #[arg(long, value_delimiter = ',')]
    pub phi: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    /// Clamp branch variables that leave (-1, 1) instead of stopping.
    #[arg(long)]
    pub clamp: bool,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve with each method and certify radial cases.
    Solve(Args),
    /// Per-iteration error traces against the Newton reference.
    Compare(Args),
    /// Frozen-cycle L-MDCPF error after k iterations.
    Table(Args),
    /// Loadability limit and a scaled case.
    Stress(Args),
    /// Success rates from random initial angles.
    Robustness(Args),
}

#[derive(Debug, Parser)]
#[command(name = "ldcpf", version, about = "Lossy DC power flow experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

impl Command {
    fn args(&self) -> &Args {
        match self {
            Self::Solve(a) | Self::Compare(a) | Self::Table(a) | Self::Stress(a) | Self::Robustness(a) => a,
        }
    }

    /// The experiment configuration, with per-command defaults filled in.
    pub fn config(&self) -> ExperimentConfig {
        let a = self.args();
        let mut cfg = ExperimentConfig::new(&a.case);
        cfg.start = a.start;
        cfg.methods = match (a.methods.is_empty(), self) {
            (false, _) => a.methods.clone(),
            (true, Self::Solve(_)) => vec![Method::Lmdcpf],
            (true, Self::Robustness(_)) => vec![Method::Nr, Method::Cnr, Method::Lmdcpf],
            (true, _) => Method::ALL.to_vec(),
        };
        cfg.loading = match (a.lambda, a.stress_fraction) {
            (Some(l), _) => Loading::Lambda(l),
            (None, Some(f)) => Loading::Fraction(f),
            (None, None) => Loading::Base,
        };
        if !a.k.is_empty() {
            cfg.k = a.k.clone();
        }
        if !a.phi.is_empty() {
            cfg.phi_deg = a.phi.clone();
        }
        cfg.trials = a.trials;
        cfg.seed = a.seed;
        cfg.tolerance = a.tol;
        cfg.max_iterations = a.max_iter;
        cfg.psi_guard = if a.clamp { PsiGuard::Clamp } else { PsiGuard::Fail };
        cfg.out = a.out.clone();
        cfg.format = a.format;
        cfg
    }

    fn default_format(&self) -> Format {
        match self {
            Self::Solve(_) | Self::Stress(_) => Format::Json,
            _ => Format::Csv,
        }
    }
}

fn emit<R: Render>(cfg: &ExperimentConfig, default: Format, output: &R) -> Result<()> {
    let text = output.render(cfg.format.unwrap_or(default))?;
    match &cfg.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    output.failure().map_or(Ok(()), Err)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Runs a parsed command, writing its output.
pub fn run(command: &Command) -> Result<()> {
    let cfg = command.config();
    let fmt = command.default_format();
    match command {
        Command::Solve(_) => emit(&cfg, fmt, &cmd_solve(&cfg)?),
        Command::Compare(_) => emit(&cfg, fmt, &cmd_compare(&cfg)?),
        Command::Table(_) => emit(&cfg, fmt, &cmd_table(&cfg)?),
        Command::Stress(_) => emit(&cfg, fmt, &cmd_stress(&cfg)?),
        Command::Robustness(_) => emit(&cfg, fmt, &cmd_robustness(&cfg)?),
    }
}

/// Entry point of the `ldcpf` binary.
pub fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ldcpf: {e}");
            std::process::ExitCode::from(exit_code(&e))
        }
    }
}
