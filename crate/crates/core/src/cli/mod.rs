//! Command-line front end: `solve`, `pareto`, `verify` and `simulate`.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 bad input, 3 degenerate
//! chain. Floats are printed with 17 significant digits.

mod verify;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::chain::{build_transition_matrix, ChainSpec, Equilibrium, Topology, Weights};
use crate::closed_form::{solve, RegimeTag, SolveOptions, Source};
use crate::error::{Error, Result};
use crate::format::to_json_exact;
use crate::mixing::{evolve, worst_case_start, MixingReport};
use crate::oracle::OracleOptions;
use crate::pareto::{trace_frontier_with, DEFAULT_GRID};
use crate::spectral::{slem, slem_of};

pub use verify::{run_suite, RegimeSummary, SuiteRegime, VerifySummary, WorstInstance};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_BAD_INPUT: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;

/// Minimizer tolerance for `solve`, `pareto` and `simulate` when `--tol`
/// is absent; just above the minimizer's precision floor.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "FMRMC_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fmrmc", version, about = "Fastest mixing reversible Markov chains on friendship graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal center weights and SLEM for fixed friend weights.
    Solve(RunArgs),
    /// Pareto frontier between the SLEM and the friend weights, as CSV.
    Pareto(RunArgs),
    /// Randomized closed-form versus numerical-minimizer comparison.
    Verify(RunArgs),
    /// Total-variation decay of a chain against its SLEM.
    Simulate(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StartKind {
    /// Point mass exciting the slowest mode.
    Worst,
    /// The equilibrium distribution itself.
    Stationary,
}

/// Flags shared by every command; each command reads the ones it needs.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file mirroring these flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Chain description `{"m", "pi", "q"}` with canonical labels.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Number of blades.
    #[arg(long)]
    pub m: Option<usize>,
    /// Equilibrium masses: center first, then blades; for m = 1 the
    /// triangle order `p1,p2,p3` with the center last.
    #[arg(long, value_delimiter = ',')]
    pub pi: Option<Vec<f64>>,
    /// Fixed friend-edge weights, one per blade.
    #[arg(long, value_delimiter = ',')]
    pub qf: Option<Vec<f64>>,
    /// Samples per active blade for `pareto`.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Minimizer tolerance (`solve`, `pareto`) or pass threshold (`verify`).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random seed for the `verify` instances.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Use the simplified two-blade bounds without the harmonic factor.
    #[arg(long)]
    pub paper_literal_bounds: bool,
    /// Regime selection for `verify`.
    #[arg(long, value_enum)]
    pub regime: Option<SuiteRegime>,
    /// Instances per regime for `verify`.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Evolution steps for `simulate`.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Start distribution for `simulate`.
    #[arg(long, value_enum)]
    pub start: Option<StartKind>,
}

/// Config file contents; field names match the long flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub chain: Option<PathBuf>,
    pub m: Option<usize>,
    pub pi: Option<Vec<f64>>,
    pub qf: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub paper_literal_bounds: Option<bool>,
    pub regime: Option<SuiteRegime>,
    pub instances: Option<usize>,
    pub steps: Option<usize>,
    pub start: Option<StartKind>,
}

/// Flags merged over the optional config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub chain: Option<PathBuf>,
    pub m: Option<usize>,
    pub pi: Option<Vec<f64>>,
    pub qf: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub paper_literal_bounds: bool,
    pub regime: Option<SuiteRegime>,
    pub instances: Option<usize>,
    pub steps: Option<usize>,
    pub start: Option<StartKind>,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => serde_json::from_str::<FileConfig>(&read(path)?)?,
            None => FileConfig::default(),
        };
        let cfg = Self {
            chain: args.chain.clone().or(file.chain),
            m: args.m.or(file.m),
            pi: args.pi.clone().or(file.pi),
            qf: args.qf.clone().or(file.qf),
            grid: args.grid.or(file.grid),
            tol: args.tol.or(file.tol),
            seed: args.seed.or(file.seed),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format),
            paper_literal_bounds: args.paper_literal_bounds || file.paper_literal_bounds.unwrap_or(false),
            regime: args.regime.or(file.regime),
            instances: args.instances.or(file.instances),
            steps: args.steps.or(file.steps),
            start: args.start.or(file.start),
        };
        if let Some(t) = cfg.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::InvalidArgument(format!("--tol must be > 0, got {t}")));
            }
        }
        Ok(cfg)
    }

    fn solve_options(&self) -> SolveOptions {
        let oracle = OracleOptions::with_tol(self.tol.unwrap_or(DEFAULT_SOLVE_TOL));
        SolveOptions { oracle, paper_literal_bounds: self.paper_literal_bounds }
    }

    fn format_or(&self, default: OutputFormat, allowed: &[OutputFormat]) -> Result<OutputFormat> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Error::InvalidArgument(format!("format {f:?} is not available for this command")))
        }
    }

    /// `(pi, m, qf)` from `--chain` (friend weights read from `q`) or from
    /// the inline flags. Missing friend weights default to zero.
    fn instance(&self) -> Result<(Equilibrium, usize, Vec<f64>)> {
        if let Some(path) = &self.chain {
            let (pi, q, topology) = ChainSpec::from_json(&read(path)?)?.resolve()?;
            let qf = topology.friend_edges().map(|e| q.get(e.a, e.b)).collect();
            return Ok((pi, topology.blades(), qf));
        }
        let m = self.m.ok_or_else(|| Error::InvalidArgument("--m is required".into()))?;
        let pi = self.pi.clone().ok_or_else(|| Error::InvalidArgument("--pi is required".into()))?;
        let pi = equilibrium_from_flag(m, pi)?;
        let qf = self.qf.clone().unwrap_or_else(|| vec![0.0; m]);
        Ok((pi, m, qf))
    }
}

/// `--pi` to canonical labels: for one blade the flag lists `p1,p2,p3`
/// with the center last.
pub fn equilibrium_from_flag(m: usize, pi: Vec<f64>) -> Result<Equilibrium> {
    if m == 1 && pi.len() == 3 {
        Equilibrium::from_triangle(pi[0], pi[1], pi[2])
    } else {
        Equilibrium::for_friendship(pi, m)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ReducibleChain => EXIT_DEGENERATE,
        Error::NoConvergence(_) => EXIT_VERIFY_FAILED,
        _ => EXIT_BAD_INPUT,
    }
}

/// Output of `solve`. Readable as a chain spec (`m`, `pi`, `q_opt`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub m: usize,
    /// Canonical labels, center first.
    pub pi: Vec<f64>,
    pub qf: Vec<f64>,
    pub regime: RegimeTag,
    pub nominal_regime: RegimeTag,
    pub regime_overridden: bool,
    pub source: Source,
    pub q_opt: BTreeMap<String, f64>,
    pub slem: f64,
    pub qf_bounds: Vec<(f64, f64)>,
    pub within_bounds: bool,
    pub kkt_residual: f64,
    /// Spectrum of the optimal chain, non-increasing.
    pub eigenvalues: Vec<f64>,
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<u8> {
    cfg.format_or(OutputFormat::Json, &[OutputFormat::Json])?;
    let (pi, m, qf) = cfg.instance()?;
    let sol = solve(&pi, m, &qf, &cfg.solve_options())?;
    let topology = sol.topology();
    let report = slem(&pi, &sol.q_opt, &topology)?;
    let out = SolveOutput {
        m,
        pi: pi.values().to_vec(),
        qf: sol.qf.clone(),
        regime: sol.regime.tag,
        nominal_regime: sol.regime.nominal,
        regime_overridden: sol.regime.overridden,
        source: sol.source,
        q_opt: ChainSpec::from_parts(&pi, &sol.q_opt, &topology).q,
        slem: sol.slem,
        qf_bounds: sol.qf_bounds.clone(),
        within_bounds: sol.within_bounds,
        kkt_residual: sol.kkt_residual,
        eigenvalues: report.eigenvalues,
    };
    emit(cfg.out.as_deref(), &to_json_exact(&out)?)?;
    Ok(EXIT_OK)
}

pub fn cmd_pareto(cfg: &RunConfig) -> Result<u8> {
    let format = cfg.format_or(OutputFormat::Csv, &[OutputFormat::Csv, OutputFormat::Json])?;
    let (pi, m, _) = cfg.instance()?;
    let frontier = trace_frontier_with(&pi, m, cfg.grid.unwrap_or(DEFAULT_GRID), &cfg.solve_options())?;
    let text = match format {
        OutputFormat::Csv => {
            if frontier.collapsed {
                eprintln!("frontier collapsed to a single point");
            }
            frontier.to_csv()
        }
        OutputFormat::Json => to_json_exact(&frontier)?,
    };
    emit(cfg.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<u8> {
    cfg.format_or(OutputFormat::Json, &[OutputFormat::Json])?;
    let regime = cfg.regime.unwrap_or(SuiteRegime::All);
    if regime == SuiteRegime::M2Boundary {
        let reports = crate::closed_form::m2_boundary_sweep(&OracleOptions::with_tol(1e-9))?;
        for r in reports.iter().filter(|r| r.overridden) {
            eprintln!("nominal branch {} overridden at pi = {:?}", r.nominal, r.pi);
        }
        emit(cfg.out.as_deref(), &to_json_exact(&reports)?)?;
        return Ok(EXIT_OK);
    }
    let summary = run_suite(
        regime,
        cfg.instances.unwrap_or(verify::DEFAULT_INSTANCES),
        cfg.seed.unwrap_or(verify::DEFAULT_SEED),
        cfg.tol.unwrap_or(verify::DEFAULT_TOL),
    )?;
    emit(cfg.out.as_deref(), &to_json_exact(&summary)?)?;
    if summary.pass {
        return Ok(EXIT_OK);
    }
    if let Some(w) = summary.worst_failure() {
        eprintln!("verification failed; worst instance:\n{}", to_json_exact(w)?);
    }
    Ok(EXIT_VERIFY_FAILED)
}

/// Output of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub slem: f64,
    pub fitted_rate: f64,
    pub relative_gap: f64,
    pub degenerate: bool,
    pub steps: usize,
    pub start: Vec<f64>,
}

/// Simulates the chain in `--chain` as given, or the optimal chain for the
/// inline `--m/--pi/--qf`. The decay CSV goes to `--out` when set; the
/// report is printed on standard output.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<u8> {
    cfg.format_or(OutputFormat::Json, &[OutputFormat::Json])?;
    let (pi, q, topology): (Equilibrium, Weights, Topology) = match &cfg.chain {
        Some(path) => ChainSpec::from_json(&read(path)?)?.resolve()?,
        None => {
            let (pi, m, qf) = cfg.instance()?;
            let sol = solve(&pi, m, &qf, &cfg.solve_options())?;
            let topology = sol.topology();
            (pi, sol.q_opt, topology)
        }
    };
    let p = build_transition_matrix(&pi, &q, &topology)?;
    let report = slem_of(&p)?;
    if report.reducible {
        return Err(Error::ReducibleChain);
    }
    let start = match cfg.start.unwrap_or(StartKind::Worst) {
        StartKind::Worst => worst_case_start(&p)?,
        StartKind::Stationary => pi.normalized(),
    };
    let steps = cfg.steps.unwrap_or(2000);
    let trace = evolve(&p, &start, steps)?;
    if let Some(path) = &cfg.out {
        emit(Some(path), &trace.to_csv())?;
    }
    let r = MixingReport::new(report.slem, &trace);
    let out = SimulateOutput {
        slem: r.slem,
        fitted_rate: r.fitted_rate,
        relative_gap: r.relative_gap,
        degenerate: r.degenerate,
        steps,
        start,
    };
    emit(None, &to_json_exact(&out)?)?;
    Ok(EXIT_OK)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool built earlier in the process wins; that only happens in tests.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: Cli) -> u8 {
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Solve(a) => RunConfig::from_args(a).and_then(|c| cmd_solve(&c)),
        Command::Pareto(a) => RunConfig::from_args(a).and_then(|c| cmd_pareto(&c)),
        Command::Verify(a) => RunConfig::from_args(a).and_then(|c| cmd_verify(&c)),
        Command::Simulate(a) => RunConfig::from_args(a).and_then(|c| cmd_simulate(&c)),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}
