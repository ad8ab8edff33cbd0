//! Command-line front end: `build`, `solve`, `verify` and `ddos`.
//!
//! Primary outputs (DOT, JSON, CSV) are deterministic. Timing and other
//! run metadata go to the [`RunReport`], diagnostics to standard error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cases::{ddos_sweep, CasesError, DdosParams, DDOS_TOML};
use crate::graph::{compile, CompileOptions, Compiled, GraphError};
use crate::scenario::{Scenario, ScenarioError};
use crate::solver::{bay_exp, find_nes, verify_nes, NesDocument, SolverConfig, SolverError, Strategy, StrategyEntry};

/// Exit status for a strategy that fails verification.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for invalid input or a failed computation.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pvccs", version, about = "Security games as probabilistic processes: build, solve, verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explore a scenario's state space and write it as DOT.
    Build(BuildArgs),
    /// Compute every equilibrium strategy of a scenario.
    Solve(SolveArgs),
    /// Check strategies against a scenario.
    Verify(VerifyArgs),
    /// Sweep the flooding game over its parameter grid.
    Ddos(DdosArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Scenario JSON file.
    pub scenario: PathBuf,
    /// Write the state-space DOT here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the abstracted game graph as DOT.
    #[arg(long)]
    pub secmodel: Option<PathBuf>,
    #[arg(long, default_value_t = CompileOptions::default().node_budget)]
    pub node_budget: usize,
}

#[derive(Debug, Args, Clone)]
pub struct SolverArgs {
    /// Discount factor, strictly between 0 and 1.
    #[arg(long, default_value_t = SolverConfig::default().beta)]
    pub beta: f64,
    /// Value iteration stops once the weights are this close to their fixed point.
    #[arg(long, default_value_t = SolverConfig::default().epsilon)]
    pub epsilon: f64,
    #[arg(long, default_value_t = SolverConfig::default().max_iters)]
    pub max_iters: usize,
    /// Upper bound on the number of strategies kept.
    #[arg(long, default_value_t = SolverConfig::default().max_strategies)]
    pub max_strategies: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            beta: self.beta,
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            max_strategies: self.max_strategies,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub scenario: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the strategies JSON here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the run report JSON here instead of standard error.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub scenario: PathBuf,
    /// Output of `solve`, or a JSON array of strategy entries.
    pub strategies: PathBuf,
    /// Overrides the discount factor recorded in the strategies file.
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DdosArgs {
    /// Parameter TOML file; the bundled parameters when omitted.
    pub params: Option<PathBuf>,
    /// Overrides `rho` from the parameter file.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the sweep CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Cases(#[from] CasesError),
    /// An input file that does not parse or validate.
    #[error("{path}: {msg}")]
    Input { path: String, msg: String },
}

/// Configuration echo of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub beta: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    /// SHA-256 of the input file, hex.
    pub input_digest: String,
    pub config: ConfigEcho,
    pub elapsed_ms: f64,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `args` (program name first), runs the command and returns the exit
/// status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    configure_threads();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Honors `PVCCS_THREADS` (0 or unset: one thread per core).
fn configure_threads() {
    let n = std::env::var("PVCCS_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    if n > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Build(a) => cmd_build(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Ddos(a) => cmd_ddos(&a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes to `path`, or to standard output when it is absent.
fn emit(path: Option<&Path>, text: &str, outputs: &mut Vec<String>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            write(p, text)?;
            outputs.push(p.display().to_string());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
            outputs.push("-".into());
        }
    }
    Ok(())
}

fn load(path: &Path) -> Result<(Scenario, Vec<u8>), CliError> {
    let bytes = read(path)?;
    let text = String::from_utf8_lossy(&bytes);
    let sc = Scenario::from_json(&text)
        .map_err(|e: ScenarioError| CliError::Input { path: path.display().to_string(), msg: e.to_string() })?;
    Ok((sc, bytes))
}

fn compile_reporting(sc: &Scenario, node_budget: usize) -> Result<Compiled, CliError> {
    let c = compile(sc, CompileOptions { node_budget, ..CompileOptions::default() })?;
    for d in &c.diagnostics {
        eprintln!("note: {d}");
    }
    Ok(c)
}

fn cmd_build(a: &BuildArgs) -> Result<i32, CliError> {
    let (sc, _) = load(&a.scenario)?;
    let c = compile_reporting(&sc, a.node_budget)?;
    let mut outputs = Vec::new();
    emit(a.out.as_deref(), &c.lts.to_dot(), &mut outputs)?;
    if let Some(p) = &a.secmodel {
        write(p, &c.model.to_dot())?;
    }
    println!(
        "nodes={} edges={} classes={} vertices={} secmodel_edges={}",
        c.lts.len(),
        c.lts.edges().len(),
        c.quotient.lts.len(),
        c.model.vertices.len(),
        c.model.edges.len()
    );
    Ok(0)
}

fn finish_report(report: RunReport, path: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match path {
        Some(p) => write(p, &text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    let cfg = a.solver.config();
    cfg.validate()?;
    let (sc, bytes) = load(&a.scenario)?;
    let c = compile_reporting(&sc, CompileOptions::default().node_budget)?;
    let result = find_nes(&c.model, &sc, &cfg)?;
    let doc = result.document(&cfg);
    eprintln!("{} strategies, {} iterations", doc.strategies.len(), doc.iterations);
    let mut outputs = Vec::new();
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&doc).expect("strategies serialize") + "\n"), &mut outputs)?;
    let report = RunReport {
        command: "solve".into(),
        input_digest: sha256_hex(&bytes),
        config: ConfigEcho { beta: cfg.beta, epsilon: cfg.epsilon, max_iters: cfg.max_iters, rho: None },
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        outputs,
    };
    finish_report(report, a.report.as_deref())?;
    Ok(0)
}

/// Strategies file contents: a full solver document or a single strategy.
fn parse_strategies(path: &Path, text: &str) -> Result<(Option<f64>, Vec<Vec<StrategyEntry>>), CliError> {
    let json = |e: serde_json::Error| CliError::Input { path: path.display().to_string(), msg: e.to_string() };
    let value: serde_json::Value = serde_json::from_str(text).map_err(json)?;
    if value.is_array() {
        let entries: Vec<StrategyEntry> = serde_json::from_value(value).map_err(json)?;
        return Ok((None, vec![entries]));
    }
    let doc: NesDocument = serde_json::from_value(value).map_err(json)?;
    Ok((Some(doc.beta), doc.strategies))
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32, CliError> {
    let (sc, _) = load(&a.scenario)?;
    let text = String::from_utf8_lossy(&read(&a.strategies)?).into_owned();
    let (beta, strategies) = parse_strategies(&a.strategies, &text)?;
    let cfg = SolverConfig { beta: a.beta.or(beta).unwrap_or(SolverConfig::default().beta), ..SolverConfig::default() };
    cfg.validate()?;
    let c = compile(&sc, CompileOptions::default())?;
    let m = bay_exp(&c.model, &sc)?;
    if strategies.is_empty() {
        println!("no strategies to verify");
    }
    let mut failed = false;
    for (i, entries) in strategies.iter().enumerate() {
        let s = Strategy::from_entries(&m, entries)?;
        let verdict = verify_nes(&m, &s, &cfg);
        failed |= !verdict.is_pass();
        println!("strategy {i}: {}", verdict.describe(&m));
    }
    Ok(if failed { EXIT_FAIL } else { 0 })
}

fn cmd_ddos(a: &DdosArgs) -> Result<i32, CliError> {
    let start = Instant::now();
    let cfg = a.solver.config();
    cfg.validate()?;
    let bytes = match &a.params {
        Some(p) => read(p)?,
        None => DDOS_TOML.as_bytes().to_vec(),
    };
    let mut params = DdosParams::from_toml(&String::from_utf8_lossy(&bytes))?;
    if let Some(rho) = a.rho {
        params.rho = rho;
    }
    let sweep = ddos_sweep(&params, &cfg)?;
    print!("{}", sweep.summary(&params));
    let mut outputs = Vec::new();
    if let Some(p) = &a.out {
        write(p, &sweep.to_csv())?;
        outputs.push(p.display().to_string());
    }
    let report = RunReport {
        command: "ddos".into(),
        input_digest: sha256_hex(&bytes),
        config: ConfigEcho { beta: cfg.beta, epsilon: cfg.epsilon, max_iters: cfg.max_iters, rho: Some(params.rho) },
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        outputs,
    };
    finish_report(report, a.report.as_deref())?;
    Ok(0)
}
