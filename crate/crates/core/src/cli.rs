//! Command-line experiment runner.
//!
//! Every run prints one JSON [`RunRecord`] on a single line to standard
//! output. `--table` adds a human-readable summary on standard error.
//!
//! A JSON config file (`--config PATH`) may supply any flag of the chosen
//! subcommand as `{"flag-name": value}`. Flags given on the command line take
//! precedence. Exit codes: 0 success, 1 usage or configuration error, 2
//! invariant failure or degenerate input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{estimate, pass_fail, Estimate, ExperimentSpec, McOptions, ModelKind, StatisticKind};
use crate::error::{Error, Result};
use crate::geometry::{sample_direction, Direction, RngStream};
use crate::ghz::{ghz_contradiction, GhzReport};
use crate::hardy::{chained_bell_lhs, parity_check, statement_probabilities, ChainConfig};
use crate::inequalities::{
    chsh_game_success_from_value, classical_chsh_game_success, hess_chsh_scan, index_settings, max_chsh_over_indices,
    max_chsh_search, nested_scan, try_chsh_value, BoundReport, ChshSearch, NestedScan, LOCAL_BOUND, PR_BOX_BOUND,
    REPORT_SLACK,
};
use crate::models::{
    nested_correlation, pr_box_correlation, random_hess_model, random_nested_model, sign_model_correlation,
    DeterministicLhv, HessShape,
};
use crate::quantum::{chain_sum_qm, singlet_correlation_3d};

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Acceptance gate used for every Monte Carlo verdict.
pub const VERDICT_SIGMAS: f64 = 5.0;
/// Tolerance of the searched quantum CHSH value against `2√2`.
pub const SEARCH_TOLERANCE: f64 = 1e-5;
/// Stream used to draw the random λ₁ of a parity run.
const PARITY_STREAM: u64 = u64::MAX;

#[derive(Parser, Debug)]
#[command(name = "hvbench", version, about = "Hidden-variable model test bench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Correlation E(a, b) of one model.
    #[command(args_override_self = true)]
    Correlate(CorrelateArgs),
    /// Chained Bell inequality, or the parity check with --parity.
    #[command(args_override_self = true)]
    Chain(ChainArgs),
    /// Exhaustive GHZ parity contradiction.
    #[command(args_override_self = true)]
    Ghz(GhzArgs),
    /// Four-term bound over random nested non-local models.
    #[command(args_override_self = true)]
    Nested(NestedArgs),
    /// CHSH scan over random factorized-density models.
    #[command(args_override_self = true)]
    Hess(HessArgs),
    /// Reference values: local, quantum and PR-box CHSH, game success.
    #[command(args_override_self = true)]
    Bounds(BoundsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Correlate(_) => "correlate",
            Command::Chain(_) => "chain",
            Command::Ghz(_) => "ghz",
            Command::Nested(_) => "nested",
            Command::Hess(_) => "hess",
            Command::Bounds(_) => "bounds",
        }
    }

    fn output(&self) -> &OutputArgs {
        match self {
            Command::Correlate(a) => &a.output,
            Command::Chain(a) => &a.output,
            Command::Ghz(a) => &a.output,
            Command::Nested(a) => &a.output,
            Command::Hess(a) => &a.output,
            Command::Bounds(a) => &a.output,
        }
    }
}

/// Flags that shape output only. Never echoed.
#[derive(Args, Clone, Debug, Default)]
pub struct OutputArgs {
    /// JSON file supplying default flag values.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Leave wall time out of the record.
    #[arg(long)]
    pub omit_timing: bool,
    /// Print a human-readable summary to standard error.
    #[arg(long)]
    pub table: bool,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McArgs {
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Shard count; results do not depend on it [default: min(threads, n)].
    #[arg(long)]
    pub shards: Option<usize>,
}

impl McArgs {
    fn options(&self) -> McOptions {
        let shards = self.shards.unwrap_or_else(|| rayon::current_num_threads().max(1));
        let shards = if self.shards.is_none() { shards.min(self.n.max(1) as usize) } else { shards };
        McOptions::new(self.n, self.seed).with_shards(shards)
    }
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelateArgs {
    /// tb, qm, lhv, nested or hess.
    #[arg(long, default_value = "tb")]
    pub model: String,
    /// Statistic for tb and lhv: product, alice, bob, comm_bit or one.
    #[arg(long, default_value = "product")]
    pub statistic: String,
    /// Angle between settings in the x–z plane (a along x).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Alice's setting as "x,y,z"; normalized on input.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Bob's setting as "x,y,z"; normalized on input.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Sweep θ = kπ/K for k = 0..=K instead of a single angle.
    #[arg(long, value_name = "K")]
    pub sweep: Option<usize>,
    /// Setting index for Alice (nested, hess).
    #[arg(long, default_value_t = 0)]
    pub x: usize,
    /// Setting index for Bob (nested, hess).
    #[arg(long, default_value_t = 0)]
    pub y: usize,
    /// Deeper-level support size (nested).
    #[arg(long, default_value_t = 4)]
    pub support: usize,
    /// Nesting depth, 1 or 2 (nested).
    #[arg(long, default_value_t = 1)]
    pub depth: u8,
    /// Draw a setting-independent density (hess).
    #[arg(long)]
    pub setting_independent: bool,
    /// Read angles in degrees.
    #[arg(long)]
    pub degrees: bool,
    /// Write sweep points to a CSV file.
    #[arg(long, value_name = "PATH")]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainArgs {
    /// Chain size N (even, ≥ 4).
    #[arg(long, default_value_t = 4)]
    pub size: usize,
    /// Chain span φ, or "max" for (N−1)π/N.
    #[arg(long, default_value = "max", allow_hyphen_values = true)]
    pub phi: String,
    /// Parity check at λ₂ = −λ₁: "random" or "x,y,z".
    #[arg(long, allow_hyphen_values = true)]
    pub parity: Option<String>,
    /// Read angles in degrees.
    #[arg(long)]
    pub degrees: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhzArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedArgs {
    /// Deeper-level support size M.
    #[arg(long, default_value_t = 4)]
    pub support: usize,
    /// Nesting depth, 1 or 2.
    #[arg(long, default_value_t = 1)]
    pub depth: u8,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Draw setting-independent densities instead.
    #[arg(long)]
    pub setting_independent: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsArgs {
    /// Grid step of the quantum CHSH search before refinement.
    #[arg(long, default_value_t = 5f64.to_radians())]
    pub resolution: f64,
    /// Read the resolution in degrees.
    #[arg(long)]
    pub degrees: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

impl PartialEq for OutputArgs {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// One experiment's machine-readable result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub experiment: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Resolved parameters, angles in radians. Sufficient to replay the run.
    pub params: Value,
    pub result: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunRecord {
    /// Single-line JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Correlation(CorrelationResult),
    Sweep(SweepResult),
    Chain(ChainResult),
    Parity(ParityResult),
    Ghz(GhzReport),
    Nested(NestedResult),
    Hess(HessResult),
    Bounds(BoundsTable),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Direction<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Direction<f64>>,
    pub estimate: Estimate,
    /// Exact value the model should reproduce (Monte Carlo models only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    /// Singlet value `−a·b`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantum: Option<f64>,
    /// `|mean − reference| ≤ 5σ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<CorrelationResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainResult {
    pub size: usize,
    pub phi: f64,
    pub threshold: f64,
    pub lhs: Estimate,
    pub probabilities: Vec<Estimate>,
    pub qm_reference: f64,
    pub qm_violated: bool,
    /// LHS exceeds N−1 by more than 5σ.
    pub violated: bool,
    pub consistent_with_qm: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityResult {
    pub size: usize,
    pub phi: f64,
    pub lambda1: Direction<f64>,
    pub false_count: usize,
    pub first_false: usize,
    pub odd: bool,
    pub comm_bits_all_minus: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedResult {
    pub support: usize,
    pub depth: u8,
    pub trials: usize,
    #[serde(flatten)]
    pub scan: NestedScan,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessResult {
    pub trials: usize,
    pub setting_dependent: bool,
    pub report: BoundReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsTable {
    /// Largest CHSH over all deterministic local strategies.
    pub local: f64,
    pub quantum: ChshSearch<f64>,
    pub quantum_closed_form: f64,
    pub pr_box: f64,
    pub classical_success: f64,
    pub quantum_success: f64,
    pub quantum_success_percent: f64,
    pub pass: bool,
}

/// Exit code, standard output and standard error of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Degenerate(_) | Error::Invariant(_) | Error::ModelInvalid(_) => 2,
        Error::InvalidArgument(_) | Error::OutOfBounds { .. } | Error::UnsupportedDepth(_) | Error::Config(_) => 1,
    }
}

/// Parses `args` (program name first), runs the command, and renders output.
pub fn run<I, S>(args: I) -> Outcome
where
    I: IntoIterator<Item = S>,
    S: Into<OsString>,
{
    let args: Vec<String> = args.into_iter().map(|s| s.into().to_string_lossy().into_owned()).collect();
    let fail = |code, msg: String| Outcome { code, stdout: String::new(), stderr: msg };
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => return fail(exit_code(&e), format!("error: {e}\n")),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                fail(1, text)
            } else {
                Outcome { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    let output = cli.command.output().clone();
    let started = Instant::now();
    match execute(&cli.command) {
        Ok(mut record) => {
            if !output.omit_timing {
                record.wall_time_s = Some(started.elapsed().as_secs_f64());
            }
            let stderr = if output.table { render_table(&record) } else { String::new() };
            Outcome { code: 0, stdout: format!("{}\n", record.to_json()), stderr }
        }
        Err(e) => fail(exit_code(&e), format!("error: {e}\n")),
    }
}

/// Inserts flags from `--config PATH` directly after the subcommand.
/// Later command-line occurrences override them.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_owned());
        } else if a == "--config" {
            path = Some(args.get(i + 1).ok_or_else(|| Error::Config("--config needs a path".into()))?.clone());
        }
    }
    let Some(path) = path else { return Ok(args) };
    if args.len() < 2 || args[1].starts_with('-') {
        return Err(Error::Config("--config must follow a subcommand".into()));
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read {path}: {e}")))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path}: {e}")))?;
    let Value::Object(map) = doc else {
        return Err(Error::Config(format!("{path}: expected a JSON object")));
    };
    let mut inserted = Vec::new();
    for (key, value) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            continue;
        }
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => inserted.push(flag),
            Value::Number(n) => inserted.extend([flag, n.to_string()]),
            Value::String(s) => inserted.extend([flag, s]),
            Value::Array(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|v| match v {
                        Value::Number(n) => Ok(n.to_string()),
                        Value::String(s) => Ok(s.clone()),
                        _ => Err(Error::Config(format!("{path}: unsupported list item for {key}"))),
                    })
                    .collect::<Result<_>>()?;
                inserted.extend([flag, parts.join(",")]);
            }
            Value::Object(_) => return Err(Error::Config(format!("{path}: nested object for {key}"))),
        }
    }
    let mut out = args[..2].to_vec();
    out.extend(inserted);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

/// Runs a parsed command. The record has no wall time.
pub fn execute(cmd: &Command) -> Result<RunRecord> {
    match cmd {
        Command::Correlate(a) => cmd_correlate(a),
        Command::Chain(a) => cmd_chain(a),
        Command::Ghz(_) => cmd_ghz(),
        Command::Nested(a) => cmd_nested(a),
        Command::Hess(a) => cmd_hess(a),
        Command::Bounds(a) => cmd_bounds(a),
    }
}

/// Re-runs a record from its echoed parameters, optionally with another
/// shard count.
pub fn replay(record: &RunRecord, shards: Option<usize>) -> Result<RunRecord> {
    let params = record.params.clone();
    let bad = |e: serde_json::Error| Error::Config(format!("unreadable params: {e}"));
    let cmd = match record.experiment.as_str() {
        "correlate" => {
            let mut a: CorrelateArgs = serde_json::from_value(params).map_err(bad)?;
            a.mc.shards = shards.or(a.mc.shards);
            Command::Correlate(a)
        }
        "chain" => {
            let mut a: ChainArgs = serde_json::from_value(params).map_err(bad)?;
            a.mc.shards = shards.or(a.mc.shards);
            Command::Chain(a)
        }
        "ghz" => Command::Ghz(serde_json::from_value(params).map_err(bad)?),
        "nested" => Command::Nested(serde_json::from_value(params).map_err(bad)?),
        "hess" => Command::Hess(serde_json::from_value(params).map_err(bad)?),
        "bounds" => Command::Bounds(serde_json::from_value(params).map_err(bad)?),
        other => return Err(Error::Config(format!("unknown experiment {other:?}"))),
    };
    execute(&cmd)
}

fn record<P: Serialize>(experiment: &str, seed: Option<u64>, params: &P, result: Payload) -> RunRecord {
    RunRecord {
        schema: SCHEMA_VERSION,
        experiment: experiment.to_owned(),
        version: VERSION.to_owned(),
        seed,
        params: serde_json::to_value(params).expect("params serialize"),
        result,
        wall_time_s: None,
    }
}

fn to_radians(x: f64, degrees: bool) -> f64 {
    if degrees {
        x.to_radians()
    } else {
        x
    }
}

pub fn parse_direction(s: &str) -> Result<Direction<f64>> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad direction {s:?}"))))
        .collect::<Result<_>>()?;
    match parts[..] {
        [x, y, z] => Direction::normalized(x, y, z),
        _ => Err(Error::InvalidArgument(format!("direction needs three components, got {s:?}"))),
    }
}

fn format_direction(d: &Direction<f64>) -> String {
    format!("{},{},{}", d.x(), d.y(), d.z())
}

enum CorrelateModel {
    Sampled(ModelKind),
    Quantum,
    Nested,
    Hess,
}

fn correlate_model(name: &str) -> Result<CorrelateModel> {
    match name {
        "qm" => Ok(CorrelateModel::Quantum),
        "nested" => Ok(CorrelateModel::Nested),
        "hess" => Ok(CorrelateModel::Hess),
        other => other.parse().map(CorrelateModel::Sampled),
    }
}

fn correlate_point(
    args: &CorrelateArgs,
    kind: ModelKind,
    theta: Option<f64>,
    a: Direction<f64>,
    b: Direction<f64>,
    seed: u64,
) -> Result<CorrelationResult> {
    let opts = McOptions { seed, ..args.mc.options() };
    let spec = ExperimentSpec::parse(&args.model, &args.statistic, a, b, opts)?;
    let est = estimate(&spec)?;
    let quantum = singlet_correlation_3d(&a, &b);
    let reference = match (kind, spec.statistic) {
        (_, StatisticKind::One) => Some(1.0),
        (ModelKind::Tb, StatisticKind::Product) => Some(quantum),
        (ModelKind::Lhv, StatisticKind::Product) => Some(sign_model_correlation(&a, &b)),
        (_, StatisticKind::Alice | StatisticKind::Bob) => Some(0.0),
        _ => None,
    };
    Ok(CorrelationResult {
        model: args.model.clone(),
        theta,
        a: Some(a),
        b: Some(b),
        estimate: est,
        reference,
        quantum: Some(quantum),
        pass: reference.map(|r| pass_fail(&est, r, VERDICT_SIGMAS)),
    })
}

fn cmd_correlate(args: &CorrelateArgs) -> Result<RunRecord> {
    let model = correlate_model(&args.model)?;
    let mut resolved = args.clone();
    resolved.theta = args.theta.map(|t| to_radians(t, args.degrees));
    resolved.degrees = false;
    let mc = resolved.mc.options();
    mc.validate()?;
    resolved.mc.shards = Some(mc.shards);
    let seed = args.mc.seed;

    let settings = || -> Result<(Option<f64>, Direction<f64>, Direction<f64>)> {
        match (&resolved.a, &resolved.b, resolved.theta) {
            (Some(a), Some(b), None) => Ok((None, parse_direction(a)?, parse_direction(b)?)),
            (None, None, Some(t)) => Ok((Some(t), Direction::planar(0.0), Direction::planar(t))),
            _ => Err(Error::InvalidArgument("give either --theta or both --a and --b".into())),
        }
    };

    let result = match model {
        CorrelateModel::Nested => {
            let mut rng = RngStream::new(seed);
            let m = random_nested_model::<f64>(resolved.support, resolved.depth, &mut rng)?;
            let lambdas = m.shape().lambdas;
            let uniform = vec![1.0 / lambdas as f64; lambdas];
            let e = nested_correlation(&m, resolved.x, resolved.y, &uniform)?;
            Payload::Correlation(exact_result(&resolved.model, e, seed))
        }
        CorrelateModel::Hess => {
            let mut rng = RngStream::new(seed);
            let h = random_hess_model::<f64>(HessShape::chsh(!resolved.setting_independent), &mut rng)?;
            let e = h.correlation(resolved.x, resolved.y)?;
            Payload::Correlation(exact_result(&resolved.model, e, seed))
        }
        CorrelateModel::Quantum => {
            let points = match resolved.sweep {
                Some(k) => sweep_angles(k)?
                    .into_iter()
                    .map(|t| (Some(t), Direction::planar(0.0), Direction::planar(t)))
                    .collect(),
                None => vec![settings()?],
            };
            let results: Vec<CorrelationResult> = points
                .into_iter()
                .map(|(theta, a, b)| {
                    let q = singlet_correlation_3d(&a, &b);
                    CorrelationResult {
                        model: resolved.model.clone(),
                        theta,
                        a: Some(a),
                        b: Some(b),
                        estimate: Estimate::exact(q),
                        reference: None,
                        quantum: Some(q),
                        pass: None,
                    }
                })
                .collect();
            wrap_points(resolved.sweep.is_some(), results)
        }
        CorrelateModel::Sampled(kind) => {
            let results = match resolved.sweep {
                // point k uses seed + k
                Some(k) => sweep_angles(k)?
                    .into_iter()
                    .enumerate()
                    .map(|(i, t)| {
                        correlate_point(
                            &resolved,
                            kind,
                            Some(t),
                            Direction::planar(0.0),
                            Direction::planar(t),
                            seed.wrapping_add(i as u64),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => {
                    let (theta, a, b) = settings()?;
                    vec![correlate_point(&resolved, kind, theta, a, b, seed)?]
                }
            };
            wrap_points(resolved.sweep.is_some(), results)
        }
    };
    if let Some(path) = &args.csv {
        write_csv(path, &result)?;
    }
    let stochastic = !matches!(correlate_model(&args.model)?, CorrelateModel::Quantum);
    Ok(record("correlate", stochastic.then_some(seed), &resolved, result))
}

fn exact_result(model: &str, e: f64, seed: u64) -> CorrelationResult {
    CorrelationResult {
        model: model.to_owned(),
        theta: None,
        a: None,
        b: None,
        estimate: Estimate { seed, ..Estimate::exact(e) },
        reference: None,
        quantum: None,
        pass: None,
    }
}

fn sweep_angles(k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidArgument("--sweep needs K ≥ 1".into()));
    }
    Ok((0..=k).map(|i| i as f64 * std::f64::consts::PI / k as f64).collect())
}

fn wrap_points(sweep: bool, mut points: Vec<CorrelationResult>) -> Payload {
    if sweep {
        Payload::Sweep(SweepResult { points })
    } else {
        Payload::Correlation(points.remove(0))
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    model: &'a str,
    theta: Option<f64>,
    mean: f64,
    stderr: f64,
    n: u64,
    seed: u64,
    reference: Option<f64>,
    quantum: Option<f64>,
    pass: Option<bool>,
}

fn write_csv(path: &std::path::Path, payload: &Payload) -> Result<()> {
    let points: Vec<&CorrelationResult> = match payload {
        Payload::Sweep(s) => s.points.iter().collect(),
        Payload::Correlation(c) => vec![c],
        _ => return Err(Error::InvalidArgument("nothing to export".into())),
    };
    let io = |e: csv::Error| Error::Config(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for p in points {
        w.serialize(CsvRow {
            model: &p.model,
            theta: p.theta,
            mean: p.estimate.mean,
            stderr: p.estimate.stderr,
            n: p.estimate.n,
            seed: p.estimate.seed,
            reference: p.reference,
            quantum: p.quantum,
            pass: p.pass,
        })
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn cmd_chain(args: &ChainArgs) -> Result<RunRecord> {
    let cfg = if args.phi == "max" {
        ChainConfig::<f64>::max_violation(args.size)?
    } else {
        let phi: f64 = args.phi.parse().map_err(|_| Error::InvalidArgument(format!("bad --phi {:?}", args.phi)))?;
        ChainConfig::new(args.size, to_radians(phi, args.degrees))?
    };
    let mut resolved = args.clone();
    if args.phi != "max" {
        resolved.phi = cfg.phi().to_string();
    }
    resolved.degrees = false;
    let opts = args.mc.options();
    opts.validate()?;
    resolved.mc.shards = Some(opts.shards);
    let seed = args.mc.seed;

    if let Some(spec) = &args.parity {
        let lambda1 = if spec == "random" {
            sample_direction(&mut RngStream::derived(seed, PARITY_STREAM))
        } else {
            parse_direction(spec)?
        };
        let outcome = parity_check(&cfg, &lambda1)?;
        let comm_bits_all_minus = outcome.run.comm_bits.iter().all(|&c| c == crate::Sign::Minus);
        let odd = outcome.false_count % 2 == 1;
        if !odd || !comm_bits_all_minus {
            return Err(Error::Invariant(format!(
                "parity check at λ₁ = ({}) gave {} false statements",
                format_direction(&lambda1),
                outcome.false_count
            )));
        }
        let result = ParityResult {
            size: cfg.len(),
            phi: cfg.phi(),
            lambda1,
            false_count: outcome.false_count,
            first_false: outcome.first_false,
            odd,
            comm_bits_all_minus,
        };
        let seed = (spec == "random").then_some(seed);
        return Ok(record("chain", seed, &resolved, Payload::Parity(result)));
    }

    let probabilities = statement_probabilities(&cfg, opts)?;
    let lhs = chained_bell_lhs(&cfg, opts)?;
    let qm_reference = chain_sum_qm(&cfg);
    let threshold = (cfg.len() - 1) as f64;
    let result = ChainResult {
        size: cfg.len(),
        phi: cfg.phi(),
        threshold,
        lhs,
        probabilities,
        qm_reference,
        qm_violated: qm_reference > threshold,
        violated: lhs.mean - VERDICT_SIGMAS * lhs.stderr.max(crate::engine::STDERR_FLOOR) > threshold,
        consistent_with_qm: pass_fail(&lhs, qm_reference, VERDICT_SIGMAS),
    };
    Ok(record("chain", Some(seed), &resolved, Payload::Chain(result)))
}

fn cmd_ghz() -> Result<RunRecord> {
    let report = ghz_contradiction()?;
    if report.satisfying_count != 0 {
        return Err(Error::Invariant(format!(
            "{} assignments satisfy every certain observable",
            report.satisfying_count
        )));
    }
    Ok(record("ghz", None, &GhzArgs { output: OutputArgs::default() }, Payload::Ghz(report)))
}

fn positive(what: &str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::InvalidArgument(format!("{what} must be positive")))
    } else {
        Ok(())
    }
}

fn cmd_nested(args: &NestedArgs) -> Result<RunRecord> {
    positive("--trials", args.trials)?;
    positive("--support", args.support)?;
    let scan = nested_scan(args.support, args.depth, args.trials, args.seed)?;
    let pass =
        scan.averaged.satisfied && scan.per_lambda.satisfied && scan.pointwise.as_ref().is_none_or(|p| p.satisfied);
    if !pass {
        return Err(Error::Invariant(format!("four-term bound exceeded: {}", serde_json::to_string(&scan).unwrap())));
    }
    let result = NestedResult { support: args.support, depth: args.depth, trials: args.trials, scan, pass };
    Ok(record("nested", Some(args.seed), args, Payload::Nested(result)))
}

fn cmd_hess(args: &HessArgs) -> Result<RunRecord> {
    positive("--trials", args.trials)?;
    let shape = HessShape::chsh(!args.setting_independent);
    let report = hess_chsh_scan(|rng| random_hess_model::<f64>(shape, rng), args.trials, args.seed)?;
    let result = HessResult { trials: args.trials, setting_dependent: !args.setting_independent, report };
    Ok(record("hess", Some(args.seed), args, Payload::Hess(result)))
}

fn cmd_bounds(args: &BoundsArgs) -> Result<RunRecord> {
    let mut resolved = args.clone();
    resolved.resolution = to_radians(args.resolution, args.degrees);
    resolved.degrees = false;

    let mut local = f64::NEG_INFINITY;
    for m in DeterministicLhv::<f64>::all_one_point_2x2() {
        local = local.max(max_chsh_over_indices(|a, b| m.correlation(a, b))?.0);
    }
    let quantum = max_chsh_search(
        |a, b| crate::quantum::singlet_correlation(crate::quantum::Angle(a), crate::quantum::Angle(b)),
        resolved.resolution,
    )?;
    let mut pr_box = f64::NEG_INFINITY;
    for s in index_settings() {
        pr_box = pr_box.max(try_chsh_value(|x: usize, y: usize| Ok(pr_box_correlation(x == 1, y == 1)), &s)?);
    }
    let quantum_closed_form = crate::inequalities::tsirelson_bound::<f64>();
    let quantum_success = crate::inequalities::tsirelson_success_probability::<f64>();
    let (classical_success, _) = classical_chsh_game_success();
    let quantum_success_percent = (quantum_success * 1000.0).round() / 10.0;
    let pass = local <= LOCAL_BOUND + REPORT_SLACK
        && (quantum.value - quantum_closed_form).abs() <= SEARCH_TOLERANCE
        && pr_box == PR_BOX_BOUND
        && classical_success == chsh_game_success_from_value(LOCAL_BOUND)
        && (chsh_game_success_from_value(quantum.value) - quantum_success).abs() <= SEARCH_TOLERANCE;
    if !pass {
        return Err(Error::Invariant("bounds table failed its checks".into()));
    }
    let table = BoundsTable {
        local,
        quantum,
        quantum_closed_form,
        pr_box,
        classical_success,
        quantum_success,
        quantum_success_percent,
        pass,
    };
    Ok(record("bounds", None, &resolved, Payload::Bounds(table)))
}

fn fmt_estimate(e: &Estimate) -> String {
    format!("{:.6} ± {:.6} (n = {})", e.mean, e.stderr, e.n)
}

/// Human-readable summary of a record.
pub fn render_table(r: &RunRecord) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} (schema {}, version {})", r.experiment, r.schema, r.version);
    if let Some(seed) = r.seed {
        let _ = writeln!(s, "  seed            {seed}");
    }
    let correlation_row = |s: &mut String, c: &CorrelationResult| {
        let theta = c.theta.map_or_else(|| "-".to_owned(), |t| format!("{t:.6}"));
        let reference = c.reference.map_or_else(|| "-".to_owned(), |v| format!("{v:.6}"));
        let pass = c.pass.map_or("-", |p| if p { "pass" } else { "FAIL" });
        let _ = writeln!(s, "  θ {theta:>10}  E {}  ref {reference}  {pass}", fmt_estimate(&c.estimate));
    };
    match &r.result {
        Payload::Correlation(c) => correlation_row(&mut s, c),
        Payload::Sweep(sw) => sw.points.iter().for_each(|c| correlation_row(&mut s, c)),
        Payload::Chain(c) => {
            let _ = writeln!(s, "  N = {}, φ = {:.6}", c.size, c.phi);
            for (i, p) in c.probabilities.iter().enumerate() {
                let _ = writeln!(s, "  statement {:>3}  {}", i + 1, fmt_estimate(p));
            }
            let _ = writeln!(s, "  LHS             {}", fmt_estimate(&c.lhs));
            let _ = writeln!(s, "  QM reference    {:.12}", c.qm_reference);
            let _ = writeln!(s, "  threshold N−1   {}", c.threshold);
            let _ = writeln!(s, "  violated        {}", c.violated);
        }
        Payload::Parity(p) => {
            let _ = writeln!(s, "  N = {}, λ₁ = ({})", p.size, format_direction(&p.lambda1));
            let _ = writeln!(s, "  false statements {} (first: {})", p.false_count, p.first_false);
        }
        Payload::Ghz(g) => {
            let _ = writeln!(s, "  certain observables   {}", g.certain_count);
            let _ = writeln!(s, "  satisfying assignments {}", g.satisfying_count);
            if let Some(cert) = &g.certificate {
                let words: Vec<String> = cert.iter().map(|o| format!("{}={}", o.word, o.value)).collect();
                let _ = writeln!(s, "  certificate           {}", words.join(" "));
            }
        }
        Payload::Nested(n) => {
            if let Some(p) = &n.scan.pointwise {
                let _ = writeln!(s, "  pointwise max   {:.12}", p.value);
            }
            let _ = writeln!(s, "  per-λ max       {:.12}", n.scan.per_lambda.value);
            let _ = writeln!(s, "  averaged max    {:.12}", n.scan.averaged.value);
            let _ = writeln!(s, "  pass            {}", n.pass);
        }
        Payload::Hess(h) => {
            let _ = writeln!(s, "  max CHSH        {:.12} (≤ 2: {})", h.report.value, h.report.satisfied);
        }
        Payload::Bounds(b) => {
            let _ = writeln!(s, "  local CHSH      {}", b.local);
            let _ = writeln!(s, "  quantum CHSH    {:.9} (2√2 = {:.9})", b.quantum.value, b.quantum_closed_form);
            let _ = writeln!(s, "  PR box CHSH     {}", b.pr_box);
            let _ = writeln!(s, "  classical game  {}", b.classical_success);
            let _ = writeln!(s, "  quantum game    {:.9} ({}%)", b.quantum_success, b.quantum_success_percent);
        }
    }
    s
}
