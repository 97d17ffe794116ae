//! Command implementations behind the `nlstab` binary: argument types,
//! JSON/CSV output, parameter sweeps and the exit-code contract.
//!
//! Every command returns its standard output as a string together with the
//! process exit code, so the same paths are exercised by tests and by the
//! binary.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::linearization::{Branch, ModelP1, ModelP2, SpectralSymbol, SymbolModel};
use crate::oracle::{self, OracleReport, SearchSpec};
use crate::sampling::{ParameterDraw, Sampler};
use crate::scalar_roots::{self, RootResult};
use crate::spectral_sim::{self, Dynamics, SimConfig, SimResult};
use crate::stability::{self, Verdict};

/// Version of the JSON and CSV layouts documented in `docs/schema.md`.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_STABLE: i32 = 0;
pub const EXIT_UNSTABLE: i32 = 10;
pub const EXIT_MISMATCH: i32 = 11;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "NSL_THREADS";

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Argument(_) | Error::Config(_) => EXIT_USAGE,
        Error::Domain(_) | Error::Precondition(_) | Error::Bracket { .. } | Error::Convergence { .. } => EXIT_DOMAIN,
        Error::Fit(_) => EXIT_MISMATCH,
    }
}

fn verdict_exit(stable: bool) -> i32 {
    if stable {
        EXIT_STABLE
    } else {
        EXIT_UNSTABLE
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nlstab",
    version,
    about = "Spectral stability of constant states of nonlocal reaction-diffusion equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sharp analytic verdict for one parameter set.
    Classify(ModelArgs),
    /// Special roots z1, x* and s0.
    Roots(RootsArgs),
    /// Brute-force minimum of the spectral symbol.
    Oracle(OracleArgs),
    /// Parameter sweep comparing classifier and oracle, as CSV.
    Scan(ScanArgs),
    /// Pseudospectral run confirming the predicted growth rate.
    Simulate(SimulateArgs),
    /// Seeded random parameter draws.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    P1,
    P2,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub problem: Option<Problem>,
    #[arg(long)]
    pub kernel: Option<KernelFamily>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Window half-width.
    #[arg(long = "N")]
    pub n: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    /// Problem 1 with `a = 0`, `b = 1` and this `k₂`.
    #[arg(long)]
    pub k2: Option<f64>,
    /// Constant state of problem 2 (1 = larger, 2 = smaller).
    #[arg(long)]
    pub branch: Option<u8>,
}

fn required(name: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::Argument(format!("--{name} is required")))
}

/// A problem together with its model, before a branch is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum ProblemModel {
    P1 { model: ModelP1 },
    P2 { model: ModelP2 },
}

impl ProblemModel {
    pub fn with_branch(self, branch: Branch) -> SymbolModel {
        match self {
            ProblemModel::P1 { model } => SymbolModel::P1 { model },
            ProblemModel::P2 { model } => SymbolModel::P2 { model, branch },
        }
    }
}

impl ModelArgs {
    pub fn kernel(&self) -> Result<KernelSpec> {
        let family = self.kernel.ok_or_else(|| Error::Argument("--kernel is required".into()))?;
        KernelSpec::new(family, self.alpha, self.n, self.dim)
    }

    pub fn branch(&self) -> Result<Option<Branch>> {
        self.branch.map(Branch::from_index).transpose()
    }

    pub fn model(&self) -> Result<ProblemModel> {
        match self.problem.ok_or_else(|| Error::Argument("--problem is required".into()))? {
            Problem::P1 => {
                if self.d.is_some() {
                    return Err(Error::Argument("--d does not apply to problem p1".into()));
                }
                let model = match (self.k2, self.k, self.a, self.b) {
                    (Some(k2), None, None, None) => ModelP1::with_k2(k2)?,
                    (Some(_), _, _, _) => {
                        return Err(Error::Argument("--k2 cannot be combined with --k, --a, --b".into()))
                    }
                    (None, k, a, b) => ModelP1::new(required("k", k)?, required("a", a)?, required("b", b)?)?,
                };
                Ok(ProblemModel::P1 { model })
            }
            Problem::P2 => {
                if self.k.is_some() || self.k2.is_some() {
                    return Err(Error::Argument("--k and --k2 do not apply to problem p2".into()));
                }
                let model = ModelP2::new(required("d", self.d)?, required("a", self.a)?, required("b", self.b)?)?;
                Ok(ProblemModel::P2 { model })
            }
        }
    }

    /// Model with the requested branch (branch 1 when unspecified).
    pub fn symbol_model(&self) -> Result<SymbolModel> {
        let model = self.model()?;
        if matches!(model, ProblemModel::P1 { .. }) && self.branch.is_some() {
            return Err(Error::Argument("--branch applies to problem p2 only".into()));
        }
        Ok(model.with_branch(self.branch()?.unwrap_or(Branch::One)))
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

/// Standard output and exit code of a successful command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Classify(args) => cmd_classify(&args),
        Command::Roots(args) => cmd_roots(&args),
        Command::Oracle(args) => cmd_oracle(&args),
        Command::Scan(args) => cmd_scan(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Sample(args) => cmd_sample(&args),
    }
}

// ---- classify -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutput {
    pub schema_version: u32,
    pub kernel: KernelSpec,
    #[serde(flatten)]
    pub model: ProblemModel,
    /// One verdict for problem 1; for problem 2 both branches, or the
    /// requested one.
    pub verdicts: Vec<Verdict>,
}

impl ClassifyOutput {
    /// Verdict deciding the exit code: the single one, or branch 1.
    pub fn primary(&self) -> &Verdict {
        &self.verdicts[0]
    }
}

pub fn classify(args: &ModelArgs) -> Result<ClassifyOutput> {
    let kernel = args.kernel()?;
    let model = args.model()?;
    let verdicts = match model {
        ProblemModel::P1 { model } => {
            if args.branch.is_some() {
                return Err(Error::Argument("--branch applies to problem p2 only".into()));
            }
            vec![stability::classify_p1(&model, &kernel)?]
        }
        ProblemModel::P2 { model } => {
            let both = stability::classify_p2(&model, &kernel)?;
            match args.branch()? {
                Some(b) => vec![*both.get(b)],
                None => vec![both.branch1, both.branch2],
            }
        }
    };
    Ok(ClassifyOutput { schema_version: SCHEMA_VERSION, kernel, model, verdicts })
}

pub fn cmd_classify(args: &ModelArgs) -> Result<Outcome> {
    let out = classify(args)?;
    Ok(Outcome { stdout: to_json(&out), code: verdict_exit(out.primary().stable) })
}

// ---- roots ----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RootTarget {
    Z1,
    Xstar,
    S0,
}

#[derive(Debug, Clone, Args)]
pub struct RootsArgs {
    #[arg(value_enum)]
    pub target: RootTarget,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Larger constant state, instead of `--a`.
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootsOutput {
    pub schema_version: u32,
    pub target: RootTarget,
    pub c1: Option<f64>,
    pub b: Option<f64>,
    pub root: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    pub iterations: usize,
    /// Critical points of `f` (target `xstar` only).
    pub x1: Option<f64>,
    pub x2: Option<f64>,
}

fn c1_and_b(args: &RootsArgs) -> Result<(f64, f64)> {
    let b = required("b", args.b)?;
    match (args.a, args.c1) {
        (Some(a), None) => Ok((ModelP2::new(1.0, a, b)?.c1(), b)),
        (None, Some(c1)) => Ok((c1, b)),
        _ => Err(Error::Argument("exactly one of --a and --c1 is required".into())),
    }
}

pub fn roots(args: &RootsArgs) -> Result<RootsOutput> {
    let pack = |target, c1, b, r: RootResult, x1, x2| RootsOutput {
        schema_version: SCHEMA_VERSION,
        target,
        c1,
        b,
        root: r.root,
        bracket: r.bracket,
        residual: r.residual,
        iterations: r.iterations,
        x1,
        x2,
    };
    match args.target {
        RootTarget::Z1 => Ok(pack(RootTarget::Z1, None, None, scalar_roots::solve_z1(args.tol)?, None, None)),
        RootTarget::Xstar => {
            let (c1, b) = c1_and_b(args)?;
            let l = scalar_roots::xstar_artifacts(c1, b, args.tol)?;
            Ok(pack(RootTarget::Xstar, Some(c1), Some(b), l.root, Some(l.x1), Some(l.x2)))
        }
        RootTarget::S0 => {
            let (c1, b) = c1_and_b(args)?;
            let r = scalar_roots::solve_s0(c1, b, args.tol)?;
            Ok(pack(RootTarget::S0, Some(c1), Some(b), r, None, None))
        }
    }
}

pub fn cmd_roots(args: &RootsArgs) -> Result<Outcome> {
    Ok(Outcome { stdout: to_json(&roots(args)?), code: EXIT_STABLE })
}

// ---- oracle ---------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Search box half-width in reduced coordinates (default: coercivity radius).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Coarse grid intervals per axis, at least 512.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub schema_version: u32,
    pub kernel: KernelSpec,
    pub model: SymbolModel,
    pub search: SearchSpec,
    pub report: OracleReport,
}

pub fn run_oracle(args: &OracleArgs) -> Result<OracleOutput> {
    let kernel = args.model.kernel()?;
    let model = args.model.symbol_model()?;
    let symbol = SpectralSymbol::new(model, kernel);
    let mut search = SearchSpec::for_symbol(&symbol);
    if let Some(r) = args.radius {
        search.radius = r;
    }
    if let Some(p) = args.points {
        search = search.with_coarse_points(p);
    }
    let report = oracle::grid_min_symbol(&symbol, &search)?;
    Ok(OracleOutput { schema_version: SCHEMA_VERSION, kernel, model, search, report })
}

pub fn cmd_oracle(args: &OracleArgs) -> Result<Outcome> {
    let out = run_oracle(args)?;
    Ok(Outcome { stdout: to_json(&out), code: verdict_exit(out.report.is_stable()) })
}

// ---- scan -----------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
pub enum SweepParameter {
    #[serde(rename = "d")]
    #[value(name = "d")]
    D,
    #[serde(rename = "a")]
    #[value(name = "a")]
    A,
    #[serde(rename = "b")]
    #[value(name = "b")]
    B,
    #[serde(rename = "alpha")]
    #[value(name = "alpha")]
    Alpha,
    #[serde(rename = "k2")]
    #[value(name = "k2")]
    K2,
    #[serde(rename = "N")]
    #[value(name = "N")]
    N,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::D => "d",
            SweepParameter::A => "a",
            SweepParameter::B => "b",
            SweepParameter::Alpha => "alpha",
            SweepParameter::K2 => "k2",
            SweepParameter::N => "N",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutput {
    Verdict,
    Threshold,
    OracleMin,
    SimRate,
}

fn default_outputs() -> Vec<SweepOutput> {
    vec![SweepOutput::Verdict, SweepOutput::Threshold, SweepOutput::OracleMin]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub problem: Problem,
    pub family: KernelFamily,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub branch: Option<Branch>,
    pub parameter: SweepParameter,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    /// Geometric spacing between `lo` and `hi`.
    #[serde(default)]
    pub log: bool,
    /// Values of the remaining parameters, keyed `d`, `a`, `b`, `k`,
    /// `k2`, `alpha`, `N`.
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<SweepOutput>,
    /// Oracle coarse grid intervals per axis.
    #[serde(default)]
    pub points: Option<usize>,
}

const FIXED_KEYS: [&str; 7] = ["d", "a", "b", "k", "k2", "alpha", "N"];

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Argument(format!("empty sweep range [{}, {}]", self.lo, self.hi)));
        }
        if self.steps < 2 {
            return Err(Error::Argument(format!("steps must be at least 2, got {}", self.steps)));
        }
        if self.log && !(self.lo > 0.0) {
            return Err(Error::Argument("log sweep needs lo > 0".into()));
        }
        if let Some(key) = self.fixed.keys().find(|k| !FIXED_KEYS.contains(&k.as_str())) {
            return Err(Error::Argument(format!("unknown fixed parameter {key}")));
        }
        if self.fixed.contains_key(self.parameter.name()) {
            return Err(Error::Argument(format!("{} is both swept and fixed", self.parameter)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                let t = i as f64 / last;
                if i == 0 {
                    self.lo
                } else if i + 1 == self.steps {
                    self.hi
                } else if self.log {
                    (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + t * (self.hi - self.lo)
                }
            })
            .collect()
    }

    fn row_args(&self, value: f64) -> ModelArgs {
        let mut p = self.fixed.clone();
        p.insert(self.parameter.name().to_string(), value);
        ModelArgs {
            problem: Some(self.problem),
            kernel: Some(self.family),
            alpha: p.get("alpha").copied(),
            n: p.get("N").copied(),
            dim: self.dim,
            a: p.get("a").copied(),
            b: p.get("b").copied(),
            d: p.get("d").copied(),
            k: p.get("k").copied(),
            k2: p.get("k2").copied(),
            branch: self.branch.map(Branch::index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub stable: Option<bool>,
    pub threshold: Option<f64>,
    pub oracle_min: Option<f64>,
    pub oracle_stable: Option<bool>,
    /// Classifier and oracle verdicts coincide, or either is marginal.
    pub agree: Option<bool>,
    pub sim_rate: Option<f64>,
    pub error: Option<String>,
}

fn evaluate_row(spec: &SweepSpec, index: usize, value: f64) -> SweepRow {
    let mut row = SweepRow {
        index,
        value,
        stable: None,
        threshold: None,
        oracle_min: None,
        oracle_stable: None,
        agree: None,
        sim_rate: None,
        error: None,
    };
    if let Err(e) = fill_row(spec, value, &mut row) {
        row.error = Some(e.to_string());
    }
    row
}

fn fill_row(spec: &SweepSpec, value: f64, row: &mut SweepRow) -> Result<()> {
    let args = spec.row_args(value);
    let out = classify(&args)?;
    let verdict = out.primary();
    row.stable = Some(verdict.stable);
    row.threshold = Some(verdict.threshold);
    let model = args.symbol_model()?;
    let symbol = SpectralSymbol::new(model, out.kernel);
    let mut search = SearchSpec::for_symbol(&symbol);
    if let Some(p) = spec.points {
        search = search.with_coarse_points(p);
    }
    let report = oracle::grid_min_symbol(&symbol, &search)?;
    row.oracle_min = Some(report.min_value);
    row.oracle_stable = Some(report.is_stable());
    row.agree = Some(verdict.stable == report.is_stable() || verdict.marginal || report.marginal);
    if spec.outputs.contains(&SweepOutput::SimRate) {
        let cfg = spectral_sim::auto_config(model, out.kernel)?;
        row.sim_rate = Some(spectral_sim::simulate_nonlinear(&cfg)?.measured_rate);
    }
    Ok(())
}

/// Rayon pool honoring `NSL_THREADS`.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::Argument(format!("{THREADS_ENV} must be positive")));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

/// Evaluates every sweep point; rows come back in sweep order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let values = spec.values();
    let pool = thread_pool()?;
    Ok(pool.install(|| values.par_iter().enumerate().map(|(i, &v)| evaluate_row(spec, i, v)).collect()))
}

/// Round-trip exact text for a real; `inf`/`-inf`/`nan` otherwise.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt_real(x: Option<f64>) -> String {
    x.map(format_real).unwrap_or_default()
}

fn verdict_word(stable: Option<bool>) -> &'static str {
    match stable {
        Some(true) => "stable",
        Some(false) => "unstable",
        None => "",
    }
}

/// CSV with a header row and a trailing `# rows=…` summary line.
pub fn sweep_csv(spec: &SweepSpec, rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index".to_string(), spec.parameter.name().to_string()];
    let wants = |o| spec.outputs.contains(&o);
    if wants(SweepOutput::Verdict) {
        header.push("verdict".into());
    }
    if wants(SweepOutput::Threshold) {
        header.push("threshold".into());
    }
    if wants(SweepOutput::OracleMin) {
        header.extend(["oracle_min".into(), "oracle_verdict".into()]);
    }
    header.push("agree".into());
    if wants(SweepOutput::SimRate) {
        header.push("sim_rate".into());
    }
    header.push("error".into());
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.index.to_string(), format_real(r.value)];
        if wants(SweepOutput::Verdict) {
            rec.push(if r.error.is_some() { "error".into() } else { verdict_word(r.stable).into() });
        }
        if wants(SweepOutput::Threshold) {
            rec.push(opt_real(r.threshold));
        }
        if wants(SweepOutput::OracleMin) {
            rec.push(opt_real(r.oracle_min));
            rec.push(verdict_word(r.oracle_stable).into());
        }
        rec.push(r.agree.map(|a| a.to_string()).unwrap_or_default());
        if wants(SweepOutput::SimRate) {
            rec.push(opt_real(r.sim_rate));
        }
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let mut text =
        String::from_utf8(w.into_inner().map_err(|e| Error::Config(e.to_string()))?).expect("csv output is utf-8");
    let errors = rows.iter().filter(|r| r.error.is_some()).count();
    let disagreements = rows.iter().filter(|r| r.agree == Some(false)).count();
    text.push_str(&format!("# rows={} disagreements={disagreements} errors={errors}\n", rows.len()));
    Ok(text)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    /// Sweep specification as JSON; replaces the flags below.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub param: Option<SweepParameter>,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub log: bool,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub outputs: Vec<SweepOutput>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))
}

impl ScanArgs {
    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        if let Some(path) = &self.spec {
            return read_json(path);
        }
        let m = &self.model;
        let parameter = self.param.ok_or_else(|| Error::Argument("--param or --spec is required".into()))?;
        let mut fixed = BTreeMap::new();
        for (key, v) in [("d", m.d), ("a", m.a), ("b", m.b), ("k", m.k), ("k2", m.k2), ("alpha", m.alpha), ("N", m.n)] {
            if let Some(v) = v {
                fixed.insert(key.to_string(), v);
            }
        }
        Ok(SweepSpec {
            problem: m.problem.ok_or_else(|| Error::Argument("--problem is required".into()))?,
            family: m.kernel.ok_or_else(|| Error::Argument("--kernel is required".into()))?,
            dim: m.dim,
            branch: m.branch()?,
            parameter,
            lo: required("lo", self.lo)?,
            hi: required("hi", self.hi)?,
            steps: self.steps.ok_or_else(|| Error::Argument("--steps is required".into()))?,
            log: self.log,
            fixed,
            outputs: if self.outputs.is_empty() { default_outputs() } else { self.outputs.clone() },
            points: self.points,
        })
    }
}

pub fn cmd_scan(args: &ScanArgs) -> Result<Outcome> {
    let spec = args.sweep_spec()?;
    let rows = run_sweep(&spec)?;
    let csv = sweep_csv(&spec, &rows)?;
    match &args.out {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?;
            Ok(Outcome { stdout: String::new(), code: EXIT_STABLE })
        }
        None => Ok(Outcome { stdout: csv, code: EXIT_STABLE }),
    }
}

// ---- simulate -------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Full simulation configuration as JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Grid points per axis (power of two, at least 64).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Box half-length `L`; the box is `[−L, L]ⁿ`.
    #[arg(long)]
    pub half_length: Option<f64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Seeded lattice mode, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub mode: Vec<i64>,
    #[arg(long, value_enum)]
    pub dynamics: Option<DynamicsArg>,
    /// Write the time series CSV here.
    #[arg(long)]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DynamicsArg {
    Nonlinear,
    Linearized,
    DiffusionOnly,
}

impl From<DynamicsArg> for Dynamics {
    fn from(d: DynamicsArg) -> Self {
        match d {
            DynamicsArg::Nonlinear => Dynamics::Nonlinear,
            DynamicsArg::Linearized => Dynamics::Linearized,
            DynamicsArg::DiffusionOnly => Dynamics::DiffusionOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictSource {
    Classifier,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub schema_version: u32,
    pub config: SimConfig,
    pub seed_frequency: Vec<f64>,
    pub seed_symbol: f64,
    /// `−Φ(p_seed)`.
    pub expected_rate: f64,
    pub measured_rate: f64,
    pub fit_window: Option<(f64, f64)>,
    pub blow_up: bool,
    pub samples: usize,
    pub predicted_stable: bool,
    pub verdict_source: VerdictSource,
    /// Growth observed exactly when instability is predicted.
    pub rate_matches_verdict: bool,
}

/// Analytic verdict for the model, or the oracle's where no sharp
/// criterion applies.
pub fn predicted_stability(model: &SymbolModel, kernel: &KernelSpec) -> Result<(bool, VerdictSource)> {
    let analytic = match model {
        SymbolModel::P1 { model } => stability::classify_p1(model, kernel),
        SymbolModel::P2 { model, branch } => stability::classify_p2(model, kernel).map(|c| *c.get(*branch)),
    };
    match analytic {
        Ok(v) => Ok((v.stable, VerdictSource::Classifier)),
        Err(Error::Argument(_)) | Err(Error::Domain(_)) => {
            let symbol = SpectralSymbol::new(*model, *kernel);
            let report = oracle::grid_min_symbol(&symbol, &SearchSpec::for_symbol(&symbol))?;
            Ok((report.is_stable(), VerdictSource::Oracle))
        }
        Err(e) => Err(e),
    }
}

pub fn sim_config(args: &SimulateArgs) -> Result<SimConfig> {
    let mut cfg = match &args.config {
        Some(path) => read_json::<SimConfig>(path)?,
        None => spectral_sim::auto_config(args.model.symbol_model()?, args.model.kernel()?)?,
    };
    if let Some(v) = args.half_length {
        cfg.box_half_length = v;
    }
    if let Some(v) = args.grid {
        cfg.grid_points_per_axis = v;
    }
    if let Some(v) = args.dt {
        cfg.dt = v;
    }
    if let Some(v) = args.t_final {
        cfg.t_final = v;
        cfg.stop_growth = None;
    }
    if let Some(v) = args.amplitude {
        cfg.perturbation.amplitude = v;
    }
    if !args.mode.is_empty() {
        cfg.perturbation.mode = args.mode.clone();
    }
    if let Some(d) = args.dynamics {
        cfg.dynamics = d.into();
    }
    Ok(cfg)
}

pub fn series_csv(result: &SimResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "seeded_mode_abs", "l2_deviation"]).map_err(csv_err)?;
    for ((t, a), l) in result.times.iter().zip(&result.mode_amplitudes).zip(&result.field_l2_deviation) {
        w.write_record([format_real(*t), format_real(*a), format_real(*l)]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn simulate(cfg: &SimConfig) -> Result<(SimSummary, SimResult)> {
    let result = spectral_sim::simulate_nonlinear(cfg)?;
    let (predicted_stable, verdict_source) = predicted_stability(&cfg.model, &cfg.kernel)?;
    let grows = result.blow_up || result.measured_rate > 0.0;
    let summary = SimSummary {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        seed_frequency: result.seed_frequency.clone(),
        seed_symbol: result.seed_symbol,
        expected_rate: -result.seed_symbol,
        measured_rate: result.measured_rate,
        fit_window: result.fit_window,
        blow_up: result.blow_up,
        samples: result.times.len(),
        predicted_stable,
        verdict_source,
        rate_matches_verdict: grows != predicted_stable,
    };
    Ok((summary, result))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let cfg = sim_config(args)?;
    let (summary, result) = simulate(&cfg)?;
    if let Some(path) = &args.series {
        fs::write(path, series_csv(&result)?).map_err(|e| Error::Argument(format!("{}: {e}", path.display())))?;
    }
    let code = if summary.rate_matches_verdict { EXIT_STABLE } else { EXIT_MISMATCH };
    Ok(Outcome { stdout: to_json(&summary), code })
}

// ---- sample ---------------------------------------------------------------

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutput {
    pub schema_version: u32,
    pub seed: u64,
    pub draws: Vec<ParameterDraw>,
}

pub fn cmd_sample(args: &SampleArgs) -> Result<Outcome> {
    let mut s = Sampler::new(args.seed);
    let draws = (0..args.count).map(|_| s.draw()).collect();
    let out = SampleOutput { schema_version: SCHEMA_VERSION, seed: args.seed, draws };
    Ok(Outcome { stdout: to_json(&out), code: EXIT_STABLE })
}
