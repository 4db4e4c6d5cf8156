//! Command-line surface. Every report is JSON with an embedded manifest that
//! `--replay` turns back into the same command.

pub mod selftest;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::curve::{
    self, is_absolutely_irreducible, parse_curve, parse_curve_json, CurveError, Irreducibility, PlaneCurve,
};
use crate::ff::{ElementRepr, Field, FieldCtx, FieldElement, FieldError};
use crate::incidence::{self, ExperimentConfig, IncidenceError, Mode, DEFAULT_EXHAUSTIVE_BUDGET};
use crate::theory::{self, Rational, TheoryError};
use crate::veronese::{self, VeroneseError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FLAGGED: i32 = 1;
pub const EXIT_REFUSED: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_INPUT: i32 = 4;
pub const EXIT_COMPUTE: i32 = 5;
pub const EXIT_USAGE: i32 = 64;

pub const DEFAULT_SEED: &str = "42";

/// Largest `q^N` used by the component-count estimator before experiments.
const IRREDUCIBILITY_POINT_BUDGET: u64 = 1 << 16;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("input: {0}")]
    Input(String),
    #[error("budget: {0}")]
    Budget(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("computation: {0}")]
    Compute(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Refused(_) => EXIT_REFUSED,
            CliError::Compute(_) => EXIT_COMPUTE,
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        match e {
            CurveError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            CurveError::DegenerateAfterRetries(_) | CurveError::Poly(_) => CliError::Compute(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<IncidenceError> for CliError {
    fn from(e: IncidenceError) -> Self {
        match e {
            IncidenceError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            IncidenceError::EmptySample => CliError::Usage(e.to_string()),
            IncidenceError::Curve(c) => c.into(),
            IncidenceError::Field(f) => f.into(),
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl From<VeroneseError> for CliError {
    fn from(e: VeroneseError) -> Self {
        match e {
            VeroneseError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            VeroneseError::DegreeZero => CliError::Usage(e.to_string()),
            VeroneseError::Curve(c) => c.into(),
            VeroneseError::Incidence(i) => i.into(),
            VeroneseError::Field(f) => f.into(),
            other => CliError::Compute(other.to_string()),
        }
    }
}

impl From<TheoryError> for CliError {
    fn from(e: TheoryError) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rencontres",
    version,
    about = "Line and curve incidence statistics over finite fields"
)]
pub struct Cli {
    /// Re-run the command recorded in a report or manifest file.
    #[arg(long, value_name = "FILE")]
    pub replay: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Worker threads; reports do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Record wall-clock duration in the manifest (breaks byte-identical replays).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Args, Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveArgs {
    /// Characteristic of the base field.
    #[arg(long, default_value_t = 7)]
    pub p: u64,
    /// Base field is F_{p^r}.
    #[arg(long, default_value_t = 1)]
    pub r: usize,
    /// Curve text, e.g. "x^2 + y^2 - z^2", or a JSON coefficient map.
    #[arg(long)]
    pub curve: Option<String>,
    #[arg(long, conflicts_with = "curve", value_name = "FILE")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_file: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Exhaustive,
    Sample,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunArgs {
    /// Extension degree N of the experiment field F_{q^N}.
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Integer seed, or "random" to draw one (the drawn value is recorded).
    #[arg(long, default_value = DEFAULT_SEED)]
    pub seed: String,
    /// Maximum number of trials in exhaustive mode.
    #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_BUDGET)]
    pub budget: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Run even if the curve is not (likely) absolutely irreducible.
    #[arg(long)]
    pub force: bool,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Limiting probabilities p_k for degree d (or d e).
    Predict {
        #[arg(long)]
        degree: Option<usize>,
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long)]
        e: Option<u32>,
        /// Print only p_k.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Line incidence experiment with deviations from the prediction.
    Experiment {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Factorization-type frequencies of squarefree restrictions.
    Chebotarev {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Random curves of degree e against the curve.
    Veronese {
        #[command(flatten)]
        curve: CurveArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 2)]
        e: u32,
    },
    /// First simple-tangency witness line over F_{q^N}, N <= max-N.
    Tangency {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long = "max-N", default_value_t = 3)]
        max_n: usize,
        /// Exhaustive scan while the line count is at most this.
        #[arg(long, default_value_t = DEFAULT_EXHAUSTIVE_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value = DEFAULT_SEED)]
        seed: String,
    },
    /// Singular points over the algebraic closure.
    Singular {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long, default_value = DEFAULT_SEED)]
        seed: String,
    },
    /// Exact number of points over F_{q^N}.
    Pointcount {
        #[command(flatten)]
        curve: CurveArgs,
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = curve::DEFAULT_POINT_BUDGET)]
        budget: u64,
    },
    /// Run the property suites.
    Selftest {
        /// Run only these properties.
        #[arg(long)]
        only: Vec<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Predict { .. } => "predict",
            Command::Experiment { .. } => "experiment",
            Command::Chebotarev { .. } => "chebotarev",
            Command::Veronese { .. } => "veronese",
            Command::Tangency { .. } => "tangency",
            Command::Singular { .. } => "singular",
            Command::Pointcount { .. } => "pointcount",
            Command::Selftest { .. } => "selftest",
        }
    }

    /// Inlines curve files and draws `random` seeds, so the command is
    /// self-contained and deterministic.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        match &mut self {
            Command::Predict { curve, .. } | Command::Singular { curve, .. } | Command::Pointcount { curve, .. } => {
                curve.resolve()?
            }
            Command::Experiment { curve, run }
            | Command::Chebotarev { curve, run }
            | Command::Veronese { curve, run, .. } => {
                curve.resolve()?;
                run.seed = resolve_seed(&run.seed)?.to_string();
            }
            Command::Tangency { curve, seed, .. } => {
                curve.resolve()?;
                *seed = resolve_seed(seed)?.to_string();
            }
            Command::Selftest { .. } => {}
        }
        if let Command::Singular { seed, .. } = &mut self {
            *seed = resolve_seed(seed)?.to_string();
        }
        Ok(self)
    }
}

impl CurveArgs {
    fn resolve(&mut self) -> Result<(), CliError> {
        if let Some(path) = self.curve_file.take() {
            let text =
                std::fs::read_to_string(&path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            self.curve = Some(text.trim().to_string());
        }
        Ok(())
    }

    fn base(&self) -> Result<FieldCtx, CliError> {
        Ok(FieldCtx::new(self.p, self.r, 1)?)
    }

    fn parse(&self) -> Result<PlaneCurve, CliError> {
        let ctx = self.base()?;
        let text = self
            .curve
            .as_deref()
            .ok_or_else(|| CliError::Usage("a curve is required (--curve or --curve-file)".into()))?;
        Ok(if text.trim_start().starts_with('{') {
            parse_curve_json(text, &ctx)?
        } else {
            parse_curve(text, &ctx)?
        })
    }
}

fn resolve_seed(seed: &str) -> Result<u64, CliError> {
    if seed == "random" {
        return Ok(rand::random());
    }
    seed.parse()
        .map_err(|_| CliError::Usage(format!("seed must be an integer or \"random\", got {seed:?}")))
}

fn seed_of(seed: &str) -> Result<u64, CliError> {
    resolve_seed(seed)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
}

impl RunManifest {
    pub fn new(config: &Command) -> Self {
        RunManifest {
            command: config.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            duration_ms: None,
        }
    }

    /// Reads a manifest, either bare or embedded in a report under `manifest`.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
        let value = match value.get("manifest") {
            Some(m) => m.clone(),
            None => value,
        };
        serde_json::from_value(value).map_err(|e| CliError::Input(format!("not a manifest: {e}")))
    }
}

/// Result of one command: the text to emit and the exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

fn json_output(manifest: &RunManifest, body: Value, code: i32) -> Output {
    let mut object = serde_json::Map::new();
    object.insert("manifest".into(), serde_json::to_value(manifest).unwrap());
    if let Value::Object(fields) = body {
        object.extend(fields);
    }
    Output {
        text: serde_json::to_string_pretty(&Value::Object(object)).unwrap() + "\n",
        code,
    }
}

fn element_json(ctx: &FieldCtx, e: &FieldElement) -> ElementRepr {
    ElementRepr(ctx.to_nested(e))
}

fn check_irreducible(curve: &PlaneCurve, force: bool, seed: u64) -> Result<Irreducibility, CliError> {
    let q = curve.q();
    let levels: Vec<usize> = (1..=8)
        .filter(|&n| {
            q.checked_pow(n as u32)
                .is_some_and(|v| v <= IRREDUCIBILITY_POINT_BUDGET)
        })
        .collect();
    let verdict = is_absolutely_irreducible(
        curve,
        &levels,
        IRREDUCIBILITY_POINT_BUDGET,
        &mut ChaCha8Rng::seed_from_u64(seed),
    );
    if !force && !verdict.accepted() {
        return Err(CliError::Refused(format!(
            "curve is not known to be absolutely irreducible ({}); pass --force to run anyway",
            serde_json::to_string(&verdict).unwrap()
        )));
    }
    Ok(verdict)
}

fn experiment_config(run: &RunArgs) -> Result<ExperimentConfig, CliError> {
    Ok(ExperimentConfig {
        n: run.n,
        mode: match run.mode {
            ModeArg::Exhaustive => Mode::Exhaustive,
            ModeArg::Sample => Mode::Sample { count: run.samples },
        },
        seed: seed_of(&run.seed)?,
        exhaustive_budget: run.budget,
    })
}

/// Runs a resolved command.
pub fn execute(command: &Command) -> Result<Output, CliError> {
    let manifest = RunManifest::new(command);
    match command {
        Command::Predict { degree, curve, e, k } => {
            let d = match (degree, &curve.curve) {
                (Some(d), None) => *d,
                (None, Some(_)) => curve.parse()?.degree(),
                (Some(_), Some(_)) => return Err(CliError::Usage("give either --degree or a curve".into())),
                (None, None) => return Err(CliError::Usage("--degree or a curve is required".into())),
            };
            let e = e.unwrap_or(1);
            if e == 0 {
                return Err(CliError::Usage("e must be at least 1".into()));
            }
            let pred = theory::predict(d * e as usize)?;
            let body = match k {
                Some(k) => {
                    let p = pred
                        .p
                        .get(*k)
                        .ok_or_else(|| CliError::Usage(format!("k must be at most {}", pred.d)))?;
                    json!({ "d": pred.d, "k": k, "p_k": p })
                }
                None => json!({ "prediction": pred }),
            };
            Ok(json_output(&manifest, body, EXIT_OK))
        }
        Command::Experiment { curve, run } | Command::Chebotarev { curve, run } => {
            let c = curve.parse()?;
            let cfg = experiment_config(run)?;
            let verdict = check_irreducible(&c, run.force, cfg.seed)?;
            eprintln!(
                "N={}: {} over F_{}^{}",
                cfg.n,
                manifest.command,
                c.ctx().p(),
                c.ctx().r() * cfg.n
            );
            let report = incidence::run_experiment(&c, &cfg)?;
            let deviation = theory::compare(&report, &theory::predict(c.degree())?)?;
            if matches!(command, Command::Experiment { .. }) {
                let code = if deviation.flagged() { EXIT_FLAGGED } else { EXIT_OK };
                if run.format == Format::Csv {
                    return Ok(Output {
                        text: report.to_csv(),
                        code,
                    });
                }
                let body = json!({ "irreducibility": verdict, "report": report, "deviation": deviation });
                Ok(json_output(&manifest, body, code))
            } else {
                let flags: Vec<&String> = deviation.flags.iter().filter(|f| f.starts_with("partition")).collect();
                let code = if flags.is_empty() { EXIT_OK } else { EXIT_FLAGGED };
                let total = report.total_lines_considered;
                let body = json!({
                    "irreducibility": verdict,
                    "d": report.d,
                    "total_lines_considered": total,
                    "partition_histogram": report.partition_histogram,
                    "excluded_nonsquarefree": report.excluded_nonsquarefree,
                    "excluded_line_on_curve": report.excluded_line_on_curve,
                    "excluded_fraction": Rational::new(report.excluded_nonsquarefree + report.excluded_line_on_curve, total.max(1)),
                    "per_partition": deviation.per_partition,
                    "flags": flags,
                });
                if run.format == Format::Csv {
                    let mut text = String::from("partition,count,observed,predicted,z\n");
                    for (pi, dev) in &deviation.per_partition {
                        let count = report.partition_histogram.get(pi).copied().unwrap_or(0);
                        text.push_str(&format!(
                            "{pi},{count},{},{},{}\n",
                            theory::decimal(dev.observed.to_f64()),
                            theory::decimal(dev.predicted.to_f64()),
                            dev.z.clone().unwrap_or_default()
                        ));
                    }
                    return Ok(Output { text, code });
                }
                Ok(json_output(&manifest, body, code))
            }
        }
        Command::Veronese { curve, run, e } => {
            let c = curve.parse()?;
            let cfg = experiment_config(run)?;
            let verdict = check_irreducible(&c, run.force, cfg.seed)?;
            let report = veronese::run_pair_experiment(&c, *e, &cfg)?;
            let deviation = theory::compare(&report, &theory::predict(report.d)?)?;
            let code = if deviation.flagged() { EXIT_FLAGGED } else { EXIT_OK };
            if run.format == Format::Csv {
                return Ok(Output {
                    text: report.to_csv(),
                    code,
                });
            }
            let body = json!({ "irreducibility": verdict, "report": report, "deviation": deviation });
            Ok(json_output(&manifest, body, code))
        }
        Command::Tangency {
            curve,
            max_n,
            budget,
            samples,
            seed,
        } => {
            let c = curve.parse()?;
            let witness = curve::simple_tangency_witness(&c, *max_n, *budget, *samples, seed_of(seed)?)?;
            let body = match witness {
                Some(w) => {
                    let ext = c.ctx().extension(w.n)?;
                    json!({
                        "found": true,
                        "N": w.n,
                        "line": w.line.dual().coords().iter().map(|v| element_json(&ext, v)).collect::<Vec<_>>(),
                    })
                }
                None => json!({ "found": false, "max_N": max_n }),
            };
            Ok(json_output(&manifest, body, EXIT_OK))
        }
        Command::Singular { curve, seed } => {
            let c = curve.parse()?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed_of(seed)?);
            let points = curve::singular_points(&c, &mut rng)?;
            let list: Vec<Value> = points
                .iter()
                .map(|sp| {
                    let ext = c.ctx().extension(sp.ext_degree).unwrap();
                    json!({
                        "ext_degree": sp.ext_degree,
                        "coords": sp.point.coords().iter().map(|v| element_json(&ext, v)).collect::<Vec<_>>(),
                    })
                })
                .collect();
            Ok(json_output(
                &manifest,
                json!({ "count": list.len(), "points": list }),
                EXIT_OK,
            ))
        }
        Command::Pointcount { curve, n, budget } => {
            let c = curve.parse()?;
            let count = curve::point_count(&c, *n, *budget)?;
            let window = theory::lang_weil_window(c.degree(), *n as u32, c.q(), None)?;
            let body = json!({
                "N": n,
                "q_N": c.ctx().extension(*n)?.order(),
                "count": count,
                "lang_weil_window": [window.0.to_string(), window.1.to_string()],
            });
            Ok(json_output(&manifest, body, EXIT_OK))
        }
        Command::Selftest { only } => {
            let names: Vec<&str> = only.iter().map(String::as_str).collect();
            let known: Vec<&str> = selftest::properties().iter().map(|p| p.name).collect();
            if let Some(bad) = names.iter().find(|n| !known.contains(n)) {
                return Err(CliError::Usage(format!("unknown property {bad}")));
            }
            let mut text = String::new();
            let mut failed = 0;
            for result in selftest::run(&names) {
                match &result.detail {
                    None => text.push_str(&format!("PASS {}\n", result.name)),
                    Some(d) => {
                        failed += 1;
                        text.push_str(&format!("FAIL {}: {d}\n", result.name));
                    }
                }
            }
            Ok(Output {
                text,
                code: if failed == 0 { EXIT_OK } else { EXIT_FLAGGED },
            })
        }
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    if let Some(t) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match run_cli(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rencontres: {e}");
            e.code()
        }
    }
}

fn run_cli(cli: &Cli) -> Result<i32, CliError> {
    let command = match (&cli.replay, &cli.command) {
        (Some(path), None) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            RunManifest::from_json(&text)?.config
        }
        (None, Some(c)) => c.clone().resolve()?,
        (Some(_), Some(_)) => return Err(CliError::Usage("--replay takes no subcommand".into())),
        (None, None) => {
            return Err(CliError::Usage(
                "a subcommand or --replay is required (see --help)".into(),
            ))
        }
    };
    let start = Instant::now();
    let mut output = execute(&command)?;
    if cli.timing && output.text.starts_with('{') {
        let mut value: Value = serde_json::from_str(&output.text).unwrap();
        value["manifest"]["duration_ms"] = json!(start.elapsed().as_millis() as u64);
        output.text = serde_json::to_string_pretty(&value).unwrap() + "\n";
    }
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &output.text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => print!("{}", output.text),
    }
    Ok(output.code)
}
