//! The `dpsynth` command line: generate, evaluate, sweep and report.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::dp::{LedgerEntry, PrivacyBudget};
use crate::error::{invalid_arg, invalid_data, Error, ErrorKind, Result};
use crate::eval::{
    avg_ks, default_attacks, privacy_risk, utility_score, AttackConfig, FidelityReport,
    LogisticConfig, RiskReport, UtilityReport, DEFAULT_ALPHA, DEFAULT_TOLERANCE,
};
use crate::npc::{generate, GenConfig, Generated, ModelKind, DEFAULT_BINS};
use crate::tabular::{load_csv, split, Schema, Split, SplitSpec, Table};

/// Environment variable that takes precedence over `--seed`.
pub const SEED_ENV: &str = "DPSYNTH_SEED";

/// Default epsilon grid of the sweep command.
pub const DEFAULT_EPSILONS: [f64; 11] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.8, 1.0, 2.0, 5.0, 10.0, 15.0];

const MAX_BINS: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "dpsynth",
    version,
    about = "Differentially private synthetic tabular data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a generator on the whole input and write a synthetic table.
    Generate(GenerateArgs),
    /// Split the input, generate from the training part and score the result.
    Evaluate(EvaluateArgs),
    /// Evaluate every combination of models, epsilons, bins and seeds.
    Sweep(SweepArgs),
    /// Summarize the report.json files found under a directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// JSON schema sidecar; inferred from the data when absent.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Master seed (overridden by DPSYNTH_SEED).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_parser = parse_model, default_value = "dpnpc")]
    pub model: ModelKind,
    /// Total privacy budget (required by private models).
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Synthetic rows; defaults to the number of training rows.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Train, control and test fractions.
    #[arg(long, default_value = "0.6,0.2,0.2")]
    pub split: String,
    /// Binary categorical column for the utility score.
    #[arg(long)]
    pub target: Option<String>,
    /// Attack targets per phase.
    #[arg(long)]
    pub attacks: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Score this synthetic CSV instead of generating one.
    #[arg(long)]
    pub synthetic: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub eval: EvalArgs,
    /// Comma-separated models.
    #[arg(long, default_value = "dpnpc")]
    pub models: String,
    /// Comma-separated epsilons; defaults to the standard 11-value grid.
    #[arg(long)]
    pub epsilons: Option<String>,
    /// Comma-separated bin counts.
    #[arg(long = "bins-list", default_value = "10,40,100")]
    pub bins_list: String,
    /// Number of seeds per grid point, counting up from the master seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Synthetic rows; defaults to the number of training rows.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory searched recursively for report.json files.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory; defaults to the input directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let items = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse()
                .map_err(|_| invalid_arg(format!("bad {what} value {p:?}")))
        })
        .collect::<Result<Vec<T>>>()?;
    if items.is_empty() {
        return Err(invalid_arg(format!("empty {what} list")));
    }
    Ok(items)
}

fn parse_split(s: &str, seed: u64) -> Result<SplitSpec> {
    match parse_list::<f64>(s, "split")?.as_slice() {
        &[a, b, c] => SplitSpec::new(a, b, c, seed),
        other => Err(invalid_arg(format!(
            "split needs three fractions, got {}",
            other.len()
        ))),
    }
}

/// `--seed`, unless DPSYNTH_SEED is set.
pub fn resolve_seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid_arg(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(flag),
    }
}

fn check_model_args(kind: ModelKind, epsilon: Option<f64>, bins: usize) -> Result<()> {
    if !(1..=MAX_BINS).contains(&bins) {
        return Err(invalid_arg(format!(
            "bins must be in [1, {MAX_BINS}], got {bins}"
        )));
    }
    match epsilon {
        None if kind.is_private() => Err(invalid_arg(format!("--model {kind} requires --epsilon"))),
        Some(e) if !(e > 0.0 && e.is_finite()) => {
            Err(invalid_arg(format!("epsilon must be positive, got {e}")))
        }
        _ => Ok(()),
    }
}

fn load_input(args: &InputArgs) -> Result<Table> {
    let schema = args.schema.as_ref().map(Schema::load).transpose()?;
    load_csv(&args.input, schema.as_ref())
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, &s)
}

/// Contents of ledger.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerFile {
    pub epsilon: Option<f64>,
    pub spent: f64,
    pub entries: Vec<LedgerEntry>,
}

impl LedgerFile {
    pub fn from_budget(budget: Option<&PrivacyBudget>) -> Self {
        match budget {
            Some(b) => Self {
                epsilon: Some(b.epsilon()),
                spent: b.spent(),
                entries: b.entries().to_vec(),
            },
            None => Self {
                epsilon: None,
                spent: 0.0,
                entries: Vec::new(),
            },
        }
    }
}

fn write_generated(out: &Path, generated: &Generated) -> Result<()> {
    generated.table.write_csv(out.join("synthetic.csv"))?;
    write_json(&out.join("model.json"), &generated.model)?;
    write_json(
        &out.join("ledger.json"),
        &LedgerFile::from_budget(generated.ledger.as_ref()),
    )
}

fn gen_config(model: &ModelArgs, rows: usize, seed: u64) -> GenConfig {
    GenConfig::new(model.n.unwrap_or(rows), model.epsilon, seed).with_bins(model.bins)
}

/// Row counts of the evaluated tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowCounts {
    pub train: usize,
    pub control: usize,
    pub test: usize,
    pub synthetic: usize,
}

/// Contents of report.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: Option<ModelKind>,
    pub epsilon: Option<f64>,
    pub bins: Option<usize>,
    pub seed: u64,
    pub rows: RowCounts,
    pub privacy: RiskReport,
    pub utility: Option<UtilityReport>,
    pub fidelity: FidelityReport,
    pub ledger: Option<LedgerFile>,
    pub runtime_seconds: BTreeMap<String, f64>,
}

impl RunReport {
    /// Named scalar metrics, in a fixed order.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        let mut m = vec![
            ("mia_success_rate", self.privacy.main_success_rate),
            ("risk_main", self.privacy.main.r),
            ("risk_main_delta", self.privacy.main.delta),
            ("risk_naive", self.privacy.naive.r),
            ("risk_control", self.privacy.control.r),
            ("risk_ratio", self.privacy.ratio),
            ("risk_ratio_raw", self.privacy.ratio_raw),
            ("avg_ks", self.fidelity.avg_ks),
        ];
        if let Some(u) = &self.utility {
            m.push(("mcc_real", u.mcc_real));
            m.push(("mcc_syn", u.mcc_syn));
        }
        m.push((
            "runtime_seconds",
            self.runtime_seconds.get("total").copied().unwrap_or(0.0),
        ));
        m
    }
}

struct Timer {
    phases: BTreeMap<String, f64>,
    start: Instant,
    last: Instant,
}

impl Timer {
    fn new() -> Self {
        let now = Instant::now();
        Self {
            phases: BTreeMap::new(),
            start: now,
            last: now,
        }
    }

    fn lap(&mut self, phase: &str) {
        let now = Instant::now();
        self.phases
            .insert(phase.to_string(), (now - self.last).as_secs_f64());
        self.last = now;
    }

    fn finish(mut self) -> BTreeMap<String, f64> {
        self.phases
            .insert("total".into(), self.start.elapsed().as_secs_f64());
        self.phases
    }
}

struct EvalPlan<'a> {
    eval: &'a EvalArgs,
    input_rows: usize,
    seed: u64,
}

/// Score `synthetic` against the split parts.
fn score(
    parts: &Split,
    synthetic: &Table,
    plan: &EvalPlan,
    timer: &mut Timer,
) -> Result<(RiskReport, Option<UtilityReport>, FidelityReport)> {
    let attacks = plan
        .eval
        .attacks
        .unwrap_or_else(|| default_attacks(plan.input_rows))
        .min(parts.train.n_rows())
        .min(parts.control.n_rows());
    let config = AttackConfig {
        attacks,
        tolerance: plan.eval.tolerance,
        alpha: plan.eval.alpha,
        k: 1,
        seed: plan.seed,
    };
    let privacy = privacy_risk(&parts.train, &parts.control, synthetic, &config)?;
    timer.lap("privacy");
    let utility = match &plan.eval.target {
        None => None,
        Some(target) => {
            let cfg = LogisticConfig {
                seed: plan.seed,
                ..LogisticConfig::default()
            };
            match utility_score(&parts.train, synthetic, &parts.test, target, &cfg) {
                Ok(u) => Some(u),
                Err(Error::SingleClass(_)) if synthetic.schema().index_of(target).is_some() => {
                    let real =
                        utility_score(&parts.train, &parts.train, &parts.test, target, &cfg)?;
                    Some(UtilityReport {
                        mcc_syn: 0.0,
                        note: Some(
                            "synthetic target holds a single class; mcc_syn set to 0".into(),
                        ),
                        ..real
                    })
                }
                Err(e) => return Err(e),
            }
        }
    };
    timer.lap("utility");
    let fidelity = avg_ks(&parts.train, synthetic)?;
    timer.lap("fidelity");
    Ok((privacy, utility, fidelity))
}

fn metrics_csv(report: &RunReport) -> String {
    let metrics = report.metrics();
    let mut header = vec!["model", "epsilon", "bins", "seed"];
    header.extend(metrics.iter().map(|(k, _)| *k));
    let mut row = vec![
        report.model.map(|m| m.to_string()).unwrap_or_default(),
        report.epsilon.map(|e| e.to_string()).unwrap_or_default(),
        report.bins.map(|b| b.to_string()).unwrap_or_default(),
        report.seed.to_string(),
    ];
    row.extend(metrics.iter().map(|(_, v)| v.to_string()));
    format!("{}\n{}\n", header.join(","), row.join(","))
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let seed = resolve_seed(args.input.seed)?;
    check_model_args(args.model.model, args.model.epsilon, args.model.bins)?;
    let table = load_input(&args.input)?;
    let generated = generate(
        &table,
        &gen_config(&args.model, table.n_rows(), seed),
        args.model.model,
    )?;
    create_dir(&args.input.out)?;
    write_generated(&args.input.out, &generated)
}

/// Split, generate (unless a synthetic table is supplied) and score one run.
fn evaluate_run(
    table: &Table,
    model: Option<&ModelArgs>,
    synthetic: Option<&Table>,
    eval: &EvalArgs,
    seed: u64,
    out: &Path,
) -> Result<RunReport> {
    let mut timer = Timer::new();
    let parts = split(table, &parse_split(&eval.split, seed)?)?;
    timer.lap("split");
    let (syn, ledger) = match (synthetic, model) {
        (Some(s), _) => (s.clone(), None),
        (None, Some(m)) => {
            let generated = generate(
                &parts.train,
                &gen_config(m, parts.train.n_rows(), seed),
                m.model,
            )?;
            create_dir(out)?;
            write_generated(out, &generated)?;
            let ledger = generated
                .ledger
                .as_ref()
                .map(|b| LedgerFile::from_budget(Some(b)));
            (generated.table, ledger)
        }
        (None, None) => return Err(invalid_arg("nothing to evaluate")),
    };
    timer.lap("generate");
    let plan = EvalPlan {
        eval,
        input_rows: table.n_rows(),
        seed,
    };
    let (privacy, utility, fidelity) = score(&parts, &syn, &plan, &mut timer)?;
    Ok(RunReport {
        model: synthetic
            .is_none()
            .then(|| model.map(|m| m.model))
            .flatten(),
        epsilon: model.and_then(|m| m.epsilon),
        bins: model.map(|m| m.bins),
        seed,
        rows: RowCounts {
            train: parts.train.n_rows(),
            control: parts.control.n_rows(),
            test: parts.test.n_rows(),
            synthetic: syn.n_rows(),
        },
        privacy,
        utility,
        fidelity,
        ledger,
        runtime_seconds: timer.finish(),
    })
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let seed = resolve_seed(args.input.seed)?;
    let table = load_input(&args.input)?;
    let synthetic = match &args.synthetic {
        Some(path) => Some(load_csv(path, Some(table.schema()))?),
        None => {
            check_model_args(args.model.model, args.model.epsilon, args.model.bins)?;
            None
        }
    };
    create_dir(&args.input.out)?;
    let report = evaluate_run(
        &table,
        Some(&args.model),
        synthetic.as_ref(),
        &args.eval,
        seed,
        &args.input.out,
    )?;
    write_json(&args.input.out.join("report.json"), &report)?;
    write_file(&args.input.out.join("metrics.csv"), &metrics_csv(&report))
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub model: ModelKind,
    pub epsilon: Option<f64>,
    pub bins: usize,
    pub seed: u64,
}

impl GridPoint {
    fn dir_name(&self) -> String {
        let eps = self
            .epsilon
            .map_or_else(|| "none".to_string(), |e| e.to_string());
        format!(
            "{}_eps{}_bins{}_seed{}",
            self.model, eps, self.bins, self.seed
        )
    }
}

/// Full factorial grid; the non-private model ignores the epsilon axis.
pub fn sweep_grid(
    models: &[ModelKind],
    epsilons: &[f64],
    bins: &[usize],
    seeds: &[u64],
) -> Vec<GridPoint> {
    let mut grid = Vec::new();
    for &model in models {
        let eps_axis: Vec<Option<f64>> = if model.is_private() {
            epsilons.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for &epsilon in &eps_axis {
            for &b in bins {
                for &seed in seeds {
                    grid.push(GridPoint {
                        model,
                        epsilon,
                        bins: b,
                        seed,
                    });
                }
            }
        }
    }
    grid
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|e| e.to_string()).unwrap_or_default()
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let base_seed = resolve_seed(args.input.seed)?;
    let models = parse_list::<String>(&args.models, "model")?
        .iter()
        .map(|m| m.parse())
        .collect::<Result<Vec<ModelKind>>>()?;
    let epsilons = match &args.epsilons {
        Some(s) => parse_list::<f64>(s, "epsilon")?,
        None => DEFAULT_EPSILONS.to_vec(),
    };
    let bins = parse_list::<usize>(&args.bins_list, "bins")?;
    if args.seeds == 0 {
        return Err(invalid_arg("--seeds must be at least 1"));
    }
    for &b in &bins {
        for &e in &epsilons {
            check_model_args(ModelKind::Dpnpc, Some(e), b)?;
        }
    }
    parse_split(&args.eval.split, base_seed)?;
    let seeds: Vec<u64> = (0..args.seeds).map(|i| base_seed.wrapping_add(i)).collect();
    let table = load_input(&args.input)?;
    let grid = sweep_grid(&models, &epsilons, &bins, &seeds);
    let runs_dir = args.input.out.join("runs");
    create_dir(&runs_dir)?;
    let reports = grid
        .par_iter()
        .map(|point| {
            let model = ModelArgs {
                model: point.model,
                epsilon: point.epsilon,
                bins: point.bins,
                n: args.n,
            };
            let dir = runs_dir.join(point.dir_name());
            let report = evaluate_run(&table, Some(&model), None, &args.eval, point.seed, &dir)?;
            write_json(&dir.join("report.json"), &report)?;
            Ok(report)
        })
        .collect::<Result<Vec<RunReport>>>()?;
    let mut csv = String::from("model,epsilon,bins,seed,metric,value\n");
    for (point, report) in grid.iter().zip(&reports) {
        for (metric, value) in report.metrics() {
            csv.push_str(&format!(
                "{},{},{},{},{metric},{value}\n",
                point.model,
                fmt_opt(point.epsilon),
                point.bins,
                point.seed
            ));
        }
    }
    write_file(&args.input.out.join("sweep.csv"), &csv)
}

fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Every parseable report.json under `dir`, in path order. Unreadable or
/// malformed files are skipped with a warning on stderr.
pub fn collect_reports(dir: &Path) -> Result<Vec<(PathBuf, RunReport)>> {
    if !dir.is_dir() {
        return Err(invalid_data(format!(
            "{} is not a directory",
            dir.display()
        )));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                eprintln!("warning: {e}");
                continue;
            }
        };
        if !entry.file_type().is_file() || entry.file_name() != "report.json" {
            continue;
        }
        let parsed = fs::read_to_string(entry.path())
            .map_err(|e| e.to_string())
            .and_then(|s| serde_json::from_str::<RunReport>(&s).map_err(|e| e.to_string()));
        match parsed {
            Ok(r) => out.push((entry.path().to_path_buf(), r)),
            Err(e) => eprintln!("warning: skipping {}: {e}", entry.path().display()),
        }
    }
    Ok(out)
}

const SUMMARY_METRICS: [&str; 6] = [
    "mia_success_rate",
    "risk_ratio",
    "mcc_real",
    "mcc_syn",
    "avg_ks",
    "runtime_seconds",
];

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let reports = collect_reports(&args.input)?;
    if reports.is_empty() {
        return Err(invalid_data(format!(
            "no report.json files under {}",
            args.input.display()
        )));
    }
    let out = args.out.clone().unwrap_or_else(|| args.input.clone());
    create_dir(&out)?;

    type Key = (String, String);
    let mut by_eps: BTreeMap<Key, Vec<&RunReport>> = BTreeMap::new();
    let mut by_bins: BTreeMap<(String, String, String), Vec<&RunReport>> = BTreeMap::new();
    for (_, r) in &reports {
        let model = r
            .model
            .map(|m| m.to_string())
            .unwrap_or_else(|| "external".into());
        let eps = fmt_opt(r.epsilon);
        let bins = r.bins.map(|b| b.to_string()).unwrap_or_default();
        by_eps
            .entry((model.clone(), eps.clone()))
            .or_default()
            .push(r);
        by_bins.entry((model, eps, bins)).or_default().push(r);
    }
    let sort_eps = |a: &str, b: &str| {
        let (x, y) = (
            a.parse::<f64>().unwrap_or(-1.0),
            b.parse::<f64>().unwrap_or(-1.0),
        );
        x.total_cmp(&y)
    };

    let mut header = vec!["model".to_string(), "epsilon".into(), "runs".into()];
    for m in SUMMARY_METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_ci95"));
    }
    let mut summary = header.join(",") + "\n";
    let mut groups: Vec<(&Key, &Vec<&RunReport>)> = by_eps.iter().collect();
    groups.sort_by(|a, b| a.0 .0.cmp(&b.0 .0).then(sort_eps(&a.0 .1, &b.0 .1)));
    for ((model, eps), runs) in groups {
        let mut row = vec![model.clone(), eps.clone(), runs.len().to_string()];
        for metric in SUMMARY_METRICS {
            let values: Vec<f64> = runs
                .iter()
                .filter_map(|r| {
                    r.metrics()
                        .into_iter()
                        .find(|(k, _)| *k == metric)
                        .map(|(_, v)| v)
                })
                .collect();
            if values.is_empty() {
                row.extend([String::new(), String::new()]);
            } else {
                let (mean, ci) = mean_ci(&values);
                row.extend([mean.to_string(), ci.to_string()]);
            }
        }
        summary += &(row.join(",") + "\n");
    }
    write_file(&out.join("summary.csv"), &summary)?;

    let mut plot = String::from("model,epsilon,bins,runs,mia_success_rate,avg_ks\n");
    let mut cells: Vec<_> = by_bins.iter().collect();
    cells.sort_by(|a, b| {
        let (ka, kb) = (a.0, b.0);
        ka.0.cmp(&kb.0).then(sort_eps(&ka.1, &kb.1)).then(
            ka.2.parse::<usize>()
                .unwrap_or(0)
                .cmp(&kb.2.parse::<usize>().unwrap_or(0)),
        )
    });
    for ((model, eps, bins), runs) in cells {
        let mia: Vec<f64> = runs.iter().map(|r| r.privacy.main_success_rate).collect();
        let ks: Vec<f64> = runs.iter().map(|r| r.fidelity.avg_ks).collect();
        plot += &format!(
            "{model},{eps},{bins},{},{},{}\n",
            runs.len(),
            mean_ci(&mia).0,
            mean_ci(&ks).0
        );
    }
    write_file(&out.join("plot_bins.csv"), &plot)
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data | ErrorKind::Io => 3,
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let jobs = match &cli.command {
        Command::Generate(a) => a.input.jobs,
        Command::Evaluate(a) => a.input.jobs,
        Command::Sweep(a) => a.input.jobs,
        Command::Report(_) => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| invalid_arg(format!("cannot start worker threads: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
    })
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
