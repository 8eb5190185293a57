//! Non-parametric copula generators and the end-to-end `generate` pipeline.
//!
//! A fitted model holds a marginal CDF and a frequency table per column plus
//! the rank matrix `U` of the training rows. Sampling resamples training
//! rows, locates each rank in its column's frequency table and draws a value
//! uniformly inside the matching class interval.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::baselines::dp_histogram_generate;
use crate::copula::{dp_copula_fit, DpCopulaOptions};
use crate::dp::{budget_split_dpnpc, NoiseSource, PrivacyBudget, SeededNoise};
use crate::encoding::{decode, encode, fit_uniform_encoder, CenterRule, EncoderSpec};
use crate::error::{invalid_arg, invalid_data, Result};
use crate::marginals::{
    dp_frequency_table, dp_marginal, empirical_cdf, histogram_binned, quantize, FrequencyTable,
    StepCdf, DEFAULT_UNIQUE_CAP,
};
use crate::rng::stream;
use crate::tabular::{Column, Table};

/// Default number of frequency-table bins.
pub const DEFAULT_BINS: usize = 40;

/// Bin counts for the frequency tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BinSpec {
    /// One count for every column.
    All(usize),
    PerColumn(Vec<usize>),
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::All(DEFAULT_BINS)
    }
}

impl BinSpec {
    /// Bin count per column for a table with `p` columns.
    pub fn resolve(&self, p: usize) -> Result<Vec<usize>> {
        let bins = match self {
            BinSpec::All(t) => vec![*t; p],
            BinSpec::PerColumn(ts) if ts.len() == p => ts.clone(),
            BinSpec::PerColumn(ts) => {
                return Err(invalid_arg(format!(
                    "{} bin counts given for {p} columns",
                    ts.len()
                )));
            }
        };
        if bins.contains(&0) {
            return Err(invalid_arg("bin counts must be at least 1"));
        }
        Ok(bins)
    }
}

/// How the within-interval uniforms are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    /// A fresh uniform for every cell.
    #[default]
    PerCell,
    /// One uniform shared by all cells of a synthetic row.
    PerRow,
}

#[derive(Debug, Clone, Serialize)]
pub struct NpcModel {
    cdfs: Vec<StepCdf>,
    tables: Vec<FrequencyTable>,
    #[serde(skip)]
    u: Vec<Vec<f64>>,
    u_rows: usize,
    u_cols: usize,
    ledger: Option<PrivacyBudget>,
}

impl NpcModel {
    pub fn cdfs(&self) -> &[StepCdf] {
        &self.cdfs
    }

    pub fn tables(&self) -> &[FrequencyTable] {
        &self.tables
    }

    /// Rank matrix, one vector of `n` entries per column.
    pub fn ranks(&self) -> &[Vec<f64>] {
        &self.u
    }

    pub fn ledger(&self) -> Option<&PrivacyBudget> {
        self.ledger.as_ref()
    }

    pub fn n_rows(&self) -> usize {
        self.u_rows
    }

    pub fn n_cols(&self) -> usize {
        self.u_cols
    }

    fn from_parts(
        cdfs: Vec<StepCdf>,
        tables: Vec<FrequencyTable>,
        u: Vec<Vec<f64>>,
        ledger: Option<PrivacyBudget>,
    ) -> Self {
        let u_rows = u.first().map_or(0, Vec::len);
        let u_cols = u.len();
        Self {
            cdfs,
            tables,
            u,
            u_rows,
            u_cols,
            ledger,
        }
    }
}

fn check_columns(columns: &[Vec<f64>]) -> Result<usize> {
    let n = columns.first().map_or(0, Vec::len);
    if columns.is_empty() || n == 0 {
        return Err(invalid_data("cannot fit an empty table"));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(invalid_data("columns differ in length"));
    }
    Ok(n)
}

fn rank_column(f: &StepCdf, col: &[f64]) -> Vec<f64> {
    col.iter().map(|&x| f.eval(x)).collect()
}

/// Fit the exact model: empirical CDFs, equal-width frequency tables, ranks.
pub fn npc_fit(columns: &[Vec<f64>], bins: &BinSpec) -> Result<NpcModel> {
    check_columns(columns)?;
    let bins = bins.resolve(columns.len())?;
    let mut cdfs = Vec::with_capacity(columns.len());
    let mut tables = Vec::with_capacity(columns.len());
    let mut u = Vec::with_capacity(columns.len());
    for (col, &t) in columns.iter().zip(&bins) {
        let f = empirical_cdf(col)?;
        u.push(rank_column(&f, col));
        tables.push(histogram_binned(col, t)?);
        cdfs.push(f);
    }
    Ok(NpcModel::from_parts(cdfs, tables, u, None))
}

/// Fit the private model. Each column's marginal and frequency table are
/// perturbed by EFPA, each with `epsilon / (2p)`.
pub fn dpnpc_fit(
    columns: &[Vec<f64>],
    bins: &BinSpec,
    epsilon: f64,
    unique_cap: usize,
    noise: &mut dyn NoiseSource,
) -> Result<NpcModel> {
    check_columns(columns)?;
    let p = columns.len();
    let bins = bins.resolve(p)?;
    let share = budget_split_dpnpc(epsilon, p)?;
    let mut ledger = PrivacyBudget::new(epsilon)?;
    let mut cdfs = Vec::with_capacity(p);
    let mut tables = Vec::with_capacity(p);
    let mut u = Vec::with_capacity(p);
    for (i, (col, &t)) in columns.iter().zip(&bins).enumerate() {
        let q = quantize(col, unique_cap);
        ledger.spend(format!("dpnpc/marginal/{i}"), share)?;
        let f = dp_marginal(&q, share, noise)?;
        ledger.spend(format!("dpnpc/frequency/{i}"), share)?;
        tables.push(dp_frequency_table(col, t, share, noise)?);
        u.push(rank_column(&f, &q));
        cdfs.push(f);
    }
    Ok(NpcModel::from_parts(cdfs, tables, u, Some(ledger)))
}

/// Draw `n` synthetic rows; returns one vector per column.
pub fn npc_sample<R: Rng + ?Sized>(
    model: &NpcModel,
    n: usize,
    mode: SampleMode,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if model.u_rows == 0 || model.tables.iter().any(|t| t.n_bins() == 0) {
        return Err(invalid_data(
            "model has no rows or an empty frequency table",
        ));
    }
    let mut out = vec![Vec::with_capacity(n); model.u_cols];
    for _ in 0..n {
        let d = rng.random_range(0..model.u_rows);
        let shared: f64 = match mode {
            SampleMode::PerRow => rng.random(),
            SampleMode::PerCell => 0.0,
        };
        for (i, (table, ranks)) in model.tables.iter().zip(&model.u).enumerate() {
            let (a, b) = table.interval(table.class_of(ranks[d]));
            let v = match mode {
                SampleMode::PerCell => rng.random::<f64>(),
                SampleMode::PerRow => shared,
            };
            out[i].push((a + (b - a) * v).min(b));
        }
    }
    Ok(out)
}

/// Generator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Npc,
    Dpnpc,
    Dpcopula,
    Dphist,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Npc,
        ModelKind::Dpnpc,
        ModelKind::Dpcopula,
        ModelKind::Dphist,
    ];

    pub fn is_private(self) -> bool {
        self != ModelKind::Npc
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Npc => "npc",
            ModelKind::Dpnpc => "dpnpc",
            ModelKind::Dpcopula => "dpcopula",
            ModelKind::Dphist => "dphist",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                invalid_arg(format!(
                    "unknown model {s:?}; expected npc, dpnpc, dpcopula or dphist"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Synthetic rows to draw.
    pub n: usize,
    pub bins: BinSpec,
    /// Total budget; required by every private model.
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub sample_mode: SampleMode,
    pub center: CenterRule,
    pub copula: DpCopulaOptions,
    pub unique_cap: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            bins: BinSpec::default(),
            epsilon: None,
            seed: 0,
            sample_mode: SampleMode::default(),
            center: CenterRule::default(),
            copula: DpCopulaOptions::default(),
            unique_cap: DEFAULT_UNIQUE_CAP,
        }
    }
}

impl GenConfig {
    pub fn new(n: usize, epsilon: Option<f64>, seed: u64) -> Self {
        Self {
            n,
            epsilon,
            seed,
            ..Self::default()
        }
    }

    pub fn with_bins(mut self, bins: usize) -> Self {
        self.bins = BinSpec::All(bins);
        self
    }

    fn validate(&self, kind: ModelKind) -> Result<()> {
        if self.n == 0 {
            return Err(invalid_arg("synthetic row count must be at least 1"));
        }
        if let BinSpec::All(0) = self.bins {
            return Err(invalid_arg("bin count must be at least 1"));
        }
        match self.epsilon {
            None if kind.is_private() => Err(invalid_arg(format!("model {kind} needs an epsilon"))),
            Some(e) if !(e > 0.0 && e.is_finite()) => {
                Err(invalid_arg(format!("epsilon must be positive, got {e}")))
            }
            _ => Ok(()),
        }
    }
}

/// Output of [`generate`].
#[derive(Debug, Clone)]
pub struct Generated {
    pub table: Table,
    /// Budget charges; `None` for the non-private model.
    pub ledger: Option<PrivacyBudget>,
    /// Audit view of the fitted model and encoders.
    pub model: serde_json::Value,
}

/// Per-column categorical encoders fitted on a table (`None` for numeric columns).
pub fn fit_encoders(table: &Table) -> Result<Vec<Option<EncoderSpec>>> {
    table
        .columns()
        .iter()
        .map(|c| match c {
            Column::Numeric(_) => Ok(None),
            Column::Categorical(v) => fit_uniform_encoder(v).map(Some),
        })
        .collect()
}

/// Encode every column to numbers, drawing categorical positions from
/// per-column streams under `seed`.
pub fn encode_table(
    table: &Table,
    encoders: &[Option<EncoderSpec>],
    center: CenterRule,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    table
        .columns()
        .iter()
        .zip(encoders)
        .enumerate()
        .map(|(i, (col, enc))| match (col, enc) {
            (Column::Numeric(v), _) => Ok(v.clone()),
            (Column::Categorical(v), Some(spec)) => {
                let mut rng = stream(seed, &format!("encode/{i}"));
                encode(spec, v, center, &mut rng)
            }
            (Column::Categorical(_), None) => {
                Err(invalid_data(format!("no encoder for column {i}")))
            }
        })
        .collect()
}

fn decode_columns(
    template: &Table,
    encoders: &[Option<EncoderSpec>],
    columns: Vec<Vec<f64>>,
) -> Result<Table> {
    let cols = columns
        .into_iter()
        .zip(encoders)
        .map(|(v, enc)| match enc {
            Some(spec) => Column::Categorical(decode(spec, &v)),
            None => Column::Numeric(v),
        })
        .collect();
    Table::new(template.schema().clone(), cols)
}

/// Fit `kind` on `train` and draw `config.n` rows with the same schema,
/// using seeded noise.
pub fn generate(train: &Table, config: &GenConfig, kind: ModelKind) -> Result<Generated> {
    let mut noise = SeededNoise::new(stream(config.seed, "noise"));
    generate_with_noise(train, config, kind, &mut noise)
}

/// [`generate`] with an explicit noise source for the private mechanisms.
pub fn generate_with_noise(
    train: &Table,
    config: &GenConfig,
    kind: ModelKind,
    noise: &mut dyn NoiseSource,
) -> Result<Generated> {
    config.validate(kind)?;
    if train.n_rows() == 0 {
        return Err(crate::Error::NoRows);
    }
    let encoders = fit_encoders(train)?;
    let encoded = encode_table(train, &encoders, config.center, config.seed)?;
    let mut rng = stream(config.seed, "sample");
    let eps = config.epsilon.unwrap_or(0.0);
    let (columns, ledger, fitted) = match kind {
        ModelKind::Npc => {
            let model = npc_fit(&encoded, &config.bins)?;
            let cols = npc_sample(&model, config.n, config.sample_mode, &mut rng)?;
            (cols, None, serde_json::to_value(&model)?)
        }
        ModelKind::Dpnpc => {
            let model = dpnpc_fit(&encoded, &config.bins, eps, config.unique_cap, noise)?;
            let cols = npc_sample(&model, config.n, config.sample_mode, &mut rng)?;
            (cols, model.ledger.clone(), serde_json::to_value(&model)?)
        }
        ModelKind::Dpcopula => {
            let options = DpCopulaOptions {
                unique_cap: config.unique_cap,
                ..config.copula
            };
            let model = dp_copula_fit(&encoded, eps, &options, noise)?;
            let cols = model.sample(config.n, &mut rng)?;
            let fitted = json!({
                "marginals": model.marginals(),
                "correlation": model.correlation().to_rows(),
                "options": options,
            });
            (cols, Some(model.ledger().clone()), fitted)
        }
        ModelKind::Dphist => {
            let bins = config.bins.resolve(encoded.len())?;
            let (cols, ledger) =
                dp_histogram_generate(&encoded, eps, &bins, config.n, noise, &mut rng)?;
            (cols, Some(ledger), json!({ "bins": bins }))
        }
    };
    let table = decode_columns(train, &encoders, columns)?;
    let model = json!({
        "kind": kind,
        "config": config,
        "columns": train.schema().names().collect::<Vec<_>>(),
        "encoders": encoders,
        "fitted": fitted,
        "ledger": ledger,
    });
    Ok(Generated {
        table,
        ledger,
        model,
    })
}
