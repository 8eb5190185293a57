//! Evaluation of a synthetic table against the real data it imitates:
//! membership-inference risk, classifier utility and marginal fidelity.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::encoding::{fit_uniform_encoder, EncoderSpec};
use crate::error::{invalid_arg, invalid_data, Error, Result};
use crate::rng::stream;
use crate::tabular::{Column, ColumnKind, Schema, Table};

/// Default Gower tolerance under which an attack counts as a hit.
pub const DEFAULT_TOLERANCE: f64 = 0.10;
/// Default confidence level of the risk intervals.
pub const DEFAULT_ALPHA: f64 = 0.95;

/// Number of attack targets for an input of `n_rows` records.
pub fn default_attacks(n_rows: usize) -> usize {
    if n_rows >= 100_000 {
        1000
    } else {
        250
    }
}

fn check_schemas(a: &Schema, b: &Schema) -> Result<()> {
    let same = a.len() == b.len()
        && a.columns()
            .iter()
            .zip(b.columns())
            .all(|(x, y)| x.name == y.name && x.kind() == y.kind());
    if same {
        Ok(())
    } else {
        Err(Error::SchemaMismatch(
            "tables have different columns".into(),
        ))
    }
}

/// One cell of a mixed record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<'a> {
    Num(f64),
    Cat(&'a str),
}

/// Row `row` of `table` as cells.
pub fn record(table: &Table, row: usize) -> Vec<Cell<'_>> {
    table
        .columns()
        .iter()
        .map(|c| match c {
            Column::Numeric(v) => Cell::Num(v[row]),
            Column::Categorical(v) => Cell::Cat(&v[row]),
        })
        .collect()
}

/// Gower distance: mean over columns of the range-scaled absolute
/// difference (numeric) or the mismatch indicator (categorical).
/// A numeric column with zero range contributes 0.
pub fn gower(a: &[Cell], b: &[Cell], schema: &Schema, ranges: &[f64]) -> Result<f64> {
    let p = schema.len();
    if a.len() != p || b.len() != p || ranges.len() != p {
        return Err(Error::SchemaMismatch(
            "record length differs from schema".into(),
        ));
    }
    let mut total = 0.0;
    for ((x, y), (spec, &range)) in a.iter().zip(b).zip(schema.columns().iter().zip(ranges)) {
        total += match (spec.kind(), x, y) {
            (ColumnKind::Numeric, Cell::Num(x), Cell::Num(y)) => {
                if range > 0.0 {
                    ((x - y).abs() / range).min(1.0)
                } else {
                    0.0
                }
            }
            (ColumnKind::Categorical, Cell::Cat(x), Cell::Cat(y)) => f64::from(u8::from(x != y)),
            _ => {
                return Err(Error::SchemaMismatch(format!(
                    "cell kind differs in column {:?}",
                    spec.name
                )))
            }
        };
    }
    Ok(total / p as f64)
}

#[derive(Debug, Clone)]
enum GowerColumn {
    Numeric { range: f64 },
    Categorical { ids: HashMap<String, f64> },
}

/// Shared coordinate system for Gower distances between several tables:
/// numeric ranges span all of them and categorical labels become ids.
#[derive(Debug, Clone)]
pub struct GowerSpace {
    schema: Schema,
    columns: Vec<GowerColumn>,
}

/// Rows of a table laid out for fast Gower scans.
#[derive(Debug, Clone)]
pub struct Embedded {
    p: usize,
    data: Vec<f64>,
}

impl Embedded {
    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.p).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }
}

impl GowerSpace {
    pub fn fit(tables: &[&Table]) -> Result<Self> {
        let first = tables.first().ok_or_else(|| invalid_arg("no tables"))?;
        for t in &tables[1..] {
            check_schemas(first.schema(), t.schema())?;
        }
        let columns = (0..first.n_cols())
            .map(|i| match first.column(i) {
                Column::Numeric(_) => {
                    let (lo, hi) = tables
                        .iter()
                        .flat_map(|t| t.column(i).as_numeric().unwrap_or_default())
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                            (lo.min(v), hi.max(v))
                        });
                    GowerColumn::Numeric {
                        range: if hi > lo { hi - lo } else { 0.0 },
                    }
                }
                Column::Categorical(_) => {
                    let labels: BTreeSet<&str> = tables
                        .iter()
                        .flat_map(|t| t.column(i).as_categorical().unwrap_or_default())
                        .map(String::as_str)
                        .collect();
                    let ids = labels
                        .into_iter()
                        .enumerate()
                        .map(|(k, l)| (l.to_string(), k as f64))
                        .collect();
                    GowerColumn::Categorical { ids }
                }
            })
            .collect();
        Ok(Self {
            schema: first.schema().clone(),
            columns,
        })
    }

    /// Numeric ranges, 0 for categorical columns.
    pub fn ranges(&self) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| match c {
                GowerColumn::Numeric { range } => *range,
                GowerColumn::Categorical { .. } => 0.0,
            })
            .collect()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn embed(&self, table: &Table) -> Result<Embedded> {
        check_schemas(&self.schema, table.schema())?;
        let p = self.columns.len();
        let n = table.n_rows();
        let mut data = vec![0.0; n * p];
        for (i, (col, space)) in table.columns().iter().zip(&self.columns).enumerate() {
            match (col, space) {
                (Column::Numeric(v), GowerColumn::Numeric { .. }) => {
                    for (r, &x) in v.iter().enumerate() {
                        data[r * p + i] = x;
                    }
                }
                (Column::Categorical(v), GowerColumn::Categorical { ids }) => {
                    for (r, label) in v.iter().enumerate() {
                        data[r * p + i] =
                            *ids.get(label).ok_or_else(|| Error::UnknownCategory {
                                column: self.schema.columns()[i].name.clone(),
                                label: label.clone(),
                            })?;
                    }
                }
                _ => return Err(Error::SchemaMismatch("column kind changed".into())),
            }
        }
        Ok(Embedded { p, data })
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((x, y), col) in a.iter().zip(b).zip(&self.columns) {
            total += match col {
                GowerColumn::Numeric { range } if *range > 0.0 => ((x - y).abs() / range).min(1.0),
                GowerColumn::Numeric { .. } => 0.0,
                GowerColumn::Categorical { .. } => f64::from(u8::from(x != y)),
            };
        }
        total / self.columns.len() as f64
    }

    /// Distances from `target` to its `k` closest rows of `pool`, ascending.
    pub fn nearest(&self, target: &[f64], pool: &Embedded, k: usize) -> Vec<f64> {
        let mut best: Vec<f64> = Vec::with_capacity(k + 1);
        for j in 0..pool.n_rows() {
            let d = self.distance(target, pool.row(j));
            if best.len() < k || d < best[best.len() - 1] {
                let at = best.partition_point(|&b| b <= d);
                best.insert(at, d);
                best.truncate(k);
            }
        }
        best
    }
}

/// Per-target hits of one attack phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub hits: Vec<bool>,
}

impl AttackOutcome {
    pub fn attempts(&self) -> usize {
        self.hits.len()
    }

    pub fn successes(&self) -> usize {
        self.hits.iter().filter(|&&h| h).count()
    }

    pub fn rate(&self) -> f64 {
        self.successes() as f64 / self.attempts().max(1) as f64
    }
}

fn check_attack_inputs(synthetic: &Table, tolerance: f64) -> Result<()> {
    if synthetic.n_rows() == 0 {
        return Err(invalid_data("synthetic table is empty"));
    }
    if !(0.0..=1.0).contains(&tolerance) {
        return Err(invalid_arg(format!("tolerance {tolerance} outside [0, 1]")));
    }
    Ok(())
}

/// Nearest-neighbour attack: a target is hit when the closest of its `k`
/// nearest synthetic records lies strictly within `tolerance`.
pub fn mia_attack(
    space: &GowerSpace,
    targets: &Table,
    synthetic: &Table,
    tolerance: f64,
    k: usize,
) -> Result<AttackOutcome> {
    check_attack_inputs(synthetic, tolerance)?;
    if k == 0 {
        return Err(invalid_arg("k must be at least 1"));
    }
    let t = space.embed(targets)?;
    let s = space.embed(synthetic)?;
    let hits = (0..t.n_rows())
        .into_par_iter()
        .map(|i| space.nearest(t.row(i), &s, k)[0] < tolerance)
        .collect();
    Ok(AttackOutcome { hits })
}

/// Baseline attack: each target is compared with one synthetic record drawn at random.
pub fn naive_attack<R: Rng + ?Sized>(
    space: &GowerSpace,
    targets: &Table,
    synthetic: &Table,
    tolerance: f64,
    rng: &mut R,
) -> Result<AttackOutcome> {
    check_attack_inputs(synthetic, tolerance)?;
    let t = space.embed(targets)?;
    let s = space.embed(synthetic)?;
    let hits = (0..t.n_rows())
        .map(|i| space.distance(t.row(i), s.row(rng.random_range(0..s.n_rows()))) < tolerance)
        .collect();
    Ok(AttackOutcome { hits })
}

/// Two-sided standard-normal quantile for confidence level `alpha`.
pub fn z_score(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid_arg(format!(
            "confidence level {alpha} outside (0, 1)"
        )));
    }
    Ok(Normal::standard().inverse_cdf(1.0 - (1.0 - alpha) / 2.0))
}

/// Attack success rate with its Wilson half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskInterval {
    pub r: f64,
    pub delta: f64,
}

/// Wilson score center and half-width for `successes` out of `attempts`.
pub fn wilson_risk(successes: usize, attempts: usize, alpha: f64) -> Result<RiskInterval> {
    if attempts == 0 {
        return Err(invalid_arg("no attacks were made"));
    }
    if successes > attempts {
        return Err(invalid_arg(format!(
            "{successes} successes out of {attempts} attempts"
        )));
    }
    let z = z_score(alpha)?;
    let (ns, na, z2) = (successes as f64, attempts as f64, z * z);
    let r = (ns + z2 / 2.0) / (na + z2);
    let delta = z / (na + z2) * (ns * (na - ns) / na + z2 / 4.0).sqrt();
    Ok(RiskInterval { r, delta })
}

/// Risk of the three attack phases and the excess-risk ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub main: RiskInterval,
    pub naive: RiskInterval,
    pub control: RiskInterval,
    /// Excess risk clamped to [0, 1].
    #[serde(rename = "R")]
    pub ratio: f64,
    /// Unclamped excess risk.
    #[serde(rename = "R_raw")]
    pub ratio_raw: f64,
    /// Set when the control rate is 1 and the ratio is undefined.
    pub ratio_undefined: bool,
    /// The main attack beat the naive baseline.
    pub attack_successful: bool,
    pub main_success_rate: f64,
    pub alpha: f64,
    pub tolerance: f64,
    pub attacks: usize,
}

/// `(r_train - r_control) / (1 - r_control)`, raw and clamped to [0, 1],
/// plus whether it is undefined (then reported as 1).
pub fn risk_ratio(r_train: f64, r_control: f64) -> (f64, f64, bool) {
    if r_control >= 1.0 {
        return (1.0, 1.0, true);
    }
    let raw = (r_train - r_control) / (1.0 - r_control);
    (raw, raw.clamp(0.0, 1.0), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub attacks: usize,
    pub tolerance: f64,
    pub alpha: f64,
    pub k: usize,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            attacks: 250,
            tolerance: DEFAULT_TOLERANCE,
            alpha: DEFAULT_ALPHA,
            k: 1,
            seed: 0,
        }
    }
}

/// Run the main, naive and control attacks and quantify their risk.
///
/// Targets are drawn without replacement from `train` (main and naive
/// phases) and from `control`.
pub fn privacy_risk(
    train: &Table,
    control: &Table,
    synthetic: &Table,
    config: &AttackConfig,
) -> Result<RiskReport> {
    let n_a = config.attacks;
    if n_a == 0 {
        return Err(invalid_arg("attack count must be at least 1"));
    }
    if n_a > train.n_rows().min(control.n_rows()) {
        return Err(invalid_arg(format!(
            "{n_a} attacks exceed the train ({}) or control ({}) rows",
            train.n_rows(),
            control.n_rows()
        )));
    }
    let space = GowerSpace::fit(&[train, control, synthetic])?;
    let pick = |t: &Table, label: &str| {
        let mut idx = sample(&mut stream(config.seed, label), t.n_rows(), n_a).into_vec();
        idx.sort_unstable();
        t.select_rows(&idx)
    };
    let main_targets = pick(train, "attack/main");
    let control_targets = pick(control, "attack/control");
    let main = mia_attack(&space, &main_targets, synthetic, config.tolerance, config.k)?;
    let naive = naive_attack(
        &space,
        &main_targets,
        synthetic,
        config.tolerance,
        &mut stream(config.seed, "attack/naive"),
    )?;
    let control_hits = mia_attack(
        &space,
        &control_targets,
        synthetic,
        config.tolerance,
        config.k,
    )?;
    let main_r = wilson_risk(main.successes(), n_a, config.alpha)?;
    let naive_r = wilson_risk(naive.successes(), n_a, config.alpha)?;
    let control_r = wilson_risk(control_hits.successes(), n_a, config.alpha)?;
    let (raw, clamped, undefined) = risk_ratio(main_r.r, control_r.r);
    Ok(RiskReport {
        main: main_r,
        naive: naive_r,
        control: control_r,
        ratio: clamped,
        ratio_raw: raw,
        ratio_undefined: undefined,
        attack_successful: naive_r.r < main_r.r,
        main_success_rate: main.rate(),
        alpha: config.alpha,
        tolerance: config.tolerance,
        attacks: n_a,
    })
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid_data("KS distance needs two non-empty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as i128, b.len() as i128);
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: i128 = 0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as i128 * nb - j as i128 * na).abs());
    }
    Ok(best as f64 / (na * nb) as f64)
}

/// Mean and per-column KS distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub avg_ks: f64,
    pub per_column: BTreeMap<String, f64>,
}

/// Map a categorical column to the midpoints of its encoder intervals;
/// labels the encoder has not seen map to `unknown`.
fn midpoints(spec: &EncoderSpec, labels: &[String], unknown: f64) -> Vec<f64> {
    labels
        .iter()
        .map(|l| spec.midpoint(l).unwrap_or(unknown))
        .collect()
}

/// Average per-column KS distance. Categorical columns are compared on the
/// interval midpoints of a uniform encoder fitted on `real`.
pub fn avg_ks(real: &Table, synthetic: &Table) -> Result<FidelityReport> {
    check_schemas(real.schema(), synthetic.schema())?;
    let mut per_column = BTreeMap::new();
    let mut total = 0.0;
    for (i, spec) in real.schema().columns().iter().enumerate() {
        let d = match (real.column(i), synthetic.column(i)) {
            (Column::Numeric(a), Column::Numeric(b)) => ks_distance(a, b)?,
            (Column::Categorical(a), Column::Categorical(b)) => {
                let enc = fit_uniform_encoder(a)?;
                ks_distance(&midpoints(&enc, a, 1.0), &midpoints(&enc, b, 1.0))?
            }
            _ => {
                return Err(Error::SchemaMismatch(format!(
                    "column {:?} kind differs",
                    spec.name
                )))
            }
        };
        total += d;
        per_column.insert(spec.name.clone(), d);
    }
    Ok(FidelityReport {
        avg_ks: total / real.n_cols() as f64,
        per_column,
    })
}

/// Matthews correlation coefficient of a confusion matrix; 0 when any
/// marginal is empty.
pub fn mcc(tp: u64, tn: u64, fp: u64, fn_: u64) -> Result<f64> {
    if tp + tn + fp + fn_ == 0 {
        return Err(invalid_arg("empty confusion matrix"));
    }
    let (tp, tn, fp, fn_) = (tp as f64, tn as f64, fp as f64, fn_ as f64);
    let denom = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(((tp * tn - fp * fn_) / denom).clamp(-1.0, 1.0))
}

/// A binary classifier over numeric feature vectors.
pub trait Classifier {
    fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<()>;
    fn predict(&self, features: &[f64]) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.1,
            batch_size: 32,
            l2: 1e-4,
            seed: 0,
        }
    }
}

/// Logistic regression trained by shuffled mini-batch gradient descent.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    config: LogisticConfig,
    weights: Vec<f64>,
    bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LogisticRegression {
    pub fn new(config: LogisticConfig) -> Self {
        Self {
            config,
            weights: Vec::new(),
            bias: 0.0,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

impl Classifier for LogisticRegression {
    fn fit(&mut self, features: &[Vec<f64>], labels: &[bool]) -> Result<()> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(invalid_data(
                "classifier needs as many labels as feature rows",
            ));
        }
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            return Err(invalid_data("labels hold a single class"));
        }
        let d = features[0].len();
        let c = self.config;
        if c.batch_size == 0 || c.epochs == 0 {
            return Err(invalid_arg("batch size and epochs must be at least 1"));
        }
        self.weights = vec![0.0; d];
        self.bias = 0.0;
        let mut order: Vec<usize> = (0..features.len()).collect();
        let mut rng = stream(c.seed, "classifier");
        let mut grad = vec![0.0; d];
        for _ in 0..c.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(c.batch_size) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let mut grad_b = 0.0;
                for &i in batch {
                    let err = sigmoid(self.logit(&features[i])) - f64::from(u8::from(labels[i]));
                    for (g, x) in grad.iter_mut().zip(&features[i]) {
                        *g += err * x;
                    }
                    grad_b += err;
                }
                let m = batch.len() as f64;
                for (w, g) in self.weights.iter_mut().zip(&grad) {
                    *w -= c.learning_rate * (g / m + c.l2 * *w);
                }
                self.bias -= c.learning_rate * grad_b / m;
            }
        }
        Ok(())
    }

    fn predict(&self, features: &[f64]) -> bool {
        self.logit(features) > 0.0
    }
}

/// Turns table rows (minus the target) into standardized feature vectors.
///
/// Categorical columns map to the midpoint of their uniform-encoder
/// interval; labels missing from the fitting table map to 0.5.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    target: usize,
    encoders: Vec<Option<EncoderSpec>>,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl FeatureMap {
    pub fn fit(table: &Table, target: usize) -> Result<Self> {
        let encoders = table
            .columns()
            .iter()
            .map(|c| match c {
                Column::Categorical(v) => fit_uniform_encoder(v).map(Some),
                Column::Numeric(_) => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut map = Self {
            target,
            encoders,
            mean: Vec::new(),
            scale: Vec::new(),
        };
        let raw = map.raw(table);
        let n = table.n_rows() as f64;
        map.mean = raw.iter().map(|c| c.iter().sum::<f64>() / n).collect();
        map.scale = raw
            .iter()
            .zip(&map.mean)
            .map(|(c, m)| {
                let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(map)
    }

    fn raw(&self, table: &Table) -> Vec<Vec<f64>> {
        table
            .columns()
            .iter()
            .zip(&self.encoders)
            .enumerate()
            .filter(|(i, _)| *i != self.target)
            .map(|(_, (col, enc))| match (col, enc) {
                (Column::Numeric(v), _) => v.clone(),
                (Column::Categorical(v), Some(spec)) => midpoints(spec, v, 0.5),
                (Column::Categorical(v), None) => vec![0.5; v.len()],
            })
            .collect()
    }

    /// Row-major standardized features of `table`.
    pub fn transform(&self, table: &Table) -> Vec<Vec<f64>> {
        let raw = self.raw(table);
        (0..table.n_rows())
            .map(|r| {
                raw.iter()
                    .zip(self.mean.iter().zip(&self.scale))
                    .map(|(c, (m, s))| (c[r] - m) / s)
                    .collect()
            })
            .collect()
    }
}

/// Index of the target column and its positive label (the larger of the two
/// labels in sort order).
pub fn binary_target(schema: &Schema, target: &str) -> Result<(usize, String)> {
    let idx = schema
        .index_of(target)
        .ok_or_else(|| invalid_arg(format!("target column {target:?} not found")))?;
    let cats = schema.columns()[idx]
        .categories()
        .ok_or_else(|| invalid_arg(format!("target column {target:?} is not categorical")))?;
    let sorted: BTreeSet<&String> = cats.iter().collect();
    match sorted.len() {
        2 => Ok((idx, sorted.into_iter().next_back().unwrap().clone())),
        1 => Err(Error::SingleClass(target.to_string())),
        k => Err(invalid_arg(format!(
            "target column {target:?} has {k} classes, expected 2"
        ))),
    }
}

fn labels(table: &Table, idx: usize, positive: &str) -> Vec<bool> {
    table
        .column(idx)
        .as_categorical()
        .unwrap_or_default()
        .iter()
        .map(|l| l == positive)
        .collect()
}

/// A classifier trained on `train` together with its feature map.
pub struct TrainedClassifier<C> {
    pub features: FeatureMap,
    pub model: C,
    target: usize,
    positive: String,
}

impl<C: Classifier> TrainedClassifier<C> {
    pub fn predict_table(&self, table: &Table) -> Vec<bool> {
        self.features
            .transform(table)
            .iter()
            .map(|x| self.model.predict(x))
            .collect()
    }

    /// MCC of the predictions on a labelled table.
    pub fn score(&self, table: &Table) -> Result<f64> {
        let truth = labels(table, self.target, &self.positive);
        let pred = self.predict_table(table);
        let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
        for (t, p) in truth.iter().zip(&pred) {
            match (t, p) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
            }
        }
        mcc(tp, tn, fp, fn_)
    }
}

/// Fit `model` to predict `target` from the other columns of `train`.
pub fn train_classifier<C: Classifier>(
    train: &Table,
    target: &str,
    mut model: C,
) -> Result<TrainedClassifier<C>> {
    let (idx, positive) = binary_target(train.schema(), target)?;
    let y = labels(train, idx, &positive);
    if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(Error::SingleClass(target.to_string()));
    }
    let features = FeatureMap::fit(train, idx)?;
    model.fit(&features.transform(train), &y)?;
    Ok(TrainedClassifier {
        features,
        model,
        target: idx,
        positive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub target: String,
    pub mcc_real: f64,
    pub mcc_syn: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// MCC on `test` of logistic-regression classifiers trained on the real
/// training data and on the synthetic data.
pub fn utility_score(
    real_train: &Table,
    synthetic: &Table,
    test: &Table,
    target: &str,
    config: &LogisticConfig,
) -> Result<UtilityReport> {
    check_schemas(real_train.schema(), synthetic.schema())?;
    check_schemas(real_train.schema(), test.schema())?;
    let real = train_classifier(real_train, target, LogisticRegression::new(*config))?;
    let syn = train_classifier(synthetic, target, LogisticRegression::new(*config))?;
    Ok(UtilityReport {
        target: target.to_string(),
        mcc_real: real.score(test)?,
        mcc_syn: syn.score(test)?,
        note: None,
    })
}
