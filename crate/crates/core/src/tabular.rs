//! Column-oriented mixed tables, CSV ingestion and row splitting.

use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_data, Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnType {
    Numeric { min: f64, max: f64 },
    Categorical { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub name: String,
    pub ty: ColumnType,
}

impl ColumnSpec {
    pub fn numeric(name: impl Into<String>, min: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            ty: ColumnType::Numeric { min, max },
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            ty: ColumnType::Categorical {
                categories: categories.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self.ty {
            ColumnType::Numeric { .. } => ColumnKind::Numeric,
            ColumnType::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    pub fn categories(&self) -> Option<&[String]> {
        match &self.ty {
            ColumnType::Categorical { categories } => Some(categories),
            ColumnType::Numeric { .. } => None,
        }
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        match self.ty {
            ColumnType::Numeric { min, max } => Some((min, max)),
            ColumnType::Categorical { .. } => None,
        }
    }
}

/// Ordered column descriptors with unique names.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    columns: Vec<ColumnSpecFile>,
}

#[derive(Serialize, Deserialize)]
struct ColumnSpecFile {
    name: String,
    kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        if columns.is_empty() {
            return Err(invalid_data("schema has zero columns"));
        }
        let mut seen = HashSet::new();
        for col in &columns {
            if !seen.insert(col.name.as_str()) {
                return Err(invalid_data(format!(
                    "duplicate column name {:?}",
                    col.name
                )));
            }
            match &col.ty {
                ColumnType::Numeric { min, max } => {
                    if !(min.is_finite() && max.is_finite() && min <= max) {
                        return Err(invalid_data(format!(
                            "column {:?}: invalid numeric range [{min}, {max}]",
                            col.name
                        )));
                    }
                }
                ColumnType::Categorical { categories } => {
                    if categories.is_empty() {
                        return Err(invalid_data(format!(
                            "column {:?}: empty category set",
                            col.name
                        )));
                    }
                    let distinct: HashSet<_> = categories.iter().collect();
                    if distinct.len() != categories.len() {
                        return Err(invalid_data(format!(
                            "column {:?}: duplicate categories",
                            col.name
                        )));
                    }
                }
            }
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: SchemaFile = serde_json::from_str(s)?;
        let columns = file
            .columns
            .into_iter()
            .map(|c| {
                let ty = match c.kind {
                    ColumnKind::Numeric => match (c.min, c.max) {
                        (Some(min), Some(max)) => ColumnType::Numeric { min, max },
                        _ => {
                            return Err(invalid_data(format!(
                                "numeric column {:?} needs min and max",
                                c.name
                            )))
                        }
                    },
                    ColumnKind::Categorical => ColumnType::Categorical {
                        categories: c.categories.ok_or_else(|| {
                            invalid_data(format!(
                                "categorical column {:?} needs categories",
                                c.name
                            ))
                        })?,
                    },
                };
                Ok(ColumnSpec { name: c.name, ty })
            })
            .collect::<Result<Vec<_>>>()?;
        Schema::new(columns)
    }

    pub fn to_json_string(&self) -> String {
        let file = SchemaFile {
            columns: self
                .columns
                .iter()
                .map(|c| match &c.ty {
                    ColumnType::Numeric { min, max } => ColumnSpecFile {
                        name: c.name.clone(),
                        kind: ColumnKind::Numeric,
                        categories: None,
                        min: Some(*min),
                        max: Some(*max),
                    },
                    ColumnType::Categorical { categories } => ColumnSpecFile {
                        name: c.name.clone(),
                        kind: ColumnKind::Categorical,
                        categories: Some(categories.clone()),
                        min: None,
                        max: None,
                    },
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("schema serialization is infallible")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            Column::Numeric(_) => ColumnKind::Numeric,
            Column::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn as_numeric(&self) -> Option<&[f64]> {
        match self {
            Column::Numeric(v) => Some(v),
            Column::Categorical(_) => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&[String]> {
        match self {
            Column::Categorical(v) => Some(v),
            Column::Numeric(_) => None,
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        match self {
            Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Column::Categorical(v) => {
                Column::Categorical(rows.iter().map(|&r| v[r].clone()).collect())
            }
        }
    }

    fn cell_text(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => v[row].to_string(),
            Column::Categorical(v) => v[row].clone(),
        }
    }
}

/// A validated, immutable mixed-type table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    schema: Schema,
    columns: Vec<Column>,
}

impl Table {
    pub fn new(schema: Schema, columns: Vec<Column>) -> Result<Self> {
        if columns.len() != schema.len() {
            return Err(Error::SchemaMismatch(format!(
                "schema has {} columns, got {}",
                schema.len(),
                columns.len()
            )));
        }
        let n = columns[0].len();
        for (spec, col) in schema.columns().iter().zip(&columns) {
            if col.len() != n {
                return Err(invalid_data(format!(
                    "column {:?} has {} rows, expected {n}",
                    spec.name,
                    col.len()
                )));
            }
            if spec.kind() != col.kind() {
                return Err(Error::SchemaMismatch(format!(
                    "column {:?} kind mismatch",
                    spec.name
                )));
            }
            match col {
                Column::Numeric(values) => {
                    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                        return Err(invalid_data(format!(
                            "column {:?} holds non-finite value {v}",
                            spec.name
                        )));
                    }
                }
                Column::Categorical(values) => {
                    let known: HashSet<&str> = spec
                        .categories()
                        .unwrap_or_default()
                        .iter()
                        .map(String::as_str)
                        .collect();
                    if let Some(label) = values.iter().find(|l| !known.contains(l.as_str())) {
                        return Err(Error::UnknownCategory {
                            column: spec.name.clone(),
                            label: label.clone(),
                        });
                    }
                }
            }
        }
        Ok(Self { schema, columns })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &Column {
        &self.columns[index]
    }

    pub fn column_by_name(&self, name: &str) -> Option<&Column> {
        self.schema.index_of(name).map(|i| &self.columns[i])
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    /// New table with the given rows (in order, repeats allowed) and the same schema.
    pub fn select_rows(&self, rows: &[usize]) -> Table {
        Table {
            schema: self.schema.clone(),
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
        }
    }

    /// Same data under a different schema of matching shape.
    pub fn with_schema(self, schema: Schema) -> Result<Table> {
        Table::new(schema, self.columns)
    }

    pub fn row_strings(&self, row: usize) -> Vec<String> {
        self.columns.iter().map(|c| c.cell_text(row)).collect()
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.names())?;
        for row in 0..self.n_rows() {
            w.write_record(self.row_strings(row))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }
}

/// Cell markers treated as missing (compared case-insensitively after trimming).
pub const MISSING_MARKERS: [&str; 3] = ["", "na", "nan"];

pub fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    MISSING_MARKERS.iter().any(|m| t.eq_ignore_ascii_case(m))
}

/// Untyped columns straight from a CSV file; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    names: Vec<String>,
    columns: Vec<Vec<Option<String>>>,
}

impl RawTable {
    pub fn new(names: Vec<String>, columns: Vec<Vec<Option<String>>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(invalid_data("header and column count differ"));
        }
        if let Some(first) = columns.first() {
            if columns.iter().any(|c| c.len() != first.len()) {
                return Err(invalid_data("ragged columns"));
            }
        }
        Ok(Self { names, columns })
    }

    /// Build from rows of text cells, applying the missing-marker rule.
    pub fn from_rows(names: Vec<String>, rows: &[Vec<&str>]) -> Result<Self> {
        let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != names.len() {
                return Err(invalid_data(format!(
                    "ragged row {}: {} cells, expected {}",
                    i + 1,
                    row.len(),
                    names.len()
                )));
            }
            for (col, cell) in columns.iter_mut().zip(row) {
                col.push((!is_missing(cell)).then(|| cell.to_string()));
            }
        }
        Self::new(names, columns)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let names: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut columns: Vec<Vec<Option<String>>> = vec![Vec::new(); names.len()];
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| match e.kind() {
                csv::ErrorKind::UnequalLengths { .. } => {
                    invalid_data(format!("ragged row {}", i + 1))
                }
                _ => Error::Csv(e),
            })?;
            for (col, cell) in columns.iter_mut().zip(record.iter()) {
                col.push((!is_missing(cell)).then(|| cell.to_string()));
            }
        }
        Self::new(names, columns)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<Option<String>>] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Infer column kinds: numeric iff every present cell parses as a finite real.
pub fn infer_schema(raw: &RawTable) -> Result<Schema> {
    if raw.names.is_empty() {
        return Err(invalid_data("zero columns"));
    }
    let mut specs = Vec::with_capacity(raw.names.len());
    for (name, col) in raw.names.iter().zip(&raw.columns) {
        let present: Vec<&str> = col.iter().flatten().map(String::as_str).collect();
        if present.is_empty() {
            return Err(invalid_data(format!("column {name:?} has no values")));
        }
        let parsed: Option<Vec<f64>> = present.iter().map(|c| parse_finite(c)).collect();
        let spec = match parsed {
            Some(values) => {
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                ColumnSpec::numeric(name.clone(), min, max)
            }
            None => {
                let labels: BTreeSet<&str> = present.into_iter().collect();
                ColumnSpec::categorical(name.clone(), labels)
            }
        };
        specs.push(spec);
    }
    Schema::new(specs)
}

/// Remove every row with at least one missing cell, preserving order.
pub fn drop_missing(raw: &RawTable) -> Result<RawTable> {
    let keep: Vec<usize> = (0..raw.n_rows())
        .filter(|&r| raw.columns.iter().all(|c| c[r].is_some()))
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyAfterCleaning);
    }
    let columns = raw
        .columns
        .iter()
        .map(|c| keep.iter().map(|&r| c[r].clone()).collect())
        .collect();
    Ok(RawTable {
        names: raw.names.clone(),
        columns,
    })
}

/// Type a gap-free raw table against `schema`.
pub fn parse_table(raw: &RawTable, schema: &Schema) -> Result<Table> {
    let header_matches = raw.names.len() == schema.len()
        && raw.names.iter().zip(schema.names()).all(|(a, b)| a == b);
    if !header_matches {
        return Err(Error::SchemaMismatch(format!(
            "header {:?} does not match schema {:?}",
            raw.names,
            schema.names().collect::<Vec<_>>()
        )));
    }
    let mut columns = Vec::with_capacity(schema.len());
    for (spec, cells) in schema.columns().iter().zip(&raw.columns) {
        let column = match spec.kind() {
            ColumnKind::Numeric => Column::Numeric(
                cells
                    .iter()
                    .enumerate()
                    .map(|(r, cell)| {
                        let text = cell
                            .as_deref()
                            .ok_or_else(|| invalid_data("missing cell"))?;
                        parse_finite(text).ok_or_else(|| {
                            invalid_data(format!(
                                "row {}: column {:?}: cannot parse {text:?} as a number",
                                r + 1,
                                spec.name
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            ColumnKind::Categorical => Column::Categorical(
                cells
                    .iter()
                    .map(|cell| cell.clone().ok_or_else(|| invalid_data("missing cell")))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        columns.push(column);
    }
    Table::new(schema.clone(), columns)
}

/// Read a CSV file into a typed table, dropping incomplete rows.
///
/// Without a schema the kinds are inferred from the surviving rows.
pub fn load_csv(path: impl AsRef<Path>, schema: Option<&Schema>) -> Result<Table> {
    let raw = RawTable::read_csv(path)?;
    table_from_raw(&raw, schema)
}

pub fn table_from_raw(raw: &RawTable, schema: Option<&Schema>) -> Result<Table> {
    if raw.n_rows() == 0 {
        return Err(Error::NoRows);
    }
    let clean = drop_missing(raw)?;
    match schema {
        Some(s) => parse_table(&clean, s),
        None => {
            let inferred = infer_schema(&clean)?;
            parse_table(&clean, &inferred)
        }
    }
}

/// Train/control/test fractions plus the seed of the row permutation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub control: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, control: f64, test: f64, seed: u64) -> Result<Self> {
        for f in [train, control, test] {
            if !(f > 0.0 && f < 1.0) {
                return Err(invalid_arg(format!("split fraction {f} outside (0, 1)")));
            }
        }
        if (train + control + test - 1.0).abs() > 1e-12 {
            return Err(invalid_arg("split fractions must sum to 1"));
        }
        Ok(Self {
            train,
            control,
            test,
            seed,
        })
    }

    /// Part sizes for `n` rows: control and test are floored, train takes the rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // The 1e-9 guard keeps exact products such as 0.2 * 100 from flooring to 19.
        let control = (self.control * n as f64 + 1e-9).floor() as usize;
        let test = (self.test * n as f64 + 1e-9).floor() as usize;
        (n.saturating_sub(control + test), control, test)
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.6,
            control: 0.2,
            test: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Table,
    pub control: Table,
    pub test: Table,
}

/// Seeded row-disjoint partition into train, control and test parts.
pub fn split(table: &Table, spec: &SplitSpec) -> Result<Split> {
    let n = table.n_rows();
    if n < 3 {
        return Err(invalid_data(format!(
            "cannot split {n} rows into three parts"
        )));
    }
    let (n_train, n_control, n_test) = spec.sizes(n);
    if n_train == 0 || n_control == 0 || n_test == 0 {
        return Err(invalid_data(format!(
            "split of {n} rows leaves an empty part ({n_train}, {n_control}, {n_test})"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(spec.seed, "split"));
    let (train_rows, rest) = order.split_at(n_train);
    let (control_rows, test_rows) = rest.split_at(n_control);
    Ok(Split {
        train: table.select_rows(train_rows),
        control: table.select_rows(control_rows),
        test: table.select_rows(test_rows),
    })
}
