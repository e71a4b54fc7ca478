//! Tabular data model: schema, immutable ground-truth dataset, and the masked
//! (incomplete) view of it that imputation strategies operate on.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TabularError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("cannot parse row {row}, column `{column}`: {reason}")]
    ParseError {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("missing rate {0} is outside (0, 1)")]
    RateOutOfRange(f64),
    #[error("cell ({row}, {column}) is not missing")]
    CellNotMissing { row: usize, column: usize },
    #[error("cell ({row}, {column}) is outside the table")]
    InvalidCell { row: usize, column: usize },
    #[error("invalid subset: {0}")]
    InvalidSubset(String),
    #[error("io error: {0}")]
    Io(String),
}

/// Aggregate function applied to a measure column inside a view.
///
/// Declaration order is alphabetical so that the derived `Ord` agrees with
/// token order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Aggregate {
    Avg,
    Count,
    Max,
    Min,
    Sum,
}

impl Aggregate {
    pub const DEFAULT: [Aggregate; 4] = [Aggregate::Avg, Aggregate::Sum, Aggregate::Max, Aggregate::Min];
    pub const ALL: [Aggregate; 5] = [Aggregate::Avg, Aggregate::Count, Aggregate::Max, Aggregate::Min, Aggregate::Sum];

    pub fn token(self) -> &'static str {
        match self {
            Aggregate::Avg => "avg",
            Aggregate::Count => "count",
            Aggregate::Max => "max",
            Aggregate::Min => "min",
            Aggregate::Sum => "sum",
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token().to_uppercase())
    }
}

impl FromStr for Aggregate {
    type Err = TabularError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "avg" | "mean" => Ok(Aggregate::Avg),
            "count" => Ok(Aggregate::Count),
            "max" => Ok(Aggregate::Max),
            "min" => Ok(Aggregate::Min),
            "sum" => Ok(Aggregate::Sum),
            other => Err(TabularError::InvalidSchema(format!("unknown aggregate `{other}`"))),
        }
    }
}

/// Column roles of a dataset. Column indices run over `dimensions ++ measures`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    dimensions: Vec<String>,
    measures: Vec<String>,
    aggregates: Vec<Aggregate>,
}

impl Schema {
    pub fn new(
        dimensions: Vec<String>,
        measures: Vec<String>,
        aggregates: Vec<Aggregate>,
    ) -> Result<Self, TabularError> {
        if dimensions.is_empty() {
            return Err(TabularError::InvalidSchema("no dimension columns".into()));
        }
        if measures.is_empty() {
            return Err(TabularError::InvalidSchema("no measure columns".into()));
        }
        if aggregates.is_empty() {
            return Err(TabularError::InvalidSchema("no aggregate functions".into()));
        }
        let mut seen = BTreeSet::new();
        for name in dimensions.iter().chain(&measures) {
            if !seen.insert(name.as_str()) {
                return Err(TabularError::InvalidSchema(format!("column `{name}` declared twice")));
            }
        }
        let mut aggs = Vec::with_capacity(aggregates.len());
        for agg in aggregates {
            if !aggs.contains(&agg) {
                aggs.push(agg);
            }
        }
        Ok(Schema {
            dimensions,
            measures,
            aggregates: aggs,
        })
    }

    /// Schema with the default aggregate set (AVG, SUM, MAX, MIN).
    pub fn with_default_aggregates<S: Into<String>>(
        dimensions: impl IntoIterator<Item = S>,
        measures: impl IntoIterator<Item = S>,
    ) -> Result<Self, TabularError> {
        Schema::new(
            dimensions.into_iter().map(Into::into).collect(),
            measures.into_iter().map(Into::into).collect(),
            Aggregate::DEFAULT.to_vec(),
        )
    }

    pub fn dimensions(&self) -> &[String] {
        &self.dimensions
    }

    pub fn measures(&self) -> &[String] {
        &self.measures
    }

    pub fn aggregates(&self) -> &[Aggregate] {
        &self.aggregates
    }

    pub fn column_count(&self) -> usize {
        self.dimensions.len() + self.measures.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.dimensions
            .iter()
            .chain(&self.measures)
            .position(|c| c == name)
    }

    pub fn column_name(&self, column: usize) -> &str {
        if column < self.dimensions.len() {
            &self.dimensions[column]
        } else {
            &self.measures[column - self.dimensions.len()]
        }
    }

    pub fn is_dimension(&self, column: usize) -> bool {
        column < self.dimensions.len()
    }

    pub fn dimension_index(&self, name: &str) -> Option<usize> {
        self.dimensions.iter().position(|c| c == name)
    }

    pub fn measure_index(&self, name: &str) -> Option<usize> {
        self.measures.iter().position(|c| c == name)
    }
}

/// A categorical column stored as codes into a lexicographically sorted
/// dictionary, so code order equals token order.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionColumn {
    dictionary: Vec<String>,
    codes: Vec<u32>,
}

impl DimensionColumn {
    fn from_tokens(tokens: &[String]) -> Self {
        let dictionary: Vec<String> = tokens
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let codes = tokens
            .iter()
            .map(|t| dictionary.binary_search(t).expect("token in dictionary") as u32)
            .collect();
        DimensionColumn { dictionary, codes }
    }

    pub fn dictionary(&self) -> &[String] {
        &self.dictionary
    }

    pub fn code(&self, row: usize) -> u32 {
        self.codes[row]
    }

    pub fn label(&self, code: u32) -> &str {
        &self.dictionary[code as usize]
    }

    pub fn code_of(&self, token: &str) -> Option<u32> {
        self.dictionary
            .binary_search_by(|t| t.as_str().cmp(token))
            .ok()
            .map(|c| c as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellValue<'a> {
    Category(&'a str),
    Number(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell<'a> {
    Missing,
    Present(CellValue<'a>),
}

/// One cell: zero-based row and zero-based column over `dimensions ++ measures`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellAddress {
    pub row: usize,
    pub column: usize,
}

impl CellAddress {
    pub fn new(row: usize, column: usize) -> Self {
        CellAddress { row, column }
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.column)
    }
}

/// Complete, immutable table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: usize,
    dimensions: Vec<DimensionColumn>,
    measures: Vec<Vec<f64>>,
}

impl Dataset {
    /// Builds a dataset from string records laid out as `dimensions ++ measures`.
    pub fn from_records<R, S>(schema: Schema, records: R) -> Result<Self, TabularError>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let width = schema.column_count();
        let n_dims = schema.dimensions.len();
        let mut dim_tokens: Vec<Vec<String>> = vec![Vec::new(); n_dims];
        let mut measures: Vec<Vec<f64>> = vec![Vec::new(); schema.measures.len()];
        let mut rows = 0;
        for (row, record) in records.into_iter().enumerate() {
            let cells: Vec<S> = record.into_iter().collect();
            if cells.len() != width {
                return Err(TabularError::ParseError {
                    row,
                    column: String::new(),
                    reason: format!("expected {width} cells, found {}", cells.len()),
                });
            }
            for (column, cell) in cells.iter().enumerate() {
                let raw = cell.as_ref().trim();
                if column < n_dims {
                    if raw.is_empty() {
                        return Err(TabularError::ParseError {
                            row,
                            column: schema.column_name(column).to_string(),
                            reason: "empty categorical token".into(),
                        });
                    }
                    dim_tokens[column].push(raw.to_string());
                } else {
                    let value = parse_measure(raw).ok_or_else(|| TabularError::ParseError {
                        row,
                        column: schema.column_name(column).to_string(),
                        reason: format!("`{raw}` is not a finite number"),
                    })?;
                    measures[column - n_dims].push(value);
                }
            }
            rows += 1;
        }
        if rows == 0 {
            return Err(TabularError::EmptyDataset);
        }
        let dimensions = dim_tokens.iter().map(|t| DimensionColumn::from_tokens(t)).collect();
        Ok(Dataset {
            schema,
            rows,
            dimensions,
            measures,
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn column_count(&self) -> usize {
        self.schema.column_count()
    }

    pub fn cell_count(&self) -> usize {
        self.rows * self.column_count()
    }

    pub fn dimension(&self, index: usize) -> &DimensionColumn {
        &self.dimensions[index]
    }

    pub fn measure(&self, index: usize) -> &[f64] {
        &self.measures[index]
    }

    pub fn value(&self, cell: CellAddress) -> CellValue<'_> {
        let n_dims = self.dimensions.len();
        if cell.column < n_dims {
            let col = &self.dimensions[cell.column];
            CellValue::Category(col.label(col.code(cell.row)))
        } else {
            CellValue::Number(self.measures[cell.column - n_dims][cell.row])
        }
    }

    pub fn contains(&self, cell: CellAddress) -> bool {
        cell.row < self.rows && cell.column < self.column_count()
    }
}

fn parse_measure(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a UTF-8, comma-separated file with a header row. Header names bind
/// to schema columns by exact match; extra columns are ignored.
pub fn load_dataset(path: impl AsRef<Path>, schema: Schema) -> Result<Dataset, TabularError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| TabularError::Io(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| TabularError::Io(e.to_string()))?
        .clone();
    let positions = (0..schema.column_count())
        .map(|c| {
            let name = schema.column_name(c);
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| TabularError::MissingColumn(name.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut records = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| TabularError::ParseError {
            row,
            column: String::new(),
            reason: e.to_string(),
        })?;
        let cells = positions
            .iter()
            .map(|&p| record.get(p).unwrap_or("").to_string())
            .collect::<Vec<_>>();
        records.push(cells);
    }
    Dataset::from_records(schema, records)
}

/// Ground truth plus the set of cells currently hidden.
///
/// Per-row and per-column missing counts are kept in step with the mask.
#[derive(Debug, Clone)]
pub struct MaskedDataset {
    ground_truth: Arc<Dataset>,
    missing: Vec<bool>,
    missing_total: usize,
    row_missing_dims: Vec<usize>,
    row_missing_measures: Vec<usize>,
    column_missing: Vec<usize>,
}

impl PartialEq for MaskedDataset {
    fn eq(&self, other: &Self) -> bool {
        self.ground_truth == other.ground_truth && self.missing == other.missing
    }
}

impl MaskedDataset {
    /// A view with nothing masked.
    pub fn complete(ground_truth: Arc<Dataset>) -> Self {
        let rows = ground_truth.row_count();
        let cols = ground_truth.column_count();
        MaskedDataset {
            missing: vec![false; rows * cols],
            missing_total: 0,
            row_missing_dims: vec![0; rows],
            row_missing_measures: vec![0; rows],
            column_missing: vec![0; cols],
            ground_truth,
        }
    }

    pub fn with_mask(
        ground_truth: Arc<Dataset>,
        mask: impl IntoIterator<Item = CellAddress>,
    ) -> Result<Self, TabularError> {
        let mut masked = MaskedDataset::complete(ground_truth);
        for cell in mask {
            masked.hide(cell)?;
        }
        Ok(masked)
    }

    fn hide(&mut self, cell: CellAddress) -> Result<(), TabularError> {
        if !self.ground_truth.contains(cell) {
            return Err(TabularError::InvalidCell {
                row: cell.row,
                column: cell.column,
            });
        }
        let slot = self.slot(cell);
        if !self.missing[slot] {
            self.missing[slot] = true;
            self.missing_total += 1;
            self.column_missing[cell.column] += 1;
            if self.schema().is_dimension(cell.column) {
                self.row_missing_dims[cell.row] += 1;
            } else {
                self.row_missing_measures[cell.row] += 1;
            }
        }
        Ok(())
    }

    fn slot(&self, cell: CellAddress) -> usize {
        cell.row * self.ground_truth.column_count() + cell.column
    }

    pub fn ground_truth(&self) -> &Arc<Dataset> {
        &self.ground_truth
    }

    pub fn schema(&self) -> &Schema {
        self.ground_truth.schema()
    }

    pub fn row_count(&self) -> usize {
        self.ground_truth.row_count()
    }

    pub fn column_count(&self) -> usize {
        self.ground_truth.column_count()
    }

    pub fn is_missing(&self, cell: CellAddress) -> bool {
        self.ground_truth.contains(cell) && self.missing[self.slot(cell)]
    }

    pub fn get(&self, cell: CellAddress) -> Cell<'_> {
        if self.is_missing(cell) {
            Cell::Missing
        } else {
            Cell::Present(self.ground_truth.value(cell))
        }
    }

    /// Number of missing cells.
    pub fn missing_count(&self) -> usize {
        self.missing_total
    }

    pub fn column_missing_count(&self, column: usize) -> usize {
        self.column_missing[column]
    }

    pub fn row_missing_count(&self, row: usize) -> usize {
        self.row_missing_dims[row] + self.row_missing_measures[row]
    }

    /// Present dimension cells in a row.
    pub fn row_present_dimensions(&self, row: usize) -> usize {
        self.schema().dimensions().len() - self.row_missing_dims[row]
    }

    /// Present measure cells in a row.
    pub fn row_present_measures(&self, row: usize) -> usize {
        self.schema().measures().len() - self.row_missing_measures[row]
    }

    /// Missing cells in row-major order.
    pub fn missing_cells(&self) -> Vec<CellAddress> {
        let cols = self.column_count();
        self.missing
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(slot, _)| CellAddress::new(slot / cols, slot % cols))
            .collect()
    }

    /// Missing columns of one row, ascending.
    pub fn missing_columns_in_row(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        let cols = self.column_count();
        self.missing[row * cols..(row + 1) * cols]
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(c, _)| c)
    }

    /// Restores a missing cell from the ground truth.
    pub fn impute_cell(&mut self, cell: CellAddress) -> Result<(), TabularError> {
        if !self.is_missing(cell) {
            return Err(TabularError::CellNotMissing {
                row: cell.row,
                column: cell.column,
            });
        }
        let slot = self.slot(cell);
        self.missing[slot] = false;
        self.missing_total -= 1;
        self.column_missing[cell.column] -= 1;
        if self.schema().is_dimension(cell.column) {
            self.row_missing_dims[cell.row] -= 1;
        } else {
            self.row_missing_measures[cell.row] -= 1;
        }
        Ok(())
    }

    /// Value-returning form of [`MaskedDataset::impute_cell`].
    pub fn imputed(mut self, cell: CellAddress) -> Result<Self, TabularError> {
        self.impute_cell(cell)?;
        Ok(self)
    }

    /// Present dimension code, or `None` when the cell is masked.
    pub fn dimension_code(&self, row: usize, dimension: usize) -> Option<u32> {
        let cell = CellAddress::new(row, dimension);
        (!self.missing[self.slot(cell)]).then(|| self.ground_truth.dimension(dimension).code(row))
    }

    /// Present measure value, or `None` when the cell is masked.
    pub fn measure_value(&self, row: usize, measure: usize) -> Option<f64> {
        let column = self.schema().dimensions().len() + measure;
        let cell = CellAddress::new(row, column);
        (!self.missing[self.slot(cell)]).then(|| self.ground_truth.measure(measure)[row])
    }
}

/// Hides `round(rate * cells)` distinct cells drawn uniformly over the whole
/// table.
pub fn inject_mcar(dataset: Arc<Dataset>, rate: f64, seed: u64) -> Result<MaskedDataset, TabularError> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(TabularError::RateOutOfRange(rate));
    }
    let total = dataset.cell_count();
    let amount = ((rate * total as f64).round() as usize).min(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = dataset.column_count();
    let mut chosen: Vec<usize> = index::sample(&mut rng, total, amount).into_vec();
    chosen.sort_unstable();
    MaskedDataset::with_mask(
        dataset,
        chosen.into_iter().map(|slot| CellAddress::new(slot / cols, slot % cols)),
    )
}

/// Row subset used as the target or reference side of a view comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetSpec {
    WholeData,
    Predicate { column: String, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    In,
    Out,
    /// The predicate cell of the row is missing.
    Unknown,
}

impl SubsetSpec {
    pub fn predicate(column: impl Into<String>, value: impl Into<String>) -> Self {
        SubsetSpec::Predicate {
            column: column.into(),
            value: value.into(),
        }
    }

    pub fn validate(&self, schema: &Schema) -> Result<(), TabularError> {
        match self {
            SubsetSpec::WholeData => Ok(()),
            SubsetSpec::Predicate { column, .. } => schema
                .dimension_index(column)
                .map(|_| ())
                .ok_or_else(|| {
                    TabularError::InvalidSubset(format!("`{column}` is not a dimension column"))
                }),
        }
    }

    /// Membership of every row under the current mask.
    pub fn memberships(&self, data: &MaskedDataset) -> Result<Vec<Membership>, TabularError> {
        self.validate(data.schema())?;
        let rows = data.row_count();
        match self {
            SubsetSpec::WholeData => Ok(vec![Membership::In; rows]),
            SubsetSpec::Predicate { column, value } => {
                let dim = data.schema().dimension_index(column).expect("validated");
                let wanted = data.ground_truth().dimension(dim).code_of(value);
                Ok((0..rows)
                    .map(|row| match data.dimension_code(row, dim) {
                        None => Membership::Unknown,
                        Some(code) if Some(code) == wanted => Membership::In,
                        Some(_) => Membership::Out,
                    })
                    .collect())
            }
        }
    }
}

impl fmt::Display for SubsetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubsetSpec::WholeData => f.write_str("whole"),
            SubsetSpec::Predicate { column, value } => write!(f, "{column}={value}"),
        }
    }
}

impl FromStr for SubsetSpec {
    type Err = TabularError;

    /// `whole` (or `*`) selects every row; `column=value` is an equality predicate.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("whole") || s == "*" {
            return Ok(SubsetSpec::WholeData);
        }
        match s.split_once('=') {
            Some((column, value)) if !column.trim().is_empty() && !value.trim().is_empty() => {
                Ok(SubsetSpec::predicate(column.trim(), value.trim()))
            }
            _ => Err(TabularError::InvalidSubset(format!(
                "expected `whole` or `column=value`, got `{s}`"
            ))),
        }
    }
}
