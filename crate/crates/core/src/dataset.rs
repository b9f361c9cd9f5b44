//! Dataset ingestion, one-class views, z-score normalization and
//! stratified repeated fold plans.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label of the target (normal) class.
pub const TARGET: i8 = 1;
/// Label of everything else.
pub const OUTLIER: i8 = -1;

/// Columns with a population standard deviation below this are degenerate.
const DEGENERATE_STD: f64 = 1e-12;

/// A one-class view of a labeled dataset: a feature matrix with `+1` for
/// the target class and `-1` for outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Array2<f64>,
    labels: Vec<i8>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Array2<f64>, labels: Vec<i8>) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset(format!(
                "need at least one row and one feature, got {n}x{d}"
            )));
        }
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {n} rows",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l != TARGET && l != OUTLIER) {
            return Err(Error::InvalidDataset(format!("label {bad} is not +1 or -1")));
        }
        if !labels.contains(&TARGET) {
            return Err(Error::InvalidDataset("no target-class rows".into()));
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_targets(&self) -> usize {
        self.labels.iter().filter(|&&l| l == TARGET).count()
    }

    pub fn n_outliers(&self) -> usize {
        self.n_samples() - self.n_targets()
    }

    /// Feature rows of the target class, in row order.
    pub fn targets(&self) -> Array2<f64> {
        let idx: Vec<usize> = (0..self.n_samples())
            .filter(|&i| self.labels[i] == TARGET)
            .collect();
        self.features.select(Axis(0), &idx)
    }

    fn subset(&self, name: String, rows: &[usize]) -> Subset {
        Subset {
            name,
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Rows selected from a dataset. Unlike [`Dataset`], it may hold no target
/// rows (a test fold of a tiny dataset, say).
#[derive(Debug, Clone, PartialEq)]
pub struct Subset {
    pub name: String,
    pub features: Array2<f64>,
    pub labels: Vec<i8>,
}

impl Subset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_outliers(&self) -> usize {
        self.labels.iter().filter(|&&l| l == OUTLIER).count()
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl LabelColumn {
    /// The last column of the file.
    pub fn last() -> Self {
        LabelColumn::Name("last".into())
    }

    fn resolve(&self, headers: Option<&csv::StringRecord>, width: usize) -> Result<usize> {
        match self {
            LabelColumn::Index(i) if *i < width => Ok(*i),
            LabelColumn::Index(i) => Err(Error::UnknownLabelColumn(i.to_string())),
            LabelColumn::Name(name) if name == "last" => Ok(width - 1),
            LabelColumn::Name(name) => headers
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::UnknownLabelColumn(name.clone())),
        }
    }
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.write_str(n),
        }
    }
}

/// Raw contents of a numeric CSV: feature rows plus the label column, if any.
struct RawTable {
    headers: Option<csv::StringRecord>,
    rows: Vec<Vec<f64>>,
    labels: Vec<String>,
    width: usize,
}

fn read_table(path: &Path, has_header: bool, label_column: Option<&LabelColumn>) -> Result<RawTable> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let headers = if has_header {
        Some(reader.headers().map_err(csv_err)?.clone())
    } else {
        None
    };

    let mut table = RawTable {
        width: headers.as_ref().map_or(0, |h| h.len()),
        headers,
        rows: Vec::new(),
        labels: Vec::new(),
    };
    let mut label_idx = None;
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if table.width == 0 {
            table.width = record.len();
        }
        if record.len() != table.width {
            return Err(Error::RaggedRow {
                row: row + 1,
                found: record.len(),
                expected: table.width,
            });
        }
        if label_idx.is_none() {
            if let Some(col) = label_column {
                label_idx = Some(col.resolve(table.headers.as_ref(), table.width)?);
            }
        }
        let mut features = Vec::with_capacity(table.width);
        for (column, cell) in record.iter().enumerate() {
            if Some(column) == label_idx {
                table.labels.push(cell.to_string());
                continue;
            }
            let value = cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                Error::NonNumeric {
                    row: row + 1,
                    column: column + 1,
                    value: cell.to_string(),
                }
            })?;
            features.push(value);
        }
        table.rows.push(features);
    }
    if label_idx.is_none() && table.width > 0 {
        if let Some(col) = label_column {
            col.resolve(table.headers.as_ref(), table.width)?;
        }
    }
    Ok(table)
}

fn rows_to_matrix(rows: Vec<Vec<f64>>, d: usize) -> Array2<f64> {
    let n = rows.len();
    Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect())
        .expect("rows were checked to have equal width")
}

/// Loads a delimited file into a one-class view: rows whose label equals
/// `target_label` become `+1`, all others `-1`.
pub fn load_csv(
    path: &Path,
    label_column: &LabelColumn,
    target_label: &str,
    has_header: bool,
) -> Result<Dataset> {
    let table = read_table(path, has_header, Some(label_column))?;
    if table.rows.is_empty() {
        return Err(Error::Empty("dataset file has no rows"));
    }
    let labels: Vec<i8> = table
        .labels
        .iter()
        .map(|l| if l == target_label { TARGET } else { OUTLIER })
        .collect();
    if !labels.contains(&TARGET) {
        return Err(Error::TargetLabelAbsent(target_label.to_string()));
    }
    let d = table.width - 1;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, rows_to_matrix(table.rows, d), labels)
}

/// Reads a feature-only matrix, dropping `label_column` if given. An empty
/// file yields a matrix with zero rows.
pub fn read_features(
    path: &Path,
    has_header: bool,
    label_column: Option<&LabelColumn>,
) -> Result<Array2<f64>> {
    let table = read_table(path, has_header, label_column)?;
    let d = table
        .width
        .saturating_sub(usize::from(label_column.is_some()));
    Ok(rows_to_matrix(table.rows, d))
}

/// Column-wise z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub means: Array1<f64>,
    pub stddevs: Array1<f64>,
}

impl Normalizer {
    pub fn identity(d: usize) -> Self {
        Self {
            means: Array1::zeros(d),
            stddevs: Array1::ones(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: features.ncols(),
            });
        }
        Ok((&features - &self.means) / &self.stddevs)
    }

    pub fn apply_row(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok((&x - &self.means) / &self.stddevs)
    }
}

/// Per-column mean and population standard deviation. Zero-variance columns
/// keep their mean and get unit scale, so they normalize to zero.
pub fn fit_normalizer(features: ArrayView2<'_, f64>) -> Result<Normalizer> {
    let (n, d) = features.dim();
    if n == 0 || d == 0 {
        return Err(Error::Empty("cannot fit a normalizer on an empty matrix"));
    }
    let means = features.mean_axis(Axis(0)).expect("n > 0");
    let stddevs = features
        .std_axis(Axis(0), 0.0)
        .mapv(|s| if s < DEGENERATE_STD { 1.0 } else { s });
    Ok(Normalizer { means, stddevs })
}

/// Fold index of every sample, for each of several independent runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_runs: usize,
    pub n_folds: usize,
    pub seed: u64,
    pub assignments: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn fold_of(&self, run: usize, sample: usize) -> usize {
        self.assignments[run][sample]
    }

    fn check(&self, run: usize, fold: usize, n: usize) -> Result<()> {
        if run >= self.n_runs {
            return Err(Error::OutOfRange {
                what: "run",
                index: run,
                bound: self.n_runs,
            });
        }
        if fold >= self.n_folds {
            return Err(Error::OutOfRange {
                what: "test_fold",
                index: fold,
                bound: self.n_folds,
            });
        }
        if self.assignments[run].len() != n {
            return Err(Error::DimensionMismatch {
                expected: self.assignments[run].len(),
                found: n,
            });
        }
        Ok(())
    }
}

/// Stratified fold assignment, repeated `n_runs` times from one seeded stream.
///
/// Each class is shuffled and dealt round-robin; the outlier class continues
/// the rotation where the target class stopped so total fold sizes also stay
/// within one of each other.
pub fn plan_folds(dataset: &Dataset, n_folds: usize, n_runs: usize, seed: u64) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::InvalidConfig(format!("n_folds must be >= 2, got {n_folds}")));
    }
    if n_runs == 0 {
        return Err(Error::InvalidConfig("n_runs must be >= 1".into()));
    }
    let labels = dataset.labels();
    let classes: Vec<(i8, Vec<usize>)> = [TARGET, OUTLIER]
        .into_iter()
        .map(|c| (c, (0..labels.len()).filter(|&i| labels[i] == c).collect()))
        .collect();
    for (label, members) in &classes {
        // An absent outlier class is allowed: validation degrades to recall only.
        if !members.is_empty() && members.len() < n_folds {
            return Err(Error::ClassTooSmall {
                label: *label,
                count: members.len(),
                n_folds,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = Vec::with_capacity(n_runs);
    for _ in 0..n_runs {
        let mut folds = vec![0; labels.len()];
        let mut offset = 0;
        for (_, members) in &classes {
            let mut order = members.clone();
            order.shuffle(&mut rng);
            for (pos, &i) in order.iter().enumerate() {
                folds[i] = (offset + pos) % n_folds;
            }
            offset = (offset + order.len()) % n_folds;
        }
        assignments.push(folds);
    }
    Ok(FoldPlan {
        n_runs,
        n_folds,
        seed,
        assignments,
    })
}

/// The three disjoint parts of one (run, fold) cell.
#[derive(Debug, Clone)]
pub struct OccSplit {
    /// Target rows of the training folds: the only rows a model is fit on.
    pub train_targets: Array2<f64>,
    pub train_indices: Vec<usize>,
    /// Every row of the training folds, used to score hyperparameters.
    pub validation: Subset,
    pub validation_indices: Vec<usize>,
    pub test: Subset,
    pub test_indices: Vec<usize>,
    /// Set when the validation rows contain no outliers, so Gmean there
    /// reduces to recall.
    pub recall_only: bool,
}

pub fn split_for_occ(dataset: &Dataset, plan: &FoldPlan, run: usize, test_fold: usize) -> Result<OccSplit> {
    plan.check(run, test_fold, dataset.n_samples())?;
    let labels = dataset.labels();
    let (test_indices, validation_indices): (Vec<usize>, Vec<usize>) =
        (0..dataset.n_samples()).partition(|&i| plan.fold_of(run, i) == test_fold);
    let train_indices: Vec<usize> = validation_indices
        .iter()
        .copied()
        .filter(|&i| labels[i] == TARGET)
        .collect();
    let validation = dataset.subset(
        format!("{}/run{run}/fold{test_fold}/validation", dataset.name()),
        &validation_indices,
    );
    let recall_only = validation.n_outliers() == 0;
    Ok(OccSplit {
        train_targets: dataset.features.select(Axis(0), &train_indices),
        train_indices,
        validation,
        validation_indices,
        test: dataset.subset(
            format!("{}/run{run}/fold{test_fold}/test", dataset.name()),
            &test_indices,
        ),
        test_indices,
        recall_only,
    })
}
