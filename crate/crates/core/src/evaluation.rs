//! Benchmark protocol: per-fold Gmean, cross-validated hyperparameter
//! selection, MGmean, PMG, and the Friedman test with the Iman-Davenport
//! correction.
//!
//! Precision and recall treat the target class as the positive class.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{split_for_occ, Dataset, FoldPlan, Subset, TARGET};
use crate::error::{Error, Result};
use crate::gating::GatingKind;
use crate::kernels::{combination_name, KernelSetting};
use crate::models::{train_lmkad, train_mkad, train_ocsvm, AnomalyModel, LmkadConfig, TrainedModel};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn from_labels(truth: &[i8], predicted: &[i8]) -> Self {
        let mut c = Self::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t == TARGET, p == TARGET) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// `sqrt(precision * recall)`, with zero divisions counted as 0.
pub fn gmean(counts: &ConfusionCounts) -> Result<f64> {
    if counts.tp + counts.fp + counts.fn_ == 0 {
        return Err(Error::Empty("gmean is undefined without positives (tp + fp + fn = 0)"));
    }
    if counts.tp == 0 {
        return Ok(0.0);
    }
    let precision = counts.tp as f64 / (counts.tp + counts.fp) as f64;
    let recall = counts.tp as f64 / (counts.tp + counts.fn_) as f64;
    Ok((precision * recall).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ocsvm,
    Mkad,
    Lmkad,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ocsvm" => Ok(Family::Ocsvm),
            "mkad" => Ok(Family::Mkad),
            "lmkad" => Ok(Family::Lmkad),
            other => Err(Error::InvalidConfig(format!("unknown family {other:?}"))),
        }
    }
}

/// A classifier as run by the benchmark: family, kernels and every knob
/// except `nu`, which is searched per fold.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub family: Family,
    pub kernels: Vec<KernelSetting>,
    /// LMKAD settings; its `nu` field is overwritten by the grid.
    pub lmkad: LmkadConfig,
    pub solver: SolverOptions,
    /// Overrides the generated display name.
    pub label: Option<String>,
}

impl ClassifierConfig {
    pub fn new(family: Family, kernels: Vec<KernelSetting>) -> Self {
        Self {
            family,
            kernels,
            lmkad: LmkadConfig::default(),
            solver: SolverOptions::default(),
            label: None,
        }
    }

    pub fn with_gating(mut self, gating: GatingKind) -> Self {
        self.lmkad.gating = gating;
        self
    }

    /// `OCSVM(g)`, `MKAD(gpl)`, `LMKAD(S_gpl)` and so on.
    pub fn name(&self) -> String {
        if let Some(label) = &self.label {
            return label.clone();
        }
        let kernels = combination_name(&self.kernels);
        match self.family {
            Family::Ocsvm => format!("OCSVM({kernels})"),
            Family::Mkad => format!("MKAD({kernels})"),
            Family::Lmkad => format!("LMKAD({}_{kernels})", self.lmkad.gating.tag()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernels.is_empty() {
            return Err(Error::InvalidConfig(format!("{}: no kernels", self.name())));
        }
        if self.family == Family::Ocsvm && self.kernels.len() != 1 {
            return Err(Error::InvalidConfig(format!(
                "OCSVM takes exactly one kernel, got {}",
                self.kernels.len()
            )));
        }
        if self.family == Family::Lmkad {
            self.lmkad.validate()?;
        }
        Ok(())
    }

    pub fn train(&self, train_targets: ArrayView2<'_, f64>, nu: f64, seed: u64) -> Result<TrainedModel> {
        self.validate()?;
        Ok(match self.family {
            Family::Ocsvm => train_ocsvm(train_targets, &self.kernels[0], nu, &self.solver)?.into(),
            Family::Mkad => train_mkad(train_targets, &self.kernels, nu, &self.solver)?.into(),
            Family::Lmkad => {
                let config = LmkadConfig {
                    nu,
                    seed,
                    ..self.lmkad.clone()
                };
                train_lmkad(train_targets, &self.kernels, &config)?.into()
            }
        })
    }
}

impl fmt::Display for ClassifierConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Gmean of a trained model on labeled rows.
pub fn evaluate(model: &dyn AnomalyModel, rows: &Subset) -> Result<(f64, ConfusionCounts)> {
    let predicted = model.predict_batch(rows.features.view())?;
    let counts = ConfusionCounts::from_labels(&rows.labels, &predicted);
    Ok((gmean(&counts)?, counts))
}

/// Outcome of one (run, fold) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub run: usize,
    pub fold: usize,
    pub chosen_nu: Option<f64>,
    pub validation_gmean: f64,
    pub test_gmean: f64,
    pub sv_pct: f64,
    pub recall_only: bool,
    /// Set when the fold failed; such folds are left out of the aggregates.
    pub error: Option<String>,
}

/// One row of the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub dataset: String,
    pub classifier: String,
    pub folds: Vec<FoldOutcome>,
    pub mean_gmean: f64,
    /// Sample standard deviation over the successful folds.
    pub std_gmean: f64,
    pub mean_sv_pct: f64,
}

impl CvResult {
    pub fn n_failed(&self) -> usize {
        self.folds.iter().filter(|f| f.error.is_some()).count()
    }

    pub fn all_failed(&self) -> bool {
        self.n_failed() == self.folds.len()
    }
}

/// Seed for the model trained in cell `(run, fold)`.
fn cell_seed(base: u64, run: usize, fold: usize, n_folds: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((run * n_folds + fold) as u64)
}

/// Runs the repeated cross-validation protocol.
///
/// In every (run, fold) cell each `nu` in `grid` is trained on the target rows
/// of the training folds and scored by Gmean on all rows of the training
/// folds; the first best point wins. That model is then scored on the test
/// fold. Folds whose every grid point fails are flagged and skipped.
pub fn cross_validate(
    dataset: &Dataset,
    classifier: &ClassifierConfig,
    grid: &[f64],
    plan: &FoldPlan,
    seed: u64,
) -> Result<CvResult> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    classifier.validate()?;
    let mut folds = Vec::with_capacity(plan.n_runs * plan.n_folds);
    for run in 0..plan.n_runs {
        for fold in 0..plan.n_folds {
            let split = split_for_occ(dataset, plan, run, fold)?;
            let model_seed = cell_seed(seed, run, fold, plan.n_folds);
            folds.push(run_cell(classifier, grid, &split, model_seed, run, fold));
        }
    }
    Ok(summarize(dataset.name(), &classifier.name(), folds))
}

fn run_cell(
    classifier: &ClassifierConfig,
    grid: &[f64],
    split: &crate::dataset::OccSplit,
    seed: u64,
    run: usize,
    fold: usize,
) -> FoldOutcome {
    let mut best: Option<(f64, f64, TrainedModel)> = None;
    let mut last_error = None;
    for &nu in grid {
        let scored = classifier
            .train(split.train_targets.view(), nu, seed)
            .and_then(|m| evaluate(&m, &split.validation).map(|(g, _)| (g, m)));
        match scored {
            Ok((g, m)) => {
                if best.as_ref().is_none_or(|(b, _, _)| g > *b) {
                    best = Some((g, nu, m));
                }
            }
            Err(e) => last_error = Some(e.to_string()),
        }
    }
    let failed = |error: String| FoldOutcome {
        run,
        fold,
        chosen_nu: None,
        validation_gmean: f64::NAN,
        test_gmean: f64::NAN,
        sv_pct: f64::NAN,
        recall_only: split.recall_only,
        error: Some(error),
    };
    let Some((validation_gmean, nu, model)) = best else {
        return failed(last_error.unwrap_or_else(|| "no grid point trained".into()));
    };
    match evaluate(&model, &split.test) {
        Ok((test_gmean, _)) => FoldOutcome {
            run,
            fold,
            chosen_nu: Some(nu),
            validation_gmean,
            test_gmean,
            sv_pct: model.sv_fraction(),
            recall_only: split.recall_only,
            error: None,
        },
        Err(e) => failed(e.to_string()),
    }
}

fn summarize(dataset: &str, classifier: &str, mut folds: Vec<FoldOutcome>) -> CvResult {
    folds.sort_by_key(|f| (f.run, f.fold));
    let ok: Vec<&FoldOutcome> = folds.iter().filter(|f| f.error.is_none()).collect();
    let n = ok.len() as f64;
    let (mean_gmean, std_gmean, mean_sv_pct) = if ok.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let mean = ok.iter().map(|f| f.test_gmean).sum::<f64>() / n;
        let var = if ok.len() > 1 {
            ok.iter().map(|f| (f.test_gmean - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let sv = ok.iter().map(|f| f.sv_pct).sum::<f64>() / n;
        (mean, var.sqrt(), sv)
    };
    CvResult {
        dataset: dataset.to_string(),
        classifier: classifier.to_string(),
        folds,
        mean_gmean,
        std_gmean,
        mean_sv_pct,
    }
}

/// Repeated-CV settings shared by every cell of a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Protocol {
    pub n_folds: usize,
    pub n_runs: usize,
    pub seed: u64,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            n_folds: 5,
            n_runs: 5,
            seed: 0,
        }
    }
}

/// A classifier together with the `nu` values searched for it.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEntry {
    pub classifier: ClassifierConfig,
    pub nu_grid: Vec<f64>,
}

/// Cross-validates every (dataset, classifier) pair on a pool of `workers`
/// threads (`0` picks the available parallelism).
///
/// Results come back in dataset-major order and do not depend on `workers`.
/// A cell whose setup fails (for example a class smaller than `n_folds`) is
/// returned as a result with every fold flagged.
pub fn run_benchmark(
    datasets: &[Dataset],
    entries: &[GridEntry],
    protocol: Protocol,
    workers: usize,
) -> Result<Vec<CvResult>> {
    if datasets.is_empty() || entries.is_empty() {
        return Err(Error::InvalidConfig("need at least one dataset and one classifier".into()));
    }
    for entry in entries {
        if entry.nu_grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        entry.classifier.validate()?;
    }
    let plans: Vec<Result<FoldPlan>> = datasets
        .iter()
        .map(|d| crate::dataset::plan_folds(d, protocol.n_folds, protocol.n_runs, protocol.seed))
        .collect();
    let cells: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|d| (0..entries.len()).map(move |c| (d, c)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;
    let run_cell = |&(d, c): &(usize, usize)| {
        let (dataset, entry) = (&datasets[d], &entries[c]);
        let outcome = plans[d].as_ref().map_err(|e| e.to_string()).and_then(|plan| {
            cross_validate(dataset, &entry.classifier, &entry.nu_grid, plan, protocol.seed)
                .map_err(|e| e.to_string())
        });
        outcome.unwrap_or_else(|error| {
            let failed = FoldOutcome {
                run: 0,
                fold: 0,
                chosen_nu: None,
                validation_gmean: f64::NAN,
                test_gmean: f64::NAN,
                sv_pct: f64::NAN,
                recall_only: false,
                error: Some(error),
            };
            summarize(dataset.name(), &entry.classifier.name(), vec![failed])
        })
    };
    Ok(pool.install(|| {
        use rayon::prelude::*;
        cells.par_iter().map(run_cell).collect()
    }))
}

/// Gmean per (dataset, classifier), datasets as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub datasets: Vec<String>,
    pub classifiers: Vec<String>,
    pub values: Array2<f64>,
}

impl ScoreMatrix {
    pub fn new(datasets: Vec<String>, classifiers: Vec<String>, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (datasets.len(), classifiers.len()) {
            return Err(Error::ScoreMatrix(format!(
                "{}x{} values for {} datasets and {} classifiers",
                values.nrows(),
                values.ncols(),
                datasets.len(),
                classifiers.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::ScoreMatrix(format!("non-finite score {v}")));
        }
        Ok(Self {
            datasets,
            classifiers,
            values,
        })
    }

    /// Builds the matrix from `(dataset, classifier, score)` triples, keeping
    /// first-seen order. Every cell must be present exactly once.
    pub fn from_triples<'a>(triples: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> Result<Self> {
        let mut datasets: Vec<String> = Vec::new();
        let mut classifiers: Vec<String> = Vec::new();
        let mut cells = BTreeMap::new();
        for (d, c, v) in triples {
            let di = position_or_push(&mut datasets, d);
            let ci = position_or_push(&mut classifiers, c);
            if cells.insert((di, ci), v).is_some() {
                return Err(Error::ScoreMatrix(format!("duplicate cell ({d}, {c})")));
            }
        }
        let mut values = Array2::from_elem((datasets.len(), classifiers.len()), f64::NAN);
        for di in 0..datasets.len() {
            for ci in 0..classifiers.len() {
                values[[di, ci]] = *cells.get(&(di, ci)).ok_or_else(|| {
                    Error::ScoreMatrix(format!("missing cell ({}, {})", datasets[di], classifiers[ci]))
                })?;
            }
        }
        Self::new(datasets, classifiers, values)
    }

    pub fn from_results(results: &[CvResult]) -> Result<Self> {
        Self::from_triples(
            results
                .iter()
                .filter(|r| !r.all_failed())
                .map(|r| (r.dataset.as_str(), r.classifier.as_str(), r.mean_gmean)),
        )
    }

    /// Reads a results CSV; only the `dataset`, `classifier` and `mean_gmean`
    /// columns are used.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let bad = |e: csv::Error| Error::ScoreMatrix(e.to_string());
        let headers = reader.headers().map_err(bad)?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::ScoreMatrix(format!("missing column {name:?}")))
        };
        let (d, c, g) = (col("dataset")?, col("classifier")?, col("mean_gmean")?);
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(bad)?;
            let score: f64 = record[g].parse().map_err(|_| {
                Error::ScoreMatrix(format!("row {}: bad mean_gmean {:?}", line + 1, &record[g]))
            })?;
            rows.push((record[d].to_string(), record[c].to_string(), score));
        }
        Self::from_triples(rows.iter().map(|(d, c, v)| (d.as_str(), c.as_str(), *v)))
    }
}

fn position_or_push(names: &mut Vec<String>, name: &str) -> usize {
    names.iter().position(|n| n == name).unwrap_or_else(|| {
        names.push(name.to_string());
        names.len() - 1
    })
}

/// Mean of each classifier's scores over datasets.
pub fn mgmean(scores: &ScoreMatrix) -> Result<Array1<f64>> {
    scores
        .values
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::ScoreMatrix("no datasets".into()))
}

/// Mean over datasets of `100 * score / best score on that dataset`.
pub fn pmg(scores: &ScoreMatrix) -> Result<Array1<f64>> {
    let mut total = Array1::<f64>::zeros(scores.classifiers.len());
    for (row, name) in scores.values.rows().into_iter().zip(&scores.datasets) {
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(best > 0.0) {
            return Err(Error::ScoreMatrix(format!("dataset {name} has no positive score")));
        }
        total += &row.mapv(|v| 100.0 * v / best);
    }
    let n = scores.datasets.len();
    if n == 0 {
        return Err(Error::ScoreMatrix("no datasets".into()));
    }
    Ok(total / n as f64)
}

/// Ranks within one row: 1 for the highest score, tied scores share the mean
/// of the ranks they span.
pub fn rank_row(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; scores.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1 ..= end.
        let shared = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = shared;
        }
        start = end;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanReport {
    pub classifiers: Vec<String>,
    pub avg_ranks: Vec<f64>,
    pub chi_sq: f64,
    /// Iman-Davenport statistic; `+inf` when `chi_sq >= N (k - 1)`.
    pub f_stat: f64,
    pub df1: f64,
    pub df2: f64,
    pub p_value: f64,
    pub n_datasets: usize,
    pub n_classifiers: usize,
    /// Set when the F statistic is infinite.
    pub degenerate: bool,
}

pub fn friedman_test(scores: &ScoreMatrix) -> Result<FriedmanReport> {
    let (n, k) = scores.values.dim();
    check_friedman_shape(n, k)?;
    let mut sums = vec![0.0; k];
    for row in scores.values.rows() {
        for (s, r) in sums.iter_mut().zip(rank_row(&row.to_vec())) {
            *s += r;
        }
    }
    let avg: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    friedman_from_ranks(scores.classifiers.clone(), &avg, n)
}

fn check_friedman_shape(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::ScoreMatrix(format!("need ≥ 2 classifiers, got {k}")));
    }
    if n < 2 {
        return Err(Error::ScoreMatrix(format!("need ≥ 2 datasets, got {n}")));
    }
    Ok(())
}

/// Friedman statistic and Iman-Davenport F from average ranks over `n` datasets.
pub fn friedman_from_ranks(classifiers: Vec<String>, avg_ranks: &[f64], n: usize) -> Result<FriedmanReport> {
    let k = avg_ranks.len();
    check_friedman_shape(n, k)?;
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    let chi_sq = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    let df1 = kf - 1.0;
    let df2 = (kf - 1.0) * (nf - 1.0);
    let denom = nf * (kf - 1.0) - chi_sq;
    let degenerate = denom <= 0.0;
    let f_stat = if degenerate {
        f64::INFINITY
    } else {
        (nf - 1.0) * chi_sq / denom
    };
    Ok(FriedmanReport {
        classifiers,
        avg_ranks: avg_ranks.to_vec(),
        chi_sq,
        f_stat,
        df1,
        df2,
        p_value: f_survival(f_stat, df1, df2),
        n_datasets: n,
        n_classifiers: k,
        degenerate,
    })
}

/// Upper tail `P(F > f)` of the F distribution, through the regularized
/// incomplete beta function so tiny p-values keep their relative accuracy.
pub fn f_survival(f: f64, df1: f64, df2: f64) -> f64 {
    if f.is_infinite() {
        return 0.0;
    }
    if f <= 0.0 {
        return 1.0;
    }
    statrs::function::beta::beta_reg(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f))
}

/// `dataset,classifier,mean_gmean,std_gmean,mean_sv_pct,failed_folds`
pub fn results_csv(results: &[CvResult]) -> String {
    let mut out = String::from("dataset,classifier,mean_gmean,std_gmean,mean_sv_pct,failed_folds\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            csv_field(&r.dataset),
            csv_field(&r.classifier),
            fixed(r.mean_gmean),
            fixed(r.std_gmean),
            fixed(r.mean_sv_pct),
            r.n_failed()
        );
    }
    out
}

/// One line per (dataset, classifier, run, fold).
pub fn folds_csv(results: &[CvResult]) -> String {
    let mut out = String::from(
        "dataset,classifier,run,fold,chosen_nu,validation_gmean,test_gmean,sv_pct,recall_only,error\n",
    );
    for r in results {
        for f in &r.folds {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                csv_field(&r.dataset),
                csv_field(&r.classifier),
                f.run,
                f.fold,
                f.chosen_nu.map(|v| v.to_string()).unwrap_or_default(),
                fixed(f.validation_gmean),
                fixed(f.test_gmean),
                fixed(f.sv_pct),
                f.recall_only,
                csv_field(f.error.as_deref().unwrap_or(""))
            );
        }
    }
    out
}

/// `classifier,avg_rank,mgmean,pmg`
pub fn ranks_csv(scores: &ScoreMatrix, report: &FriedmanReport) -> Result<String> {
    let mg = mgmean(scores)?;
    let pm = pmg(scores)?;
    let mut out = String::from("classifier,avg_rank,mgmean,pmg\n");
    for (i, name) in report.classifiers.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            csv_field(name),
            fixed(report.avg_ranks[i]),
            fixed(mg[i]),
            fixed(pm[i])
        );
    }
    Ok(out)
}

/// `chi_sq,f_stat,p_value,df1,df2,n_datasets,n_classifiers`
pub fn friedman_csv(report: &FriedmanReport) -> String {
    format!(
        "chi_sq,f_stat,p_value,df1,df2,n_datasets,n_classifiers\n{},{},{:e},{},{},{},{}\n",
        fixed(report.chi_sq),
        fixed(report.f_stat),
        report.p_value,
        report.df1,
        report.df2,
        report.n_datasets,
        report.n_classifiers
    )
}

fn fixed(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        v.to_string()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
