//! Benchmark configuration files.
//!
//! A config is a TOML document with these keys. Relative dataset paths are
//! resolved against the directory holding the config file.
//!
//! ```toml
//! output_dir = "results"          # required
//!
//! [protocol]
//! n_folds = 5                     # default 5
//! n_runs = 5                      # default 5
//! seed = 0                        # required
//! workers = 0                     # default 0 = available parallelism
//!
//! [[datasets]]                    # one or more
//! path = "iris.csv"               # required
//! target_label = "setosa"         # required
//! label_column = "species"        # header name or 0-based index, default "last"
//! name = "Iris"                   # default: file stem
//! has_header = true               # default true
//!
//! [[classifiers]]                 # one or more
//! family = "lmkad"                # ocsvm | mkad | lmkad
//! kernels = "gpl"                 # preset (g, p, l, gpl, gpp) or list such as
//!                                 # "gauss:auto,poly:q=2,linear"
//! nu_grid = [0.05, 0.1, 0.2]      # required, non-empty
//! gating = "sigmoid"              # softmax | sigmoid | rbf, default sigmoid
//! label = "LMKAD(S_gpl)"          # default: generated from family and kernels
//! learning_rate = 0.1
//! lr_decay = 0.95
//! outer_tol = 1e-4
//! max_outer = 100
//! warm_start = true
//! tol = 1e-6                      # dual solver stopping gap
//! rho = "margin-mean"             # margin-mean | mean-all-train
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lmkad::dataset::{load_csv, LabelColumn};
use lmkad::{ClassifierConfig, Dataset, Family, GatingKind, GridEntry, KernelSetting, LmkadConfig, Protocol, RhoRule};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub protocol: ProtocolConfig,
    pub datasets: Vec<DatasetConfig>,
    pub classifiers: Vec<ClassifierEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "five")]
    pub n_folds: usize,
    #[serde(default = "five")]
    pub n_runs: usize,
    pub seed: u64,
    #[serde(default)]
    pub workers: usize,
}

fn five() -> usize {
    5
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub target_label: String,
    #[serde(default = "LabelColumn::last")]
    pub label_column: LabelColumn,
    pub name: Option<String>,
    #[serde(default = "yes")]
    pub has_header: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierEntry {
    pub family: String,
    pub kernels: String,
    pub nu_grid: Vec<f64>,
    pub gating: Option<String>,
    pub label: Option<String>,
    pub learning_rate: Option<f64>,
    pub lr_decay: Option<f64>,
    pub outer_tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub warm_start: Option<bool>,
    pub tol: Option<f64>,
    pub rho: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let config: Self = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        if config.datasets.is_empty() {
            bail!("config needs at least one [[datasets]] entry");
        }
        if config.classifiers.is_empty() {
            bail!("config needs at least one [[classifiers]] entry");
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((config, base))
    }

    pub fn protocol(&self) -> Protocol {
        Protocol {
            n_folds: self.protocol.n_folds,
            n_runs: self.protocol.n_runs,
            seed: self.protocol.seed,
        }
    }

    pub fn load_datasets(&self, base: &Path) -> Result<Vec<Dataset>> {
        self.datasets
            .iter()
            .map(|d| {
                let path = base.join(&d.path);
                let data = load_csv(&path, &d.label_column, &d.target_label, d.has_header)?;
                Ok(match &d.name {
                    Some(name) => data.with_name(name),
                    None => data,
                })
            })
            .collect()
    }

    pub fn grid(&self) -> Result<Vec<GridEntry>> {
        self.classifiers.iter().map(ClassifierEntry::to_grid_entry).collect()
    }
}

impl ClassifierEntry {
    fn to_grid_entry(&self) -> Result<GridEntry> {
        let family: Family = self.family.parse()?;
        let kernels = KernelSetting::parse_list(&self.kernels)?;
        let mut classifier = ClassifierConfig::new(family, kernels);
        let defaults = LmkadConfig::default();
        classifier.lmkad = LmkadConfig {
            gating: self.gating.as_deref().map(str::parse::<GatingKind>).transpose()?.unwrap_or(defaults.gating),
            learning_rate: self.learning_rate.unwrap_or(defaults.learning_rate),
            lr_decay: self.lr_decay.unwrap_or(defaults.lr_decay),
            outer_tol: self.outer_tol.unwrap_or(defaults.outer_tol),
            max_outer: self.max_outer.unwrap_or(defaults.max_outer),
            warm_start: self.warm_start.unwrap_or(defaults.warm_start),
            ..defaults
        };
        if let Some(tol) = self.tol {
            classifier.solver.tol = tol;
        }
        if let Some(rho) = &self.rho {
            classifier.solver.rho = rho.parse::<RhoRule>()?;
        }
        classifier.lmkad.solver = classifier.solver;
        classifier.label = self.label.clone();
        classifier.validate()?;
        Ok(GridEntry {
            classifier,
            nu_grid: self.nu_grid.clone(),
        })
    }
}
