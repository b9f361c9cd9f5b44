mod config;

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lmkad::dataset::{load_csv, read_features, LabelColumn};
use lmkad::evaluation::{folds_csv, friedman_csv, friedman_test, ranks_csv, results_csv, run_benchmark};
use lmkad::persist::{load_model, save_model};
use lmkad::{
    AnomalyModel, ClassifierConfig, Family, FriedmanReport, GatingKind, KernelSetting, LmkadConfig, RhoRule,
    ScoreMatrix, SolverOptions,
};

use crate::config::ExperimentConfig;

/// One-class SVM anomaly detection with single, multiple and localized
/// multiple kernels.
#[derive(Parser)]
#[command(name = "lmkad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model on the target class of a labeled CSV.
    Fit(FitArgs),
    /// Score rows of a CSV with a saved model.
    Predict(PredictArgs),
    /// Run repeated cross-validation over every dataset and classifier in a config file.
    Benchmark(BenchmarkArgs),
    /// Friedman / Iman-Davenport test on a dataset x classifier score table.
    Stats(StatsArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Labeled CSV file.
    #[arg(long)]
    data: PathBuf,
    /// Label value that marks the target class.
    #[arg(long)]
    target_label: String,
    /// Label column: header name, 0-based index, or `last`.
    #[arg(long, default_value = "last")]
    label_column: LabelColumn,
    /// The file has no header row.
    #[arg(long)]
    no_header: bool,
    #[arg(long, value_parser = ["ocsvm", "mkad", "lmkad"])]
    family: String,
    /// Kernel preset (g, p, l, gpl, gpp) or a list such as `gauss:auto,poly:q=2`.
    /// Defaults to `g` for ocsvm and `gpl` otherwise.
    #[arg(long)]
    kernels: Option<String>,
    #[arg(long, default_value = "sigmoid", value_parser = ["softmax", "sigmoid", "rbf"])]
    gating: String,
    #[arg(long, default_value_t = 0.1)]
    nu: f64,
    #[arg(long, env = "LMKAD_SEED", default_value_t = 0)]
    seed: u64,
    /// Where to write the model file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args)]
struct Knobs {
    /// Initial gating step size.
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.95)]
    lr_decay: f64,
    #[arg(long, default_value_t = 1e-4)]
    outer_tol: f64,
    #[arg(long, default_value_t = 100)]
    max_outer: usize,
    /// Solve each dual from scratch instead of from the previous multipliers.
    #[arg(long)]
    no_warm_start: bool,
    /// Stopping gap of the dual solver.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value = "margin-mean", value_parser = ["margin-mean", "mean-all-train"])]
    rho: String,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV of feature rows.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_header: bool,
    /// Drop this column before scoring (header name, 0-based index, or `last`).
    #[arg(long)]
    label_column: Option<LabelColumn>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// TOML experiment config.
    config: PathBuf,
    /// Worker threads; overrides the config, 0 picks the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct StatsArgs {
    /// CSV with columns dataset, classifier, mean_gmean.
    results: PathBuf,
    /// Directory for ranks.csv and friedman.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => fit(args),
        Command::Predict(args) => predict(args),
        Command::Benchmark(args) => benchmark(args),
        Command::Stats(args) => stats(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

fn fit(args: FitArgs) -> Result<()> {
    let family: Family = args.family.parse()?;
    let kernels = match (&args.kernels, family) {
        (Some(k), _) => KernelSetting::parse_list(k)?,
        (None, Family::Ocsvm) => vec![KernelSetting::GaussianAuto],
        (None, _) => KernelSetting::parse_list("gpl")?,
    };
    let data = load_csv(&args.data, &args.label_column, &args.target_label, !args.no_header)?;
    let mut classifier = ClassifierConfig::new(family, kernels).with_gating(args.gating.parse::<GatingKind>()?);
    let k = &args.knobs;
    classifier.solver = SolverOptions {
        tol: k.tol,
        rho: k.rho.parse::<RhoRule>()?,
        ..SolverOptions::default()
    };
    classifier.lmkad = LmkadConfig {
        learning_rate: k.learning_rate,
        lr_decay: k.lr_decay,
        outer_tol: k.outer_tol,
        max_outer: k.max_outer,
        warm_start: !k.no_warm_start,
        solver: classifier.solver,
        ..classifier.lmkad
    };

    let model = classifier.train(data.targets().view(), args.nu, args.seed)?;
    save_model(&args.out, &model)?;

    let r = model.report();
    println!("model        {classifier}");
    println!("nu           {}", args.nu);
    println!("train rows   {}", r.n_train);
    println!("support vecs {} ({:.2}%)", r.n_sv, r.sv_percent());
    println!(
        "outer iters  {}{}",
        r.outer_iterations,
        if r.outer_converged { "" } else { " (not converged)" }
    );
    if let (Some(first), Some(last)) = (r.objective_trace.first(), r.objective_trace.last()) {
        println!("objective    {first:.6e} -> {last:.6e}");
    }
    println!(
        "dual solver  {} pair updates, final gap {:.3e}{}",
        r.solver_iterations,
        r.final_gap,
        if r.solver_converged { "" } else { " (hit iteration cap)" }
    );
    println!("wrote        {}", args.out.display());
    Ok(())
}

fn predict(args: PredictArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let x = read_features(&args.data, !args.no_header, args.label_column.as_ref())?;
    let mut out = String::from("row,decision,label\n");
    if x.nrows() > 0 {
        let values = model.decision_values(x.view())?;
        for (i, f) in values.iter().enumerate() {
            writeln!(out, "{i},{f:.10},{}", lmkad::models::label_of(*f))?;
        }
    }
    match &args.out {
        Some(path) => write_file(path, &out),
        None => std::io::stdout()
            .write_all(out.as_bytes())
            .context("cannot write to stdout"),
    }
}

fn benchmark(args: BenchmarkArgs) -> Result<()> {
    let (config, base) = ExperimentConfig::load(&args.config)?;
    let datasets = config.load_datasets(&base)?;
    let entries = config.grid()?;
    let workers = args.workers.unwrap_or(config.protocol.workers);
    let results = run_benchmark(&datasets, &entries, config.protocol(), workers)?;

    let out_dir = base.join(&config.output_dir);
    fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    write_file(&out_dir.join("results.csv"), &results_csv(&results))?;
    write_file(&out_dir.join("folds.csv"), &folds_csv(&results))?;

    for r in &results {
        println!(
            "{:<16} {:<16} gmean {:.4} +- {:.4}  sv {:6.2}%{}",
            r.dataset,
            r.classifier,
            r.mean_gmean,
            r.std_gmean,
            r.mean_sv_pct,
            match r.n_failed() {
                0 => String::new(),
                n => format!("  ({n} failed folds)"),
            }
        );
    }
    for r in results.iter().filter(|r| r.all_failed()) {
        if let Some(e) = r.folds.iter().find_map(|f| f.error.as_deref()) {
            eprintln!("warning: {} / {} failed: {e}", r.dataset, r.classifier);
        }
    }
    if results.iter().all(|r| r.all_failed()) {
        bail!("every benchmark cell failed");
    }

    let scored: Vec<_> = results.iter().filter(|r| !r.all_failed()).cloned().collect();
    match ScoreMatrix::from_results(&scored).and_then(|m| friedman_test(&m).map(|f| (m, f))) {
        Ok((matrix, report)) => {
            write_file(&out_dir.join("ranks.csv"), &ranks_csv(&matrix, &report)?)?;
            write_file(&out_dir.join("friedman.csv"), &friedman_csv(&report))?;
            print_friedman(&report);
        }
        Err(e) => eprintln!("note: ranks and Friedman test skipped: {e}"),
    }
    println!("wrote        {}", out_dir.display());
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let text = fs::read_to_string(&args.results).with_context(|| format!("cannot read {}", args.results.display()))?;
    let matrix = ScoreMatrix::from_csv(&text).with_context(|| format!("malformed score table {}", args.results.display()))?;
    let report = friedman_test(&matrix)?;
    let ranks = ranks_csv(&matrix, &report)?;
    print!("{ranks}");
    print_friedman(&report);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        write_file(&dir.join("ranks.csv"), &ranks)?;
        write_file(&dir.join("friedman.csv"), &friedman_csv(&report))?;
    }
    Ok(())
}

/// The error chain joined by `: `, skipping links already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let part = cause.to_string();
        if !text.contains(&part) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&part);
        }
    }
    text
}

fn print_friedman(r: &FriedmanReport) {
    println!(
        "friedman     chi2 = {:.4}, F = {:.4} on ({}, {}) df, p = {:.4e} ({} datasets, {} classifiers){}",
        r.chi_sq,
        r.f_stat,
        r.df1,
        r.df2,
        r.p_value,
        r.n_datasets,
        r.n_classifiers,
        if r.degenerate { ", all ranks tied" } else { "" }
    );
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}
