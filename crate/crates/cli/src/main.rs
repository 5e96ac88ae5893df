//! Command-line front end: point estimates, the full diagnostics report,
//! Monte Carlo studies over the named designs, and bias-function histograms.
//!
//! stdout carries machine-readable JSON only; human diagnostics go to stderr.
//! Exit codes: 0 success, 2 input/validation problem, 3 estimation failure.

mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ate_toolkit::dataio::{self, synth};
use ate_toolkit::diagnostics;
use ate_toolkit::estimators;
use ate_toolkit::linalg;
use ate_toolkit::model::{Estimand, Method, RunConfig};
use ate_toolkit::rng::derive_seed;
use ate_toolkit::{Dataset, Error};

#[derive(Parser)]
#[command(
    name = "ate",
    about = "Average treatment effect estimators with credibility diagnostics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Point estimates for the requested methods
    Estimate(EstimateArgs),
    /// Full diagnostics report (estimates, s.e., trimming, half-sample bias,
    /// covariate splits, bias summary, overlap bounds)
    Report(ReportArgs),
    /// Monte Carlo study of the estimators on a named synthetic design
    Simulate(SimulateArgs),
    /// Bias-function histogram for a dataset
    BiasHist(BiasHistArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row
    #[arg(long)]
    data: PathBuf,
    /// Outcome column name
    #[arg(long, default_value = "")]
    outcome: String,
    /// Treatment column name (values 0/1)
    #[arg(long, default_value = "")]
    treatment: String,
    /// Columns to exclude from the covariates (comma separated)
    #[arg(long, value_delimiter = ',', default_value = "")]
    drop: Vec<String>,
    /// Interpret the file as the heart-catheterization study export and use
    /// the shipped column manifest instead of generic CSV rules
    #[arg(long, default_value_t = false)]
    rhc: bool,
}

#[derive(Args)]
struct CommonEstArgs {
    /// Methods to run (comma separated): naive,ols,dse,arbe,dre,dmle,ipw
    #[arg(long, value_delimiter = ',', default_value = "naive")]
    methods: Vec<String>,
    /// Target estimand
    #[arg(long, default_value = "att")]
    estimand: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cross-fitting folds
    #[arg(long, default_value_t = 5)]
    dml_folds: usize,
    /// Propensity clipping margin
    #[arg(long, default_value_t = 0.01)]
    clip_eta: f64,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonEstArgs,
    /// Bootstrap replicates for standard errors (0 = skip, se reported as 0)
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    common: CommonEstArgs,
    /// Report JSON output path
    #[arg(long)]
    out: PathBuf,
    /// Optional histogram output (.svg renders a chart, anything else CSV)
    #[arg(long)]
    hist: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    #[arg(long, default_value_t = 200)]
    half_sample_reps: usize,
    #[arg(long, default_value_t = 0.1)]
    trim_alpha: f64,
    /// Forest size for the bias summary
    #[arg(long, default_value_t = 500)]
    trees: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// randomized | confounded_linear | poor_overlap | product_sparse
    #[arg(long)]
    dgp: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "naive")]
    methods: Vec<String>,
    #[arg(long, default_value = "ate")]
    estimand: String,
    /// Bootstrap replicates per repetition for coverage (0 = no coverage)
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    #[arg(long, default_value_t = 5)]
    dml_folds: usize,
}

#[derive(Args)]
struct BiasHistArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long, default_value_t = 500)]
    trees: usize,
    /// Output path (.svg renders a chart, anything else CSV)
    #[arg(long)]
    out: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NonBinaryTreatment { .. }
        | Error::NonFiniteValue { .. }
        | Error::TooFewRows { .. }
        | Error::FileNotFound { .. }
        | Error::MissingColumn { .. }
        | Error::ParseError { .. }
        | Error::SchemaMismatch { .. }
        | Error::UnknownDgp { .. }
        | Error::InvalidInput(_)
        | Error::Io(_) => 2,
        _ => 3,
    }
}

fn parse_estimand(s: &str) -> Result<Estimand, Error> {
    match s.to_ascii_lowercase().as_str() {
        "ate" => Ok(Estimand::Ate),
        "att" => Ok(Estimand::Att),
        other => Err(Error::InvalidInput(format!(
            "estimand must be ate or att, got {other}"
        ))),
    }
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, Error> {
    let mut out = Vec::new();
    for name in names {
        if name.is_empty() {
            continue;
        }
        out.push(name.parse::<Method>()?);
    }
    if out.is_empty() {
        return Err(Error::InvalidInput("no methods given".into()));
    }
    Ok(out)
}

fn load_data(args: &DataArgs) -> Result<Dataset, Error> {
    if args.rhc {
        return dataio::rhc_prepare(&args.data);
    }
    if args.outcome.is_empty() || args.treatment.is_empty() {
        return Err(Error::InvalidInput(
            "--outcome and --treatment are required (or pass --rhc)".into(),
        ));
    }
    let drop: Vec<String> = args.drop.iter().filter(|s| !s.is_empty()).cloned().collect();
    dataio::load_csv(&args.data, &args.outcome, &args.treatment, &drop)
}

fn setup_threads() {
    if let Ok(v) = std::env::var("ATE_TOOLKIT_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), Error> {
    let ds = load_data(&args.data)?;
    let estimand = parse_estimand(&args.common.estimand)?;
    let methods = parse_methods(&args.common.methods)?;
    let mut cfg = RunConfig::default();
    cfg.seed = args.common.seed;
    cfg.dml_folds = args.common.dml_folds;
    cfg.clip_eta = args.common.clip_eta;
    eprintln!(
        "config: {}",
        serde_json::to_string(&cfg).expect("config serializes")
    );

    let mut estimates = Vec::new();
    for method in methods {
        let seed = derive_seed(cfg.seed, method.stream_tag());
        let mut est = estimators::estimate(method, &ds, &cfg, seed, estimand)?;
        if args.bootstrap > 0 {
            est.se = diagnostics::bootstrap_se(method, &ds, &cfg, args.bootstrap, seed, estimand)?;
        }
        estimates.push(est);
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&estimates).expect("estimates serialize")
    );
    Ok(())
}

fn write_histogram(
    path: &PathBuf,
    csv: String,
    bins: &[diagnostics::HistogramBin],
    title: &str,
) -> Result<(), Error> {
    let is_svg = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("svg"))
        .unwrap_or(false);
    let contents = if is_svg {
        svg::histogram_svg(bins, title)
    } else {
        csv
    };
    std::fs::write(path, contents)?;
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), Error> {
    let ds = load_data(&args.data)?;
    let estimand = parse_estimand(&args.common.estimand)?;
    let methods = parse_methods(&args.common.methods)?;
    let mut cfg = RunConfig::default();
    cfg.seed = args.common.seed;
    cfg.dml_folds = args.common.dml_folds;
    cfg.clip_eta = args.common.clip_eta;
    cfg.bootstrap_reps = args.bootstrap;
    cfg.half_sample_reps = args.half_sample_reps;
    cfg.trim_alpha = args.trim_alpha;
    cfg.forest.n_trees = args.trees;

    let report = diagnostics::build_report(&ds, &methods, &cfg, cfg.seed, estimand)?;
    std::fs::write(&args.out, report.to_json_string())?;
    if let Some(hist) = &args.hist {
        match &report.bias_summary {
            Some(section) => write_histogram(
                hist,
                diagnostics::histogram_csv(&section.summary),
                &section.summary.histogram,
                "bias function (outcome sd units)",
            )?,
            None => eprintln!("bias summary unavailable; histogram not written"),
        }
    }
    for row in &report.rows {
        for note in &row.notes {
            eprintln!("{}: {note}", row.method.as_str());
        }
    }
    println!(
        "{}",
        serde_json::json!({
            "out": args.out.display().to_string(),
            "rows": report.rows.len(),
            "failed_cells": report.meta.failed_cells,
        })
    );
    if report.any_row_succeeded() {
        Ok(())
    } else {
        Err(Error::InvalidInput("every report row failed".into()))
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let estimand = parse_estimand(&args.estimand)?;
    let methods = parse_methods(&args.methods)?;
    let spec = synth::preset(&args.dgp, args.n)?;
    let mut cfg = RunConfig::default();
    cfg.seed = args.seed;
    cfg.dml_folds = args.dml_folds;

    let mut per_method = Vec::new();
    for method in &methods {
        let mut errors = Vec::new();
        let mut covered = 0usize;
        let mut cover_total = 0usize;
        let mut failures = 0usize;
        for rep in 0..args.reps {
            let sample_seed = derive_seed(args.seed, rep as u64);
            let s = synth::generate_synthetic(&spec, sample_seed)?;
            let truth = match estimand {
                Estimand::Att => s.tau_t_true,
                _ => s.tau_true,
            };
            let est_seed = derive_seed(sample_seed, method.stream_tag());
            match estimators::estimate(*method, &s.dataset, &cfg, est_seed, estimand) {
                Ok(est) => {
                    errors.push(est.value - truth);
                    if args.bootstrap > 0 {
                        if let Ok(se) = diagnostics::bootstrap_se(
                            *method,
                            &s.dataset,
                            &cfg,
                            args.bootstrap,
                            est_seed,
                            estimand,
                        ) {
                            cover_total += 1;
                            if (est.value - truth).abs() <= 1.96 * se {
                                covered += 1;
                            }
                        }
                    }
                }
                Err(_) => failures += 1,
            }
        }
        let bias = linalg::mean(&errors);
        let sd = linalg::sample_sd(&errors);
        let rmse =
            (errors.iter().map(|e| e * e).sum::<f64>() / errors.len().max(1) as f64).sqrt();
        per_method.push(serde_json::json!({
            "method": method.as_str(),
            "bias": bias,
            "sd": sd,
            "rmse": rmse,
            "coverage": if cover_total > 0 {
                serde_json::json!(covered as f64 / cover_total as f64)
            } else {
                serde_json::Value::Null
            },
            "failures": failures,
            "mc_se": sd / (errors.len().max(1) as f64).sqrt(),
        }));
    }

    // oracle variance-bound comparison for the design itself
    let probe = synth::generate_synthetic(&spec, derive_seed(args.seed, 0xb0))?;
    let nuis = ate_toolkit::NuisanceEstimates::new(
        probe.e_true.clone(),
        probe.mu0_true.clone(),
        probe.mu1_true.clone(),
        probe.dataset.n_treated(),
        probe.dataset.n(),
        cfg.clip_eta,
    )
    .ok()
    .and_then(|n| {
        let s2 = vec![spec.noise_sd * spec.noise_sd; probe.dataset.n()];
        n.with_variances(s2.clone(), s2).ok()
    });
    let bound_ratio = nuis.and_then(|nuis| {
        let tau = estimators::solve_score_ate(&probe.dataset, &nuis);
        let ate = estimators::variance_bound(&probe.dataset, &nuis, Estimand::Ate, tau).ok()?;
        let tau_w =
            estimators::weighted_estimate(&probe.dataset, &nuis, Estimand::OverlapWeighted)
                .ok()?
                .value;
        let ow =
            estimators::variance_bound(&probe.dataset, &nuis, Estimand::OverlapWeighted, tau_w)
                .ok()?;
        Some(ow.value / ate.value)
    });

    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "dgp": args.dgp,
            "n": args.n,
            "reps": args.reps,
            "seed": args.seed,
            "estimand": estimand.label(),
            "config": cfg,
            "per_method": per_method,
            "overlap_bound_ratio": bound_ratio,
        }))
        .expect("summary serializes")
    );
    Ok(())
}

fn cmd_bias_hist(args: &BiasHistArgs) -> Result<(), Error> {
    let ds = load_data(&args.data)?;
    let forest_cfg = ate_toolkit::model::ForestConfig {
        n_trees: args.trees,
        ..Default::default()
    };
    let summary = diagnostics::bias_function_summary(&ds, &forest_cfg, args.seed, args.bins)?;
    write_histogram(
        &args.out,
        diagnostics::histogram_csv(&summary),
        &summary.histogram,
        "bias function (outcome sd units)",
    )?;
    println!(
        "{}",
        serde_json::json!({
            "out": args.out.display().to_string(),
            "bins": summary.histogram.len(),
            "mean": summary.mean,
            "degenerate_outcome": summary.degenerate_outcome,
        })
    );
    Ok(())
}

fn main() -> ExitCode {
    setup_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(args) => cmd_estimate(args),
        Command::Report(args) => cmd_report(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::BiasHist(args) => cmd_bias_hist(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
