use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use suffreg::compress::{
    bin_features, compress_between_cluster, compress_panel, compress_suffstats, PanelLayout,
};
use suffreg::estimate::fit;
use suffreg::io::{
    fit_to_json, gen_panel_with, read_csv_full, read_suffstats, summarize, write_panel_csv, write_suffstats,
    write_suffstats_to, JobConfig, Noise,
};
use suffreg::logistic::{compress_logistic, fit_logistic, LogisticOptions, LogisticSuffStats};
use suffreg::{ClusterStrategy, CovarianceSpec, Error, FitResult, ObservationSet, Result, SuffStatsTable, WeightKind};

#[derive(Parser)]
#[command(name = "suffreg", version, about = "Regression on compressed sufficient statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a CSV file into a sufficient-statistics CSV file.
    Compress(CompressArgs),
    /// Fit a regression and print the result as JSON.
    Fit(FitArgs),
    /// Print counts and weighted means of a sufficient-statistics file.
    Summarize {
        #[arg(long)]
        input: PathBuf,
    },
    /// Time compressed fits against the row-level oracle.
    Bench(BenchArgs),
    /// Write a synthetic balanced panel as CSV.
    GenPanel(GenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CovArg {
    Ols,
    Hc,
    Cluster,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Within,
    Between,
    StaticDynamic,
    Balanced,
}

impl From<StrategyArg> for ClusterStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Within => ClusterStrategy::WithinCluster,
            StrategyArg::Between => ClusterStrategy::BetweenCluster,
            StrategyArg::StaticDynamic => ClusterStrategy::StaticDynamic,
            StrategyArg::Balanced => ClusterStrategy::BalancedPanel,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightKindArg {
    Freq,
    Analytic,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Family {
    Linear,
    Logistic,
}

fn covariance_spec(cov: CovArg, strategy: StrategyArg) -> CovarianceSpec {
    match cov {
        CovArg::Ols => CovarianceSpec::Homoskedastic,
        CovArg::Hc => CovarianceSpec::HeteroskedasticEhw,
        CovArg::Cluster => CovarianceSpec::ClusterRobust(strategy.into()),
    }
}

/// Column roles shared by `compress` and `fit`.
#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated feature columns.
    #[arg(long, value_delimiter = ',')]
    features: Vec<String>,
    /// Comma-separated outcome columns.
    #[arg(long, value_delimiter = ',')]
    outcomes: Vec<String>,
    /// Observation weight column.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long, value_enum, default_value = "analytic")]
    weight_kind: WeightKindArg,
    #[arg(long)]
    cluster_col: Option<String>,
    /// Orders rows inside each cluster.
    #[arg(long)]
    order_col: Option<String>,
    /// Replace a feature with quantile-bin dummies, as `column:k`. Repeatable.
    #[arg(long = "bin", value_parser = parse_bin)]
    bins: Vec<(String, usize)>,
}

#[derive(Args)]
struct CompressArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Key groups by the cluster column as well.
    #[arg(long)]
    by_cluster: bool,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value = "ols")]
    cov: CovArg,
    #[arg(long, value_enum, default_value = "within")]
    cluster_strategy: StrategyArg,
    /// Static columns for the static-dynamic and balanced strategies.
    #[arg(long, value_delimiter = ',')]
    static_cols: Vec<String>,
    /// Static columns to interact with every dynamic column.
    #[arg(long, value_delimiter = ',')]
    interactions: Vec<String>,
    /// The input is a sufficient-statistics file written by `compress`.
    #[arg(long)]
    precompressed: bool,
    #[arg(long)]
    no_intercept: bool,
    /// Leave `timing_ms` out of the output.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, value_enum, default_value = "linear")]
    family: Family,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 40_000)]
    nu: usize,
    #[arg(long, default_value_t = 25)]
    t: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, value_enum, default_value = "hc")]
    cov: CovArg,
    #[arg(long, value_enum, default_value = "balanced")]
    cluster_strategy: StrategyArg,
    #[arg(long, default_value_t = 2)]
    p_static: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    nu: usize,
    #[arg(long)]
    t: usize,
    #[arg(long, default_value_t = 2)]
    p_static: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Noise standard deviation grows with the static features.
    #[arg(long)]
    heteroskedastic: bool,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Where to write the generating coefficients as JSON.
    #[arg(long)]
    metadata: Option<PathBuf>,
}

fn parse_bin(s: &str) -> std::result::Result<(String, usize), String> {
    let (col, k) = s.rsplit_once(':').ok_or_else(|| format!("expected column:k, got `{s}`"))?;
    let k = k.parse::<usize>().map_err(|_| format!("`{k}` is not a bin count"))?;
    if col.is_empty() || k == 0 {
        return Err(format!("expected column:k with k ≥ 1, got `{s}`"));
    }
    Ok((col.to_owned(), k))
}

fn job_config(data: &DataArgs) -> JobConfig {
    let mut c = JobConfig::new(&data.input, data.features.clone(), data.outcomes.clone());
    c.weights = data.weights.clone().map(|w| {
        let kind = match data.weight_kind {
            WeightKindArg::Freq => WeightKind::Frequency,
            WeightKindArg::Analytic => WeightKind::Analytic,
        };
        (w, kind)
    });
    c.cluster = data.cluster_col.clone();
    c.order = data.order_col.clone();
    c.bins = data.bins.clone();
    c
}

/// Reads the raw rows and applies binning.
fn load(config: &JobConfig) -> Result<(ObservationSet, Option<Vec<f64>>)> {
    if config.outcomes.is_empty() {
        return Err(Error::InvalidArgument("--outcomes is required".into()));
    }
    let loaded = read_csv_full(&config.input, config)?;
    let mut obs = loaded.observations;
    for (col, k) in &config.bins {
        obs = bin_features(&obs, std::slice::from_ref(col), *k)?;
    }
    Ok((obs, loaded.order))
}

fn run_compress(args: CompressArgs) -> Result<()> {
    let config = job_config(&args.data);
    let (obs, _) = load(&config)?;
    if args.by_cluster && obs.clusters().is_none() {
        return Err(Error::MissingClusters);
    }
    let table = compress_suffstats(&obs, args.by_cluster)?;
    match &args.output {
        Some(path) => write_suffstats(path, &table),
        None => write_suffstats_to(std::io::stdout().lock(), &table),
    }
}

fn check_selection(table: &SuffStatsTable, data: &DataArgs) -> Result<()> {
    if !data.features.is_empty() && data.features.as_slice() != table.feature_names() {
        return Err(Error::SchemaMismatch(format!(
            "file has features {:?}, --features asked for {:?}",
            table.feature_names(),
            data.features
        )));
    }
    if !data.outcomes.is_empty() && data.outcomes.as_slice() != table.outcome_names() {
        return Err(Error::SchemaMismatch(format!(
            "file has outcomes {:?}, --outcomes asked for {:?}",
            table.outcome_names(),
            data.outcomes
        )));
    }
    Ok(())
}

fn fit_linear(args: &FitArgs, spec: CovarianceSpec) -> Result<FitResult> {
    let intercept = !args.no_intercept;
    if args.precompressed {
        let mut table = read_suffstats(&args.data.input)?;
        check_selection(&table, &args.data)?;
        if intercept {
            table = table.with_intercept();
        }
        return fit(&table, spec);
    }
    let config = job_config(&args.data);
    let (mut obs, order) = load(&config)?;
    if intercept {
        obs = obs.with_intercept();
    }
    match spec {
        CovarianceSpec::Homoskedastic | CovarianceSpec::HeteroskedasticEhw => {
            fit(&compress_suffstats(&obs, false)?, spec)
        }
        CovarianceSpec::ClusterRobust(strategy) => {
            if obs.clusters().is_none() {
                return Err(Error::MissingClusters);
            }
            match strategy {
                ClusterStrategy::WithinCluster => fit(&compress_suffstats(&obs, true)?, spec),
                ClusterStrategy::BetweenCluster => fit(&compress_between_cluster(&obs, order.as_deref())?, spec),
                ClusterStrategy::StaticDynamic | ClusterStrategy::BalancedPanel => {
                    if args.static_cols.is_empty() {
                        return Err(Error::InvalidArgument(
                            "--static-cols is required for this cluster strategy".into(),
                        ));
                    }
                    let mut static_cols = Vec::new();
                    if intercept {
                        static_cols.push("intercept".to_owned());
                    }
                    static_cols.extend(args.static_cols.iter().cloned());
                    let layout = PanelLayout::from_static(&obs, &static_cols, &args.interactions);
                    fit(&compress_panel(&obs, &layout, order.as_deref())?, spec)
                }
            }
        }
    }
}

fn fit_logit(args: &FitArgs) -> Result<FitResult> {
    let stats = if args.precompressed {
        let mut table = read_suffstats(&args.data.input)?;
        check_selection(&table, &args.data)?;
        if !args.no_intercept {
            table = table.with_intercept();
        }
        if table.o() != 1 {
            return Err(Error::InvalidArgument("logistic regression takes one outcome".into()));
        }
        LogisticSuffStats::from_parts(
            table.feature_names().to_vec(),
            table.outcome_names()[0].clone(),
            table.features().clone(),
            table.y_sum().column(0).into_owned(),
            table.count().to_vec(),
        )?
    } else {
        let (mut obs, _) = load(&job_config(&args.data))?;
        if !args.no_intercept {
            obs = obs.with_intercept();
        }
        compress_logistic(&obs)?
    };
    fit_logistic(&stats, LogisticOptions::default())
}

fn run_fit(args: FitArgs) -> Result<()> {
    let start = Instant::now();
    let result = match args.family {
        Family::Linear => fit_linear(&args, covariance_spec(args.cov, args.cluster_strategy))?,
        Family::Logistic => fit_logit(&args)?,
    };
    let timing = (!args.no_timing).then(|| start.elapsed().as_secs_f64() * 1e3);
    print_json(&fit_to_json(&result, timing))
}

fn run_summarize(input: PathBuf) -> Result<()> {
    print_json(&summarize(&read_suffstats(input)?))
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let report = suffreg::io::bench::run_bench(suffreg::io::bench::BenchConfig {
        users: args.nu,
        periods: args.t,
        p_static: args.p_static,
        reps: args.reps,
        covariance: covariance_spec(args.cov, args.cluster_strategy),
        seed: args.seed,
    })?;
    print_json(&report.to_json())
}

fn run_gen(args: GenArgs) -> Result<()> {
    let noise = if args.heteroskedastic {
        Noise::Heteroskedastic
    } else {
        Noise::Homoskedastic
    };
    let panel = gen_panel_with(args.nu, args.t, args.p_static, args.seed, noise)?;
    match &args.output {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            write_panel_csv(std::io::BufWriter::new(file), &panel)?;
        }
        None => write_panel_csv(std::io::stdout().lock(), &panel)?,
    }
    if let Some(path) = &args.metadata {
        let text = serde_json::to_string_pretty(&panel.metadata.to_json()).expect("JSON values serialize");
        std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn print_json(v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Compress(a) => run_compress(a),
        Command::Fit(a) => run_fit(a),
        Command::Summarize { input } => run_summarize(input),
        Command::Bench(a) => run_bench(a),
        Command::GenPanel(a) => run_gen(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
