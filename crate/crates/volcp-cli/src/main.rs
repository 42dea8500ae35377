//! Command-line front end for volatility change-point analysis.
//!
//! Five subcommands cover the pipeline: `simulate` (synthetic series with
//! known truth), `returns` (prices to log returns), `fit` (per-series
//! change-point filtering), `distance` (pairwise posterior distances at a
//! date), and `cluster` (average-linkage clustering of a distance matrix).
//! All outputs are plain files; floats are printed with 17 significant
//! digits and runs are deterministic given config, seed, and inputs, with
//! the effective configuration echoed to `config_used.json` next to every
//! output.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use volcp::cluster::{average_linkage, write_clusters_csv};
use volcp::config::RunConfig;
use volcp::filter::{Filter, FilterConfig, HazardModel, SummaryTarget};
use volcp::ingest::{MissingPolicy, PriceTable, ReturnsTable};
use volcp::metric::{pairwise, DissimilarityMatrix, SparsePmf};
use volcp::model::Hyperparams;
use volcp::report::{
    write_map_trace, write_params, write_predictive, MapTraceRow, ParamsRow, PosteriorSnapshot,
    PredictiveRow,
};
use volcp::synth::{
    generate, MultiTruth, SegmentCoeffs, SegmentParams, SeriesTruth, SynthSpec, Truth,
};
use volcp::{Error, Result};

/// Width of the credible and predictive intervals in all reports.
const INTERVAL_LEVEL: f64 = 0.95;

#[derive(Parser)]
#[command(
    name = "volcp",
    version,
    about = "Volatility change-point filtering and clustering for return series"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate synthetic return series with known change-points.
    Simulate(SimulateArgs),
    /// Convert a price table to log returns.
    Returns(ReturnsArgs),
    /// Run the change-point filter over every series of a returns table.
    Fit(FitArgs),
    /// Pairwise distances between change-point posteriors at one date.
    Distance(DistanceArgs),
    /// Average-linkage clustering of a distance matrix.
    Cluster(ClusterArgs),
}

/// Model and run settings, each overriding the config file when given.
#[derive(Args)]
struct ConfigOverrides {
    /// JSON config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-step change probability of the gap distribution.
    #[arg(long)]
    hazard_p: Option<f64>,
    /// Noise-variance prior shape.
    #[arg(long)]
    a: Option<f64>,
    /// Noise-variance prior scale.
    #[arg(long)]
    b: Option<f64>,
    /// Prior scale multiplier for the segment mean.
    #[arg(long)]
    delta0: Option<f64>,
    /// Prior scale multiplier for the AR coefficient.
    #[arg(long)]
    delta1: Option<f64>,
    /// Maximum number of posterior support atoms kept per step.
    #[arg(long)]
    max_support: Option<usize>,
    /// Whether segments carry a mean term (true/false).
    #[arg(long)]
    include_mu: Option<bool>,
    /// Missing-cell policy: `error` or `drop_rows`.
    #[arg(long, value_parser = parse_missing)]
    missing: Option<MissingPolicy>,
    /// Worker threads for multi-series commands; 0 picks automatically.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for synthetic data generation.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Number of returns generated after the initial value.
    #[arg(long, default_value_t = 600)]
    length: usize,
    /// Number of independent series (seeded seed, seed+1, ...).
    #[arg(long, default_value_t = 1)]
    series: usize,
    /// Initial value the first step conditions on.
    #[arg(long, default_value_t = 0.0)]
    y0: f64,
    /// Explicit per-segment parameters `mu:alpha:sigma,...`; defaults to
    /// prior draws.
    #[arg(long, value_delimiter = ',', value_parser = parse_segment)]
    segments: Vec<SegmentCoeffs>,
    /// Deterministic change-point spacing instead of geometric gaps.
    #[arg(long)]
    fixed_gap: Option<usize>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct ReturnsArgs {
    /// Input price CSV.
    #[arg(long)]
    prices: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Input is `date,ticker,close` rows instead of one column per series.
    #[arg(long)]
    long_format: bool,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct FitArgs {
    /// Input returns CSV.
    #[arg(long)]
    returns: PathBuf,
    /// Output directory (one subdirectory per series).
    #[arg(long)]
    out: PathBuf,
    /// Dates at which to write full posterior snapshots.
    #[arg(long, value_delimiter = ',')]
    snapshot_dates: Vec<NaiveDate>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct DistanceArgs {
    /// Input returns CSV.
    #[arg(long)]
    returns: PathBuf,
    /// Date whose posteriors are compared (must be a row of the input).
    #[arg(long)]
    date: NaiveDate,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
struct ClusterArgs {
    /// Input dissimilarity CSV.
    #[arg(long)]
    dissim: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Also write a flat cut into this many clusters.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

fn parse_missing(s: &str) -> std::result::Result<MissingPolicy, String> {
    match s {
        "error" => Ok(MissingPolicy::Error),
        "drop_rows" => Ok(MissingPolicy::DropRows),
        _ => Err(format!("expected `error` or `drop_rows`, got {s:?}")),
    }
}

fn parse_segment(s: &str) -> std::result::Result<SegmentCoeffs, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("segment must be `mu:alpha:sigma`, got {s:?}"));
    }
    let num = |p: &str| p.parse::<f64>().map_err(|_| format!("bad number {p:?} in segment"));
    Ok(SegmentCoeffs { mu: num(parts[0])?, alpha: num(parts[1])?, sigma: num(parts[2])? })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Returns(args) => cmd_returns(args),
        Cmd::Fit(args) => cmd_fit(args),
        Cmd::Distance(args) => cmd_distance(args),
        Cmd::Cluster(args) => cmd_cluster(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input() { 2 } else { 3 })
        }
    }
}

/// Loads the config file if given and applies flag overrides on top.
fn resolve_config(o: &ConfigOverrides) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(path) => RunConfig::from_json_reader(BufReader::new(File::open(path)?))?,
        None => RunConfig::default(),
    };
    if let Some(v) = o.hazard_p {
        cfg.hazard_p = v;
    }
    if let Some(v) = o.a {
        cfg.a = v;
    }
    if let Some(v) = o.b {
        cfg.b = v;
    }
    if let Some(v) = o.delta0 {
        cfg.delta0 = v;
    }
    if let Some(v) = o.delta1 {
        cfg.delta1 = v;
    }
    if let Some(v) = o.max_support {
        cfg.max_support = v;
    }
    if let Some(v) = o.include_mu {
        cfg.include_mu = v;
    }
    if let Some(v) = o.missing {
        cfg.missing_policy = v;
    }
    if let Some(v) = o.threads {
        cfg.threads = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Creates the directory and writes one file through a buffered writer,
/// flushing before returning so write errors surface as errors.
fn write_out(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Echoes the effective configuration into the output directory. The
/// `threads` field is omitted: thread count never affects any output, so
/// recording it would make otherwise-identical runs look different.
fn echo_config(out: &Path, cfg: &RunConfig) -> Result<()> {
    let mut doc = serde_json::to_value(cfg)
        .map_err(|e| Error::input(format!("config encode failed: {e}")))?;
    doc.as_object_mut().unwrap().remove("threads");
    write_out(&out.join("config_used.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &doc)
            .map_err(|e| Error::input(format!("config encode failed: {e}")))?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

/// Runs `f` on a worker pool sized by the config (0 = automatic).
fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    let pool =
        builder.build().map_err(|e| Error::input(format!("cannot build thread pool: {e}")))?;
    pool.install(f)
}

/// Synthetic calendar for simulated data: consecutive days from 2000-01-01,
/// one per time index.
fn synthetic_dates(n: usize) -> Result<Vec<NaiveDate>> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    (0..n)
        .map(|t| {
            start
                .checked_add_days(chrono::Days::new(t as u64))
                .ok_or_else(|| Error::input(format!("date overflow at index {t}")))
        })
        .collect()
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = resolve_config(&args.overrides)?;
    if args.series < 1 {
        return Err(Error::input("--series must be at least 1".to_string()));
    }
    let hazard = match args.fixed_gap {
        Some(gap) => {
            if gap < 1 {
                return Err(Error::input("--fixed-gap must be at least 1".to_string()));
            }
            // All gap mass at exactly `gap` steps.
            let mut g = vec![0.0; gap + 1];
            g[gap] = 1.0;
            HazardModel::tabulated(g)?
        }
        None => cfg.hazard()?,
    };
    let params = if args.segments.is_empty() {
        SegmentParams::FromPrior(cfg.hyperparams()?)
    } else {
        SegmentParams::Explicit(args.segments.clone())
    };

    let mut columns = Vec::with_capacity(args.series);
    let mut truths = Vec::with_capacity(args.series);
    for k in 0..args.series {
        let spec = SynthSpec {
            length: args.length,
            hazard: hazard.clone(),
            params: params.clone(),
            y0: args.y0,
            seed: cfg.seed.wrapping_add(k as u64),
        };
        let synth = generate(&spec)?;
        truths.push(SeriesTruth {
            ticker: format!("S{}", k + 1),
            changepoints: synth.changepoints.clone(),
            segments: synth.segments.clone(),
        });
        columns.push(synth.returns);
    }

    let dates = synthetic_dates(args.length + 1)?;
    let tickers: Vec<String> = (1..=args.series).map(|k| format!("S{k}")).collect();
    let rows: Vec<Vec<f64>> =
        (0..=args.length).map(|t| columns.iter().map(|c| c[t]).collect()).collect();
    let table = ReturnsTable::new(dates, tickers, rows)?;

    write_out(&args.out.join("returns.csv"), |w| table.to_csv_writer(w))?;
    write_out(&args.out.join("truth.json"), |w| {
        if args.series == 1 {
            Truth {
                changepoints: truths[0].changepoints.clone(),
                segments: truths[0].segments.clone(),
                seed: cfg.seed,
            }
            .to_json_writer(w)
        } else {
            MultiTruth { seed: cfg.seed, series: truths.clone() }.to_json_writer(w)
        }
    })?;
    echo_config(&args.out, &cfg)
}

fn cmd_returns(args: ReturnsArgs) -> Result<()> {
    let cfg = resolve_config(&args.overrides)?;
    let file = BufReader::new(File::open(&args.prices)?);
    let (prices, report) = if args.long_format {
        PriceTable::from_long_csv(file, cfg.missing_policy)?
    } else {
        PriceTable::from_wide_csv(file, cfg.missing_policy)?
    };
    for date in &report.dropped_dates {
        eprintln!("dropped incomplete row {date}");
    }
    let returns = prices.log_returns()?;
    write_out(&args.out.join("returns.csv"), |w| returns.to_csv_writer(w))?;
    echo_config(&args.out, &cfg)
}

/// Everything `fit` produces for one series.
struct SeriesFit {
    map_rows: Vec<MapTraceRow>,
    param_rows: Vec<ParamsRow>,
    pred_rows: Vec<PredictiveRow>,
    snapshots: Vec<PosteriorSnapshot>,
}

/// Steps the filter through a series and summarizes each state. The first
/// return initializes the filter; each later return is one step.
fn fit_series(
    ys: &[f64],
    dates: &[NaiveDate],
    fc: &FilterConfig,
    hyper: &Hyperparams,
    snapshot_dates: &BTreeSet<NaiveDate>,
) -> Result<SeriesFit> {
    let mut filter = Filter::new(ys[0], fc.clone())?;
    let steps = ys.len() - 1;
    let mut out = SeriesFit {
        map_rows: Vec::with_capacity(steps),
        param_rows: Vec::with_capacity(steps),
        pred_rows: Vec::with_capacity(steps),
        snapshots: Vec::new(),
    };
    let tail = 0.5 * (1.0 - INTERVAL_LEVEL);
    for t in 1..ys.len() {
        filter.step(ys[t])?;
        let date = dates[t];
        let map = filter.map_changepoint()?;
        out.map_rows.push(MapTraceRow { date, gap: filter.t() - map });

        let mu = if hyper.include_mu() {
            Some(filter.param_summary(SummaryTarget::Mu, INTERVAL_LEVEL)?)
        } else {
            None
        };
        out.param_rows.push(ParamsRow {
            date,
            mu,
            alpha: filter.param_summary(SummaryTarget::Alpha, INTERVAL_LEVEL)?,
            log_sigma: filter.param_summary(SummaryTarget::LogSigma, INTERVAL_LEVEL)?,
        });

        let atom =
            filter.atoms().iter().find(|a| a.s() == map).expect("MAP atom is in the support");
        let predictive = atom.stats().predictive(hyper, filter.last_y())?;
        out.pred_rows.push(PredictiveRow {
            date,
            lo: predictive.quantile(tail)?,
            hi: predictive.quantile(1.0 - tail)?,
        });

        if snapshot_dates.contains(&date) {
            out.snapshots.push(PosteriorSnapshot { date, t: filter.t(), pmf: filter.posterior()? });
        }
    }
    Ok(out)
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let cfg = resolve_config(&args.overrides)?;
    let table = ReturnsTable::from_csv_reader(BufReader::new(File::open(&args.returns)?))?;
    if table.num_rows() < 2 {
        return Err(Error::input(format!(
            "fit needs at least 2 return rows; got {}",
            table.num_rows()
        )));
    }
    let snapshot_dates: BTreeSet<NaiveDate> = args.snapshot_dates.iter().copied().collect();
    // Snapshots can only be taken at stepped rows (everything after the
    // initial one).
    for d in &snapshot_dates {
        if !table.dates()[1..].contains(d) {
            return Err(Error::input(format!("snapshot date {d} is not a row of the input")));
        }
    }
    let fc = cfg.filter_config()?;
    let hyper = cfg.hyperparams()?;
    let dates = table.dates().to_vec();

    let fits: Vec<SeriesFit> = with_pool(cfg.threads, || {
        (0..table.tickers().len())
            .into_par_iter()
            .map(|j| fit_series(&table.column(j), &dates, &fc, &hyper, &snapshot_dates))
            .collect()
    })?;

    for (ticker, fit) in table.tickers().iter().zip(&fits) {
        let dir = args.out.join(ticker);
        write_out(&dir.join("map_trace.csv"), |w| write_map_trace(&fit.map_rows, w))?;
        write_out(&dir.join("params.csv"), |w| write_params(&fit.param_rows, w))?;
        write_out(&dir.join("predictive.csv"), |w| write_predictive(&fit.pred_rows, w))?;
        for snap in &fit.snapshots {
            let name = format!("posterior_{}.json", snap.date.format("%Y-%m-%d"));
            write_out(&dir.join(name), |w| snap.to_json_writer(w))?;
        }
    }
    echo_config(&args.out, &cfg)
}

fn cmd_distance(args: DistanceArgs) -> Result<()> {
    let cfg = resolve_config(&args.overrides)?;
    let table = ReturnsTable::from_csv_reader(BufReader::new(File::open(&args.returns)?))?;
    if table.tickers().len() < 2 {
        return Err(Error::input("distance needs at least 2 series".to_string()));
    }
    let idx = table
        .dates()
        .iter()
        .position(|d| *d == args.date)
        .ok_or_else(|| Error::input(format!("date {} is not a row of the input", args.date)))?;
    if idx < 1 {
        return Err(Error::input(format!(
            "date {} is the initialization row; the filter has no posterior there",
            args.date
        )));
    }
    let fc = cfg.filter_config()?;

    let posteriors: Vec<SparsePmf> = with_pool(cfg.threads, || {
        (0..table.tickers().len())
            .into_par_iter()
            .map(|j| {
                let ys = table.column(j);
                let mut filter = Filter::new(ys[0], fc.clone())?;
                for y in &ys[1..=idx] {
                    filter.step(*y)?;
                }
                filter.posterior()
            })
            .collect()
    })?;

    let items: Vec<(String, SparsePmf)> = table.tickers().iter().cloned().zip(posteriors).collect();
    let matrix = pairwise(&items)?;
    write_out(&args.out.join("dissim.csv"), |w| matrix.to_csv_writer(w))?;
    echo_config(&args.out, &cfg)
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let cfg = resolve_config(&args.overrides)?;
    let matrix = DissimilarityMatrix::from_csv_reader(BufReader::new(File::open(&args.dissim)?))?;
    let tree = average_linkage(&matrix)?;
    write_out(&args.out.join("dendrogram.json"), |w| tree.to_json_writer(w))?;
    let reordered = matrix.permuted(&tree.leaf_order())?;
    write_out(&args.out.join("reordered.csv"), |w| reordered.to_csv_writer(w))?;
    if let Some(k) = args.k {
        let assignment = tree.cut(k)?;
        write_out(&args.out.join("clusters.csv"), |w| {
            write_clusters_csv(matrix.labels(), &assignment, w)
        })?;
    }
    echo_config(&args.out, &cfg)
}
