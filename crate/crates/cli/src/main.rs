//! Command-line front end: space enumeration, metric queries, search
//! benchmarking, and landscape analyses over one shared index format.
//!
//! Reproducibility contract: identical argv and seed produce byte-identical
//! output, whatever `--jobs` says. Failures exit nonzero after a single
//! `error: ...` line on stderr.

#![forbid(unsafe_code)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use nasbench::cellspec::{Digest, ModelSpec};
use nasbench::enumerator::{self, enumerate_space, space_stats, SpaceIndex, SpaceParams};
use nasbench::landscape;
use nasbench::netmodel::{parameter_count, structural_metrics, SkeletonConfig};
use nasbench::oracle::{self, Oracle, EPOCH_BUDGETS, NUM_TRIALS};
use nasbench::rng;
use nasbench::searchbench::{self, Algorithm, SearchConfig};

/// Full-training budget used wherever a single accuracy stands for a cell.
const FULL_TRAINING: u32 = EPOCH_BUDGETS[EPOCH_BUDGETS.len() - 1];

/// Index scan granularity for parallel ranking.
const SCAN_CHUNK: usize = 4096;

#[derive(Parser)]
#[command(
    name = "nasbench",
    version,
    about = "Cell search-space engine and architecture-search benchmark harness"
)]
struct Cli {
    /// Worker threads for parallel stages; 0 means one per core. Outputs
    /// never depend on this
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate every canonical cell of a search space into an index
    Enumerate(EnumerateArgs),
    /// Summarize an index: cell counts by vertices, edges, ops, and shape
    Stats(StatsArgs),
    /// Look up one architecture's recorded metrics as a JSON line
    Query(QueryArgs),
    /// Count trainable parameters and report depth and width of a cell
    Params(ParamsArgs),
    /// Run repeated seeded searches and aggregate test regret over time
    Bench(BenchArgs),
    /// Landscape and dataset statistics, each emitted as CSV
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Validate a metrics file and rewrite it in canonical record order
    ConvertMetrics(ConvertMetricsArgs),
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Fitness autocorrelation along a random walk; CSV lag,sqrt_lag,autocorr
    Rwa(RwaArgs),
    /// Fitness-distance correlation toward a peak; CSV peak,samples,fdc
    Fdc(FdcArgs),
    /// Mean effect of replacing one op with another; CSV per ordered op pair
    Opmatrix(OpmatrixArgs),
    /// Accuracy and noise distributions at a budget; CSV series,value,cum_fraction
    Ecdf(EcdfArgs),
    /// Share of raw encodings near peak cells; CSV distance,fraction,ci_half_width
    Volume(VolumeArgs),
    /// Rank agreement between two training budgets; CSV with one data row
    Rankcorr(RankcorrArgs),
    /// Mean accuracy and training time by cell depth and width; CSV per group
    Depthwidth(DepthwidthArgs),
}

#[derive(Args)]
struct EnumerateArgs {
    /// Largest cell size in vertices, input and output included
    #[arg(long, default_value_t = 7, value_name = "V")]
    max_vertices: usize,
    /// Largest number of edges per cell
    #[arg(long, default_value_t = 9, value_name = "E")]
    max_edges: usize,
    /// Write the index here instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    index: IndexArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct QueryArgs {
    /// Architecture as matrix=<V*V 0/1 row-major>;ops=<comma-separated labels>
    #[arg(
        long,
        value_name = "TEXT",
        value_parser = ModelSpec::from_text,
        required_unless_present = "digest",
        conflicts_with = "digest"
    )]
    spec: Option<ModelSpec>,
    /// Canonical digest of an indexed cell, 32 hex characters
    #[arg(long, value_name = "HEX")]
    digest: Option<Digest>,
    /// Epoch budget: 4, 12, 36, or 108
    #[arg(long, default_value_t = FULL_TRAINING, value_name = "E")]
    epochs: u32,
    /// Fixed trial in 1..=3; when omitted one is drawn from the seed stream
    #[arg(long, value_name = "T")]
    trial: Option<u32>,
    /// Root random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct ParamsArgs {
    /// Architecture as matrix=<V*V 0/1 row-major>;ops=<comma-separated labels>
    #[arg(long, value_name = "TEXT", value_parser = ModelSpec::from_text)]
    spec: ModelSpec,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Search algorithm: rs, re, nre, reinforce, or hb
    #[arg(long, value_name = "NAME")]
    algo: Algorithm,
    /// Independent runs to aggregate
    #[arg(long, default_value_t = 500)]
    runs: usize,
    /// Simulated training-second budget per run
    #[arg(long, default_value_t = 1e7, value_name = "SECONDS")]
    budget: f64,
    /// Evolution population size
    #[arg(long, default_value_t = 100)]
    ps: usize,
    /// Evolution tournament size
    #[arg(long, default_value_t = 10)]
    ts: usize,
    /// Policy-gradient learning rate
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    /// Policy-gradient reward baseline decay
    #[arg(long, default_value_t = 0.9)]
    baseline_decay: f64,
    /// Policy-gradient samples per update
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    /// Successive-halving reduction factor
    #[arg(long, default_value_t = 3)]
    eta: u32,
    /// Root random seed; run i draws its own stream derived from (seed, i)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Points on the geometric time grid of the aggregate regret curve
    #[arg(long, default_value_t = 101, value_name = "N")]
    grid_points: usize,
    /// Emit the final-regret distribution at the budget horizon instead of
    /// the regret-over-time curve
    #[arg(long)]
    ecdf: bool,
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct RwaArgs {
    /// Steps in the random walk
    #[arg(long, default_value_t = 100_000, value_name = "N")]
    walk_length: usize,
    /// Deepest lag reported
    #[arg(long, default_value_t = 36, value_name = "L")]
    max_lag: usize,
    /// Root random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct FdcArgs {
    /// Reference peak; defaults to the best cell by mean test accuracy
    #[arg(long, value_name = "HEX")]
    peak: Option<Digest>,
    /// Cells drawn without replacement, capped at the index size
    #[arg(long, default_value_t = 10_000, value_name = "N")]
    samples: usize,
    /// Root random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct OpmatrixArgs {
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct EcdfArgs {
    /// Epoch budget: 4, 12, 36, or 108
    #[arg(long, default_value_t = FULL_TRAINING, value_name = "E")]
    epochs: u32,
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct VolumeArgs {
    /// Farthest encoding distance profiled
    #[arg(long, default_value_t = 6, value_name = "D")]
    max_distance: u32,
    /// Raw encodings drawn by the Monte Carlo estimate
    #[arg(long, default_value_t = 200_000, value_name = "N")]
    samples: u64,
    /// Use the top K cells by mean test accuracy as peaks
    #[arg(long, value_name = "K")]
    top: Option<usize>,
    /// Explicit peak digest; repeatable, overrides --top
    #[arg(long, value_name = "HEX")]
    peak: Vec<Digest>,
    /// Default peak set: the best cell by mean test accuracy plus every cell
    /// within this many standard errors of it (ignored with --top or --peak)
    #[arg(long, default_value_t = 2.0, value_name = "W")]
    sem_window: f64,
    /// Score every raw encoding instead of sampling
    #[arg(long)]
    exhaustive: bool,
    /// Root random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct RankcorrArgs {
    /// First epoch budget
    #[arg(long, default_value_t = 36, value_name = "E")]
    budget_a: u32,
    /// Second epoch budget; also selects the retained top share
    #[arg(long, default_value_t = FULL_TRAINING, value_name = "E")]
    budget_b: u32,
    /// Keep only this top share of cells, in percent of the index
    #[arg(long, default_value_t = 100.0, value_name = "PCT")]
    top_percentile: f64,
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct DepthwidthArgs {
    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args)]
struct ConvertMetricsArgs {
    /// JSON-lines metrics file, one record per (cell, budget, trial)
    #[arg(value_name = "FILE")]
    input: PathBuf,
    /// Rewrite the validated records here: cells in digest order, budgets
    /// and trials ascending
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    index: IndexArgs,
}

/// Metrics source plus the index it must cover, shared by every subcommand
/// that reads recorded results.
#[derive(Args)]
struct SourceArgs {
    /// Metrics source, synthetic:seed=<n> or tabular:<path>
    #[arg(long, value_name = "SELECTOR")]
    oracle: OracleSelector,
    #[command(flatten)]
    index: IndexArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct IndexArgs {
    /// Space index file written by `enumerate`
    #[arg(long, value_name = "PATH", env = "NASBENCH_INDEX")]
    index: Option<PathBuf>,
}

#[derive(Args)]
struct OutArgs {
    /// Write here instead of standard output
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
enum OracleSelector {
    Synthetic { seed: u64 },
    Tabular(PathBuf),
}

impl FromStr for OracleSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<OracleSelector, String> {
        if let Some(rest) = s.strip_prefix("synthetic:") {
            let digits = rest
                .strip_prefix("seed=")
                .ok_or_else(|| format!("expected synthetic:seed=<n>, got {s:?}"))?;
            let seed = digits
                .parse::<u64>()
                .map_err(|e| format!("bad synthetic seed {digits:?}: {e}"))?;
            Ok(OracleSelector::Synthetic { seed })
        } else if let Some(path) = s.strip_prefix("tabular:") {
            if path.is_empty() {
                return Err(format!("expected tabular:<path>, got {s:?}"));
            }
            Ok(OracleSelector::Tabular(PathBuf::from(path)))
        } else {
            Err(format!(
                "unknown oracle {s:?}: expected synthetic:seed=<n> or tabular:<path>"
            ))
        }
    }
}

impl OracleSelector {
    fn load(&self, index: Arc<SpaceIndex>) -> Result<Oracle> {
        match self {
            OracleSelector::Synthetic { seed } => Ok(oracle::make_synthetic(index, *seed)),
            OracleSelector::Tabular(path) => oracle::load_tabular(index, path)
                .with_context(|| format!("cannot load metrics from {}", path.display())),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    match &cli.command {
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Query(args) => cmd_query(args),
        Command::Params(args) => cmd_params(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Analyze(cmd) => cmd_analyze(cmd),
        Command::ConvertMetrics(args) => cmd_convert_metrics(args),
    }
}

fn cmd_enumerate(args: &EnumerateArgs) -> Result<()> {
    let params = SpaceParams::new(args.max_vertices, args.max_edges)?;
    let index = enumerate_space(params);
    match &args.out {
        Some(path) => {
            enumerator::write_index_file(&index, path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            println!("{} cells -> {}", index.len(), path.display());
        }
        None => write_payload(&OutArgs { out: None }, |w| enumerator::write_index(&index, w))?,
    }
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let index = load_index(&args.index)?;
    let stats = space_stats(&index);
    let params = index.params();
    write_payload(&args.out, |w| {
        writeln!(w, "grouping,value,count")?;
        writeln!(w, "space,max_vertices,{}", params.max_vertices())?;
        writeln!(w, "space,max_edges,{}", params.max_edges())?;
        writeln!(w, "space,cells,{}", stats.total)?;
        for (k, n) in &stats.by_vertices {
            writeln!(w, "vertices,{k},{n}")?;
        }
        for (k, n) in &stats.by_edges {
            writeln!(w, "edges,{k},{n}")?;
        }
        for (op, n) in &stats.op_slots {
            writeln!(w, "op_slots,{},{}", op.label(), n)?;
        }
        for (k, n) in &stats.by_depth {
            writeln!(w, "depth,{k},{n}")?;
        }
        for (k, n) in &stats.by_width {
            writeln!(w, "width,{k},{n}")?;
        }
        Ok(())
    })
}

fn cmd_query(args: &QueryArgs) -> Result<()> {
    let index = load_index(&args.source.index)?;
    let oracle = args.source.oracle.load(index)?;
    let mut stream = rng::stream(args.seed, "query", 0);
    let record = match (&args.spec, &args.digest) {
        (Some(spec), None) => match args.trial {
            Some(trial) => oracle.record(&spec.canonical_hash()?, args.epochs, trial)?,
            None => oracle.query(spec, args.epochs, &mut stream)?,
        },
        (None, Some(digest)) => match args.trial {
            Some(trial) => oracle.record(digest, args.epochs, trial)?,
            None => oracle.query_digest(digest, args.epochs, &mut stream)?,
        },
        _ => unreachable!("clap enforces exactly one of --spec and --digest"),
    };
    let json = serde_json::to_string(&record).context("cannot encode the record")?;
    write_payload(&args.source.out, |w| writeln!(w, "{json}"))
}

fn cmd_params(args: &ParamsArgs) -> Result<()> {
    let cfg = SkeletonConfig::default();
    let count = parameter_count(&args.spec, &cfg)?;
    let metrics = structural_metrics(&args.spec)?;
    let json = serde_json::json!({
        "trainable_parameters": count,
        "depth": metrics.depth,
        "width": metrics.width,
    });
    write_payload(&args.out, |w| writeln!(w, "{json}"))
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    if args.runs == 0 {
        bail!("--runs must be at least 1");
    }
    if args.grid_points < 2 {
        bail!("--grid-points must be at least 2");
    }
    let index = load_index(&args.source.index)?;
    let oracle = args.source.oracle.load(index)?;
    let cfg = SearchConfig {
        algorithm: args.algo,
        time_budget_seconds: args.budget,
        population_size: args.ps,
        tournament_size: args.ts,
        learning_rate: args.lr,
        baseline_decay: args.baseline_decay,
        batch_size: args.batch_size,
        eta: args.eta,
        seed: args.seed,
    };
    let traces = searchbench::repeat_runs(&oracle, &cfg, args.runs)?;
    if args.ecdf {
        let series = searchbench::robustness_ecdf(&traces, cfg.time_budget_seconds);
        write_payload(&args.source.out, |w| {
            searchbench::write_regret_ecdf_csv(&series, w)
        })
    } else {
        let times = time_grid(cfg.time_budget_seconds, args.grid_points);
        let curve = searchbench::regret_curve(&traces, &times);
        write_payload(&args.source.out, |w| curve.write_csv(w))
    }
}

fn cmd_analyze(cmd: &AnalyzeCommand) -> Result<()> {
    match cmd {
        AnalyzeCommand::Rwa(args) => {
            let oracle = load_oracle(&args.source)?;
            let mut stream = rng::stream(args.seed, "rwa", 0);
            let series = landscape::rwa(&oracle, args.walk_length, args.max_lag, &mut stream)?;
            write_payload(&args.source.out, |w| series.write_csv(w))
        }
        AnalyzeCommand::Fdc(args) => {
            if args.samples == 0 {
                bail!("--samples must be at least 1");
            }
            let oracle = load_oracle(&args.source)?;
            let index = oracle.index();
            let peak = match args.peak {
                Some(digest) => digest,
                None => oracle.best_cell().0,
            };
            let sample: Vec<Digest> = if args.samples >= index.len() {
                index.cells().iter().map(|c| *c.digest()).collect()
            } else {
                let mut stream = rng::stream(args.seed, "fdc-sample", 0);
                rng::sample_distinct(&mut stream, args.samples, index.len())
                    .into_iter()
                    .map(|position| *index.get(position).digest())
                    .collect()
            };
            let rho = landscape::fdc(&oracle, &sample, &peak)?;
            let n = sample.len();
            write_payload(&args.source.out, |w| {
                writeln!(w, "peak,samples,fdc")?;
                writeln!(w, "{peak},{n},{rho}")
            })
        }
        AnalyzeCommand::Opmatrix(args) => {
            let oracle = load_oracle(&args.source)?;
            let matrix = landscape::op_replacement_matrix(&oracle, oracle.index())?;
            write_payload(&args.source.out, |w| matrix.write_csv(w))
        }
        AnalyzeCommand::Ecdf(args) => {
            let oracle = load_oracle(&args.source)?;
            let distributions = landscape::accuracy_ecdf(&oracle, oracle.index(), args.epochs)?;
            write_payload(&args.source.out, |w| distributions.write_csv(w))
        }
        AnalyzeCommand::Volume(args) => {
            let oracle = load_oracle(&args.source)?;
            let peaks = volume_peaks(&oracle, &args.peak, args.top, args.sem_window)?;
            let profile = if args.exhaustive {
                landscape::volume_within_distance_exhaustive(
                    oracle.index(),
                    &peaks,
                    args.max_distance,
                )?
            } else {
                let mut stream = rng::stream(args.seed, "volume", 0);
                landscape::volume_within_distance(
                    oracle.index(),
                    &peaks,
                    args.max_distance,
                    args.samples,
                    &mut stream,
                )?
            };
            write_payload(&args.source.out, |w| profile.write_csv(w))
        }
        AnalyzeCommand::Rankcorr(args) => {
            let oracle = load_oracle(&args.source)?;
            let rho = landscape::budget_rank_correlation(
                &oracle,
                oracle.index(),
                args.budget_a,
                args.budget_b,
                args.top_percentile,
            )?;
            let (a, b, pct) = (args.budget_a, args.budget_b, args.top_percentile);
            write_payload(&args.source.out, |w| {
                writeln!(w, "budget_a,budget_b,top_percentile,spearman")?;
                writeln!(w, "{a},{b},{pct},{rho}")
            })
        }
        AnalyzeCommand::Depthwidth(args) => {
            let oracle = load_oracle(&args.source)?;
            let profile = landscape::depth_width_profile(&oracle, oracle.index())?;
            write_payload(&args.source.out, |w| profile.write_csv(w))
        }
    }
}

fn cmd_convert_metrics(args: &ConvertMetricsArgs) -> Result<()> {
    let index = load_index(&args.index)?;
    let oracle = oracle::load_tabular(Arc::clone(&index), &args.input)
        .with_context(|| format!("cannot load metrics from {}", args.input.display()))?;
    if let Some(path) = &args.out {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        dump_canonical(&oracle, &mut w)
            .and_then(|()| w.flush().map_err(Into::into))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    println!(
        "validated {} records covering {} cells",
        index.len() * EPOCH_BUDGETS.len() * NUM_TRIALS as usize,
        index.len()
    );
    Ok(())
}

/// One JSON line per record: cells in digest order, budgets ascending,
/// trials ascending.
fn dump_canonical(oracle: &Oracle, w: &mut impl Write) -> Result<()> {
    for cell in oracle.index().cells() {
        for &budget in &EPOCH_BUDGETS {
            for trial in 1..=NUM_TRIALS {
                let record = oracle.record(cell.digest(), budget, trial)?;
                serde_json::to_writer(&mut *w, &record)?;
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

fn load_index(args: &IndexArgs) -> Result<Arc<SpaceIndex>> {
    let path = args
        .index
        .as_ref()
        .ok_or_else(|| anyhow!("no index file: pass --index or set NASBENCH_INDEX"))?;
    let index = enumerator::read_index_file(path)
        .with_context(|| format!("cannot load index {}", path.display()))?;
    Ok(Arc::new(index))
}

fn load_oracle(source: &SourceArgs) -> Result<Oracle> {
    let index = load_index(&source.index)?;
    source.oracle.load(index)
}

/// Sends the payload to `--out` or standard output, buffered either way.
fn write_payload(
    out: &OutArgs,
    payload: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<()> {
    match &out.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = BufWriter::new(file);
            payload(&mut w)
                .and_then(|()| w.flush())
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
        None => {
            let mut w = BufWriter::new(io::stdout().lock());
            payload(&mut w)
                .and_then(|()| w.flush())
                .context("cannot write to standard output")?;
        }
    }
    Ok(())
}

/// Geometric grid over four decades ending exactly at the budget.
fn time_grid(budget: f64, points: usize) -> Vec<f64> {
    const SPAN: f64 = 1e4;
    (0..points)
        .map(|i| budget * SPAN.powf(i as f64 / (points - 1) as f64 - 1.0))
        .collect()
}

/// Cell positions ranked by mean test accuracy, best first; ties break
/// toward the lower index position so the order is total.
fn rank_by_test_accuracy(oracle: &Oracle) -> Result<Vec<(usize, f64)>> {
    let index = oracle.index();
    let chunks: Vec<Vec<f64>> = index
        .cells()
        .par_chunks(SCAN_CHUNK)
        .map(|chunk| {
            chunk
                .iter()
                .map(|cell| {
                    Ok(oracle
                        .trial_summary(cell.digest(), FULL_TRAINING)?
                        .test_accuracy)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut scored: Vec<(usize, f64)> = chunks.into_iter().flatten().enumerate().collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// Resolves the peak set for volume profiling: explicit digests, the top K
/// cells, or the best cell plus everything within `sem_window` standard
/// errors of its mean test accuracy.
fn volume_peaks(
    oracle: &Oracle,
    explicit: &[Digest],
    top: Option<usize>,
    sem_window: f64,
) -> Result<Vec<Digest>> {
    if !explicit.is_empty() {
        return Ok(explicit.to_vec());
    }
    let index = oracle.index();
    let ranked = rank_by_test_accuracy(oracle)?;
    if ranked.is_empty() {
        bail!("the index is empty");
    }
    let keep = match top {
        Some(0) => bail!("--top must be at least 1"),
        Some(k) => k.min(ranked.len()),
        None => {
            if !(sem_window >= 0.0 && sem_window.is_finite()) {
                bail!("--sem-window must be a finite non-negative number");
            }
            let (best, best_accuracy) = ranked[0];
            let summary = oracle.trial_summary(index.get(best).digest(), FULL_TRAINING)?;
            let sem = summary.test_accuracy_std / (NUM_TRIALS as f64).sqrt();
            let cutoff = best_accuracy - sem_window * sem;
            ranked.iter().take_while(|&&(_, acc)| acc >= cutoff).count()
        }
    };
    Ok(ranked[..keep]
        .iter()
        .map(|&(position, _)| *index.get(position).digest())
        .collect())
}
