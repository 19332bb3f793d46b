//! `dynclust`: streaming driver, scaling benchmark and adversarial gauntlet
//! for the dynamic clustering engines.
//!
//! `run` replays a stream file and prints one JSON object per update;
//! `bench` prints a table of per-update costs on synthetic streams; and
//! `gauntlet` pits an algorithm against the adaptive adversary under a
//! query budget.

mod engine;
mod gauntlet;
mod input;
mod verify;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dynclust::{DistanceOracle, Metric, MetricKind, PointId, TreeConfig, UpdateOp};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use engine::{Algo, Engine, EngineParams, Solver};
use gauntlet::{GauntletArgs, Reporter};

#[derive(Debug, Parser)]
#[command(name = "dynclust", version, about = "Dynamic k-center and sum-of-radii clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay a stream file and emit JSON-lines telemetry.
    Run(RunArgs),
    /// Measure per-update cost on synthetic streams of increasing size.
    Bench(BenchArgs),
    /// Run an algorithm against the adaptive adversary.
    Gauntlet(GauntletArgs),
}

/// Engine parameters shared by `run` and `bench`.
#[derive(Debug, Args)]
struct EngineArgs {
    /// Algorithm.
    #[arg(long, value_enum)]
    algo: Algo,
    /// Number of centers.
    #[arg(long)]
    k: usize,
    /// Accuracy parameter.
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Seed for all randomness.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Failure probability per epoch (lsh-kcenter only; default 0.1).
    #[arg(long)]
    delta: Option<f64>,
    /// LSH approximation factor c > 1 (lsh-kcenter only; default 2).
    #[arg(long)]
    c: Option<f64>,
    /// Tree branching factor (det-tree only; default from stream size and aspect ratio).
    #[arg(long = "b", visible_alias = "B")]
    b: Option<usize>,
    /// Offline solver (sum-radii and sum-diam only).
    #[arg(long, value_enum)]
    solver: Option<Solver>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// Stream file (`# metric=<kind> dim=<d>` header, then `+ id coords` / `- id`).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the header's distance function (l2, l1, lp<p>, hamming, jaccard).
    #[arg(long)]
    metric: Option<MetricKind>,
    /// Smallest positive distance (default: computed from the stream).
    #[arg(long)]
    r_min: Option<f64>,
    /// Largest distance (default: computed from the stream).
    #[arg(long)]
    r_max: Option<f64>,
    /// Budget f(k, n) for the gauntlet.
    #[arg(long)]
    budget_f: Option<String>,
    /// Adversarial operations for the gauntlet.
    #[arg(long)]
    ops: Option<u64>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    engine: EngineArgs,
    /// Comma-separated stream sizes.
    #[arg(long, value_delimiter = ',', default_value = "256,1024,4096")]
    sizes: Vec<String>,
}

/// One line of `run` output.
#[derive(Debug, Serialize)]
struct Telemetry {
    t: u64,
    n_active: usize,
    cost_estimate: f64,
    realized_cost: f64,
    num_centers: usize,
    distance_queries_delta: u64,
    restarts: u64,
    witness_flags: Vec<bool>,
}

/// Thread count from `DYNCLUST_THREADS`; more than one enables the
/// engines' parallel updates.
fn configure_threads() -> Result<bool> {
    let Ok(v) = std::env::var("DYNCLUST_THREADS") else {
        return Ok(false);
    };
    let n: usize =
        v.trim().parse().with_context(|| format!("DYNCLUST_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        bail!("DYNCLUST_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot build the thread pool")?;
    Ok(n > 1)
}

impl EngineArgs {
    /// Rejects flags that do not belong to the chosen algorithm.
    fn validate(&self) -> Result<()> {
        let only = |set: bool, flag: &str, algos: &[Algo]| {
            if set && !algos.contains(&self.algo) {
                bail!("{flag} applies only to {}", algos.iter().map(Algo::name).collect::<Vec<_>>().join("/"));
            }
            Ok(())
        };
        only(self.c.is_some(), "--c", &[Algo::LshKcenter])?;
        only(self.delta.is_some(), "--delta", &[Algo::LshKcenter])?;
        only(self.b.is_some(), "--b", &[Algo::DetTree])?;
        only(self.solver.is_some(), "--solver", &[Algo::SumRadii, Algo::SumDiam])?;
        if self.k == 0 {
            bail!("--k must be at least 1");
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            bail!("--eps must lie in (0, 1], got {}", self.eps);
        }
        if let Some(c) = self.c {
            if c <= 1.0 {
                bail!("--c must exceed 1, got {c}");
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                bail!("--delta must lie in (0, 1), got {d}");
            }
        }
        Ok(())
    }

    fn params(&self, metric: MetricKind, dim: usize, r: (f64, f64), n_hat: usize, parallel: bool) -> EngineParams {
        EngineParams {
            algo: self.algo,
            k: self.k,
            eps: self.eps,
            seed: self.seed,
            r_min: r.0,
            r_max: r.1,
            c: self.c.unwrap_or(2.0),
            delta: self.delta.unwrap_or(0.1),
            b: self.b.unwrap_or_else(|| TreeConfig::default_b(n_hat, r.1 / r.0)),
            solver: self.solver.unwrap_or(Solver::Auto),
            metric,
            dim,
            parallel,
        }
    }
}

fn run(args: RunArgs, parallel: bool) -> Result<()> {
    args.engine.validate()?;
    let gauntlet_only = args.budget_f.is_some() || args.ops.is_some();
    if args.engine.algo == Algo::Gauntlet {
        if args.input.is_some() || args.metric.is_some() {
            bail!("the gauntlet generates its own stream; --input and --metric do not apply");
        }
        let g = GauntletArgs {
            algo: Reporter::DiameterRandom,
            k: args.engine.k,
            budget_f: args.budget_f.unwrap_or_else(|| "4".into()),
            ops: args.ops.unwrap_or(1024),
            seed: args.engine.seed,
            queries_per_insert: 1,
            verify_every: 0,
            eval_every: 1,
            output: args.output,
        };
        return gauntlet::run(g);
    }
    if gauntlet_only {
        bail!("--budget-f and --ops apply only to --algo gauntlet");
    }
    let input = args.input.context("--input is required")?;
    let stream = input::load(&input, args.metric)?;
    let all: Vec<PointId> = (0..stream.oracle.len() as PointId).collect();
    let r = match (args.r_min, args.r_max) {
        (Some(lo), Some(hi)) => (lo, hi),
        (lo, hi) => {
            let (alo, ahi) = stream.oracle.distance_bounds(&all).unwrap_or((1.0, 1.0));
            (lo.unwrap_or(alo), hi.unwrap_or(ahi))
        }
    };
    if !(r.0 > 0.0 && r.0 <= r.1) {
        bail!("need 0 < r_min ≤ r_max, got [{}, {}]", r.0, r.1);
    }
    let params = args.engine.params(stream.oracle.kind(), stream.dim, r, all.len(), parallel);
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    replay(&params, &stream.oracle, &stream.ops, |line| {
        serde_json::to_writer(&mut out, line)?;
        writeln!(out)?;
        Ok(())
    })?;
    out.flush()?;
    Ok(())
}

/// Replays `ops`, verifying after every update and handing each telemetry
/// line to `emit`. Returns the total queue insertions, when the engine
/// tracks them.
fn replay(
    params: &EngineParams,
    oracle: &DistanceOracle,
    ops: &[UpdateOp],
    mut emit: impl FnMut(&Telemetry) -> Result<()>,
) -> Result<Option<u64>> {
    let mut engine = Engine::build(params)?;
    let mut active = BTreeSet::new();
    let mut queue = None;
    for (t, &op) in ops.iter().enumerate() {
        let before = oracle.queries();
        engine.update(op, oracle).with_context(|| format!("update {}", t + 1))?;
        let delta = oracle.queries() - before;
        match op {
            UpdateOp::Insert(p) => active.insert(p),
            UpdateOp::Delete(p) => active.remove(&p),
        };
        let snap = engine.snapshot(oracle)?;
        verify::verify(&snap, &active, params.k, oracle)
            .with_context(|| format!("verifier rejected update {}", t + 1))?;
        queue = snap.queue_insertions;
        emit(&Telemetry {
            t: t as u64 + 1,
            n_active: active.len(),
            cost_estimate: snap.cost_estimate,
            realized_cost: snap.realized_cost,
            num_centers: snap.num_centers,
            distance_queries_delta: delta,
            restarts: snap.restarts,
            witness_flags: snap.witness_flags,
        })?;
    }
    Ok(queue)
}

/// Grid side of the synthetic benchmark points.
const BENCH_SIDE: u32 = 4096;

/// `n` distinct points on a square grid, inserted in random order, followed
/// by deletions of half of them.
fn synthetic_stream(n: usize, rng: &mut ChaCha8Rng) -> (DistanceOracle, Vec<UpdateOp>) {
    let mut oracle = DistanceOracle::new(MetricKind::L2);
    let mut seen = BTreeSet::new();
    while seen.len() < n {
        let p = (rng.random_range(0..BENCH_SIDE), rng.random_range(0..BENCH_SIDE));
        if seen.insert(p) {
            oracle.register(vec![f64::from(p.0), f64::from(p.1)]).expect("two coordinates");
        }
    }
    let mut ids: Vec<PointId> = (0..n as PointId).collect();
    let mut ops: Vec<UpdateOp> = ids.iter().map(|&p| UpdateOp::Insert(p)).collect();
    ids.shuffle(rng);
    ops.extend(ids[..n / 2].iter().map(|&p| UpdateOp::Delete(p)));
    (oracle, ops)
}

fn bench(args: BenchArgs, parallel: bool) -> Result<()> {
    args.engine.validate()?;
    if args.engine.algo == Algo::Gauntlet {
        bail!("bench does not apply to the gauntlet; use the gauntlet subcommand");
    }
    let sizes = args
        .sizes
        .iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().with_context(|| format!("bad size `{s}`")))
        .collect::<Result<Vec<_>>>()?;
    let mut out = io::stdout().lock();
    writeln!(out, "{:>8} {:>9} {:>16} {:>16}", "n", "updates", "queries/update", "queue_ins/update")?;
    for n in sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(args.engine.seed ^ n as u64);
        let (oracle, ops) = synthetic_stream(n, &mut rng);
        let r = (1.0, f64::from(BENCH_SIDE) * std::f64::consts::SQRT_2);
        let params = args.engine.params(MetricKind::L2, 2, r, n, parallel);
        let mut queries = 0u64;
        let queue = replay(&params, &oracle, &ops, |line| {
            queries += line.distance_queries_delta;
            Ok(())
        })?;
        let per = |x: u64| if ops.is_empty() { 0.0 } else { x as f64 / ops.len() as f64 };
        let queue = queue.map_or_else(|| "-".to_string(), |q| format!("{:.2}", per(q)));
        writeln!(out, "{n:>8} {:>9} {:>16.2} {queue:>16}", ops.len(), per(queries))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|parallel| match cli.command {
        Command::Run(a) => run(a, parallel),
        Command::Bench(a) => bench(a, parallel),
        Command::Gauntlet(a) => gauntlet::run(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dynclust: {e:#}");
            ExitCode::FAILURE
        }
    }
}
