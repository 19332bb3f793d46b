//! The `gauntlet` subcommand.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use dynclust::adversary::run_gauntlet;
use dynclust::{
    AnchorStrategy, BudgetFn, DiameterReporter, GauntletAlgorithm, GauntletConfig, KCenterConfig, KCenterEngine,
    SumRadiiConfig, SumRadiiEngine, TreeConfig, TreeEngine,
};
use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Value};
use serde_json::json;

/// Algorithms that can face the adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reporter {
    /// Diameter reporter measuring against random earlier points.
    DiameterRandom,
    /// Diameter reporter measuring against the first point.
    DiameterRoot,
    /// Randomized k-center.
    LfmisKcenter,
    /// Deterministic clustering trees.
    DetTree,
    /// Primal-dual sum of radii.
    SumRadii,
}

#[derive(Debug, Args)]
pub struct GauntletArgs {
    /// Algorithm under test.
    #[arg(long, value_enum)]
    pub algo: Reporter,
    /// Number of centers.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Amortized query budget per update as an expression in `k` and `n`
    /// (for example `4`, `k*math::ln(n)`).
    #[arg(long, default_value = "4")]
    pub budget_f: String,
    /// Number of adversarial operations.
    #[arg(long, default_value_t = 1024)]
    pub ops: u64,
    /// Seed of the algorithm under test.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Queries per insertion of the diameter reporters.
    #[arg(long, default_value_t = 1)]
    pub queries_per_insert: usize,
    /// Re-verify all answers at every this-many evaluated clean operations (0 = never).
    #[arg(long, default_value_t = 0)]
    pub verify_every: u64,
    /// Evaluate at clean operations whose index is a multiple of this (and at the last one).
    #[arg(long, default_value_t = 1)]
    pub eval_every: u64,
    /// Output file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Compiles `expr` into a budget function of `(k, n)`; `n` is clamped to at
/// least 1 so logarithms stay finite.
pub fn parse_budget(expr: &str) -> Result<BudgetFn> {
    let tree = build_operator_tree::<DefaultNumericTypes>(expr).map_err(|e| anyhow!("bad --budget-f `{expr}`: {e}"))?;
    let eval = move |k: usize, n: usize| -> Result<f64> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        ctx.set_value("k".into(), Value::from_float(k as f64))?;
        ctx.set_value("n".into(), Value::from_float(n.max(1) as f64))?;
        Ok(tree.eval_number_with_context(&ctx)?)
    };
    for n in [1, 2, 1000] {
        let v = eval(1, n).with_context(|| format!("cannot evaluate --budget-f `{expr}` at k=1, n={n}"))?;
        if !(v.is_finite() && v >= 0.0) {
            bail!("--budget-f `{expr}` is {v} at k=1, n={n}; it must be finite and non-negative");
        }
    }
    Ok(Arc::new(move |k, n| eval(k, n).ok().filter(|v| v.is_finite()).unwrap_or(0.0).max(0.0)))
}

/// Runs the gauntlet, printing one JSON object per evaluated clean
/// operation and a summary on standard error.
pub fn run(args: GauntletArgs) -> Result<()> {
    if args.k == 0 {
        bail!("--k must be at least 1");
    }
    let f = parse_budget(&args.budget_f)?;
    // Adversarial distances are path lengths, so they never exceed the
    // number of points ever inserted.
    let r_max = args.ops.max(2) as f64;
    let mut alg: Box<dyn GauntletAlgorithm> = match args.algo {
        Reporter::DiameterRandom => {
            Box::new(DiameterReporter::new(AnchorStrategy::Random, args.queries_per_insert, args.seed))
        }
        Reporter::DiameterRoot => {
            Box::new(DiameterReporter::new(AnchorStrategy::Root, args.queries_per_insert, args.seed))
        }
        Reporter::LfmisKcenter => Box::new(KCenterEngine::new(KCenterConfig::new(args.k, 0.5, 1.0, r_max, args.seed))?),
        Reporter::DetTree => Box::new(TreeEngine::new(TreeConfig::new(args.k, 0.5, 2, 1.0, r_max))?),
        Reporter::SumRadii => Box::new(SumRadiiEngine::new(SumRadiiConfig::new(args.k, 0.5, 1.0, r_max, args.seed))?),
    };
    let cfg = GauntletConfig { ops: args.ops, verify_every: args.verify_every, eval_every: args.eval_every.max(1) };
    let report = run_gauntlet(alg.as_mut(), args.k, f, cfg)?;
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for c in &report.clean {
        let line = json!({
            "t": c.t,
            "n_active": c.n_active,
            "open": c.open,
            "off": c.off,
            "queries": c.queries,
            "budget": c.budget,
            "reported_cost": c.reported_cost,
            "uni_cost": c.uni_cost,
            "star_cost": c.star_cost,
            "gap": c.gap,
            "range_ratio": c.range_ratio,
            "answers_checked": c.answers_checked,
            "uni_failures": c.uni_failures,
            "star_failures": c.star_failures,
        });
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    let d = &report.diagnostics;
    eprintln!(
        "{}: {} clean evaluations, final gap {}, queries {} of {:.1} allowed, min open ratio {:.3}, \
         clean in every window {}, max degree {}, closings {}, answers consistent {}",
        report.algorithm,
        report.clean.len(),
        report.final_gap().map_or_else(|| "-".into(), |g| g.to_string()),
        report.queries,
        report.budget,
        report.min_open_ratio,
        report.clean_in_every_window,
        report.max_degree,
        d.closings,
        report.all_answers_consistent(),
    );
    if !report.all_answers_consistent() {
        bail!("some adversary answers were inconsistent with the materialized metrics");
    }
    Ok(())
}
