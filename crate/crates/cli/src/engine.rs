//! Uniform driver over every engine, and the reports the verifier checks.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use clap::ValueEnum;
use dynclust::sum_radii::{diameters_view, Ball, OfflineSolver};
use dynclust::{
    DistanceOracle, HashFamilyKind, KCenterConfig, KCenterEngine, LshConfig, LshKCenter, Metric, MetricKind, PointId,
    SumRadiiConfig, SumRadiiEngine, TreeConfig, TreeEngine, UpdateOp,
};

/// Algorithms accepted by `run`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    /// Randomized (2+ε) k-center over LFMIS instances.
    LfmisKcenter,
    /// c(2+ε) k-center over LSH graphs.
    LshKcenter,
    /// Deterministic clustering trees.
    DetTree,
    /// Primal-dual k-sum-of-radii.
    SumRadii,
    /// The sum-of-radii clusters valued as k-sum-of-diameters.
    SumDiam,
    /// Adversarial gauntlet (no input stream).
    Gauntlet,
}

/// Offline solver choice for the sum objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    /// Exact when small enough, greedy otherwise.
    Auto,
    /// Always exact.
    Exact,
    /// Always greedy.
    Greedy,
}

impl Algo {
    /// The name used on the command line.
    pub fn name(&self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

impl From<Solver> for OfflineSolver {
    fn from(s: Solver) -> Self {
        match s {
            Solver::Auto => OfflineSolver::Auto,
            Solver::Exact => OfflineSolver::Exact,
            Solver::Greedy => OfflineSolver::Greedy,
        }
    }
}

/// Everything needed to build an engine.
#[derive(Debug, Clone)]
pub struct EngineParams {
    pub algo: Algo,
    pub k: usize,
    pub eps: f64,
    pub seed: u64,
    pub r_min: f64,
    pub r_max: f64,
    pub c: f64,
    pub delta: f64,
    pub b: usize,
    pub solver: Solver,
    pub metric: MetricKind,
    pub dim: usize,
    pub parallel: bool,
}

/// An engine behind a common interface.
pub enum Engine {
    Lfmis(KCenterEngine),
    Lsh(Box<LshKCenter>),
    Tree(TreeEngine),
    SumRadii(SumRadiiEngine),
    SumDiam(SumRadiiEngine),
}

/// The clustering an engine reports, in a form the verifier can check.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    /// k-center: centers and the center of every active point.
    Centers { centers: Vec<PointId>, assignment: BTreeMap<PointId, PointId> },
    /// Sum of radii: balls and the ball center of every active point.
    Balls { balls: Vec<Ball>, assignment: BTreeMap<PointId, PointId> },
    /// Sum of diameters: clusters keyed by center.
    Clusters { clusters: BTreeMap<PointId, Vec<PointId>> },
}

/// State after one update.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub cost_estimate: f64,
    pub realized_cost: f64,
    pub num_centers: usize,
    pub restarts: u64,
    pub witness_flags: Vec<bool>,
    pub queue_insertions: Option<u64>,
    pub report: Report,
}

/// Read-only view of an oracle that does not count queries, so telemetry
/// and verification leave the query counter untouched.
pub struct Uncounted<'a>(pub &'a DistanceOracle);

impl Metric for Uncounted<'_> {
    fn distance(&self, a: PointId, b: PointId) -> f64 {
        self.0.raw_distance(a, b)
    }
    fn queries(&self) -> u64 {
        0
    }
    fn kind(&self) -> MetricKind {
        self.0.kind()
    }
    fn coords(&self, p: PointId) -> Option<&[f64]> {
        self.0.coords(p)
    }
}

impl Engine {
    /// Builds the engine for `p.algo`.
    pub fn build(p: &EngineParams) -> Result<Self> {
        let kc = || KCenterConfig { parallel: p.parallel, ..KCenterConfig::new(p.k, p.eps, p.r_min, p.r_max, p.seed) };
        let sr = || SumRadiiConfig {
            parallel: p.parallel,
            solver: p.solver.into(),
            ..SumRadiiConfig::new(p.k, p.eps, p.r_min, p.r_max, p.seed)
        };
        Ok(match p.algo {
            Algo::LfmisKcenter => Engine::Lfmis(KCenterEngine::new(kc())?),
            Algo::LshKcenter => {
                let kind = HashFamilyKind::for_metric(p.metric)?;
                let cfg = LshConfig { kind, c: p.c, delta: p.delta, dim: p.dim };
                Engine::Lsh(Box::new(LshKCenter::new(kc(), cfg)?))
            }
            Algo::DetTree => Engine::Tree(TreeEngine::new(TreeConfig {
                parallel: p.parallel,
                ..TreeConfig::new(p.k, p.eps, p.b, p.r_min, p.r_max)
            })?),
            Algo::SumRadii => Engine::SumRadii(SumRadiiEngine::new(sr())?),
            Algo::SumDiam => Engine::SumDiam(SumRadiiEngine::new(sr())?),
            Algo::Gauntlet => bail!("the gauntlet has no stream engine"),
        })
    }

    /// Applies one update.
    pub fn update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<()> {
        match self {
            Engine::Lfmis(e) => e.update(op, metric).map(|_| ())?,
            Engine::Lsh(e) => e.update(op, metric).map(|_| ())?,
            Engine::Tree(e) => e.update(op, metric).map(|_| ())?,
            Engine::SumRadii(e) | Engine::SumDiam(e) => e.update(op, metric).map(|_| ())?,
        }
        Ok(())
    }

    /// Current state, with realized costs computed without counting queries.
    pub fn snapshot(&self, oracle: &DistanceOracle) -> Result<Snapshot> {
        let raw = Uncounted(oracle);
        let dist = |a, b| oracle.raw_distance(a, b);
        Ok(match self {
            Engine::Lfmis(e) => {
                let sol = e.solution();
                Snapshot {
                    cost_estimate: sol.cost_estimate,
                    realized_cost: sol.radius(dist),
                    num_centers: sol.centers.len(),
                    restarts: e.restarts(),
                    witness_flags: Vec::new(),
                    queue_insertions: Some(e.counters().queue_insertions),
                    report: Report::Centers { centers: sol.centers, assignment: sol.assignment },
                }
            }
            Engine::Lsh(e) => {
                let sol = e.solution();
                Snapshot {
                    cost_estimate: sol.cost_estimate,
                    realized_cost: sol.radius(dist),
                    num_centers: sol.centers.len(),
                    restarts: e.engine().restarts(),
                    witness_flags: Vec::new(),
                    queue_insertions: Some(e.engine().counters().queue_insertions),
                    report: Report::Centers { centers: sol.centers, assignment: sol.assignment },
                }
            }
            Engine::Tree(e) => {
                let st = e.status()?;
                let centers = e.centers();
                let assignment = e.assignment(&raw);
                Snapshot {
                    cost_estimate: st.cost_estimate,
                    realized_cost: assignment.iter().map(|(&p, &c)| dist(p, c)).fold(0.0, f64::max),
                    num_centers: centers.len(),
                    restarts: 0,
                    witness_flags: st.witness_flags,
                    queue_insertions: None,
                    report: Report::Centers { centers, assignment },
                }
            }
            Engine::SumRadii(e) => {
                let st = e.status()?;
                let balls = e.solution().map(|s| s.balls.clone()).unwrap_or_default();
                let assignment = e.solution().map(|s| s.assignment(e.active().iter(), &raw)).unwrap_or_default();
                let mut radius: BTreeMap<PointId, f64> = balls.iter().map(|b| (b.center, 0.0)).collect();
                for (&p, &c) in &assignment {
                    let r = radius.entry(c).or_default();
                    *r = r.max(dist(p, c));
                }
                Snapshot {
                    cost_estimate: st.cost_estimate,
                    realized_cost: radius.values().sum(),
                    num_centers: balls.len(),
                    restarts: 0,
                    witness_flags: st.too_small,
                    queue_insertions: None,
                    report: Report::Balls { balls, assignment },
                }
            }
            Engine::SumDiam(e) => {
                let st = e.status()?;
                let (bound, realized, clusters) = match e.solution() {
                    Some(sol) => {
                        let view = diameters_view(sol, e.active().iter(), &raw);
                        (view.bound, view.realized, view.clusters)
                    }
                    None => (0.0, 0.0, BTreeMap::new()),
                };
                Snapshot {
                    cost_estimate: bound,
                    realized_cost: realized,
                    num_centers: clusters.len(),
                    restarts: 0,
                    witness_flags: st.too_small,
                    queue_insertions: None,
                    report: Report::Clusters { clusters },
                }
            }
        })
    }
}
