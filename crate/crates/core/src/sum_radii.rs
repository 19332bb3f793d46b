//! Dynamic primal-dual k-sum-of-radii (and k-sum-of-diameters).
//!
//! For every guess `OPT′` an instance runs a primal-dual scheme on the
//! Lagrangian relaxation where any number of balls may be opened, each at a
//! facility cost `z = OPT′/J` (`J = ⌈k/ε⌉`) plus its radius; radii are
//! multiples of `z`. Iteration `i` picks a uniformly random uncovered point
//! `pᵢ`, raises its dual value `y` until some constraint at `pᵢ` becomes
//! *half-tight* (`Σ_{d(pᵢ,p′) ≤ jz} y_{p′} = jz/2 + z`), records the largest
//! half-tight radius `rᵢ`, opens the primal ball `(pᵢ, 2rᵢ)` and removes the
//! points it covers. Dual values are kept in integral units of `z/2`.
//!
//! The balls are pruned to pairwise far-apart ones (radius multiplied by 3),
//! their centers are clustered offline into at most `k` balls, and each
//! offline ball is widened by the largest pruned radius it absorbs. The
//! engine reports the cheapest feasible solution over all guesses.
//!
//! Two details differ from a literal reading of the scheme:
//!
//! * the half-tight radius is searched among `z, 2z, …, 2Jz` rather than
//!   only up to `OPT′`. Dual feasibility for a constraint `(p, r)` is argued
//!   through `(pᵢ, 2r)`, which must therefore be controlled as well;
//! * the pruned solution's LP cost is bounded by `12·Σy`, not `6·Σy`: a
//!   pruned radius is six times a half-tight radius, and only the half-tight
//!   ball is guaranteed to hold dual mass `r/2 + z`.

use crate::error::{Error, Result};
use crate::kcenter::derive_seed;
use crate::metric::{check_eps, ActiveSet, Metric, PointId, ScaleLadder, StreamStats, UpdateOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};

/// Cover index of points not covered by any recorded iteration.
const UNCOVERED: usize = usize::MAX;

/// Largest number of balls the exact offline solver enumerates
/// (`(m²)^k` for `m` centers) before falling back to the greedy solver.
const EXACT_SEARCH_LIMIT: f64 = 5e7;

/// A ball `(center, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    /// Center point.
    pub center: PointId,
    /// Radius.
    pub radius: f64,
}

/// Offline solver used to reduce the pruned centers to `k` balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OfflineSolver {
    /// Exact branch-and-bound when small enough, greedy otherwise.
    #[default]
    Auto,
    /// Always exact (may be slow for many centers).
    Exact,
    /// Farthest-first traversal with nearest-center assignment; no proven
    /// ratio for sum-of-radii.
    Greedy,
}

/// One primal-dual iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PdIteration {
    /// The chosen point `pᵢ`.
    pub center: PointId,
    /// Largest half-tight radius, in units of `z`.
    pub r_half: u32,
    /// Dual increase of `pᵢ`, in units of `z/2` (may be 0).
    pub delta: u32,
}

/// Outcome of the primal-dual run of one guess.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdStatus {
    /// Every active point is covered.
    Solved,
    /// The iteration cap was reached with uncovered points: `OPT > OPT′`.
    GuessTooSmall,
}

/// The pruned, reduced and combined solution of one guess.
#[derive(Debug, Clone, PartialEq)]
pub struct PrunedSolution {
    /// Pruned balls (radius three times the primal radius).
    pub s_bar: Vec<Ball>,
    /// Offline solution on the pruned centers.
    pub s_hat: Vec<Ball>,
    /// Final at most `k` balls.
    pub s_tilde: Vec<Ball>,
}

impl PrunedSolution {
    /// Sum of the final radii.
    pub fn cost(&self) -> f64 {
        self.s_tilde.iter().map(|b| b.radius).sum()
    }
}

/// Primal-dual state for one guess `OPT′`.
#[derive(Debug, Clone)]
pub struct PdInstance {
    opt: f64,
    k: usize,
    j_max: u32,
    z: f64,
    cap: usize,
    iters: Vec<PdIteration>,
    center_iter: HashMap<PointId, usize>,
    /// Index of the first iteration covering each active point.
    cover: BTreeMap<PointId, usize>,
    uncovered: usize,
    rng: ChaCha8Rng,
    solver: OfflineSolver,
    cache: Option<PrunedSolution>,
}

impl PdInstance {
    /// Empty instance for guess `opt`.
    pub fn new(opt: f64, k: usize, eps: f64, seed: u64) -> Result<Self> {
        check_eps(eps)?;
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let j_max = (k as f64 / eps).ceil().max(1.0) as u32;
        let ratio = 2.0 * k as f64 / eps;
        Ok(PdInstance {
            opt,
            k,
            j_max,
            z: opt / j_max as f64,
            cap: (ratio * ratio + ratio).floor() as usize,
            iters: Vec::new(),
            center_iter: HashMap::new(),
            cover: BTreeMap::new(),
            uncovered: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            solver: OfflineSolver::Auto,
            cache: None,
        })
    }

    /// Chooses the offline solver.
    pub fn with_solver(mut self, solver: OfflineSolver) -> Self {
        self.solver = solver;
        self
    }

    /// Whether distance `d` is within `j` units of `z`.
    fn within(&self, d: f64, j: u32) -> bool {
        d <= j as f64 * self.z
    }

    /// Half-tight sums `S_j` (in units of `z/2`) around `p` for
    /// `j = 1..=2J`, index 0 unused.
    fn dual_sums(&self, p: PointId, metric: &dyn Metric) -> Vec<u64> {
        let top = 2 * self.j_max;
        let mut add = vec![0u64; top as usize + 2];
        for it in self.iters.iter().filter(|it| it.delta > 0) {
            let d = metric.distance(p, it.center);
            if let Some(j) = (1..=top).find(|&j| self.within(d, j)) {
                add[j as usize] += it.delta as u64;
            }
        }
        let mut sums = vec![0u64; top as usize + 1];
        let mut acc = 0;
        for j in 1..=top as usize {
            acc += add[j];
            sums[j] = acc;
        }
        sums
    }

    /// The dual raise `δ` and the largest half-tight radius for `p`.
    fn raise(&self, p: PointId, metric: &dyn Metric) -> (u32, u32) {
        let sums = self.dual_sums(p, metric);
        let top = 2 * self.j_max;
        let slack = |j: u32| j as i64 + 2 - sums[j as usize] as i64;
        let delta = (1..=top).map(slack).min().unwrap_or(0).max(0);
        let r_half = if delta > 0 {
            (1..=top).rev().find(|&j| slack(j) == delta)
        } else {
            (1..=top).rev().find(|&j| slack(j) <= 0)
        };
        (delta as u32, r_half.expect("some constraint is half-tight after the raise"))
    }

    /// Runs iterations from the current end until every point is covered
    /// or the cap is reached.
    fn run(&mut self, metric: &dyn Metric) {
        let mut u: Vec<PointId> = self.cover.iter().filter(|&(_, &c)| c == UNCOVERED).map(|(&p, _)| p).collect();
        while !u.is_empty() && self.iters.len() < self.cap {
            let p = u[self.rng.random_range(0..u.len())];
            let (delta, r_half) = self.raise(p, metric);
            let i = self.iters.len();
            self.iters.push(PdIteration { center: p, r_half, delta });
            self.center_iter.insert(p, i);
            let reach = 2 * r_half;
            let mut rest = Vec::with_capacity(u.len());
            for q in u {
                if q == p || self.within(metric.distance(p, q), reach) {
                    self.cover.insert(q, i);
                } else {
                    rest.push(q);
                }
            }
            u = rest;
        }
        self.uncovered = u.len();
        self.cache = None;
    }

    /// Drops iterations `i..` and marks the points they covered uncovered.
    fn rollback(&mut self, i: usize) {
        for it in self.iters.drain(i..) {
            self.center_iter.remove(&it.center);
        }
        let mut uncovered = 0;
        for c in self.cover.values_mut() {
            if *c >= i {
                *c = UNCOVERED;
                uncovered += 1;
            }
        }
        self.uncovered = uncovered;
        self.cache = None;
    }

    /// Inserts a point: if an iteration covers it only bookkeeping changes,
    /// otherwise the run resumes from the first empty uncovered set.
    pub fn insert(&mut self, p: PointId, metric: &dyn Metric) {
        let c = self
            .iters
            .iter()
            .position(|it| self.within(metric.distance(it.center, p), 2 * it.r_half))
            .unwrap_or(UNCOVERED);
        self.cover.insert(p, c);
        if c == UNCOVERED {
            self.uncovered += 1;
            self.run(metric);
        }
    }

    /// Deletes a point: a non-center only leaves the uncovered sets; the
    /// center `pᵢ` of iteration `i` rolls the run back to the state before
    /// `i` and resumes with fresh randomness.
    pub fn delete(&mut self, p: PointId, metric: &dyn Metric) -> Result<()> {
        let c = self.cover.remove(&p).ok_or(Error::UnknownPoint(p))?;
        if c == UNCOVERED {
            self.uncovered -= 1;
            self.cache = None;
        }
        if let Some(&i) = self.center_iter.get(&p) {
            self.rollback(i);
            self.run(metric);
        }
        Ok(())
    }

    /// Rebuilds the run from scratch on the current points.
    pub fn rerun(&mut self, metric: &dyn Metric) {
        self.rollback(0);
        self.run(metric);
    }

    /// Current status.
    pub fn status(&self) -> PdStatus {
        if self.uncovered == 0 {
            PdStatus::Solved
        } else {
            PdStatus::GuessTooSmall
        }
    }

    /// The guess `OPT′`.
    pub fn opt(&self) -> f64 {
        self.opt
    }

    /// Facility cost `z`.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Number of radii `J` in the LP (`R = {z, …, Jz}`).
    pub fn num_radii(&self) -> u32 {
        self.j_max
    }

    /// The iteration cap.
    pub fn iteration_cap(&self) -> usize {
        self.cap
    }

    /// Recorded iterations in order.
    pub fn iterations(&self) -> &[PdIteration] {
        &self.iters
    }

    /// Number of active points no iteration covers.
    pub fn uncovered_len(&self) -> usize {
        self.uncovered
    }

    /// Active points of the uncovered set `U_i` (before iteration `i`).
    pub fn uncovered_set(&self, i: usize) -> Vec<PointId> {
        self.cover.iter().filter(|&(_, &c)| c >= i).map(|(&p, _)| p).collect()
    }

    /// Dual value of `p` in units of `z/2`.
    pub fn y_half_units(&self, p: PointId) -> u32 {
        self.center_iter.get(&p).map_or(0, |&i| self.iters[i].delta)
    }

    /// Dual value of `p`.
    pub fn y(&self, p: PointId) -> f64 {
        self.y_half_units(p) as f64 * self.z / 2.0
    }

    /// Dual objective `Σ y`.
    pub fn dual_value(&self) -> f64 {
        self.iters.iter().map(|it| it.delta as f64).sum::<f64>() * self.z / 2.0
    }

    /// Random generator state (for replay comparisons).
    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// Primal balls `(pᵢ, 2rᵢ)` in iteration order.
    pub fn primal_balls(&self) -> Vec<Ball> {
        self.iters.iter().map(|it| Ball { center: it.center, radius: 2.0 * it.r_half as f64 * self.z }).collect()
    }

    /// Number of violated dual constraints `(q, jz)`, `q` active and
    /// `j ≤ J`, evaluated with the uncounted distance `dist`.
    pub fn dual_violations(&self, mut dist: impl FnMut(PointId, PointId) -> f64) -> usize {
        let mut violations = 0;
        for &q in self.cover.keys() {
            let ds: Vec<(f64, u32)> =
                self.iters.iter().filter(|it| it.delta > 0).map(|it| (dist(q, it.center), it.delta)).collect();
            for j in 1..=self.j_max {
                let mass: u64 = ds.iter().filter(|(d, _)| self.within(*d, j)).map(|&(_, h)| h as u64).sum();
                if mass > 2 * j as u64 + 2 {
                    violations += 1;
                }
            }
        }
        violations
    }

    /// Greedy pruning: scan primal balls by non-increasing radius and keep a
    /// ball (tripled) unless it overlaps an already kept one.
    pub fn prune(&self, metric: &dyn Metric) -> Vec<Ball> {
        let mut order: Vec<&PdIteration> = self.iters.iter().collect();
        order.sort_by_key(|b| std::cmp::Reverse(b.r_half));
        let mut kept: Vec<(PointId, f64)> = Vec::new();
        for it in order {
            let r = 2.0 * it.r_half as f64 * self.z;
            if kept.iter().all(|&(c, rc)| metric.distance(it.center, c) >= r + rc) {
                kept.push((it.center, r));
            }
        }
        kept.into_iter().map(|(center, r)| Ball { center, radius: 3.0 * r }).collect()
    }

    /// LP cost `Σ (r + z)` of pruned balls.
    pub fn lp_cost(&self, s_bar: &[Ball]) -> f64 {
        s_bar.iter().map(|b| b.radius + self.z).sum()
    }

    /// The pruned, reduced and combined solution, or `None` when the guess
    /// is too small. Cached until the run changes.
    pub fn solution(&mut self, metric: &dyn Metric) -> Option<&PrunedSolution> {
        if self.status() != PdStatus::Solved {
            return None;
        }
        if self.cache.is_none() {
            let s_bar = self.prune(metric);
            let centers: Vec<PointId> = s_bar.iter().map(|b| b.center).collect();
            let s_hat = offline_solve(&centers, self.k, metric, self.solver).expect("k is positive");
            let s_tilde = combine(&s_bar, &s_hat, metric);
            self.cache = Some(PrunedSolution { s_bar, s_hat, s_tilde });
        }
        self.cache.as_ref()
    }
}

/// Covers `centers` with at most `k` balls centered at input points with
/// radii taken from their pairwise distances, minimizing the sum of radii.
pub fn offline_solve(centers: &[PointId], k: usize, metric: &dyn Metric, solver: OfflineSolver) -> Result<Vec<Ball>> {
    if k == 0 {
        return Err(Error::Infeasible);
    }
    let m = centers.len();
    if m <= k {
        return Ok(centers.iter().map(|&center| Ball { center, radius: 0.0 }).collect());
    }
    let d: Vec<Vec<f64>> = centers.iter().map(|&a| centers.iter().map(|&b| metric.distance(a, b)).collect()).collect();
    let exact = match solver {
        OfflineSolver::Exact => m <= 64,
        OfflineSolver::Greedy => false,
        OfflineSolver::Auto => m <= 64 && ((m * m) as f64).powi(k as i32) <= EXACT_SEARCH_LIMIT,
    };
    let balls = if exact { exact_cover(&d, k) } else { greedy_cover(&d, k) };
    Ok(balls.into_iter().map(|(c, radius)| Ball { center: centers[c], radius }).collect())
}

/// Branch and bound: the lowest uncovered point must lie in some ball
/// `(c, d(c, x))`; try them all, cheapest first.
fn exact_cover(d: &[Vec<f64>], k: usize) -> Vec<(usize, f64)> {
    let m = d.len();
    let full: u64 = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    // Per center, distinct radii ascending with the covered masks.
    let balls: Vec<Vec<(f64, u64)>> = (0..m)
        .map(|c| {
            let mut radii: Vec<f64> = d[c].clone();
            radii.sort_by(f64::total_cmp);
            radii.dedup();
            radii.into_iter().map(|r| (r, (0..m).filter(|&x| d[c][x] <= r).fold(0u64, |acc, x| acc | 1 << x))).collect()
        })
        .collect();

    struct Search<'a> {
        d: &'a [Vec<f64>],
        balls: &'a [Vec<(f64, u64)>],
        full: u64,
        best: f64,
        best_set: Vec<(usize, f64)>,
        chosen: Vec<(usize, f64)>,
    }
    impl Search<'_> {
        fn go(&mut self, covered: u64, left: usize, cost: f64) {
            if covered == self.full {
                if cost < self.best {
                    self.best = cost;
                    self.best_set = self.chosen.clone();
                }
                return;
            }
            if left == 0 {
                return;
            }
            let u = (!covered).trailing_zeros() as usize;
            let mut options: Vec<(f64, usize, u64)> = Vec::new();
            for (c, list) in self.balls.iter().enumerate() {
                for &(r, mask) in list.iter().filter(|&&(r, _)| r >= self.d[c][u]) {
                    if cost + r < self.best {
                        options.push((r, c, mask));
                    }
                }
            }
            options.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (r, c, mask) in options {
                if cost + r >= self.best {
                    break;
                }
                self.chosen.push((c, r));
                self.go(covered | mask, left - 1, cost + r);
                self.chosen.pop();
            }
        }
    }

    let greedy = greedy_cover(d, k);
    let mut s = Search {
        d,
        balls: &balls,
        full,
        best: greedy.iter().map(|b| b.1).sum::<f64>() + f64::EPSILON,
        best_set: greedy,
        chosen: Vec::new(),
    };
    s.go(0, k, 0.0);
    s.best_set
}

/// Farthest-first traversal, nearest-center assignment.
fn greedy_cover(d: &[Vec<f64>], k: usize) -> Vec<(usize, f64)> {
    let m = d.len();
    let mut centers = vec![0usize];
    while centers.len() < k.min(m) {
        let far = (0..m)
            .max_by(|&a, &b| {
                let da = centers.iter().map(|&c| d[c][a]).fold(f64::INFINITY, f64::min);
                let db = centers.iter().map(|&c| d[c][b]).fold(f64::INFINITY, f64::min);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("m > 0");
        centers.push(far);
    }
    let mut radius = vec![0.0f64; centers.len()];
    // `d` is symmetric, so row `x` holds the distances from `x` to every center.
    for row in d.iter().take(m) {
        let (slot, dist) = centers
            .iter()
            .enumerate()
            .map(|(s, &c)| (s, row[c]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one center");
        radius[slot] = radius[slot].max(dist);
    }
    centers.into_iter().zip(radius).collect()
}

/// Widens each offline ball by the largest pruned radius among the pruned
/// centers it absorbs (each pruned center is absorbed once).
pub fn combine(s_bar: &[Ball], s_hat: &[Ball], metric: &dyn Metric) -> Vec<Ball> {
    let mut pool: Vec<Ball> = s_bar.to_vec();
    let mut out = Vec::new();
    for hat in s_hat {
        let (absorbed, rest): (Vec<Ball>, Vec<Ball>) =
            pool.into_iter().partition(|b| metric.distance(hat.center, b.center) <= hat.radius);
        pool = rest;
        if let Some(r_bar) = absorbed.iter().map(|b| b.radius).max_by(f64::total_cmp) {
            out.push(Ball { center: hat.center, radius: hat.radius + r_bar });
        }
    }
    debug_assert!(pool.is_empty(), "offline solution must cover every pruned center");
    out
}

/// Engine configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRadiiConfig {
    /// Number of clusters.
    pub k: usize,
    /// Accuracy parameter.
    pub eps: f64,
    /// Smallest guess.
    pub r_min: f64,
    /// Largest distance; guesses reach `k·r_max`.
    pub r_max: f64,
    /// Base seed.
    pub seed: u64,
    /// Update guesses on the rayon thread pool.
    pub parallel: bool,
    /// Offline solver.
    pub solver: OfflineSolver,
}

impl SumRadiiConfig {
    /// Sequential configuration with the default solver.
    pub fn new(k: usize, eps: f64, r_min: f64, r_max: f64, seed: u64) -> Self {
        SumRadiiConfig { k, eps, r_min, r_max, seed, parallel: false, solver: OfflineSolver::Auto }
    }
}

/// The reported solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRadiiSolution {
    /// Sum of radii.
    pub cost: f64,
    /// At most `k` balls covering every active point.
    pub balls: Vec<Ball>,
    /// Index of the reporting guess (`None` when at most `k` points).
    pub guess: Option<usize>,
}

impl SumRadiiSolution {
    /// Assigns every point to the first ball containing it (or the nearest
    /// center if none does).
    pub fn assignment(
        &self,
        points: impl IntoIterator<Item = PointId>,
        metric: &dyn Metric,
    ) -> BTreeMap<PointId, PointId> {
        points
            .into_iter()
            .filter_map(|p| {
                let ds: Vec<(f64, &Ball)> = self.balls.iter().map(|b| (metric.distance(p, b.center), b)).collect();
                ds.iter()
                    .find(|(d, b)| *d <= b.radius)
                    .or_else(|| ds.iter().min_by(|a, b| a.0.total_cmp(&b.0)))
                    .map(|(_, b)| (p, b.center))
            })
            .collect()
    }
}

/// A sum-of-radii solution read as a sum-of-diameters solution.
#[derive(Debug, Clone, PartialEq)]
pub struct DiametersView {
    /// Certified bound `2·Σ radii`.
    pub bound: f64,
    /// Sum over clusters of the realized diameter.
    pub realized: f64,
    /// Clusters keyed by center.
    pub clusters: BTreeMap<PointId, Vec<PointId>>,
}

/// The same clusters valued for k-sum-of-diameters.
pub fn diameters_view(
    sol: &SumRadiiSolution,
    points: impl IntoIterator<Item = PointId>,
    metric: &dyn Metric,
) -> DiametersView {
    let mut clusters: BTreeMap<PointId, Vec<PointId>> = sol.balls.iter().map(|b| (b.center, Vec::new())).collect();
    for (p, c) in sol.assignment(points, metric) {
        clusters.entry(c).or_default().push(p);
    }
    let realized = clusters
        .values()
        .map(|members| {
            let mut diam = 0.0f64;
            for (i, &a) in members.iter().enumerate() {
                for &b in &members[i + 1..] {
                    diam = diam.max(metric.distance(a, b));
                }
            }
            diam
        })
        .sum();
    DiametersView { bound: 2.0 * sol.cost, realized, clusters }
}

/// Summary after an update.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRadiiStatus {
    /// Sum of radii of the reported solution.
    pub cost_estimate: f64,
    /// Reporting guess.
    pub guess: Option<usize>,
    /// Number of balls.
    pub num_centers: usize,
    /// Per guess, whether it asserted `OPT > OPT′`.
    pub too_small: Vec<bool>,
}

/// One primal-dual instance per guess `OPT′ = r_min·(1+ε)^i ≤ k·r_max`.
#[derive(Debug, Clone)]
pub struct SumRadiiEngine {
    cfg: SumRadiiConfig,
    ladder: ScaleLadder,
    guesses: Vec<PdInstance>,
    active: ActiveSet,
    best: Option<SumRadiiSolution>,
}

impl SumRadiiEngine {
    /// Empty engine.
    pub fn new(cfg: SumRadiiConfig) -> Result<Self> {
        check_eps(cfg.eps)?;
        if cfg.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let ladder = ScaleLadder::new(cfg.r_min, cfg.k as f64 * cfg.r_max, 1.0 + cfg.eps)?;
        let guesses = ladder
            .scales()
            .iter()
            .enumerate()
            .map(|(i, &o)| {
                PdInstance::new(o, cfg.k, cfg.eps, derive_seed(cfg.seed, i as u64, 0))
                    .map(|p| p.with_solver(cfg.solver))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SumRadiiEngine { cfg, ladder, guesses, active: ActiveSet::new(), best: None })
    }

    /// Applies one update to every guess and re-selects the cheapest
    /// solution.
    pub fn update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<SumRadiiStatus> {
        self.active.validate(op)?;
        self.active.apply(op)?;
        let step = |g: &mut PdInstance| -> Result<Option<f64>> {
            match op {
                UpdateOp::Insert(p) => g.insert(p, metric),
                UpdateOp::Delete(p) => g.delete(p, metric)?,
            }
            Ok(g.solution(metric).map(PrunedSolution::cost))
        };
        let costs: Vec<Option<f64>> = if self.cfg.parallel {
            self.guesses.par_iter_mut().map(step).collect::<Result<_>>()?
        } else {
            self.guesses.iter_mut().map(step).collect::<Result<_>>()?
        };
        self.best = if self.active.len() <= self.cfg.k {
            Some(SumRadiiSolution {
                cost: 0.0,
                balls: self.active.iter().map(|center| Ball { center, radius: 0.0 }).collect(),
                guess: None,
            })
        } else {
            costs
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.map(|c| (i, c)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(i, cost)| SumRadiiSolution {
                    cost,
                    balls: self.guesses[i].cache.as_ref().expect("solution was computed").s_tilde.clone(),
                    guess: Some(i),
                })
        };
        self.status()
    }

    /// Current status.
    pub fn status(&self) -> Result<SumRadiiStatus> {
        let too_small = self.guesses.iter().map(|g| g.status() == PdStatus::GuessTooSmall).collect();
        match &self.best {
            Some(s) => {
                Ok(SumRadiiStatus { cost_estimate: s.cost, guess: s.guess, num_centers: s.balls.len(), too_small })
            }
            None if self.active.is_empty() => {
                Ok(SumRadiiStatus { cost_estimate: 0.0, guess: None, num_centers: 0, too_small })
            }
            None => Err(Error::Infeasible),
        }
    }

    /// The reported solution.
    pub fn solution(&self) -> Option<&SumRadiiSolution> {
        self.best.as_ref()
    }

    /// The instance of guess `i`.
    pub fn guess(&self, i: usize) -> &PdInstance {
        &self.guesses[i]
    }

    /// Mutable access to the instance of guess `i`.
    pub fn guess_mut(&mut self, i: usize) -> &mut PdInstance {
        &mut self.guesses[i]
    }

    /// Number of guesses.
    pub fn num_guesses(&self) -> usize {
        self.guesses.len()
    }

    /// The guess ladder.
    pub fn ladder(&self) -> &ScaleLadder {
        &self.ladder
    }

    /// Active points.
    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    /// Stream statistics.
    pub fn stats(&self) -> StreamStats {
        self.active.stats()
    }

    /// The configuration.
    pub fn config(&self) -> &SumRadiiConfig {
        &self.cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{DistanceOracle, MetricKind};

    fn line(xs: &[f64]) -> DistanceOracle {
        let mut o = DistanceOracle::new(MetricKind::L1);
        for &x in xs {
            o.register(vec![x]).unwrap();
        }
        o
    }

    fn plane_l1(pts: &[(f64, f64)]) -> DistanceOracle {
        let mut o = DistanceOracle::new(MetricKind::L1);
        for &(x, y) in pts {
            o.register(vec![x, y]).unwrap();
        }
        o
    }

    #[test]
    fn singleton_run() {
        let m = line(&[0.0]);
        let mut g = PdInstance::new(4.0, 1, 0.25, 1).unwrap();
        assert_eq!(g.z(), 1.0);
        g.insert(0, &m);
        assert_eq!(g.iterations(), &[PdIteration { center: 0, r_half: 1, delta: 3 }]);
        assert_eq!(g.y(0), 1.5);
        assert_eq!(g.status(), PdStatus::Solved);
        let s_bar = g.prune(&m);
        assert_eq!(s_bar, vec![Ball { center: 0, radius: 6.0 }]);
        assert_eq!(g.lp_cost(&s_bar), 7.0);
        assert!(g.lp_cost(&s_bar) <= 6.0 * g.dual_value());
        assert_eq!(g.solution(&m).unwrap().s_tilde, vec![Ball { center: 0, radius: 6.0 }]);
    }

    #[test]
    fn far_pair_gives_two_singleton_iterations() {
        let m = line(&[0.0, 100.0]);
        let mut g = PdInstance::new(4.0, 1, 0.25, 1).unwrap();
        g.insert(0, &m);
        g.insert(1, &m);
        let its = g.iterations();
        assert_eq!(its.len(), 2);
        assert!(its.iter().all(|it| it.r_half == 1 && it.delta == 3));
        let sol = g.solution(&m).unwrap();
        assert_eq!(sol.s_bar.len(), 2);
        assert_eq!(sol.s_tilde.len(), 1);
        assert_eq!(sol.cost(), 106.0);
    }

    #[test]
    fn empty_instance_is_solved() {
        let m = line(&[]);
        let mut g = PdInstance::new(4.0, 2, 0.5, 1).unwrap();
        assert_eq!(g.status(), PdStatus::Solved);
        assert!(g.iterations().is_empty());
        assert!(g.solution(&m).unwrap().s_tilde.is_empty());
    }

    #[test]
    fn covered_insert_and_non_center_delete_only_do_bookkeeping() {
        let m = line(&[0.0, 0.5, 0.7]);
        let mut g = PdInstance::new(4.0, 1, 0.25, 1).unwrap();
        g.insert(0, &m);
        let before = g.iterations().to_vec();
        g.insert(1, &m);
        assert_eq!(g.iterations(), &before[..]);
        assert_eq!(g.uncovered_set(0), vec![0, 1]);
        g.delete(1, &m).unwrap();
        assert_eq!(g.iterations(), &before[..]);
    }

    #[test]
    fn deleting_first_center_matches_fresh_run() {
        let m = line(&[0.0, 50.0, 100.0, 150.0]);
        let mut g = PdInstance::new(4.0, 1, 0.25, 9).unwrap();
        for p in 0..3 {
            g.insert(p, &m);
        }
        let first = g.iterations()[0].center;
        let mut fresh = PdInstance::new(4.0, 1, 0.25, 0).unwrap();
        fresh.rng = g.rng().clone();
        for p in (0..3).filter(|&p| p != first) {
            fresh.cover.insert(p, UNCOVERED);
        }
        fresh.uncovered = 2;
        fresh.run(&m);
        g.delete(first, &m).unwrap();
        assert_eq!(g.iterations(), fresh.iterations());
    }

    #[test]
    fn extended_half_tight_range_keeps_the_dual_feasible() {
        // Three points at distance 2z from q, pairwise 4z apart (ℓ1 star).
        let m = plane_l1(&[(0.0, 0.0), (2.0, 0.0), (-2.0, 0.0), (0.0, 2.0), (0.0, -2.0)]);
        for seed in 0..20 {
            let mut g = PdInstance::new(2.0, 1, 0.5, seed).unwrap();
            for p in [1, 2, 3, 4, 0] {
                g.insert(p, &m);
                assert_eq!(g.dual_violations(|a, b| m.raw_distance(a, b)), 0, "seed {seed}");
            }
        }
    }

    #[test]
    fn lp_cost_can_exceed_six_times_the_dual() {
        // q alone first (half-tight at z), then p at 2.5z becomes half-tight
        // only at 3z; the pruned ball has radius 18z.
        let m = line(&[0.0, 2.5]);
        let mut g = PdInstance::new(8.0, 1, 0.125, 0).unwrap();
        g.insert(0, &m);
        g.insert(1, &m);
        assert_eq!(g.iterations()[1], PdIteration { center: 1, r_half: 3, delta: 2 });
        let s_bar = g.prune(&m);
        assert_eq!(s_bar, vec![Ball { center: 1, radius: 18.0 }]);
        let (lp, dual) = (g.lp_cost(&s_bar), g.dual_value());
        assert!(lp > 6.0 * dual && lp <= 12.0 * dual);
    }

    #[test]
    fn prune_overlap_rules() {
        let m = line(&[0.0, 1.0, 100.0]);
        let mut g = PdInstance::new(4.0, 1, 0.25, 3).unwrap();
        for p in 0..3 {
            g.cover.insert(p, UNCOVERED);
        }
        g.iters = vec![
            PdIteration { center: 0, r_half: 1, delta: 3 },
            PdIteration { center: 1, r_half: 1, delta: 0 },
            PdIteration { center: 2, r_half: 1, delta: 3 },
        ];
        let s_bar = g.prune(&m);
        assert_eq!(s_bar.iter().map(|b| b.center).collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn offline_examples() {
        let m = line(&[0.0, 1.0, 10.0]);
        let sol = offline_solve(&[0, 1, 2], 2, &m, OfflineSolver::Exact).unwrap();
        assert_eq!(sol.iter().map(|b| b.radius).sum::<f64>(), 1.0);
        let one = offline_solve(&[0, 1, 2], 1, &m, OfflineSolver::Exact).unwrap();
        assert_eq!(one, vec![Ball { center: 1, radius: 9.0 }]);
        let trivial = offline_solve(&[0, 2], 2, &m, OfflineSolver::Auto).unwrap();
        assert!(trivial.iter().all(|b| b.radius == 0.0));
        assert_eq!(offline_solve(&[0], 0, &m, OfflineSolver::Auto), Err(Error::Infeasible));
    }

    #[test]
    fn combine_rules() {
        let m = line(&[0.0, 1.0, 10.0]);
        let one = [Ball { center: 0, radius: 6.0 }];
        assert_eq!(combine(&one, &[Ball { center: 0, radius: 0.0 }], &m), one.to_vec());
        let s_bar = [Ball { center: 0, radius: 1.0 }, Ball { center: 1, radius: 1.0 }, Ball { center: 2, radius: 0.0 }];
        let s_hat = offline_solve(&[0, 1, 2], 2, &m, OfflineSolver::Exact).unwrap();
        let s_tilde = combine(&s_bar, &s_hat, &m);
        assert_eq!(s_tilde.iter().map(|b| b.radius).sum::<f64>(), 2.0);
        for p in 0..3 {
            assert!(s_tilde.iter().any(|b| m.raw_distance(p, b.center) <= b.radius));
        }
    }

    #[test]
    fn diameters_view_examples() {
        let m = line(&[0.0, 1.0, 10.0]);
        let sol = SumRadiiSolution {
            cost: 1.0,
            balls: vec![Ball { center: 0, radius: 1.0 }, Ball { center: 2, radius: 0.0 }],
            guess: None,
        };
        let v = diameters_view(&sol, 0..3, &m);
        assert_eq!(v.bound, 2.0);
        assert_eq!(v.realized, 1.0);
        assert_eq!(v.clusters[&2], vec![2]);
    }

    #[test]
    fn engine_covers_everything() {
        let xs = [0.0, 0.4, 5.0, 5.3, 11.0, 11.2, 30.0];
        let m = line(&xs);
        let mut e = SumRadiiEngine::new(SumRadiiConfig::new(3, 0.5, 0.1, 30.0, 7)).unwrap();
        for p in 0..xs.len() as u32 {
            e.update(UpdateOp::Insert(p), &m).unwrap();
        }
        e.update(UpdateOp::Delete(6), &m).unwrap();
        let sol = e.solution().unwrap().clone();
        assert!(sol.balls.len() <= 3);
        for p in e.active().iter() {
            assert!(sol.balls.iter().any(|b| m.raw_distance(p, b.center) <= b.radius));
        }
        for i in 0..e.num_guesses() {
            assert_eq!(e.guess(i).dual_violations(|a, b| m.raw_distance(a, b)), 0);
        }
    }
}
