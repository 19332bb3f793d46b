//! Fully dynamic `(2+ε)`-approximate k-center.
//!
//! One [`LfmisInstance`] runs per threshold `r` of a geometric ladder with
//! ratio `1+ε/2`. At threshold `r`, a maximal independent set of size at
//! most `k` is a clustering of radius `r` (every point is adjacent to its
//! leader), while `k+1` independent points certify that every k-center
//! solution costs more than `r/2`. The engine reports the smallest threshold
//! whose `alg` has at most `k` members.
//!
//! An optional restart wrapper bounds the work of each instance with high
//! probability: whenever an instance's accumulated operation count exceeds
//! `4·t·T̂` (for update count `t` and configured expected amortized cost
//! `T̂`), it is rebuilt with fresh ranks from the active set.

use crate::error::{Error, Result};
use crate::lfmis::{AlgIndex, Counters, LfmisInstance, ThresholdIndex};
use crate::metric::{check_eps, ActiveSet, Metric, PointId, ScaleLadder, StreamStats, UpdateOp};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Builds the adjacency index of each scale.
pub trait IndexFactory: Sync {
    /// The index type.
    type Index: AlgIndex + Send;

    /// A fresh index for threshold `r`, sized for at most `n_bound` active
    /// points, with randomness derived from `seed`.
    fn build(&self, r: f64, n_bound: usize, seed: u64) -> Self::Index;

    /// Radius certified by a maximal independent set of `index` at
    /// threshold `r`.
    fn cover_radius(&self, index: &Self::Index, r: f64) -> f64;
}

/// Exact threshold graphs.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactFactory;

impl IndexFactory for ExactFactory {
    type Index = ThresholdIndex;

    fn build(&self, r: f64, _n_bound: usize, _seed: u64) -> ThresholdIndex {
        ThresholdIndex { r }
    }

    fn cover_radius(&self, _index: &ThresholdIndex, r: f64) -> f64 {
        r
    }
}

/// High-probability restart policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartConfig {
    /// Expected amortized operations per update, `T̂`.
    pub expected_cost: f64,
    /// Most restarts of one instance within a single update; guards against
    /// budgets too small to ever be met.
    pub max_consecutive: u32,
}

impl RestartConfig {
    /// Restart policy with the given `T̂` and at most 3 consecutive
    /// restarts per update.
    pub fn new(expected_cost: f64) -> Self {
        RestartConfig { expected_cost, max_consecutive: 3 }
    }
}

/// Engine configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct KCenterConfig {
    /// Number of centers.
    pub k: usize,
    /// Accuracy parameter; the ladder ratio is `1+ε/2`.
    pub eps: f64,
    /// Smallest threshold (at most the smallest positive distance).
    pub r_min: f64,
    /// Largest distance that can occur.
    pub r_max: f64,
    /// Seed for all ranks.
    pub seed: u64,
    /// Update scales on the rayon thread pool.
    pub parallel: bool,
    /// Optional restart wrapper.
    pub restart: Option<RestartConfig>,
}

impl KCenterConfig {
    /// Sequential configuration without restarts.
    pub fn new(k: usize, eps: f64, r_min: f64, r_max: f64, seed: u64) -> Self {
        KCenterConfig { k, eps, r_min, r_max, seed, parallel: false, restart: None }
    }
}

/// A clustering reported by an engine.
#[derive(Debug, Clone, PartialEq)]
pub struct KCenterSolution {
    /// Certified radius bound (0 when at most `k` points are active).
    pub cost_estimate: f64,
    /// Centers in increasing identifier order.
    pub centers: Vec<PointId>,
    /// Center of every active point.
    pub assignment: BTreeMap<PointId, PointId>,
    /// Index of the reporting scale, if any.
    pub scale: Option<usize>,
}

impl KCenterSolution {
    /// Largest distance from a point to its center under `dist`.
    pub fn radius(&self, mut dist: impl FnMut(PointId, PointId) -> f64) -> f64 {
        self.assignment.iter().map(|(&p, &c)| dist(p, c)).fold(0.0, f64::max)
    }
}

/// Short summary of the engine state after an update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KCenterStatus {
    /// Certified radius bound.
    pub cost_estimate: f64,
    /// Number of centers.
    pub num_centers: usize,
    /// Reporting scale, if any (none when at most `k` points are active).
    pub scale: Option<usize>,
}

#[derive(Debug, Clone)]
struct Scale<I> {
    r: f64,
    inst: LfmisInstance<I>,
    /// Operation count of `inst` when it was (re)built.
    ops_base: u64,
    incarnation: u64,
    restarts: u64,
}

/// Dynamic k-center over the thresholds of a [`ScaleLadder`].
#[derive(Debug, Clone)]
pub struct KCenterEngine<F: IndexFactory = ExactFactory> {
    cfg: KCenterConfig,
    factory: F,
    ladder: ScaleLadder,
    scales: Vec<Scale<F::Index>>,
    active: ActiveSet,
    n_bound: usize,
    winner: Option<usize>,
}

/// Mixes a base seed with small integers into an independent stream seed.
pub(crate) fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut x = base ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl KCenterEngine<ExactFactory> {
    /// Engine over exact threshold graphs.
    pub fn new(cfg: KCenterConfig) -> Result<Self> {
        Self::with_factory(cfg, ExactFactory, 0)
    }
}

impl<F: IndexFactory> KCenterEngine<F> {
    /// Engine whose scale indexes come from `factory`, initially sized for
    /// `n_bound` active points.
    pub fn with_factory(cfg: KCenterConfig, factory: F, n_bound: usize) -> Result<Self> {
        if cfg.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        check_eps(cfg.eps)?;
        if let Some(rc) = cfg.restart {
            if rc.expected_cost.is_nan() || rc.expected_cost <= 0.0 {
                return Err(Error::InvalidConfig("restart budget must be positive".into()));
            }
        }
        let ladder = ScaleLadder::for_kcenter(cfg.r_min, cfg.r_max, cfg.eps)?;
        let scales = ladder
            .scales()
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                let index = factory.build(r, n_bound, derive_seed(cfg.seed, i as u64, 0));
                Scale {
                    r,
                    inst: LfmisInstance::new(cfg.k, index, derive_seed(cfg.seed, i as u64, 1)),
                    ops_base: 0,
                    incarnation: 0,
                    restarts: 0,
                }
            })
            .collect();
        Ok(KCenterEngine { cfg, factory, ladder, scales, active: ActiveSet::new(), n_bound, winner: None })
    }

    /// Applies one update to every scale and returns the new status.
    pub fn update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<KCenterStatus> {
        self.active.validate(op)?;
        self.active.apply(op)?;
        let t = self.active.stats().t;
        let (restart, seed, active, factory, n_bound) =
            (self.cfg.restart, self.cfg.seed, &self.active, &self.factory, self.n_bound);
        let step = |(i, s): (usize, &mut Scale<F::Index>)| -> Result<()> {
            s.inst.process_update(op, metric)?;
            if let Some(rc) = restart {
                let budget = 4.0 * t as f64 * rc.expected_cost;
                let mut tries = 0;
                while (s.inst.counters().ops() - s.ops_base) as f64 > budget && tries < rc.max_consecutive {
                    tries += 1;
                    s.restarts += 1;
                    s.incarnation += 1;
                    s.ops_base = s.inst.counters().ops();
                    *s.inst.index_mut() = factory.build(s.r, n_bound, derive_seed(seed, i as u64, 2 * s.incarnation));
                    s.inst.rebuild(active.iter(), derive_seed(seed, i as u64, 2 * s.incarnation + 1), metric);
                }
            }
            Ok(())
        };
        if self.cfg.parallel {
            self.scales.par_iter_mut().enumerate().try_for_each(step)?;
        } else {
            self.scales.iter_mut().enumerate().try_for_each(step)?;
        }
        self.select_winner()
    }

    fn select_winner(&mut self) -> Result<KCenterStatus> {
        let n = self.active.len();
        if n <= self.cfg.k {
            self.winner = None;
            return Ok(KCenterStatus { cost_estimate: 0.0, num_centers: n, scale: None });
        }
        let i = self.scales.iter().position(|s| s.inst.alg_len() <= self.cfg.k).ok_or(Error::Infeasible)?;
        self.winner = Some(i);
        let s = &self.scales[i];
        Ok(KCenterStatus {
            cost_estimate: self.factory.cover_radius(s.inst.index(), s.r),
            num_centers: s.inst.alg_len(),
            scale: Some(i),
        })
    }

    /// Rebuilds every scale with fresh ranks and indexes sized for
    /// `n_bound`, replaying the active set. Used for epoch changes.
    pub fn rebuild_all(&mut self, n_bound: usize, metric: &dyn Metric) -> Result<KCenterStatus> {
        self.n_bound = n_bound;
        let (seed, active, factory) = (self.cfg.seed, &self.active, &self.factory);
        let step = |(i, s): (usize, &mut Scale<F::Index>)| {
            s.incarnation += 1;
            *s.inst.index_mut() = factory.build(s.r, n_bound, derive_seed(seed, i as u64, 2 * s.incarnation));
            s.inst.rebuild(active.iter(), derive_seed(seed, i as u64, 2 * s.incarnation + 1), metric);
            s.ops_base = s.inst.counters().ops();
        };
        if self.cfg.parallel {
            self.scales.par_iter_mut().enumerate().for_each(step);
        } else {
            self.scales.iter_mut().enumerate().for_each(step);
        }
        if self.active.is_empty() {
            self.winner = None;
            return Ok(KCenterStatus { cost_estimate: 0.0, num_centers: 0, scale: None });
        }
        self.select_winner()
    }

    /// Status of the current solution.
    pub fn status(&self) -> KCenterStatus {
        match self.winner {
            None => KCenterStatus { cost_estimate: 0.0, num_centers: self.active.len(), scale: None },
            Some(i) => {
                let s = &self.scales[i];
                KCenterStatus {
                    cost_estimate: self.factory.cover_radius(s.inst.index(), s.r),
                    num_centers: s.inst.alg_len(),
                    scale: Some(i),
                }
            }
        }
    }

    /// Center of an active point, in constant time.
    pub fn membership(&self, p: PointId) -> Result<PointId> {
        if !self.active.contains(p) {
            return Err(Error::UnknownPoint(p));
        }
        match self.winner {
            None => Ok(p),
            Some(i) => {
                let inst = &self.scales[i].inst;
                Ok(if inst.in_alg(p) { p } else { inst.leader(p).expect("maximal set assigns every point") })
            }
        }
    }

    /// All points in the cluster of `p` (its center first), in time
    /// proportional to the cluster size.
    pub fn enumerate_cluster(&self, p: PointId) -> Result<Vec<PointId>> {
        let c = self.membership(p)?;
        let mut out = vec![c];
        if let Some(i) = self.winner {
            out.extend_from_slice(self.scales[i].inst.followers(c));
        }
        Ok(out)
    }

    /// The full solution (linear time).
    pub fn solution(&self) -> KCenterSolution {
        let status = self.status();
        let (centers, assignment) = match self.winner {
            None => (self.active.iter().collect(), self.active.iter().map(|p| (p, p)).collect()),
            Some(i) => {
                let inst = &self.scales[i].inst;
                let mut centers: Vec<PointId> = inst.alg().collect();
                centers.sort_unstable();
                let mut assignment = BTreeMap::new();
                for &c in &centers {
                    assignment.insert(c, c);
                    for &f in inst.followers(c) {
                        assignment.insert(f, c);
                    }
                }
                (centers, assignment)
            }
        };
        KCenterSolution { cost_estimate: status.cost_estimate, centers, assignment, scale: status.scale }
    }

    /// The `k+1` mutually non-adjacent points of the scale just below the
    /// reporting one, certifying the lower bound; `None` when the reporting
    /// scale is the lowest (or no scale reports).
    pub fn lower_bound_witness(&self) -> Option<(f64, Vec<PointId>)> {
        let i = self.winner?.checked_sub(1)?;
        let s = &self.scales[i];
        Some((s.r, s.inst.alg().collect()))
    }

    /// The threshold ladder.
    pub fn ladder(&self) -> &ScaleLadder {
        &self.ladder
    }

    /// Number of scales.
    pub fn num_scales(&self) -> usize {
        self.scales.len()
    }

    /// The LFMIS instance of scale `i`.
    pub fn scale_instance(&self, i: usize) -> &LfmisInstance<F::Index> {
        &self.scales[i].inst
    }

    /// Mutable LFMIS instance of scale `i` (for audits).
    pub fn scale_instance_mut(&mut self, i: usize) -> &mut LfmisInstance<F::Index> {
        &mut self.scales[i].inst
    }

    /// Total restarts performed by the wrapper across scales.
    pub fn restarts(&self) -> u64 {
        self.scales.iter().map(|s| s.restarts).sum()
    }

    /// Counters summed over scales.
    pub fn counters(&self) -> Counters {
        self.scales.iter().fold(Counters::default(), |mut acc, s| {
            let c = s.inst.counters();
            acc.queue_insertions += c.queue_insertions;
            acc.queue_pops += c.queue_pops;
            acc.leader_changes += c.leader_changes;
            acc.eliminator_changes += c.eliminator_changes;
            acc.distance_calls += c.distance_calls;
            acc
        })
    }

    /// The active point set.
    pub fn active(&self) -> &ActiveSet {
        &self.active
    }

    /// Stream statistics.
    pub fn stats(&self) -> StreamStats {
        self.active.stats()
    }

    /// The configuration.
    pub fn config(&self) -> &KCenterConfig {
        &self.cfg
    }

    /// The index factory.
    pub fn factory(&self) -> &F {
        &self.factory
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

    #[test]
    fn four_points_on_a_line() {
        let m = line(&[0.0, 1.0, 100.0, 101.0]);
        let mut e = KCenterEngine::new(KCenterConfig::new(2, 0.5, 0.5, 128.0, 1)).unwrap();
        for p in 0..4 {
            e.update(UpdateOp::Insert(p), &m).unwrap();
        }
        let s = e.solution();
        assert!(s.cost_estimate <= 2.5);
        assert!(s.radius(|a, b| m.raw_distance(a, b)) <= s.cost_estimate);
        let mut c0 = e.enumerate_cluster(0).unwrap();
        c0.sort();
        assert_eq!(c0, vec![0, 1]);
        let mut c2 = e.enumerate_cluster(3).unwrap();
        c2.sort();
        assert_eq!(c2, vec![2, 3]);
        let (r, wit) = e.lower_bound_witness().unwrap();
        assert_eq!(wit.len(), 3);
        for (i, &a) in wit.iter().enumerate() {
            for &b in &wit[i + 1..] {
                assert!(m.raw_distance(a, b) > r);
            }
        }
    }

    #[test]
    fn at_most_k_points_cost_zero() {
        let m = line(&[5.0]);
        let mut e = KCenterEngine::new(KCenterConfig::new(3, 0.5, 1.0, 10.0, 1)).unwrap();
        let st = e.update(UpdateOp::Insert(0), &m).unwrap();
        assert_eq!(st.cost_estimate, 0.0);
        assert_eq!(e.solution().centers, vec![0]);
        assert_eq!(e.membership(0).unwrap(), 0);
        assert_eq!(e.membership(1), Err(Error::UnknownPoint(1)));
    }

    #[test]
    fn two_points_k1_reports_smallest_covering_scale() {
        let m = line(&[0.0, 7.0]);
        let mut e = KCenterEngine::new(KCenterConfig::new(1, 0.5, 1.0, 10.0, 3)).unwrap();
        e.update(UpdateOp::Insert(0), &m).unwrap();
        let st = e.update(UpdateOp::Insert(1), &m).unwrap();
        assert!(st.cost_estimate >= 7.0 && st.cost_estimate <= 7.0 * 1.25);
        let ladder = e.ladder().scales();
        assert_eq!(st.cost_estimate, *ladder.iter().find(|&&r| r >= 7.0).unwrap());
    }

    #[test]
    fn membership_follows_scale_changes() {
        let m = line(&[0.0, 1.0, 100.0, 101.0]);
        let mut e = KCenterEngine::new(KCenterConfig::new(1, 0.5, 1.0, 128.0, 1)).unwrap();
        for p in 0..4 {
            e.update(UpdateOp::Insert(p), &m).unwrap();
        }
        assert!(e.status().cost_estimate >= 100.0);
        e.update(UpdateOp::Delete(2), &m).unwrap();
        e.update(UpdateOp::Delete(3), &m).unwrap();
        assert!(e.status().cost_estimate < 2.0);
        assert_eq!(e.membership(0).unwrap(), e.membership(1).unwrap());
    }

    #[test]
    fn invalid_updates_are_rejected_without_side_effects() {
        let m = line(&[0.0, 1.0]);
        let mut e = KCenterEngine::new(KCenterConfig::new(1, 0.5, 1.0, 2.0, 1)).unwrap();
        e.update(UpdateOp::Insert(0), &m).unwrap();
        assert_eq!(e.update(UpdateOp::Insert(0), &m), Err(Error::DuplicateInsert(0)));
        assert_eq!(e.update(UpdateOp::Delete(1), &m), Err(Error::DeleteOfInactive(1)));
        assert_eq!(e.stats().t, 1);
    }

    #[test]
    fn tiny_budget_restarts_and_stays_canonical() {
        let xs: Vec<f64> = (0..40).map(|i| (i * 7 % 40) as f64).collect();
        let m = line(&xs);
        let mut cfg = KCenterConfig::new(2, 0.5, 1.0, 64.0, 9);
        cfg.restart = Some(RestartConfig::new(0.01));
        let mut e = KCenterEngine::new(cfg).unwrap();
        for p in 0..40 {
            e.update(UpdateOp::Insert(p), &m).unwrap();
        }
        assert!(e.restarts() > 0);
        for i in 0..e.num_scales() {
            let inst = e.scale_instance(i);
            inst.audit_structure().unwrap();
            let ranks: Vec<_> = inst.ranks().collect();
            let r = e.ladder().scales()[i];
            let g = crate::oracle::greedy_lfmis(&ranks, |a, b| m.raw_distance(a, b) <= r, 3);
            assert_eq!(inst.alg().collect::<Vec<_>>(), g.prefix);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let xs: Vec<f64> = (0..30).map(|i| ((i * 13) % 31) as f64 * 1.5).collect();
        let m = line(&xs);
        let mut a = KCenterEngine::new(KCenterConfig::new(3, 0.3, 1.0, 64.0, 5)).unwrap();
        let mut cfg = KCenterConfig::new(3, 0.3, 1.0, 64.0, 5);
        cfg.parallel = true;
        let mut b = KCenterEngine::new(cfg).unwrap();
        for p in 0..30 {
            assert_eq!(a.update(UpdateOp::Insert(p), &m).unwrap(), b.update(UpdateOp::Insert(p), &m).unwrap());
        }
        for p in (0..30).step_by(3) {
            assert_eq!(a.update(UpdateOp::Delete(p), &m).unwrap(), b.update(UpdateOp::Delete(p), &m).unwrap());
        }
        assert_eq!(a.solution(), b.solution());
    }
}
