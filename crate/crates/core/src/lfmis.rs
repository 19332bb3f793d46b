//! Fully dynamic top-`(k+1)` lexicographically-first maximal independent set
//! (LFMIS) with leaders, over one threshold graph.
//!
//! Every vertex carries a random [`Rank`]. The greedy LFMIS scans vertices in
//! rank order and keeps each one that has no earlier-kept neighbor.
//! [`LfmisInstance`] maintains the first `k+1` vertices of that set (`alg`)
//! under vertex insertions and deletions. Vertices outside `alg` either
//! follow a *leader* in `alg` (a lower-ranked neighbor) or wait in a
//! rank-ordered queue until they can be placed. Whenever `|alg| ≤ k` the
//! queue is empty, so `alg` is a full maximal independent set and the leader
//! map is a clustering.
//!
//! Which vertices are adjacent is decided by an [`AlgIndex`]: the exact
//! [`ThresholdIndex`] links points at distance at most `r`, while the
//! hashing index in [`crate::lsh`] links colliding points within `c·r`.

use crate::error::{Error, Result};
use crate::metric::{Metric, PointId, UpdateOp};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashSet};

/// Priority of a vertex: a 64-bit integer read as the dyadic rational
/// `value / 2^64` in `[0, 1)`. Smaller ranks come first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rank(pub u64);

impl Rank {
    /// The rank as a real number in `[0, 1)`.
    pub fn as_unit(self) -> f64 {
        self.0 as f64 / 18_446_744_073_709_551_616.0
    }

    /// The rank closest to the real number `x ∈ [0, 1)`.
    pub fn from_unit(x: f64) -> Rank {
        Rank((x.clamp(0.0, 1.0) * 18_446_744_073_709_551_616.0).min(u64::MAX as f64) as u64)
    }
}

/// The vertices currently in `alg`, keyed by rank.
pub type AlgSet = BTreeMap<Rank, PointId>;

/// Neighbor search against the members of `alg`.
///
/// Implementations report every distance evaluation they perform by
/// incrementing `work`, which feeds the instance's operation counter.
pub trait AlgIndex {
    /// `v` (with rank `rank`) just joined `alg`.
    fn attach(&mut self, v: PointId, rank: Rank, metric: &dyn Metric);

    /// `v` just left `alg`.
    fn detach(&mut self, v: PointId, rank: Rank);

    /// `v` was deleted from the instance; drop any cached data about it.
    fn forget(&mut self, _v: PointId) {}

    /// Lowest-ranked member of `alg` adjacent to `v` (`v ∉ alg`).
    fn min_neighbor(
        &mut self,
        v: PointId,
        alg: &AlgSet,
        metric: &dyn Metric,
        work: &mut u64,
    ) -> Option<(Rank, PointId)>;

    /// All members of `alg` adjacent to `v` with rank at least `from`, in
    /// increasing rank order.
    fn neighbors_from(
        &mut self,
        v: PointId,
        from: Rank,
        alg: &AlgSet,
        metric: &dyn Metric,
        work: &mut u64,
    ) -> Vec<(Rank, PointId)>;

    /// The adjacency predicate of the graph this index realizes (for audits
    /// and oracles; not used on the update path).
    fn adjacent(&mut self, u: PointId, v: PointId, metric: &dyn Metric) -> bool;

    /// Removes every member.
    fn clear(&mut self);
}

/// Exact threshold graph: `u ~ v` iff `d(u, v) ≤ r`. Queries scan `alg` in
/// rank order, one distance evaluation per visited member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdIndex {
    /// The threshold.
    pub r: f64,
}

impl AlgIndex for ThresholdIndex {
    fn attach(&mut self, _v: PointId, _rank: Rank, _metric: &dyn Metric) {}

    fn detach(&mut self, _v: PointId, _rank: Rank) {}

    fn min_neighbor(
        &mut self,
        v: PointId,
        alg: &AlgSet,
        metric: &dyn Metric,
        work: &mut u64,
    ) -> Option<(Rank, PointId)> {
        alg.iter().map(|(&r, &u)| (r, u)).find(|&(_, u)| {
            *work += 1;
            metric.distance(v, u) <= self.r
        })
    }

    fn neighbors_from(
        &mut self,
        v: PointId,
        from: Rank,
        alg: &AlgSet,
        metric: &dyn Metric,
        work: &mut u64,
    ) -> Vec<(Rank, PointId)> {
        alg.range(from..)
            .map(|(&r, &u)| (r, u))
            .filter(|&(_, u)| {
                *work += 1;
                metric.distance(v, u) <= self.r
            })
            .collect()
    }

    fn adjacent(&mut self, u: PointId, v: PointId, metric: &dyn Metric) -> bool {
        metric.distance(u, v) <= self.r
    }

    fn clear(&mut self) {}
}

/// Where a vertex currently lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Place {
    /// Member of `alg`.
    Alg,
    /// Waiting in the queue (leader `⊥`).
    Queue,
    /// Follower of the given leader.
    Follower(PointId),
}

#[derive(Debug, Clone)]
struct Vertex {
    rank: Rank,
    place: Place,
    followers: Vec<PointId>,
    /// Position of this vertex in its leader's follower list.
    slot: usize,
}

/// Instrumentation counters of one instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Pushes into the queue.
    pub queue_insertions: u64,
    /// Pops from the queue.
    pub queue_pops: u64,
    /// Assignments of a non-`⊥` leader.
    pub leader_changes: u64,
    /// Vertices displaced from `alg` by a lower-ranked neighbor (each such
    /// displacement changes that vertex's eliminator).
    pub eliminator_changes: u64,
    /// Distance evaluations made by the index.
    pub distance_calls: u64,
}

impl Counters {
    /// Elementary operations: queue pushes and pops plus distance calls.
    pub fn ops(&self) -> u64 {
        self.queue_insertions + self.queue_pops + self.distance_calls
    }
}

/// Dynamic top-`(k+1)` LFMIS with leaders over the graph realized by `I`.
#[derive(Debug, Clone)]
pub struct LfmisInstance<I = ThresholdIndex> {
    k: usize,
    index: I,
    alg: AlgSet,
    queue: BTreeSet<(Rank, PointId)>,
    verts: Vec<Option<Vertex>>,
    used_ranks: HashSet<Rank>,
    rng: ChaCha8Rng,
    counters: Counters,
}

impl LfmisInstance<ThresholdIndex> {
    /// Instance over the exact threshold graph at distance `r`.
    pub fn threshold(k: usize, r: f64, seed: u64) -> Self {
        Self::new(k, ThresholdIndex { r }, seed)
    }
}

impl<I: AlgIndex> LfmisInstance<I> {
    /// Empty instance keeping the first `k+1` LFMIS vertices; ranks are
    /// drawn from a generator seeded with `seed`.
    pub fn new(k: usize, index: I, seed: u64) -> Self {
        LfmisInstance {
            k,
            index,
            alg: BTreeMap::new(),
            queue: BTreeSet::new(),
            verts: Vec::new(),
            used_ranks: HashSet::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            counters: Counters::default(),
        }
    }

    /// Applies one update with a freshly drawn rank for insertions, then
    /// drains the queue.
    pub fn process_update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<()> {
        match op {
            UpdateOp::Insert(v) => {
                let rank = self.draw_rank();
                self.insert_with_rank(v, rank, metric)
            }
            UpdateOp::Delete(v) => self.delete(v, metric),
        }
    }

    /// Inserts `v` with a caller-chosen rank (which must be unused), then
    /// drains the queue.
    pub fn insert_with_rank(&mut self, v: PointId, rank: Rank, metric: &dyn Metric) -> Result<()> {
        if self.vertex(v).is_some() || self.used_ranks.contains(&rank) {
            return Err(Error::DuplicateInsert(v));
        }
        let i = v as usize;
        if self.verts.len() <= i {
            self.verts.resize(i + 1, None);
        }
        self.used_ranks.insert(rank);
        self.verts[i] = Some(Vertex { rank, place: Place::Queue, followers: Vec::new(), slot: 0 });
        self.insert_vertex(v, metric);
        self.drain(metric);
        Ok(())
    }

    /// Deletes `v`, then drains the queue.
    pub fn delete(&mut self, v: PointId, metric: &dyn Metric) -> Result<()> {
        let vert = self.vertex(v).ok_or(Error::UnknownPoint(v))?;
        let (rank, place) = (vert.rank, vert.place);
        match place {
            Place::Follower(u) => self.unlink_follower(v, u),
            Place::Queue => {
                self.queue.remove(&(rank, v));
                self.release_followers(v);
            }
            Place::Alg => {
                self.alg.remove(&rank);
                self.index.detach(v, rank);
                self.release_followers(v);
            }
        }
        self.index.forget(v);
        self.used_ranks.remove(&rank);
        self.verts[v as usize] = None;
        self.drain(metric);
        Ok(())
    }

    /// Removes all vertices, then re-inserts `active` (in the given order)
    /// with ranks from a generator reseeded with `seed`.
    pub fn rebuild(&mut self, active: impl IntoIterator<Item = PointId>, seed: u64, metric: &dyn Metric) {
        self.alg.clear();
        self.queue.clear();
        self.verts.clear();
        self.used_ranks.clear();
        self.index.clear();
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        for v in active {
            let rank = self.draw_rank();
            self.insert_with_rank(v, rank, metric).expect("rebuild replays distinct points");
        }
    }

    fn draw_rank(&mut self) -> Rank {
        loop {
            let r = Rank(self.rng.next_u64());
            if !self.used_ranks.contains(&r) {
                return r;
            }
        }
    }

    fn vertex(&self, v: PointId) -> Option<&Vertex> {
        self.verts.get(v as usize).and_then(Option::as_ref)
    }

    fn vert_mut(&mut self, v: PointId) -> &mut Vertex {
        self.verts[v as usize].as_mut().expect("vertex is present")
    }

    fn rank_of(&self, v: PointId) -> Rank {
        self.vertex(v).expect("vertex is present").rank
    }

    /// Places `v`, whose leader is `⊥` and which is neither in `alg` nor in
    /// the queue (it may still own followers if it was an inactive leader).
    fn insert_vertex(&mut self, v: PointId, metric: &dyn Metric) {
        let rv = self.rank_of(v);
        if self.alg.len() == self.k + 1 && self.alg.last_key_value().is_some_and(|(&m, _)| rv > m) {
            self.push_queue(v);
            return;
        }
        let mut work = 0;
        let first = self.index.min_neighbor(v, &self.alg, metric, &mut work);
        match first {
            None => {
                self.join_alg(v, metric);
                if self.alg.len() == self.k + 2 {
                    let (r, u) = self.alg.pop_last().expect("alg is nonempty");
                    self.index.detach(u, r);
                    self.push_queue(u);
                }
            }
            Some((ru, u)) if ru < rv => {
                self.release_followers(v);
                self.link_follower(v, u);
            }
            Some((ru, _)) => {
                let s = self.index.neighbors_from(v, ru, &self.alg, metric, &mut work);
                for (r, u) in s {
                    self.release_followers(u);
                    self.alg.remove(&r);
                    self.index.detach(u, r);
                    self.link_follower(u, v);
                    self.counters.eliminator_changes += 1;
                }
                self.join_alg(v, metric);
            }
        }
        self.counters.distance_calls += work;
    }

    fn drain(&mut self, metric: &dyn Metric) {
        while let Some(&(rq, u)) = self.queue.first() {
            let go = self.alg.len() <= self.k || self.alg.last_key_value().is_some_and(|(&m, _)| rq < m);
            if !go {
                break;
            }
            self.queue.pop_first();
            self.counters.queue_pops += 1;
            self.insert_vertex(u, metric);
        }
    }

    fn join_alg(&mut self, v: PointId, metric: &dyn Metric) {
        let vert = self.vert_mut(v);
        vert.place = Place::Alg;
        let rank = vert.rank;
        self.alg.insert(rank, v);
        self.index.attach(v, rank, metric);
    }

    fn push_queue(&mut self, v: PointId) {
        let vert = self.vert_mut(v);
        vert.place = Place::Queue;
        let rank = vert.rank;
        self.queue.insert((rank, v));
        self.counters.queue_insertions += 1;
    }

    /// Sends every follower of `v` to the queue with leader `⊥`.
    fn release_followers(&mut self, v: PointId) {
        let followers = std::mem::take(&mut self.vert_mut(v).followers);
        for f in followers {
            self.push_queue(f);
        }
    }

    fn link_follower(&mut self, v: PointId, leader: PointId) {
        let slot = {
            let l = self.vert_mut(leader);
            l.followers.push(v);
            l.followers.len() - 1
        };
        let vert = self.vert_mut(v);
        vert.place = Place::Follower(leader);
        vert.slot = slot;
        self.counters.leader_changes += 1;
    }

    fn unlink_follower(&mut self, v: PointId, leader: PointId) {
        let slot = self.vertex(v).expect("vertex is present").slot;
        let l = self.vert_mut(leader);
        l.followers.swap_remove(slot);
        if let Some(&moved) = l.followers.get(slot) {
            self.vert_mut(moved).slot = slot;
        }
    }

    /// The configured `k`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Members of `alg` in increasing rank order.
    pub fn alg(&self) -> impl Iterator<Item = PointId> + '_ {
        self.alg.values().copied()
    }

    /// `alg` keyed by rank.
    pub fn alg_set(&self) -> &AlgSet {
        &self.alg
    }

    /// Number of members of `alg`.
    pub fn alg_len(&self) -> usize {
        self.alg.len()
    }

    /// Whether `v` is in `alg`.
    pub fn in_alg(&self, v: PointId) -> bool {
        self.place(v) == Some(Place::Alg)
    }

    /// Queued vertices in increasing rank order.
    pub fn queue(&self) -> impl Iterator<Item = PointId> + '_ {
        self.queue.iter().map(|&(_, v)| v)
    }

    /// Number of queued vertices.
    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Where `v` lives, or `None` if it is not in the instance.
    pub fn place(&self, v: PointId) -> Option<Place> {
        self.vertex(v).map(|x| x.place)
    }

    /// Leader of `v` (`None` stands for `⊥` or an unknown vertex).
    pub fn leader(&self, v: PointId) -> Option<PointId> {
        match self.place(v)? {
            Place::Follower(u) => Some(u),
            _ => None,
        }
    }

    /// Followers of `v` (empty for unknown vertices), in no particular order.
    pub fn followers(&self, v: PointId) -> &[PointId] {
        self.vertex(v).map_or(&[], |x| x.followers.as_slice())
    }

    /// Rank of `v`.
    pub fn rank(&self, v: PointId) -> Option<Rank> {
        self.vertex(v).map(|x| x.rank)
    }

    /// All vertices with their ranks, in increasing identifier order.
    pub fn ranks(&self) -> impl Iterator<Item = (PointId, Rank)> + '_ {
        self.verts.iter().enumerate().filter_map(|(i, x)| x.as_ref().map(|x| (i as PointId, x.rank)))
    }

    /// Number of vertices in the instance.
    pub fn len(&self) -> usize {
        self.used_ranks.len()
    }

    /// Whether the instance holds no vertex.
    pub fn is_empty(&self) -> bool {
        self.used_ranks.is_empty()
    }

    /// Instrumentation counters.
    pub fn counters(&self) -> Counters {
        self.counters
    }

    /// The adjacency index.
    pub fn index(&self) -> &I {
        &self.index
    }

    /// Mutable access to the adjacency index (for audits).
    pub fn index_mut(&mut self) -> &mut I {
        &mut self.index
    }

    /// Checks the structural invariants that do not need distances:
    /// `|alg| ≤ k+1`, followers are the exact inverse of the leader map,
    /// leaders rank below their followers, and an `alg` of size at most `k`
    /// comes with an empty queue and leaders inside `alg`.
    pub fn audit_structure(&self) -> std::result::Result<(), String> {
        if self.alg.len() > self.k + 1 {
            return Err(format!("|alg| = {} exceeds k+1 = {}", self.alg.len(), self.k + 1));
        }
        for (&r, &v) in &self.alg {
            if self.vertex(v).map(|x| (x.rank, x.place)) != Some((r, Place::Alg)) {
                return Err(format!("alg entry {v} is inconsistent"));
            }
        }
        for &(r, v) in &self.queue {
            if self.vertex(v).map(|x| (x.rank, x.place)) != Some((r, Place::Queue)) {
                return Err(format!("queue entry {v} is inconsistent"));
            }
        }
        let mut follower_count = 0;
        for (i, x) in self.verts.iter().enumerate() {
            let Some(x) = x else { continue };
            let v = i as PointId;
            for (slot, &f) in x.followers.iter().enumerate() {
                follower_count += 1;
                let fv = self.vertex(f).ok_or(format!("follower {f} of {v} is gone"))?;
                if fv.place != Place::Follower(v) || fv.slot != slot {
                    return Err(format!("follower {f} of {v} does not point back"));
                }
            }
            if let Place::Follower(u) = x.place {
                let uv = self.vertex(u).ok_or(format!("leader {u} of {v} is gone"))?;
                if uv.rank >= x.rank {
                    return Err(format!("leader {u} of {v} does not rank lower"));
                }
                if self.alg.len() <= self.k && uv.place != Place::Alg {
                    return Err(format!("leader {u} of {v} is not in alg although |alg| <= k"));
                }
            }
        }
        let followers_by_place = self.verts.iter().flatten().filter(|x| matches!(x.place, Place::Follower(_))).count();
        if follower_count != followers_by_place {
            return Err("follower lists and leader map disagree".into());
        }
        if self.alg.len() <= self.k && !self.queue.is_empty() {
            return Err("queue is nonempty although |alg| <= k".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{DistanceOracle, MetricKind};

    /// Points on a line at the given positions, with threshold 1.
    fn line(xs: &[f64]) -> DistanceOracle {
        let mut o = DistanceOracle::new(MetricKind::L1);
        for &x in xs {
            o.register(vec![x]).unwrap();
        }
        o
    }

    fn rank(x: f64) -> Rank {
        Rank::from_unit(x)
    }

    fn alg_vec<I: AlgIndex>(inst: &LfmisInstance<I>) -> Vec<PointId> {
        inst.alg().collect()
    }

    #[test]
    fn single_insert() {
        let m = line(&[0.0]);
        let mut inst = LfmisInstance::threshold(2, 1.0, 1);
        inst.process_update(UpdateOp::Insert(0), &m).unwrap();
        assert_eq!(alg_vec(&inst), vec![0]);
        assert_eq!(inst.queue_len(), 0);
        assert_eq!(inst.leader(0), None);
    }

    #[test]
    fn clique_keeps_min_rank() {
        let m = line(&[0.0, 0.1, 0.2]);
        let mut inst = LfmisInstance::threshold(2, 1.0, 1);
        inst.insert_with_rank(1, rank(0.5), &m).unwrap();
        inst.insert_with_rank(0, rank(0.2), &m).unwrap();
        inst.insert_with_rank(2, rank(0.7), &m).unwrap();
        assert_eq!(alg_vec(&inst), vec![0]);
        assert_eq!(inst.leader(1), Some(0));
        assert_eq!(inst.leader(2), Some(0));
        inst.audit_structure().unwrap();
    }

    #[test]
    fn path_deletion_promotes_ends() {
        // a=0, b=1, c=2 at unit spacing: edges ab and bc only.
        let m = line(&[0.0, 1.0, 2.0]);
        let mut inst = LfmisInstance::threshold(1, 1.0, 1);
        inst.insert_with_rank(0, rank(0.2), &m).unwrap();
        inst.insert_with_rank(1, rank(0.1), &m).unwrap();
        inst.insert_with_rank(2, rank(0.3), &m).unwrap();
        assert_eq!(alg_vec(&inst), vec![1]);
        assert_eq!(inst.leader(0), Some(1));
        assert_eq!(inst.leader(2), Some(1));
        inst.process_update(UpdateOp::Delete(1), &m).unwrap();
        assert_eq!(alg_vec(&inst), vec![0, 2]);
        inst.audit_structure().unwrap();
    }

    #[test]
    fn isolated_vertices_fill_alg_then_queue() {
        let m = line(&[0.0, 10.0, 20.0, 30.0, 40.0]);
        let mut inst = LfmisInstance::threshold(2, 1.0, 1);
        for (v, r) in [(0, 0.5), (1, 0.1), (2, 0.9), (3, 0.3), (4, 0.7)] {
            inst.insert_with_rank(v, rank(r), &m).unwrap();
        }
        assert_eq!(alg_vec(&inst), vec![1, 3, 0]);
        assert_eq!(inst.queue().collect::<Vec<_>>(), vec![4, 2]);
        inst.audit_structure().unwrap();
    }

    #[test]
    fn full_alg_enqueues_high_rank() {
        let m = line(&[0.0, 10.0, 20.0]);
        let mut inst = LfmisInstance::threshold(1, 1.0, 1);
        inst.insert_with_rank(0, rank(0.1), &m).unwrap();
        inst.insert_with_rank(1, rank(0.2), &m).unwrap();
        let before = inst.counters().distance_calls;
        inst.insert_with_rank(2, rank(0.99), &m).unwrap();
        assert_eq!(alg_vec(&inst), vec![0, 1]);
        assert_eq!(inst.queue().collect::<Vec<_>>(), vec![2]);
        assert_eq!(inst.counters().distance_calls, before);
    }

    #[test]
    fn lower_rank_insert_takes_over() {
        let m = line(&[0.0, 0.5]);
        let mut inst = LfmisInstance::threshold(1, 1.0, 1);
        inst.insert_with_rank(0, rank(0.2), &m).unwrap();
        inst.insert_with_rank(1, rank(0.1), &m).unwrap();
        assert_eq!(alg_vec(&inst), vec![1]);
        assert_eq!(inst.leader(0), Some(1));
        assert_eq!(inst.counters().eliminator_changes, 1);
    }

    #[test]
    fn higher_rank_insert_follows() {
        let m = line(&[0.0, 0.5]);
        let mut inst = LfmisInstance::threshold(1, 1.0, 1);
        inst.insert_with_rank(0, rank(0.2), &m).unwrap();
        inst.insert_with_rank(1, rank(0.5), &m).unwrap();
        assert_eq!(alg_vec(&inst), vec![0]);
        assert_eq!(inst.leader(1), Some(0));
    }

    #[test]
    fn deleting_follower_only_shrinks_list() {
        let m = line(&[0.0, 0.1, 0.2, 0.3]);
        let mut inst = LfmisInstance::threshold(1, 1.0, 1);
        for (v, r) in [(0, 0.1), (1, 0.2), (2, 0.3), (3, 0.4)] {
            inst.insert_with_rank(v, rank(r), &m).unwrap();
        }
        let q = inst.counters().queue_insertions;
        inst.process_update(UpdateOp::Delete(1), &m).unwrap();
        assert_eq!(alg_vec(&inst), vec![0]);
        let mut f = inst.followers(0).to_vec();
        f.sort();
        assert_eq!(f, vec![2, 3]);
        assert_eq!(inst.counters().queue_insertions, q);
        inst.audit_structure().unwrap();
    }

    #[test]
    fn deleting_sole_leader_reelects_min_follower() {
        let m = line(&[0.0, 0.1, 0.2, 0.3]);
        let mut inst = LfmisInstance::threshold(1, 1.0, 1);
        for (v, r) in [(0, 0.1), (1, 0.4), (2, 0.3), (3, 0.2)] {
            inst.insert_with_rank(v, rank(r), &m).unwrap();
        }
        let q = inst.counters().queue_insertions;
        inst.process_update(UpdateOp::Delete(0), &m).unwrap();
        assert_eq!(inst.counters().queue_insertions, q + 3);
        assert_eq!(alg_vec(&inst), vec![3]);
        assert_eq!(inst.queue_len(), 0);
        inst.audit_structure().unwrap();
    }

    #[test]
    fn deleting_queued_vertex() {
        let m = line(&[0.0, 10.0, 20.0]);
        let mut inst = LfmisInstance::threshold(1, 1.0, 1);
        for (v, r) in [(0, 0.1), (1, 0.2), (2, 0.3)] {
            inst.insert_with_rank(v, rank(r), &m).unwrap();
        }
        assert_eq!(inst.queue_len(), 1);
        inst.process_update(UpdateOp::Delete(2), &m).unwrap();
        assert_eq!(inst.queue_len(), 0);
        assert_eq!(alg_vec(&inst), vec![0, 1]);
    }

    #[test]
    fn errors_on_bad_updates() {
        let m = line(&[0.0]);
        let mut inst = LfmisInstance::threshold(1, 1.0, 1);
        assert_eq!(inst.process_update(UpdateOp::Delete(0), &m), Err(Error::UnknownPoint(0)));
        inst.process_update(UpdateOp::Insert(0), &m).unwrap();
        assert_eq!(inst.process_update(UpdateOp::Insert(0), &m), Err(Error::DuplicateInsert(0)));
    }

    #[test]
    fn rank_unit_round_trip() {
        assert_eq!(Rank::from_unit(0.0), Rank(0));
        assert!((Rank::from_unit(0.25).as_unit() - 0.25).abs() < 1e-15);
        assert!(Rank::from_unit(0.1) < Rank::from_unit(0.2));
    }
}
