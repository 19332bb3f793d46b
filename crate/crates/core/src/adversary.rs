//! Executable lower-bound constructions.
//!
//! The *metric-adaptive adversary* decides distances on the fly. It keeps a
//! graph with one vertex per point ever inserted; unit edges record answered
//! queries. Each vertex is *open*, *closed* (degree reached `100·f(k,t)`) or
//! *off* (deleted). A query is answered with the shortest-path length in the
//! recorded graph augmented by unit edges between all open vertices, and the
//! (at most one) augmented edge on the path is recorded. The next update
//! deletes a closed point if one exists and inserts a fresh one otherwise.
//!
//! At a *clean* moment (no closed vertex) every graph obtained by adding
//! unit edges between open vertices yields a metric consistent with all
//! answers: the uniform metric where all current points are at distance 1,
//! and the layered metric around a point `p*` where points in BFS layers `i`
//! and `i′` are `max(|i−i′|, 1)` apart. An algorithm that queries few
//! distances cannot tell them apart, which [`run_gauntlet`] measures.
//!
//! [`generate_planted`] builds the oblivious planted-cluster hard instance.

use crate::error::{Error, Result};
use crate::kcenter::{ExactFactory, KCenterEngine};
use crate::metric::{ActiveSet, DistanceOracle, Metric, MetricKind, PointId, UpdateOp};
use crate::sum_radii::SumRadiiEngine;
use crate::tree::TreeEngine;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

/// Query budget `f(k, n)`: allowed distance queries per operation, for
/// every fixed `k` non-decreasing in `n`.
pub type BudgetFn = Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>;

/// A constant budget function.
pub fn constant_budget(f: f64) -> BudgetFn {
    Arc::new(move |_, _| f)
}

/// Vertex label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    /// Current point with small degree.
    Open,
    /// Current point whose degree reached the closing threshold.
    Closed,
    /// Deleted point.
    Off,
}

/// One answered query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Answer {
    /// Queried pair.
    pub a: PointId,
    /// Queried pair.
    pub b: PointId,
    /// Reported distance.
    pub value: u32,
    /// Operation during which it was answered.
    pub t: u64,
}

/// State of the metric-adaptive adversary.
pub struct AdversaryState {
    k: usize,
    f: BudgetFn,
    adj: Vec<Vec<PointId>>,
    edges: HashSet<(PointId, PointId)>,
    labels: Vec<Label>,
    semi_open: Vec<bool>,
    t: u64,
    n_active: usize,
    open: usize,
    closed: usize,
    answers: Vec<Answer>,
    cache: HashMap<(PointId, PointId), u32>,
    budget_allowed: f64,
    clean_ops: Vec<u64>,
    min_open_ratio: f64,
    closings: u64,
    repairs: u64,
    donor_violations: u64,
    repair_failures: u64,
    degree_cap_violations: u64,
}

impl fmt::Debug for AdversaryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdversaryState")
            .field("k", &self.k)
            .field("t", &self.t)
            .field("vertices", &self.labels.len())
            .field("open", &self.open)
            .field("closed", &self.closed)
            .field("answers", &self.answers.len())
            .finish_non_exhaustive()
    }
}

fn key(a: PointId, b: PointId) -> (PointId, PointId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl AdversaryState {
    /// Fresh adversary for `k` clusters and budget `f`.
    pub fn new(k: usize, f: BudgetFn) -> Self {
        AdversaryState {
            k,
            f,
            adj: Vec::new(),
            edges: HashSet::new(),
            labels: Vec::new(),
            semi_open: Vec::new(),
            t: 0,
            n_active: 0,
            open: 0,
            closed: 0,
            answers: Vec::new(),
            cache: HashMap::new(),
            budget_allowed: 0.0,
            clean_ops: Vec::new(),
            min_open_ratio: f64::INFINITY,
            closings: 0,
            repairs: 0,
            donor_violations: 0,
            repair_failures: 0,
            degree_cap_violations: 0,
        }
    }

    fn f_now(&self) -> f64 {
        (self.f)(self.k, self.t.max(1) as usize)
    }

    /// Next update: delete the closed point with the smallest identifier,
    /// or insert a fresh point when no vertex is closed.
    pub fn generate_update(&mut self) -> UpdateOp {
        self.t += 1;
        let closed = (self.closed > 0).then(|| self.labels.iter().position(|&l| l == Label::Closed)).flatten();
        let op = match closed {
            Some(x) => {
                self.labels[x] = Label::Off;
                self.closed -= 1;
                self.n_active -= 1;
                UpdateOp::Delete(x as PointId)
            }
            None => {
                let x = self.labels.len() as PointId;
                self.labels.push(Label::Open);
                self.semi_open.push(false);
                self.adj.push(Vec::new());
                self.open += 1;
                self.n_active += 1;
                self.clean_ops.push(self.t);
                UpdateOp::Insert(x)
            }
        };
        self.budget_allowed += (self.f)(self.k, self.n_active);
        self.min_open_ratio = self.min_open_ratio.min(self.open as f64 / (0.92 * self.t as f64));
        op
    }

    fn check(&self, p: PointId) -> Result<()> {
        if (p as usize) < self.labels.len() {
            Ok(())
        } else {
            Err(Error::UnknownPoint(p))
        }
    }

    /// Shortest path between `a` and `b` in the recorded graph plus all
    /// open–open edges; returns the length and the augmented edge used.
    fn shortest(&self, a: PointId, b: PointId) -> (u32, Option<(PointId, PointId)>) {
        if a == b {
            return (0, None);
        }
        let is_open = |v: PointId| self.labels[v as usize] == Label::Open;
        if is_open(a) && is_open(b) {
            let virt = (!self.edges.contains(&key(a, b))).then_some((a, b));
            return (1, virt);
        }
        let n = self.labels.len();
        const NONE: u32 = u32::MAX;
        let mut dist = vec![NONE; n];
        // Parent and whether the step used an augmented edge.
        let mut parent: Vec<(PointId, bool)> = vec![(0, false); n];
        let mut frontier = vec![a];
        dist[a as usize] = 0;
        let mut hub: Option<PointId> = is_open(a).then_some(a);
        let mut jumped = false;
        let mut d = 0;
        while !frontier.is_empty() && dist[b as usize] == NONE {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in &self.adj[u as usize] {
                    if dist[w as usize] == NONE {
                        dist[w as usize] = d + 1;
                        parent[w as usize] = (u, false);
                        next.push(w);
                    }
                }
                if hub.is_none() && is_open(u) {
                    hub = Some(u);
                }
            }
            if let (Some(h), false) = (hub, jumped) {
                jumped = true;
                for v in 0..n as PointId {
                    if dist[v as usize] == NONE && is_open(v) {
                        dist[v as usize] = d + 1;
                        parent[v as usize] = (h, true);
                        next.push(v);
                    }
                }
            }
            frontier = next;
            d += 1;
        }
        let value = dist[b as usize];
        assert!(value != NONE, "every component holds an open vertex");
        let mut virt = None;
        let mut v = b;
        while v != a {
            let (u, via) = parent[v as usize];
            if via && !self.edges.contains(&key(u, v)) {
                virt = Some((u, v));
            }
            v = u;
        }
        (value, virt)
    }

    fn add_edge(&mut self, u: PointId, v: PointId) {
        if self.edges.insert(key(u, v)) {
            self.adj[u as usize].push(v);
            self.adj[v as usize].push(u);
        }
    }

    /// Updates labels after `v` gained an edge; returns whether it closed.
    fn relabel(&mut self, v: PointId) -> bool {
        let f = self.f_now();
        let deg = self.adj[v as usize].len() as f64;
        if deg > (100.0 * f).ceil() + 1.0 {
            self.degree_cap_violations += 1;
        }
        if self.labels[v as usize] != Label::Open {
            return false;
        }
        if deg > 50.0 * f {
            self.semi_open[v as usize] = true;
        }
        if deg >= 100.0 * f {
            self.labels[v as usize] = Label::Closed;
            self.open -= 1;
            self.closed += 1;
            self.closings += 1;
            return true;
        }
        false
    }

    fn component_has_open(&self, start: PointId) -> bool {
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            if self.labels[u as usize] == Label::Open {
                return true;
            }
            for &w in &self.adj[u as usize] {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        false
    }

    /// Answers a distance query, recording the augmented edge it used and
    /// repairing components left without an open vertex.
    pub fn answer_query(&mut self, a: PointId, b: PointId) -> Result<u32> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Ok(0);
        }
        if let Some(&v) = self.cache.get(&key(a, b)) {
            return Ok(v);
        }
        let (value, virt) = self.shortest(a, b);
        if let Some((u, v)) = virt {
            self.add_edge(u, v);
            let closed_u = self.relabel(u);
            let closed_v = self.relabel(v);
            if (closed_u || closed_v) && !self.component_has_open(u) {
                // Attach a just-closed endpoint: it was open a moment ago, so
                // the new edge was already present in the augmented graph.
                let w = match (closed_u, closed_v) {
                    (true, true) => {
                        if (self.adj[u as usize].len(), u) <= (self.adj[v as usize].len(), v) {
                            u
                        } else {
                            v
                        }
                    }
                    (true, false) => u,
                    _ => v,
                };
                let donor = (0..self.labels.len() as PointId)
                    .filter(|&x| self.labels[x as usize] == Label::Open)
                    .min_by_key(|&x| (self.adj[x as usize].len(), x));
                match donor {
                    Some(x) => {
                        if self.adj[x as usize].len() as f64 > 50.0 * self.f_now() {
                            self.donor_violations += 1;
                        }
                        self.add_edge(w, x);
                        self.repairs += 1;
                        self.relabel(w);
                        self.relabel(x);
                    }
                    None => self.repair_failures += 1,
                }
            }
        }
        self.cache.insert(key(a, b), value);
        self.answers.push(Answer { a, b, value, t: self.t });
        Ok(value)
    }

    /// Label of a vertex.
    pub fn label(&self, p: PointId) -> Result<Label> {
        self.check(p)?;
        Ok(self.labels[p as usize])
    }

    /// Degree of a vertex in the recorded graph.
    pub fn degree(&self, p: PointId) -> usize {
        self.adj.get(p as usize).map_or(0, Vec::len)
    }

    /// Recorded neighbors of a vertex.
    pub fn neighbors(&self, p: PointId) -> &[PointId] {
        &self.adj[p as usize]
    }

    /// Number of vertices (points ever inserted).
    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }

    /// Number of recorded edges.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Current operation index.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// `k`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Budget value `f(k, n)`.
    pub fn budget_at(&self, n: usize) -> f64 {
        (self.f)(self.k, n)
    }

    /// Open, closed and off counts.
    pub fn label_counts(&self) -> (usize, usize, usize) {
        (self.open, self.closed, self.labels.len() - self.open - self.closed)
    }

    /// Number of current points.
    pub fn n_active(&self) -> usize {
        self.n_active
    }

    /// Whether no vertex is closed right now.
    pub fn is_clean(&self) -> bool {
        self.closed == 0
    }

    /// Operations that started without closed vertices.
    pub fn clean_ops(&self) -> &[u64] {
        &self.clean_ops
    }

    /// Whether every window `(t, 2t]` with `2t ≤` the current operation
    /// contains a clean operation.
    pub fn clean_in_every_window(&self) -> bool {
        (1..=self.t / 2).all(|t| {
            let i = self.clean_ops.partition_point(|&c| c <= t);
            self.clean_ops.get(i).is_some_and(|&c| c <= 2 * t)
        })
    }

    /// Smallest ratio `open / (0.92·t)` seen after any update (≥ 1 means the
    /// open-fraction bound held throughout).
    pub fn min_open_ratio(&self) -> f64 {
        self.min_open_ratio
    }

    /// All answers in order.
    pub fn answers(&self) -> &[Answer] {
        &self.answers
    }

    /// Cumulative query allowance `Σ f(k, n_i)`.
    pub fn budget_allowed(&self) -> f64 {
        self.budget_allowed
    }

    /// Largest degree.
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Diagnostic counters: closings, repair edges, repairs whose donor had
    /// degree above `50·f`, repairs without any open donor, and degree-cap
    /// violations.
    pub fn diagnostics(&self) -> AdversaryDiagnostics {
        AdversaryDiagnostics {
            closings: self.closings,
            repairs: self.repairs,
            donor_violations: self.donor_violations,
            repair_failures: self.repair_failures,
            degree_cap_violations: self.degree_cap_violations,
            semi_open: self.semi_open.iter().filter(|&&s| s).count(),
        }
    }

    /// Builds a consistent metric and re-verifies every recorded answer.
    pub fn materialize_metric(&self, spec: MetricSpec) -> Result<(ConsistentMetric, ConsistencyReport)> {
        if !self.is_clean() {
            return Err(Error::NotCleanOperation(self.t));
        }
        let metric = ConsistentMetric::build(self, spec)?;
        let report = metric.verify(&self.answers);
        Ok((metric, report))
    }
}

/// Diagnostic counters of an adversary run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AdversaryDiagnostics {
    /// Vertices that became closed.
    pub closings: u64,
    /// Repair edges added.
    pub repairs: u64,
    /// Repairs whose donor had degree above `50·f`.
    pub donor_violations: u64,
    /// Repairs that found no open donor.
    pub repair_failures: u64,
    /// Times a degree exceeded `⌈100·f⌉ + 1`.
    pub degree_cap_violations: u64,
    /// Vertices that ever had degree above `50·f` while open.
    pub semi_open: usize,
}

/// The adversary as a counted [`Metric`]. Queries mutate the adversary, so
/// engines driven by it must run sequentially for reproducible answers.
#[derive(Debug)]
pub struct AdversaryMetric {
    state: Mutex<AdversaryState>,
    queries: AtomicU64,
}

impl AdversaryMetric {
    /// Wraps an adversary.
    pub fn new(state: AdversaryState) -> Self {
        AdversaryMetric { state: Mutex::new(state), queries: AtomicU64::new(0) }
    }

    /// Locks the adversary state.
    pub fn state(&self) -> MutexGuard<'_, AdversaryState> {
        self.state.lock().expect("adversary lock is not poisoned")
    }

    /// Next update of the adversarial stream.
    pub fn generate_update(&self) -> UpdateOp {
        self.state().generate_update()
    }

    /// Counted query that reports unknown points instead of panicking.
    pub fn checked_distance(&self, a: PointId, b: PointId) -> Result<f64> {
        let v = self.state().answer_query(a, b)?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        Ok(v as f64)
    }
}

impl Metric for AdversaryMetric {
    fn distance(&self, a: PointId, b: PointId) -> f64 {
        self.checked_distance(a, b).expect("queried points were inserted by the adversary")
    }

    fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    fn kind(&self) -> MetricKind {
        MetricKind::Adversary
    }
}

/// Which consistent metric to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSpec {
    /// All current points pairwise at distance 1.
    Uni,
    /// Points in BFS layers `i`, `i′` around `center` at `max(|i−i′|, 1)`.
    Star {
        /// The point `p*`.
        center: PointId,
    },
    /// Like [`MetricSpec::Star`], with layers `≤ l1` and layers `≥ l2`
    /// merged into two groups at mutual distance 1.
    Range {
        /// The point `p*`.
        center: PointId,
        /// Lower grouping threshold.
        l1: u32,
        /// Upper grouping threshold.
        l2: u32,
    },
}

/// Result of re-verifying recorded answers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConsistencyReport {
    /// Number of answers checked.
    pub checked: usize,
    /// Answers that disagree: `(answer, metric value)`.
    pub failures: Vec<(Answer, u32)>,
}

impl ConsistencyReport {
    /// Whether every answer agrees.
    pub fn all_consistent(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A shortest-path metric on the recorded graph plus unit edges between
/// open vertices, realized implicitly.
///
/// Open components of the recorded graph are first chained by unit edges
/// between their smallest open vertices (allowed: they join open vertices),
/// so that every point has a finite BFS layer around `p*`.
#[derive(Debug, Clone)]
pub struct ConsistentMetric {
    spec: MetricSpec,
    adj: Vec<Vec<PointId>>,
    open: Vec<bool>,
    layer: Vec<u32>,
    layer_lists: Vec<Vec<PointId>>,
    lo: i64,
    hi: i64,
}

impl ConsistentMetric {
    fn build(state: &AdversaryState, spec: MetricSpec) -> Result<Self> {
        let n = state.labels.len();
        let open: Vec<bool> = state.labels.iter().map(|&l| l == Label::Open).collect();
        let mut adj = state.adj.clone();
        // Chain components through their smallest open vertex.
        let mut comp = vec![usize::MAX; n];
        let mut reps: Vec<PointId> = Vec::new();
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = reps.len();
            let mut rep: Option<PointId> = None;
            let mut queue = VecDeque::from([s as PointId]);
            comp[s] = id;
            while let Some(u) = queue.pop_front() {
                if open[u as usize] && rep.is_none_or(|r| u < r) {
                    rep = Some(u);
                }
                for &w in &state.adj[u as usize] {
                    if comp[w as usize] == usize::MAX {
                        comp[w as usize] = id;
                        queue.push_back(w);
                    }
                }
            }
            // Components made only of off vertices are unreachable by any
            // answer; they stay isolated.
            reps.push(rep.unwrap_or(PointId::MAX));
        }
        let chain: Vec<PointId> = reps.into_iter().filter(|&r| r != PointId::MAX).collect();
        for w in chain.windows(2) {
            adj[w[0] as usize].push(w[1]);
            adj[w[1] as usize].push(w[0]);
        }
        let (center, lo, hi) = match spec {
            MetricSpec::Uni => (None, -1, 0),
            MetricSpec::Star { center } => (Some(center), -1, i64::MAX),
            MetricSpec::Range { center, l1, l2 } => {
                if l1 >= l2 {
                    return Err(Error::InvalidConfig(format!("range thresholds need l1 < l2, got {l1} ≥ {l2}")));
                }
                (Some(center), l1 as i64, l2 as i64)
            }
        };
        let layer = match center {
            None => open.iter().map(|&o| if o { 0 } else { u32::MAX }).collect(),
            Some(c) => {
                if (c as usize) >= n {
                    return Err(Error::UnknownPoint(c));
                }
                if !open[c as usize] {
                    return Err(Error::InvalidConfig(format!("center {c} is not open")));
                }
                bfs(&adj, &[c])
            }
        };
        let depth = layer.iter().filter(|&&l| l != u32::MAX).max().copied().unwrap_or(0) as usize;
        let mut layer_lists = vec![Vec::new(); depth + 1];
        for v in 0..n {
            if open[v] && layer[v] != u32::MAX {
                layer_lists[layer[v] as usize].push(v as PointId);
            }
        }
        Ok(ConsistentMetric { spec, adj, open, layer, layer_lists, lo, hi })
    }

    /// The metric's specification.
    pub fn spec(&self) -> MetricSpec {
        self.spec
    }

    /// BFS layer of a vertex around `p*` (0 for every open vertex of the
    /// uniform metric; `u32::MAX` when unreachable).
    pub fn layer(&self, p: PointId) -> u32 {
        self.layer[p as usize]
    }

    /// Number of BFS layers.
    pub fn num_layers(&self) -> usize {
        self.layer_lists.len()
    }

    /// Distances from a set of sources to every vertex (`u32::MAX` when
    /// unreachable).
    pub fn distances_from(&self, sources: &[PointId]) -> Vec<u32> {
        let n = self.adj.len();
        let mut dist = vec![u32::MAX; n];
        let mut expanded = vec![false; self.layer_lists.len()];
        let (mut lo_done, mut hi_done) = (false, false);
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s as usize] == u32::MAX {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &w in &self.adj[u as usize] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = du + 1;
                    queue.push_back(w);
                }
            }
            if !self.open[u as usize] || self.layer[u as usize] == u32::MAX {
                continue;
            }
            let i = self.layer[u as usize] as i64;
            let top = self.layer_lists.len() as i64 - 1;
            let mut targets: Vec<i64> = (i - 1..=i + 1).filter(|&j| j >= 0 && j <= top).collect();
            if i <= self.lo && !lo_done {
                lo_done = true;
                targets.extend(0..=self.lo.min(top));
            }
            if i >= self.hi && !hi_done {
                hi_done = true;
                targets.extend(self.hi..=top);
            }
            for j in targets {
                let j = j as usize;
                if expanded[j] {
                    continue;
                }
                expanded[j] = true;
                for &w in &self.layer_lists[j] {
                    if dist[w as usize] == u32::MAX {
                        dist[w as usize] = du + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        dist
    }

    /// Distance between two vertices.
    pub fn distance(&self, a: PointId, b: PointId) -> u32 {
        self.distances_from(&[a])[b as usize]
    }

    /// Checks every answer against this metric (one BFS per distinct
    /// first endpoint).
    pub fn verify(&self, answers: &[Answer]) -> ConsistencyReport {
        let mut by_source: BTreeMap<PointId, Vec<&Answer>> = BTreeMap::new();
        for a in answers {
            by_source.entry(a.a).or_default().push(a);
        }
        let mut report = ConsistencyReport::default();
        for (src, list) in by_source {
            let dist = self.distances_from(&[src]);
            for ans in list {
                report.checked += 1;
                let d = dist[ans.b as usize];
                if d != ans.value {
                    report.failures.push((*ans, d));
                }
            }
        }
        report
    }

    /// Largest distance from `sources` to any of `points` (the k-center
    /// radius of `sources`).
    pub fn radius(&self, sources: &[PointId], points: &[PointId]) -> u32 {
        let dist = self.distances_from(sources);
        points.iter().map(|&p| dist[p as usize]).max().unwrap_or(0)
    }

    /// Farthest-first traversal radius with `k` centers (an upper bound on
    /// the optimal k-center radius under this metric). The traversal is
    /// started from the first point and from one open vertex in each of up to
    /// eight evenly spaced layers; the best result is returned.
    pub fn greedy_radius(&self, k: usize, points: &[PointId]) -> u32 {
        let Some(&first) = points.first() else { return 0 };
        let layers = self.layer_lists.len();
        let step = layers.div_ceil(8).max(1);
        let starts = std::iter::once(first)
            .chain((0..layers).step_by(step).filter_map(|i| self.layer_lists[i].first().copied()));
        starts.map(|s| self.greedy_from(s, k, points)).min().unwrap_or(0)
    }

    fn greedy_from(&self, start: PointId, k: usize, points: &[PointId]) -> u32 {
        let mut best = self.distances_from(&[start]);
        for _ in 1..k {
            let Some(&far) = points.iter().max_by_key(|&&p| (best[p as usize], std::cmp::Reverse(p))) else { break };
            let d = self.distances_from(&[far]);
            for (b, x) in best.iter_mut().zip(d) {
                *b = (*b).min(x);
            }
        }
        points.iter().map(|&p| best[p as usize]).max().unwrap_or(0)
    }
}

fn bfs(adj: &[Vec<PointId>], sources: &[PointId]) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adj.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist[s as usize] = 0;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        for &w in &adj[u as usize] {
            if dist[w as usize] == u32::MAX {
                dist[w as usize] = dist[u as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// An algorithm that can be stressed by the adversary.
pub trait GauntletAlgorithm {
    /// Short name for reports.
    fn name(&self) -> String;
    /// Processes one update.
    fn update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<()>;
    /// The reported centers.
    fn centers(&self) -> Vec<PointId>;
    /// The reported objective value.
    fn reported_cost(&self) -> f64;
}

/// How a [`DiameterReporter`] chooses the points it measures a new point
/// against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorStrategy {
    /// Uniformly random earlier points.
    Random,
    /// Always the first point (the root).
    Root,
}

/// A 1-center / diameter reporter that spends a fixed number of queries per
/// insertion. It keeps, for every point, an upper bound on its distance to
/// the first point via the triangle inequality over the answers it received,
/// and reports twice the largest bound as its diameter estimate.
#[derive(Debug, Clone)]
pub struct DiameterReporter {
    strategy: AnchorStrategy,
    queries_per_insert: usize,
    rng: ChaCha8Rng,
    active: ActiveSet,
    seen: Vec<PointId>,
    bound: HashMap<PointId, f64>,
    /// Active points ordered by bound (non-negative floats order like
    /// their bit patterns).
    by_bound: BTreeSet<(u64, PointId)>,
}

impl DiameterReporter {
    /// New reporter.
    pub fn new(strategy: AnchorStrategy, queries_per_insert: usize, seed: u64) -> Self {
        DiameterReporter {
            strategy,
            queries_per_insert: queries_per_insert.max(1),
            rng: ChaCha8Rng::seed_from_u64(seed),
            active: ActiveSet::new(),
            seen: Vec::new(),
            bound: HashMap::new(),
            by_bound: BTreeSet::new(),
        }
    }
}

impl GauntletAlgorithm for DiameterReporter {
    fn name(&self) -> String {
        format!("diameter-{:?}-{}", self.strategy, self.queries_per_insert).to_lowercase()
    }

    fn update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<()> {
        self.active.apply(op)?;
        if let UpdateOp::Insert(x) = op {
            let b = if self.seen.is_empty() {
                0.0
            } else {
                let anchors: Vec<PointId> = match self.strategy {
                    AnchorStrategy::Root => vec![self.seen[0]],
                    AnchorStrategy::Random => {
                        let m = self.queries_per_insert.min(self.seen.len());
                        sample(&mut self.rng, self.seen.len(), m).into_iter().map(|i| self.seen[i]).collect()
                    }
                };
                anchors.into_iter().map(|a| self.bound[&a] + metric.distance(x, a)).fold(f64::INFINITY, f64::min)
            };
            self.bound.insert(x, b);
            self.by_bound.insert((b.to_bits(), x));
            self.seen.push(x);
        }
        if let UpdateOp::Delete(x) = op {
            self.by_bound.remove(&(self.bound[&x].to_bits(), x));
        }
        Ok(())
    }

    fn centers(&self) -> Vec<PointId> {
        self.by_bound.first().map(|&(_, p)| p).into_iter().collect()
    }

    fn reported_cost(&self) -> f64 {
        2.0 * self.by_bound.last().map_or(0.0, |&(b, _)| f64::from_bits(b))
    }
}

impl GauntletAlgorithm for KCenterEngine<ExactFactory> {
    fn name(&self) -> String {
        "lfmis-kcenter".into()
    }
    fn update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<()> {
        KCenterEngine::update(self, op, metric).map(|_| ())
    }
    fn centers(&self) -> Vec<PointId> {
        self.solution().centers
    }
    fn reported_cost(&self) -> f64 {
        self.status().cost_estimate
    }
}

impl GauntletAlgorithm for TreeEngine {
    fn name(&self) -> String {
        "det-tree".into()
    }
    fn update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<()> {
        TreeEngine::update(self, op, metric).map(|_| ())
    }
    fn centers(&self) -> Vec<PointId> {
        TreeEngine::centers(self)
    }
    fn reported_cost(&self) -> f64 {
        self.status().map_or(f64::NAN, |s| s.cost_estimate)
    }
}

impl GauntletAlgorithm for SumRadiiEngine {
    fn name(&self) -> String {
        "sum-radii".into()
    }
    fn update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<()> {
        SumRadiiEngine::update(self, op, metric).map(|_| ())
    }
    fn centers(&self) -> Vec<PointId> {
        self.solution().map(|s| s.balls.iter().map(|b| b.center).collect()).unwrap_or_default()
    }
    fn reported_cost(&self) -> f64 {
        self.solution().map_or(f64::NAN, |s| s.cost)
    }
}

/// Gauntlet settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GauntletConfig {
    /// Number of adversarial operations.
    pub ops: u64,
    /// Re-verify every answer against the uniform and the layered metric at
    /// every `verify_every`-th evaluated clean operation (0 = never).
    pub verify_every: u64,
    /// Evaluate the reported solution at clean operations whose index is a
    /// multiple of `eval_every`, and always at the last clean one.
    pub eval_every: u64,
}

/// Evaluation of the reported solution at one clean operation.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanReport {
    /// Operation index.
    pub t: u64,
    /// Current points.
    pub n_active: usize,
    /// Open vertices.
    pub open: usize,
    /// Off vertices.
    pub off: usize,
    /// Queries so far.
    pub queries: u64,
    /// Cumulative allowance so far.
    pub budget: f64,
    /// The algorithm's reported objective value.
    pub reported_cost: f64,
    /// Radius of the reported centers under the uniform metric.
    pub uni_cost: u32,
    /// Radius of the reported centers under the layered metric around the
    /// first reported center.
    pub star_cost: u32,
    /// Largest layered-metric distance from that center to a current point
    /// (the uniform metric puts every current point at distance ≤ 1).
    pub gap: u32,
    /// Worst ratio, over layer windows free of centers, between the
    /// reported radius and a greedy upper bound on the optimum under the
    /// grouped metric.
    pub range_ratio: f64,
    /// Answers checked at this operation (0 when not verified).
    pub answers_checked: usize,
    /// Answers disagreeing with the uniform metric.
    pub uni_failures: usize,
    /// Answers disagreeing with the layered metric.
    pub star_failures: usize,
}

/// Outcome of a gauntlet run.
#[derive(Debug, Clone, PartialEq)]
pub struct GauntletReport {
    /// Algorithm name.
    pub algorithm: String,
    /// Per evaluated clean operation.
    pub clean: Vec<CleanReport>,
    /// Smallest `open / (0.92·t)` over the run.
    pub min_open_ratio: f64,
    /// Whether every `(t, 2t]` held a clean operation.
    pub clean_in_every_window: bool,
    /// Largest vertex degree.
    pub max_degree: usize,
    /// Adversary counters.
    pub diagnostics: AdversaryDiagnostics,
    /// Total queries.
    pub queries: u64,
    /// Total allowance.
    pub budget: f64,
}

impl GauntletReport {
    /// Gap at the last evaluated clean operation.
    pub fn final_gap(&self) -> Option<u32> {
        self.clean.last().map(|c| c.gap)
    }

    /// Whether every verification succeeded.
    pub fn all_answers_consistent(&self) -> bool {
        self.clean.iter().all(|c| c.uni_failures == 0 && c.star_failures == 0)
    }
}

/// Drives `alg` with the adversary for `cfg.ops` operations, failing with
/// [`Error::BudgetExceeded`] as soon as cumulative queries exceed the
/// cumulative allowance, and evaluates the reported solution at clean
/// operations.
pub fn run_gauntlet(
    alg: &mut dyn GauntletAlgorithm,
    k: usize,
    f: BudgetFn,
    cfg: GauntletConfig,
) -> Result<GauntletReport> {
    let adv = AdversaryMetric::new(AdversaryState::new(k, f));
    let mut clean = Vec::new();
    let mut evaluated = 0u64;
    for step in 1..=cfg.ops {
        let op = adv.generate_update();
        alg.update(op, &adv)?;
        let centers = alg.centers();
        let reported_cost = alg.reported_cost();
        let st = adv.state();
        let used = adv.queries() as f64;
        if used > st.budget_allowed() + 1e-9 {
            return Err(Error::BudgetExceeded { used, allowed: st.budget_allowed() });
        }
        let due = (cfg.eval_every > 0 && step % cfg.eval_every == 0) || step == cfg.ops;
        if !st.is_clean() || !due {
            continue;
        }
        evaluated += 1;
        let verify = cfg.verify_every > 0 && evaluated % cfg.verify_every == 0;
        clean.push(evaluate(&st, &centers, reported_cost, used as u64, verify)?);
    }
    let st = adv.state();
    Ok(GauntletReport {
        algorithm: alg.name(),
        clean,
        min_open_ratio: st.min_open_ratio(),
        clean_in_every_window: st.clean_in_every_window(),
        max_degree: st.max_degree(),
        diagnostics: st.diagnostics(),
        queries: adv.queries(),
        budget: st.budget_allowed(),
    })
}

fn evaluate(
    st: &AdversaryState,
    centers: &[PointId],
    reported_cost: f64,
    queries: u64,
    verify: bool,
) -> Result<CleanReport> {
    let points: Vec<PointId> =
        (0..st.num_vertices() as PointId).filter(|&p| st.labels[p as usize] != Label::Off).collect();
    let (open, _, off) = st.label_counts();
    let mut report = CleanReport {
        t: st.t(),
        n_active: points.len(),
        open,
        off,
        queries,
        budget: st.budget_allowed(),
        reported_cost,
        uni_cost: 0,
        star_cost: 0,
        gap: 0,
        range_ratio: 1.0,
        answers_checked: 0,
        uni_failures: 0,
        star_failures: 0,
    };
    let centers: Vec<PointId> = centers.iter().copied().filter(|&c| st.labels[c as usize] == Label::Open).collect();
    let Some(&star_center) = centers.first().or(points.first()) else { return Ok(report) };
    let uni = ConsistentMetric::build(st, MetricSpec::Uni)?;
    let star = ConsistentMetric::build(st, MetricSpec::Star { center: star_center })?;
    if verify {
        let uni_rep = uni.verify(&st.answers);
        let star_rep = star.verify(&st.answers);
        report.answers_checked = uni_rep.checked;
        report.uni_failures = uni_rep.failures.len();
        report.star_failures = star_rep.failures.len();
    }
    if !centers.is_empty() {
        report.uni_cost = uni.radius(&centers, &points);
        report.star_cost = star.radius(&centers, &points);
    }
    report.gap = star.radius(&[star_center], &points);
    // Longest run of consecutive layers without a center.
    let mut has_center = vec![false; star.num_layers()];
    for &c in &centers {
        if let Some(slot) = has_center.get_mut(star.layer(c) as usize) {
            *slot = true;
        }
    }
    let (mut best, mut run_start, mut run) = ((0, 0), 0, 0);
    for (i, &h) in has_center.iter().enumerate() {
        if h {
            run = 0;
        } else {
            if run == 0 {
                run_start = i;
            }
            run += 1;
            if run > best.1 - best.0 {
                best = (run_start, run_start + run);
            }
        }
    }
    if best.1 - best.0 >= 2 && !centers.is_empty() {
        let range = ConsistentMetric::build(
            st,
            MetricSpec::Range { center: star_center, l1: best.0 as u32, l2: best.1 as u32 - 1 },
        )?;
        let alg = range.radius(&centers, &points) as f64;
        let opt_ub = range.greedy_radius(st.k(), &points).max(1) as f64;
        report.range_ratio = alg / opt_ub;
    }
    Ok(report)
}

/// The planted-cluster hard instance.
#[derive(Debug)]
pub struct PlantedInstance {
    /// Number of points.
    pub n: usize,
    /// Number of clusters.
    pub k: usize,
    /// Bucket of every point.
    pub h: Vec<usize>,
    /// The coin: 1 when a point is planted far from its bucket.
    pub coin: u8,
    /// The planted point when `coin = 1`.
    pub planted: Option<PointId>,
    /// Separation.
    pub r: f64,
    /// The implied matrix oracle.
    pub oracle: DistanceOracle,
    /// Certified upper bound on the optimal k-center radius.
    pub opt_upper: Option<f64>,
    /// Certified lower bound on the optimal k-center radius.
    pub opt_lower: Option<f64>,
}

/// Draws a random bucket map `h: [n] → [k]` and a fair coin. Within a
/// bucket points are 1 apart, across buckets `r`; when the coin is 1 a
/// random point is moved to distance `2r` from its bucket mates.
pub fn generate_planted(n: usize, k: usize, r: f64, seed: u64) -> Result<PlantedInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coin = rng.random_range(0..2u8);
    planted_with(n, k, r, coin, &mut rng)
}

/// [`generate_planted`] with a fixed coin.
pub fn generate_planted_with_coin(n: usize, k: usize, r: f64, coin: u8, seed: u64) -> Result<PlantedInstance> {
    planted_with(n, k, r, coin, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn planted_with(n: usize, k: usize, r: f64, coin: u8, rng: &mut ChaCha8Rng) -> Result<PlantedInstance> {
    if k == 0 || n < 2 * k {
        return Err(Error::InvalidConfig(format!("planted instance needs n ≥ 2k ≥ 2, got n={n}, k={k}")));
    }
    if !(r > 1.0 && r.is_finite()) {
        return Err(Error::InvalidConfig(format!("separation must exceed 1, got {r}")));
    }
    let h: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
    let planted = (coin == 1).then(|| rng.random_range(0..n));
    let mut matrix = vec![vec![0.0; n]; n];
    for p in 0..n {
        for q in 0..n {
            if p != q {
                let same = h[p] == h[q];
                matrix[p][q] = match (same, planted) {
                    (true, Some(i)) if p == i || q == i => 2.0 * r,
                    (true, _) => 1.0,
                    (false, _) => r,
                };
            }
        }
    }
    let mut sizes = vec![0usize; k];
    for &b in &h {
        sizes[b] += 1;
    }
    let (opt_upper, opt_lower) = if coin == 0 {
        (Some(1.0), None)
    } else if sizes.iter().all(|&s| s >= 2) {
        (None, Some(r))
    } else {
        (None, None)
    };
    Ok(PlantedInstance {
        n,
        k,
        h,
        coin,
        planted: planted.map(|i| i as PointId),
        r,
        oracle: DistanceOracle::from_matrix(matrix)?,
        opt_upper,
        opt_lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(f: f64) -> AdversaryState {
        AdversaryState::new(1, constant_budget(f))
    }

    #[test]
    fn first_update_inserts_and_open_pairs_are_adjacent() {
        let mut s = state(1.0);
        assert_eq!(s.generate_update(), UpdateOp::Insert(0));
        assert_eq!(s.generate_update(), UpdateOp::Insert(1));
        assert_eq!(s.answer_query(0, 1).unwrap(), 1);
        assert_eq!(s.num_edges(), 1);
        assert_eq!(s.answer_query(1, 0).unwrap(), 1);
        assert_eq!(s.num_edges(), 1);
        assert_eq!(s.answer_query(0, 7), Err(Error::UnknownPoint(7)));
    }

    #[test]
    fn zero_query_algorithm_sees_only_insertions() {
        let mut s = state(0.5);
        for _ in 0..50 {
            assert!(s.generate_update().is_insert());
        }
        assert!(s.clean_in_every_window());
        assert!(s.min_open_ratio() >= 1.0);
    }

    #[test]
    fn closing_deletion_and_off_distances() {
        // f = 0.03: vertices close at degree 3.
        let mut s = state(0.03);
        for _ in 0..5 {
            s.generate_update();
        }
        for b in 1..=3 {
            assert_eq!(s.answer_query(0, b).unwrap(), 1);
        }
        assert_eq!(s.label(0).unwrap(), Label::Closed);
        assert_eq!(s.generate_update(), UpdateOp::Delete(0));
        assert_eq!(s.label(0).unwrap(), Label::Off);
        // 0 is off and adjacent to open 1, 2, 3; any open vertex is one
        // augmented hop from those.
        assert_eq!(s.answer_query(0, 4).unwrap(), 2);
        let (uni, rep) = s.materialize_metric(MetricSpec::Uni).unwrap();
        assert!(rep.all_consistent(), "{rep:?}");
        assert_eq!(uni.distance(2, 4), 1);
        assert_eq!(uni.distance(0, 4), 2);
    }

    #[test]
    fn materialize_requires_clean_state() {
        let mut s = state(0.01);
        s.generate_update();
        s.generate_update();
        s.answer_query(0, 1).unwrap();
        assert!(matches!(s.materialize_metric(MetricSpec::Uni), Err(Error::NotCleanOperation(2))));
    }

    #[test]
    fn repair_edge_keeps_an_open_vertex_in_every_component() {
        // Degree threshold 2.
        let mut s = state(0.02);
        for _ in 0..4 {
            s.generate_update();
        }
        s.answer_query(0, 1).unwrap();
        s.answer_query(0, 2).unwrap();
        assert_eq!(s.generate_update(), UpdateOp::Delete(0));
        // 1 and 2 both reach degree 2 and close; their component {0, 1, 2}
        // has no open vertex left, so 1 is attached to the open vertex 3.
        assert_eq!(s.answer_query(1, 2).unwrap(), 1);
        let d = s.diagnostics();
        assert_eq!((d.closings, d.repairs, d.donor_violations), (3, 1, 0));
        assert!(s.neighbors(3).contains(&1));
        assert!(s.component_has_open(2));
    }

    #[test]
    fn layered_metric_matches_layers() {
        // A path 0-1-2-3 of answered queries, then checks around 0.
        let mut s = state(1.0);
        for _ in 0..4 {
            s.generate_update();
        }
        for (a, b) in [(0, 1), (1, 2), (2, 3)] {
            s.answer_query(a, b).unwrap();
        }
        let (star, rep) = s.materialize_metric(MetricSpec::Star { center: 0 }).unwrap();
        assert!(rep.all_consistent());
        assert_eq!(star.distance(0, 3), 3);
        assert_eq!(star.distance(1, 3), 2);
        let (range, rep) = s.materialize_metric(MetricSpec::Range { center: 0, l1: 2, l2: 3 }).unwrap();
        assert!(rep.all_consistent());
        assert_eq!(range.distance(0, 2), 1);
        assert_eq!(range.distance(0, 3), 2);
        let (uni, _) = s.materialize_metric(MetricSpec::Uni).unwrap();
        assert_eq!(uni.distance(0, 3), 1);
    }

    #[test]
    fn gauntlet_with_random_reporter() {
        let mut alg = DiameterReporter::new(AnchorStrategy::Random, 1, 3);
        let cfg = GauntletConfig { ops: 200, verify_every: 1, eval_every: 10 };
        let rep = run_gauntlet(&mut alg, 1, constant_budget(1.0), cfg).unwrap();
        assert!(rep.all_answers_consistent());
        assert!(rep.final_gap().unwrap() >= 2);
        assert!(rep.clean.iter().all(|c| c.uni_cost <= 1));
    }

    #[test]
    fn all_pairs_algorithm_exceeds_a_small_budget() {
        struct AllPairs(ActiveSet);
        impl GauntletAlgorithm for AllPairs {
            fn name(&self) -> String {
                "all-pairs".into()
            }
            fn update(&mut self, op: UpdateOp, m: &dyn Metric) -> Result<()> {
                self.0.apply(op)?;
                let pts: Vec<PointId> = self.0.iter().collect();
                for (i, &a) in pts.iter().enumerate() {
                    for &b in &pts[i + 1..] {
                        m.distance(a, b);
                    }
                }
                Ok(())
            }
            fn centers(&self) -> Vec<PointId> {
                self.0.iter().take(1).collect()
            }
            fn reported_cost(&self) -> f64 {
                1.0
            }
        }
        let cfg = GauntletConfig { ops: 30, verify_every: 0, eval_every: 1 };
        let err = run_gauntlet(&mut AllPairs(ActiveSet::new()), 1, constant_budget(1.0), cfg).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn planted_instances() {
        let zero = generate_planted_with_coin(12, 3, 10.0, 0, 4).unwrap();
        assert_eq!(zero.opt_upper, Some(1.0));
        assert!(crate::oracle::triangle_violation(12, |a, b| zero.oracle.raw_distance(a as u32, b as u32)).is_none());
        let one = generate_planted_with_coin(12, 3, 10.0, 1, 4).unwrap();
        let i = one.planted.unwrap();
        assert!((0..12u32)
            .filter(|&q| q != i && one.h[q as usize] == one.h[i as usize])
            .all(|q| one.oracle.raw_distance(i, q) == 20.0));
        assert!(generate_planted(3, 2, 10.0, 1).is_err());
        assert!(generate_planted(8, 2, 1.0, 1).is_err());
    }
}
