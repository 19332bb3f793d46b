//! Deterministic fully dynamic k-center against adaptive adversaries.
//!
//! For every guess `OPT′ = r_min·(1+ε)^i` the engine keeps a complete
//! `B`-ary *clustering tree*. Each node stores at most `B·k` points, of which
//! at most `k` are *centers* pairwise more than `OPT′` apart. A *blocking
//! graph* links every center to the node's points within `OPT′`; a
//! non-center with no blocking edge is *unblocked*. If a node has `k`
//! centers and an unblocked point, those `k+1` points are pairwise more than
//! `OPT′` apart and the node is marked as a *witness* that every k-center
//! solution costs more than `OPT′/2`. Leaves partition the active points,
//! and every inner node stores exactly the centers of its children.
//!
//! The engine reports the root centers of the smallest guess whose tree has
//! no witness. Nothing here is random: identical streams give identical
//! results.

use crate::error::{Error, Result};
use crate::metric::{check_eps, ActiveSet, Metric, PointId, ScaleLadder, StreamStats, UpdateOp};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Engine configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeConfig {
    /// Number of centers.
    pub k: usize,
    /// Ratio between consecutive guesses is `1+ε`.
    pub eps: f64,
    /// Branching factor `B ≥ 2`; leaves hold `B·k` points.
    pub b: usize,
    /// Smallest guess.
    pub r_min: f64,
    /// Largest distance that can occur.
    pub r_max: f64,
    /// Update guesses on the rayon thread pool.
    pub parallel: bool,
}

impl TreeConfig {
    /// Sequential configuration.
    pub fn new(k: usize, eps: f64, b: usize, r_min: f64, r_max: f64) -> Self {
        TreeConfig { k, eps, b, r_min, r_max, parallel: false }
    }

    /// The default branching factor `max(2, ⌈log₂(n̂ + Δ)⌉)` for an
    /// expected stream size `n̂` and aspect ratio `Δ`.
    pub fn default_b(n_hat: usize, aspect_ratio: f64) -> usize {
        ((n_hat as f64 + aspect_ratio.max(1.0)).log2().ceil() as usize).max(2)
    }
}

/// One node of a clustering tree.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreeNode {
    points: BTreeSet<PointId>,
    centers: BTreeSet<PointId>,
    /// Blocking edges (center ↔ non-center within `OPT′`), both directions.
    adj: BTreeMap<PointId, BTreeSet<PointId>>,
    /// Non-centers without blocking edges.
    unblocked: BTreeSet<PointId>,
    witness: bool,
}

impl TreeNode {
    /// Points stored in the node.
    pub fn points(&self) -> &BTreeSet<PointId> {
        &self.points
    }

    /// Centers of the node.
    pub fn centers(&self) -> &BTreeSet<PointId> {
        &self.centers
    }

    /// Whether the node is marked as a witness.
    pub fn is_witness(&self) -> bool {
        self.witness
    }

    /// Number of blocking edges at `p`.
    pub fn degree(&self, p: PointId) -> usize {
        self.adj.get(&p).map_or(0, BTreeSet::len)
    }

    /// Blocking neighbors of `p`.
    pub fn blocking_neighbors(&self, p: PointId) -> impl Iterator<Item = PointId> + '_ {
        self.adj.get(&p).into_iter().flatten().copied()
    }

    /// The `k+1` pairwise-far points certifying a witness: the centers plus
    /// the smallest unblocked point.
    pub fn witness_points(&self) -> Option<Vec<PointId>> {
        self.witness.then(|| {
            let mut w: Vec<PointId> = self.centers.iter().copied().collect();
            w.push(*self.unblocked.first().expect("witness has an unblocked point"));
            w
        })
    }

    fn link(&mut self, a: PointId, b: PointId) {
        self.adj.entry(a).or_default().insert(b);
        self.adj.entry(b).or_default().insert(a);
    }

    /// Marks `p` as a center if it is unblocked and fewer than `k` centers
    /// exist, blocking every point within `opt`. Returns whether `p` became
    /// a center.
    fn try_make_center(&mut self, p: PointId, k: usize, opt: f64, metric: &dyn Metric) -> bool {
        if !self.unblocked.contains(&p) || self.centers.len() >= k {
            return false;
        }
        self.unblocked.remove(&p);
        self.centers.insert(p);
        let others: Vec<PointId> =
            self.points.iter().copied().filter(|&w| w != p && !self.centers.contains(&w)).collect();
        for w in others {
            if metric.distance(p, w) <= opt {
                self.link(p, w);
                self.unblocked.remove(&w);
            }
        }
        true
    }

    fn refresh_witness(&mut self, k: usize) {
        self.witness = self.centers.len() == k && !self.unblocked.is_empty();
    }

    /// Adds `p`, blocks it by nearby centers and tries to make it a center.
    /// Returns whether `p` became a center.
    fn insert(&mut self, p: PointId, k: usize, opt: f64, metric: &dyn Metric) -> bool {
        self.points.insert(p);
        self.adj.insert(p, BTreeSet::new());
        let centers: Vec<PointId> = self.centers.iter().copied().collect();
        for c in centers {
            if metric.distance(c, p) <= opt {
                self.link(c, p);
            }
        }
        let mut became = false;
        if self.degree(p) == 0 {
            self.unblocked.insert(p);
            became = self.try_make_center(p, k, opt, metric);
        }
        self.refresh_witness(k);
        became
    }

    /// Removes `p`; when `p` was a center, former blocking neighbors (in
    /// increasing identifier order) and then any other unblocked points get
    /// a chance to become centers. Returns the new centers.
    fn delete(&mut self, p: PointId, k: usize, opt: f64, metric: &dyn Metric) -> Vec<PointId> {
        let nbrs = self.adj.remove(&p).unwrap_or_default();
        for q in &nbrs {
            if let Some(a) = self.adj.get_mut(q) {
                a.remove(&p);
            }
        }
        let was_center = self.centers.remove(&p);
        self.unblocked.remove(&p);
        self.points.remove(&p);
        let mut promoted = Vec::new();
        if was_center {
            for &q in &nbrs {
                if self.degree(q) == 0 && !self.centers.contains(&q) {
                    self.unblocked.insert(q);
                }
            }
            for &q in &nbrs {
                if self.try_make_center(q, k, opt, metric) {
                    promoted.push(q);
                }
            }
            let rest: Vec<PointId> = self.unblocked.iter().copied().collect();
            for q in rest {
                if self.try_make_center(q, k, opt, metric) {
                    promoted.push(q);
                }
            }
        }
        self.refresh_witness(k);
        promoted
    }
}

/// A complete `B`-ary clustering tree for one guess `OPT′`.
///
/// Levels are stored bottom-up; node `j` of a level has parent `j / B` on
/// the next level. All leaves are full except possibly the last one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringTree {
    opt: f64,
    k: usize,
    b: usize,
    levels: Vec<Vec<TreeNode>>,
    leaf_of: HashMap<PointId, usize>,
    witnesses: usize,
}

impl ClusteringTree {
    /// Empty tree for guess `opt`.
    pub fn new(opt: f64, k: usize, b: usize) -> Self {
        ClusteringTree { opt, k, b, levels: vec![vec![TreeNode::default()]], leaf_of: HashMap::new(), witnesses: 0 }
    }

    fn cap(&self) -> usize {
        self.b * self.k
    }

    fn node_insert(&mut self, lvl: usize, idx: usize, p: PointId, metric: &dyn Metric) -> bool {
        let (k, opt) = (self.k, self.opt);
        let node = &mut self.levels[lvl][idx];
        let before = node.witness;
        let became = node.insert(p, k, opt, metric);
        self.witnesses = self.witnesses + node.witness as usize - before as usize;
        became
    }

    fn node_delete(&mut self, lvl: usize, idx: usize, p: PointId, metric: &dyn Metric) -> Vec<PointId> {
        let (k, opt) = (self.k, self.opt);
        let node = &mut self.levels[lvl][idx];
        let before = node.witness;
        let promoted = node.delete(p, k, opt, metric);
        self.witnesses = self.witnesses + node.witness as usize - before as usize;
        promoted
    }

    /// Inserts `p` into node `(lvl, idx)` and keeps inserting it into the
    /// ancestors while it becomes a center.
    fn insert_from(&mut self, mut lvl: usize, mut idx: usize, p: PointId, metric: &dyn Metric) {
        while self.node_insert(lvl, idx, p, metric) && lvl + 1 < self.levels.len() {
            lvl += 1;
            idx /= self.b;
        }
    }

    /// Deletes `p` from its leaf and every ancestor holding it, pushing the
    /// centers promoted on the way into the respective parents.
    fn delete_from(&mut self, leaf: usize, p: PointId, metric: &dyn Metric) {
        let (mut lvl, mut idx) = (0, leaf);
        let mut cen: Vec<PointId> = Vec::new();
        loop {
            if self.levels[lvl][idx].points.contains(&p) {
                cen.extend(self.node_delete(lvl, idx, p, metric));
            }
            if lvl + 1 == self.levels.len() {
                break;
            }
            let pidx = idx / self.b;
            let mut next = Vec::new();
            for v in cen {
                if self.node_insert(lvl + 1, pidx, v, metric) {
                    next.push(v);
                }
            }
            cen = next;
            lvl += 1;
            idx = pidx;
        }
    }

    /// Appends an empty leaf, creating ancestors (and a new root holding the
    /// old root's centers) as needed. Returns the leaf index.
    fn add_leaf(&mut self, metric: &dyn Metric) -> usize {
        let leaf = self.levels[0].len();
        self.levels[0].push(TreeNode::default());
        let (mut lvl, mut idx) = (0, leaf);
        loop {
            if lvl + 1 == self.levels.len() {
                if self.levels[lvl].len() > 1 {
                    self.levels.push(vec![TreeNode::default()]);
                    let old_root: Vec<PointId> = self.levels[lvl][0].centers.iter().copied().collect();
                    for c in old_root {
                        self.node_insert(lvl + 1, 0, c, metric);
                    }
                }
                break;
            }
            let pidx = idx / self.b;
            if pidx < self.levels[lvl + 1].len() {
                break;
            }
            self.levels[lvl + 1].push(TreeNode::default());
            lvl += 1;
            idx = pidx;
        }
        leaf
    }

    /// Drops empty trailing leaves and childless inner nodes, then contracts
    /// roots with a single child.
    fn shrink(&mut self) {
        while self.levels[0].len() > 1 && self.levels[0].last().is_some_and(|n| n.points.is_empty()) {
            self.levels[0].pop();
        }
        for lvl in 1..self.levels.len() {
            let need = self.levels[lvl - 1].len().div_ceil(self.b);
            while self.levels[lvl].len() > need {
                let gone = self.levels[lvl].pop().expect("level is nonempty");
                debug_assert!(gone.points.is_empty(), "childless node still stores points");
            }
        }
        while self.levels.len() > 1 && self.levels[self.levels.len() - 2].len() == 1 {
            let root = self.levels.pop().expect("tree has a root");
            self.witnesses -= root[0].witness as usize;
        }
    }

    /// Inserts an active point into the last leaf (opening a new one when it
    /// is full) and propagates it upward while it becomes a center.
    pub fn insert(&mut self, p: PointId, metric: &dyn Metric) {
        let last = self.levels[0].len() - 1;
        let leaf = if self.levels[0][last].points.len() >= self.cap() { self.add_leaf(metric) } else { last };
        self.leaf_of.insert(p, leaf);
        self.insert_from(0, leaf, p, metric);
    }

    /// Deletes a point; the hole is refilled with a point from the last
    /// leaf (fewest blocking edges, then smallest identifier) so that all
    /// leaves but the last stay full.
    pub fn delete(&mut self, p: PointId, metric: &dyn Metric) -> Result<()> {
        let leaf = self.leaf_of.remove(&p).ok_or(Error::UnknownPoint(p))?;
        self.delete_from(leaf, p, metric);
        let last = self.levels[0].len() - 1;
        if leaf != last {
            let donor_leaf = &self.levels[0][last];
            let donor = donor_leaf
                .points
                .iter()
                .copied()
                .min_by_key(|&q| (donor_leaf.degree(q), q))
                .expect("the last leaf is nonempty");
            self.delete_from(last, donor, metric);
            self.leaf_of.insert(donor, leaf);
            self.insert_from(0, leaf, donor, metric);
        }
        self.shrink();
        Ok(())
    }

    /// The guess `OPT′`.
    pub fn opt(&self) -> f64 {
        self.opt
    }

    /// Number of levels (1 for a single-node tree).
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Nodes of a level (level 0 holds the leaves).
    pub fn level(&self, lvl: usize) -> &[TreeNode] {
        &self.levels[lvl]
    }

    /// The root node.
    pub fn root(&self) -> &TreeNode {
        &self.levels[self.levels.len() - 1][0]
    }

    /// Whether any node is a witness.
    pub fn has_witness(&self) -> bool {
        self.witnesses > 0
    }

    /// All witness nodes as `(level, index)`.
    pub fn witness_nodes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (l, level) in self.levels.iter().enumerate() {
            for (i, n) in level.iter().enumerate() {
                if n.witness {
                    out.push((l, i));
                }
            }
        }
        out
    }

    /// Checks every structural condition: capacities, center separation,
    /// exact blocking edges, unblocked bookkeeping, witness flags, inner
    /// nodes holding exactly their children's centers, leaf fill, leaf map
    /// and the witness counter. `dist` must not count queries.
    pub fn audit(&self, mut dist: impl FnMut(PointId, PointId) -> f64) -> std::result::Result<(), String> {
        let mut witnesses = 0;
        for (l, level) in self.levels.iter().enumerate() {
            for (i, n) in level.iter().enumerate() {
                let at = format!("node ({l},{i}) of guess {}", self.opt);
                if n.points.len() > self.cap() {
                    return Err(format!("{at} stores {} > Bk points", n.points.len()));
                }
                if n.centers.len() > self.k || !n.centers.is_subset(&n.points) {
                    return Err(format!("{at} has invalid centers"));
                }
                for &a in &n.centers {
                    for &b in &n.centers {
                        if a < b && dist(a, b) <= self.opt {
                            return Err(format!("{at}: centers {a} and {b} are within OPT'"));
                        }
                    }
                }
                if n.adj.keys().copied().collect::<BTreeSet<_>>() != n.points {
                    return Err(format!("{at}: adjacency keys differ from points"));
                }
                for &q in &n.points {
                    let expect: BTreeSet<PointId> = if n.centers.contains(&q) {
                        n.points
                            .iter()
                            .copied()
                            .filter(|&w| !n.centers.contains(&w) && dist(q, w) <= self.opt)
                            .collect()
                    } else {
                        n.centers.iter().copied().filter(|&c| dist(q, c) <= self.opt).collect()
                    };
                    if n.adj[&q] != expect {
                        return Err(format!("{at}: blocking edges of {q} are wrong"));
                    }
                    let unblocked = !n.centers.contains(&q) && expect.is_empty();
                    if unblocked != n.unblocked.contains(&q) {
                        return Err(format!("{at}: unblocked flag of {q} is wrong"));
                    }
                }
                if n.centers.len() < self.k && !n.unblocked.is_empty() {
                    return Err(format!("{at}: unblocked point left although a center slot is free"));
                }
                if n.witness != (n.centers.len() == self.k && !n.unblocked.is_empty()) {
                    return Err(format!("{at}: witness flag is wrong"));
                }
                witnesses += n.witness as usize;
                if l > 0 {
                    let kids = &self.levels[l - 1];
                    let lo = i * self.b;
                    let hi = ((i + 1) * self.b).min(kids.len());
                    if lo >= hi {
                        return Err(format!("{at} has no children"));
                    }
                    let union: BTreeSet<PointId> =
                        kids[lo..hi].iter().flat_map(|c| c.centers.iter().copied()).collect();
                    if union != n.points {
                        return Err(format!("{at} does not store exactly its children's centers"));
                    }
                }
            }
        }
        if self.levels.last().map(Vec::len) != Some(1) {
            return Err("top level must hold exactly one root".into());
        }
        if self.levels.len() > 1 && self.levels[self.levels.len() - 2].len() < 2 {
            return Err("root has a single child".into());
        }
        let leaves = &self.levels[0];
        for (i, leaf) in leaves.iter().enumerate() {
            if i + 1 < leaves.len() && leaf.points.len() != self.cap() {
                return Err(format!("leaf {i} is not full"));
            }
            for &p in &leaf.points {
                if self.leaf_of.get(&p) != Some(&i) {
                    return Err(format!("leaf map of {p} is wrong"));
                }
            }
        }
        if leaves.len() > 1 && leaves.last().is_some_and(|l| l.points.is_empty()) {
            return Err("trailing empty leaf".into());
        }
        if self.leaf_of.len() != leaves.iter().map(|l| l.points.len()).sum::<usize>() {
            return Err("leaf map size differs from leaf contents".into());
        }
        if witnesses != self.witnesses {
            return Err("witness counter is stale".into());
        }
        Ok(())
    }
}

/// Summary of the engine state after an update.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStatus {
    /// Certified radius bound: (number of levels)·`OPT′` of the reporting
    /// guess, or 0 when at most `k` points are active.
    pub cost_estimate: f64,
    /// Reporting guess index, if any.
    pub guess: Option<usize>,
    /// Number of centers.
    pub num_centers: usize,
    /// Per guess, whether its tree holds a witness.
    pub witness_flags: Vec<bool>,
}

/// One clustering tree per guess `OPT′`.
#[derive(Debug, Clone)]
pub struct TreeEngine {
    cfg: TreeConfig,
    ladder: ScaleLadder,
    trees: Vec<ClusteringTree>,
    active: ActiveSet,
}

impl TreeEngine {
    /// Empty engine.
    pub fn new(cfg: TreeConfig) -> Result<Self> {
        if cfg.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if cfg.b < 2 {
            return Err(Error::InvalidConfig(format!("branching factor B must be at least 2, got {}", cfg.b)));
        }
        check_eps(cfg.eps)?;
        let ladder = ScaleLadder::new(cfg.r_min, cfg.r_max, 1.0 + cfg.eps)?;
        let trees = ladder.scales().iter().map(|&o| ClusteringTree::new(o, cfg.k, cfg.b)).collect();
        Ok(TreeEngine { cfg, ladder, trees, active: ActiveSet::new() })
    }

    /// Applies one update to every guess.
    pub fn update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<TreeStatus> {
        self.active.validate(op)?;
        self.active.apply(op)?;
        let step = |t: &mut ClusteringTree| match op {
            UpdateOp::Insert(p) => {
                t.insert(p, metric);
                Ok(())
            }
            UpdateOp::Delete(p) => t.delete(p, metric),
        };
        if self.cfg.parallel {
            self.trees.par_iter_mut().try_for_each(step)?;
        } else {
            self.trees.iter_mut().try_for_each(step)?;
        }
        self.status()
    }

    /// Index of the smallest witness-free guess.
    fn winner(&self) -> Option<usize> {
        self.trees.iter().position(|t| !t.has_witness())
    }

    /// Current status.
    pub fn status(&self) -> Result<TreeStatus> {
        let witness_flags = self.trees.iter().map(ClusteringTree::has_witness).collect();
        if self.active.len() <= self.cfg.k {
            return Ok(TreeStatus { cost_estimate: 0.0, guess: None, num_centers: self.active.len(), witness_flags });
        }
        let g = self.winner().ok_or(Error::Infeasible)?;
        let t = &self.trees[g];
        Ok(TreeStatus {
            cost_estimate: t.num_levels() as f64 * t.opt(),
            guess: Some(g),
            num_centers: t.root().centers().len(),
            witness_flags,
        })
    }

    /// Centers of the current solution, in increasing identifier order.
    pub fn centers(&self) -> Vec<PointId> {
        if self.active.len() <= self.cfg.k {
            return self.active.iter().collect();
        }
        self.winner().map_or_else(Vec::new, |g| self.trees[g].root().centers().iter().copied().collect())
    }

    /// Nearest center of an active point (`O(k)` distance evaluations).
    pub fn membership(&self, p: PointId, metric: &dyn Metric) -> Result<PointId> {
        if !self.active.contains(p) {
            return Err(Error::UnknownPoint(p));
        }
        nearest(p, &self.centers(), metric).ok_or(Error::Infeasible)
    }

    /// Full assignment of active points to their nearest centers.
    pub fn assignment(&self, metric: &dyn Metric) -> BTreeMap<PointId, PointId> {
        let centers = self.centers();
        self.active.iter().filter_map(|p| nearest(p, &centers, metric).map(|c| (p, c))).collect()
    }

    /// The tree of guess `i`.
    pub fn tree(&self, i: usize) -> &ClusteringTree {
        &self.trees[i]
    }

    /// Number of guesses.
    pub fn num_guesses(&self) -> usize {
        self.trees.len()
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
    pub fn config(&self) -> &TreeConfig {
        &self.cfg
    }
}

fn nearest(p: PointId, centers: &[PointId], metric: &dyn Metric) -> Option<PointId> {
    if centers.contains(&p) {
        return Some(p);
    }
    centers
        .iter()
        .map(|&c| (metric.distance(p, c), c))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, c)| c)
}
