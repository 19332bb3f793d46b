//! Locality-sensitive hashing: approximate threshold graphs and the
//! LSH-accelerated k-center engine.
//!
//! A family is `(r, cr, p1, p2)`-sensitive when points within `r` collide
//! with probability at least `p1` and points beyond `c·r` with probability at
//! most `p2`. Concatenating `t` hashes and using `s` independent tables
//! (with `t = ⌈2·log_{1/p2} n⌉` and `s = ⌈ln(n²/δ)·n^{2ρ}/p1⌉`,
//! `ρ = ln(1/p1)/ln(1/p2)`) yields, with probability `1−δ`, a graph that
//! contains every pair within `r` and, in expectation, only few colliding
//! pairs beyond `c·r`. Candidates are filtered with one exact distance
//! evaluation each, so the engine acts only on pairs within `c·r`.
//!
//! Each bucket is an order-statistic treap keyed by rank, so the
//! lowest-ranked neighbor of a point among the indexed vertices is found by
//! an in-order scan that stops at the first true neighbor.

use crate::error::{Error, Result};
use crate::kcenter::{IndexFactory, KCenterConfig, KCenterEngine, KCenterSolution, KCenterStatus};
use crate::lfmis::{AlgIndex, AlgSet, Rank, ThresholdIndex};
use crate::metric::{Metric, PointId, UpdateOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use std::collections::{BTreeMap, HashMap};

/// Bucket width of the p-stable families, as a multiple of the radius.
pub const PSTABLE_WIDTH_FACTOR: f64 = 4.0;

/// The supported hash families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HashFamilyKind {
    /// `⌊(a·x + b)/w⌋` with Gaussian `a`, for Euclidean distance.
    PStableL2,
    /// `⌊(a·x + b)/w⌋` with Cauchy `a`, for Manhattan distance.
    PStableL1,
    /// One sampled coordinate, for Hamming distance on `{0,1}^d`.
    BitSampleHamming,
    /// Minimum of a seeded hash over the set, for Jaccard distance.
    MinHashJaccard,
}

impl std::str::FromStr for HashFamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pstable-l2" => Ok(HashFamilyKind::PStableL2),
            "pstable-l1" => Ok(HashFamilyKind::PStableL1),
            "bitsample-hamming" => Ok(HashFamilyKind::BitSampleHamming),
            "minhash-jaccard" => Ok(HashFamilyKind::MinHashJaccard),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }
}

impl HashFamilyKind {
    /// The family suited to a metric, if any.
    pub fn for_metric(kind: crate::metric::MetricKind) -> Result<Self> {
        use crate::metric::MetricKind as M;
        match kind {
            M::L2 => Ok(HashFamilyKind::PStableL2),
            M::L1 => Ok(HashFamilyKind::PStableL1),
            M::Hamming => Ok(HashFamilyKind::BitSampleHamming),
            M::Jaccard => Ok(HashFamilyKind::MinHashJaccard),
            other => Err(Error::UnsupportedKind(format!("no hash family for metric {other}"))),
        }
    }
}

/// Sensitivity parameters of a family at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshFamily {
    /// Family.
    pub kind: HashFamilyKind,
    /// Near radius.
    pub r: f64,
    /// Approximation factor.
    pub c: f64,
    /// Collision probability lower bound for pairs within `r`.
    pub p1: f64,
    /// Collision probability upper bound for pairs beyond `c·r`.
    pub p2: f64,
    /// `ln(1/p1)/ln(1/p2)` (0 when `p2 = 0`).
    pub rho: f64,
    /// Dimension of the coordinate vectors (unused for MinHash).
    pub dim: usize,
    /// Bucket width (p-stable families only).
    pub w: f64,
}

impl LshFamily {
    /// Sensitivity of `kind` at radius `r` and factor `c`.
    pub fn new(kind: HashFamilyKind, r: f64, c: f64, dim: usize) -> Result<Self> {
        if !(c > 1.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!("approximation factor c must exceed 1, got {c}")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::RadiusOutOfRange { r, max: f64::INFINITY });
        }
        let mut fam = LshFamily { kind, r, c, p1: 0.0, p2: 0.0, rho: 0.0, dim, w: 0.0 };
        match kind {
            HashFamilyKind::BitSampleHamming => {
                if dim == 0 {
                    return Err(Error::InvalidConfig("bit sampling needs a positive dimension".into()));
                }
                if r >= dim as f64 {
                    return Err(Error::RadiusOutOfRange { r, max: dim as f64 });
                }
            }
            HashFamilyKind::MinHashJaccard => {
                let max = 1.0 / (2.0 * c);
                if r > max {
                    return Err(Error::RadiusOutOfRange { r, max });
                }
            }
            HashFamilyKind::PStableL2 | HashFamilyKind::PStableL1 => {
                if dim == 0 {
                    return Err(Error::InvalidConfig("p-stable hashing needs a positive dimension".into()));
                }
                fam.w = PSTABLE_WIDTH_FACTOR * r;
            }
        }
        fam.p1 = fam.collision_probability(r);
        fam.p2 = fam.collision_probability(c * r);
        fam.rho = if fam.p2 <= 0.0 { 0.0 } else { (1.0 / fam.p1).ln() / (1.0 / fam.p2).ln() };
        Ok(fam)
    }

    /// Probability that one hash function maps two points at distance
    /// `dist` to the same value.
    pub fn collision_probability(&self, dist: f64) -> f64 {
        match self.kind {
            HashFamilyKind::BitSampleHamming => (1.0 - dist / self.dim as f64).max(0.0),
            HashFamilyKind::MinHashJaccard => (1.0 - dist).clamp(0.0, 1.0),
            HashFamilyKind::PStableL2 => {
                pstable_collision(dist, self.w, |x| 2.0 * (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt())
            }
            HashFamilyKind::PStableL1 => {
                pstable_collision(dist, self.w, |x| 2.0 / (std::f64::consts::PI * (1.0 + x * x)))
            }
        }
    }

    /// Whether the family separates near from far pairs at all.
    pub fn is_sensitive(&self) -> bool {
        self.p1 > 0.0 && self.p2 < self.p1
    }
}

/// Collision probability of `⌊(a·x+b)/w⌋` for two points at distance `u`,
/// where `|a·(x−y)|/u` has density `abs_density`:
/// `∫₀^w (1/u)·f(τ/u)·(1 − τ/w) dτ = ∫₀^{w/u} f(σ)(1 − σu/w) dσ`,
/// evaluated with composite Simpson's rule.
fn pstable_collision(u: f64, w: f64, abs_density: impl Fn(f64) -> f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    let upper = w / u;
    let n = 4096;
    let h = upper / n as f64;
    let g = |s: f64| abs_density(s) * (1.0 - s / upper);
    let mut acc = g(0.0) + g(upper);
    for i in 1..n {
        let s = i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(s);
    }
    (acc * h / 3.0).clamp(0.0, 1.0)
}

/// Table layout derived from a family and an active-set bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshParams {
    /// Hashes concatenated per table.
    pub t: usize,
    /// Number of tables.
    pub s: usize,
    /// Failure probability.
    pub delta: f64,
    /// Active-set bound the layout is sized for.
    pub n: usize,
}

impl LshParams {
    /// `t = ⌈2·log_{1/p2} n⌉` and `s = ⌈ln(n²/δ)·n^{2ρ}/p1⌉`, each at least 1.
    pub fn new(n: usize, delta: f64, p1: f64, p2: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0,1), got {delta}")));
        }
        if !(p1 > 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 < p1) {
            return Err(Error::InvalidConfig(format!("need 0 <= p2 < p1 <= 1, got p1={p1}, p2={p2}")));
        }
        let nf = n.max(2) as f64;
        let (t, rho) = if p2 == 0.0 {
            (1, 0.0)
        } else {
            ((2.0 * nf.ln() / (1.0 / p2).ln()).ceil() as usize, (1.0 / p1).ln() / (1.0 / p2).ln())
        };
        let s = ((nf * nf / delta).ln() * nf.powf(2.0 * rho) / p1).ceil() as usize;
        Ok(LshParams { t: t.max(1), s: s.max(1), delta, n })
    }
}

fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// The `s·t` sampled hash functions of an index.
#[derive(Debug, Clone)]
enum HashFns {
    Bits(Vec<u32>),
    MinHash(Vec<u64>),
    PStable { a: Vec<f64>, b: Vec<f64>, w: f64, dim: usize },
}

/// Sampled hash functions grouped into `s` tables of `t` functions.
#[derive(Debug, Clone)]
pub struct LshHasher {
    family: LshFamily,
    params: LshParams,
    fns: HashFns,
}

impl LshHasher {
    /// Samples `params.s · params.t` functions of `family` from `seed`.
    pub fn sample(family: LshFamily, params: LshParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = params.s * params.t;
        let fns = match family.kind {
            HashFamilyKind::BitSampleHamming => {
                HashFns::Bits((0..m).map(|_| rng.random_range(0..family.dim as u32)).collect())
            }
            HashFamilyKind::MinHashJaccard => HashFns::MinHash((0..m).map(|_| rng.random()).collect()),
            HashFamilyKind::PStableL2 | HashFamilyKind::PStableL1 => {
                let a: Vec<f64> = match family.kind {
                    HashFamilyKind::PStableL2 => (0..m * family.dim).map(|_| StandardNormal.sample(&mut rng)).collect(),
                    _ => {
                        let cauchy = Cauchy::new(0.0, 1.0).expect("unit scale is valid");
                        (0..m * family.dim).map(|_| cauchy.sample(&mut rng)).collect()
                    }
                };
                let b = (0..m).map(|_| rng.random_range(0.0..family.w)).collect();
                HashFns::PStable { a, b, w: family.w, dim: family.dim }
            }
        };
        LshHasher { family, params, fns }
    }

    /// The family.
    pub fn family(&self) -> &LshFamily {
        &self.family
    }

    /// The table layout.
    pub fn params(&self) -> &LshParams {
        &self.params
    }

    /// Value of hash function `j` (of `s·t`) on a point.
    fn atomic(&self, j: usize, x: &[f64]) -> u64 {
        match &self.fns {
            HashFns::Bits(coords) => x.get(coords[j] as usize).map_or(0, |v| v.to_bits()),
            HashFns::MinHash(seeds) => x.iter().map(|e| mix64(seeds[j] ^ e.to_bits())).min().unwrap_or(u64::MAX),
            HashFns::PStable { a, b, w, dim } => {
                let row = &a[j * dim..(j + 1) * dim];
                let dot: f64 = row.iter().zip(x).map(|(p, q)| p * q).sum();
                ((dot + b[j]) / w).floor() as i64 as u64
            }
        }
    }

    /// The `s` table keys of a point: each mixes its table's `t` hashes.
    pub fn keys(&self, x: &[f64]) -> Vec<u64> {
        let t = self.params.t;
        (0..self.params.s)
            .map(|i| {
                (0..t)
                    .fold(i as u64, |acc, j| mix64(acc.wrapping_add(0x9E37_79B9_7F4A_7C15) ^ self.atomic(i * t + j, x)))
            })
            .collect()
    }
}

/// Order-statistic treap keyed by rank, with subtree population counters.
#[derive(Debug, Clone, Default)]
pub struct RankTree {
    root: Option<Box<TreapNode>>,
}

#[derive(Debug, Clone)]
struct TreapNode {
    rank: Rank,
    v: PointId,
    prio: u64,
    size: usize,
    left: Option<Box<TreapNode>>,
    right: Option<Box<TreapNode>>,
}

fn size(n: &Option<Box<TreapNode>>) -> usize {
    n.as_ref().map_or(0, |x| x.size)
}

impl TreapNode {
    fn fix(&mut self) {
        self.size = 1 + size(&self.left) + size(&self.right);
    }
}

/// Splits into (ranks < key, ranks ≥ key).
fn split(n: Option<Box<TreapNode>>, key: Rank) -> (Option<Box<TreapNode>>, Option<Box<TreapNode>>) {
    match n {
        None => (None, None),
        Some(mut x) => {
            if x.rank < key {
                let (l, r) = split(x.right.take(), key);
                x.right = l;
                x.fix();
                (Some(x), r)
            } else {
                let (l, r) = split(x.left.take(), key);
                x.left = r;
                x.fix();
                (l, Some(x))
            }
        }
    }
}

fn merge(a: Option<Box<TreapNode>>, b: Option<Box<TreapNode>>) -> Option<Box<TreapNode>> {
    match (a, b) {
        (None, b) => b,
        (a, None) => a,
        (Some(mut x), Some(mut y)) => {
            if x.prio > y.prio {
                x.right = merge(x.right.take(), Some(y));
                x.fix();
                Some(x)
            } else {
                y.left = merge(Some(x), y.left.take());
                y.fix();
                Some(y)
            }
        }
    }
}

impl RankTree {
    /// Number of entries.
    pub fn len(&self) -> usize {
        size(&self.root)
    }

    /// Whether the tree is empty.
    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    /// Inserts `(rank, v)`; the rank must be absent.
    pub fn insert(&mut self, rank: Rank, v: PointId) {
        let (l, r) = split(self.root.take(), rank);
        let node = Box::new(TreapNode {
            rank,
            v,
            prio: mix64(rank.0 ^ 0xA076_1D64_78BD_642F),
            size: 1,
            left: None,
            right: None,
        });
        self.root = merge(merge(l, Some(node)), r);
    }

    /// Removes the entry with `rank`; returns whether it was present.
    pub fn remove(&mut self, rank: Rank) -> bool {
        fn go(n: &mut Option<Box<TreapNode>>, rank: Rank) -> bool {
            let Some(x) = n else { return false };
            let found = match rank.cmp(&x.rank) {
                std::cmp::Ordering::Less => go(&mut x.left, rank),
                std::cmp::Ordering::Greater => go(&mut x.right, rank),
                std::cmp::Ordering::Equal => {
                    let node = n.take().expect("matched a node");
                    let TreapNode { left, right, .. } = *node;
                    *n = merge(left, right);
                    return true;
                }
            };
            if found {
                x.fix();
            }
            found
        }
        go(&mut self.root, rank)
    }

    /// The `i`-th smallest entry.
    pub fn nth(&self, mut i: usize) -> Option<(Rank, PointId)> {
        let mut cur = self.root.as_deref();
        while let Some(x) = cur {
            let ls = size(&x.left);
            if i < ls {
                cur = x.left.as_deref();
            } else if i == ls {
                return Some((x.rank, x.v));
            } else {
                i -= ls + 1;
                cur = x.right.as_deref();
            }
        }
        None
    }

    /// In-order traversal; `visit` returns false to stop early.
    pub fn scan(&self, mut visit: impl FnMut(Rank, PointId) -> bool) {
        let mut stack: Vec<&TreapNode> = Vec::new();
        let mut cur = self.root.as_deref();
        loop {
            while let Some(x) = cur {
                stack.push(x);
                cur = x.left.as_deref();
            }
            let Some(x) = stack.pop() else { return };
            if !visit(x.rank, x.v) {
                return;
            }
            cur = x.right.as_deref();
        }
    }

    /// Entries in increasing rank order.
    pub fn entries(&self) -> Vec<(Rank, PointId)> {
        let mut out = Vec::with_capacity(self.len());
        self.scan(|r, v| {
            out.push((r, v));
            true
        });
        out
    }

    /// Checks the population counters, key order and heap order.
    pub fn audit(&self) -> std::result::Result<(), String> {
        fn walk(n: &Option<Box<TreapNode>>, lo: Option<Rank>, hi: Option<Rank>) -> std::result::Result<usize, String> {
            let Some(x) = n else { return Ok(0) };
            if lo.is_some_and(|l| x.rank <= l) || hi.is_some_and(|h| x.rank >= h) {
                return Err("key order violated".into());
            }
            for c in [&x.left, &x.right].into_iter().flatten() {
                if c.prio > x.prio {
                    return Err("heap order violated".into());
                }
            }
            let s = 1 + walk(&x.left, lo, Some(x.rank))? + walk(&x.right, Some(x.rank), hi)?;
            if s != x.size {
                return Err(format!("population counter {} differs from subtree size {s}", x.size));
            }
            Ok(s)
        }
        walk(&self.root, None, None).map(|_| ())
    }
}

/// `s` hash tables whose buckets are [`RankTree`]s.
#[derive(Debug, Clone)]
pub struct LshIndex {
    hasher: LshHasher,
    tables: Vec<HashMap<u64, RankTree>>,
    members: HashMap<PointId, (Rank, Vec<u64>)>,
}

impl LshIndex {
    /// Empty index over sampled functions.
    pub fn new(hasher: LshHasher) -> Self {
        let s = hasher.params.s;
        LshIndex { hasher, tables: vec![HashMap::new(); s], members: HashMap::new() }
    }

    /// The hash functions.
    pub fn hasher(&self) -> &LshHasher {
        &self.hasher
    }

    /// Table keys of a coordinate vector.
    pub fn keys(&self, x: &[f64]) -> Vec<u64> {
        self.hasher.keys(x)
    }

    /// Adds `v` with the given rank and table keys.
    pub fn index_insert(&mut self, v: PointId, rank: Rank, keys: Vec<u64>) -> Result<()> {
        if self.members.contains_key(&v) {
            return Err(Error::DuplicateInsert(v));
        }
        for (table, &key) in self.tables.iter_mut().zip(&keys) {
            table.entry(key).or_default().insert(rank, v);
        }
        self.members.insert(v, (rank, keys));
        Ok(())
    }

    /// Removes `v` from every table.
    pub fn index_delete(&mut self, v: PointId) -> Result<()> {
        let (rank, keys) = self.members.remove(&v).ok_or(Error::UnknownPoint(v))?;
        for (table, key) in self.tables.iter_mut().zip(keys) {
            if let Some(tree) = table.get_mut(&key) {
                tree.remove(rank);
                if tree.is_empty() {
                    table.remove(&key);
                }
            }
        }
        Ok(())
    }

    /// Lowest-ranked indexed point sharing a bucket with `keys`, at distance
    /// at most `radius` from `v` and ranked at least `from`. Each distinct
    /// candidate costs one distance evaluation (counted in `work`).
    pub fn query_top(
        &self,
        v: PointId,
        keys: &[u64],
        radius: f64,
        metric: &dyn Metric,
        work: &mut u64,
    ) -> Option<(Rank, PointId)> {
        let mut best: Option<(Rank, PointId)> = None;
        let mut seen: HashMap<PointId, bool> = HashMap::new();
        for (table, key) in self.tables.iter().zip(keys) {
            let Some(tree) = table.get(key) else { continue };
            tree.scan(|rank, u| {
                if best.is_some_and(|(b, _)| rank >= b) {
                    return false;
                }
                if u == v {
                    return true;
                }
                let near = *seen.entry(u).or_insert_with(|| {
                    *work += 1;
                    metric.distance(v, u) <= radius
                });
                if near {
                    best = Some((rank, u));
                    return false;
                }
                true
            });
        }
        best
    }

    /// All indexed points sharing a bucket with `keys` within `radius` of
    /// `v` and ranked at least `from`, deduplicated, in increasing rank order.
    pub fn query_all(
        &self,
        v: PointId,
        keys: &[u64],
        from: Rank,
        radius: f64,
        metric: &dyn Metric,
        work: &mut u64,
    ) -> Vec<(Rank, PointId)> {
        let mut found: BTreeMap<Rank, PointId> = BTreeMap::new();
        let mut seen: HashMap<PointId, bool> = HashMap::new();
        for (table, key) in self.tables.iter().zip(keys) {
            let Some(tree) = table.get(key) else { continue };
            tree.scan(|rank, u| {
                if rank < from || u == v {
                    return true;
                }
                let near = *seen.entry(u).or_insert_with(|| {
                    *work += 1;
                    metric.distance(v, u) <= radius
                });
                if near {
                    found.insert(rank, u);
                }
                true
            });
        }
        found.into_iter().collect()
    }

    /// Whether two key vectors share a bucket in some table.
    pub fn collide(a: &[u64], b: &[u64]) -> bool {
        a.iter().zip(b).any(|(x, y)| x == y)
    }

    /// Number of indexed points.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Whether nothing is indexed.
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members of the bucket `key` of table `table`, in rank order.
    pub fn bucket(&self, table: usize, key: u64) -> Vec<(Rank, PointId)> {
        self.tables[table].get(&key).map_or_else(Vec::new, RankTree::entries)
    }

    /// Member sets of all nonempty buckets, for structural comparisons.
    pub fn snapshot(&self) -> Vec<BTreeMap<u64, Vec<PointId>>> {
        self.tables
            .iter()
            .map(|t| t.iter().map(|(&k, tree)| (k, tree.entries().into_iter().map(|(_, v)| v).collect())).collect())
            .collect()
    }

    /// Checks that every member occupies exactly one bucket per table and
    /// that all population counters are exact.
    pub fn audit(&self) -> std::result::Result<(), String> {
        for (i, table) in self.tables.iter().enumerate() {
            let mut total = 0;
            for (&key, tree) in table {
                tree.audit()?;
                for (rank, v) in tree.entries() {
                    match self.members.get(&v) {
                        Some((r, keys)) if *r == rank && keys[i] == key => {}
                        _ => return Err(format!("table {i} holds a stale entry for {v}")),
                    }
                }
                total += tree.len();
            }
            if total != self.members.len() {
                return Err(format!("table {i} holds {total} entries for {} members", self.members.len()));
            }
        }
        Ok(())
    }
}

/// Per-scale adjacency for the LSH engine: hashed buckets when the family is
/// sensitive at this radius, otherwise the exact threshold graph.
// The hashed variant dominates in practice; boxing it would add an
// indirection on every neighborhood query.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum LshAlgIndex {
    /// Exact threshold graph at the scale's radius.
    Exact(ThresholdIndex),
    /// Hashed graph: colliding pairs within `c·r`.
    Hashed {
        /// The bucket index over `alg`.
        index: LshIndex,
        /// Filter radius `c·r`.
        radius: f64,
        /// Table keys of every point seen since the last clear.
        keys: HashMap<PointId, Vec<u64>>,
    },
}

impl LshAlgIndex {
    fn keys_of<'a>(
        keys: &'a mut HashMap<PointId, Vec<u64>>,
        index: &LshIndex,
        v: PointId,
        metric: &dyn Metric,
    ) -> &'a [u64] {
        keys.entry(v).or_insert_with(|| {
            let x = metric.coords(v).expect("hashing needs coordinates");
            index.keys(x)
        })
    }

    /// Whether this scale runs on hashed buckets.
    pub fn is_hashed(&self) -> bool {
        matches!(self, LshAlgIndex::Hashed { .. })
    }

    /// The bucket index, when hashed.
    pub fn lsh(&self) -> Option<&LshIndex> {
        match self {
            LshAlgIndex::Hashed { index, .. } => Some(index),
            LshAlgIndex::Exact(_) => None,
        }
    }
}

impl AlgIndex for LshAlgIndex {
    fn attach(&mut self, v: PointId, rank: Rank, metric: &dyn Metric) {
        if let LshAlgIndex::Hashed { index, keys, .. } = self {
            let k = Self::keys_of(keys, index, v, metric).to_vec();
            index.index_insert(v, rank, k).expect("alg members are indexed once");
        }
    }

    fn detach(&mut self, v: PointId, _rank: Rank) {
        if let LshAlgIndex::Hashed { index, .. } = self {
            index.index_delete(v).expect("detached vertex was indexed");
        }
    }

    fn forget(&mut self, v: PointId) {
        if let LshAlgIndex::Hashed { keys, .. } = self {
            keys.remove(&v);
        }
    }

    fn min_neighbor(
        &mut self,
        v: PointId,
        alg: &AlgSet,
        metric: &dyn Metric,
        work: &mut u64,
    ) -> Option<(Rank, PointId)> {
        match self {
            LshAlgIndex::Exact(t) => t.min_neighbor(v, alg, metric, work),
            LshAlgIndex::Hashed { index, radius, keys } => {
                let k = Self::keys_of(keys, index, v, metric);
                index.query_top(v, k, *radius, metric, work)
            }
        }
    }

    fn neighbors_from(
        &mut self,
        v: PointId,
        from: Rank,
        alg: &AlgSet,
        metric: &dyn Metric,
        work: &mut u64,
    ) -> Vec<(Rank, PointId)> {
        match self {
            LshAlgIndex::Exact(t) => t.neighbors_from(v, from, alg, metric, work),
            LshAlgIndex::Hashed { index, radius, keys } => {
                let k = Self::keys_of(keys, index, v, metric);
                index.query_all(v, k, from, *radius, metric, work)
            }
        }
    }

    fn adjacent(&mut self, u: PointId, v: PointId, metric: &dyn Metric) -> bool {
        match self {
            LshAlgIndex::Exact(t) => t.adjacent(u, v, metric),
            LshAlgIndex::Hashed { index, radius, keys } => {
                let ku = Self::keys_of(keys, index, u, metric).to_vec();
                let kv = Self::keys_of(keys, index, v, metric);
                LshIndex::collide(&ku, kv) && metric.distance(u, v) <= *radius
            }
        }
    }

    fn clear(&mut self) {
        if let LshAlgIndex::Hashed { index, keys, .. } = self {
            *index = LshIndex::new(index.hasher.clone());
            keys.clear();
        }
    }
}

/// Settings of the LSH engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshConfig {
    /// Hash family.
    pub kind: HashFamilyKind,
    /// Approximation factor `c > 1`.
    pub c: f64,
    /// Failure probability per epoch.
    pub delta: f64,
    /// Coordinate dimension (ignored by MinHash).
    pub dim: usize,
}

/// Builds [`LshAlgIndex`]es; scales where the family is not sensitive fall
/// back to exact thresholds.
#[derive(Debug, Clone, Copy)]
pub struct LshFactory {
    /// Settings.
    pub cfg: LshConfig,
}

impl IndexFactory for LshFactory {
    type Index = LshAlgIndex;

    fn build(&self, r: f64, n_bound: usize, seed: u64) -> LshAlgIndex {
        let LshConfig { kind, c, delta, dim } = self.cfg;
        let hashed = LshFamily::new(kind, r, c, dim)
            .ok()
            .filter(LshFamily::is_sensitive)
            .and_then(|fam| LshParams::new(n_bound, delta, fam.p1, fam.p2).ok().map(|p| (fam, p)));
        match hashed {
            Some((fam, params)) => LshAlgIndex::Hashed {
                index: LshIndex::new(LshHasher::sample(fam, params, seed)),
                radius: c * r,
                keys: HashMap::new(),
            },
            None => LshAlgIndex::Exact(ThresholdIndex { r }),
        }
    }

    fn cover_radius(&self, index: &LshAlgIndex, r: f64) -> f64 {
        if index.is_hashed() {
            self.cfg.c * r
        } else {
            r
        }
    }
}

/// Dynamic `c(2+ε)`-approximate k-center over LSH graphs.
///
/// Time is cut into epochs: an epoch starting with `n₀` active points lasts
/// `max(1, ⌈n₀/2⌉)` updates, so the active set stays below
/// `n_bound = 2^⌈log₂(2n₀+2)⌉` throughout. At each epoch boundary the table
/// layout is recomputed for the new bound, hash functions and ranks are
/// redrawn, and the active set is replayed.
#[derive(Debug, Clone)]
pub struct LshKCenter {
    engine: KCenterEngine<LshFactory>,
    next_epoch_at: u64,
    epochs: u64,
}

fn epoch_bound(n0: usize) -> usize {
    (2 * n0 + 2).next_power_of_two()
}

impl LshKCenter {
    /// New engine; `kc` configures the ladder, `lsh` the hashing.
    pub fn new(kc: KCenterConfig, lsh: LshConfig) -> Result<Self> {
        if !(lsh.delta > 0.0 && lsh.delta < 1.0) {
            return Err(Error::InvalidConfig(format!("delta must lie in (0,1), got {}", lsh.delta)));
        }
        if lsh.c.is_nan() || lsh.c <= 1.0 {
            return Err(Error::InvalidConfig(format!("approximation factor c must exceed 1, got {}", lsh.c)));
        }
        let engine = KCenterEngine::with_factory(kc, LshFactory { cfg: lsh }, epoch_bound(0))?;
        Ok(LshKCenter { engine, next_epoch_at: 1, epochs: 1 })
    }

    /// Applies one update, starting a new epoch when due.
    pub fn update(&mut self, op: UpdateOp, metric: &dyn Metric) -> Result<KCenterStatus> {
        let status = self.engine.update(op, metric)?;
        let stats = self.engine.stats();
        if stats.t >= self.next_epoch_at {
            let n0 = stats.n_active;
            self.next_epoch_at = stats.t + (n0 as u64).div_ceil(2).max(1);
            self.epochs += 1;
            return self.engine.rebuild_all(epoch_bound(n0), metric);
        }
        Ok(status)
    }

    /// The underlying engine (solution, membership and audits).
    pub fn engine(&self) -> &KCenterEngine<LshFactory> {
        &self.engine
    }

    /// Mutable access to the underlying engine.
    pub fn engine_mut(&mut self) -> &mut KCenterEngine<LshFactory> {
        &mut self.engine
    }

    /// Current solution.
    pub fn solution(&self) -> KCenterSolution {
        self.engine.solution()
    }

    /// Status of the current solution.
    pub fn status(&self) -> KCenterStatus {
        self.engine.status()
    }

    /// Number of epochs started so far.
    pub fn epochs(&self) -> u64 {
        self.epochs
    }

    /// Update index at which the next epoch starts.
    pub fn next_epoch_at(&self) -> u64 {
        self.next_epoch_at
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{DistanceOracle, MetricKind};

    #[test]
    fn rho_and_params_from_probabilities() {
        let p = LshParams::new(100, 0.1, 0.5, 0.25).unwrap();
        assert_eq!((p.t, p.s), (7, 2303));
        let rho: f64 = (2f64).ln() / (4f64).ln();
        assert!((rho - 0.5).abs() < 1e-12);
        assert!(LshParams::new(100, 0.1, 0.25, 0.5).is_err());
        let p = LshParams::new(100, 0.1, 0.5, 0.0).unwrap();
        assert_eq!(p.t, 1);
    }

    #[test]
    fn minhash_family_closed_form_and_range() {
        let f = LshFamily::new(HashFamilyKind::MinHashJaccard, 0.2, 2.0, 0).unwrap();
        assert!((f.p1 - 0.8).abs() < 1e-12 && (f.p2 - 0.6).abs() < 1e-12);
        assert!(f.rho <= 1.0 / f.c);
        assert!(matches!(
            LshFamily::new(HashFamilyKind::MinHashJaccard, 0.3, 2.0, 0),
            Err(Error::RadiusOutOfRange { .. })
        ));
    }

    #[test]
    fn minhash_identical_sets_always_collide() {
        let f = LshFamily::new(HashFamilyKind::MinHashJaccard, 0.1, 2.0, 0).unwrap();
        let h = LshHasher::sample(f, LshParams { t: 5, s: 20, delta: 0.1, n: 10 }, 3);
        assert_eq!(h.keys(&[1.0, 5.0, 9.0]), h.keys(&[1.0, 5.0, 9.0]));
    }

    #[test]
    fn minhash_collision_rate_matches_jaccard_similarity() {
        // |A∩B| = 6, |A∪B| = 10: similarity 0.6.
        let a: Vec<f64> = (0..8).map(f64::from).collect();
        let b: Vec<f64> = (2..10).map(f64::from).collect();
        let f = LshFamily::new(HashFamilyKind::MinHashJaccard, 0.1, 2.0, 0).unwrap();
        let h = LshHasher::sample(f, LshParams { t: 1, s: 20_000, delta: 0.1, n: 10 }, 11);
        let (ka, kb) = (h.keys(&a), h.keys(&b));
        let rate = ka.iter().zip(&kb).filter(|(x, y)| x == y).count() as f64 / ka.len() as f64;
        assert!((rate - 0.6).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn pstable_collision_integrals() {
        // Cauchy closed form: (2/π)·atan(x) − ln(1+x²)/(π·x) with x = w/u.
        let f = LshFamily::new(HashFamilyKind::PStableL1, 1.0, 2.0, 3).unwrap();
        for u in [0.5, 1.0, 2.0, 7.0] {
            let x: f64 = f.w / u;
            let closed = 2.0 / std::f64::consts::PI * x.atan() - (1.0 + x * x).ln() / (std::f64::consts::PI * x);
            assert!((f.collision_probability(u) - closed).abs() < 1e-6);
        }
        let g = LshFamily::new(HashFamilyKind::PStableL2, 1.0, 2.0, 4).unwrap();
        assert!(g.p1 > g.p2 && g.p2 > 0.0 && g.rho < 1.0);
        assert_eq!(g.collision_probability(0.0), 1.0);
    }

    #[test]
    fn pstable_l2_collision_rate_matches_integral() {
        let fam = LshFamily::new(HashFamilyKind::PStableL2, 1.0, 2.0, 2).unwrap();
        let h = LshHasher::sample(fam, LshParams { t: 1, s: 20_000, delta: 0.1, n: 10 }, 5);
        let (ka, kb) = (h.keys(&[0.0, 0.0]), h.keys(&[1.2, 1.6]));
        let rate = ka.iter().zip(&kb).filter(|(x, y)| x == y).count() as f64 / ka.len() as f64;
        assert!((rate - fam.collision_probability(2.0)).abs() < 0.02, "rate {rate}");
    }

    #[test]
    fn bitsample_probabilities() {
        let f = LshFamily::new(HashFamilyKind::BitSampleHamming, 8.0, 4.0, 128).unwrap();
        assert!((f.p1 - 0.9375).abs() < 1e-12 && (f.p2 - 0.75).abs() < 1e-12);
        let p = LshParams::new(500, 0.1, f.p1, f.p2).unwrap();
        assert_eq!(p.t, 44);
        assert!((250..=260).contains(&p.s), "s = {}", p.s);
        assert!(LshFamily::new(HashFamilyKind::BitSampleHamming, 200.0, 2.0, 128).is_err());
    }

    #[test]
    fn treap_counters_and_order() {
        let mut t = RankTree::default();
        let ranks = [50u64, 10, 90, 30, 70, 20, 80, 40, 60, u64::MAX];
        for (i, &r) in ranks.iter().enumerate() {
            t.insert(Rank(r), i as PointId);
            t.audit().unwrap();
        }
        assert_eq!(t.len(), 10);
        assert_eq!(t.nth(0), Some((Rank(10), 1)));
        assert_eq!(t.nth(9), Some((Rank(u64::MAX), 9)));
        assert!(t.remove(Rank(u64::MAX)));
        assert!(t.remove(Rank(50)));
        assert!(!t.remove(Rank(55)));
        t.audit().unwrap();
        let keys: Vec<u64> = t.entries().iter().map(|(r, _)| r.0).collect();
        assert_eq!(keys, vec![10, 20, 30, 40, 60, 70, 80, 90]);
    }

    fn hamming_oracle(rows: &[Vec<f64>]) -> DistanceOracle {
        let mut o = DistanceOracle::new(MetricKind::Hamming);
        for r in rows {
            o.register(r.clone()).unwrap();
        }
        o
    }

    fn small_index(seed: u64) -> LshIndex {
        let fam = LshFamily::new(HashFamilyKind::BitSampleHamming, 1.0, 2.0, 8).unwrap();
        let params = LshParams::new(8, 0.1, fam.p1, fam.p2).unwrap();
        LshIndex::new(LshHasher::sample(fam, params, seed))
    }

    #[test]
    fn index_insert_delete_restores_state() {
        let rows: Vec<Vec<f64>> = (0..6u32).map(|i| (0..8).map(|b| f64::from((i >> (b % 3)) & 1)).collect()).collect();
        let m = hamming_oracle(&rows);
        let mut idx = small_index(1);
        for v in 0..5 {
            let k = idx.keys(m.coords(v).unwrap());
            idx.index_insert(v, Rank(100 + v as u64), k).unwrap();
        }
        let before = idx.snapshot();
        let k = idx.keys(m.coords(5).unwrap());
        idx.index_insert(5, Rank(7), k.clone()).unwrap();
        assert_eq!(idx.index_insert(5, Rank(8), k), Err(Error::DuplicateInsert(5)));
        idx.audit().unwrap();
        idx.index_delete(5).unwrap();
        assert_eq!(idx.snapshot(), before);
        assert_eq!(idx.index_delete(5), Err(Error::UnknownPoint(5)));
        idx.audit().unwrap();
    }

    #[test]
    fn query_top_filters_far_candidates() {
        let rows = vec![vec![0.0; 8], vec![1.0; 8], vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]];
        let m = hamming_oracle(&rows);
        let mut idx = small_index(2);
        let mut work = 0;
        let k0 = idx.keys(m.coords(0).unwrap());
        assert_eq!(idx.query_top(0, &k0, 2.0, &m, &mut work), None);
        // Force the far point into every bucket of point 0.
        idx.index_insert(1, Rank(1), k0.clone()).unwrap();
        assert_eq!(idx.query_top(0, &k0, 2.0, &m, &mut work), None);
        let k2 = idx.keys(m.coords(2).unwrap());
        idx.index_insert(2, Rank(5), k2).unwrap();
        if LshIndex::collide(&k0, &idx.keys(m.coords(2).unwrap())) {
            assert_eq!(idx.query_top(0, &k0, 2.0, &m, &mut work), Some((Rank(5), 2)));
            assert_eq!(idx.query_all(0, &k0, Rank(0), 2.0, &m, &mut work), vec![(Rank(5), 2)]);
        }
    }

    #[test]
    fn lsh_kcenter_two_far_bit_clusters() {
        let mut rows = Vec::new();
        for base in [0.0, 1.0] {
            for flip in 0..2 {
                let mut r = vec![base; 32];
                r[flip] = 1.0 - base;
                rows.push(r);
            }
        }
        let m = hamming_oracle(&rows);
        let lsh = LshConfig { kind: HashFamilyKind::BitSampleHamming, c: 2.0, delta: 0.1, dim: 32 };
        let run = || {
            let mut e = LshKCenter::new(KCenterConfig::new(2, 0.5, 1.0, 32.0, 4), lsh).unwrap();
            for p in 0..4 {
                e.update(UpdateOp::Insert(p), &m).unwrap();
            }
            e.solution()
        };
        let s = run();
        let opt = crate::oracle::exact_kcenter(&[0, 1, 2, 3], 2, |a, b| m.raw_distance(a, b), Default::default())
            .unwrap()
            .cost;
        assert!(s.radius(|a, b| m.raw_distance(a, b)) <= 2.0 * 2.5 * opt);
        assert!(s.cost_estimate <= 2.0 * 2.5 * opt);
        assert_eq!(s, run());
    }

    #[test]
    fn lsh_kcenter_few_points_cost_zero() {
        let m = hamming_oracle(&[vec![0.0; 4], vec![1.0; 4]]);
        let lsh = LshConfig { kind: HashFamilyKind::BitSampleHamming, c: 2.0, delta: 0.1, dim: 4 };
        let mut e = LshKCenter::new(KCenterConfig::new(3, 0.5, 1.0, 4.0, 4), lsh).unwrap();
        e.update(UpdateOp::Insert(0), &m).unwrap();
        assert_eq!(e.update(UpdateOp::Insert(1), &m).unwrap().cost_estimate, 0.0);
    }
}
