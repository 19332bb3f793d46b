//! Point identity, update streams, counted distance oracles and scale ladders.
//!
//! Every algorithm in the crate reaches the data only through [`Metric`],
//! whose implementations count each distance evaluation. Points are
//! identified by dense integers ([`PointId`]); callers with external labels
//! intern them first (the command-line front end does this).

use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

/// Dense identifier of a point. Identifiers are never reused: a point that
/// is deleted and later re-inserted receives a fresh identifier.
pub type PointId = u32;

/// One element of an update stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UpdateOp {
    /// The point becomes active. Its coordinates (if any) must already be
    /// registered with the metric.
    Insert(PointId),
    /// The point stops being active.
    Delete(PointId),
}

impl UpdateOp {
    /// The point the update refers to.
    pub fn id(self) -> PointId {
        match self {
            UpdateOp::Insert(p) | UpdateOp::Delete(p) => p,
        }
    }

    /// Whether this is an insertion.
    pub fn is_insert(self) -> bool {
        matches!(self, UpdateOp::Insert(_))
    }
}

/// The distance function behind an oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricKind {
    /// Euclidean distance on coordinate vectors.
    L2,
    /// Manhattan distance on coordinate vectors.
    L1,
    /// Minkowski distance of the given order `p ≥ 1`.
    Lp(f64),
    /// Number of differing coordinates (coordinates are expected to be 0/1).
    Hamming,
    /// `1 − |A∩B|/|A∪B|` on sets of integer elements; two empty sets are at
    /// distance 0.
    Jaccard,
    /// Explicit symmetric distance matrix indexed by insertion order.
    Matrix,
    /// Distances decided on the fly by an adaptive adversary.
    Adversary,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::L2 => write!(f, "l2"),
            MetricKind::L1 => write!(f, "l1"),
            MetricKind::Lp(p) => write!(f, "lp{p}"),
            MetricKind::Hamming => write!(f, "hamming"),
            MetricKind::Jaccard => write!(f, "jaccard"),
            MetricKind::Matrix => write!(f, "matrix"),
            MetricKind::Adversary => write!(f, "adversary"),
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "l2" | "euclidean" | "euclidean-l2" => MetricKind::L2,
            "l1" | "manhattan" => MetricKind::L1,
            "hamming" => MetricKind::Hamming,
            "jaccard" => MetricKind::Jaccard,
            "matrix" => MetricKind::Matrix,
            "adversary" => MetricKind::Adversary,
            other => {
                let p = other
                    .strip_prefix("lp")
                    .and_then(|rest| rest.trim_start_matches(['(', '=']).trim_end_matches(')').parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{s}`")))?;
                if p.is_nan() || p < 1.0 {
                    return Err(Error::InvalidConfig(format!("lp metric needs p >= 1, got {p}")));
                }
                MetricKind::Lp(p)
            }
        })
    }
}

/// Read access to a metric space with query accounting.
///
/// `distance` counts exactly one query per call. It panics when handed an
/// identifier that was never registered: algorithms only ever pass points
/// they were given, so this is a programming error rather than an input
/// error. Use [`DistanceOracle::checked_distance`] for untrusted identifiers.
pub trait Metric: Sync {
    /// Distance between two registered points; increments the query counter.
    fn distance(&self, a: PointId, b: PointId) -> f64;

    /// Total number of distance evaluations so far.
    fn queries(&self) -> u64;

    /// The kind of distance function.
    fn kind(&self) -> MetricKind;

    /// Coordinates of a point, for metrics that have them (hashing needs
    /// them; matrix and adversarial metrics return `None`).
    fn coords(&self, _p: PointId) -> Option<&[f64]> {
        None
    }
}

impl<M: Metric + ?Sized> Metric for &M {
    fn distance(&self, a: PointId, b: PointId) -> f64 {
        (**self).distance(a, b)
    }
    fn queries(&self) -> u64 {
        (**self).queries()
    }
    fn kind(&self) -> MetricKind {
        (**self).kind()
    }
    fn coords(&self, p: PointId) -> Option<&[f64]> {
        (**self).coords(p)
    }
}

/// Counted distance oracle over coordinate vectors, integer sets or an
/// explicit matrix.
///
/// Points are registered in insertion order and receive consecutive
/// identifiers starting at 0. Registration and activity are separate: the
/// oracle answers for every registered point, including deleted ones.
#[derive(Debug)]
pub struct DistanceOracle {
    kind: MetricKind,
    points: Vec<Vec<f64>>,
    matrix: Option<Vec<Vec<f64>>>,
    queries: AtomicU64,
}

impl DistanceOracle {
    /// An empty oracle for a coordinate-based kind.
    pub fn new(kind: MetricKind) -> Self {
        DistanceOracle { kind, points: Vec::new(), matrix: None, queries: AtomicU64::new(0) }
    }

    /// An oracle over an explicit distance matrix. Point `i` of the stream
    /// (in insertion order) is row `i`.
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidConfig(format!("matrix row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "matrix entry ({i},{j}) is not a finite non-negative number"
                    )));
                }
                if (d - matrix[j][i]).abs() > 1e-9 * d.abs().max(1.0) {
                    return Err(Error::InvalidConfig(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
            if row[i] != 0.0 {
                return Err(Error::InvalidConfig(format!("matrix diagonal entry {i} is not zero")));
            }
        }
        Ok(DistanceOracle {
            kind: MetricKind::Matrix,
            points: Vec::new(),
            matrix: Some(matrix),
            queries: AtomicU64::new(0),
        })
    }

    /// Registers a point and returns its identifier. Coordinates are
    /// ignored for matrix oracles; Jaccard coordinates are treated as a set
    /// (sorted and deduplicated).
    pub fn register(&mut self, coords: Vec<f64>) -> Result<PointId> {
        let id = self.len();
        if let Some(m) = &self.matrix {
            if id >= m.len() {
                return Err(Error::InvalidConfig(format!("matrix has only {} points", m.len())));
            }
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(format!("point {id} has non-finite coordinates")));
        }
        let coords = match self.kind {
            MetricKind::Jaccard => {
                let mut c = coords;
                c.sort_by(f64::total_cmp);
                c.dedup();
                c
            }
            MetricKind::Matrix => Vec::new(),
            _ => {
                if let Some(first) = self.points.first() {
                    if first.len() != coords.len() {
                        return Err(Error::InvalidConfig(format!(
                            "point {id} has dimension {}, expected {}",
                            coords.len(),
                            first.len()
                        )));
                    }
                }
                coords
            }
        };
        self.points.push(coords);
        Ok(id as PointId)
    }

    /// Number of registered points.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Whether no point has been registered.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance with identifier validation.
    pub fn checked_distance(&self, a: PointId, b: PointId) -> Result<f64> {
        for p in [a, b] {
            if p as usize >= self.len() {
                return Err(Error::UnknownPoint(p));
            }
        }
        Ok(self.distance(a, b))
    }

    /// Distance without touching the query counter. Reserved for
    /// preprocessing (scale bounds) and verification, never for algorithms.
    pub fn raw_distance(&self, a: PointId, b: PointId) -> f64 {
        if let Some(m) = &self.matrix {
            return m[a as usize][b as usize];
        }
        let (x, y) = (&self.points[a as usize], &self.points[b as usize]);
        coordinate_distance(self.kind, x, y)
    }

    /// Resets the query counter to zero.
    pub fn reset_queries(&self) {
        self.queries.store(0, Ordering::Relaxed);
    }

    /// Bounds `[r_min, r_max]` on the positive distances among the given
    /// points, computed exactly from all pairs (without counting queries).
    /// Returns `None` when no pair is at positive distance.
    pub fn distance_bounds(&self, ids: &[PointId]) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let d = self.raw_distance(a, b);
                if d > 0.0 {
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
        }
        (hi > 0.0).then_some((lo, hi))
    }
}

impl Metric for DistanceOracle {
    fn distance(&self, a: PointId, b: PointId) -> f64 {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.raw_distance(a, b)
    }

    fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    fn kind(&self) -> MetricKind {
        self.kind
    }

    fn coords(&self, p: PointId) -> Option<&[f64]> {
        if self.matrix.is_some() {
            return None;
        }
        self.points.get(p as usize).map(Vec::as_slice)
    }
}

/// Distance between two coordinate vectors (or sorted sets, for Jaccard).
pub fn coordinate_distance(kind: MetricKind, x: &[f64], y: &[f64]) -> f64 {
    match kind {
        MetricKind::L2 => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        MetricKind::L1 => x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum(),
        MetricKind::Lp(p) => x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>().powf(1.0 / p),
        MetricKind::Hamming => x.iter().zip(y).filter(|(a, b)| a != b).count() as f64,
        MetricKind::Jaccard => jaccard_sorted(x, y),
        MetricKind::Matrix | MetricKind::Adversary => {
            panic!("{kind} distances are not defined on coordinates")
        }
    }
}

/// Jaccard distance of two sorted, deduplicated sets.
fn jaccard_sorted(x: &[f64], y: &[f64]) -> f64 {
    if x.is_empty() && y.is_empty() {
        return 0.0;
    }
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < x.len() && j < y.len() {
        match x[i].total_cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = x.len() + y.len() - common;
    1.0 - common as f64 / union as f64
}

/// A geometric sequence of distance thresholds `r_min·f^i`, ending at the
/// first value that reaches `r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleLadder {
    r_min: f64,
    r_max: f64,
    factor: f64,
    scales: Vec<f64>,
}

impl ScaleLadder {
    /// Builds the ladder `r_min, r_min·factor, …` up to the first value
    /// `≥ r_max`.
    pub fn new(r_min: f64, r_max: f64, factor: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min.is_finite()) {
            return Err(Error::InvalidConfig(format!("r_min must be positive, got {r_min}")));
        }
        if !(r_max >= r_min && r_max.is_finite()) {
            return Err(Error::InvalidConfig(format!("r_max ({r_max}) must be at least r_min ({r_min})")));
        }
        if !(factor > 1.0 && factor.is_finite()) {
            return Err(Error::InvalidConfig(format!("ladder factor must exceed 1, got {factor}")));
        }
        let mut scales = vec![r_min];
        let mut r = r_min;
        while r < r_max {
            r *= factor;
            scales.push(r);
        }
        Ok(ScaleLadder { r_min, r_max, factor, scales })
    }

    /// The k-center ladder: factor `1 + ε/2`.
    pub fn for_kcenter(r_min: f64, r_max: f64, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Self::new(r_min, r_max, 1.0 + eps / 2.0)
    }

    /// The thresholds in increasing order.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    /// Number of thresholds.
    pub fn len(&self) -> usize {
        self.scales.len()
    }

    /// Always false: a ladder has at least one scale.
    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Ratio between consecutive scales.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    /// Smallest scale.
    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    /// Requested upper end (the last scale is at least this).
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("eps must be positive, got {eps}")))
    }
}

/// Counters describing the position in an update stream.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StreamStats {
    /// Number of updates applied so far.
    pub t: u64,
    /// Number of currently active points.
    pub n_active: usize,
    /// Largest value `n_active` has taken.
    pub n_max: usize,
}

/// The set of active points, with validation of every update against it.
#[derive(Debug, Clone, Default)]
pub struct ActiveSet {
    ever: Vec<bool>,
    active: BTreeSet<PointId>,
    stats: StreamStats,
}

impl ActiveSet {
    /// An empty active set.
    pub fn new() -> Self {
        Self::default()
    }

    /// Checks an update without applying it.
    pub fn validate(&self, op: UpdateOp) -> Result<()> {
        match op {
            UpdateOp::Insert(p) if self.ever.get(p as usize).copied().unwrap_or(false) => {
                Err(Error::DuplicateInsert(p))
            }
            UpdateOp::Delete(p) if !self.active.contains(&p) => Err(Error::DeleteOfInactive(p)),
            _ => Ok(()),
        }
    }

    /// Applies an update, returning the new stream statistics.
    pub fn apply(&mut self, op: UpdateOp) -> Result<StreamStats> {
        self.validate(op)?;
        match op {
            UpdateOp::Insert(p) => {
                let i = p as usize;
                if self.ever.len() <= i {
                    self.ever.resize(i + 1, false);
                }
                self.ever[i] = true;
                self.active.insert(p);
            }
            UpdateOp::Delete(p) => {
                self.active.remove(&p);
            }
        }
        self.stats.t += 1;
        self.stats.n_active = self.active.len();
        self.stats.n_max = self.stats.n_max.max(self.stats.n_active);
        Ok(self.stats)
    }

    /// Whether `p` is currently active.
    pub fn contains(&self, p: PointId) -> bool {
        self.active.contains(&p)
    }

    /// Active points in increasing identifier order.
    pub fn iter(&self) -> impl Iterator<Item = PointId> + '_ {
        self.active.iter().copied()
    }

    /// Number of active points.
    pub fn len(&self) -> usize {
        self.active.len()
    }

    /// Whether no point is active.
    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Current stream statistics.
    pub fn stats(&self) -> StreamStats {
        self.stats
    }
}

/// Line-oriented stream files.
///
/// The first line is a header `# metric=<kind> dim=<d>` or
/// `# metric=matrix file=<path>`; every following non-empty line is either
/// `+ <label> <coord...>` or `- <label>`. Lines starting with `#` after the
/// header are comments.
pub mod stream {
    use super::MetricKind;
    use crate::error::{Error, Result};

    /// Parsed header line.
    #[derive(Debug, Clone, PartialEq)]
    pub struct Header {
        /// Distance function.
        pub metric: MetricKind,
        /// Declared dimension, if given.
        pub dim: Option<usize>,
        /// Matrix file, for `metric=matrix`.
        pub file: Option<String>,
    }

    /// One update of a stream file, with its external label.
    #[derive(Debug, Clone, PartialEq)]
    pub enum Record {
        /// `+ label coords...`
        Insert {
            /// External label.
            label: String,
            /// Coordinates (empty for matrix streams).
            coords: Vec<f64>,
        },
        /// `- label`
        Delete {
            /// External label.
            label: String,
        },
    }

    /// Parses the header line.
    pub fn parse_header(line: &str) -> Result<Header> {
        let body = line
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse { line: 1, msg: "missing `# metric=...` header".into() })?;
        let mut metric = None;
        let mut dim = None;
        let mut file = None;
        for field in body.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: 1, msg: format!("malformed header field `{field}`") })?;
            match key {
                "metric" => {
                    metric =
                        Some(value.parse::<MetricKind>().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?)
                }
                "dim" => {
                    dim = Some(value.parse().map_err(|_| Error::Parse { line: 1, msg: format!("bad dim `{value}`") })?)
                }
                "file" => file = Some(value.to_string()),
                _ => {}
            }
        }
        let metric = metric.ok_or_else(|| Error::Parse { line: 1, msg: "header lacks metric=".into() })?;
        if metric == MetricKind::Matrix && file.is_none() {
            return Err(Error::Parse { line: 1, msg: "matrix streams need file=<path>".into() });
        }
        Ok(Header { metric, dim, file })
    }

    /// Parses one record line (1-based `line_no` for error messages).
    /// Returns `None` for blank lines and comments.
    pub fn parse_record(line: &str, line_no: usize, header: &Header) -> Result<Option<Record>> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Ok(None);
        }
        let mut parts = line.split_whitespace();
        let sign = parts.next().unwrap_or_default();
        let label =
            parts.next().ok_or_else(|| Error::Parse { line: line_no, msg: "missing point label".into() })?.to_string();
        match sign {
            "+" => {
                let coords = parts
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| Error::Parse { line: line_no, msg: format!("bad coordinate `{s}`") })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if let (Some(d), false) =
                    (header.dim, matches!(header.metric, MetricKind::Jaccard | MetricKind::Matrix))
                {
                    if coords.len() != d {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("expected {d} coordinates, found {}", coords.len()),
                        });
                    }
                }
                Ok(Some(Record::Insert { label, coords }))
            }
            "-" => {
                if parts.next().is_some() {
                    return Err(Error::Parse { line: line_no, msg: "deletions carry no coordinates".into() });
                }
                Ok(Some(Record::Delete { label }))
            }
            other => Err(Error::Parse { line: line_no, msg: format!("expected `+` or `-`, found `{other}`") }),
        }
    }

    /// Parses a CSV distance matrix.
    pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse { line: i + 1, msg: format!("bad matrix entry `{}`", s.trim()) })
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(kind: MetricKind, pts: &[&[f64]]) -> DistanceOracle {
        let mut o = DistanceOracle::new(kind);
        for p in pts {
            o.register(p.to_vec()).unwrap();
        }
        o
    }

    #[test]
    fn euclidean_three_four_five() {
        let o = oracle(MetricKind::L2, &[&[0.0, 0.0], &[3.0, 4.0]]);
        assert_eq!(o.distance(0, 1), 5.0);
        assert_eq!(o.queries(), 1);
    }

    #[test]
    fn jaccard_identical_and_empty_sets() {
        let o = oracle(MetricKind::Jaccard, &[&[1.0, 2.0], &[2.0, 1.0], &[], &[], &[3.0]]);
        assert_eq!(o.distance(0, 1), 0.0);
        assert_eq!(o.distance(2, 3), 0.0);
        assert_eq!(o.distance(0, 4), 1.0);
        assert_eq!(o.distance(2, 4), 1.0);
    }

    #[test]
    fn matrix_lookup() {
        let mut m = vec![vec![0.0; 6]; 6];
        m[2][5] = 7.0;
        m[5][2] = 7.0;
        let mut o = DistanceOracle::from_matrix(m).unwrap();
        for _ in 0..6 {
            o.register(Vec::new()).unwrap();
        }
        assert_eq!(o.distance(2, 5), 7.0);
        assert!(o.register(Vec::new()).is_err());
    }

    #[test]
    fn unknown_point_is_reported() {
        let o = oracle(MetricKind::L1, &[&[0.0]]);
        assert_eq!(o.checked_distance(0, 3), Err(Error::UnknownPoint(3)));
    }

    #[test]
    fn hamming_and_l1_and_lp() {
        let o = oracle(MetricKind::Hamming, &[&[0.0, 1.0, 1.0], &[1.0, 1.0, 0.0]]);
        assert_eq!(o.distance(0, 1), 2.0);
        let o = oracle(MetricKind::L1, &[&[0.0, 1.0], &[2.0, -1.0]]);
        assert_eq!(o.distance(0, 1), 4.0);
        let o = oracle(MetricKind::Lp(3.0), &[&[0.0, 0.0], &[1.0, 1.0]]);
        assert!((o.distance(0, 1) - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn active_set_validates_updates() {
        let mut a = ActiveSet::new();
        assert_eq!(a.apply(UpdateOp::Insert(1)).unwrap().n_active, 1);
        assert_eq!(a.apply(UpdateOp::Insert(1)), Err(Error::DuplicateInsert(1)));
        assert_eq!(a.apply(UpdateOp::Delete(1)).unwrap().n_active, 0);
        assert_eq!(a.apply(UpdateOp::Delete(1)), Err(Error::DeleteOfInactive(1)));
        assert_eq!(a.apply(UpdateOp::Insert(1)), Err(Error::DuplicateInsert(1)));
        let s = a.stats();
        assert_eq!((s.t, s.n_active, s.n_max), (2, 0, 1));
    }

    #[test]
    fn ladder_is_geometric_and_covers_r_max() {
        let l = ScaleLadder::for_kcenter(1.0, 128.0, 0.5).unwrap();
        assert!(l.scales().windows(2).all(|w| w[0] < w[1]));
        assert!(*l.scales().last().unwrap() >= 128.0);
        assert!(l.scales()[l.len() - 2] < 128.0);
        assert_eq!(ScaleLadder::new(2.0, 2.0, 1.5).unwrap().scales(), &[2.0]);
        assert!(ScaleLadder::new(0.0, 1.0, 2.0).is_err());
        assert!(ScaleLadder::new(1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn metric_kind_parsing() {
        assert_eq!("l2".parse::<MetricKind>().unwrap(), MetricKind::L2);
        assert_eq!("lp3".parse::<MetricKind>().unwrap(), MetricKind::Lp(3.0));
        assert_eq!("lp(1.5)".parse::<MetricKind>().unwrap(), MetricKind::Lp(1.5));
        assert!("lp0.5".parse::<MetricKind>().is_err());
        assert!("cosine".parse::<MetricKind>().is_err());
    }

    #[test]
    fn stream_parsing() {
        let h = stream::parse_header("# metric=l2 dim=2").unwrap();
        assert_eq!(h.metric, MetricKind::L2);
        assert_eq!(
            stream::parse_record("+ a 1 2", 2, &h).unwrap(),
            Some(stream::Record::Insert { label: "a".into(), coords: vec![1.0, 2.0] })
        );
        assert_eq!(stream::parse_record("- a", 3, &h).unwrap(), Some(stream::Record::Delete { label: "a".into() }));
        assert!(stream::parse_record("+ a 1", 4, &h).is_err());
        assert!(stream::parse_record("- a 1", 5, &h).is_err());
        assert_eq!(stream::parse_record("   ", 6, &h).unwrap(), None);
        assert!(stream::parse_header("# metric=matrix").is_err());
        assert_eq!(stream::parse_matrix("0,1\n1,0\n").unwrap(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }
}
