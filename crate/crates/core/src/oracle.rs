//! Brute-force ground truth for the test suites.
//!
//! Everything here is written directly from the problem definitions and
//! shares no nontrivial code with the engines, so agreement between an
//! engine and an oracle is evidence rather than tautology. The exhaustive
//! oracles refuse instances beyond an [`OracleBudget`].

use crate::error::{Error, Result};
use crate::lfmis::Rank;
use crate::metric::PointId;
use std::collections::BTreeMap;

/// Size caps for the exhaustive oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    /// Largest admissible number of points.
    pub max_n: usize,
    /// Largest admissible number of clusters.
    pub max_k: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_n: 14, max_k: 3 }
    }
}

impl OracleBudget {
    /// Fails with [`Error::BudgetExceeded`] when `(n, k)` is beyond the caps.
    pub fn check(&self, n: usize, k: usize) -> Result<()> {
        if n > self.max_n {
            return Err(Error::BudgetExceeded { used: n as f64, allowed: self.max_n as f64 });
        }
        if k > self.max_k && k < n {
            return Err(Error::BudgetExceeded { used: k as f64, allowed: self.max_k as f64 });
        }
        Ok(())
    }
}

/// Output of [`greedy_lfmis`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyLfmis {
    /// The first `cap` vertices of the LFMIS, in increasing rank order.
    pub prefix: Vec<PointId>,
    /// Size of the full LFMIS.
    pub full_len: usize,
    /// For every vertex, the lowest-ranked LFMIS vertex in its closed
    /// neighborhood.
    pub eliminator: BTreeMap<PointId, PointId>,
}

/// Greedy LFMIS: repeatedly take the lowest-ranked alive vertex and kill
/// its neighbors.
pub fn greedy_lfmis(
    vertices: &[(PointId, Rank)],
    mut adjacent: impl FnMut(PointId, PointId) -> bool,
    cap: usize,
) -> GreedyLfmis {
    let mut order: Vec<(Rank, PointId)> = vertices.iter().map(|&(v, r)| (r, v)).collect();
    order.sort();
    let mut alive = vec![true; order.len()];
    let mut mis = Vec::new();
    let mut eliminator = BTreeMap::new();
    for i in 0..order.len() {
        if !alive[i] {
            continue;
        }
        let v = order[i].1;
        mis.push(v);
        eliminator.insert(v, v);
        for j in i + 1..order.len() {
            if alive[j] && adjacent(v, order[j].1) {
                alive[j] = false;
                eliminator.insert(order[j].1, v);
            }
        }
    }
    let full_len = mis.len();
    mis.truncate(cap);
    GreedyLfmis { prefix: mis, full_len, eliminator }
}

/// The LFMIS computed from its fixed-point characterization: `v` belongs to
/// the set iff no lower-ranked neighbor does. Solved by synchronous
/// iteration from the all-in assignment, which stabilizes after at most `n`
/// rounds. Returned in increasing rank order.
pub fn lfmis_fixed_point(
    vertices: &[(PointId, Rank)],
    mut adjacent: impl FnMut(PointId, PointId) -> bool,
) -> Vec<PointId> {
    let n = vertices.len();
    let mut lower: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && vertices[j].1 < vertices[i].1 && adjacent(vertices[i].0, vertices[j].0) {
                lower[i].push(j);
            }
        }
    }
    let mut member = vec![true; n];
    for _ in 0..=n {
        let next: Vec<bool> = (0..n).map(|i| !lower[i].iter().any(|&j| member[j])).collect();
        if next == member {
            break;
        }
        member = next;
    }
    let mut out: Vec<(Rank, PointId)> = (0..n).filter(|&i| member[i]).map(|i| (vertices[i].1, vertices[i].0)).collect();
    out.sort();
    out.into_iter().map(|(_, v)| v).collect()
}

/// An optimal solution found by exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactKCenter {
    /// Optimal cost.
    pub cost: f64,
    /// An optimal center set.
    pub centers: Vec<PointId>,
}

fn matrix(points: &[PointId], dist: &mut impl FnMut(PointId, PointId) -> f64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(points[i], points[j]);
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    m
}

/// Optimal discrete k-center: the minimum over all `k`-subsets of the points
/// of the largest point-to-nearest-center distance.
pub fn exact_kcenter(
    points: &[PointId],
    k: usize,
    mut dist: impl FnMut(PointId, PointId) -> f64,
    budget: OracleBudget,
) -> Result<ExactKCenter> {
    let n = points.len();
    if n <= k {
        return Ok(ExactKCenter { cost: 0.0, centers: points.to_vec() });
    }
    budget.check(n, k)?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    let m = matrix(points, &mut dist);
    let mut best = ExactKCenter { cost: f64::INFINITY, centers: Vec::new() };
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        let cost = (0..n).map(|p| combo.iter().map(|&c| m[p][c]).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
        if cost < best.cost {
            best = ExactKCenter { cost, centers: combo.iter().map(|&c| points[c]).collect() };
        }
        if !next_combination(&mut combo, n) {
            break;
        }
    }
    Ok(best)
}

/// Advances `combo` (strictly increasing indices below `n`) to the next
/// combination in lexicographic order; returns false after the last one.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gonzalez's farthest-first traversal from the first point: a 2-approximate
/// k-center solution for instances too large to solve exactly. Returns the
/// cost and the centers; the optimum lies in `[cost/2, cost]`.
pub fn gonzalez(points: &[PointId], k: usize, mut dist: impl FnMut(PointId, PointId) -> f64) -> (f64, Vec<PointId>) {
    if points.len() <= k {
        return (0.0, points.to_vec());
    }
    let mut centers = vec![points[0]];
    let mut near: Vec<f64> = points.iter().map(|&p| dist(p, points[0])).collect();
    while centers.len() < k {
        let (far, _) = near.iter().enumerate().fold((0, -1.0), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        centers.push(points[far]);
        for (i, &p) in points.iter().enumerate() {
            near[i] = near[i].min(dist(p, points[far]));
        }
    }
    (near.iter().copied().fold(0.0, f64::max), centers)
}

/// An optimal sum-of-radii (or sum-of-diameters) solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSumRadii {
    /// Optimal cost.
    pub cost: f64,
    /// Balls `(center, radius)` of an optimal solution.
    pub balls: Vec<(PointId, f64)>,
}

/// Optimal discrete k-sum-of-radii.
///
/// Every ball of an optimal solution can be taken to have its radius equal to
/// the distance from its center to some input point, so the search runs
/// over the `n²` candidate balls. A dynamic program over covered-point
/// bitmasks then finds the cheapest cover with at most `k` balls; this
/// implicitly ranges over all point-to-center assignments (nearest-center
/// assignment would not be optimal for this objective).
pub fn exact_sum_radii(
    points: &[PointId],
    k: usize,
    mut dist: impl FnMut(PointId, PointId) -> f64,
    budget: OracleBudget,
) -> Result<ExactSumRadii> {
    let n = points.len();
    if n <= k {
        return Ok(ExactSumRadii { cost: 0.0, balls: points.iter().map(|&p| (p, 0.0)).collect() });
    }
    budget.check(n, k)?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    let m = matrix(points, &mut dist);
    let mut balls: Vec<(u32, f64, usize)> = Vec::new();
    for (c, row) in m.iter().enumerate() {
        for &radius in row {
            let mask = row.iter().enumerate().filter(|&(_, &d)| d <= radius).fold(0u32, |acc, (q, _)| acc | 1 << q);
            balls.push((mask, radius, c));
        }
    }
    let full = (1usize << n) - 1;
    // best[mask] with `layer` balls, plus the ball and predecessor used.
    let mut layers: Vec<Vec<(f64, usize, usize)>> = vec![vec![(f64::INFINITY, usize::MAX, usize::MAX); full + 1]];
    layers[0][0] = (0.0, usize::MAX, usize::MAX);
    for layer in 1..=k {
        let prev = &layers[layer - 1];
        let mut next = prev.clone();
        for (mask, &(base, _, _)) in prev.iter().enumerate() {
            if !base.is_finite() {
                continue;
            }
            for (b, &(bm, radius, _)) in balls.iter().enumerate() {
                let to = mask | bm as usize;
                if base + radius < next[to].0 {
                    next[to] = (base + radius, b, mask);
                }
            }
        }
        layers.push(next);
    }
    let cost = layers[k][full].0;
    let mut out = Vec::new();
    let (mut layer, mut mask) = (k, full);
    while layer > 0 && mask != 0 {
        let (_, b, from) = layers[layer][mask];
        if b != usize::MAX {
            let (_, radius, c) = balls[b];
            out.push((points[c], radius));
            mask = from;
        }
        layer -= 1;
    }
    Ok(ExactSumRadii { cost, balls: out })
}

/// Optimal k-sum-of-diameters: partition the points into at most `k`
/// clusters minimizing the sum of cluster diameters. `balls` reports one
/// member of each cluster with its diameter.
pub fn exact_sum_diameters(
    points: &[PointId],
    k: usize,
    mut dist: impl FnMut(PointId, PointId) -> f64,
    budget: OracleBudget,
) -> Result<ExactSumRadii> {
    let n = points.len();
    if n <= k {
        return Ok(ExactSumRadii { cost: 0.0, balls: points.iter().map(|&p| (p, 0.0)).collect() });
    }
    budget.check(n, k)?;
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    let m = matrix(points, &mut dist);
    let full = (1usize << n) - 1;
    let mut diam = vec![0.0f64; full + 1];
    for mask in 1..=full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut d = diam[rest];
        for (q, &dq) in m[low].iter().enumerate() {
            if rest >> q & 1 == 1 {
                d = d.max(dq);
            }
        }
        diam[mask] = d;
    }
    let mut best = vec![vec![f64::INFINITY; full + 1]; k + 1];
    let mut choice = vec![vec![0usize; full + 1]; k + 1];
    best[0][0] = 0.0;
    for j in 1..=k {
        best[j][0] = 0.0;
        for mask in 1..=full {
            let low = mask & mask.wrapping_neg();
            let rest = mask ^ low;
            // Enumerate sub-masks of `rest`; the cluster containing the
            // lowest point is `low | sub`.
            let mut sub = rest;
            loop {
                let cluster = low | sub;
                let c = diam[cluster] + best[j - 1][mask ^ cluster];
                if c < best[j][mask] {
                    best[j][mask] = c;
                    choice[j][mask] = cluster;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
    }
    let mut balls = Vec::new();
    let (mut j, mut mask) = (k, full);
    while mask != 0 {
        let cluster = choice[j][mask];
        balls.push((points[cluster.trailing_zeros() as usize], diam[cluster]));
        mask ^= cluster;
        j -= 1;
    }
    Ok(ExactSumRadii { cost: best[k][full], balls })
}

/// First triple `(a, b, c)` with `d(a, c) > d(a, b) + d(b, c)` beyond a
/// relative tolerance of `1e-9`, or `None` if the triangle inequality holds
/// on all triples.
pub fn triangle_violation(n: usize, mut dist: impl FnMut(usize, usize) -> f64) -> Option<(usize, usize, usize)> {
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = dist(i, j);
        }
    }
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let (ac, detour) = (m[a][c], m[a][b] + m[b][c]);
                if ac > detour + 1e-9 * ac.abs().max(1.0) {
                    return Some((a, b, c));
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_line(xs: &'static [f64]) -> impl FnMut(PointId, PointId) -> f64 {
        move |a, b| (xs[a as usize] - xs[b as usize]).abs()
    }

    fn ranked(rs: &[f64]) -> Vec<(PointId, Rank)> {
        rs.iter().enumerate().map(|(i, &r)| (i as PointId, Rank::from_unit(r))).collect()
    }

    #[test]
    fn greedy_on_clique_and_empty_graph() {
        let v = ranked(&[0.5, 0.2, 0.9]);
        let g = greedy_lfmis(&v, |_, _| true, 10);
        assert_eq!(g.prefix, vec![1]);
        assert!(g.eliminator.values().all(|&e| e == 1));
        let g = greedy_lfmis(&v, |_, _| false, 10);
        assert_eq!(g.prefix, vec![1, 0, 2]);
        assert_eq!(greedy_lfmis(&v, |_, _| false, 2).prefix, vec![1, 0]);
    }

    #[test]
    fn path_eliminators() {
        // a=0, b=1, c=2 with edges ab, bc; ranks b < a < c.
        let v = ranked(&[0.2, 0.1, 0.3]);
        let adj = |x: PointId, y: PointId| x.abs_diff(y) == 1;
        let g = greedy_lfmis(&v, adj, 10);
        assert_eq!(g.eliminator[&0], 1);
        let g = greedy_lfmis(&[v[0], v[2]], adj, 10);
        assert_eq!(g.eliminator[&0], 0);
    }

    #[test]
    #[allow(clippy::needless_range_loop)] // symmetric fill needs both indices
    fn greedy_matches_fixed_point_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = 8;
            let v: Vec<(PointId, Rank)> = (0..n).map(|i| (i, Rank(rng.random()))).collect();
            let mut adj = [[false; 8]; 8];
            for i in 0..8 {
                for j in i + 1..8 {
                    let e = rng.random_bool(0.5);
                    adj[i][j] = e;
                    adj[j][i] = e;
                }
            }
            let a = |x: PointId, y: PointId| adj[x as usize][y as usize];
            assert_eq!(greedy_lfmis(&v, a, 8).prefix, lfmis_fixed_point(&v, a));
        }
    }

    #[test]
    fn kcenter_examples() {
        let pts = [0, 1, 2, 3];
        let xs: &[f64] = &[0.0, 1.0, 100.0, 101.0];
        assert_eq!(exact_kcenter(&pts, 2, on_line(xs), OracleBudget::default()).unwrap().cost, 1.0);
        assert_eq!(exact_kcenter(&pts, 4, on_line(xs), OracleBudget::default()).unwrap().cost, 0.0);
        assert_eq!(exact_kcenter(&pts, 1, on_line(xs), OracleBudget::default()).unwrap().cost, 100.0);
        let many: Vec<PointId> = (0..20).collect();
        assert!(matches!(
            exact_kcenter(&many, 2, |_, _| 1.0, OracleBudget::default()),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn gonzalez_is_within_factor_two() {
        let xs: &[f64] = &[0.0, 1.0, 100.0, 101.0, 50.0];
        let pts = [0, 1, 2, 3, 4];
        let (g, _) = gonzalez(&pts, 2, on_line(xs));
        let opt = exact_kcenter(&pts, 2, on_line(xs), OracleBudget::default()).unwrap().cost;
        assert!(g >= opt && g <= 2.0 * opt);
    }

    #[test]
    fn sum_radii_examples() {
        let xs: &[f64] = &[0.0, 1.0, 10.0];
        let pts = [0, 1, 2];
        let s = exact_sum_radii(&pts, 2, on_line(xs), OracleBudget::default()).unwrap();
        assert_eq!(s.cost, 1.0);
        assert_eq!(s.balls.len(), 2);
        assert_eq!(exact_sum_radii(&pts, 3, on_line(xs), OracleBudget::default()).unwrap().cost, 0.0);
        assert_eq!(exact_sum_radii(&pts, 1, on_line(xs), OracleBudget::default()).unwrap().cost, 9.0);
    }

    #[test]
    fn sum_radii_is_not_nearest_center_assignment() {
        // An optimum is the ball around 4 of radius 6 plus the singleton 14:
        // point 10 is then served by the farther center.
        let xs: &[f64] = &[0.0, 4.0, 10.0, 14.0];
        let pts = [0, 1, 2, 3];
        let s = exact_sum_radii(&pts, 2, on_line(xs), OracleBudget::default()).unwrap();
        assert_eq!(s.cost, 6.0);
        for p in pts {
            assert!(s.balls.iter().any(|&(c, r)| (xs[c as usize] - xs[p as usize]).abs() <= r));
        }
        let d = exact_sum_diameters(&pts, 2, on_line(xs), OracleBudget::default()).unwrap();
        assert_eq!(d.cost, 8.0);
    }

    #[test]
    fn triangle_audit() {
        assert_eq!(triangle_violation(4, |a, b| (a as f64 - b as f64).abs()), None);
        let bad = |a: usize, b: usize| {
            if a.min(b) == 0 && a.max(b) == 2 {
                5.0
            } else if a == b {
                0.0
            } else {
                1.0
            }
        };
        assert!(triangle_violation(3, bad).is_some());
    }
}
