//! Instance and stream generators shared by the integration tests.

#![allow(dead_code)]

use dynclust::{DistanceOracle, MetricKind, PointId, UpdateOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded generator.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Oracle over `n` distinct random integer points in `[0, side)^dim`
/// (distinct points keep every positive distance at least 1).
pub fn grid_points(rng: &mut ChaCha8Rng, kind: MetricKind, n: usize, dim: usize, side: u32) -> DistanceOracle {
    assert!((side as f64).powi(dim as i32) >= n as f64, "grid too small for {n} distinct points");
    let mut seen = std::collections::HashSet::new();
    let mut o = DistanceOracle::new(kind);
    while o.len() < n {
        let x: Vec<u32> = (0..dim).map(|_| rng.random_range(0..side)).collect();
        if seen.insert(x.clone()) {
            o.register(x.into_iter().map(f64::from).collect()).unwrap();
        }
    }
    o
}

/// Oracle over `n` bit vectors of length `dim` drawn around `clusters`
/// random centers with at most `flips` flipped bits each.
pub fn bit_clusters(rng: &mut ChaCha8Rng, n: usize, dim: usize, clusters: usize, flips: usize) -> DistanceOracle {
    let centers: Vec<Vec<f64>> =
        (0..clusters).map(|_| (0..dim).map(|_| f64::from(rng.random_range(0..2u8))).collect()).collect();
    let mut o = DistanceOracle::new(MetricKind::Hamming);
    for i in 0..n {
        let mut x = centers[i % clusters].clone();
        for _ in 0..rng.random_range(0..=flips) {
            let j = rng.random_range(0..dim);
            x[j] = 1.0 - x[j];
        }
        o.register(x).unwrap();
    }
    o
}

/// Oracle over `n` sets drawn around `clusters` random base sets of size
/// `size` from `0..universe`, each with up to two elements replaced.
pub fn set_clusters(rng: &mut ChaCha8Rng, n: usize, clusters: usize, size: usize, universe: u32) -> DistanceOracle {
    let bases: Vec<Vec<u32>> = (0..clusters)
        .map(|_| rand::seq::index::sample(rng, universe as usize, size).into_iter().map(|x| x as u32).collect())
        .collect();
    let mut o = DistanceOracle::new(MetricKind::Jaccard);
    for i in 0..n {
        let mut s = bases[i % clusters].clone();
        for _ in 0..rng.random_range(0..=2) {
            let j = rng.random_range(0..s.len());
            s[j] = rng.random_range(0..universe);
        }
        s.sort_unstable();
        s.dedup();
        o.register(s.into_iter().map(f64::from).collect()).unwrap();
    }
    o
}

/// A valid update stream over identifiers `0..ids`: inserts fresh
/// identifiers in order and deletes random active ones, keeping at most
/// `max_active` points active. Inserts are chosen with probability
/// `p_insert` while both moves are possible.
pub fn stream(rng: &mut ChaCha8Rng, ids: usize, updates: usize, max_active: usize, p_insert: f64) -> Vec<UpdateOp> {
    let mut ops = Vec::with_capacity(updates);
    let mut active: Vec<PointId> = Vec::new();
    let mut next = 0;
    while ops.len() < updates {
        let can_insert = next < ids && active.len() < max_active;
        let insert = can_insert && (active.is_empty() || rng.random_bool(p_insert));
        if insert {
            active.push(next as PointId);
            ops.push(UpdateOp::Insert(next as PointId));
            next += 1;
        } else if !active.is_empty() {
            let i = rng.random_range(0..active.len());
            ops.push(UpdateOp::Delete(active.swap_remove(i)));
        } else {
            break;
        }
    }
    ops
}

/// Smallest and largest pairwise distance among the registered points
/// (smallest counts only positive distances).
pub fn distance_range(o: &DistanceOracle) -> (f64, f64) {
    let n = o.len() as PointId;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for a in 0..n {
        for b in a + 1..n {
            let d = o.raw_distance(a, b);
            if d > 0.0 {
                lo = lo.min(d);
            }
            hi = hi.max(d);
        }
    }
    (lo.min(hi.max(1.0)), hi.max(1.0))
}
