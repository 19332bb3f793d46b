//! Workloads shared by the benchmarks in `benches/`.

use std::collections::BTreeSet;

use dynclust::{DistanceOracle, MetricKind, PointId, UpdateOp};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Side of the integer grid the points are drawn from.
pub const SIDE: u32 = 4096;

/// Distance range of [`grid_stream`] points: `[1, SIDE·√2]`.
pub fn grid_range() -> (f64, f64) {
    (1.0, f64::from(SIDE) * std::f64::consts::SQRT_2)
}

/// `n` distinct Euclidean grid points inserted in order, followed by the
/// deletion of a random half.
pub fn grid_stream(n: usize, seed: u64) -> (DistanceOracle, Vec<UpdateOp>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle = DistanceOracle::new(MetricKind::L2);
    let mut seen = BTreeSet::new();
    while seen.len() < n {
        let p = (rng.random_range(0..SIDE), rng.random_range(0..SIDE));
        if seen.insert(p) {
            oracle.register(vec![f64::from(p.0), f64::from(p.1)]).expect("two coordinates");
        }
    }
    let mut ids: Vec<PointId> = (0..n as PointId).collect();
    let mut ops: Vec<UpdateOp> = ids.iter().map(|&p| UpdateOp::Insert(p)).collect();
    ids.shuffle(&mut rng);
    ops.extend(ids[..n / 2].iter().map(|&p| UpdateOp::Delete(p)));
    (oracle, ops)
}
