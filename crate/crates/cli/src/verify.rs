//! Independent check of every reported clustering: recomputes the cost from
//! the emitted centers and assignment and compares it with the telemetry.

use std::collections::BTreeSet;

use anyhow::{ensure, Result};
use dynclust::{DistanceOracle, PointId};

use crate::engine::{Report, Snapshot};

/// Relative tolerance for comparing recomputed costs.
const TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

/// Checks `snap` against the active set and returns the recomputed cost.
///
/// Fails when a point is unassigned or assigned to a non-center, when there
/// are more than `k` centers, when the recomputed cost differs from the
/// reported realized cost, or when the realized cost exceeds the estimate.
pub fn verify(snap: &Snapshot, active: &BTreeSet<PointId>, k: usize, oracle: &DistanceOracle) -> Result<f64> {
    let d = |a, b| oracle.raw_distance(a, b);
    let recomputed = match &snap.report {
        Report::Centers { centers, assignment } => {
            let cs: BTreeSet<PointId> = centers.iter().copied().collect();
            ensure!(cs.len() <= k, "{} centers for k = {k}", cs.len());
            ensure!(cs.is_subset(active), "a center is not an active point");
            ensure!(assignment.keys().copied().eq(active.iter().copied()), "assignment does not cover the active set");
            ensure!(assignment.values().all(|c| cs.contains(c)), "a point is assigned to a non-center");
            assignment.iter().map(|(&p, &c)| d(p, c)).fold(0.0, f64::max)
        }
        Report::Balls { balls, assignment } => {
            ensure!(balls.len() <= k, "{} balls for k = {k}", balls.len());
            ensure!(balls.iter().all(|b| active.contains(&b.center)), "a ball center is not an active point");
            ensure!(assignment.keys().copied().eq(active.iter().copied()), "assignment does not cover the active set");
            let claimed: f64 = balls.iter().map(|b| b.radius).sum();
            ensure!(close(claimed, snap.cost_estimate), "balls sum to {claimed}, estimate is {}", snap.cost_estimate);
            let mut total = 0.0;
            for ball in balls {
                let mut r: f64 = 0.0;
                for (&p, _) in assignment.iter().filter(|(_, &c)| c == ball.center) {
                    let dp = d(p, ball.center);
                    ensure!(dp <= ball.radius * (1.0 + TOL), "point {p} lies outside its ball");
                    r = r.max(dp);
                }
                total += r;
            }
            ensure!(
                assignment.values().all(|c| balls.iter().any(|b| b.center == *c)),
                "a point is assigned to no ball"
            );
            total
        }
        Report::Clusters { clusters } => {
            ensure!(clusters.len() <= k, "{} clusters for k = {k}", clusters.len());
            let members: Vec<PointId> = clusters.values().flatten().copied().collect();
            let set: BTreeSet<PointId> = members.iter().copied().collect();
            ensure!(set.len() == members.len() && &set == active, "clusters do not partition the active set");
            clusters
                .values()
                .map(|ps| {
                    let mut diam: f64 = 0.0;
                    for (i, &a) in ps.iter().enumerate() {
                        for &b in &ps[i + 1..] {
                            diam = diam.max(d(a, b));
                        }
                    }
                    diam
                })
                .sum()
        }
    };
    ensure!(
        close(recomputed, snap.realized_cost),
        "recomputed cost {recomputed} differs from reported {}",
        snap.realized_cost
    );
    ensure!(
        recomputed <= snap.cost_estimate + TOL * snap.cost_estimate.max(1.0),
        "realized cost {recomputed} exceeds the certified estimate {}",
        snap.cost_estimate
    );
    Ok(recomputed)
}
