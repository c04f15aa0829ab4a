//! First-order optimality residual of a candidate solution.

use rayon::prelude::*;

use crate::chain::{Equilibrium, Topology, Weights};
use crate::oracle::SlemProblem;
use crate::reduction::block_diagonalize;

/// Probe step relative to the mean equilibrium mass.
const PROBE_STEP: f64 = 1e-4;

/// Optimality residual of `(pi, q)` claimed to reach `slem`, with the friend
/// weights held fixed at their values in `q`. It is the largest of
///
/// * the gap between `slem` and the eigensolver SLEM of the chain,
/// * the largest budget or sign violation,
/// * the largest excess `|s_bar_i| - slem` when the ratio condition holds,
/// * the largest SLEM decrease along feasible probe directions (coordinate,
///   pairwise and budget-preserving moves of the center weights).
///
/// The SLEM is convex in the weights, so the probe term vanishes exactly at a
/// minimizer up to rounding.
pub fn kkt_residual(pi: &Equilibrium, q: &Weights, slem: f64) -> f64 {
    let n = pi.len();
    if n < 3 || n.is_multiple_of(2) {
        return f64::INFINITY;
    }
    let Ok(topology) = Topology::friendship((n - 1) / 2) else { return f64::INFINITY };
    kkt_residual_for(pi, q, slem, &topology)
}

pub fn kkt_residual_for(pi: &Equilibrium, q: &Weights, slem: f64, topology: &Topology) -> f64 {
    let qf: Vec<f64> = topology.friend_edges().map(|e| q.get(e.a, e.b)).collect();
    let Ok(problem) = SlemProblem::new(pi, topology, &qf) else { return f64::INFINITY };
    let x: Vec<f64> = problem.free_edges().iter().map(|e| q.get(e.a, e.b)).collect();
    let pinned = problem.pinned_edges().iter().map(|e| q.get(e.a, e.b).abs()).fold(0.0, f64::max);
    let violation = problem.violation(&x).max(pinned);
    let Some(actual) = problem.slem(&x).filter(|_| pinned == 0.0) else {
        return violation.max(1.0);
    };
    let mut residual = violation.max((actual - slem).abs());

    if let Ok(b) = block_diagonalize(pi, q, topology) {
        let excess = b.singles.iter().map(|s| s.abs() - slem).fold(0.0, f64::max);
        residual = residual.max(excess);
    }

    let d = x.len();
    let h = PROBE_STEP * pi.total() / pi.len() as f64;
    // Displacements: coordinate and pairwise moves of length `h`, plus a
    // short step toward an interior point (feasible by convexity).
    let mut moves: Vec<Vec<(usize, f64)>> = Vec::new();
    moves.push(
        problem.interior_point().iter().zip(&x).enumerate().map(|(e, (c, v))| (e, PROBE_STEP * (c - v))).collect(),
    );
    for j in 0..d {
        moves.push(vec![(j, h)]);
        moves.push(vec![(j, -h)]);
        for k in j + 1..d {
            for (sj, sk) in [(1.0, -1.0), (-1.0, 1.0), (1.0, 1.0), (-1.0, -1.0)] {
                moves.push(vec![(j, sj * h), (k, sk * h)]);
            }
        }
    }
    let decrease = moves
        .par_iter()
        .filter_map(|mv| {
            let mut y = x.clone();
            for (e, delta) in mv {
                y[*e] += delta;
            }
            if !problem.is_feasible(&y) {
                return None;
            }
            problem.slem(&y).map(|v| actual - v)
        })
        .reduce(|| 0.0, f64::max);
    residual.max(decrease)
}
