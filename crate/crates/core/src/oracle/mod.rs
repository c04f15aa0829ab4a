//! Independent numerical minimizers of the SLEM.
//!
//! [`minimize_slem`] follows the central path of a log-determinant barrier
//! for the convex problem over the free edge weights and reports a
//! duality-gap certificate. [`brute_force_grid`] is a deliberately naive
//! exhaustive search used to check it on small instances.

mod barrier;
mod grid;
mod problem;
mod verify;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{Equilibrium, Topology, Weights};
use crate::error::{Error, Result};

pub use problem::{SlemProblem, CAP_FLOOR};

/// Target gap of the grid refinement.
const REFINE_GAP: f64 = 1e-10;
pub use verify::{compare, EdgeDelta, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Target bound on `certificate_gap`.
    pub tol: f64,
    /// Cap on Newton steps.
    pub max_iter: usize,
    /// `0` starts from the canonical interior point; other seeds randomize it.
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 50_000, seed: 0 }
    }
}

impl OracleOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// Full weights: optimized edges plus the fixed friend weights.
    pub q_opt: Weights,
    pub slem: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `slem` minus the best lower bound on the optimum.
    pub certificate_gap: f64,
}

fn trivial(problem: &SlemProblem) -> Result<OracleSolution> {
    let slem = problem.slem(&[]).ok_or(Error::ReducibleChain)?;
    Ok(OracleSolution { q_opt: problem.weights(&[]), slem, iterations: 0, converged: true, certificate_gap: 0.0 })
}

/// Minimize the SLEM over the center edges with friend weights `qf` fixed
/// (or over all edges of a star, with `qf` empty).
pub fn minimize_slem(
    pi: &Equilibrium,
    topology: &Topology,
    qf: &[f64],
    opts: &OracleOptions,
) -> Result<OracleSolution> {
    let problem = SlemProblem::new(pi, topology, qf)?;
    solve_problem(&problem, opts)
}

pub fn solve_problem(problem: &SlemProblem, opts: &OracleOptions) -> Result<OracleSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    if problem.dim() == 0 {
        return trivial(problem);
    }
    // Aim below the tolerance so the eigensolver value also lands inside it.
    let out = barrier::solve(problem, 0.1 * opts.tol, opts.max_iter, opts.seed);
    let slem = problem.slem(&out.x).ok_or_else(|| Error::InvalidArgument("minimizer left the feasible set".into()))?;
    let certificate_gap = (slem - out.lower_bound).max(0.0);
    Ok(OracleSolution {
        q_opt: problem.weights(&out.x),
        slem,
        iterations: out.iterations,
        converged: certificate_gap <= opts.tol,
        certificate_gap,
    })
}

/// Solve from each seed in parallel and return all solutions in seed order.
pub fn multi_start(
    pi: &Equilibrium,
    topology: &Topology,
    qf: &[f64],
    opts: &OracleOptions,
    seeds: &[u64],
) -> Result<Vec<OracleSolution>> {
    let problem = SlemProblem::new(pi, topology, qf)?;
    seeds.par_iter().map(|s| solve_problem(&problem, &opts.with_seed(*s))).collect()
}

/// Best of several restarts, ordered by `(slem, lexicographic weights)`.
pub fn best_of(solutions: Vec<OracleSolution>) -> Option<OracleSolution> {
    solutions.into_iter().min_by(|a, b| {
        a.slem.total_cmp(&b.slem).then_with(|| {
            let ka: Vec<f64> = a.q_opt.entries().map(|(_, w)| w).collect();
            let kb: Vec<f64> = b.q_opt.entries().map(|(_, w)| w).collect();
            ka.partial_cmp(&kb).unwrap_or(std::cmp::Ordering::Equal)
        })
    })
}

/// Exhaustive search over the lattice with `resolution` steps per free
/// edge, followed by a cutting-plane refinement of the best lattice point.
pub fn brute_force_grid(
    pi: &Equilibrium,
    topology: &Topology,
    qf: &[f64],
    resolution: usize,
) -> Result<OracleSolution> {
    if topology.blades() > 2 {
        return Err(Error::TooLarge(topology.blades()));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("grid resolution must be >= 1".into()));
    }
    let problem = SlemProblem::new(pi, topology, qf)?;
    if problem.dim() == 0 {
        return trivial(&problem);
    }
    let coarse = grid::grid_best(&problem, resolution);
    let ((slem, x), gap) = grid::refine(&problem, coarse, REFINE_GAP);
    Ok(OracleSolution {
        q_opt: problem.weights(&x),
        slem,
        iterations: resolution,
        converged: gap <= REFINE_GAP,
        certificate_gap: gap,
    })
}

/// Best lattice value without refinement; a finer lattice that contains
/// this one never scores worse.
pub fn grid_value(pi: &Equilibrium, topology: &Topology, qf: &[f64], resolution: usize) -> Result<f64> {
    if topology.blades() > 2 {
        return Err(Error::TooLarge(topology.blades()));
    }
    let problem = SlemProblem::new(pi, topology, qf)?;
    if problem.dim() == 0 {
        return Ok(trivial(&problem)?.slem);
    }
    Ok(grid::grid_best(&problem, resolution.max(1)).0)
}
