//! Star reduction, block diagonalization and interlacing checks.
//!
//! When every blade satisfies the ratio condition
//! `q[0][2i-1] / pi[2i-1] = q[0][2i] / pi[2i] = mu_i`, the symmetrized chain
//! splits in the basis `{e_0, e_{i,+}, e_{i,-}}` into an `(m+1)`-block equal
//! to the symmetrized star chain and `m` scalar blocks `s_bar_i`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::{build_transition_matrix, Equilibrium, Topology, TopologyKind, TransitionMatrix, Weights};
use crate::error::{Error, Result};
use crate::spectral::symmetrize;

/// Relative tolerance on the per-blade ratio condition.
pub const RATIO_TOL: f64 = 1e-10;

/// Star chain on `{0, ..., m}` obtained by merging each blade into one leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct StarChain {
    pub pi_tilde: Equilibrium,
    /// Weight of star edge `(0, i)` at index `i - 1`.
    pub q_tilde: Vec<f64>,
    /// Common ratio `mu_i` of blade `i` at index `i - 1`.
    pub mu: Vec<f64>,
}

impl StarChain {
    pub fn topology(&self) -> Topology {
        Topology::star(self.q_tilde.len()).expect("star has at least one leaf")
    }

    pub fn weights(&self) -> Weights {
        let mut w = Weights::new();
        for (i, q) in self.q_tilde.iter().enumerate() {
            w.set(0, i + 1, *q);
        }
        w
    }

    pub fn transition_matrix(&self) -> Result<TransitionMatrix> {
        build_transition_matrix(&self.pi_tilde, &self.weights(), &self.topology())
    }
}

fn require_friendship(topology: &Topology, pi: &Equilibrium) -> Result<()> {
    if topology.kind() != TopologyKind::Friendship {
        return Err(Error::InvalidArgument("reduction needs a friendship graph".into()));
    }
    topology.check_equilibrium(pi)
}

/// Per-blade ratio `mu_i`, the budget-weighted average of the two ratios.
pub fn blade_ratios(pi: &Equilibrium, q: &Weights, topology: &Topology) -> Result<Vec<f64>> {
    require_friendship(topology, pi)?;
    (1..=topology.blades())
        .map(|i| {
            let (a, b) = (2 * i - 1, 2 * i);
            let (qa, qb) = (q.get(0, a), q.get(0, b));
            let (left, right) = (qa / pi[a], qb / pi[b]);
            let scale = left.abs().max(right.abs());
            if (left - right).abs() > RATIO_TOL * scale {
                return Err(Error::NotReducible { blade: i, left, right });
            }
            Ok((qa + qb) / (pi[a] + pi[b]))
        })
        .collect()
}

pub fn reduce_to_star(pi: &Equilibrium, q: &Weights, topology: &Topology) -> Result<StarChain> {
    let mu = blade_ratios(pi, q, topology)?;
    let m = topology.blades();
    let mut pt = Vec::with_capacity(m + 1);
    pt.push(pi[0]);
    pt.extend((1..=m).map(|i| pi[2 * i - 1] + pi[2 * i]));
    let q_tilde = (1..=m).map(|i| q.get(0, 2 * i - 1) + q.get(0, 2 * i)).collect();
    Ok(StarChain { pi_tilde: Equilibrium::new(pt)?, q_tilde, mu })
}

/// `s_bar = 1 - mu - q_f (pi_a + pi_b) / (pi_a pi_b)` for one blade.
pub fn single_eigenvalue(mu: f64, q_f: f64, pi_a: f64, pi_b: f64) -> f64 {
    1.0 - mu - q_f * (pi_a + pi_b) / (pi_a * pi_b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    /// Star transition matrix `I - sum_i (iota_i e_0 - mu_i e_i)(e_0 - e_i)^T`.
    pub p0: DMatrix<f64>,
    /// Symmetrized star block `I - sum_i mu_i (theta_i e_0 - e_i)(theta_i e_0 - e_i)^T`.
    pub p0_hat: DMatrix<f64>,
    pub singles: Vec<f64>,
    pub mu: Vec<f64>,
    /// `sqrt((pi_{2i-1} + pi_{2i}) / pi_0)`.
    pub theta: Vec<f64>,
    /// `mu_i (pi_{2i-1} + pi_{2i}) / pi_0`.
    pub iota: Vec<f64>,
    /// Orthogonal change of basis; columns `e_0, e_{1,+}..e_{m,+}, e_{1,-}..e_{m,-}`.
    pub basis: DMatrix<f64>,
    /// Largest deviation of `basis^T S basis` from `diag(p0_hat, singles)`.
    pub residual: f64,
}

/// Split the symmetrized chain into the star block and the blade singles.
///
/// The antisymmetric vector of blade `(a, b)` is
/// `(sqrt(pi_b) e_a - sqrt(pi_a) e_b) / sqrt(pi_a + pi_b)`, which is
/// orthogonal to both `S e_0` and the symmetric partner for any masses.
pub fn block_diagonalize(pi: &Equilibrium, q: &Weights, topology: &Topology) -> Result<BlockDecomposition> {
    let mu = blade_ratios(pi, q, topology)?;
    let m = topology.blades();
    let n = 2 * m + 1;
    let pi0 = pi[0];
    let sums: Vec<f64> = (1..=m).map(|i| pi[2 * i - 1] + pi[2 * i]).collect();
    let theta: Vec<f64> = sums.iter().map(|s| (s / pi0).sqrt()).collect();
    let iota: Vec<f64> = mu.iter().zip(&sums).map(|(u, s)| u * s / pi0).collect();

    let mut p0 = DMatrix::identity(m + 1, m + 1);
    let mut p0_hat = DMatrix::identity(m + 1, m + 1);
    for i in 1..=m {
        let (u, io, th) = (mu[i - 1], iota[i - 1], theta[i - 1]);
        p0[(0, 0)] -= io;
        p0[(0, i)] += io;
        p0[(i, 0)] += u;
        p0[(i, i)] -= u;
        p0_hat[(0, 0)] -= u * th * th;
        p0_hat[(0, i)] += u * th;
        p0_hat[(i, 0)] += u * th;
        p0_hat[(i, i)] -= u;
    }

    let singles: Vec<f64> =
        (1..=m).map(|i| single_eigenvalue(mu[i - 1], q.get(2 * i - 1, 2 * i), pi[2 * i - 1], pi[2 * i])).collect();

    let mut basis = DMatrix::zeros(n, n);
    basis[(0, 0)] = 1.0;
    for i in 1..=m {
        let (a, b) = (2 * i - 1, 2 * i);
        let norm = sums[i - 1].sqrt();
        let (ra, rb) = (pi[a].sqrt(), pi[b].sqrt());
        basis[(a, i)] = ra / norm;
        basis[(b, i)] = rb / norm;
        basis[(a, m + i)] = rb / norm;
        basis[(b, m + i)] = -ra / norm;
    }

    let s = symmetrize(&build_transition_matrix(pi, q, topology)?)?;
    let t = basis.transpose() * s * &basis;
    let mut expected = DMatrix::zeros(n, n);
    expected.view_mut((0, 0), (m + 1, m + 1)).copy_from(&p0_hat);
    for i in 0..m {
        expected[(m + 1 + i, m + 1 + i)] = singles[i];
    }
    let residual = (t - expected).amax();

    Ok(BlockDecomposition { p0, p0_hat, singles, mu, theta, iota, basis, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterlacingReport {
    pub interlaces: bool,
    pub tight: bool,
    /// Smallest `k` witnessing tightness (`0..=coarse.len()`).
    pub witness_k: Option<usize>,
}

/// Equality tolerance used when comparing eigenvalues.
pub const INTERLACE_TOL: f64 = 1e-9;

fn check_sorted(v: &[f64], name: &str) -> Result<()> {
    if let Some(w) = v.windows(2).position(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(format!("{name} spectrum is not sorted non-increasingly at index {w}")));
    }
    Ok(())
}

/// Whether `coarse` (length `m`) interlaces `fine` (length `n > m`):
/// `fine[i] >= coarse[i] >= fine[n - m + i]` for every `i`.
pub fn check_interlacing(coarse: &[f64], fine: &[f64]) -> Result<InterlacingReport> {
    check_interlacing_tol(coarse, fine, INTERLACE_TOL)
}

pub fn check_interlacing_tol(coarse: &[f64], fine: &[f64], tol: f64) -> Result<InterlacingReport> {
    let (m, n) = (coarse.len(), fine.len());
    if m >= n {
        return Err(Error::InvalidArgument(format!("coarse spectrum ({m}) must be shorter than the fine one ({n})")));
    }
    check_sorted(coarse, "coarse")?;
    check_sorted(fine, "fine")?;
    let interlaces = (0..m).all(|i| fine[i] + tol >= coarse[i] && coarse[i] + tol >= fine[n - m + i]);
    let upper = |i: usize| (fine[i] - coarse[i]).abs() <= tol;
    let lower = |i: usize| (fine[n - m + i] - coarse[i]).abs() <= tol;
    let witness_k = (0..=m).find(|&k| (0..k).all(upper) && (k..m).all(lower));
    Ok(InterlacingReport { interlaces, tight: witness_k.is_some(), witness_k })
}

/// Sorted multisets agree entrywise within `tol`.
pub fn multiset_eq(a: &[f64], b: &[f64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Every element of `sub` can be matched to a distinct element of `sup`.
pub fn multiset_contains(sup: &[f64], sub: &[f64], tol: f64) -> bool {
    let mut used = vec![false; sup.len()];
    let mut sub = sub.to_vec();
    sub.sort_by(f64::total_cmp);
    sub.iter().all(|x| {
        let best = sup
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((j, d)) if d <= tol => {
                used[j] = true;
                true
            }
            _ => false,
        }
    })
}
