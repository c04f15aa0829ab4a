//! The constrained SLEM minimization problem shared by all minimizers.

use crate::chain::{build_transition_matrix, Edge, EdgeClass, Equilibrium, Topology, TopologyKind, Weights};
use crate::error::{Error, Result};
use crate::spectral::slem_value;

/// Free edges whose capacity is at most this are pinned to zero.
pub const CAP_FLOOR: f64 = 1e-14;

/// Minimize the SLEM over the center-edge weights of a friendship graph
/// (friend weights fixed) or over all edges of a star.
#[derive(Debug, Clone)]
pub struct SlemProblem {
    pi: Equilibrium,
    topology: Topology,
    fixed: Weights,
    free: Vec<Edge>,
    caps: Vec<f64>,
    pinned: Vec<Edge>,
    /// `(budget remaining after fixed weights, free-edge indices)` per vertex.
    vertex_rows: Vec<(f64, Vec<usize>)>,
}

impl SlemProblem {
    /// `qf[i]` is the fixed weight of friend edge `(2i+1, 2i+2)`; empty for a star.
    pub fn new(pi: &Equilibrium, topology: &Topology, qf: &[f64]) -> Result<Self> {
        topology.check_equilibrium(pi)?;
        let friends: Vec<Edge> = topology.friend_edges().copied().collect();
        if qf.len() != friends.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} fixed friend weights, got {}",
                friends.len(),
                qf.len()
            )));
        }
        let mut fixed = Weights::new();
        for (i, (e, w)) in friends.iter().zip(qf).enumerate() {
            let limit = pi[e.a].min(pi[e.b]);
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidArgument(format!("fixed weight on blade {} must be >= 0, got {w}", i + 1)));
            }
            if *w > limit * (1.0 + 1e-12) {
                return Err(Error::InfeasibleFixedWeight { blade: i + 1, value: *w, limit });
            }
            fixed.set(e.a, e.b, w.min(limit));
        }
        let n = topology.vertex_count();
        let budget: Vec<f64> = (0..n).map(|v| (pi[v] - fixed.load(v)).max(0.0)).collect();
        let mut free = Vec::new();
        let mut caps = Vec::new();
        let mut pinned = Vec::new();
        for e in topology.edges() {
            let optimized = match topology.kind() {
                TopologyKind::Friendship => e.class == EdgeClass::Center,
                TopologyKind::Star => true,
            };
            if !optimized {
                continue;
            }
            let cap = budget[e.a].min(budget[e.b]);
            if cap > CAP_FLOOR {
                free.push(*e);
                caps.push(cap);
            } else {
                pinned.push(*e);
            }
        }
        let vertex_rows = (0..n)
            .map(|v| {
                let idx = free.iter().enumerate().filter(|(_, e)| e.touches(v)).map(|(k, _)| k).collect();
                (budget[v], idx)
            })
            .filter(|(_, idx): &(f64, Vec<usize>)| !idx.is_empty())
            .collect();
        Ok(Self { pi: pi.clone(), topology: topology.clone(), fixed, free, caps, pinned, vertex_rows })
    }

    pub fn pi(&self) -> &Equilibrium {
        &self.pi
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn fixed(&self) -> &Weights {
        &self.fixed
    }

    pub fn free_edges(&self) -> &[Edge] {
        &self.free
    }

    pub fn pinned_edges(&self) -> &[Edge] {
        &self.pinned
    }

    /// Upper bound of each free variable implied by its two vertex budgets.
    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub(crate) fn vertex_rows(&self) -> &[(f64, Vec<usize>)] {
        &self.vertex_rows
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Full weight assignment: fixed weights plus `x` on the free edges.
    pub fn weights(&self, x: &[f64]) -> Weights {
        let mut w = self.fixed.clone();
        for (e, v) in self.free.iter().zip(x) {
            w.set(e.a, e.b, *v);
        }
        w
    }

    /// Largest violation of nonnegativity or of a vertex budget.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let neg = x.iter().map(|v| -v).fold(0.0, f64::max);
        let over =
            self.vertex_rows.iter().map(|(b, idx)| idx.iter().map(|&k| x[k]).sum::<f64>() - b).fold(0.0, f64::max);
        neg.max(over)
    }

    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.violation(x) <= 1e-12 * self.pi.values().iter().cloned().fold(1.0, f64::max)
    }

    /// For each free edge, the smallest `budget / free degree` over its two
    /// endpoints. Any point below these shares is strictly feasible.
    pub fn fair_shares(&self) -> Vec<f64> {
        let mut share = vec![f64::INFINITY; self.dim()];
        for (b, idx) in &self.vertex_rows {
            for &e in idx {
                share[e] = share[e].min(b / idx.len() as f64);
            }
        }
        share
    }

    /// Half of every fair share: a strictly feasible point.
    pub fn interior_point(&self) -> Vec<f64> {
        self.fair_shares().iter().map(|s| 0.5 * s).collect()
    }

    /// Eigensolver SLEM at `x`; `None` if `x` breaks a budget.
    pub fn slem(&self, x: &[f64]) -> Option<f64> {
        let p = build_transition_matrix(&self.pi, &self.weights(x), &self.topology).ok()?;
        slem_value(&p).ok()
    }
}
