//! Closed-form versus oracle comparison.

use serde::{Deserialize, Serialize};

use super::OracleSolution;
use crate::closed_form::ClosedFormSolution;
use crate::spectral::slem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDelta {
    pub edge: String,
    pub closed: f64,
    pub oracle: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Largest of `|closed.slem - oracle.slem|` and the gap between the
    /// oracle value and the eigensolver SLEM of the closed-form weights.
    pub delta_slem: f64,
    /// Center-edge weight differences. Optimal weights need not be unique,
    /// so these are informational only.
    pub delta_q: Vec<EdgeDelta>,
    pub max_delta_q: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn compare(closed: &ClosedFormSolution, oracle: &OracleSolution, tol: f64) -> VerificationReport {
    let topology = closed.topology();
    let achieved = slem(&closed.pi, &closed.q_opt, &topology).map(|r| r.slem).unwrap_or(f64::INFINITY);
    let delta_slem = (closed.slem - oracle.slem).abs().max((achieved - oracle.slem).abs());
    let delta_q: Vec<EdgeDelta> = topology
        .center_edges()
        .map(|e| {
            let (c, o) = (closed.q_opt.get(e.a, e.b), oracle.q_opt.get(e.a, e.b));
            EdgeDelta { edge: e.to_string(), closed: c, oracle: o, delta: (c - o).abs() }
        })
        .collect();
    let max_delta_q = delta_q.iter().map(|d| d.delta).fold(0.0, f64::max);
    VerificationReport { delta_slem, delta_q, max_delta_q, tol, pass: delta_slem <= tol }
}
