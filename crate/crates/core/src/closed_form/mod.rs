//! Regime classification and closed-form optimal center weights.
//!
//! Every solver returns the optimal center weights, the optimal SLEM, and the
//! interval of friend weights over which that answer stays optimal. Outside
//! those intervals (and in the one regime with no closed form) the answer
//! comes from [`crate::oracle`] and is marked as such.

mod kkt;
mod m1;
mod m2;
mod m_ge3;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::chain::{Equilibrium, Topology, Weights};
use crate::error::{Error, Result};
use crate::oracle::{minimize_slem, OracleOptions, OracleSolution};

pub use kkt::{kkt_residual, kkt_residual_for};
pub use m1::{m1_low_middle_boundary, m1_thresholds, solve_m1, M1Thresholds};
pub use m2::{m2_boundary_diagnostics, m2_boundary_sweep, solve_m2, M2BoundaryReport};
pub use m_ge3::{dominant_blade, solve_m_ge3};

/// Tolerance used when deciding whether a friend weight lies in its interval.
pub const BOUNDS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    #[serde(rename = "M_GE3_INTERIOR")]
    MGe3Interior,
    #[serde(rename = "M_GE3_SATURATED")]
    MGe3Saturated,
    #[serde(rename = "M2_REGIME1")]
    M2Regime1,
    #[serde(rename = "M2_REGIME2")]
    M2Regime2,
    #[serde(rename = "M1_HIGH")]
    M1High,
    #[serde(rename = "M1_LOW")]
    M1Low,
    #[serde(rename = "M1_MIDDLE")]
    M1Middle,
}

impl RegimeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MGe3Interior => "M_GE3_INTERIOR",
            Self::MGe3Saturated => "M_GE3_SATURATED",
            Self::M2Regime1 => "M2_REGIME1",
            Self::M2Regime2 => "M2_REGIME2",
            Self::M1High => "M1_HIGH",
            Self::M1Low => "M1_LOW",
            Self::M1Middle => "M1_MIDDLE",
        }
    }
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameter regime. `tag` is the branch that produced the answer and
/// `nominal` the one the mass condition selects. `overridden` is set when
/// the nominal closed form was not used: for m = 2 when the other branch won
/// or neither branch attains its formula, for m >= 3 when a dominant blade
/// voids the common-ratio optimum. Without a usable branch the minimizer
/// answers and `tag` stays nominal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Regime {
    pub tag: RegimeTag,
    pub m: usize,
    pub nominal: RegimeTag,
    pub overridden: bool,
}

impl Regime {
    pub fn new(tag: RegimeTag, m: usize) -> Self {
        Self { tag, m, nominal: tag, overridden: false }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ClosedForm,
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSolution {
    pub regime: Regime,
    pub pi: Equilibrium,
    /// Fixed friend weights, blade order.
    pub qf: Vec<f64>,
    /// Optimal center weights together with the fixed friend weights.
    pub q_opt: Weights,
    pub slem: f64,
    /// Per-blade interval `[lo, hi]` of friend weights keeping this optimum.
    pub qf_bounds: Vec<(f64, f64)>,
    pub within_bounds: bool,
    pub kkt_residual: f64,
    pub source: Source,
}

impl ClosedFormSolution {
    pub fn m(&self) -> usize {
        self.regime.m
    }

    pub fn topology(&self) -> Topology {
        Topology::friendship(self.regime.m).expect("m >= 1")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub oracle: OracleOptions,
    /// Report the m = 2 friend-weight intervals without the harmonic factor
    /// `pi_a pi_b / (pi_a + pi_b)`.
    pub paper_literal_bounds: bool,
}

pub(crate) fn sqrt_guarded(x: f64) -> f64 {
    if (-1e-14..0.0).contains(&x) {
        0.0
    } else {
        x.sqrt()
    }
}

/// Harmonic factor `pi_a pi_b / (pi_a + pi_b)` of blade `i` (1-based).
pub(crate) fn harmonic(pi: &Equilibrium, i: usize) -> f64 {
    let (a, b) = (pi[2 * i - 1], pi[2 * i]);
    a * b / (a + b)
}

pub(crate) fn blade_sum(pi: &Equilibrium, i: usize) -> f64 {
    pi[2 * i - 1] + pi[2 * i]
}

pub(crate) fn blade_min(pi: &Equilibrium, i: usize) -> f64 {
    pi[2 * i - 1].min(pi[2 * i])
}

/// Center weights `mu_i * pi_v` on both vertices of blade `i`, plus `qf`.
pub(crate) fn weights_from_ratios(pi: &Equilibrium, mu: &[f64], qf: &[f64]) -> Weights {
    let mut w = Weights::new();
    for (k, (u, f)) in mu.iter().zip(qf).enumerate() {
        let (a, b) = (2 * k + 1, 2 * k + 2);
        w.set(0, a, u * pi[a]);
        w.set(0, b, u * pi[b]);
        w.set(a, b, *f);
    }
    w
}

pub(crate) fn in_bounds(qf: &[f64], bounds: &[(f64, f64)], scale: f64) -> bool {
    let eps = BOUNDS_TOL * scale.max(1.0);
    qf.iter().zip(bounds).all(|(q, (lo, hi))| *q >= lo - eps && *q <= hi + eps)
}

pub(crate) fn check_qf(pi: &Equilibrium, qf: &[f64], m: usize) -> Result<()> {
    if qf.len() != m {
        return Err(Error::InvalidArgument(format!("expected {m} friend weights, got {}", qf.len())));
    }
    for (k, q) in qf.iter().enumerate() {
        let limit = blade_min(pi, k + 1);
        if !q.is_finite() || *q < 0.0 {
            return Err(Error::InvalidArgument(format!("friend weight on blade {} must be >= 0, got {q}", k + 1)));
        }
        if *q > limit * (1.0 + 1e-12) {
            return Err(Error::InfeasibleFixedWeight { blade: k + 1, value: *q, limit });
        }
    }
    Ok(())
}

/// Nominal regime from the masses (and, for m = 1, the friend weight).
pub fn classify_regime(pi: &Equilibrium, m: usize, qf: &[f64]) -> Result<Regime> {
    Topology::friendship(m)?.check_equilibrium(pi)?;
    let tag = match m {
        1 => {
            let q = qf.first().copied().unwrap_or(0.0);
            m1::classify(pi, q)
        }
        2 => {
            if pi[0] * pi[0] >= blade_sum(pi, 1) * blade_sum(pi, 2) {
                RegimeTag::M2Regime1
            } else {
                RegimeTag::M2Regime2
            }
        }
        _ => {
            let total: f64 = (1..=m).map(|i| blade_sum(pi, i)).sum();
            if total <= 2.0 * pi[0] {
                RegimeTag::MGe3Interior
            } else {
                RegimeTag::MGe3Saturated
            }
        }
    };
    Ok(Regime::new(tag, m))
}

/// Answer produced by the oracle for `(pi, qf)` under a given regime label.
pub(crate) fn from_oracle(
    regime: Regime,
    pi: &Equilibrium,
    qf: &[f64],
    qf_bounds: Vec<(f64, f64)>,
    within_bounds: bool,
    opts: &OracleOptions,
) -> Result<ClosedFormSolution> {
    let topology = Topology::friendship(regime.m)?;
    let sol: OracleSolution = minimize_slem(pi, &topology, qf, opts)?;
    Ok(ClosedFormSolution {
        regime,
        pi: pi.clone(),
        qf: qf.to_vec(),
        q_opt: sol.q_opt,
        slem: sol.slem,
        qf_bounds,
        within_bounds,
        kkt_residual: sol.certificate_gap,
        source: Source::Oracle,
    })
}

/// Dispatch on the blade count.
pub fn solve(pi: &Equilibrium, m: usize, qf: &[f64], opts: &SolveOptions) -> Result<ClosedFormSolution> {
    match m {
        0 => Err(Error::InvalidArgument("m must be >= 1".into())),
        1 => {
            check_qf(pi, qf, 1)?;
            solve_m1(pi, qf[0], opts)
        }
        2 => solve_m2(pi, qf, opts),
        _ => solve_m_ge3(pi, m, qf, opts),
    }
}
