//! Exact distribution evolution under `P` and total-variation decay.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::chain::{build_transition_matrix, Equilibrium, Topology, TransitionMatrix, Weights};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::spectral::slem_of;

/// TV distances below this are rounding noise and excluded from the fit.
pub const TV_FLOOR: f64 = 1e-13;
/// A fitted rate at least `1 - NON_MIXING_TOL` means no observable decay.
pub const NON_MIXING_TOL: f64 = 1e-9;
const DISTRIBUTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTrace {
    pub steps: usize,
    /// `tv_distances[k] = TV(p0 P^k, pi / sum(pi))` for `k = 0..=steps`.
    pub tv_distances: Vec<f64>,
    /// Per-step geometric decay factor; `0` when the start is stationary.
    pub fitted_rate: f64,
    /// Every distance is below the floor: nothing to fit.
    pub stationary: bool,
    /// The distances do not decay.
    pub non_mixing: bool,
}

impl DecayTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,tv_distance\n");
        for (k, d) in self.tv_distances.iter().enumerate() {
            out.push_str(&format!("{k},{}\n", fmt_f64(*d)));
        }
        out
    }
}

fn total_variation(p: &DVector<f64>, target: &DVector<f64>) -> f64 {
    0.5 * (p - target).abs().sum()
}

/// Evolve the row vector `p0` for `steps` steps under `P`.
pub fn evolve(p: &TransitionMatrix, p0: &[f64], steps: usize) -> Result<DecayTrace> {
    let n = p.dim();
    if p0.len() != n {
        return Err(Error::InvalidArgument(format!("start has {} entries, chain has {n}", p0.len())));
    }
    if p0.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidArgument("start distribution must be nonnegative".into()));
    }
    let mass: f64 = p0.iter().sum();
    if (mass - 1.0).abs() > DISTRIBUTION_TOL * n as f64 {
        return Err(Error::InvalidArgument(format!("start distribution sums to {mass}, not 1")));
    }
    let target = DVector::from_vec(p.pi().normalized());
    // Row-vector update `x <- x P` as `x <- P^T x`.
    let pt = p.matrix().transpose();
    let mut x = DVector::from_column_slice(p0);
    let mut tv = Vec::with_capacity(steps + 1);
    tv.push(total_variation(&x, &target));
    for _ in 0..steps {
        x = &pt * x;
        tv.push(total_variation(&x, &target));
    }
    let usable = tv.iter().take_while(|d| **d >= TV_FLOOR).count();
    let stationary = usable == 0;
    let fitted_rate = if usable < 2 { 0.0 } else { fit_rate(&tv[usable / 2..usable], usable / 2) };
    Ok(DecayTrace {
        steps,
        tv_distances: tv,
        fitted_rate,
        stationary,
        non_mixing: !stationary && fitted_rate >= 1.0 - NON_MIXING_TOL,
    })
}

/// `exp(slope)` of the least-squares line through `(k, ln tv_k)`.
fn fit_rate(tail: &[f64], offset: usize) -> f64 {
    let n = tail.len() as f64;
    let ks: Vec<f64> = (0..tail.len()).map(|k| (k + offset) as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|d| d.ln()).collect();
    let (mk, my) = (ks.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = ks.iter().map(|k| (k - mk) * (k - mk)).sum();
    let sxy: f64 = ks.iter().zip(&ys).map(|(k, y)| (k - mk) * (y - my)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    (sxy / sxx).exp()
}

/// Point mass on the vertex with the largest component of the slowest
/// mode's eigenvector (the one attaining the SLEM); lowest index on ties.
pub fn worst_case_start(p: &TransitionMatrix) -> Result<Vec<f64>> {
    let report = slem_of(p)?;
    let mode = if report.lambda2 >= -report.lambda_n { &report.v2 } else { &report.vn };
    let mut best = 0;
    for (i, v) in mode.iter().enumerate() {
        if v.abs() > mode[best].abs() {
            best = i;
        }
    }
    let mut p0 = vec![0.0; p.dim()];
    p0[best] = 1.0;
    Ok(p0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub slem: f64,
    pub fitted_rate: f64,
    /// `|fitted - slem| / slem`, or the absolute gap when `slem = 0`.
    pub relative_gap: f64,
    /// The trace gave nothing to fit (stationary start or no decay).
    pub degenerate: bool,
}

impl MixingReport {
    pub fn new(slem: f64, trace: &DecayTrace) -> Self {
        let gap = (trace.fitted_rate - slem).abs();
        Self {
            slem,
            fitted_rate: trace.fitted_rate,
            relative_gap: if slem > 0.0 { gap / slem } else { gap },
            degenerate: trace.stationary || trace.non_mixing,
        }
    }
}

/// Fitted decay rate from the worst-case start against the SLEM, for a
/// chain on the friendship graph matching `pi`.
pub fn fitted_vs_slem(pi: &Equilibrium, q: &Weights, steps: usize) -> Result<MixingReport> {
    let n = pi.len();
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("{n} masses do not fit a friendship graph")));
    }
    fitted_vs_slem_on(pi, q, &Topology::friendship((n - 1) / 2)?, steps).map(|(r, _)| r)
}

pub fn fitted_vs_slem_on(
    pi: &Equilibrium,
    q: &Weights,
    topology: &Topology,
    steps: usize,
) -> Result<(MixingReport, DecayTrace)> {
    let p = build_transition_matrix(pi, q, topology)?;
    let report = slem_of(&p)?;
    if report.reducible {
        return Err(Error::ReducibleChain);
    }
    let trace = evolve(&p, &worst_case_start(&p)?, steps)?;
    Ok((MixingReport::new(report.slem, &trace), trace))
}
