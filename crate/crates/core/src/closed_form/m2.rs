//! Two blades: one ratio per blade, two regimes split at `pi_0^2 = S_1 S_2`
//! where `S_i` is the mass of blade `i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    blade_min, blade_sum, check_qf, classify_regime, from_oracle, harmonic, in_bounds, kkt_residual, sqrt_guarded,
    weights_from_ratios, ClosedFormSolution, Regime, RegimeTag, SolveOptions, Source,
};
use crate::chain::{Equilibrium, Topology};
use crate::error::{Error, Result};
use crate::oracle::{minimize_slem, OracleOptions};
use crate::reduction::reduce_to_star;
use crate::spectral::slem_value;

/// Ratios `(mu_1, mu_2)` and SLEM predicted by one branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub tag: RegimeTag,
    pub mu: [f64; 2],
    pub slem: f64,
}

pub(crate) fn regime1(pi: &Equilibrium) -> Candidate {
    let (p0, s1, s2) = (pi[0], blade_sum(pi, 1), blade_sum(pi, 2));
    Candidate {
        tag: RegimeTag::M2Regime1,
        mu: [p0 / (p0 + s1), p0 / (p0 + s2)],
        slem: sqrt_guarded(s1 * s2 / ((p0 + s1) * (p0 + s2))),
    }
}

pub(crate) fn regime2(pi: &Equilibrium) -> Candidate {
    let (p0, s1, s2) = (pi[0], blade_sum(pi, 1), blade_sum(pi, 2));
    let a0 = p0 * (s1 + s2) + 4.0 * s1 * s2;
    Candidate {
        tag: RegimeTag::M2Regime2,
        mu: [p0 * (p0 + 2.0 * s2) / a0, p0 * (p0 + 2.0 * s1) / a0],
        slem: (4.0 * s1 * s2 - p0 * p0) / a0,
    }
}

/// SLEM of the star block for the given ratios; `None` if the ratios break
/// a budget.
pub(crate) fn star_slem(pi: &Equilibrium, mu: &[f64; 2]) -> Option<f64> {
    let topology = Topology::friendship(2).ok()?;
    let w = weights_from_ratios(pi, mu, &[0.0, 0.0]);
    let star = reduce_to_star(pi, &w, &topology).ok()?.transition_matrix().ok()?;
    slem_value(&star).ok()
}

/// Per-blade friend-weight interval keeping `|s_bar_i| <= s` and the leaf
/// budgets intact.
pub(crate) fn bounds(pi: &Equilibrium, mu: &[f64; 2], s: f64, literal: bool) -> Vec<(f64, f64)> {
    (1..=2)
        .map(|i| {
            let u = mu[i - 1];
            let budget = (1.0 - u) * blade_min(pi, i);
            if literal {
                ((1.0 - u - s).max(0.0), budget)
            } else {
                let b = harmonic(pi, i);
                ((b * (1.0 - u - s)).max(0.0), (b * (1.0 - u + s)).min(budget))
            }
        })
        .collect()
}

/// A branch is usable when its weights respect the budgets and their star
/// block attains the branch formula to this tolerance.
const ATTAIN_TOL: f64 = 1e-9;

/// Pick the usable branch with the smaller SLEM. `None` when neither branch
/// is usable: very unequal blade masses near the regime boundary push a
/// regime-two ratio above 1, or its weights miss the formula value.
pub(crate) fn select(pi: &Equilibrium) -> Result<(Regime, Option<Candidate>)> {
    let nominal = classify_regime(pi, 2, &[0.0, 0.0])?;
    let usable: Vec<Candidate> = [regime1(pi), regime2(pi)]
        .into_iter()
        .filter(|c| star_slem(pi, &c.mu).is_some_and(|s| (s - c.slem).abs() <= ATTAIN_TOL))
        .collect();
    let best = usable
        .iter()
        .min_by(|a, b| a.slem.total_cmp(&b.slem).then_with(|| (b.tag == nominal.tag).cmp(&(a.tag == nominal.tag))))
        .copied();
    let regime = match best {
        Some(c) => Regime { tag: c.tag, m: 2, nominal: nominal.tag, overridden: c.tag != nominal.tag },
        None => Regime { overridden: true, ..nominal },
    };
    Ok((regime, best))
}

pub fn solve_m2(pi: &Equilibrium, qf: &[f64], opts: &SolveOptions) -> Result<ClosedFormSolution> {
    if pi.len() != 5 || qf.len() != 2 {
        return Err(Error::WrongRegime(format!(
            "two blades need 5 masses and 2 friend weights, got {} and {}",
            pi.len(),
            qf.len()
        )));
    }
    check_qf(pi, qf, 2)?;
    let (regime, best) = select(pi)?;
    let Some(c) = best else {
        let feasible_box = (1..=2).map(|i| (0.0, blade_min(pi, i))).collect();
        return from_oracle(regime, pi, qf, feasible_box, false, &opts.oracle);
    };
    let qf_bounds = bounds(pi, &c.mu, c.slem, opts.paper_literal_bounds);
    if !in_bounds(qf, &qf_bounds, pi.total()) {
        return from_oracle(regime, pi, qf, qf_bounds, false, &opts.oracle);
    }
    let q_opt = weights_from_ratios(pi, &c.mu, qf);
    let kkt_residual = kkt_residual(pi, &q_opt, c.slem);
    Ok(ClosedFormSolution {
        regime,
        pi: pi.clone(),
        qf: qf.to_vec(),
        q_opt,
        slem: c.slem,
        qf_bounds,
        within_bounds: true,
        kkt_residual,
        source: Source::ClosedForm,
    })
}

/// Both branch formulas at one two-blade mass vector, what their weights
/// actually achieve on the star block, and the star optimum from the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M2BoundaryReport {
    pub pi: Vec<f64>,
    pub nominal: RegimeTag,
    pub regime1_formula: f64,
    pub regime2_formula: f64,
    /// `None` when the branch weights break a budget.
    pub regime1_achieved: Option<f64>,
    pub regime2_achieved: Option<f64>,
    pub oracle: f64,
    /// `None` when neither branch is feasible.
    pub winner: Option<RegimeTag>,
    pub overridden: bool,
}

pub fn m2_boundary_diagnostics(pi: &Equilibrium, opts: &OracleOptions) -> Result<M2BoundaryReport> {
    let (regime, best) = select(pi)?;
    let (r1, r2) = (regime1(pi), regime2(pi));
    let star = Equilibrium::new(vec![pi[0], blade_sum(pi, 1), blade_sum(pi, 2)])?;
    let oracle = minimize_slem(&star, &Topology::star(2)?, &[], opts)?.slem;
    Ok(M2BoundaryReport {
        pi: pi.values().to_vec(),
        nominal: regime.nominal,
        regime1_formula: r1.slem,
        regime2_formula: r2.slem,
        regime1_achieved: star_slem(pi, &r1.mu),
        regime2_achieved: star_slem(pi, &r2.mu),
        oracle,
        winner: best.map(|c| c.tag),
        overridden: regime.overridden,
    })
}

/// Mass vectors on `pi_0^2 = S_1 S_2` with `pi_0 = 1`, `S_1 = r`, `S_2 = 1/r`,
/// each blade split 2:3, plus points just inside either side.
pub fn boundary_points() -> Vec<Equilibrium> {
    let mut out = Vec::new();
    for r in [1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0] {
        for shift in [1.0, 1.0 + 1e-3, 1.0 - 1e-3] {
            let (s1, s2) = (r, shift / r);
            out.push(Equilibrium::new(vec![1.0, 0.4 * s1, 0.6 * s1, 0.4 * s2, 0.6 * s2]).expect("positive masses"));
        }
    }
    out
}

pub fn m2_boundary_sweep(opts: &OracleOptions) -> Result<Vec<M2BoundaryReport>> {
    boundary_points().par_iter().map(|pi| m2_boundary_diagnostics(pi, opts)).collect()
}
