//! Three or more blades: a single common ratio `mu` for every blade.

use super::{
    blade_min, blade_sum, check_qf, classify_regime, from_oracle, in_bounds, kkt_residual, weights_from_ratios,
    ClosedFormSolution, Regime, RegimeTag, SolveOptions, Source,
};
use crate::chain::Equilibrium;
use crate::error::{Error, Result};

/// Optimal ratio and SLEM for `Pi = sum of leaf masses`.
///
/// Interior (`Pi <= 2 pi_0`): `mu = 2 pi_0 / (2 pi_0 + Pi)`, `s = Pi / (2 pi_0 + Pi)`.
/// Saturated: `mu = pi_0 / Pi`, `s = (Pi - pi_0) / Pi`.
pub(crate) fn ratio_and_slem(tag: RegimeTag, pi0: f64, total: f64) -> (f64, f64) {
    match tag {
        RegimeTag::MGe3Interior => (2.0 * pi0 / (2.0 * pi0 + total), total / (2.0 * pi0 + total)),
        _ => (pi0 / total, (total - pi0) / total),
    }
}

/// Blade holding more than half of the leaf mass, if any.
///
/// A common ratio is optimal only if the leaf-mode multiplier can put
/// weight `S_i` on every blade with zero net sum, which needs vectors of
/// lengths `S_1, ..., S_m` closing a polygon: `max S_i <= Pi / 2`. Past
/// that, unequal ratios can do strictly better.
pub fn dominant_blade(pi: &Equilibrium, m: usize) -> Option<usize> {
    let sums: Vec<f64> = (1..=m).map(|i| blade_sum(pi, i)).collect();
    let total: f64 = sums.iter().sum();
    (1..=m).find(|i| sums[i - 1] > 0.5 * total * (1.0 + 1e-12))
}

pub fn solve_m_ge3(pi: &Equilibrium, m: usize, qf: &[f64], opts: &SolveOptions) -> Result<ClosedFormSolution> {
    if m < 3 {
        return Err(Error::WrongRegime(format!("three or more blades required, got m = {m}")));
    }
    let regime = classify_regime(pi, m, qf)?;
    check_qf(pi, qf, m)?;
    let total: f64 = (1..=m).map(|i| blade_sum(pi, i)).sum();
    let (mu, s) = ratio_and_slem(regime.tag, pi[0], total);
    // Friend weights may grow until the leaf budget binds; no lower limit.
    let bounds: Vec<(f64, f64)> = (1..=m).map(|i| (0.0, s * blade_min(pi, i))).collect();
    let within = in_bounds(qf, &bounds, pi.total());
    if !within {
        return from_oracle(regime, pi, qf, bounds, false, &opts.oracle);
    }
    if dominant_blade(pi, m).is_some() {
        let regime = Regime { overridden: true, ..regime };
        return from_oracle(regime, pi, qf, bounds, true, &opts.oracle);
    }
    let q_opt = weights_from_ratios(pi, &vec![mu; m], qf);
    let kkt_residual = kkt_residual(pi, &q_opt, s);
    Ok(ClosedFormSolution {
        regime,
        pi: pi.clone(),
        qf: qf.to_vec(),
        q_opt,
        slem: s,
        qf_bounds: bounds,
        within_bounds: true,
        kkt_residual,
        source: Source::ClosedForm,
    })
}
