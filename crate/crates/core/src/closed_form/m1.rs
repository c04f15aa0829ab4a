//! One blade (a triangle). Masses are named `(p1, p2, p3)` with `p3` the
//! center, i.e. canonical vertices `(1, 2, 0)`; `q` is the friend weight.

use serde::{Deserialize, Serialize};

use super::{
    check_qf, from_oracle, kkt_residual, sqrt_guarded, ClosedFormSolution, Regime, RegimeTag, SolveOptions, Source,
};
use crate::chain::{build_transition_matrix, Equilibrium, Topology, Weights};
use crate::error::Result;
use crate::spectral::slem_value;

/// Agreement required between the low-range formula and the eigensolver
/// when locating the end of the low range.
const LOW_RANGE_TOL: f64 = 1e-9;
const BISECTION_STEPS: usize = 80;

fn masses(pi: &Equilibrium) -> (f64, f64, f64) {
    (pi[1], pi[2], pi[0])
}

/// `(q13, q23, s)` on the high range: center weights leave the center
/// budget slack and the SLEM is linear in `q` up to the collapse point.
pub(crate) fn high(pi: &Equilibrium, q: f64) -> (f64, f64, f64) {
    let (p1, p2, p3) = masses(pi);
    let q13 = p3 * (p1 - q) / (p1 + p3);
    let q23 = p3 * (p2 - q) / (p2 + p3);
    let s = (p1 * p2 - (p1 + p2 + p3) * q).abs() / sqrt_guarded(p1 * p2 * (p1 + p3) * (p2 + p3));
    (q13, q23, s)
}

/// `(q13, q23, s)` on the low range, where `q13 + q23 = p3`.
pub(crate) fn low(pi: &Equilibrium, q: f64) -> (f64, f64, f64) {
    let (p1, p2, p3) = masses(pi);
    let b0 = 4.0 * p1 * p2 + p3 * (p1 + p2);
    let q13 = (p1 * p3 * (2.0 * p2 + p3 + 2.0 * q) - 2.0 * p2 * p3 * q) / b0;
    let q23 = (p2 * p3 * (2.0 * p1 + p3 + 2.0 * q) - 2.0 * p1 * p3 * q) / b0;
    let s = (4.0 * p1 * p2 - p3 * p3 - 4.0 * q * (p1 + p2 + p3)) / b0;
    (q13, q23, s)
}

fn weights(q13: f64, q23: f64, q: f64) -> Weights {
    Weights::new().with(0, 1, q13).with(0, 2, q23).with(1, 2, q)
}

fn equal_leaves(pi: &Equilibrium) -> bool {
    let (p1, p2, _) = masses(pi);
    (p1 - p2).abs() <= 1e-12 * p1.max(p2)
}

/// Range boundaries of the friend weight for one triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct M1Thresholds {
    /// Start of the high range (`0` when the center dominates).
    pub high: f64,
    /// End of the low range; equals `high` when there is no middle range.
    pub low_middle: f64,
    /// Friend weight where the optimal SLEM reaches zero.
    pub collapse: f64,
}

/// Largest friend weight for which the low-range weights are feasible and
/// attain the low-range SLEM; `None` when the low range is empty.
pub fn m1_low_middle_boundary(pi: &Equilibrium) -> Option<f64> {
    let (p1, p2, p3) = masses(pi);
    if p3 * p3 >= p1 * p2 {
        return None;
    }
    let upper = high_threshold(pi);
    if equal_leaves(pi) {
        return Some(upper);
    }
    let topology = Topology::friendship(1).expect("one blade");
    let ok = |q: f64| -> bool {
        let (q13, q23, s) = low(pi, q);
        if q13 < 0.0 || q23 < 0.0 {
            return false;
        }
        build_transition_matrix(pi, &weights(q13, q23, q), &topology)
            .ok()
            .and_then(|p| slem_value(&p).ok())
            .is_some_and(|v| (v - s).abs() <= LOW_RANGE_TOL)
    };
    if !ok(0.0) {
        return None;
    }
    if ok(upper) {
        return Some(upper);
    }
    let (mut a, mut b) = (0.0, upper);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (a + b);
        if ok(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(a)
}

fn high_threshold(pi: &Equilibrium) -> f64 {
    let (p1, p2, p3) = masses(pi);
    ((p1 * p2 - p3 * p3) / (2.0 * p3 + p1 + p2)).max(0.0)
}

pub fn m1_thresholds(pi: &Equilibrium) -> M1Thresholds {
    let (p1, p2, p3) = masses(pi);
    let high = high_threshold(pi);
    M1Thresholds { high, low_middle: m1_low_middle_boundary(pi).unwrap_or(0.0), collapse: p1 * p2 / (p1 + p2 + p3) }
}

pub(crate) fn classify(pi: &Equilibrium, q: f64) -> RegimeTag {
    let (p1, p2, p3) = masses(pi);
    if p3 * p3 >= p1 * p2 || q >= high_threshold(pi) {
        RegimeTag::M1High
    } else if equal_leaves(pi) || m1_low_middle_boundary(pi).is_some_and(|b| q <= b) {
        RegimeTag::M1Low
    } else {
        RegimeTag::M1Middle
    }
}

pub fn solve_m1(pi: &Equilibrium, q: f64, opts: &SolveOptions) -> Result<ClosedFormSolution> {
    if pi.len() != 3 {
        return Err(crate::error::Error::WrongRegime(format!("one blade needs 3 masses, got {}", pi.len())));
    }
    check_qf(pi, &[q], 1)?;
    let (p1, p2, _) = masses(pi);
    let th = m1_thresholds(pi);
    let tag = classify(pi, q);
    let regime = Regime::new(tag, 1);
    let (bounds, formula) = match tag {
        RegimeTag::M1High => ((th.high, p1.min(p2)), Some(high(pi, q))),
        RegimeTag::M1Low => ((0.0, th.low_middle), Some(low(pi, q))),
        _ => ((th.low_middle, th.high), None),
    };
    let Some((q13, q23, s)) = formula else {
        return from_oracle(regime, pi, &[q], vec![bounds], true, &opts.oracle);
    };
    let q_opt = weights(q13, q23, q);
    let kkt_residual = kkt_residual(pi, &q_opt, s);
    Ok(ClosedFormSolution {
        regime,
        pi: pi.clone(),
        qf: vec![q],
        q_opt,
        slem: s,
        qf_bounds: vec![bounds],
        within_bounds: true,
        kkt_residual,
        source: Source::ClosedForm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::oracle::{minimize_slem, OracleOptions};

    fn triangle() -> Equilibrium {
        Equilibrium::from_triangle(2.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn triangle_high_range() {
        let sol = solve_m1(&triangle(), 0.3, &SolveOptions::default()).unwrap();
        assert_eq!(sol.regime.tag, RegimeTag::M1High);
        assert!((sol.slem - 0.4 / 3f64.sqrt()).abs() < 1e-15);
        assert!(sol.kkt_residual <= 1e-8, "{}", sol.kkt_residual);
    }

    #[test]
    fn triangle_low_range() {
        let sol = solve_m1(&triangle(), 0.1, &SolveOptions::default()).unwrap();
        assert_eq!(sol.regime.tag, RegimeTag::M1Low);
        assert!((sol.slem - 5.4 / 11.0).abs() < 1e-15);
        let center = sol.q_opt.get(0, 1) + sol.q_opt.get(0, 2);
        assert!((center - 1.0).abs() < 1e-15);
        assert!(sol.kkt_residual <= 1e-8, "{}", sol.kkt_residual);
    }

    #[test]
    fn triangle_thresholds() {
        let th = m1_thresholds(&triangle());
        assert!((th.high - 0.2).abs() < 1e-15);
        assert!((th.low_middle - 6.0 / 31.0).abs() < 1e-9, "{}", th.low_middle);
        assert!((th.collapse - 0.5).abs() < 1e-15);
        let at = low(&triangle(), 6.0 / 31.0).2;
        assert!((at - 11.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_middle_range_uses_oracle() {
        let q = 0.197;
        let sol = solve_m1(&triangle(), q, &SolveOptions::default()).unwrap();
        assert_eq!(sol.regime.tag, RegimeTag::M1Middle);
        assert_eq!(sol.source, Source::Oracle);
        let want = (18.0 * q * q - 8.0 * q + 1.0f64).sqrt();
        assert!((sol.slem - want).abs() < 1e-6, "{} vs {want}", sol.slem);
    }

    #[test]
    fn equal_leaves_low_range() {
        let pi = Equilibrium::from_triangle(2.0, 2.0, 1.0).unwrap();
        let sol = solve_m1(&pi, 0.3, &SolveOptions::default()).unwrap();
        assert_eq!(sol.regime.tag, RegimeTag::M1Low);
        assert!((sol.q_opt.get(0, 1) - 0.5).abs() < 1e-15);
        assert!((sol.q_opt.get(0, 2) - 0.5).abs() < 1e-15);
        assert!((sol.slem - 0.45).abs() < 1e-15);
        let oracle = minimize_slem(&pi, &sol.topology(), &[0.3], &OracleOptions::default()).unwrap();
        assert!((oracle.slem - 0.45).abs() < 1e-6);
    }

    #[test]
    fn heavy_center_is_always_high() {
        let pi = Equilibrium::from_triangle(1.0, 1.0, 2.0).unwrap();
        for q in [0.0, 0.1, 0.25, 0.5, 0.9] {
            let sol = solve_m1(&pi, q, &SolveOptions::default()).unwrap();
            assert_eq!(sol.regime.tag, RegimeTag::M1High);
            let oracle = minimize_slem(&pi, &sol.topology(), &[q], &OracleOptions::default()).unwrap();
            assert!((oracle.slem - sol.slem).abs() < 1e-6, "q = {q}: {} vs {}", oracle.slem, sol.slem);
        }
        let sol = solve_m1(&pi, 0.0, &SolveOptions::default()).unwrap();
        assert!((sol.slem - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn friend_weight_above_leaf_mass() {
        assert!(matches!(
            solve_m1(&triangle(), 1.5, &SolveOptions::default()),
            Err(Error::InfeasibleFixedWeight { blade: 1, .. })
        ));
    }
}
