//! Randomized closed-form versus minimizer suite behind `fmrmc verify`.

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{Equilibrium, Topology};
use crate::closed_form::{m1_thresholds, solve, ClosedFormSolution, SolveOptions, Source};
use crate::error::Result;
use crate::oracle::{compare, minimize_slem, OracleOptions};

pub const DEFAULT_INSTANCES: usize = 500;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-4;
/// Draws per instance before accepting a sample outside the target regime.
const MAX_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteRegime {
    All,
    MGe3Interior,
    MGe3Saturated,
    M2Regime1,
    M2Regime2,
    M1Low,
    M1Middle,
    M1High,
    /// Branch-disagreement diagnostics near the two-blade regime boundary.
    M2Boundary,
}

impl SuiteRegime {
    const RANDOMIZED: [SuiteRegime; 7] = [
        Self::MGe3Interior,
        Self::MGe3Saturated,
        Self::M2Regime1,
        Self::M2Regime2,
        Self::M1Low,
        Self::M1Middle,
        Self::M1High,
    ];

    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstInstance {
    pub m: usize,
    /// Canonical labels, center first.
    pub pi: Vec<f64>,
    pub qf: Vec<f64>,
    pub closed_slem: f64,
    pub oracle_slem: f64,
    pub delta_slem: f64,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSummary {
    pub regime: String,
    pub instances: usize,
    pub failures: usize,
    /// Instances answered by the closed form rather than the minimizer.
    pub closed_form: usize,
    pub max_delta_slem: f64,
    pub worst: Option<WorstInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub tol: f64,
    pub instances_per_regime: usize,
    pub pass: bool,
    pub regimes: Vec<RegimeSummary>,
}

impl VerifySummary {
    /// The failing instance with the largest discrepancy.
    pub fn worst_failure(&self) -> Option<&WorstInstance> {
        self.regimes
            .iter()
            .filter(|r| r.failures > 0)
            .filter_map(|r| r.worst.as_ref())
            .max_by(|a, b| a.delta_slem.total_cmp(&b.delta_slem))
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..=hi)
}

fn leaves(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..2 * m).map(|_| uniform(rng, 0.2, 2.0)).collect()
}

fn with_center(center: f64, leaves: Vec<f64>) -> Equilibrium {
    let mut v = vec![center];
    v.extend(leaves);
    Equilibrium::new(v).expect("positive masses")
}

/// Friend weights drawn inside the closed-form interval of each blade.
fn qf_in_bounds(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)]) -> Option<Vec<f64>> {
    bounds.iter().map(|&(lo, hi)| (lo <= hi).then(|| uniform(rng, lo, hi))).collect()
}

/// One instance of `regime`: `(pi, m, qf)`.
fn draw(regime: SuiteRegime, rng: &mut ChaCha8Rng, opts: &SolveOptions) -> Result<(Equilibrium, usize, Vec<f64>)> {
    let mut last = None;
    for _ in 0..MAX_DRAWS {
        let candidate = match regime {
            SuiteRegime::MGe3Interior | SuiteRegime::MGe3Saturated => {
                let m = rng.gen_range(3..=6);
                let l = leaves(rng, m);
                let total: f64 = l.iter().sum();
                let factor =
                    if regime == SuiteRegime::MGe3Interior { uniform(rng, 1.0, 3.0) } else { uniform(rng, 0.1, 0.95) };
                (with_center(0.5 * total * factor, l), m)
            }
            SuiteRegime::M2Regime1 | SuiteRegime::M2Regime2 => {
                let l = leaves(rng, 2);
                let geo = ((l[0] + l[1]) * (l[2] + l[3])).sqrt();
                let factor =
                    if regime == SuiteRegime::M2Regime1 { uniform(rng, 1.05, 3.0) } else { uniform(rng, 0.2, 0.95) };
                (with_center(geo * factor, l), 2)
            }
            _ => {
                let (p1, p2) = (uniform(rng, 0.2, 2.0), uniform(rng, 0.2, 2.0));
                let p3 = if regime == SuiteRegime::M1High {
                    uniform(rng, 0.2, 2.0)
                } else {
                    (p1 * p2).sqrt() * uniform(rng, 0.1, 0.95)
                };
                (Equilibrium::from_triangle(p1, p2, p3)?, 1)
            }
        };
        let (pi, m) = candidate;
        let qf = match regime {
            SuiteRegime::M1Low | SuiteRegime::M1Middle | SuiteRegime::M1High => {
                let th = m1_thresholds(&pi);
                let (lo, hi) = match regime {
                    SuiteRegime::M1Low => (0.0, th.low_middle),
                    SuiteRegime::M1Middle => (th.low_middle, th.high),
                    _ => (th.high, pi[1].min(pi[2])),
                };
                (lo < hi).then(|| vec![uniform(rng, lo, hi)])
            }
            _ => qf_in_bounds(rng, &solve(&pi, m, &vec![0.0; m], opts)?.qf_bounds),
        };
        let Some(qf) = qf else { continue };
        let accepted = match regime {
            SuiteRegime::M1Middle => true,
            _ => solve(&pi, m, &qf, opts)?.source == Source::ClosedForm,
        };
        if accepted {
            return Ok((pi, m, qf));
        }
        last = Some((pi, m, qf));
    }
    match last {
        Some(x) => Ok(x),
        None => Ok((Equilibrium::from_triangle(1.0, 1.0, 1.0)?, 1, vec![0.0])),
    }
}

struct Outcome {
    closed: ClosedFormSolution,
    oracle_slem: f64,
    delta: f64,
}

fn check(pi: &Equilibrium, m: usize, qf: &[f64], seed: u64, opts: &SolveOptions) -> Result<Outcome> {
    let closed = solve(pi, m, qf, opts)?;
    let oracle_opts = OracleOptions::default().with_seed(seed);
    let oracle = minimize_slem(pi, &Topology::friendship(m)?, qf, &oracle_opts)?;
    let delta = compare(&closed, &oracle, f64::INFINITY).delta_slem;
    Ok(Outcome { closed, oracle_slem: oracle.slem, delta })
}

fn run_regime(regime: SuiteRegime, instances: usize, seed: u64, tol: f64, index: u64) -> Result<RegimeSummary> {
    let opts = SolveOptions::default();
    let results: Vec<(Equilibrium, usize, Vec<f64>, Outcome)> = (0..instances as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((index << 32) | k);
            let (pi, m, qf) = draw(regime, &mut rng, &opts)?;
            // Independent random start for the reference minimizer.
            let outcome = check(&pi, m, &qf, seed.wrapping_add(k + 1), &opts)?;
            Ok((pi, m, qf, outcome))
        })
        .collect::<Result<_>>()?;
    let worst = results.iter().max_by(|a, b| a.3.delta.total_cmp(&b.3.delta));
    Ok(RegimeSummary {
        regime: regime.name(),
        instances,
        failures: results.iter().filter(|r| !(r.3.delta <= tol)).count(),
        closed_form: results.iter().filter(|r| r.3.closed.source == Source::ClosedForm).count(),
        max_delta_slem: worst.map_or(0.0, |w| w.3.delta),
        worst: worst.map(|(pi, m, qf, o)| WorstInstance {
            m: *m,
            pi: pi.values().to_vec(),
            qf: qf.clone(),
            closed_slem: o.closed.slem,
            oracle_slem: o.oracle_slem,
            delta_slem: o.delta,
            source: o.closed.source,
        }),
    })
}

/// Run the randomized comparison for one regime or all of them. Results
/// depend only on `(regime, instances, seed)`, not on the thread count.
pub fn run_suite(regime: SuiteRegime, instances: usize, seed: u64, tol: f64) -> Result<VerifySummary> {
    let selected: Vec<(u64, SuiteRegime)> = SuiteRegime::RANDOMIZED
        .iter()
        .enumerate()
        .filter(|(_, r)| regime == SuiteRegime::All || **r == regime)
        .map(|(i, r)| (i as u64, *r))
        .collect();
    let regimes =
        selected.into_iter().map(|(i, r)| run_regime(r, instances, seed, tol, i)).collect::<Result<Vec<_>>>()?;
    Ok(VerifySummary {
        seed,
        tol,
        instances_per_regime: instances,
        pass: regimes.iter().all(|r| r.failures == 0),
        regimes,
    })
}
