//! Pareto frontier between the SLEM and the fixed friend-edge weights.
//!
//! Objectives are `(slem, qF_1, ..., qF_m)`, all minimized. With `pi` fixed,
//! `P_{2i-1,2i} = qF_i / pi_{2i-1}` is strictly increasing in `qF_i`, so the
//! non-dominated sets in weights and in probabilities coincide.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::Equilibrium;
use crate::closed_form::{m1_thresholds, solve, solve_m1, Regime, RegimeTag, SolveOptions};
use crate::error::{Error, Result};
use crate::format::fmt_f64;

/// Default samples per active blade.
pub const DEFAULT_GRID: usize = 200;
/// Two objective values closer than this are treated as equal by the tracer.
pub const FILTER_TOL: f64 = 1e-9;
/// A blade whose weight lowers the SLEM by more than this is active.
const ACTIVITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub qf: Vec<f64>,
    /// `pf[i] = qf[i] / pi[2i+1]`, the friend transition probability.
    pub pf: Vec<f64>,
    pub slem: f64,
    pub regime: Regime,
}

impl ParetoPoint {
    pub fn new(pi: &Equilibrium, qf: Vec<f64>, slem: f64, regime: Regime) -> Self {
        let pf = qf.iter().enumerate().map(|(i, q)| q / pi[2 * i + 1]).collect();
        Self { qf, pf, slem, regime }
    }

    fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.slem).chain(self.qf.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    /// Sorted by slem descending, ties by `qf` ascending.
    pub points: Vec<ParetoPoint>,
    pub collapsed: bool,
    /// Blades whose friend weight was swept; the others stay at zero.
    pub active_blades: Vec<bool>,
}

impl Frontier {
    /// CSV with header `slem,q_1_2,...,p_1_2,...,regime`.
    pub fn to_csv(&self) -> String {
        let m = self.active_blades.len();
        let mut header = vec!["slem".to_string()];
        header.extend((1..=m).map(|i| format!("q_{}_{}", 2 * i - 1, 2 * i)));
        header.extend((1..=m).map(|i| format!("p_{}_{}", 2 * i - 1, 2 * i)));
        header.push("regime".into());
        let mut out = header.join(",");
        out.push('\n');
        for p in &self.points {
            let mut row = vec![fmt_f64(p.slem)];
            row.extend(p.qf.iter().chain(&p.pf).map(|v| fmt_f64(*v)));
            row.push(p.regime.tag.to_string());
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn dominates(a: &ParetoPoint, b: &ParetoPoint, tol: f64) -> bool {
    let mut strict = false;
    for (x, y) in a.objectives().zip(b.objectives()) {
        if x > y + tol {
            return false;
        }
        strict |= x < y - tol;
    }
    strict
}

fn equivalent(a: &ParetoPoint, b: &ParetoPoint, tol: f64) -> bool {
    a.objectives().zip(b.objectives()).all(|(x, y)| (x - y).abs() <= tol)
}

/// Lexicographic order on `(qf, slem)`: picks the canonical duplicate.
fn canonical_before(a: &ParetoPoint, b: &ParetoPoint) -> bool {
    let ka = a.qf.iter().chain(std::iter::once(&a.slem));
    let kb = b.qf.iter().chain(std::iter::once(&b.slem));
    ka.zip(kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()) == Some(std::cmp::Ordering::Less)
}

/// Points not dominated by any other; exact duplicates keep one copy.
pub fn non_dominated_filter(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    non_dominated_filter_tol(points, 0.0)
}

/// As [`non_dominated_filter`], with objectives within `tol` treated as
/// equal. Among equivalent points the lexicographically smallest `qf`
/// survives (the earliest on a full tie). Input order is preserved.
pub fn non_dominated_filter_tol(points: &[ParetoPoint], tol: f64) -> Vec<ParetoPoint> {
    let keep: Vec<bool> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let p = &points[i];
            !points.iter().enumerate().any(|(j, o)| {
                j != i
                    && (dominates(o, p, tol)
                        || (equivalent(o, p, tol) && (canonical_before(o, p) || (!canonical_before(p, o) && j < i))))
            })
        })
        .collect();
    points.iter().zip(keep).filter(|(_, k)| *k).map(|(p, _)| p.clone()).collect()
}

/// `n` evenly spaced values on `[0, hi]` (just `0` when `hi` is zero).
fn axis(hi: f64, n: usize) -> Vec<f64> {
    if hi <= 0.0 {
        return vec![0.0];
    }
    (0..n).map(|k| hi * k as f64 / (n - 1) as f64).collect()
}

fn with_breakpoints(mut xs: Vec<f64>, extra: &[f64]) -> Vec<f64> {
    xs.extend_from_slice(extra);
    xs.sort_by(f64::total_cmp);
    let scale = xs.last().copied().unwrap_or(0.0).abs().max(1.0);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * scale);
    xs
}

fn point_at(pi: &Equilibrium, m: usize, qf: Vec<f64>, opts: &SolveOptions) -> Result<ParetoPoint> {
    let sol = solve(pi, m, &qf, opts)?;
    Ok(ParetoPoint::new(pi, qf, sol.slem, sol.regime))
}

pub fn trace_frontier(pi: &Equilibrium, m: usize, grid: usize) -> Result<Frontier> {
    trace_frontier_with(pi, m, grid, &SolveOptions::default())
}

/// Sample the friend weights, solve the minimal SLEM at every sample and
/// keep the non-dominated points.
///
/// * m >= 3: `qF = 0` dominates every other feasible choice, so the
///   frontier is that single point.
/// * m = 2: a blade with a positive lower bound is swept over `[0, lo]`.
///   A blade with lower bound zero is swept over its feasible range only if
///   raising its weight measurably lowers the SLEM; otherwise it stays at 0.
/// * m = 1: the friend weight is swept from 0 to the collapse point, with
///   the range boundaries inserted exactly.
pub fn trace_frontier_with(pi: &Equilibrium, m: usize, grid: usize, opts: &SolveOptions) -> Result<Frontier> {
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid must be >= 2, got {grid}")));
    }
    let zero = vec![0.0; m];
    let axes: Vec<Vec<f64>> = match m {
        0 => return Err(Error::InvalidArgument("m must be >= 1".into())),
        1 => {
            let th = m1_thresholds(pi);
            vec![with_breakpoints(axis(th.collapse, grid), &[th.low_middle, th.high])]
        }
        2 => {
            let base = solve(pi, 2, &zero, opts)?;
            let scale = pi.total();
            (0..2)
                .map(|i| {
                    let (lo, hi) = base.qf_bounds[i];
                    if lo > 1e-12 * scale {
                        Ok(axis(lo, grid))
                    } else if lowers_slem(pi, i, hi, &base.qf_bounds, base.slem, opts)? {
                        Ok(axis(hi, grid))
                    } else {
                        Ok(vec![0.0])
                    }
                })
                .collect::<Result<_>>()?
        }
        _ => vec![vec![0.0]; m],
    };
    let active = axes.iter().map(|a| a.len() > 1).collect();
    let samples = cartesian(&axes);
    let points: Vec<ParetoPoint> =
        samples.into_par_iter().map(|qf| point_at(pi, m, qf, opts)).collect::<Result<_>>()?;
    let mut points = non_dominated_filter_tol(&points, FILTER_TOL);
    points.sort_by(|a, b| {
        b.slem.total_cmp(&a.slem).then_with(|| {
            a.qf.iter().zip(&b.qf).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(Frontier { collapsed: points.len() == 1, points, active_blades: active })
}

/// Whether raising blade `i` from zero lowers the SLEM, probed with the
/// other blade at zero and at half its lower bound.
fn lowers_slem(
    pi: &Equilibrium,
    i: usize,
    hi: f64,
    bounds: &[(f64, f64)],
    base: f64,
    opts: &SolveOptions,
) -> Result<bool> {
    let other = 1 - i;
    let mut others = vec![0.0];
    if bounds[other].0 > 0.0 {
        others.push(0.5 * bounds[other].0);
    }
    for t in others {
        let mut qf = vec![0.0; 2];
        qf[other] = t;
        let reference = if t == 0.0 { base } else { solve(pi, 2, &qf, opts)?.slem };
        for frac in [0.5, 1.0] {
            qf[i] = frac * hi;
            if solve(pi, 2, &qf, opts)?.slem < reference - ACTIVITY_TOL {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentShape {
    /// `s = intercept + slope * q`.
    Linear { intercept: f64, slope: f64 },
    /// No closed form; evaluate numerically.
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSegment {
    pub lo: f64,
    pub hi: f64,
    pub regime: RegimeTag,
    pub shape: SegmentShape,
}

impl CurveSegment {
    pub fn eval(&self, pi: &Equilibrium, q: f64, opts: &SolveOptions) -> Result<f64> {
        match self.shape {
            SegmentShape::Linear { intercept, slope } => Ok(intercept + slope * q),
            SegmentShape::Numeric => Ok(solve_m1(pi, q, opts)?.slem),
        }
    }
}

/// Piecewise description of the one-blade frontier on `[0, collapse]`.
pub fn frontier_curve_m1(pi: &Equilibrium) -> Result<Vec<CurveSegment>> {
    if pi.len() != 3 {
        return Err(Error::WrongRegime(format!("one blade needs 3 masses, got {}", pi.len())));
    }
    let (p1, p2, p3) = (pi[1], pi[2], pi[0]);
    let total = p1 + p2 + p3;
    let th = m1_thresholds(pi);
    let mut segs = Vec::new();
    if th.low_middle > 0.0 {
        let b0 = 4.0 * p1 * p2 + p3 * (p1 + p2);
        segs.push(CurveSegment {
            lo: 0.0,
            hi: th.low_middle,
            regime: RegimeTag::M1Low,
            shape: SegmentShape::Linear { intercept: (4.0 * p1 * p2 - p3 * p3) / b0, slope: -4.0 * total / b0 },
        });
    }
    if th.high > th.low_middle {
        segs.push(CurveSegment {
            lo: th.low_middle,
            hi: th.high,
            regime: RegimeTag::M1Middle,
            shape: SegmentShape::Numeric,
        });
    }
    let d = (p1 * p2 * (p1 + p3) * (p2 + p3)).sqrt();
    segs.push(CurveSegment {
        lo: th.high,
        hi: th.collapse,
        regime: RegimeTag::M1High,
        shape: SegmentShape::Linear { intercept: p1 * p2 / d, slope: -total / d },
    });
    Ok(segs)
}
