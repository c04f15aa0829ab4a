//! Exhaustive grid search with a local cutting-plane refinement.

use rayon::prelude::*;

use nalgebra::{DMatrix, DVector};

use super::problem::SlemProblem;
use crate::chain::build_transition_matrix;
use crate::spectral::{eigen_symmetric, symmetrize};

/// Cap on refinement cuts; a four-variable ellipsoid shrinks its volume by
/// about `e^{-1/10}` per cut.
const MAX_CUTS: usize = 5000;

/// Objective on the grid; infeasible points score `+inf`.
fn score(problem: &SlemProblem, x: &[f64]) -> f64 {
    if !problem.is_feasible(x) {
        return f64::INFINITY;
    }
    problem.slem(x).unwrap_or(f64::INFINITY)
}

fn better(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Best point of the lattice `{ i * cap_e / resolution }`.
pub(crate) fn grid_best(problem: &SlemProblem, resolution: usize) -> (f64, Vec<f64>) {
    let d = problem.dim();
    let caps = problem.caps();
    let per_axis = resolution + 1;
    let total = per_axis.pow(d as u32);
    let point = |mut idx: usize| -> Vec<f64> {
        (0..d)
            .map(|e| {
                let i = idx % per_axis;
                idx /= per_axis;
                caps[e] * i as f64 / resolution as f64
            })
            .collect()
    };
    (0..total)
        .into_par_iter()
        .map(|idx| {
            let x = point(idx);
            (score(problem, &x), x)
        })
        .reduce(|| (f64::INFINITY, vec![f64::INFINITY; d]), |a, b| if better(&b, &a) { b } else { a })
}

/// Value and a subgradient of the SLEM at a feasible `x`.
///
/// With `u = sqrt(pi) / |sqrt(pi)|` and `zeta_e = e_a / sqrt(pi_a) - e_b / sqrt(pi_b)`,
/// `S(x) = S_0 - sum_e x_e zeta_e zeta_e^T`. Shifting `u` to `-2` (or `+4`)
/// deflates the Perron root, so `lambda_2` (or `lambda_n`) is an extreme
/// eigenvalue and `-(v . zeta_e)^2` (or `+(v . zeta_e)^2`) a subgradient.
fn subgradient(problem: &SlemProblem, x: &[f64]) -> Option<(f64, Vec<f64>)> {
    let p = build_transition_matrix(problem.pi(), &problem.weights(x), problem.topology()).ok()?;
    let s = symmetrize(&p).ok()?;
    let n = s.nrows();
    let root: Vec<f64> = problem.pi().values().iter().map(|v| v.sqrt()).collect();
    let u = DVector::from_vec(root.clone()).normalize();
    let uu = &u * u.transpose();
    let top = eigen_symmetric(&(&s - &uu * 3.0)).ok()?;
    let bottom = eigen_symmetric(&(&s + &uu * 3.0)).ok()?;
    let (l2, ln) = (top.values[0], bottom.values[n - 1]);
    let (value, v, sign) = if l2 >= -ln {
        (l2, top.vectors.column(0).into_owned(), -1.0)
    } else {
        (-ln, bottom.vectors.column(n - 1).into_owned(), 1.0)
    };
    let g = problem
        .free_edges()
        .iter()
        .map(|e| {
            let d = v[e.a] / root[e.a] - v[e.b] / root[e.b];
            sign * d * d
        })
        .collect();
    Some((value, g))
}

/// Normal of a violated constraint at `x`, if any.
fn violated_cut(problem: &SlemProblem, x: &[f64]) -> Option<Vec<f64>> {
    let d = x.len();
    if let Some(e) = (0..d).find(|&e| x[e] < 0.0) {
        let mut g = vec![0.0; d];
        g[e] = -1.0;
        return Some(g);
    }
    problem.vertex_rows().iter().find(|(b, idx)| idx.iter().map(|&k| x[k]).sum::<f64>() > *b).map(|(_, idx)| {
        let mut g = vec![0.0; d];
        idx.iter().for_each(|&k| g[k] = 1.0);
        g
    })
}

/// Convex refinement of the best lattice point. The SLEM is convex in the
/// free weights, so central cuts through subgradients never discard the
/// minimizer: bisection for one variable, the ellipsoid method otherwise.
/// Returns the best feasible point and its gap to the certified lower bound.
pub(crate) fn refine(problem: &SlemProblem, start: (f64, Vec<f64>), target_gap: f64) -> ((f64, Vec<f64>), f64) {
    let d = problem.dim();
    let mut best = start;
    let mut lower = f64::NEG_INFINITY;
    let radius = problem.caps().iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut c = DVector::from_vec(best.1.clone());
    let mut shape = DMatrix::<f64>::identity(d, d) * (radius * radius);
    let n = d as f64;
    for _ in 0..MAX_CUTS {
        let x: Vec<f64> = c.iter().copied().collect();
        let g = match violated_cut(problem, &x) {
            Some(g) => DVector::from_vec(g),
            None => {
                let Some((value, g)) = subgradient(problem, &x) else { break };
                let value = problem.slem(&x).unwrap_or(value);
                if value < best.0 {
                    best = (value, x);
                }
                let g = DVector::from_vec(g);
                let width = (g.transpose() * &shape * &g)[(0, 0)].max(0.0).sqrt();
                lower = lower.max(value - width);
                if best.0 - lower <= target_gap || width == 0.0 {
                    break;
                }
                g
            }
        };
        let ag = &shape * &g;
        let width = g.dot(&ag).sqrt();
        if !(width > 0.0) {
            break;
        }
        let step = ag / width;
        if d == 1 {
            // Bisection: keep the half interval on the descent side.
            c -= &step * 0.5;
            shape *= 0.25;
        } else {
            c -= &step * (1.0 / (n + 1.0));
            shape = (&shape - (&step * step.transpose()) * (2.0 / (n + 1.0))) * (n * n / (n * n - 1.0));
            shape = (&shape + shape.transpose()) * 0.5;
        }
    }
    let gap = (best.0 - lower).max(0.0);
    (best, gap)
}
