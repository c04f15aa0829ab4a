//! Log-determinant barrier path following for
//! `min s  s.t.  -sI <= A(x) <= sI,  x >= 0,  vertex budgets`,
//! where `A(x)` is the symmetrized chain restricted to the complement of
//! the Perron vector `sqrt(pi)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::SlemProblem;

const T_GROWTH: f64 = 8.0;
const CENTERING_TOL: f64 = 1e-10;
const ARMIJO: f64 = 0.25;
const BACKTRACK: f64 = 0.5;
const MAX_CENTERING_STEPS: usize = 100;
/// Newton decrement below which a point counts as approximately centered.
const APPROX_CENTERING: f64 = 1e-6;

pub(crate) struct BarrierOutcome {
    pub x: Vec<f64>,
    /// Lower bound on the optimal value from the last centering.
    pub lower_bound: f64,
    pub iterations: usize,
}

struct Model {
    k: usize,
    /// Columns `V^T zeta_e` of the free edges.
    w: DMatrix<f64>,
    a_fixed: DMatrix<f64>,
    /// Linear constraints `b_j - c_j^T x >= 0`, stored sparsely.
    rows: Vec<(f64, Vec<usize>, f64)>,
}

/// Orthonormal columns spanning the complement of the unit vector `u`.
fn complement_basis(u: &DVector<f64>) -> DMatrix<f64> {
    let n = u.len();
    let mut v = u.clone();
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += sign;
    let vv = v.dot(&v);
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    h.columns(1, n - 1).into_owned()
}

impl Model {
    fn new(problem: &SlemProblem) -> Self {
        let pi = problem.pi();
        let n = pi.len();
        let root = DVector::from_iterator(n, pi.values().iter().map(|v| v.sqrt()));
        let u = &root / root.norm();
        let basis = complement_basis(&u);
        let k = n - 1;
        let zeta = |a: usize, b: usize| {
            let mut z = DVector::zeros(n);
            z[a] = 1.0 / root[a];
            z[b] = -1.0 / root[b];
            basis.transpose() * z
        };
        let mut a_fixed = DMatrix::identity(k, k);
        for e in problem.topology().edges() {
            let q = problem.fixed().get(e.a, e.b);
            if q != 0.0 {
                let z = zeta(e.a, e.b);
                a_fixed -= (&z * z.transpose()) * q;
            }
        }
        let free = problem.free_edges();
        let mut w = DMatrix::zeros(k, free.len());
        for (c, e) in free.iter().enumerate() {
            w.set_column(c, &zeta(e.a, e.b));
        }
        let mut rows: Vec<(f64, Vec<usize>, f64)> = (0..free.len()).map(|e| (0.0, vec![e], -1.0)).collect();
        rows.extend(problem.vertex_rows().iter().map(|(b, idx)| (*b, idx.clone(), 1.0)));
        Self { k, w, a_fixed, rows }
    }

    fn degree(&self) -> f64 {
        (2 * self.k + self.rows.len()) as f64
    }

    fn a(&self, x: &[f64]) -> DMatrix<f64> {
        let mut a = self.a_fixed.clone();
        for (c, xe) in x.iter().enumerate() {
            let col = self.w.column(c);
            a -= (col * col.transpose()) * *xe;
        }
        a
    }

    fn slacks(&self, x: &[f64]) -> Option<Vec<f64>> {
        let g: Vec<f64> = self.rows.iter().map(|(b, idx, c)| b - c * idx.iter().map(|&e| x[e]).sum::<f64>()).collect();
        g.iter().all(|v| *v > 0.0).then_some(g)
    }

    fn factor(&self, a: &DMatrix<f64>, s: f64) -> Option<(Cholesky<f64, Dyn>, Cholesky<f64, Dyn>)> {
        let eye = DMatrix::<f64>::identity(self.k, self.k) * s;
        let c1 = Cholesky::new(&eye - a)?;
        let c2 = Cholesky::new(&eye + a)?;
        Some((c1, c2))
    }

    fn logdet(c: &Cholesky<f64, Dyn>) -> f64 {
        2.0 * c.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Log-barrier part of the objective (without `t s`), or `None`
    /// outside the domain. Kept separate so that line searches compare
    /// `t (s' - s)` against barrier differences without cancellation.
    fn barrier(&self, x: &[f64], s: f64) -> Option<f64> {
        let g = self.slacks(x)?;
        let (c1, c2) = self.factor(&self.a(x), s)?;
        Some(-Self::logdet(&c1) - Self::logdet(&c2) - g.iter().map(|v| v.ln()).sum::<f64>())
    }

    /// Gradient and Hessian over `(x, s)`.
    fn derivatives(&self, t: f64, x: &[f64], s: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let d = x.len();
        let g = self.slacks(x)?;
        let (c1, c2) = self.factor(&self.a(x), s)?;
        let y1 = c1.inverse();
        let y2 = c2.inverse();
        let yw1 = &y1 * &self.w;
        let yw2 = &y2 * &self.w;
        let g1 = self.w.transpose() * &yw1;
        let g2 = self.w.transpose() * &yw2;

        let mut grad = DVector::zeros(d + 1);
        let mut hess = DMatrix::zeros(d + 1, d + 1);
        for e in 0..d {
            grad[e] = -g1[(e, e)] + g2[(e, e)];
            for f in 0..d {
                hess[(e, f)] = g1[(e, f)] * g1[(e, f)] + g2[(e, f)] * g2[(e, f)];
            }
            let hs = yw1.column(e).norm_squared() - yw2.column(e).norm_squared();
            hess[(e, d)] = hs;
            hess[(d, e)] = hs;
        }
        grad[d] = t - y1.trace() - y2.trace();
        hess[(d, d)] = y1.norm_squared() + y2.norm_squared();
        for ((_, idx, c), gj) in self.rows.iter().zip(&g) {
            for &e in idx {
                grad[e] += c / gj;
                for &f in idx {
                    hess[(e, f)] += c * c / (gj * gj);
                }
            }
        }
        Some((grad, hess))
    }
}

/// Canonical interior point for seed 0, a random interior point otherwise.
fn initial_point(problem: &SlemProblem, seed: u64) -> Vec<f64> {
    if seed == 0 {
        return problem.interior_point();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    problem.fair_shares().iter().map(|s| rng.gen_range(0.05..0.95) * s).collect()
}

pub(crate) fn solve(problem: &SlemProblem, target_gap: f64, max_iter: usize, seed: u64) -> BarrierOutcome {
    let model = Model::new(problem);
    let d = problem.dim();
    let mut x = initial_point(problem, seed);
    let a0 = model.a(&x);
    let spread = a0.iter().map(|v| v.abs()).sum::<f64>();
    let mut s = spread + 1.0;
    let degree = model.degree();
    let mut t = degree / s;
    let mut iterations = 0;
    let mut lower_bound = f64::NEG_INFINITY;

    loop {
        // Centering by damped Newton. Near the optimum `sI -+ A` is nearly
        // singular and Newton steps carry relative noise, so centering stops
        // once the decrement is small and full steps are no longer taken.
        let mut decrement = f64::INFINITY;
        for _ in 0..MAX_CENTERING_STEPS {
            if iterations >= max_iter {
                return BarrierOutcome { x, lower_bound, iterations };
            }
            let Some((grad, hess)) = model.derivatives(t, &x, s) else { break };
            let step = match Cholesky::new(hess.clone()) {
                Some(c) => c.solve(&(-&grad)),
                None => match hess.lu().solve(&(-&grad)) {
                    Some(v) => v,
                    None => break,
                },
            };
            decrement = -grad.dot(&step);
            iterations += 1;
            if !(decrement > 2.0 * CENTERING_TOL) {
                break;
            }
            let phi0 = model.barrier(&x, s).unwrap_or(f64::INFINITY);
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-20 {
                let xn: Vec<f64> = (0..d).map(|e| x[e] + alpha * step[e]).collect();
                let sn = s + alpha * step[d];
                if let Some(phi) = model.barrier(&xn, sn) {
                    let change = t * alpha * step[d] + (phi - phi0);
                    if change <= -ARMIJO * alpha * decrement {
                        x = xn;
                        s = sn;
                        moved = true;
                        break;
                    }
                }
                alpha *= BACKTRACK;
            }
            if !moved || (alpha < 1.0 && decrement <= APPROX_CENTERING) {
                break;
            }
        }
        if !(decrement <= APPROX_CENTERING) {
            // Precision floor: the last certified bound stands.
            return BarrierOutcome { x, lower_bound, iterations };
        }
        // Duality gap of an approximately centered point with Newton
        // decrement `lambda^2 = decrement`: at most `(nu + lambda sqrt(nu)) / t`.
        let gap = (degree + (degree * decrement).sqrt()) / t;
        lower_bound = lower_bound.max(s - gap);
        if gap <= target_gap {
            return BarrierOutcome { x, lower_bound, iterations };
        }
        t *= T_GROWTH;
    }
}
