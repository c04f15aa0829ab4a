//! Dense symmetric eigensolver and SLEM of reversible chains.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::{build_transition_matrix, Equilibrium, Topology, TransitionMatrix, Weights};
use crate::error::{Error, Result};

/// Asymmetry accepted by [`eigen_symmetric`].
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Detailed-balance defect accepted by [`symmetrize`].
pub const REVERSIBILITY_TOL: f64 = 1e-9;
/// `slem >= 1 - NON_MIXING_TOL` reports an infinite mixing time.
pub const NON_MIXING_TOL: f64 = 1e-12;
/// A second eigenvalue within this distance of 1 marks a reducible chain.
pub const REDUCIBLE_TOL: f64 = 1e-10;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenpairs sorted by non-increasing value; `vectors` holds unit columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<usize> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidArgument(format!("matrix is {}x{}, expected square", m.nrows(), m.ncols())));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("matrix is empty".into()));
    }
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in 0..i {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if !(d <= SYMMETRY_TOL * scale) {
                return Err(Error::InvalidArgument(format!(
                    "matrix is not symmetric at ({i},{j}): difference {d:.3e}"
                )));
            }
        }
    }
    Ok(n)
}

/// Cyclic Jacobi on a row-major copy of `m`, symmetrized by averaging.
/// Returns the diagonal and, if requested, the accumulated rotations.
fn jacobi(m: &DMatrix<f64>, want_vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let n = m.nrows();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    let mut v = want_vectors.then(|| {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    });
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_TOL * norm.max(1.0);
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) >= threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence(sweeps));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    Ok(((0..n).map(|i| a[i * n + i]).collect(), v))
}

/// Eigenvalues of a symmetric matrix in non-increasing order.
pub fn eigenvalues_symmetric(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    let (mut values, _) = jacobi(m, false)?;
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Full eigendecomposition of a symmetric matrix.
///
/// Each eigenvector's first entry of magnitude above `1e-12` is positive.
/// Pairs are sorted by value (descending), ties by eigenvector
/// (lexicographically ascending), so the output is deterministic.
pub fn eigen_symmetric(m: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let n = check_symmetric(m)?;
    let (values, v) = jacobi(m, true)?;
    let v = v.expect("vectors requested");
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i * n + j]).collect();
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            col.iter_mut().for_each(|x| *x /= norm);
            if let Some(first) = col.iter().find(|x| x.abs() > 1e-12) {
                if *first < 0.0 {
                    col.iter_mut().for_each(|x| *x = -*x);
                }
            }
            (values[j], col)
        })
        .collect();
    pairs.sort_by(|(la, va), (lb, vb)| {
        lb.total_cmp(la).then_with(|| {
            va.iter().zip(vb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let values = pairs.iter().map(|(l, _)| *l).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(SymmetricEigen { values, vectors })
}

/// `S = D^{1/2} P D^{-1/2}`, symmetric with the spectrum of `P`.
pub fn symmetrize(p: &TransitionMatrix) -> Result<DMatrix<f64>> {
    let pi = p.pi();
    let pm = p.matrix();
    let n = p.dim();
    let scale = pi.total();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            worst = worst.max((pi[i] * pm[(i, j)] - pi[j] * pm[(j, i)]).abs() / scale);
        }
    }
    if worst > REVERSIBILITY_TOL {
        return Err(Error::NotReversible(worst));
    }
    let root: Vec<f64> = pi.values().iter().map(|v| v.sqrt()).collect();
    let mut s = DMatrix::from_fn(n, n, |i, j| root[i] * pm[(i, j)] / root[j]);
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlemReport {
    pub slem: f64,
    pub lambda2: f64,
    pub lambda_n: f64,
    /// Spectrum of `P`, non-increasing; the first entry is the Perron root.
    pub eigenvalues: Vec<f64>,
    /// Right eigenvector of `P` for `lambda2`.
    pub v2: Vec<f64>,
    /// Right eigenvector of `P` for `lambda_n`.
    pub vn: Vec<f64>,
    /// `1 / ln(1 / slem)`; `None` when the chain does not mix.
    pub mixing_time: Option<f64>,
    /// Eigenvalue 1 has multiplicity above one.
    pub reducible: bool,
}

impl SlemReport {
    pub fn mixes(&self) -> bool {
        self.mixing_time.is_some()
    }
}

pub fn mixing_time(slem: f64) -> Option<f64> {
    if slem >= 1.0 - NON_MIXING_TOL {
        None
    } else if slem <= 0.0 {
        Some(0.0)
    } else {
        Some(1.0 / (1.0 / slem).ln())
    }
}

/// SLEM of an already assembled reversible chain.
pub fn slem_of(p: &TransitionMatrix) -> Result<SlemReport> {
    let n = p.dim();
    let s = symmetrize(p)?;
    if n == 1 {
        return Ok(SlemReport {
            slem: 0.0,
            lambda2: 0.0,
            lambda_n: 0.0,
            eigenvalues: vec![1.0],
            v2: vec![1.0],
            vn: vec![1.0],
            mixing_time: Some(0.0),
            reducible: false,
        });
    }
    let eig = eigen_symmetric(&s)?;
    let lambda2 = eig.values[1];
    let lambda_n = eig.values[n - 1];
    let reducible = lambda2 >= 1.0 - REDUCIBLE_TOL;
    let slem = if reducible { 1.0 } else { lambda2.max(-lambda_n) };
    let inv_root: Vec<f64> = p.pi().values().iter().map(|v| 1.0 / v.sqrt()).collect();
    let right = |k: usize| -> Vec<f64> {
        let col: Vec<f64> = (0..n).map(|i| eig.vectors[(i, k)] * inv_root[i]).collect();
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        col.into_iter().map(|x| x / norm).collect()
    };
    Ok(SlemReport {
        slem,
        lambda2,
        lambda_n,
        v2: right(1),
        vn: right(n - 1),
        eigenvalues: eig.values,
        mixing_time: mixing_time(slem),
        reducible,
    })
}

/// SLEM of the chain defined by `(pi, q)` on `topology`.
pub fn slem(pi: &Equilibrium, q: &Weights, topology: &Topology) -> Result<SlemReport> {
    slem_of(&build_transition_matrix(pi, q, topology)?)
}

/// Fast SLEM without eigenvectors; `1.0` for reducible chains.
pub fn slem_value(p: &TransitionMatrix) -> Result<f64> {
    let values = eigenvalues_symmetric(&symmetrize(p)?)?;
    Ok(slem_from_spectrum(&values))
}

/// SLEM of a non-increasing spectrum whose first entry is the Perron root.
pub fn slem_from_spectrum(values: &[f64]) -> f64 {
    match values {
        [] | [_] => 0.0,
        [_, l2, .., ln] if *l2 < 1.0 - REDUCIBLE_TOL => l2.max(-ln),
        [_, l2] if *l2 < 1.0 - REDUCIBLE_TOL => l2.abs(),
        _ => 1.0,
    }
}

/// Residual `max_k |M v_k - l_k v_k|` of an eigendecomposition.
pub fn eigen_residual(m: &DMatrix<f64>, eig: &SymmetricEigen) -> f64 {
    (0..m.nrows())
        .map(|k| {
            let v: DVector<f64> = eig.vectors.column(k).into();
            (m * &v - &v * eig.values[k]).amax()
        })
        .fold(0.0, f64::max)
}
