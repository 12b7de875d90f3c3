//! Dense linear algebra helpers on top of `faer`.

use faer::linalg::solvers::{Llt, Solve, SolveLstsq};
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Relative diagonal shifts tried, in order, when a Cholesky factorization
/// fails. Each is scaled by `trace / n`.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-14, 1e-12, 1e-10];

/// Cholesky factor of a symmetric positive definite matrix, possibly of a
/// slightly shifted copy.
pub struct SpdFactor {
    llt: Llt<f64>,
    /// Diagonal shift that was added.
    pub jitter: f64,
}

impl SpdFactor {
    pub fn new(a: MatRef<'_, f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Ok(SpdFactor {
                llt: Mat::<f64>::identity(0, 0).llt(Side::Lower).expect("empty"),
                jitter: 0.0,
            });
        }
        let scale = (0..n).map(|i| a[(i, i)]).sum::<f64>() / n as f64;
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::IllConditioned("matrix has non-positive trace".into()));
        }
        for rel in JITTER_LADDER {
            let jitter = rel * scale;
            let res = if jitter == 0.0 {
                a.llt(Side::Lower)
            } else {
                let mut shifted = a.to_owned();
                for i in 0..n {
                    shifted[(i, i)] += jitter;
                }
                shifted.llt(Side::Lower)
            };
            if let Ok(llt) = res {
                return Ok(SpdFactor { llt, jitter });
            }
        }
        Err(Error::IllConditioned(format!(
            "Cholesky failed for a {n}x{n} system after the jitter ladder"
        )))
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        if b.is_empty() {
            return Vec::new();
        }
        let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.llt.solve(&rhs);
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: MatRef<'_, f64>, b: &[f64]) -> Result<Vec<f64>> {
    Ok(SpdFactor::new(a)?.solve(b))
}

pub fn matvec(a: MatRef<'_, f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += a[(i, j)] * xj;
        }
    }
    y
}

fn matvec_t(a: MatRef<'_, f64>, r: &[f64]) -> Vec<f64> {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)] * r[i]).sum())
        .collect()
}

fn lstsq_columns(a: MatRef<'_, f64>, cols: &[usize], b: &[f64]) -> Vec<f64> {
    let sub = Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])]);
    let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
    let x = sub.qr().solve_lstsq(&rhs);
    (0..cols.len()).map(|i| x[(i, 0)]).collect()
}

/// Lawson-Hanson active-set solution of `min ||A x - b||` subject to `x >= 0`.
pub fn nnls(a: MatRef<'_, f64>, b: &[f64], max_iter: usize) -> Vec<f64> {
    let n = a.ncols();
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let bnorm = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let tol = 1e-13 * bnorm.max(1.0) * (a.nrows().max(n) as f64);
    for _ in 0..max_iter {
        let ax = matvec(a, &x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let w = matvec_t(a, &r);
        let cand = (0..n).filter(|&j| !passive[j]).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        if w[j] <= tol {
            break;
        }
        passive[j] = true;
        loop {
            let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let s = lstsq_columns(a, &cols, b);
            if s.iter().all(|v| *v > 0.0) {
                for (c, v) in cols.iter().zip(&s) {
                    x[*c] = *v;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (c, v) in cols.iter().zip(&s) {
                if *v <= 0.0 {
                    alpha = alpha.min(x[*c] / (x[*c] - v));
                }
            }
            for (c, v) in cols.iter().zip(&s) {
                x[*c] += alpha * (v - x[*c]);
                if x[*c] <= 1e-300 {
                    x[*c] = 0.0;
                    passive[*c] = false;
                }
            }
            if !passive.iter().any(|p| *p) {
                break;
            }
        }
    }
    x
}
