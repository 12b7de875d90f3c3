//! Bounded extremal problem: best `L^2` fit in the dictionary subject to
//! `||tau_ptm(g)||_{L^2} <= c`, solved through the Lagrange multiplier.

use serde::{Deserialize, Serialize};

use super::fit::{FitProblem, FitResult, FitTarget};
use super::gram::GramSpec;
use super::Dictionary;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BepResult {
    pub fit: FitResult,
    /// Multiplier of the constraint; zero when it is inactive.
    pub mu: f64,
    /// `||tau_ptm(g)||_{L^2}` of the solution.
    pub minus_norm: f64,
    pub c_bound: f64,
    pub active: bool,
}

/// Shares the Gram matrices across several bounds.
pub struct BepSolver<'a> {
    problem: FitProblem<'a>,
}

const REL_TOL: f64 = 1e-6;

impl<'a> BepSolver<'a> {
    pub fn new(dict: &'a Dictionary, target: &'a FitTarget) -> Self {
        BepSolver {
            problem: FitProblem::with_regularizer(dict, target, GramSpec::L2_MINUS),
        }
    }

    fn minus_norm(&self, c: &[f64]) -> f64 {
        self.problem.reg_quadratic(c).max(0.0).sqrt()
    }

    fn finish(&self, c: Vec<f64>, mu: f64, c_bound: f64, active: bool) -> BepResult {
        let e = self.problem.l2_errors(&[&c])[0];
        let minus_norm = self.minus_norm(&c);
        BepResult {
            fit: FitResult {
                lambda: mu.sqrt(),
                coefficients: c,
                relative_error: e / self.problem.target().denominator(),
                l2_error: e,
                level: self.problem.dictionary().level,
                sigma_label: None,
            },
            mu,
            minus_norm,
            c_bound,
            active,
        }
    }

    pub fn solve(&self, c_bound: f64) -> Result<BepResult> {
        if !(c_bound > 0.0) {
            return Err(invalid("the bound must be positive"));
        }
        let c0 = self.problem.solve(0.0)?;
        if self.minus_norm(&c0) <= c_bound {
            return Ok(self.finish(c0, 0.0, c_bound, false));
        }
        let (g, r) = (self.problem.gram(), self.problem.regularizer());
        let n = g.nrows();
        let tr_g: f64 = (0..n).map(|i| g[(i, i)]).sum();
        let tr_r: f64 = (0..n).map(|i| r[(i, i)]).sum();
        // bracket the multiplier: the norm decreases in mu
        let mut hi = 1e-12 * tr_g / tr_r;
        let mut lo = 0.0;
        let mut c_hi = self.problem.solve(hi)?;
        let mut steps = 0;
        while self.minus_norm(&c_hi) > c_bound {
            lo = hi;
            hi *= 10.0;
            c_hi = self.problem.solve(hi)?;
            steps += 1;
            if steps > 60 {
                return Err(Error::Numerical("could not bracket the multiplier".into()));
            }
        }
        if lo == 0.0 {
            lo = hi;
            loop {
                lo *= 0.1;
                if self.minus_norm(&self.problem.solve(lo)?) > c_bound {
                    break;
                }
                if lo < 1e-300 {
                    return Ok(self.finish(c_hi, hi, c_bound, true));
                }
            }
        }
        let mut best = (hi, c_hi);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            let c = self.problem.solve(mid)?;
            let norm = self.minus_norm(&c);
            if norm > c_bound {
                lo = mid;
            } else {
                hi = mid;
            }
            let done = (norm - c_bound).abs() <= REL_TOL * c_bound;
            best = (mid, c);
            if done || hi / lo - 1.0 < 1e-14 {
                break;
            }
        }
        Ok(self.finish(best.1, best.0, c_bound, true))
    }
}

/// `argmin ||f_e - g||` over the dictionary span with `||tau_ptm g|| <= c_bound`.
pub fn bep_solve(target: &FitTarget, dict: &Dictionary, c_bound: f64) -> Result<BepResult> {
    BepSolver::new(dict, target).solve(c_bound)
}
