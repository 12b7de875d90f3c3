//! Regularized least-squares fits in a dictionary and the sign-flip map.

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::gram::{atom_inner_products, expansions, gram_matrices, GramSpec};
use super::{Dictionary, Potential};
use crate::error::{invalid, Result};
use crate::harmonics::SpectralScalarField;
use crate::linalg::{matvec, SpdFactor};

/// Inner potential to approximate, with its minus counterpart for the error
/// normalization `||f||_{H^s} + ||tau f||_{H^s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTarget {
    pub plus: SpectralScalarField,
    pub minus: SpectralScalarField,
    pub sobolev: f64,
}

impl FitTarget {
    pub fn new(plus: SpectralScalarField, minus: SpectralScalarField, sobolev: f64) -> Result<Self> {
        if !(sobolev > 1.0) {
            return Err(invalid(format!("Sobolev index must exceed 1, got {sobolev}")));
        }
        if plus.max_degree() != minus.max_degree() {
            return Err(invalid("plus and minus potentials differ in degree"));
        }
        Ok(FitTarget { plus, minus, sobolev })
    }

    pub fn max_degree(&self) -> usize {
        self.plus.max_degree()
    }

    pub fn denominator(&self) -> f64 {
        self.plus.sobolev_norm(self.sobolev) + self.minus.sobolev_norm(self.sobolev)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub lambda: f64,
    /// Indexed by atom id, the position in the dictionary.
    pub coefficients: Vec<f64>,
    pub relative_error: f64,
    pub l2_error: f64,
    pub level: usize,
    pub sigma_label: Option<String>,
}

/// Normal equations `(A + mu R) c = b` of a dictionary fit, where `A` is the
/// `L^2` Gram matrix of the atoms and `R` a second Gram matrix.
pub struct FitProblem<'a> {
    dict: &'a Dictionary,
    target: &'a FitTarget,
    gram: Mat<f64>,
    reg: Mat<f64>,
    rhs: Vec<f64>,
}

impl<'a> FitProblem<'a> {
    /// Regularization by `||g||_{H^s}^2`.
    pub fn new(dict: &'a Dictionary, target: &'a FitTarget) -> Self {
        Self::with_regularizer(dict, target, GramSpec::sobolev_plus(target.sobolev))
    }

    pub fn with_regularizer(dict: &'a Dictionary, target: &'a FitTarget, reg: GramSpec) -> Self {
        let mut g = gram_matrices(dict, target.max_degree(), &[GramSpec::L2_PLUS, reg]);
        let reg = g.pop().expect("two matrices");
        let gram = g.pop().expect("two matrices");
        FitProblem {
            dict,
            target,
            gram,
            reg,
            rhs: atom_inner_products(dict, &target.plus, Potential::Plus),
        }
    }

    pub fn dictionary(&self) -> &Dictionary {
        self.dict
    }

    pub fn target(&self) -> &FitTarget {
        self.target
    }

    pub fn gram(&self) -> &Mat<f64> {
        &self.gram
    }

    pub fn regularizer(&self) -> &Mat<f64> {
        &self.reg
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Coefficients minimizing `||f - g||^2 + mu c^T R c`.
    pub fn solve(&self, mu: f64) -> Result<Vec<f64>> {
        let m = self.dict.len();
        if m == 0 {
            return Ok(Vec::new());
        }
        let a = if mu == 0.0 {
            self.gram.clone()
        } else {
            Mat::from_fn(m, m, |i, j| self.gram[(i, j)] + mu * self.reg[(i, j)])
        };
        Ok(SpdFactor::new(a.as_ref())?.solve(&self.rhs))
    }

    /// `c^T R c`.
    pub fn reg_quadratic(&self, c: &[f64]) -> f64 {
        quadratic(&self.reg, c)
    }

    /// `||f - g||^2 + mu c^T R c` from the Gram matrices.
    pub fn objective(&self, c: &[f64], mu: f64) -> f64 {
        let ff = self.target.plus.l2_norm().powi(2);
        let cb: f64 = c.iter().zip(&self.rhs).map(|(a, b)| a * b).sum();
        ff - 2.0 * cb + quadratic(&self.gram, c) + mu * self.reg_quadratic(c)
    }

    /// `||f - g||_{L^2}` for each coefficient vector, from the expansions.
    pub fn l2_errors(&self, coefficient_sets: &[&[f64]]) -> Vec<f64> {
        let nmax = self.target.max_degree();
        expansions(self.dict, coefficient_sets, Potential::Plus, nmax)
            .into_iter()
            .map(|typed| {
                let mut r = self.target.plus.clone();
                for t in &typed {
                    r.add_scaled(t, -1.0);
                }
                r.l2_norm()
            })
            .collect()
    }

    fn result(&self, lambda: f64, coefficients: Vec<f64>, l2_error: f64) -> FitResult {
        FitResult {
            lambda,
            coefficients,
            relative_error: l2_error / self.target.denominator(),
            l2_error,
            level: self.dict.level,
            sigma_label: None,
        }
    }

    /// Fit with `mu = lambda^2`.
    pub fn fit(&self, lambda: f64) -> Result<FitResult> {
        let c = self.solve(lambda * lambda)?;
        let e = self.l2_errors(&[&c])[0];
        Ok(self.result(lambda, c, e))
    }

    /// Best fit over the given `lambda` values; ties keep the first.
    pub fn fit_best(&self, lambdas: &[f64]) -> Result<FitResult> {
        if lambdas.is_empty() {
            return Err(invalid("empty lambda grid"));
        }
        let sols = lambdas.iter().map(|l| self.solve(l * l)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&[f64]> = sols.iter().map(|c| c.as_slice()).collect();
        let errs = self.l2_errors(&refs);
        let mut best = 0;
        for (i, e) in errs.iter().enumerate() {
            if *e < errs[best] {
                best = i;
            }
        }
        let c = sols.into_iter().nth(best).expect("index in range");
        Ok(self.result(lambdas[best], c, errs[best]))
    }
}

fn quadratic(a: &Mat<f64>, c: &[f64]) -> f64 {
    matvec(a.as_ref(), c).iter().zip(c).map(|(u, v)| u * v).sum()
}

/// 15 logarithmically spaced values from `1e-8` to `1e-1`.
pub fn lambda_grid() -> Vec<f64> {
    (0..15).map(|i| 10f64.powf(-8.0 + 7.0 * i as f64 / 14.0)).collect()
}

/// Minimizes `||f - g||^2 + lambda^2 ||g||_{H^s}^2` over the span.
pub fn fit_regularized(target: &FitTarget, dict: &Dictionary, lambda: f64) -> Result<FitResult> {
    if !(lambda >= 0.0) {
        return Err(invalid("lambda must be non-negative"));
    }
    FitProblem::new(dict, target).fit(lambda)
}

pub fn fit_best_lambda(target: &FitTarget, dict: &Dictionary, lambdas: &[f64]) -> Result<FitResult> {
    FitProblem::new(dict, target).fit_best(lambdas)
}

/// Per-type parts of `sum_p c_p a_p` (`Plus`) or of its minus image.
pub fn typed_fields(
    coefficients: &[f64],
    dict: &Dictionary,
    potential: Potential,
    max_degree: usize,
) -> Vec<SpectralScalarField> {
    expansions(dict, &[coefficients], potential, max_degree)
        .pop()
        .expect("one set")
}

/// `tau_ptm` of the expansion: green atoms map to `-(K - I/2) S^-1 G`,
/// Wendland atoms to their negatives.
pub fn map_to_minus(coefficients: &[f64], dict: &Dictionary, max_degree: usize) -> SpectralScalarField {
    let mut out = SpectralScalarField::zeros(max_degree);
    for t in typed_fields(coefficients, dict, Potential::Minus, max_degree) {
        out.add_scaled(&t, 1.0);
    }
    out
}

/// Inverse sign flip on per-type minus parts: degree `n` of the green part is
/// scaled by `(n+1)/n`, Wendland parts by `-1`.
pub fn map_to_plus(typed_minus: &[SpectralScalarField]) -> SpectralScalarField {
    let nmax = typed_minus.first().map_or(0, |f| f.max_degree());
    let mut out = SpectralScalarField::zeros(nmax);
    for (t, f) in typed_minus.iter().enumerate() {
        let g = if t == 0 {
            f.map_degrees(|n| if n == 0 { 0.0 } else { (n + 1) as f64 / n as f64 })
        } else {
            f.scaled(-1.0)
        };
        out.add_scaled(&g, 1.0);
    }
    out
}
