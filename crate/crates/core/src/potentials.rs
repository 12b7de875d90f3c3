//! Layer potentials and Hardy operators as spectral multipliers.
//!
//! `S` and `K` act on degree `n` by `-1/(2n+1)` and `1/(4n+2)`. The Hardy
//! operators are `B+ = eta (K - I/2) + grad S` and `B- = eta (K + I/2) + grad S`,
//! which map `Y_{n,k}` to the basis fields `b+_{n,k}` and `b-_{n,k}`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harmonics::{decompose_vector, RingGrid, SpectralScalarField, SpectralVectorField};
use crate::sphere_geom::Vec3;

/// A rotation-invariant operator on scalar fields, identified by its
/// multiplier `lambda_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OperatorSymbol {
    S,
    SInv,
    K,
    KPlusHalf,
    KMinusHalf,
    LaplaceBeltrami,
    /// `(-Delta + 1/4)^p`, multiplier `(n + 1/2)^(2p)`.
    NegLbPlusQuarterPow(f64),
    /// Product of the listed symbols.
    Compose(Vec<OperatorSymbol>),
}

impl OperatorSymbol {
    pub fn multiplier(&self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            OperatorSymbol::S => -1.0 / (2.0 * nf + 1.0),
            OperatorSymbol::SInv => -(2.0 * nf + 1.0),
            OperatorSymbol::K => 1.0 / (4.0 * nf + 2.0),
            OperatorSymbol::KPlusHalf => 1.0 / (4.0 * nf + 2.0) + 0.5,
            OperatorSymbol::KMinusHalf => 1.0 / (4.0 * nf + 2.0) - 0.5,
            OperatorSymbol::LaplaceBeltrami => -nf * (nf + 1.0),
            OperatorSymbol::NegLbPlusQuarterPow(p) => (nf + 0.5).powf(2.0 * p),
            OperatorSymbol::Compose(ops) => ops.iter().map(|o| o.multiplier(n)).product(),
        }
    }

    pub fn then(self, next: OperatorSymbol) -> OperatorSymbol {
        match self {
            OperatorSymbol::Compose(mut v) => {
                v.push(next);
                OperatorSymbol::Compose(v)
            }
            s => OperatorSymbol::Compose(vec![s, next]),
        }
    }

    pub fn table(&self, max_degree: usize) -> Vec<f64> {
        (0..=max_degree).map(|n| self.multiplier(n)).collect()
    }
}

pub fn apply_symbol(op: &OperatorSymbol, f: &SpectralScalarField) -> SpectralScalarField {
    f.map_degrees(|n| op.multiplier(n))
}

/// `B+ f`; the constant part of `f` is annihilated.
pub fn apply_bplus(f: &SpectralScalarField) -> SpectralVectorField {
    let mut out = SpectralVectorField::zeros(f.max_degree());
    out.plus = f.clone();
    out.plus.coeffs_mut()[0] = 0.0;
    out
}

pub fn apply_bminus(f: &SpectralScalarField) -> SpectralVectorField {
    let mut out = SpectralVectorField::zeros(f.max_degree());
    out.minus = f.clone();
    out
}

/// `B+ f+ + B- f-`.
pub fn hardy_sum(f_plus: &SpectralScalarField, f_minus: &SpectralScalarField) -> SpectralVectorField {
    let mut out = apply_bplus(f_plus);
    out.minus = f_minus.with_degree(f_plus.max_degree());
    out
}

/// Splits sampled data into inner-harmonic, outer-harmonic and tangential
/// divergence-free parts.
pub fn hardy_hodge_decompose(grid: &RingGrid, values: &[Vec3], max_degree: usize) -> Result<SpectralVectorField> {
    decompose_vector(grid, values, max_degree)
}

/// The `H-` potential of a field whose `H+` potential is `f_plus`, for a
/// field supported in the complement of the observation region: it is the
/// minus part of the same decomposition.
pub fn tau_ptm_of_localized(f_plus: &SpectralScalarField, field: &SpectralVectorField) -> SpectralScalarField {
    field.minus.with_degree(f_plus.max_degree())
}

/// Squared `L^2` norm of a vector field from its coefficients.
pub fn vector_energy(f: &SpectralVectorField) -> (f64, f64, f64) {
    let mut e = (0.0, 0.0, 0.0);
    for n in 0..=f.max_degree() {
        let nf = n as f64;
        let d = 2.0 * nf + 1.0;
        let sq = |g: &SpectralScalarField| g.degree(n).iter().map(|c| c * c).sum::<f64>();
        e.0 += nf / d * sq(&f.plus);
        e.1 += (nf + 1.0) / d * sq(&f.minus);
        if n > 0 {
            e.2 += sq(&f.toroidal);
        }
    }
    e
}
