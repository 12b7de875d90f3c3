//! Zonal kernels: the Wendland C^2 spherical basis function, the
//! Laplace-Beltrami fundamental solution, its C^1 regularization and the
//! difference atoms built from it.
//!
//! Spectral coefficients use the addition-theorem convention
//! `F(x . y) = sum_n (2n+1)/(4 pi) F_n P_n(x . y)`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::harmonics::{legendre_all, legendre_into, legendre_series, SpectralScalarField};
use crate::sphere_geom::{UnitVector, Vec3};

const INV_4PI: f64 = 1.0 / (4.0 * PI);

/// `psi(r) = (1 - r)_+^4 (4r + 1)`.
pub fn wendland_psi(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        let u = 1.0 - r;
        let u2 = u * u;
        u2 * u2 * (4.0 * r + 1.0)
    }
}

/// Scaled kernel `Psi_delta(x, y) = delta^-2 psi(|x - y| / delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WendlandKernel {
    pub delta: f64,
}

impl WendlandKernel {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 2.0) {
            return Err(invalid(format!("Wendland scale must lie in (0, 2], got {delta}")));
        }
        Ok(WendlandKernel { delta })
    }

    pub fn eval(&self, x: UnitVector, y: UnitVector) -> f64 {
        self.eval_distance(x.distance(y))
    }

    pub fn eval_distance(&self, r: f64) -> f64 {
        wendland_psi(r / self.delta) / (self.delta * self.delta)
    }

    /// As a function of `t = x . y`.
    pub fn eval_t(&self, t: f64) -> f64 {
        self.eval_distance((2.0 - 2.0 * t).max(0.0).sqrt())
    }

    pub fn spectrum(&self, max_degree: usize) -> WendlandSpectrum {
        wendland_coeffs(self.delta, max_degree)
    }
}

pub fn wendland_spatial(delta: f64, x: UnitVector, y: UnitVector) -> f64 {
    WendlandKernel { delta }.eval(x, y)
}

/// Legendre coefficients of [`WendlandKernel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WendlandSpectrum {
    pub delta: f64,
    pub coeffs: Vec<f64>,
}

impl WendlandSpectrum {
    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// `Psi_n = (pi/7) 3F2(-n, n+1, 5/2; 4, 9/2; delta^2/4)` for `n <= max_degree`.
///
/// The alternating terms of the hypergeometric sum reach `1e19` while the
/// sum is `1e-9` already at `n = 50`, so each sum is evaluated by Horner's
/// scheme in exact integer arithmetic (`delta^2/4` is a dyadic rational) and
/// rounded once at the end.
pub fn wendland_coeffs(delta: f64, max_degree: usize) -> WendlandSpectrum {
    let z = 0.25 * delta * delta;
    let (zn, zd) = dyadic(z);
    let coeffs = (0..=max_degree)
        .map(|n| PI / 7.0 * hyper_3f2_exact(n, &zn, &zd))
        .collect();
    WendlandSpectrum { delta, coeffs }
}

/// `z = zn / zd` exactly, with `zd` a power of two.
fn dyadic(z: f64) -> (BigInt, BigInt) {
    if z == 0.0 {
        return (BigInt::zero(), BigInt::from(1));
    }
    let bits = z.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    if e >= 0 {
        (BigInt::from(mant) << e as usize, BigInt::from(1))
    } else {
        (BigInt::from(mant), BigInt::from(1) << (-e) as usize)
    }
}

fn hyper_3f2_exact(n: usize, zn: &BigInt, zd: &BigInt) -> f64 {
    let mut num = BigInt::from(1);
    let mut den = BigInt::from(1);
    let n = n as i128;
    for j in (0..n).rev() {
        let a = (j - n) * (j + n + 1) * (2 * j + 5);
        let b = (j + 4) * (2 * j + 9) * (j + 1);
        let scaled_den = &den * b * zd;
        num = &scaled_den + &num * a * zn;
        den = scaled_den;
    }
    ratio_to_f64(&num, &den)
}

fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let neg = num.is_negative() != den.is_negative();
    let (a, b) = (num.abs(), den.abs());
    let shift = b.bits() as i64 - a.bits() as i64 + 66;
    let q = if shift >= 0 {
        (a << shift as usize) / b
    } else {
        a / (b << (-shift) as usize)
    };
    let v = ldexp(q.to_f64().unwrap_or(f64::INFINITY), -shift);
    if neg {
        -v
    } else {
        v
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Fundamental solution `G(t) = (1/4pi) ln(1 - t) + (1/4pi)(1 - ln 2)`.
pub fn green_t(t: f64) -> Result<f64> {
    if t > 1.0 - 1e-14 {
        return Err(invalid("fundamental solution is singular at x = y"));
    }
    Ok(INV_4PI * (1.0 - t).ln() + INV_4PI * (1.0 - std::f64::consts::LN_2))
}

pub fn green_spatial(x: UnitVector, y: UnitVector) -> Result<f64> {
    green_t(x.dot(y))
}

/// Legendre coefficients of the fundamental solution, `-1/(n(n+1))` for
/// `n >= 1` and zero mean.
pub fn green_coeffs(max_degree: usize) -> Vec<f64> {
    (0..=max_degree)
        .map(|n| if n == 0 { 0.0 } else { -1.0 / (n * (n + 1)) as f64 })
        .collect()
}

/// The C^1 regularization of [`green_t`] that replaces the logarithm on
/// `t > 1 - rho` by its linear tangent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizedGreen {
    pub rho: f64,
}

impl RegularizedGreen {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 2.0) {
            return Err(invalid(format!("regularization must lie in (0, 2), got {rho}")));
        }
        Ok(RegularizedGreen { rho })
    }

    pub fn value(&self, t: f64) -> f64 {
        let rho = self.rho;
        if t > 1.0 - rho {
            (1.0 - t) / (4.0 * PI * rho) + INV_4PI * (rho.ln() - std::f64::consts::LN_2)
        } else {
            INV_4PI * (1.0 - t).ln() + INV_4PI * (1.0 - std::f64::consts::LN_2)
        }
    }

    /// `dG/dt`.
    pub fn derivative(&self, t: f64) -> f64 {
        if t > 1.0 - self.rho {
            -1.0 / (4.0 * PI * self.rho)
        } else {
            -INV_4PI / (1.0 - t)
        }
    }

    /// `Delta_S` of `y -> G(c . y)` as a function of `t = c . y`:
    /// `-1/(4pi)` outside the cap and `t/(2 pi rho)` inside.
    pub fn laplacian(&self, t: f64) -> f64 {
        if t > 1.0 - self.rho {
            t / (2.0 * PI * self.rho)
        } else {
            -INV_4PI
        }
    }

    /// Legendre coefficients `G_0, ..., G_N`.
    pub fn coeffs(&self, max_degree: usize) -> Vec<f64> {
        reg_green_coeffs(self.rho, max_degree)
    }
}

pub fn reg_green_spatial(rho: f64, x: UnitVector, y: UnitVector) -> f64 {
    RegularizedGreen { rho }.value(x.dot(y))
}

/// Legendre coefficients of the regularized fundamental solution.
pub fn reg_green_coeffs(rho: f64, max_degree: usize) -> Vec<f64> {
    let mut p = vec![0.0; max_degree + 3];
    legendre_into(1.0 - rho, &mut p);
    let mut out = vec![0.0; max_degree + 1];
    out[0] = 0.25 * rho;
    if max_degree >= 1 {
        out[1] = -0.5 + 0.25 * rho - rho * rho / 24.0;
    }
    for n in 2..=max_degree {
        let nf = n as f64;
        let a = (p[n + 1] - p[n - 1]) / (2.0 * nf * (nf + 1.0) * (2.0 * nf + 1.0));
        let b = (2.0 - rho) / (2.0 * nf * (nf + 1.0)) * p[n];
        let c = (p[n] - p[n + 2]) / (2.0 * rho * (2.0 * nf + 1.0) * (2.0 * nf + 3.0));
        let d = (p[n - 2] - p[n]) / (2.0 * rho * (2.0 * nf + 1.0) * (2.0 * nf - 1.0));
        out[n] = a - b + c - d;
    }
    out
}

/// Synthesizes `sum_n (2n+1)/(4pi) c_n P_n(t)`.
pub fn zonal_synthesis(coeffs: &[f64], t: f64) -> f64 {
    let scaled: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| (2 * n + 1) as f64 * INV_4PI * c)
        .collect();
    legendre_series(&scaled, t)
}

/// Legendre coefficients `2 pi int F(t) P_n(t) dt` of a zonal function by
/// Gauss-Legendre quadrature on the pieces `breaks[i]..breaks[i+1]`.
pub fn legendre_transform(f: impl Fn(f64) -> f64, breaks: &[f64], nodes: usize, max_degree: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; max_degree + 1];
    for w in breaks.windows(2) {
        let (x, wt) = crate::harmonics::gauss_legendre_interval(nodes, w[0], w[1]);
        for (t, wi) in x.iter().zip(&wt) {
            let p = legendre_all(*t, max_degree)?;
            let v = f(*t) * wi * 2.0 * PI;
            for (o, pn) in out.iter_mut().zip(&p) {
                *o += v * pn;
            }
        }
    }
    Ok(out)
}

/// `G^rho(x, .) - G^rho(xbar, .)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenDifferenceAtom {
    pub x: UnitVector,
    pub xbar: UnitVector,
    pub rho: f64,
}

impl GreenDifferenceAtom {
    fn kernel(&self) -> RegularizedGreen {
        RegularizedGreen { rho: self.rho }
    }

    pub fn value(&self, y: UnitVector) -> f64 {
        let g = self.kernel();
        g.value(self.x.dot(y)) - g.value(self.xbar.dot(y))
    }

    /// Surface gradient in `y`: `G'(c . y)(c - (c . y) y)` per center.
    pub fn gradient(&self, y: UnitVector) -> Vec3 {
        let g = self.kernel();
        let part = |c: UnitVector| {
            let t = c.dot(y);
            (c.vec() - y.vec() * t) * g.derivative(t)
        };
        part(self.x) - part(self.xbar)
    }

    pub fn laplacian(&self, y: UnitVector) -> f64 {
        green_diff_laplacian(self, y)
    }

    /// Spectral coefficients `G_n (Y_{n,k}(x) - Y_{n,k}(xbar))`.
    pub fn spectral(&self, max_degree: usize) -> SpectralScalarField {
        let c = reg_green_coeffs(self.rho, max_degree);
        let mut f = SpectralScalarField::zonal(&c, self.x);
        f.add_scaled(&SpectralScalarField::zonal(&c, self.xbar), -1.0);
        f
    }
}

/// Closed-form Laplace-Beltrami of a difference atom. Exactly zero outside
/// both regularization caps.
pub fn green_diff_laplacian(atom: &GreenDifferenceAtom, y: UnitVector) -> f64 {
    let g = atom.kernel();
    g.laplacian(atom.x.dot(y)) - g.laplacian(atom.xbar.dot(y))
}
