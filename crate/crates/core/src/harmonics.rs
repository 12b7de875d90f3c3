//! Real spherical harmonics, ring-grid analysis and synthesis, and the
//! vector basis `b+`, `b-`, `c` that splits tangent-plus-radial fields into
//! their inner-harmonic, outer-harmonic and toroidal parts.
//!
//! Conventions: `Y_{n,0} = p_{n,0}(cos theta)`, `Y_{n,k} = sqrt2 p_{n,k} cos(k phi)`
//! and `Y_{n,-k} = sqrt2 p_{n,k} sin(k phi)` for `k > 0`, orthonormal in
//! `L^2(S)` with no Condon-Shortley phase. Coefficients are stored
//! row-major by degree, `index(n, k) = n^2 + n + k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sphere_geom::{UnitVector, Vec3};

pub fn num_coeffs(max_degree: usize) -> usize {
    (max_degree + 1) * (max_degree + 1)
}

pub fn coeff_index(n: usize, k: i64) -> usize {
    ((n * n + n) as i64 + k) as usize
}

/// Legendre polynomials `P_0(t), ..., P_N(t)`.
pub fn legendre_all(t: f64, max_degree: usize) -> Result<Vec<f64>> {
    let t = clamp_unit(t)?;
    let mut out = vec![0.0; max_degree + 1];
    legendre_into(t, &mut out);
    Ok(out)
}

/// Fills `out[n] = P_n(t)` for `n < out.len()`; `t` is not checked.
pub fn legendre_into(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0) * t * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
}

/// Sum `sum_n c_n P_n(t)` by Clenshaw recurrence.
pub fn legendre_series(coeffs: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for n in (0..coeffs.len()).rev() {
        let nf = n as f64;
        let alpha = (2.0 * nf + 1.0) / (nf + 1.0) * t;
        let beta = (nf + 1.0) / (nf + 2.0);
        let b0 = coeffs[n] + alpha * b1 - beta * b2;
        b2 = b1;
        b1 = b0;
    }
    b1
}

fn clamp_unit(t: f64) -> Result<f64> {
    if !t.is_finite() || t.abs() > 1.0 + 1e-12 {
        return Err(invalid(format!("argument {t} outside [-1, 1]")));
    }
    Ok(t.clamp(-1.0, 1.0))
}

/// Gauss-Legendre nodes (ascending) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    (
        x.iter().map(|xi| c + r * xi).collect(),
        w.iter().map(|wi| r * wi).collect(),
    )
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * z * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Normalized associated Legendre functions `p_{n,m}(cos theta)` together
/// with `p_{n,m} / sin(theta)` (for `m >= 1`) and `d p_{n,m} / d theta`.
///
/// `p/sin` is produced by the same recurrence as `p`, seeded one order down,
/// so it stays finite at the poles.
#[derive(Debug, Clone)]
pub struct AssocLegendre {
    max_degree: usize,
    p: Vec<f64>,
    q: Vec<f64>,
    dp: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

fn tri(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

impl AssocLegendre {
    /// Tables sized for degrees up to `max_degree + 1` so derivatives at
    /// `max_degree` can use the order `m + 1` neighbour.
    pub fn new(max_degree: usize) -> Self {
        let top = max_degree + 1;
        let size = tri(top, top) + 1;
        let mut a = vec![0.0; size];
        let mut b = vec![0.0; size];
        for n in 2..=top {
            for m in 0..=(n - 2) {
                let (nf, mf) = (n as f64, m as f64);
                a[tri(n, m)] = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
                let n1 = nf - 1.0;
                b[tri(n, m)] = ((n1 * n1 - mf * mf) / (4.0 * n1 * n1 - 1.0)).sqrt();
            }
        }
        AssocLegendre {
            max_degree,
            p: vec![0.0; size],
            q: vec![0.0; size],
            dp: vec![0.0; size],
            a,
            b,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Evaluates at `t = cos(theta)`, `s = sin(theta) >= 0`.
    pub fn compute(&mut self, t: f64, s: f64, derivatives: bool) {
        let top = self.max_degree + 1;
        let p00 = 0.5 / PI.sqrt();
        // m = 0 column
        self.p[0] = p00;
        if top >= 1 {
            self.p[tri(1, 0)] = 3f64.sqrt() * t * p00;
        }
        for n in 2..=top {
            let i = tri(n, 0);
            self.p[i] = self.a[i] * (t * self.p[tri(n - 1, 0)] - self.b[i] * self.p[tri(n - 2, 0)]);
        }
        // m >= 1 columns through q = p / s
        let mut p_diag_prev = p00;
        for m in 1..=top {
            let mf = m as f64;
            let qmm = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * p_diag_prev;
            self.q[tri(m, m)] = qmm;
            if m < top {
                self.q[tri(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * t * qmm;
            }
            for n in (m + 2)..=top {
                let i = tri(n, m);
                self.q[i] = self.a[i] * (t * self.q[tri(n - 1, m)] - self.b[i] * self.q[tri(n - 2, m)]);
            }
            for n in m..=top {
                let i = tri(n, m);
                self.p[i] = s * self.q[i];
            }
            p_diag_prev = self.p[tri(m, m)];
        }
        if derivatives {
            for n in 0..=self.max_degree {
                let nf = n as f64;
                self.dp[tri(n, 0)] = if n == 0 {
                    0.0
                } else {
                    -(nf * (nf + 1.0)).sqrt() * self.p[tri(n, 1)]
                };
                for m in 1..=n {
                    let mf = m as f64;
                    let lo = ((nf + mf) * (nf - mf + 1.0)).sqrt() * self.p[tri(n, m - 1)];
                    let hi = if m < n {
                        ((nf - mf) * (nf + mf + 1.0)).sqrt() * self.p[tri(n, m + 1)]
                    } else {
                        0.0
                    };
                    self.dp[tri(n, m)] = 0.5 * (lo - hi);
                }
            }
        }
    }

    pub fn p(&self, n: usize, m: usize) -> f64 {
        self.p[tri(n, m)]
    }

    /// `p_{n,m} / sin(theta)`, valid for `m >= 1`.
    pub fn p_over_sin(&self, n: usize, m: usize) -> f64 {
        self.q[tri(n, m)]
    }

    pub fn dp(&self, n: usize, m: usize) -> f64 {
        self.dp[tri(n, m)]
    }
}

/// Orthonormal tangent frame `(e_theta, e_phi)` at `p`, using `phi = 0` at
/// the poles.
pub fn tangent_frame(p: UnitVector) -> (Vec3, Vec3) {
    let t = p.z().clamp(-1.0, 1.0);
    let s = p.x().hypot(p.y());
    let (cp, sp) = if s > 0.0 { (p.x() / s, p.y() / s) } else { (1.0, 0.0) };
    (Vec3::new(t * cp, t * sp, -s), Vec3::new(-sp, cp, 0.0))
}

/// Reusable evaluator for all `Y_{n,k}` and their surface gradients at a point.
#[derive(Debug, Clone)]
pub struct HarmonicEvaluator {
    max_degree: usize,
    legendre: AssocLegendre,
    cos_m: Vec<f64>,
    sin_m: Vec<f64>,
    /// `Y_{n,k}(p)`, row-major.
    pub y: Vec<f64>,
    /// `d Y / d theta`.
    pub dtheta: Vec<f64>,
    /// `(1 / sin theta) d Y / d phi`.
    pub dphi: Vec<f64>,
    pub e_theta: Vec3,
    pub e_phi: Vec3,
}

impl HarmonicEvaluator {
    pub fn new(max_degree: usize) -> Self {
        let nc = num_coeffs(max_degree);
        HarmonicEvaluator {
            max_degree,
            legendre: AssocLegendre::new(max_degree),
            cos_m: vec![0.0; max_degree + 1],
            sin_m: vec![0.0; max_degree + 1],
            y: vec![0.0; nc],
            dtheta: vec![0.0; nc],
            dphi: vec![0.0; nc],
            e_theta: Vec3::ZERO,
            e_phi: Vec3::ZERO,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn eval(&mut self, p: UnitVector, gradients: bool) {
        let t = p.z().clamp(-1.0, 1.0);
        let s = p.x().hypot(p.y());
        let (cp, sp) = if s > 0.0 { (p.x() / s, p.y() / s) } else { (1.0, 0.0) };
        self.e_theta = Vec3::new(t * cp, t * sp, -s);
        self.e_phi = Vec3::new(-sp, cp, 0.0);
        self.legendre.compute(t, s, gradients);
        self.cos_m[0] = 1.0;
        self.sin_m[0] = 0.0;
        for m in 1..=self.max_degree {
            self.cos_m[m] = self.cos_m[m - 1] * cp - self.sin_m[m - 1] * sp;
            self.sin_m[m] = self.sin_m[m - 1] * cp + self.cos_m[m - 1] * sp;
        }
        let r2 = 2f64.sqrt();
        let lg = &self.legendre;
        for n in 0..=self.max_degree {
            let base = n * n + n;
            self.y[base] = lg.p(n, 0);
            if gradients {
                self.dtheta[base] = lg.dp(n, 0);
                self.dphi[base] = 0.0;
            }
            for m in 1..=n {
                let (c, sn) = (self.cos_m[m], self.sin_m[m]);
                let pv = r2 * lg.p(n, m);
                self.y[base + m] = pv * c;
                self.y[base - m] = pv * sn;
                if gradients {
                    let d = r2 * lg.dp(n, m);
                    let q = r2 * m as f64 * lg.p_over_sin(n, m);
                    self.dtheta[base + m] = d * c;
                    self.dtheta[base - m] = d * sn;
                    self.dphi[base + m] = -q * sn;
                    self.dphi[base - m] = q * c;
                }
            }
        }
    }

    /// Surface gradient of `Y_{n,k}` after [`HarmonicEvaluator::eval`] with
    /// gradients.
    pub fn grad(&self, i: usize) -> Vec3 {
        self.e_theta * self.dtheta[i] + self.e_phi * self.dphi[i]
    }
}

/// Single harmonic `Y_{n,k}(p)`.
pub fn ylm(n: usize, k: i64, p: UnitVector) -> Result<f64> {
    if k.unsigned_abs() as usize > n {
        return Err(invalid(format!("order {k} out of range for degree {n}")));
    }
    let mut ev = HarmonicEvaluator::new(n);
    ev.eval(p, false);
    Ok(ev.y[coeff_index(n, k)])
}

/// Surface gradient of `Y_{n,k}` at `p`.
pub fn grad_ylm(n: usize, k: i64, p: UnitVector) -> Result<Vec3> {
    if k.unsigned_abs() as usize > n {
        return Err(invalid(format!("order {k} out of range for degree {n}")));
    }
    let mut ev = HarmonicEvaluator::new(n);
    ev.eval(p, true);
    Ok(ev.grad(coeff_index(n, k)))
}

/// All `Y_{n,k}(p)` for `n <= max_degree`, row-major.
pub fn ylm_all(max_degree: usize, p: UnitVector) -> Vec<f64> {
    let mut ev = HarmonicEvaluator::new(max_degree);
    ev.eval(p, false);
    ev.y
}

/// Real-harmonic expansion of a scalar field, truncated at `max_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalarField {
    max_degree: usize,
    coeffs: Vec<f64>,
}

impl SpectralScalarField {
    pub fn zeros(max_degree: usize) -> Self {
        SpectralScalarField {
            max_degree,
            coeffs: vec![0.0; num_coeffs(max_degree)],
        }
    }

    pub fn from_coeffs(max_degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != num_coeffs(max_degree) {
            return Err(invalid(format!(
                "expected {} coefficients for degree {max_degree}, got {}",
                num_coeffs(max_degree),
                coeffs.len()
            )));
        }
        Ok(SpectralScalarField { max_degree, coeffs })
    }

    /// Field with coefficients `a_n Y_{n,k}(center)`: the expansion of the
    /// zonal function `sum_n a_n (2n+1)/(4 pi) P_n(center . x)`.
    pub fn zonal(a: &[f64], center: UnitVector) -> Self {
        let max_degree = a.len().saturating_sub(1);
        let mut ev = HarmonicEvaluator::new(max_degree);
        ev.eval(center, false);
        let mut coeffs = ev.y;
        for (n, an) in a.iter().enumerate() {
            for c in &mut coeffs[n * n..(n + 1) * (n + 1)] {
                *c *= an;
            }
        }
        SpectralScalarField { max_degree, coeffs }
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, n: usize, k: i64) -> f64 {
        self.coeffs[coeff_index(n, k)]
    }

    pub fn set(&mut self, n: usize, k: i64, v: f64) {
        self.coeffs[coeff_index(n, k)] = v;
    }

    /// Coefficients of degree `n`, orders `-n..=n`.
    pub fn degree(&self, n: usize) -> &[f64] {
        &self.coeffs[n * n..(n + 1) * (n + 1)]
    }

    /// Truncates or zero-pads to `max_degree`.
    pub fn with_degree(&self, max_degree: usize) -> Self {
        let mut out = Self::zeros(max_degree);
        let k = num_coeffs(max_degree.min(self.max_degree));
        out.coeffs[..k].copy_from_slice(&self.coeffs[..k]);
        out
    }

    /// Multiplies degree `n` by `f(n)`.
    pub fn map_degrees(&self, f: impl Fn(usize) -> f64) -> Self {
        let mut out = self.clone();
        for n in 0..=self.max_degree {
            let s = f(n);
            for c in &mut out.coeffs[n * n..(n + 1) * (n + 1)] {
                *c *= s;
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &SpectralScalarField, s: f64) {
        let k = self.coeffs.len().min(other.coeffs.len());
        for (a, b) in self.coeffs[..k].iter_mut().zip(&other.coeffs[..k]) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_degrees(|_| s)
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn l2_inner(&self, other: &SpectralScalarField) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn evaluate(&self, p: UnitVector) -> f64 {
        let mut ev = HarmonicEvaluator::new(self.max_degree);
        self.evaluate_with(&mut ev, p)
    }

    pub fn evaluate_with(&self, ev: &mut HarmonicEvaluator, p: UnitVector) -> f64 {
        ev.eval(p, false);
        self.coeffs.iter().zip(&ev.y).map(|(a, b)| a * b).sum()
    }

    pub fn evaluate_many(&self, points: &[UnitVector]) -> Vec<f64> {
        let mut ev = HarmonicEvaluator::new(self.max_degree);
        points.iter().map(|p| self.evaluate_with(&mut ev, *p)).collect()
    }

    pub fn gradient(&self, p: UnitVector) -> Vec3 {
        let mut ev = HarmonicEvaluator::new(self.max_degree);
        ev.eval(p, true);
        let (mut a, mut b) = (0.0, 0.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            a += c * ev.dtheta[i];
            b += c * ev.dphi[i];
        }
        ev.e_theta * a + ev.e_phi * b
    }

    /// `||f||_{H^s}^2 = sum (n + 1/2)^(2s) sum_k f_{n,k}^2`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        (0..=self.max_degree)
            .map(|n| {
                let w = (n as f64 + 0.5).powf(2.0 * s);
                w * self.degree(n).iter().map(|c| c * c).sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Serialize, Deserialize)]
struct ScalarFieldJson {
    max_degree: usize,
    coeffs: Vec<Vec<f64>>,
}

impl Serialize for SpectralScalarField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ScalarFieldJson {
            max_degree: self.max_degree,
            coeffs: (0..=self.max_degree).map(|n| self.degree(n).to_vec()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralScalarField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = ScalarFieldJson::deserialize(d)?;
        if j.coeffs.len() != j.max_degree + 1 || j.coeffs.iter().enumerate().any(|(n, r)| r.len() != 2 * n + 1) {
            return Err(serde::de::Error::custom("coefficient rows do not match max_degree"));
        }
        Ok(SpectralScalarField {
            max_degree: j.max_degree,
            coeffs: j.coeffs.concat(),
        })
    }
}

/// Surface Sobolev norm `||f||_{H^s}`.
pub fn sobolev_norm(f: &SpectralScalarField, s: f64) -> f64 {
    f.sobolev_norm(s)
}

/// Laplace-Beltrami operator, symbol `-n(n+1)`.
pub fn laplace_beltrami(f: &SpectralScalarField) -> SpectralScalarField {
    f.map_degrees(|n| -((n * (n + 1)) as f64))
}

/// Convolution with the zonal kernel `sum_n g_n (2n+1)/(4 pi) P_n(x . y)`:
/// degree `n` is multiplied by `g_n`.
pub fn zonal_convolve(zonal: &[f64], f: &SpectralScalarField) -> SpectralScalarField {
    f.map_degrees(|n| zonal.get(n).copied().unwrap_or(0.0))
}

/// Expansion of a vector field in the basis `b+_{n,k}`, `b-_{n,k}`,
/// `c_{n,k}`. The `plus` and `toroidal` degree-0 entries are always zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralVectorField {
    pub plus: SpectralScalarField,
    pub minus: SpectralScalarField,
    pub toroidal: SpectralScalarField,
}

impl SpectralVectorField {
    pub fn zeros(max_degree: usize) -> Self {
        SpectralVectorField {
            plus: SpectralScalarField::zeros(max_degree),
            minus: SpectralScalarField::zeros(max_degree),
            toroidal: SpectralScalarField::zeros(max_degree),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.plus.max_degree()
    }

    /// Radial, gradient-potential and stream-function coefficients, so that
    /// `F = eta R + grad P + eta x grad T`.
    pub fn to_rpt(&self) -> (SpectralScalarField, SpectralScalarField, SpectralScalarField) {
        let nmax = self.max_degree();
        let mut r = SpectralScalarField::zeros(nmax);
        let mut p = SpectralScalarField::zeros(nmax);
        let mut t = SpectralScalarField::zeros(nmax);
        for n in 0..=nmax {
            let nf = n as f64;
            let d = 2.0 * nf + 1.0;
            let tor = if n == 0 { 0.0 } else { 1.0 / (nf * (nf + 1.0)).sqrt() };
            for i in n * n..(n + 1) * (n + 1) {
                let (fp, fm) = (self.plus.coeffs[i], self.minus.coeffs[i]);
                r.coeffs[i] = (-nf * fp + (nf + 1.0) * fm) / d;
                p.coeffs[i] = -(fp + fm) / d;
                t.coeffs[i] = tor * self.toroidal.coeffs[i];
            }
        }
        (r, p, t)
    }

    pub fn evaluate_many(&self, points: &[UnitVector]) -> Vec<Vec3> {
        let (r, p, t) = self.to_rpt();
        eval_rpt(&r, &p, &t, points)
    }
}

/// Evaluates `eta R + grad P + eta x grad T` at the given points.
pub fn eval_rpt(
    r: &SpectralScalarField,
    p: &SpectralScalarField,
    t: &SpectralScalarField,
    points: &[UnitVector],
) -> Vec<Vec3> {
    let nmax = r.max_degree().max(p.max_degree()).max(t.max_degree());
    let mut ev = HarmonicEvaluator::new(nmax);
    points
        .iter()
        .map(|x| {
            ev.eval(*x, true);
            let mut rad = 0.0;
            let (mut gt, mut gp, mut ct, mut cp) = (0.0, 0.0, 0.0, 0.0);
            for (i, c) in r.coeffs.iter().enumerate() {
                rad += c * ev.y[i];
            }
            for (i, c) in p.coeffs.iter().enumerate() {
                gt += c * ev.dtheta[i];
                gp += c * ev.dphi[i];
            }
            for (i, c) in t.coeffs.iter().enumerate() {
                ct += c * ev.dtheta[i];
                cp += c * ev.dphi[i];
            }
            // eta x (a e_theta + b e_phi) = a e_phi - b e_theta
            x.vec() * rad + ev.e_theta * (gt - cp) + ev.e_phi * (gp + ct)
        })
        .collect()
}

/// Builds the vector field `sum f+ b+ + f- b- + d c` from its parts.
pub fn synthesize_vector(field: &SpectralVectorField, points: &[UnitVector]) -> Vec<Vec3> {
    field.evaluate_many(points)
}

/// Product grid of latitude rings: `cos(theta)` nodes with weights, times
/// `nlon` equispaced longitudes. The weight of a grid point is
/// `w_j * 2 pi / nlon`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingGrid {
    t: Vec<f64>,
    w: Vec<f64>,
    nlon: usize,
}

impl RingGrid {
    /// Gauss-Legendre latitudes on the full sphere.
    pub fn gauss(nlat: usize, nlon: usize) -> Self {
        let (t, w) = gauss_legendre(nlat);
        RingGrid { t, w, nlon }
    }

    /// Gauss-Legendre latitudes on the band `t_lo <= cos(theta) <= t_hi`.
    pub fn band(t_lo: f64, t_hi: f64, nlat: usize, nlon: usize) -> Self {
        let (t, w) = gauss_legendre_interval(nlat, t_lo, t_hi);
        RingGrid { t, w, nlon }
    }

    /// Smallest Gauss grid analysing degree `max_degree` exactly.
    pub fn for_degree(max_degree: usize) -> Self {
        Self::gauss(max_degree + 1, 2 * max_degree + 1)
    }

    pub fn nlat(&self) -> usize {
        self.t.len()
    }

    pub fn nlon(&self) -> usize {
        self.nlon
    }

    pub fn len(&self) -> usize {
        self.t.len() * self.nlon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ring_t(&self) -> &[f64] {
        &self.t
    }

    pub fn ring_weights(&self) -> &[f64] {
        &self.w
    }

    pub fn phi(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.nlon as f64
    }

    /// Grid points in ring-major order.
    pub fn points(&self) -> Vec<UnitVector> {
        let mut out = Vec::with_capacity(self.len());
        for &t in &self.t {
            let s = (1.0 - t * t).max(0.0).sqrt();
            for i in 0..self.nlon {
                let (sp, cp) = self.phi(i).sin_cos();
                out.push(UnitVector::new(s * cp, s * sp, t).expect("unit"));
            }
        }
        out
    }

    /// Quadrature weights in ring-major order.
    pub fn weights(&self) -> Vec<f64> {
        let dphi = 2.0 * PI / self.nlon as f64;
        self.w
            .iter()
            .flat_map(|&w| std::iter::repeat_n(w * dphi, self.nlon))
            .collect()
    }

    pub fn sample(&self, f: impl Fn(UnitVector) -> f64) -> Vec<f64> {
        self.points().into_iter().map(f).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    fn check(&self, max_degree: usize, need_lat: usize, need_lon: usize, len: usize) -> Result<()> {
        if self.nlat() < need_lat || self.nlon < need_lon {
            return Err(Error::GridTooSmall {
                degree: max_degree,
                need_lat,
                need_lon,
            });
        }
        if len != self.len() {
            return Err(invalid(format!("expected {} samples, got {len}", self.len())));
        }
        Ok(())
    }
}

/// Fourier sums `sum_i v_i cos(m phi_i)` and `sum_i v_i sin(m phi_i)` of one ring.
struct RingDft {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl RingDft {
    fn new(nlon: usize) -> Self {
        let (sin, cos) = (0..nlon).map(|i| (2.0 * PI * i as f64 / nlon as f64).sin_cos()).unzip();
        RingDft { cos, sin }
    }

    fn forward(&self, v: &[f64], mmax: usize, c: &mut [f64], s: &mut [f64]) {
        let n = v.len();
        for m in 0..=mmax {
            let (mut a, mut b) = (0.0, 0.0);
            let mut idx = 0usize;
            let step = m % n;
            for &vi in v {
                a += vi * self.cos[idx];
                b += vi * self.sin[idx];
                idx += step;
                if idx >= n {
                    idx -= n;
                }
            }
            c[m] = a;
            s[m] = b;
        }
    }

    fn inverse(&self, c: &[f64], s: &[f64], out: &mut [f64]) {
        let n = out.len();
        out.iter_mut().for_each(|o| *o = 0.0);
        for m in 0..c.len() {
            let step = m % n;
            let mut idx = 0usize;
            for o in out.iter_mut() {
                *o += c[m] * self.cos[idx] + s[m] * self.sin[idx];
                idx += step;
                if idx >= n {
                    idx -= n;
                }
            }
        }
    }
}

/// Scalar analysis on a ring grid. Exact for band-limited data when the
/// grid is a Gauss grid with at least `N + 1` latitudes and `2N + 1`
/// longitudes.
pub fn analyze(grid: &RingGrid, values: &[f64], max_degree: usize) -> Result<SpectralScalarField> {
    grid.check(max_degree, max_degree + 1, 2 * max_degree + 1, values.len())?;
    let nlon = grid.nlon;
    let dft = RingDft::new(nlon);
    let mut lg = AssocLegendre::new(max_degree);
    let mut c = vec![0.0; max_degree + 1];
    let mut s = vec![0.0; max_degree + 1];
    let mut out = SpectralScalarField::zeros(max_degree);
    let dphi = 2.0 * PI / nlon as f64;
    let r2 = 2f64.sqrt();
    for (j, (&t, &w)) in grid.t.iter().zip(&grid.w).enumerate() {
        dft.forward(&values[j * nlon..(j + 1) * nlon], max_degree, &mut c, &mut s);
        lg.compute(t, (1.0 - t * t).max(0.0).sqrt(), false);
        let wj = w * dphi;
        for n in 0..=max_degree {
            let base = n * n + n;
            out.coeffs[base] += wj * lg.p(n, 0) * c[0];
            for m in 1..=n {
                let pv = wj * r2 * lg.p(n, m);
                out.coeffs[base + m] += pv * c[m];
                out.coeffs[base - m] += pv * s[m];
            }
        }
    }
    Ok(out)
}

/// Values of `f` at the grid points, ring-major.
pub fn synthesize_grid(f: &SpectralScalarField, grid: &RingGrid) -> Vec<f64> {
    let nmax = f.max_degree;
    let nlon = grid.nlon;
    let dft = RingDft::new(nlon);
    let mut lg = AssocLegendre::new(nmax);
    let mut c = vec![0.0; nmax + 1];
    let mut s = vec![0.0; nmax + 1];
    let mut out = vec![0.0; grid.len()];
    let r2 = 2f64.sqrt();
    for (j, &t) in grid.t.iter().enumerate() {
        lg.compute(t, (1.0 - t * t).max(0.0).sqrt(), false);
        c.iter_mut().for_each(|x| *x = 0.0);
        s.iter_mut().for_each(|x| *x = 0.0);
        for n in 0..=nmax {
            let base = n * n + n;
            c[0] += f.coeffs[base] * lg.p(n, 0);
            for m in 1..=n {
                let pv = r2 * lg.p(n, m);
                c[m] += f.coeffs[base + m] * pv;
                s[m] += f.coeffs[base - m] * pv;
            }
        }
        dft.inverse(&c, &s, &mut out[j * nlon..(j + 1) * nlon]);
    }
    out
}

/// Splits a sampled vector field into `b+`, `b-` and `c` coefficients.
///
/// With `R = <F.eta, Y>` and `G = <F, grad Y>`, the coefficients are
/// `f+ = -(nR + G)/n`, `f- = ((n+1)R - G)/(n+1)` and
/// `d = <F, eta x grad Y> / sqrt(n(n+1))`. Exact on Gauss grids with
/// `N + 2` latitudes and `2N + 3` longitudes for fields of degree `N`.
pub fn decompose_vector(grid: &RingGrid, values: &[Vec3], max_degree: usize) -> Result<SpectralVectorField> {
    grid.check(max_degree, max_degree + 2, 2 * max_degree + 3, values.len())?;
    let nlon = grid.nlon;
    let dft = RingDft::new(nlon);
    let mut lg = AssocLegendre::new(max_degree);
    let mm = max_degree + 1;
    let (mut cr, mut sr) = (vec![0.0; mm], vec![0.0; mm]);
    let (mut ct, mut st) = (vec![0.0; mm], vec![0.0; mm]);
    let (mut cp, mut sp) = (vec![0.0; mm], vec![0.0; mm]);
    let (mut fr, mut ft, mut fp) = (vec![0.0; nlon], vec![0.0; nlon], vec![0.0; nlon]);
    let nc = num_coeffs(max_degree);
    let (mut rr, mut gg, mut dd) = (vec![0.0; nc], vec![0.0; nc], vec![0.0; nc]);
    let dphi = 2.0 * PI / nlon as f64;
    let r2 = 2f64.sqrt();
    let trig: Vec<(f64, f64)> = (0..nlon).map(|i| grid.phi(i).sin_cos()).collect();
    for (j, (&t, &w)) in grid.t.iter().zip(&grid.w).enumerate() {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for i in 0..nlon {
            let (sphi, cphi) = trig[i];
            let v = values[j * nlon + i];
            let er = Vec3::new(s * cphi, s * sphi, t);
            let et = Vec3::new(t * cphi, t * sphi, -s);
            let ep = Vec3::new(-sphi, cphi, 0.0);
            fr[i] = v.dot(er);
            ft[i] = v.dot(et);
            fp[i] = v.dot(ep);
        }
        dft.forward(&fr, max_degree, &mut cr, &mut sr);
        dft.forward(&ft, max_degree, &mut ct, &mut st);
        dft.forward(&fp, max_degree, &mut cp, &mut sp);
        lg.compute(t, s, true);
        let wj = w * dphi;
        for n in 0..=max_degree {
            let base = n * n + n;
            rr[base] += wj * lg.p(n, 0) * cr[0];
            gg[base] += wj * lg.dp(n, 0) * ct[0];
            dd[base] += wj * lg.dp(n, 0) * cp[0];
            for m in 1..=n {
                let pv = wj * r2 * lg.p(n, m);
                let dv = wj * r2 * lg.dp(n, m);
                let qv = wj * r2 * m as f64 * lg.p_over_sin(n, m);
                rr[base + m] += pv * cr[m];
                rr[base - m] += pv * sr[m];
                gg[base + m] += dv * ct[m] - qv * sp[m];
                gg[base - m] += dv * st[m] + qv * cp[m];
                dd[base + m] += dv * cp[m] + qv * st[m];
                dd[base - m] += dv * sp[m] - qv * ct[m];
            }
        }
    }
    let mut out = SpectralVectorField::zeros(max_degree);
    out.minus.coeffs[0] = rr[0];
    for n in 1..=max_degree {
        let nf = n as f64;
        let tor = 1.0 / (nf * (nf + 1.0)).sqrt();
        for i in n * n..(n + 1) * (n + 1) {
            out.plus.coeffs[i] = -(nf * rr[i] + gg[i]) / nf;
            out.minus.coeffs[i] = ((nf + 1.0) * rr[i] - gg[i]) / (nf + 1.0);
            out.toroidal.coeffs[i] = dd[i] * tor;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_geom::fibonacci_points;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(n: usize, seed: u64) -> SpectralScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..num_coeffs(n)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SpectralScalarField::from_coeffs(n, c).unwrap()
    }

    /// Closed forms in Cartesian coordinates.
    fn oracle(n: usize, k: i64, p: UnitVector) -> f64 {
        let (x, y, z) = (p.x(), p.y(), p.z());
        let f = 1.0 / PI.sqrt();
        match (n, k) {
            (0, 0) => 0.5 * f,
            (1, -1) => 0.5 * 3f64.sqrt() * f * y,
            (1, 0) => 0.5 * 3f64.sqrt() * f * z,
            (1, 1) => 0.5 * 3f64.sqrt() * f * x,
            (2, -2) => 0.5 * 15f64.sqrt() * f * x * y,
            (2, -1) => 0.5 * 15f64.sqrt() * f * y * z,
            (2, 0) => 0.25 * 5f64.sqrt() * f * (3.0 * z * z - 1.0),
            (2, 1) => 0.5 * 15f64.sqrt() * f * x * z,
            (2, 2) => 0.25 * 15f64.sqrt() * f * (x * x - y * y),
            _ => unreachable!(),
        }
    }

    #[test]
    fn low_degree_harmonics_match_closed_forms() {
        for p in fibonacci_points(50) {
            for n in 0..=2usize {
                for k in -(n as i64)..=(n as i64) {
                    assert!((ylm(n, k, p).unwrap() - oracle(n, k, p)).abs() < 1e-14);
                }
            }
        }
        assert!((ylm(0, 0, UnitVector::E3).unwrap() - 0.28209479177387814).abs() < 1e-16);
    }

    #[test]
    fn order_out_of_range_is_an_error() {
        assert!(ylm(2, 3, UnitVector::E1).is_err());
    }

    #[test]
    fn legendre_argument_checked() {
        assert!(legendre_all(1.5, 3).is_err());
        let p = legendre_all(1.0, 10).unwrap();
        assert!(p.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn clenshaw_matches_direct_sum() {
        let c: Vec<f64> = (0..30).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let t = 0.37;
        let p = legendre_all(t, 29).unwrap();
        let direct: f64 = c.iter().zip(&p).map(|(a, b)| a * b).sum();
        assert!((legendre_series(&c, t) - direct).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(7);
        for k in 0..14 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k={k}");
        }
        let (x, _) = gauss_legendre(2);
        assert!((x[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let n = 7;
        let eps = 1e-6;
        for p in fibonacci_points(20) {
            for k in -(n as i64)..=(n as i64) {
                let g = grad_ylm(n, k, p).unwrap();
                let (et, ep) = tangent_frame(p);
                let (th, ph) = (p.theta(), p.phi());
                let f = |th: f64, ph: f64| ylm(n, k, UnitVector::from_spherical(th, ph)).unwrap();
                let d_th = (f(th + eps, ph) - f(th - eps, ph)) / (2.0 * eps);
                let d_ph = (f(th, ph + eps) - f(th, ph - eps)) / (2.0 * eps) / th.sin();
                assert!((g.dot(et) - d_th).abs() < 1e-7);
                assert!((g.dot(ep) - d_ph).abs() < 1e-7);
                assert!(g.dot(p.vec()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn gradient_is_finite_at_the_poles() {
        // Y_{1,1} = c x has gradient c e1 at the north pole
        let c = 0.5 * (3.0 / PI).sqrt();
        let g = grad_ylm(1, 1, UnitVector::E3).unwrap();
        assert!((g.x - c).abs() < 1e-15 && g.y.abs() < 1e-15 && g.z.abs() < 1e-15);
        let g = grad_ylm(1, -1, UnitVector::E3.antipode()).unwrap();
        assert!(g.x.abs() < 1e-15 && (g.y - c).abs() < 1e-15);
    }

    #[test]
    fn analysis_inverts_synthesis() {
        let n = 40;
        let f = random_field(n, 1);
        let grid = RingGrid::for_degree(n);
        let v = synthesize_grid(&f, &grid);
        let g = analyze(&grid, &v, n).unwrap();
        let err = f
            .coeffs
            .iter()
            .zip(&g.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "err = {err}");
    }

    #[test]
    fn undersized_grid_is_rejected() {
        let grid = RingGrid::gauss(10, 30);
        let v = vec![0.0; grid.len()];
        assert!(matches!(analyze(&grid, &v, 10), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn grid_synthesis_matches_pointwise() {
        let f = random_field(12, 2);
        let grid = RingGrid::gauss(9, 17);
        let v = synthesize_grid(&f, &grid);
        let w = f.evaluate_many(&grid.points());
        for (a, b) in v.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn vector_decomposition_inverts_synthesis() {
        let n = 20;
        let mut field = SpectralVectorField {
            plus: random_field(n, 3),
            minus: random_field(n, 4),
            toroidal: random_field(n, 5),
        };
        field.plus.coeffs[0] = 0.0;
        field.toroidal.coeffs[0] = 0.0;
        let grid = RingGrid::gauss(n + 2, 2 * n + 3);
        let v = field.evaluate_many(&grid.points());
        let back = decompose_vector(&grid, &v, n).unwrap();
        for (a, b) in [
            (&field.plus, &back.plus),
            (&field.minus, &back.minus),
            (&field.toroidal, &back.toroidal),
        ] {
            let err = a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-11, "err = {err}");
        }
    }

    #[test]
    fn basis_norms() {
        // ||b+||^2 = n/(2n+1), ||b-||^2 = (n+1)/(2n+1), via the grid quadrature
        let n = 3;
        let grid = RingGrid::gauss(n + 2, 2 * n + 3);
        let w = grid.weights();
        for (sel, expect) in [(0, n as f64 / 7.0), (1, (n + 1) as f64 / 7.0), (2, 1.0)] {
            let mut f = SpectralVectorField::zeros(n);
            let target = match sel {
                0 => &mut f.plus,
                1 => &mut f.minus,
                _ => &mut f.toroidal,
            };
            target.set(n, 1, 1.0);
            let v = f.evaluate_many(&grid.points());
            let q: f64 = v.iter().zip(&w).map(|(x, w)| w * x.dot(*x)).sum();
            assert!((q - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn json_round_trip() {
        let f = random_field(4, 6);
        let s = serde_json::to_string(&f).unwrap();
        let g: SpectralScalarField = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn zonal_field_evaluates_addition_theorem() {
        let a = [0.3, -1.0, 0.25, 2.0];
        let c = UnitVector::new(0.2, 0.4, -0.7).unwrap();
        let f = SpectralScalarField::zonal(&a, c);
        for p in fibonacci_points(10) {
            let t = c.dot(p);
            let pn = legendre_all(t, 3).unwrap();
            let direct: f64 = (0..4).map(|n| a[n] * (2 * n + 1) as f64 / (4.0 * PI) * pn[n]).sum();
            assert!((f.evaluate(p) - direct).abs() < 1e-14);
        }
    }
}
