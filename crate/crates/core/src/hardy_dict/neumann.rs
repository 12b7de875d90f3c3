//! Neumann problem for the Laplace-Beltrami operator on a spherical cap.
//!
//! In the stereographic coordinate `w = tan(theta/2) e^{i phi}` about the cap
//! center, `Re z^k` and `Im z^k` are harmonic on the sphere away from the
//! antipode, because the Laplace-Beltrami operator is a conformal multiple of
//! the planar Laplacian. With `z = w / tan(theta_0/2)` the normal derivative of
//! `Re z^k` on the rim is `k cos(k phi) / sin(theta_0)`, so boundary Fourier
//! coefficients give the expansion directly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::GreenDifferenceAtom;
use crate::sphere_geom::{Frame, SphericalCap, UnitVector, Vec3};

pub const DEFAULT_BOUNDARY_POINTS: usize = 256;
pub const DEFAULT_MODES: usize = 128;

/// Net boundary flux accepted as compatible.
const FLUX_TOLERANCE: f64 = 1e-8;

/// Mean-zero harmonic function on a cap with prescribed normal derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeumannSolution {
    pub cap: SphericalCap,
    /// `a_k` of `Re z^k`, `k = 1..=K`.
    pub cos_coeffs: Vec<f64>,
    /// `b_k` of `Im z^k`.
    pub sin_coeffs: Vec<f64>,
    /// Trapezoidal net flux of the boundary data.
    pub net_flux: f64,
    /// Largest boundary data magnitude at the collocation points.
    pub data_sup: f64,
    /// Largest misfit of the normal derivative at the rim midpoints between
    /// collocation points.
    pub boundary_residual: f64,
}

struct CapCoords {
    frame: Frame,
    tan0: f64,
}

impl CapCoords {
    fn new(cap: &SphericalCap) -> Self {
        CapCoords {
            frame: Frame::new(cap.center),
            tan0: (0.5 * cap.angular_radius()).tan(),
        }
    }

    /// `z` and the local coordinates of `y`.
    fn z(&self, y: UnitVector) -> ((f64, f64), Vec3) {
        let l = self.frame.local(y.vec());
        let d = 1.0 + l.z;
        ((l.x / (d * self.tan0), l.y / (d * self.tan0)), l)
    }

    fn rim_point(&self, theta0: f64, phi: f64) -> (UnitVector, Vec3) {
        let p = self.frame.point(theta0, phi);
        let (s, c) = theta0.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let e_theta = self.frame.global(Vec3::new(c * cp, c * sp, -s));
        (p, e_theta)
    }
}

impl NeumannSolution {
    /// Solves with boundary data `g(phi)` sampled at `m` equispaced rim points
    /// and `modes` Fourier modes.
    pub fn from_flux(
        cap: SphericalCap,
        flux: impl Fn(UnitVector, Vec3) -> f64,
        m: usize,
        modes: usize,
    ) -> Result<Self> {
        if m < 8 || modes == 0 || 2 * modes > m {
            return Err(invalid(format!(
                "need m >= 8 and 1 <= modes <= m/2, got m={m}, modes={modes}"
            )));
        }
        let theta0 = cap.angular_radius();
        if !(theta0 > 0.0 && theta0 < PI - 1e-6) {
            return Err(Error::Neumann("cap must be a proper cap".into()));
        }
        let cc = CapCoords::new(&cap);
        let g: Vec<f64> = (0..m)
            .map(|j| {
                let (p, nu) = cc.rim_point(theta0, 2.0 * PI * j as f64 / m as f64);
                flux(p, nu)
            })
            .collect();
        let data_sup = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let sin0 = theta0.sin();
        let net_flux = g.iter().sum::<f64>() * 2.0 * PI * sin0 / m as f64;
        if net_flux.abs() > FLUX_TOLERANCE * data_sup.max(1.0) {
            return Err(Error::Neumann(format!("boundary data has net flux {net_flux:.3e}")));
        }
        let mut cos_coeffs = vec![0.0; modes];
        let mut sin_coeffs = vec![0.0; modes];
        for k in 1..=modes {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, gj) in g.iter().enumerate() {
                let (s, c) = (2.0 * PI * (k * j) as f64 / m as f64).sin_cos();
                a += gj * c;
                b += gj * s;
            }
            // Nyquist mode is counted once
            let norm = if 2 * k == m { 1.0 } else { 2.0 } / m as f64;
            cos_coeffs[k - 1] = sin0 * a * norm / k as f64;
            sin_coeffs[k - 1] = sin0 * b * norm / k as f64;
        }
        let mut sol = NeumannSolution {
            cap,
            cos_coeffs,
            sin_coeffs,
            net_flux,
            data_sup,
            boundary_residual: 0.0,
        };
        let mut res = 0.0f64;
        for j in 0..m {
            let (p, nu) = cc.rim_point(theta0, 2.0 * PI * (j as f64 + 0.5) / m as f64);
            res = res.max((sol.gradient(p).dot(nu) - flux(p, nu)).abs());
        }
        sol.boundary_residual = res;
        Ok(sol)
    }

    /// `Re F(z)` and `F'(z)` for `F(z) = sum_k (a_k - i b_k) z^k`.
    fn series(&self, z: (f64, f64)) -> (f64, (f64, f64)) {
        let (mut zr, mut zi) = (1.0, 0.0);
        let (mut val, mut dr, mut di) = (0.0, 0.0, 0.0);
        for (k, (a, b)) in self.cos_coeffs.iter().zip(&self.sin_coeffs).enumerate() {
            let kf = (k + 1) as f64;
            // z^k from z^(k-1)
            let (pr, pi) = (zr, zi);
            // F' term: k c_k z^(k-1)
            dr += kf * (a * pr + b * pi);
            di += kf * (a * pi - b * pr);
            zr = pr * z.0 - pi * z.1;
            zi = pr * z.1 + pi * z.0;
            val += a * zr + b * zi;
        }
        (val, (dr, di))
    }

    pub fn value(&self, y: UnitVector) -> f64 {
        let cc = CapCoords::new(&self.cap);
        self.series(cc.z(y).0).0
    }

    /// Surface gradient.
    pub fn gradient(&self, y: UnitVector) -> Vec3 {
        let cc = CapCoords::new(&self.cap);
        let (z, l) = cc.z(y);
        let (_, (dr, di)) = self.series(z);
        // planar gradient in w = tan0 z, then the conformal factor (1+|w|^2)/2
        let d = 1.0 + l.z;
        let w2 = (l.x * l.x + l.y * l.y) / (d * d);
        let f = 0.5 * (1.0 + w2) / cc.tan0;
        let ex = Vec3::new(1.0 - l.x * l.x / d, -l.x * l.y / d, -l.x);
        let ey = Vec3::new(-l.x * l.y / d, 1.0 - l.y * l.y / d, -l.y);
        cc.frame.global(ex * (f * dr) + ey * (-f * di))
    }

    /// Largest second-order finite-difference Laplace-Beltrami value at the
    /// probes, step `h` along two orthogonal great circles.
    pub fn laplacian_residual(&self, probes: &[UnitVector], h: f64) -> f64 {
        let mut worst = 0.0f64;
        let (s, c) = h.sin_cos();
        for y in probes {
            let (e1, e2) = crate::harmonics::tangent_frame(*y);
            let v0 = self.value(*y);
            let mut lap = 0.0;
            for e in [e1, e2] {
                let plus = UnitVector::from_vec(y.vec() * c + e * s).expect("unit");
                let minus = UnitVector::from_vec(y.vec() * c - e * s).expect("unit");
                lap += (self.value(plus) + self.value(minus) - 2.0 * v0) / (h * h);
            }
            worst = worst.max(lap.abs());
        }
        worst
    }
}

/// `N^rho_{x,xbar}` on `cap`: harmonic, mean zero, with the normal derivative
/// of `G^rho(x, .) - G^rho(xbar, .)` on the rim.
pub fn neumann_cap_solve(
    x: UnitVector,
    xbar: UnitVector,
    rho: f64,
    cap: SphericalCap,
    m: usize,
) -> Result<NeumannSolution> {
    let atom = GreenDifferenceAtom { x, xbar, rho };
    NeumannSolution::from_flux(cap, |p, nu| atom.gradient(p).dot(nu), m, m / 2)
}
