//! Cap-supported benchmark field `Q(x) (3 (x . d) x - d)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::harmonics::{RingGrid, SpectralVectorField};
use crate::potentials::hardy_hodge_decompose;
use crate::sphere_geom::{UnitVector, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    /// Support is `t = x . e3 > a`.
    pub a: f64,
    pub d: Vec3,
}

impl Default for TestField {
    fn default() -> Self {
        TestField {
            a: 0.9,
            d: Vec3::new(0.0, 0.6, 0.8),
        }
    }
}

impl TestField {
    pub fn new(a: f64, d: Vec3) -> Result<Self> {
        if !(a > -1.0 && a < 1.0) {
            return Err(invalid(format!("a must lie in (-1, 1), got {a}")));
        }
        Ok(TestField { a, d })
    }

    /// `(t - a)^3 (t - 1)^2 (phi - 2pi)^3 sin(2 phi) phi^3` for `t > a`.
    pub fn q(&self, x: UnitVector) -> f64 {
        let t = x.z();
        if t <= self.a {
            return 0.0;
        }
        let phi = x.phi();
        (t - self.a).powi(3) * (t - 1.0).powi(2) * (phi - 2.0 * PI).powi(3) * (2.0 * phi).sin() * phi.powi(3)
    }

    pub fn eval(&self, x: UnitVector) -> Vec3 {
        let q = self.q(x);
        if q == 0.0 {
            return Vec3::new(0.0, 0.0, 0.0);
        }
        (x.vec() * (3.0 * x.vec().dot(self.d)) - self.d) * q
    }

    pub fn eval_many(&self, points: &[UnitVector]) -> Vec<Vec3> {
        points.iter().map(|x| self.eval(*x)).collect()
    }

    /// Hardy-Hodge expansion through degree `max_degree`, from Gauss rings on
    /// the support band.
    pub fn spectral(&self, max_degree: usize) -> Result<SpectralVectorField> {
        let grid = RingGrid::band(self.a, 1.0, max_degree + 64, (2 * max_degree + 3).max(2048));
        let values = self.eval_many(&grid.points());
        hardy_hodge_decompose(&grid, &values, max_degree)
    }
}

pub fn test_field_eval(a: f64, d: Vec3, points: &[UnitVector]) -> Result<Vec<Vec3>> {
    Ok(TestField::new(a, d)?.eval_many(points))
}

/// Expansion of the default field.
pub fn test_field_spectral(max_degree: usize) -> Result<SpectralVectorField> {
    TestField::default().spectral(max_degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_geom::{Domain, SphericalCap};

    #[test]
    fn vanishes_outside_support() {
        let f = TestField::default();
        let cap = SphericalCap::new(UnitVector::E3, 0.1).unwrap();
        for y in Domain::Complement(cap).probe_points(3000) {
            assert_eq!(f.eval(y), Vec3::new(0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn regression_value() {
        let f = TestField::default();
        let (t, phi) = (0.95f64, PI / 4.0);
        let x = UnitVector::from_spherical(t.acos(), phi);
        let q = 0.05f64.powi(3) * 0.05f64.powi(2) * (PI / 4.0 - 2.0 * PI).powi(3) * (PI / 4.0).powi(3);
        assert!((f.q(x) - q).abs() < 1e-12 * q.abs());
        let v = f.eval(x);
        let expect = (x.vec() * (3.0 * x.vec().dot(f.d)) - f.d) * q;
        assert!((v - expect).norm() < 1e-14 * expect.norm());
    }

    #[test]
    fn spectral_expansion_reproduces_the_field() {
        let f = TestField::default();
        let s = f.spectral(100).unwrap();
        // in the interior of the support the truncated expansion is close
        let pts: Vec<UnitVector> = (0..20)
            .map(|i| UnitVector::from_spherical(0.3, 0.3 + 0.28 * i as f64))
            .collect();
        let approx = s.evaluate_many(&pts);
        let scale = pts.iter().map(|p| f.eval(*p).norm()).fold(0.0, f64::max);
        for (p, a) in pts.iter().zip(&approx) {
            assert!((f.eval(*p) - *a).norm() < 0.05 * scale);
        }
    }

    #[test]
    fn bad_support_is_rejected() {
        assert!(TestField::new(1.0, Vec3::new(0.0, 0.0, 1.0)).is_err());
    }
}
