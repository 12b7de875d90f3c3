//! Minimum-norm vector field supported in the cap whose inner Hardy potential
//! is a given dictionary expansion.
//!
//! With `f = sum c_p a_p` the field is `B+ f + B- tau(f) + f_df`, where
//! `B+ f + B- tau(f) = sum_l c_l grad G_l - sum c_ik eta Psi_ik` and
//! `f_df = -sum_l c_l grad G_l` off the cap, `-grad N` on it, `N` the Neumann
//! solution for the combined green data.

use serde::{Deserialize, Serialize};

use super::fit::{map_to_minus, typed_fields};
use super::neumann::NeumannSolution;
use super::{Dictionary, DictionaryAtom, Potential};
use crate::error::{invalid, Result};
use crate::harmonics::{RingGrid, SpectralScalarField, SpectralVectorField};
use crate::potentials::vector_energy;
use crate::sphere_geom::{Domain, Frame, SphericalCap, UnitVector, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinNormOptions {
    /// Rim collocation points of the Neumann solve.
    pub boundary_points: usize,
    /// Probe points off the cap for the vanishing check.
    pub probes: usize,
    /// Truncation degree of the spectral route.
    pub max_degree: usize,
    /// Latitude rings per region of the norm cubature.
    pub quad_nlat: usize,
    pub quad_nlon: usize,
}

impl Default for MinNormOptions {
    fn default() -> Self {
        MinNormOptions {
            boundary_points: 256,
            probes: 2000,
            max_degree: 200,
            quad_nlat: 200,
            quad_nlon: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinNormDiagnostics {
    /// `sup |f~|` over probes off the cap, closed forms throughout.
    pub sup_off_cap: f64,
    /// Same with `B+ f + B- tau(f)` synthesized from its truncated expansion.
    pub sup_off_cap_spectral: f64,
    /// `||f~||_{L^2}` by cubature.
    pub l2_norm: f64,
    /// `||B+ f + B- tau(f)||_{L^2}` by cubature.
    pub hardy_l2: f64,
    /// The same norm from the truncated coefficients.
    pub hardy_l2_spectral: f64,
    /// `||f_df||_{L^2}` by cubature.
    pub df_l2: f64,
    /// `| ||f~||^2 - ||hardy||^2 - ||f_df||^2 | / ||f~||^2`.
    pub pythagoras_rel: f64,
    pub net_flux: f64,
    pub boundary_residual: f64,
    /// Finite-difference Laplace-Beltrami of `N` at interior probes.
    pub laplacian_residual: f64,
    /// `sup` of the Neumann boundary data.
    pub data_sup: f64,
}

pub struct MinNormField<'a> {
    dict: &'a Dictionary,
    coefficients: Vec<f64>,
    neumann: Option<NeumannSolution>,
}

impl<'a> MinNormField<'a> {
    fn green_gradient(&self, y: UnitVector) -> Vec3 {
        let mut g = Vec3::new(0.0, 0.0, 0.0);
        for (a, c) in self.dict.atoms.iter().zip(&self.coefficients) {
            if a.is_green() && *c != 0.0 {
                g = g + a.vector_field(y) * *c;
            }
        }
        g
    }

    fn radial_part(&self, y: UnitVector) -> Vec3 {
        let mut r = Vec3::new(0.0, 0.0, 0.0);
        for (a, c) in self.dict.atoms.iter().zip(&self.coefficients) {
            if let DictionaryAtom::Wendland { center, delta, .. } = a {
                if *c != 0.0 && center.distance(y) < *delta {
                    r = r + a.vector_field(y) * *c;
                }
            }
        }
        r
    }

    /// `B+ f + B- tau(f)` from the closed forms.
    pub fn hardy_part(&self, y: UnitVector) -> Vec3 {
        self.green_gradient(y) - self.radial_part(y)
    }

    pub fn df_part(&self, y: UnitVector) -> Vec3 {
        if self.dict.sigma_c.contains(y) {
            match &self.neumann {
                Some(n) => n.gradient(y) * -1.0,
                None => Vec3::new(0.0, 0.0, 0.0),
            }
        } else {
            self.green_gradient(y) * -1.0
        }
    }

    pub fn evaluate(&self, y: UnitVector) -> Vec3 {
        self.hardy_part(y) + self.df_part(y)
    }

    pub fn neumann(&self) -> Option<&NeumannSolution> {
        self.neumann.as_ref()
    }
}

/// Gauss rings in the frame of `cap`, split at its rim: `(points, weights)`
/// inside and outside.
fn split_cubature(cap: &SphericalCap, nlat: usize, nlon: usize) -> [(Vec<UnitVector>, Vec<f64>); 2] {
    let frame = Frame::new(cap.center);
    let rim = 1.0 - cap.polar_radius;
    let region = |lo: f64, hi: f64| {
        let g = RingGrid::band(lo, hi, nlat, nlon);
        let pts = g
            .points()
            .into_iter()
            .map(|p| UnitVector::from_vec(frame.global(p.vec())).expect("rotation keeps length"))
            .collect();
        (pts, g.weights())
    };
    [region(rim, 1.0), region(-1.0, rim)]
}

fn l2_sq(points: &[UnitVector], weights: &[f64], f: impl Fn(UnitVector) -> Vec3) -> f64 {
    points.iter().zip(weights).map(|(p, w)| w * f(*p).dot(f(*p))).sum()
}

/// Assembles the minimum-norm field for `coefficients` on `dict` and checks
/// it.
pub fn minnorm_assemble<'a>(
    coefficients: &[f64],
    dict: &'a Dictionary,
    opts: &MinNormOptions,
) -> Result<(MinNormField<'a>, MinNormDiagnostics)> {
    if coefficients.len() != dict.len() {
        return Err(invalid(format!(
            "{} coefficients for {} atoms",
            coefficients.len(),
            dict.len()
        )));
    }
    let cap = dict.sigma_c;
    let mut field = MinNormField {
        dict,
        coefficients: coefficients.to_vec(),
        neumann: None,
    };
    let has_green = dict
        .atoms
        .iter()
        .zip(coefficients)
        .any(|(a, c)| a.is_green() && *c != 0.0);
    if has_green {
        let m = opts.boundary_points;
        let sol = NeumannSolution::from_flux(cap, |p, nu| field.green_gradient(p).dot(nu), m, m / 2)?;
        field.neumann = Some(sol);
    }

    let [(cap_pts, cap_w), (out_pts, out_w)] = split_cubature(&cap, opts.quad_nlat, opts.quad_nlon);
    let f_sq = l2_sq(&cap_pts, &cap_w, |y| field.evaluate(y)) + l2_sq(&out_pts, &out_w, |y| field.evaluate(y));
    let hardy_sq = l2_sq(&cap_pts, &cap_w, |y| field.hardy_part(y)) + l2_sq(&out_pts, &out_w, |y| field.hardy_part(y));
    let df_sq = l2_sq(&cap_pts, &cap_w, |y| field.df_part(y)) + l2_sq(&out_pts, &out_w, |y| field.df_part(y));
    let l2_norm = f_sq.sqrt();

    let probes = Domain::Complement(cap).probe_points(opts.probes);
    let sup_off_cap = probes.iter().map(|y| field.evaluate(*y).norm()).fold(0.0, f64::max);

    let nmax = opts.max_degree;
    let mut plus = SpectralScalarField::zeros(nmax);
    for t in typed_fields(coefficients, dict, Potential::Plus, nmax) {
        plus.add_scaled(&t, 1.0);
    }
    let spectral = SpectralVectorField {
        plus,
        minus: map_to_minus(coefficients, dict, nmax),
        toroidal: SpectralScalarField::zeros(nmax),
    };
    let (ep, em, _) = vector_energy(&spectral);
    let hardy_off = spectral.evaluate_many(&probes);
    let sup_off_cap_spectral = probes
        .iter()
        .zip(&hardy_off)
        .map(|(y, h)| (*h + field.df_part(*y)).norm())
        .fold(0.0, f64::max);

    let (net_flux, boundary_residual, data_sup, laplacian_residual) = match &field.neumann {
        Some(n) => {
            let inner = SphericalCap::new(cap.center, 0.95 * cap.polar_radius)?;
            let lap = n.laplacian_residual(&Domain::Cap(inner).probe_points(200), 1e-3);
            (n.net_flux, n.boundary_residual, n.data_sup, lap)
        }
        None => (0.0, 0.0, 0.0, 0.0),
    };

    let diag = MinNormDiagnostics {
        sup_off_cap,
        sup_off_cap_spectral,
        l2_norm,
        hardy_l2: hardy_sq.sqrt(),
        hardy_l2_spectral: (ep + em).sqrt(),
        df_l2: df_sq.sqrt(),
        pythagoras_rel: if f_sq > 0.0 {
            (f_sq - hardy_sq - df_sq).abs() / f_sq
        } else {
            0.0
        },
        net_flux,
        boundary_residual,
        laplacian_residual,
        data_sup,
    };
    Ok((field, diag))
}
