//! Wendland kernel interpolation and multiscale residual correction.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harmonics::SpectralScalarField;
use crate::kernels::{wendland_coeffs, WendlandKernel, WendlandSpectrum};
use crate::linalg::SpdFactor;
use crate::sphere_geom::{filter_ball_interior, Domain, HierarchicalPointSets, SpatialIndex, UnitVector};

/// `s(x) = sum_i alpha_i Psi_delta(x_i, x)`.
#[derive(Serialize, Deserialize)]
#[serde(from = "ModelData")]
pub struct InterpolationModel {
    pub delta: f64,
    pub nodes: Vec<UnitVector>,
    pub alphas: Vec<f64>,
    #[serde(skip)]
    index: Option<SpatialIndex>,
}

#[derive(Deserialize)]
struct ModelData {
    delta: f64,
    nodes: Vec<UnitVector>,
    alphas: Vec<f64>,
}

impl From<ModelData> for InterpolationModel {
    fn from(d: ModelData) -> Self {
        InterpolationModel::new(d.delta, d.nodes, d.alphas)
    }
}

impl std::fmt::Debug for InterpolationModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InterpolationModel")
            .field("delta", &self.delta)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

impl Clone for InterpolationModel {
    fn clone(&self) -> Self {
        InterpolationModel::new(self.delta, self.nodes.clone(), self.alphas.clone())
    }
}

impl InterpolationModel {
    pub fn new(delta: f64, nodes: Vec<UnitVector>, alphas: Vec<f64>) -> Self {
        let index = Some(SpatialIndex::with_cell(&nodes, delta.clamp(0.02, 2.0)));
        InterpolationModel {
            delta,
            nodes,
            alphas,
            index,
        }
    }

    fn index(&self) -> &SpatialIndex {
        self.index.as_ref().expect("index is built on construction")
    }

    pub fn evaluate(&self, x: UnitVector) -> f64 {
        let mut buf = Vec::new();
        self.evaluate_with(x, &mut buf)
    }

    fn evaluate_with(&self, x: UnitVector, buf: &mut Vec<usize>) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let k = WendlandKernel { delta: self.delta };
        self.index().within(x, self.delta, buf);
        buf.iter().map(|&i| self.alphas[i] * k.eval(self.nodes[i], x)).sum()
    }

    pub fn evaluate_many(&self, points: &[UnitVector]) -> Vec<f64> {
        let mut buf = Vec::new();
        points.iter().map(|x| self.evaluate_with(*x, &mut buf)).collect()
    }

    /// Expansion truncated at `max_degree`.
    pub fn spectral(&self, max_degree: usize) -> SpectralScalarField {
        let spec = wendland_coeffs(self.delta, max_degree);
        let mut out = SpectralScalarField::zeros(max_degree);
        for (x, a) in self.nodes.iter().zip(&self.alphas) {
            out.add_scaled(&SpectralScalarField::zonal(&spec.coeffs, *x), *a);
        }
        out
    }

    /// `||s||_Psi^2 = alpha^T A alpha`.
    pub fn native_norm_squared(&self) -> f64 {
        let a = kernel_matrix(&self.nodes, self.delta);
        let mut s = 0.0;
        for i in 0..self.nodes.len() {
            for j in 0..self.nodes.len() {
                s += self.alphas[i] * a[(i, j)] * self.alphas[j];
            }
        }
        s
    }
}

/// Kernel matrix `[Psi_delta(x_i, x_j)]`, assembled through the support radius.
pub fn kernel_matrix(nodes: &[UnitVector], delta: f64) -> Mat<f64> {
    let n = nodes.len();
    let k = WendlandKernel { delta };
    let index = SpatialIndex::with_cell(nodes, delta.clamp(0.02, 2.0));
    let mut a = Mat::<f64>::zeros(n, n);
    let mut buf = Vec::new();
    for i in 0..n {
        index.within(nodes[i], delta, &mut buf);
        for &j in &buf {
            a[(i, j)] = k.eval(nodes[i], nodes[j]);
        }
    }
    a
}

/// Solves `[Psi_delta(x_i, x_j)] alpha = values`.
pub fn interpolate(nodes: &[UnitVector], delta: f64, values: &[f64]) -> Result<InterpolationModel> {
    if nodes.len() != values.len() {
        return Err(invalid(format!("{} nodes but {} values", nodes.len(), values.len())));
    }
    WendlandKernel::new(delta)?;
    if nodes.is_empty() {
        return Ok(InterpolationModel::new(delta, Vec::new(), Vec::new()));
    }
    let a = kernel_matrix(nodes, delta);
    let factor = SpdFactor::new(a.as_ref()).map_err(|_| Error::IllConditioned("ill-conditioned node set".into()))?;
    let alphas = factor.solve(values);
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let resid = crate::linalg::matvec(a.as_ref(), &alphas)
        .iter()
        .zip(values)
        .map(|(r, v)| (r - v).abs())
        .fold(0.0, f64::max);
    if resid > 1e-9 * scale.max(f64::MIN_POSITIVE) && resid > 1e-300 {
        return Err(Error::IllConditioned(format!(
            "ill-conditioned node set: residual {resid:.3e}"
        )));
    }
    Ok(InterpolationModel::new(delta, nodes.to_vec(), alphas))
}

/// Sum of per-level interpolants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiscaleModel {
    pub levels: Vec<InterpolationModel>,
}

impl MultiscaleModel {
    pub fn evaluate(&self, x: UnitVector) -> f64 {
        self.levels.iter().map(|l| l.evaluate(x)).sum()
    }

    pub fn evaluate_many(&self, points: &[UnitVector]) -> Vec<f64> {
        let mut out = vec![0.0; points.len()];
        for l in &self.levels {
            for (o, v) in out.iter_mut().zip(l.evaluate_many(points)) {
                *o += v;
            }
        }
        out
    }

    /// Partial model made of the first `n` levels.
    pub fn truncated(&self, n: usize) -> MultiscaleModel {
        MultiscaleModel {
            levels: self.levels[..n.min(self.levels.len())].to_vec(),
        }
    }
}

/// Residual correction: level `i` interpolates `f - s_1 - ... - s_{i-1}` on
/// its own nodes with its own scale.
pub fn multiscale_fit(f: &dyn Fn(UnitVector) -> f64, levels: &[(Vec<UnitVector>, f64)]) -> Result<MultiscaleModel> {
    let mut model = MultiscaleModel { levels: Vec::new() };
    for (nodes, delta) in levels {
        let values: Vec<f64> = nodes.iter().map(|x| f(*x) - model.evaluate(*x)).collect();
        model.levels.push(interpolate(nodes, *delta, &values)?);
    }
    Ok(model)
}

/// Levels `1..=n` of a hierarchy restricted to nodes whose `delta_i`-ball lies
/// in `domain`, with `delta_i = nu h_i`.
pub fn filtered_levels(
    hierarchy: &HierarchicalPointSets,
    domain: &Domain,
    nu: f64,
    n: usize,
) -> Result<Vec<(Vec<UnitVector>, f64)>> {
    if nu <= 1.0 {
        return Err(invalid("nu must exceed 1"));
    }
    hierarchy
        .levels()
        .iter()
        .take(n)
        .map(|l| {
            let delta = (nu * l.mesh_width()).min(2.0);
            Ok((filter_ball_interior(l.points(), domain, delta), delta))
        })
        .collect()
}

/// Native-space norm `sqrt(sum f_{n,k}^2 / Psi_n)`.
pub fn native_norm(f: &SpectralScalarField, spectrum: &WendlandSpectrum) -> Result<f64> {
    if spectrum.max_degree() < f.max_degree() {
        return Err(invalid("spectrum does not cover the field's degree"));
    }
    let mut s = 0.0;
    for n in 0..=f.max_degree() {
        let e: f64 = f.degree(n).iter().map(|c| c * c).sum();
        let p = spectrum.coeffs[n];
        if p <= 0.0 {
            if e > 0.0 {
                return Err(Error::Numerical("outside native space (truncated)".into()));
            }
            continue;
        }
        s += e / p;
    }
    Ok(s.sqrt())
}
