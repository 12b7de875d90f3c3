//! Positive-weight cubature rules with certified polynomial exactness.

use std::f64::consts::PI;
use std::io::Write;

use faer::Mat;

use crate::error::{invalid, Error, Result};
use crate::harmonics::{num_coeffs, HarmonicEvaluator, RingGrid};
use crate::linalg::{matvec, nnls};
use crate::sphere_geom::UnitVector;

/// Moment residual accepted at construction.
pub const MOMENT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct CubatureRule {
    nodes: Vec<UnitVector>,
    weights: Vec<f64>,
    exactness_degree: usize,
}

impl CubatureRule {
    pub fn nodes(&self) -> &[UnitVector] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i v_i`.
    pub fn apply(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return Err(invalid(format!(
                "rule has {} nodes but {} values were given",
                self.nodes.len(),
                values.len()
            )));
        }
        Ok(self.weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }

    pub fn integrate(&self, f: impl Fn(UnitVector) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Largest `|Q(Y_{n,k}) - sqrt(4 pi) delta_{n0}|` over degrees up to `degree`.
    pub fn moment_residual(&self, degree: usize) -> f64 {
        moment_residual(&self.nodes, &self.weights, degree)
    }

    /// `x,y,z,w` rows after a `# L=...` comment line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# L={}", self.exactness_degree)?;
        writeln!(w, "x,y,z,w")?;
        for (p, wt) in self.nodes.iter().zip(&self.weights) {
            writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", p.x(), p.y(), p.z(), wt)?;
        }
        Ok(())
    }
}

fn moment_residual(nodes: &[UnitVector], weights: &[f64], degree: usize) -> f64 {
    let mut ev = HarmonicEvaluator::new(degree);
    let mut m = vec![0.0; num_coeffs(degree)];
    for (x, w) in nodes.iter().zip(weights) {
        ev.eval(*x, false);
        for (mi, y) in m.iter_mut().zip(&ev.y) {
            *mi += w * y;
        }
    }
    m[0] -= (4.0 * PI).sqrt();
    m.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Gauss-Legendre latitudes times equispaced longitudes, exact through
/// degree `L`.
pub fn gauss_product_rule(l: usize) -> CubatureRule {
    let grid = RingGrid::gauss((l + 1).div_ceil(2), l + 1);
    CubatureRule {
        nodes: grid.points(),
        weights: grid.weights(),
        exactness_degree: l,
    }
}

/// Strictly positive weights on scattered nodes, exact through degree `L`.
///
/// The weights are `tau * 4pi/N + v` with `v >= 0` from nonnegative least
/// squares on the remaining moments, trying `tau` in 0.5, 0.25, 0.1, 0.01.
pub fn scattered_weights(nodes: &[UnitVector], l: usize) -> Result<CubatureRule> {
    let m = num_coeffs(l);
    if nodes.len() < m {
        return Err(Error::TooFewPoints {
            needed: m,
            got: nodes.len(),
        });
    }
    let n = nodes.len();
    let mut ev = HarmonicEvaluator::new(l);
    let mut a = Mat::<f64>::zeros(m, n);
    for (j, x) in nodes.iter().enumerate() {
        ev.eval(*x, false);
        for i in 0..m {
            a[(i, j)] = ev.y[i];
        }
    }
    let mut b = vec![0.0; m];
    b[0] = (4.0 * PI).sqrt();
    let w0 = vec![4.0 * PI / n as f64; n];
    let aw0 = matvec(a.as_ref(), &w0);
    let mut best = f64::INFINITY;
    for tau in [0.5, 0.25, 0.1, 0.01] {
        let rhs: Vec<f64> = b.iter().zip(&aw0).map(|(b, a)| b - tau * a).collect();
        let v = nnls(a.as_ref(), &rhs, 20 * m);
        let weights: Vec<f64> = v.iter().map(|vi| tau * w0[0] + vi).collect();
        let res = moment_residual(nodes, &weights, l);
        best = best.min(res);
        if res <= MOMENT_TOLERANCE && weights.iter().all(|w| *w > 0.0) {
            return Ok(CubatureRule {
                nodes: nodes.to_vec(),
                weights,
                exactness_degree: l,
            });
        }
    }
    Err(Error::MeshTooCoarse(format!(
        "no positive weights exact to degree {l}; best moment residual {best:.3e}"
    )))
}
