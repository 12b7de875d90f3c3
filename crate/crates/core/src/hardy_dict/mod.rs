//! Dictionaries for the inner Hardy potential of vector fields supported in a
//! cap `Sigma^c`, and the fits, sign-flip maps and vector assemblies built on
//! them.
//!
//! A dictionary at level `n` holds two kinds of atoms. A green atom is
//! `(K + I/2) S^-1 (G^rho(x, .) - G^rho(xbar, .))`, with degree-`n`
//! multiplier `-(n+1) G_n` on `Y(x) - Y(xbar)`. A Wendland atom is the kernel
//! `Psi_delta(x', .)` of one hierarchy level. Atoms are grouped into types:
//! type 0 is green, type `i` is Wendland level `i`. Atoms of one type share
//! their multipliers, so Gram entries reduce to zonal Legendre sums.

mod bep;
pub mod experiment;
mod fit;
mod gram;
mod minnorm;
mod neumann;
mod test_field;

pub use bep::{bep_solve, BepResult, BepSolver};
pub use fit::{
    fit_best_lambda, fit_regularized, lambda_grid, map_to_minus, map_to_plus, typed_fields, FitProblem, FitResult,
    FitTarget,
};
pub use gram::{atom_inner_products, expansions, gram_matrices, GramSpec};
pub use minnorm::{minnorm_assemble, MinNormDiagnostics, MinNormField, MinNormOptions};
pub use neumann::{neumann_cap_solve, NeumannSolution, DEFAULT_BOUNDARY_POINTS, DEFAULT_MODES};
pub use test_field::{test_field_eval, test_field_spectral, TestField};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::harmonics::SpectralScalarField;
use crate::kernels::{reg_green_coeffs, wendland_coeffs, wendland_spatial, GreenDifferenceAtom};
use crate::sphere_geom::{
    filter_ball_interior, filter_cap_interior, Domain, HierarchicalPointSets, SphericalCap, UnitVector, Vec3,
};

/// Default ratio `delta_i / h_i`.
pub const DEFAULT_NU: f64 = 2.21;
/// Default constant in `rho_n = (h_n / cbar)^2`.
pub const DEFAULT_CBAR: f64 = 0.537;
/// Default Sobolev index of the regularization and error normalization.
pub const DEFAULT_SOBOLEV: f64 = 2.25;

/// Which Hardy potential an atom expansion refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Potential {
    /// The atom itself, a function in the inner potential space.
    Plus,
    /// Its image under the plus-to-minus map.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DictionaryAtom {
    Green {
        x: UnitVector,
        xbar: UnitVector,
        rho: f64,
    },
    Wendland {
        center: UnitVector,
        delta: f64,
        level: usize,
    },
}

/// `-(n+1) G_n`: the green atom multiplier of `(K + I/2) S^-1`.
pub fn green_plus_multipliers(rho: f64, max_degree: usize) -> Vec<f64> {
    reg_green_coeffs(rho, max_degree)
        .iter()
        .enumerate()
        .map(|(n, g)| -((n + 1) as f64) * g)
        .collect()
}

/// `-n G_n`: the multiplier of `-(K - I/2) S^-1`.
pub fn green_minus_multipliers(rho: f64, max_degree: usize) -> Vec<f64> {
    reg_green_coeffs(rho, max_degree)
        .iter()
        .enumerate()
        .map(|(n, g)| -(n as f64) * g)
        .collect()
}

impl DictionaryAtom {
    /// 0 for green atoms, the level for Wendland atoms.
    pub fn type_index(&self) -> usize {
        match self {
            DictionaryAtom::Green { .. } => 0,
            DictionaryAtom::Wendland { level, .. } => *level,
        }
    }

    pub fn is_green(&self) -> bool {
        matches!(self, DictionaryAtom::Green { .. })
    }

    /// The point whose zonal translate carries the atom.
    pub fn center(&self) -> UnitVector {
        match self {
            DictionaryAtom::Green { x, .. } => *x,
            DictionaryAtom::Wendland { center, .. } => *center,
        }
    }

    pub fn multipliers(&self, potential: Potential, max_degree: usize) -> Vec<f64> {
        match (self, potential) {
            (DictionaryAtom::Green { rho, .. }, Potential::Plus) => green_plus_multipliers(*rho, max_degree),
            (DictionaryAtom::Green { rho, .. }, Potential::Minus) => green_minus_multipliers(*rho, max_degree),
            (DictionaryAtom::Wendland { delta, .. }, Potential::Plus) => wendland_coeffs(*delta, max_degree).coeffs,
            (DictionaryAtom::Wendland { delta, .. }, Potential::Minus) => {
                wendland_coeffs(*delta, max_degree).coeffs.iter().map(|c| -c).collect()
            }
        }
    }

    /// Spectral expansion of the atom or of its minus image.
    pub fn field(&self, potential: Potential, max_degree: usize) -> SpectralScalarField {
        let m = self.multipliers(potential, max_degree);
        match self {
            DictionaryAtom::Green { x, xbar, .. } => {
                let mut f = SpectralScalarField::zonal(&m, *x);
                f.add_scaled(&SpectralScalarField::zonal(&m, *xbar), -1.0);
                f
            }
            DictionaryAtom::Wendland { center, .. } => SpectralScalarField::zonal(&m, *center),
        }
    }

    /// `grad G^rho_{x,xbar}` for green atoms and `eta Psi_{delta,x'}` for
    /// Wendland atoms, from the closed forms.
    pub fn vector_field(&self, y: UnitVector) -> Vec3 {
        match self {
            DictionaryAtom::Green { x, xbar, rho } => GreenDifferenceAtom {
                x: *x,
                xbar: *xbar,
                rho: *rho,
            }
            .gradient(y),
            DictionaryAtom::Wendland { center, delta, .. } => y.vec() * wendland_spatial(*delta, *center, y),
        }
    }
}

/// Expansion of an atom at truncation degree `max_degree`.
pub fn atom_scalar_field(atom: &DictionaryAtom, max_degree: usize) -> SpectralScalarField {
    atom.field(Potential::Plus, max_degree)
}

pub fn vector_atom_field(atom: &DictionaryAtom, points: &[UnitVector]) -> Vec<Vec3> {
    points.iter().map(|y| atom.vector_field(*y)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DictionaryParams {
    /// `delta_i = nu h_i`.
    pub nu: f64,
    /// `rho_n = (h_n / cbar)^2`.
    pub cbar: f64,
    /// Reference point of the green atoms; the cap center when absent.
    pub xbar: Option<UnitVector>,
}

impl Default for DictionaryParams {
    fn default() -> Self {
        DictionaryParams {
            nu: DEFAULT_NU,
            cbar: DEFAULT_CBAR,
            xbar: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    pub sigma_c: SphericalCap,
    pub level: usize,
    pub xbar: UnitVector,
    pub rho: f64,
    /// `h_1, ..., h_n`.
    pub mesh_widths: Vec<f64>,
    /// `delta_1, ..., delta_n`.
    pub deltas: Vec<f64>,
    pub atoms: Vec<DictionaryAtom>,
}

impl Dictionary {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn num_green(&self) -> usize {
        self.atoms.iter().filter(|a| a.is_green()).count()
    }

    /// Green plus one type per Wendland level.
    pub fn num_types(&self) -> usize {
        self.level + 1
    }

    /// Degree multipliers per atom type, `[type][n]`.
    pub fn type_multipliers(&self, potential: Potential, max_degree: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.num_types());
        out.push(match potential {
            Potential::Plus => green_plus_multipliers(self.rho, max_degree),
            Potential::Minus => green_minus_multipliers(self.rho, max_degree),
        });
        for d in &self.deltas {
            let c = wendland_coeffs(*d, max_degree).coeffs;
            out.push(match potential {
                Potential::Plus => c,
                Potential::Minus => c.iter().map(|v| -v).collect(),
            });
        }
        out
    }

    pub fn atom_scalar_field(&self, i: usize, max_degree: usize) -> SpectralScalarField {
        atom_scalar_field(&self.atoms[i], max_degree)
    }
}

/// Dictionary at level `n` for the cap `sigma_c`: green atoms at the level-`n`
/// nodes whose `rho_n`-cap lies in `sigma_c`, and Wendland atoms at the
/// level-`i` nodes whose `delta_i`-ball lies in `sigma_c`, `i = 1..n`.
pub fn build_dictionary(
    sigma_c: SphericalCap,
    n: usize,
    hierarchy: &HierarchicalPointSets,
    params: &DictionaryParams,
) -> Result<Dictionary> {
    if n == 0 || n > hierarchy.num_levels() {
        return Err(invalid(format!("level {n} outside 1..={}", hierarchy.num_levels())));
    }
    if !(params.nu > 1.0) {
        return Err(invalid("nu must exceed 1"));
    }
    if !(params.cbar > 0.0) {
        return Err(invalid("cbar must be positive"));
    }
    let levels = &hierarchy.levels()[..n];
    let mesh_widths: Vec<f64> = levels.iter().map(|l| l.mesh_width()).collect();
    let deltas: Vec<f64> = mesh_widths.iter().map(|h| (params.nu * h).min(2.0)).collect();
    let rho = (mesh_widths[n - 1] / params.cbar).powi(2);
    if rho >= 2.0 {
        return Err(Error::Dictionary(format!("rho_n = {rho} is not below 2")));
    }
    let xbar = params.xbar.unwrap_or(sigma_c.center);
    let domain = Domain::Cap(sigma_c);
    if !sigma_c.contains(xbar) {
        return Err(Error::Dictionary("xbar lies outside the cap".into()));
    }

    let mut atoms = Vec::new();
    let green: Vec<UnitVector> = filter_cap_interior(levels[n - 1].points(), &domain, rho)
        .into_iter()
        .filter(|x| x.distance(xbar) > 1e-12)
        .collect();
    if !green.is_empty() && filter_cap_interior(&[xbar], &domain, rho).is_empty() {
        return Err(Error::Dictionary(format!(
            "the rho_n = {rho:.4} cap around xbar is not inside the cap"
        )));
    }
    atoms.extend(green.into_iter().map(|x| DictionaryAtom::Green { x, xbar, rho }));
    for (i, (l, d)) in levels.iter().zip(&deltas).enumerate() {
        atoms.extend(filter_ball_interior(l.points(), &domain, *d).into_iter().map(|center| {
            DictionaryAtom::Wendland {
                center,
                delta: *d,
                level: i + 1,
            }
        }));
    }
    Ok(Dictionary {
        sigma_c,
        level: n,
        xbar,
        rho,
        mesh_widths,
        deltas,
        atoms,
    })
}
