//! Convergence runs of dictionary fits to the benchmark field.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fit::{lambda_grid, FitProblem, FitResult, FitTarget};
use super::test_field::TestField;
use super::{build_dictionary, Dictionary, DictionaryParams, DEFAULT_CBAR, DEFAULT_NU, DEFAULT_SOBOLEV};
use crate::error::{invalid, Result};
use crate::sphere_geom::{HierarchicalPointSets, HierarchyParams, SphericalCap, UnitVector};

/// The three observation-region complements of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SigmaChoice {
    /// `C_1(e3)`, a hemisphere.
    S1,
    /// `C_0.2(e3)`.
    S2,
    /// `C_0.1(e3)`, the support of the field.
    S3,
}

impl SigmaChoice {
    pub const ALL: [SigmaChoice; 3] = [SigmaChoice::S1, SigmaChoice::S2, SigmaChoice::S3];

    pub fn polar_radius(&self) -> f64 {
        match self {
            SigmaChoice::S1 => 1.0,
            SigmaChoice::S2 => 0.2,
            SigmaChoice::S3 => 0.1,
        }
    }

    pub fn cap(&self) -> SphericalCap {
        SphericalCap {
            center: UnitVector::E3,
            polar_radius: self.polar_radius(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SigmaChoice::S1 => "S1",
            SigmaChoice::S2 => "S2",
            SigmaChoice::S3 => "S3",
        }
    }
}

impl fmt::Display for SigmaChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SigmaChoice {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S1" | "s1" => Ok(SigmaChoice::S1),
            "S2" | "s2" => Ok(SigmaChoice::S2),
            "S3" | "s3" => Ok(SigmaChoice::S3),
            _ => Err(invalid(format!("unknown sigma choice {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSettings {
    pub max_degree: usize,
    pub sobolev: f64,
    pub nu: f64,
    pub cbar: f64,
    pub gamma: f64,
    /// Fibonacci points on level 1.
    pub count1: usize,
    pub lambdas: Vec<f64>,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        ConvergenceSettings {
            max_degree: 100,
            sobolev: DEFAULT_SOBOLEV,
            nu: DEFAULT_NU,
            cbar: DEFAULT_CBAR,
            gamma: 0.5,
            count1: 234,
            lambdas: lambda_grid(),
        }
    }
}

impl ConvergenceSettings {
    pub fn hierarchy(&self, levels: usize) -> Result<HierarchicalPointSets> {
        HierarchicalPointSets::fibonacci(
            self.count1,
            levels,
            HierarchyParams {
                gamma: self.gamma,
                ..HierarchyParams::default()
            },
        )
    }

    pub fn dictionary_params(&self) -> DictionaryParams {
        DictionaryParams {
            nu: self.nu,
            cbar: self.cbar,
            xbar: None,
        }
    }
}

/// `0.01 (0.15^n + h^s)`.
pub fn envelope(n: usize, h: f64, s: f64) -> f64 {
    0.01 * (0.15f64.powi(n as i32) + h.powf(s))
}

/// Plus and minus potentials of the benchmark field.
pub fn benchmark_target(max_degree: usize, sobolev: f64) -> Result<FitTarget> {
    let s = TestField::default().spectral(max_degree)?;
    FitTarget::new(s.plus, s.minus, sobolev)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub sigma: String,
    pub n: usize,
    pub h_n: f64,
    pub num_atoms: usize,
    pub delta_n: f64,
    pub rho_n: f64,
    pub lambda: f64,
    pub rel_error: f64,
}

impl ConvergenceRow {
    pub const CSV_HEADER: &'static str = "sigma,n,h_n,num_atoms,delta_n,rho_n,lambda,rel_error";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.6e},{},{:.6e},{:.6e},{:.6e},{:.6e}",
            self.sigma, self.n, self.h_n, self.num_atoms, self.delta_n, self.rho_n, self.lambda, self.rel_error
        )
    }
}

/// One row of the convergence table: dictionary at level `n` and its best fit
/// over the lambda grid.
pub fn convergence_level(
    hierarchy: &HierarchicalPointSets,
    target: &FitTarget,
    sigma: SigmaChoice,
    n: usize,
    settings: &ConvergenceSettings,
) -> Result<(ConvergenceRow, Dictionary, FitResult)> {
    convergence_level_cap(hierarchy, target, sigma.cap(), sigma.label(), n, settings)
}

/// [`convergence_level`] for an arbitrary cap `sigma_c`.
pub fn convergence_level_cap(
    hierarchy: &HierarchicalPointSets,
    target: &FitTarget,
    sigma_c: SphericalCap,
    label: &str,
    n: usize,
    settings: &ConvergenceSettings,
) -> Result<(ConvergenceRow, Dictionary, FitResult)> {
    let dict = build_dictionary(sigma_c, n, hierarchy, &settings.dictionary_params())?;
    let mut fit = FitProblem::new(&dict, target).fit_best(&settings.lambdas)?;
    fit.sigma_label = Some(label.to_string());
    let row = ConvergenceRow {
        sigma: label.to_string(),
        n,
        h_n: dict.mesh_widths[n - 1],
        num_atoms: dict.len(),
        delta_n: dict.deltas[n - 1],
        rho_n: dict.rho,
        lambda: fit.lambda,
        rel_error: fit.relative_error,
    };
    Ok((row, dict, fit))
}
