//! Shared fixtures for the benchmarks in `benches/`.

use hardy_core::hardy_dict::experiment::{benchmark_target, ConvergenceSettings, SigmaChoice};
use hardy_core::hardy_dict::{build_dictionary, Dictionary, FitTarget};
use hardy_core::harmonics::{num_coeffs, SpectralScalarField};

/// Dictionary of the convergence experiment on `sigma` at `level`.
pub fn dictionary(sigma: SigmaChoice, level: usize) -> Dictionary {
    let s = ConvergenceSettings::default();
    let h = s.hierarchy(level).expect("default hierarchy");
    build_dictionary(sigma.cap(), level, &h, &s.dictionary_params()).expect("default dictionary")
}

pub fn target(max_degree: usize) -> FitTarget {
    benchmark_target(max_degree, ConvergenceSettings::default().sobolev).expect("benchmark field")
}

/// Deterministic field with coefficients in `[-1, 1]`.
pub fn field(max_degree: usize) -> SpectralScalarField {
    let c = (0..num_coeffs(max_degree))
        .map(|i| ((i as f64) * 0.618_034).fract() * 2.0 - 1.0)
        .collect();
    SpectralScalarField::from_coeffs(max_degree, c).expect("coefficient count")
}
