//! Gram matrices, data projections and coefficient expansions.
//!
//! For atoms `p`, `q` of types `a`, `b` the inner product with degree weights
//! `w_n` is `K_ab(x_p . x_q)` with
//! `K_ab(t) = sum_n w_n m^a_n m^b_n (2n+1)/(4pi) P_n(t)`, corrected by the
//! reference-point terms of green atoms.

use std::f64::consts::PI;

use faer::Mat;

use super::{Dictionary, Potential};
use crate::harmonics::{num_coeffs, HarmonicEvaluator, SpectralScalarField};

/// One inner product on atom expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramSpec {
    pub potential: Potential,
    /// `H^s` weights `(n + 1/2)^(2s)`; plain `L^2` when absent.
    pub sobolev: Option<f64>,
}

impl GramSpec {
    pub const L2_PLUS: GramSpec = GramSpec {
        potential: Potential::Plus,
        sobolev: None,
    };
    pub const L2_MINUS: GramSpec = GramSpec {
        potential: Potential::Minus,
        sobolev: None,
    };

    pub fn sobolev_plus(s: f64) -> GramSpec {
        GramSpec {
            potential: Potential::Plus,
            sobolev: Some(s),
        }
    }

    fn weight(&self, n: usize) -> f64 {
        match self.sobolev {
            Some(s) => (n as f64 + 0.5).powf(2.0 * s),
            None => 1.0,
        }
    }
}

/// Legendre series of every type pair and every requested inner product,
/// evaluated together.
struct PairKernels {
    types: usize,
    grams: usize,
    nmax: usize,
    /// `[pair][n][gram]`
    coef: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl PairKernels {
    fn new(dict: &Dictionary, max_degree: usize, specs: &[GramSpec]) -> Self {
        let types = dict.num_types();
        let grams = specs.len();
        let mults: Vec<Vec<Vec<f64>>> = specs
            .iter()
            .map(|s| dict.type_multipliers(s.potential, max_degree))
            .collect();
        let mut coef = vec![0.0; types * types * (max_degree + 1) * grams];
        for a in 0..types {
            for b in 0..types {
                let pair = a * types + b;
                for n in 0..=max_degree {
                    let z = (2 * n + 1) as f64 / (4.0 * PI);
                    for (g, spec) in specs.iter().enumerate() {
                        coef[(pair * (max_degree + 1) + n) * grams + g] =
                            spec.weight(n) * mults[g][a][n] * mults[g][b][n] * z;
                    }
                }
            }
        }
        let alpha = (0..=max_degree).map(|n| (2 * n + 1) as f64 / (n + 1) as f64).collect();
        let beta = (0..=max_degree).map(|n| n as f64 / (n + 1) as f64).collect();
        PairKernels {
            types,
            grams,
            nmax: max_degree,
            coef,
            alpha,
            beta,
        }
    }

    fn eval(&self, a: usize, b: usize, t: f64, out: &mut [f64]) {
        let base = (a * self.types + b) * (self.nmax + 1) * self.grams;
        let c = &self.coef[base..base + (self.nmax + 1) * self.grams];
        for (g, o) in out.iter_mut().enumerate() {
            *o = c[g];
        }
        if self.nmax == 0 {
            return;
        }
        let (mut p0, mut p1) = (1.0, t);
        for (g, o) in out.iter_mut().enumerate() {
            *o += c[self.grams + g] * p1;
        }
        for n in 1..self.nmax {
            let p2 = self.alpha[n] * t * p1 - self.beta[n] * p0;
            let row = &c[(n + 1) * self.grams..(n + 2) * self.grams];
            for (o, cg) in out.iter_mut().zip(row) {
                *o += cg * p2;
            }
            p0 = p1;
            p1 = p2;
        }
    }
}

/// Gram matrices of the dictionary atoms for each requested inner product at
/// truncation degree `max_degree`.
pub fn gram_matrices(dict: &Dictionary, max_degree: usize, specs: &[GramSpec]) -> Vec<Mat<f64>> {
    let m = dict.len();
    let g = specs.len();
    let kernels = PairKernels::new(dict, max_degree, specs);
    let types: Vec<usize> = dict.atoms.iter().map(|a| a.type_index()).collect();
    let centers: Vec<_> = dict.atoms.iter().map(|a| a.center()).collect();
    let green: Vec<bool> = dict.atoms.iter().map(|a| a.is_green()).collect();

    // e[q] = K_{0, type q}(xbar . x_q), used when the partner is green
    let mut e = vec![0.0; m * g];
    for q in 0..m {
        kernels.eval(0, types[q], dict.xbar.dot(centers[q]), &mut e[q * g..(q + 1) * g]);
    }
    let mut k11 = vec![0.0; g];
    kernels.eval(0, 0, 1.0, &mut k11);

    let mut out: Vec<Mat<f64>> = (0..g).map(|_| Mat::zeros(m, m)).collect();
    let mut buf = vec![0.0; g];
    for p in 0..m {
        for q in p..m {
            kernels.eval(types[p], types[q], centers[p].dot(centers[q]), &mut buf);
            for gi in 0..g {
                let mut v = buf[gi];
                if green[p] {
                    v -= e[q * g + gi];
                }
                if green[q] {
                    v -= e[p * g + gi];
                }
                if green[p] && green[q] {
                    v += k11[gi];
                }
                out[gi][(p, q)] = v;
                out[gi][(q, p)] = v;
            }
        }
    }
    out
}

/// `<f, a_p>` in `L^2` for every atom expansion `a_p` of the given potential.
pub fn atom_inner_products(dict: &Dictionary, f: &SpectralScalarField, potential: Potential) -> Vec<f64> {
    let nmax = f.max_degree();
    let mults = dict.type_multipliers(potential, nmax);
    let mut ev = HarmonicEvaluator::new(nmax);
    let mut per_degree = |x| {
        ev.eval(x, false);
        (0..=nmax)
            .map(|n| {
                f.degree(n)
                    .iter()
                    .zip(&ev.y[n * n..(n + 1) * (n + 1)])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
    };
    let at_xbar = per_degree(dict.xbar);
    dict.atoms
        .iter()
        .map(|a| {
            let fx = per_degree(a.center());
            let m = &mults[a.type_index()];
            (0..=nmax)
                .map(|n| {
                    let v = if a.is_green() { fx[n] - at_xbar[n] } else { fx[n] };
                    m[n] * v
                })
                .sum()
        })
        .collect()
}

/// Expansions `sum_p c_p a_p` for several coefficient vectors at once, split
/// by atom type: `out[set][type]`.
pub fn expansions(
    dict: &Dictionary,
    coefficient_sets: &[&[f64]],
    potential: Potential,
    max_degree: usize,
) -> Vec<Vec<SpectralScalarField>> {
    let types = dict.num_types();
    let nc = num_coeffs(max_degree);
    let sets = coefficient_sets.len();
    let mut acc = vec![vec![0.0; nc]; sets * types];
    let mut green_sum = vec![0.0; sets];
    let mut ev = HarmonicEvaluator::new(max_degree);
    for (p, atom) in dict.atoms.iter().enumerate() {
        ev.eval(atom.center(), false);
        let t = atom.type_index();
        for (s, c) in coefficient_sets.iter().enumerate() {
            let cp = c[p];
            if cp == 0.0 {
                continue;
            }
            if atom.is_green() {
                green_sum[s] += cp;
            }
            for (a, y) in acc[s * types + t].iter_mut().zip(&ev.y) {
                *a += cp * y;
            }
        }
    }
    ev.eval(dict.xbar, false);
    for (s, gs) in green_sum.iter().enumerate() {
        for (a, y) in acc[s * types].iter_mut().zip(&ev.y) {
            *a -= gs * y;
        }
    }
    let mults = dict.type_multipliers(potential, max_degree);
    let mut it = acc.into_iter();
    (0..sets)
        .map(|_| {
            (0..types)
                .map(|t| {
                    let f = SpectralScalarField::from_coeffs(max_degree, it.next().expect("sized above"))
                        .expect("sized above");
                    f.map_degrees(|n| mults[t][n])
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::tests::small_hierarchy;
    use super::super::{build_dictionary, DictionaryParams};
    use super::*;
    use crate::sphere_geom::{SphericalCap, UnitVector};

    fn dict() -> Dictionary {
        build_dictionary(
            SphericalCap::new(UnitVector::E3, 0.3).unwrap(),
            2,
            &small_hierarchy(),
            &DictionaryParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn gram_entries_match_explicit_expansions() {
        let d = dict();
        assert!(d.num_green() > 0 && d.len() > d.num_green());
        let nmax = 40;
        let specs = [GramSpec::L2_PLUS, GramSpec::sobolev_plus(2.25), GramSpec::L2_MINUS];
        let grams = gram_matrices(&d, nmax, &specs);
        let picks = [0, 1, d.num_green(), d.len() - 1];
        for &p in &picks {
            for &q in &picks {
                for (spec, g) in specs.iter().zip(&grams) {
                    let fp = d.atoms[p].field(spec.potential, nmax);
                    let fq = d.atoms[q].field(spec.potential, nmax);
                    let exact: f64 = match spec.sobolev {
                        None => fp.l2_inner(&fq),
                        Some(s) => (0..=nmax)
                            .map(|n| {
                                let w = (n as f64 + 0.5).powf(2.0 * s);
                                w * fp.degree(n).iter().zip(fq.degree(n)).map(|(a, b)| a * b).sum::<f64>()
                            })
                            .sum(),
                    };
                    let scale = (g[(p, p)] * g[(q, q)]).sqrt();
                    assert!(
                        (g[(p, q)] - exact).abs() <= 1e-11 * scale,
                        "{p} {q}: {} vs {exact}",
                        g[(p, q)]
                    );
                }
            }
        }
    }

    #[test]
    fn inner_products_and_expansions_agree_with_fields() {
        let d = dict();
        let nmax = 30;
        let mut f = SpectralScalarField::zeros(nmax);
        for (i, c) in f.coeffs_mut().iter_mut().enumerate() {
            *c = ((i * 7 % 11) as f64 - 5.0) / (1.0 + i as f64);
        }
        let b = atom_inner_products(&d, &f, Potential::Plus);
        let coeffs: Vec<f64> = (0..d.len()).map(|i| ((i % 5) as f64 - 2.0) * 0.1).collect();
        let typed = expansions(&d, &[&coeffs], Potential::Minus, nmax);
        let mut direct = SpectralScalarField::zeros(nmax);
        for (p, a) in d.atoms.iter().enumerate() {
            let fa = a.field(Potential::Plus, nmax);
            assert!((fa.l2_inner(&f) - b[p]).abs() < 1e-12 * (1.0 + b[p].abs()));
            direct.add_scaled(&a.field(Potential::Minus, nmax), coeffs[p]);
        }
        let mut sum = SpectralScalarField::zeros(nmax);
        for t in &typed[0] {
            sum.add_scaled(t, 1.0);
        }
        for (u, v) in sum.coeffs().iter().zip(direct.coeffs()) {
            assert!((u - v).abs() < 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn empty_dictionary_has_empty_gram() {
        let d = build_dictionary(
            SphericalCap::new(UnitVector::E3, 0.1).unwrap(),
            1,
            &small_hierarchy(),
            &DictionaryParams::default(),
        )
        .unwrap();
        let g = gram_matrices(&d, 10, &[GramSpec::L2_PLUS]);
        assert_eq!(g[0].nrows(), 0);
    }
}
