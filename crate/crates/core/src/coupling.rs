// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Bohr frequencies of a diagonal Hamiltonian and the weak-coupling
//! operators `D_w = sum P_m D P_n` over level pairs with `eps_n - eps_m = w`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::SpectrumTable;
use crate::error::{Error, Result};

/// Positive gaps `eps_n - eps_m` of a truncated spectrum grouped into
/// classes. Gaps closer than `tol` to a class's smallest member join it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BohrSpectrum {
    /// Class representatives in increasing order.
    pub omegas: Vec<f64>,
    /// `pairs[i]` holds the `(n, m)` pairs of class `omegas[i]`, sorted.
    pub pairs: Vec<Vec<(usize, usize)>>,
    pub tol: f64,
    /// Highest retained level; pairs touching it are polluted by truncation.
    pub top_level: usize,
}

impl BohrSpectrum {
    /// Index of the class matching `omega` within `tol`.
    pub fn class_of(&self, omega: f64) -> Option<usize> {
        self.omegas
            .iter()
            .position(|w| (w - omega).abs() <= self.tol)
    }

    pub fn pairs_for(&self, omega: f64) -> Option<&[(usize, usize)]> {
        self.class_of(omega).map(|i| self.pairs[i].as_slice())
    }

    pub fn touches_top(&self, class: usize) -> bool {
        self.pairs[class].iter().any(|&(n, _)| n == self.top_level)
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.iter().map(Vec::len).sum()
    }
}

pub fn bohr_spectrum(table: &SpectrumTable, tol: f64) -> Result<BohrSpectrum> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol > 0 required, got {tol}")));
    }
    let n = table.n_levels();
    if n < 2 {
        return Err(Error::InvalidTruncation(format!(
            "N >= 2 required, got {n}"
        )));
    }
    let eps = table.eps();
    let mut gaps: Vec<(f64, usize, usize)> = Vec::new();
    for hi in 0..n {
        for lo in 0..n {
            let g = eps[hi] - eps[lo];
            if g > tol {
                gaps.push((g, hi, lo));
            }
        }
    }
    gaps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut omegas = Vec::new();
    let mut pairs: Vec<Vec<(usize, usize)>> = Vec::new();
    for (g, hi, lo) in gaps {
        match omegas.last() {
            Some(&w) if g - w <= tol => pairs.last_mut().unwrap().push((hi, lo)),
            _ => {
                omegas.push(g);
                pairs.push(vec![(hi, lo)]);
            }
        }
    }
    for class in &mut pairs {
        class.sort_unstable();
    }
    Ok(BohrSpectrum {
        omegas,
        pairs,
        tol,
        top_level: n - 1,
    })
}

/// Why a spectrum fails the genericity conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GenericityWitness {
    /// Levels whose energies coincide within tolerance.
    DegenerateLevels(Vec<(usize, usize)>),
    /// A Bohr frequency realised by more than one pair.
    SharedFrequency {
        omega: f64,
        pairs: Vec<(usize, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Genericity {
    pub generic: bool,
    pub witness: Option<GenericityWitness>,
}

/// Simple spectrum and one pair per Bohr frequency.
pub fn is_generic(spectrum: &BohrSpectrum, table: &SpectrumTable) -> Genericity {
    if let Some(i) = spectrum.pairs.iter().position(|p| p.len() > 1) {
        return Genericity {
            generic: false,
            witness: Some(GenericityWitness::SharedFrequency {
                omega: spectrum.omegas[i],
                pairs: spectrum.pairs[i].clone(),
            }),
        };
    }
    let eps = &table.eps()[..table.n_levels()];
    let mut equal = Vec::new();
    for i in 0..eps.len() {
        for j in i + 1..eps.len() {
            if (eps[i] - eps[j]).abs() <= spectrum.tol {
                equal.push((j, i));
            }
        }
    }
    if equal.is_empty() {
        Genericity {
            generic: true,
            witness: None,
        }
    } else {
        Genericity {
            generic: false,
            witness: Some(GenericityWitness::DegenerateLevels(equal)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausExtraction {
    pub omega: f64,
    pub d_omega: DMatrix<Complex64>,
    pub rank: usize,
    pub touches_top: bool,
}

/// Lifts a real matrix to complex entries.
pub fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn kraus_from_coupling(
    d: &DMatrix<Complex64>,
    spectrum: &BohrSpectrum,
    omega: f64,
) -> Result<KrausExtraction> {
    let dim = spectrum.top_level + 1;
    if d.nrows() != dim || d.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: d.nrows().max(d.ncols()),
        });
    }
    let class = spectrum
        .class_of(omega)
        .ok_or(Error::UnknownFrequency(omega))?;
    let mut d_omega = DMatrix::zeros(dim, dim);
    for &(n, m) in &spectrum.pairs[class] {
        d_omega[(m, n)] = d[(m, n)];
    }
    let rank = numerical_rank(&d_omega);
    Ok(KrausExtraction {
        omega: spectrum.omegas[class],
        d_omega,
        rank,
        touches_top: spectrum.touches_top(class),
    })
}

fn numerical_rank(m: &DMatrix<Complex64>) -> usize {
    if m.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    sv.iter().filter(|s| **s > 1e-12 * smax.max(1.0)).count()
}

/// `sum_w D_w` over every Bohr class.
pub fn kraus_sum(d: &DMatrix<Complex64>, spectrum: &BohrSpectrum) -> Result<DMatrix<Complex64>> {
    let mut total = DMatrix::zeros(d.nrows(), d.ncols());
    for &w in &spectrum.omegas {
        total += kraus_from_coupling(d, spectrum, w)?.d_omega;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{ladder_matrices, DeformationParams};

    fn table(r: f64, q: f64, n: usize) -> SpectrumTable {
        SpectrumTable::new(DeformationParams::new(r, q, 1.0).unwrap(), n).unwrap()
    }

    fn fib(n: usize) -> SpectrumTable {
        SpectrumTable::new(DeformationParams::fibonacci(1.0).unwrap(), n).unwrap()
    }

    #[test]
    fn r2_q1_classes() {
        let s = bohr_spectrum(&table(2.0, 1.0, 4), 1e-9).unwrap();
        assert_eq!(s.omegas, vec![1.0, 2.0, 3.0, 4.0, 6.0, 7.0]);
        let expect = [
            (1.0, (1, 0)),
            (2.0, (2, 1)),
            (3.0, (2, 0)),
            (4.0, (3, 2)),
            (6.0, (3, 1)),
            (7.0, (3, 0)),
        ];
        for (w, p) in expect {
            assert_eq!(s.pairs_for(w).unwrap(), &[p]);
        }
    }

    #[test]
    fn two_levels() {
        let s = bohr_spectrum(&table(3.0, 0.5, 2), 1e-9).unwrap();
        assert_eq!(s.omegas, vec![1.0]);
        assert_eq!(s.pairs, vec![vec![(1, 0)]]);
        assert!(is_generic(&s, &table(3.0, 0.5, 2)).generic);
    }

    #[test]
    fn fibonacci_unit_class() {
        let t = fib(5);
        let s = bohr_spectrum(&t, 1e-9).unwrap();
        assert_eq!(
            s.pairs_for(1.0).unwrap(),
            &[(1, 0), (2, 0), (3, 1), (3, 2), (4, 3)]
        );
        let g = is_generic(&s, &t);
        assert!(!g.generic);
        match g.witness {
            Some(GenericityWitness::SharedFrequency { omega, pairs }) => {
                assert!((omega - 1.0).abs() < 1e-12);
                assert_eq!(pairs.len(), 5);
            }
            other => panic!("unexpected witness {other:?}"),
        }

        // two levels with equal energy and no shared gap
        let t = fib(3);
        let s = bohr_spectrum(&t, 1e-9).unwrap();
        assert_eq!(s.pairs, vec![vec![(1, 0), (2, 0)]]);
    }

    #[test]
    fn genericity() {
        let t = table(2.0, 1.0, 6);
        assert!(is_generic(&bohr_spectrum(&t, 1e-9).unwrap(), &t).generic);

        // q = 0, r = golden ratio: eps = 0, 1, r, r^2 and r^2 - r = 1
        let t = table((1.0 + 5f64.sqrt()) / 2.0, 0.0, 4);
        let g = is_generic(&bohr_spectrum(&t, 1e-9).unwrap(), &t);
        match g.witness {
            Some(GenericityWitness::SharedFrequency { pairs, .. }) => {
                assert_eq!(pairs, vec![(1, 0), (3, 2)])
            }
            other => panic!("unexpected witness {other:?}"),
        }
    }

    #[test]
    fn fibonacci_d_eps1() {
        let t = fib(6);
        let s = bohr_spectrum(&t, 1e-9).unwrap();
        let a = complexify(&ladder_matrices(&t).unwrap().a);
        let k = kraus_from_coupling(&a, &s, 1.0).unwrap();
        let mut expected = DMatrix::<Complex64>::zeros(6, 6);
        expected[(0, 1)] = 1.0.into();
        expected[(2, 3)] = 2f64.sqrt().into();
        expected[(3, 4)] = 3f64.sqrt().into();
        assert!((k.d_omega - expected).camax() <= 1e-12);
        assert_eq!(k.rank, 3);
    }

    #[test]
    fn free_case() {
        let t = table(1.0, 0.0, 4);
        assert_eq!(t.eps(), &[0.0, 1.0, 1.0, 1.0, 1.0]);
        let s = bohr_spectrum(&t, 1e-9).unwrap();
        let a = complexify(&ladder_matrices(&t).unwrap().a);
        let k = kraus_from_coupling(&a, &s, 1.0).unwrap();
        let mut expected = DMatrix::<Complex64>::zeros(4, 4);
        expected[(0, 1)] = 1.0.into();
        assert_eq!(k.d_omega, expected);
        assert_eq!(k.rank, 1);
    }

    #[test]
    fn forbidden_transition() {
        let t = table(2.0, 1.0, 4);
        let s = bohr_spectrum(&t, 1e-9).unwrap();
        let a = complexify(&ladder_matrices(&t).unwrap().a);
        let k = kraus_from_coupling(&a, &s, 7.0).unwrap();
        assert_eq!(k.rank, 0);
        assert!(k.touches_top);
        assert!(matches!(
            kraus_from_coupling(&a, &s, 5.0),
            Err(Error::UnknownFrequency(_))
        ));
    }

    #[test]
    fn sum_reconstructs_lowering_part() {
        let t = table(2.3, 0.4, 7);
        let s = bohr_spectrum(&t, 1e-9).unwrap();
        let d = DMatrix::from_fn(7, 7, |i, j| {
            Complex64::new((i * 7 + j) as f64, i as f64 - j as f64)
        });
        let total = kraus_sum(&d, &s).unwrap();
        let upper = DMatrix::from_fn(7, 7, |i, j| if i < j { d[(i, j)] } else { 0.0.into() });
        assert!((total - upper).camax() <= 1e-14);
    }
}
