// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Truncated GKLS generator of the open Fibonacci oscillator.
//!
//! With thermal rates `G-_n`, `G+_n` attached to each nearest-neighbour
//! frequency `omega_n`, the generator is
//!
//! ```text
//! L(x) = G x + sum_l L_l* x L_l + x G*
//! G    = diag(g_n),  g_n = i(k-_n + k+_{n+1}) - (G-_n eps_n + G+_{n+1} eps_{n+1}) / 2
//! ```
//!
//! with rank-one Kraus operators `sqrt(G-_l eps_l) |e_{l-1}><e_l|` and
//! `sqrt(G+_l eps_l) |e_l><e_{l-1}|`. Both `G` and the Kraus terms are
//! applied entrywise, so a call costs `O(N^2)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{qr_integer, DeformationParams, SpectrumTable};
use crate::error::{Error, Result};

/// Absolute tolerance on Hermiticity of a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Absolute tolerance on the unit trace of a density matrix.
pub const TRACE_TOL: f64 = 1e-10;
/// Smallest eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-10;

/// `(G-, G+) = (e^x/(e^x - 1), 1/(e^x - 1))` with `x = beta * omega`.
pub fn gamma_rates(omega: f64, beta: f64) -> Result<(f64, f64)> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::DegenerateFrequency(omega));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParams(format!(
            "beta > 0 required, got {beta}"
        )));
    }
    let plus = 1.0 / (beta * omega).exp_m1();
    Ok((1.0 + plus, plus))
}

/// `G+ * eps` for a transition of energy `omega` into a level of energy
/// `eps`, written so that large `eps` with tiny rates stays finite.
fn weighted_plus(eps: f64, omega: f64, beta: f64) -> f64 {
    eps / (beta * omega).exp_m1()
}

/// `G- * eps`, equal to `eps / (1 - e^{-x})`.
fn weighted_minus(eps: f64, omega: f64, beta: f64) -> f64 {
    eps / -(-beta * omega).exp_m1()
}

/// Optional Hamiltonian constants `k-_n`, `k+_n` for `n = 1..=N`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Kappas {
    pub minus: Vec<f64>,
    pub plus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateTable {
    pub n_levels: usize,
    /// `G-_n` at index `n - 1`.
    pub gamma_minus: Vec<f64>,
    /// `G+_n` at index `n - 1`.
    pub gamma_plus: Vec<f64>,
    /// `k-_n` at index `n`; entry 0 is the level-0 constant and is zero.
    pub kappa_minus: Vec<f64>,
    /// `k+_n` at index `n`; entry 0 is unused.
    pub kappa_plus: Vec<f64>,
}

impl RateTable {
    pub fn new(table: &SpectrumTable, kappas: Option<&Kappas>) -> Result<Self> {
        let n = table.n_levels();
        let beta = table.params().beta;
        let (gamma_minus, gamma_plus) = table
            .omegas()
            .iter()
            .map(|&w| gamma_rates(w, beta))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let (kappa_minus, kappa_plus) = match kappas {
            None => (vec![0.0; n + 1], vec![0.0; n + 1]),
            Some(k) => {
                for v in [&k.minus, &k.plus] {
                    if v.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            found: v.len(),
                        });
                    }
                }
                let pad = |v: &[f64]| std::iter::once(0.0).chain(v.iter().copied()).collect();
                (pad(&k.minus), pad(&k.plus))
            }
        };
        Ok(Self {
            n_levels: n,
            gamma_minus,
            gamma_plus,
            kappa_minus,
            kappa_plus,
        })
    }

    /// `G-_n` for `1 <= n <= N`.
    pub fn minus(&self, n: usize) -> f64 {
        self.gamma_minus[n - 1]
    }

    /// `G+_n` for `1 <= n <= N`.
    pub fn plus(&self, n: usize) -> f64 {
        self.gamma_plus[n - 1]
    }
}

/// `coeff * |e_to><e_from|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KrausTerm {
    pub coeff: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGenerator {
    pub table: SpectrumTable,
    pub rates: RateTable,
    pub g_diag: Vec<Complex64>,
    /// Pairs `(L_{2l}, L_{2l+1})` in order of `l = 1..N-1`.
    pub kraus: Vec<KrausTerm>,
}

/// Builds the generator on levels `0..n_levels`. The top level keeps only
/// its in-truncation decay, so its diagonal entry lacks the `G+_N eps_N`
/// outflow.
pub fn build_generator(
    params: DeformationParams,
    n_levels: usize,
    kappas: Option<&Kappas>,
) -> Result<TruncatedGenerator> {
    params.require_region_a_strict()?;
    if n_levels < 2 {
        return Err(Error::InvalidTruncation(format!(
            "N >= 2 required, got {n_levels}"
        )));
    }
    let table = SpectrumTable::new(params, n_levels)?;
    let rates = RateTable::new(&table, kappas)?;
    let eps = table.eps();
    let beta = params.beta;
    let omega = table.omegas();

    let g_diag = (0..n_levels)
        .map(|n| {
            let mut re = 0.0;
            let mut im = rates.kappa_minus[n];
            if n > 0 {
                re -= 0.5 * weighted_minus(eps[n], omega[n - 1], beta);
            }
            if n + 1 < n_levels {
                re -= 0.5 * weighted_plus(eps[n + 1], omega[n], beta);
                im += rates.kappa_plus[n + 1];
            }
            Complex64::new(re, im)
        })
        .collect();

    let mut kraus = Vec::with_capacity(2 * (n_levels - 1));
    for l in 1..n_levels {
        kraus.push(KrausTerm {
            coeff: weighted_minus(eps[l], omega[l - 1], beta).sqrt(),
            from: l,
            to: l - 1,
        });
        kraus.push(KrausTerm {
            coeff: weighted_plus(eps[l], omega[l - 1], beta).sqrt(),
            from: l - 1,
            to: l,
        });
    }
    Ok(TruncatedGenerator {
        table,
        rates,
        g_diag,
        kraus,
    })
}

impl TruncatedGenerator {
    pub fn dim(&self) -> usize {
        self.g_diag.len()
    }

    pub fn params(&self) -> &DeformationParams {
        self.table.params()
    }

    /// Index of the level whose outflow is cut by the truncation.
    pub fn top_level(&self) -> usize {
        self.dim() - 1
    }

    /// `max_{n<N} (lambda_n + mu_n)`, including the birth rate out of the
    /// top level.
    pub fn max_rate(&self) -> f64 {
        let (eps, omega, beta) = (self.table.eps(), self.table.omegas(), self.params().beta);
        (0..self.dim())
            .map(|n| {
                let lambda = weighted_plus(eps[n + 1], omega[n], beta);
                let mu = if n > 0 {
                    weighted_minus(eps[n], omega[n - 1], beta)
                } else {
                    0.0
                };
                lambda + mu
            })
            .fold(0.0, f64::max)
    }

    fn check_dim(&self, x: &DMatrix<Complex64>) -> Result<()> {
        let n = self.dim();
        if x.nrows() != n || x.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.nrows().max(x.ncols()),
            });
        }
        Ok(())
    }

    /// Heisenberg-picture action on an observable.
    pub fn apply_primal(&self, x: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        self.check_dim(x)?;
        let g = &self.g_diag;
        let mut y = DMatrix::from_fn(self.dim(), self.dim(), |j, k| {
            (g[j] + g[k].conj()) * x[(j, k)]
        });
        for t in &self.kraus {
            y[(t.from, t.from)] += t.coeff * t.coeff * x[(t.to, t.to)];
        }
        Ok(y)
    }

    /// Schrodinger-picture action, the trace-dual of [`apply_primal`].
    ///
    /// [`apply_primal`]: TruncatedGenerator::apply_primal
    pub fn apply_predual(&self, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        self.check_dim(rho)?;
        let g = &self.g_diag;
        let mut y = DMatrix::from_fn(self.dim(), self.dim(), |j, k| {
            (g[j].conj() + g[k]) * rho[(j, k)]
        });
        for t in &self.kraus {
            y[(t.to, t.to)] += t.coeff * t.coeff * rho[(t.from, t.from)];
        }
        Ok(y)
    }

    /// `xi_jk` of the coherence `|e_j><e_k|`; see [`offdiag_eigenvalue`].
    pub fn offdiag_eigenvalue(&self, j: usize, k: usize) -> Result<Complex64> {
        offdiag_eigenvalue(self, j, k)
    }
}

/// `G-_j eps_j + G+_{j+1} eps_{j+1}`, the total jump rate out of level `j`
/// on the untruncated ladder.
pub fn outflow_rate(params: &DeformationParams, j: usize) -> Result<f64> {
    let beta = params.beta;
    let e0 = qr_integer(params, j)?;
    let e1 = qr_integer(params, j + 1)?;
    let up = weighted_plus(e1, e1 - e0, beta);
    if j == 0 {
        return Ok(up);
    }
    let em = qr_integer(params, j - 1)?;
    Ok(weighted_minus(e0, e0 - em, beta) + up)
}

/// Eigenvalue of `L` on the coherence `|e_j><e_k|`, evaluated from the
/// closed form so levels beyond the truncation are allowed. Hamiltonian
/// constants beyond the truncation are taken as zero.
pub fn offdiag_eigenvalue(gen: &TruncatedGenerator, j: usize, k: usize) -> Result<Complex64> {
    if j == k {
        return Err(Error::InvalidPair(j));
    }
    let kap = |v: &[f64], n: usize| v.get(n).copied().unwrap_or(0.0);
    let r = &gen.rates;
    let im = kap(&r.kappa_minus, j) - kap(&r.kappa_minus, k) + kap(&r.kappa_plus, j + 1)
        - kap(&r.kappa_plus, k + 1);
    let p = gen.params();
    let re = -0.5 * (outflow_rate(p, j)? + outflow_rate(p, k)?);
    Ok(Complex64::new(re, im))
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `|e_j><e_k|` on `dim` levels.
pub fn matrix_unit(dim: usize, j: usize, k: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(dim, dim);
    m[(j, k)] = Complex64::new(1.0, 0.0);
    m
}

/// Eigenvalues of a Hermitian matrix in increasing order.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidState("matrix is not square".into()));
        }
        let asym = max_abs(&(&entries - entries.adjoint()));
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (residual {asym:e})"
            )));
        }
        let tr = entries.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = hermitian_eigenvalues(&entries)[0];
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { entries })
    }

    /// Diagonal state with the given populations.
    pub fn from_populations(pops: &[f64]) -> Result<Self> {
        let v = nalgebra::DVector::from_iterator(
            pops.len(),
            pops.iter().map(|p| Complex64::new(*p, 0.0)),
        );
        Self::new(DMatrix::from_diagonal(&v))
    }

    /// `|e_n><e_n|` on `dim` levels.
    pub fn level(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::Index {
                index: n,
                min: 0,
                max: dim - 1,
            });
        }
        Ok(Self {
            entries: matrix_unit(dim, n, n),
        })
    }

    pub(crate) fn new_unchecked(entries: DMatrix<Complex64>) -> Self {
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.entries)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// `(1/2) ||self - other||_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        let diff = &self.entries - &other.entries;
        Ok(0.5
            * hermitian_eigenvalues(&diff)
                .iter()
                .map(|v| v.abs())
                .sum::<f64>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    fn ln3() -> f64 {
        3f64.ln()
    }

    #[test]
    fn rates_examples() {
        let (m, p) = gamma_rates(1.0, LN_2).unwrap();
        assert_relative_eq!(m, 2.0, epsilon = 1e-14);
        assert_relative_eq!(p, 1.0, epsilon = 1e-14);

        let (m, p) = gamma_rates(1.0, ln3()).unwrap();
        assert_relative_eq!(m, 1.5, epsilon = 1e-14);
        assert_relative_eq!(p, 0.5, epsilon = 1e-14);

        let (m, p) = gamma_rates(100.0, 1.0).unwrap();
        assert!((m - 1.0).abs() < 1e-40 && p < 1e-40);
        assert_eq!(gamma_rates(800.0, 1.0).unwrap(), (1.0, 0.0));

        assert!(matches!(
            gamma_rates(0.0, 1.0),
            Err(Error::DegenerateFrequency(_))
        ));
        assert!(matches!(
            gamma_rates(-1.0, 1.0),
            Err(Error::DegenerateFrequency(_))
        ));
    }

    #[test]
    fn rate_identities() {
        for (w, b) in [(0.01, 0.3), (1.0, 1.0), (7.5, 2.0), (40.0, 0.9)] {
            let (m, p) = gamma_rates(w, b).unwrap();
            assert!((m - p - 1.0).abs() <= 1e-12);
            assert!((p / m - (-b * w).exp()).abs() <= 1e-12 * (-b * w).exp());
        }
    }

    #[test]
    fn kraus_coefficients() {
        let g = build_generator(DeformationParams::new(2.0, 1.0, LN_2).unwrap(), 3, None).unwrap();
        let expected = [(2f64.sqrt(), 1, 0), (1.0, 0, 1), (2.0, 2, 1), (1.0, 1, 2)];
        assert_eq!(g.kraus.len(), 4);
        for (t, (c, f, to)) in g.kraus.iter().zip(expected) {
            assert_relative_eq!(t.coeff, c, epsilon = 1e-14);
            assert_eq!((t.from, t.to), (f, to));
        }
    }

    #[test]
    fn diagonal_entries() {
        let p = DeformationParams::new(1.5, 0.5, ln3()).unwrap();
        let g = build_generator(p, 3, None).unwrap();
        assert_relative_eq!(g.g_diag[1].re, -1.25, epsilon = 1e-14);
        assert_eq!(g.g_diag[1].im, 0.0);

        let g = build_generator(p, 2, None).unwrap();
        assert_relative_eq!(g.g_diag[0].re, -0.5 * g.rates.plus(1), epsilon = 1e-15);
    }

    #[test]
    fn rejects_degenerate_boundary() {
        let p = DeformationParams::new(1.5, -0.5, 1.0).unwrap();
        assert!(matches!(
            build_generator(p, 4, None),
            Err(Error::DegenerateParams(_))
        ));
        let p = DeformationParams::new(0.9, 0.5, 1.0).unwrap();
        assert!(matches!(
            build_generator(p, 4, None),
            Err(Error::RegionViolation(_))
        ));
        let p = DeformationParams::new(2.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            build_generator(p, 1, None),
            Err(Error::InvalidTruncation(_))
        ));
    }

    #[test]
    fn primal_identity_vanishes_on_interior() {
        let g = build_generator(DeformationParams::new(2.2, 0.3, 0.8).unwrap(), 8, None).unwrap();
        let y = g.apply_primal(&DMatrix::identity(8, 8)).unwrap();
        let interior = y
            .view((0, 0), (7, 7))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(interior <= 1e-10);
    }

    #[test]
    fn primal_two_level_toy() {
        let g = build_generator(DeformationParams::new(2.0, 1.0, LN_2).unwrap(), 2, None).unwrap();
        let y = g.apply_primal(&matrix_unit(2, 0, 0)).unwrap();
        // Gamma+_1 = 1, Gamma-_1 = 2 at beta = ln 2
        assert_relative_eq!(y[(0, 0)].re, -1.0, epsilon = 1e-14);
        assert_relative_eq!(y[(1, 1)].re, 2.0, epsilon = 1e-14);
        assert_eq!(y[(0, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn predual_of_level_one() {
        let g = build_generator(DeformationParams::new(2.0, 1.0, LN_2).unwrap(), 3, None).unwrap();
        let y = g.apply_predual(&matrix_unit(3, 1, 1)).unwrap();
        let d: Vec<f64> = y.diagonal().iter().map(|z| z.re).collect();
        for (a, b) in d.iter().zip([2.0, -3.0, 1.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-13);
        }
        assert!(y.trace().norm() <= 1e-12);
    }

    #[test]
    fn offdiag_examples() {
        let g = build_generator(DeformationParams::new(1.5, 0.5, ln3()).unwrap(), 4, None).unwrap();
        let xi = offdiag_eigenvalue(&g, 0, 1).unwrap();
        assert_relative_eq!(xi.re, -1.5, epsilon = 1e-14);
        assert_eq!(xi.im, 0.0);
        assert!(matches!(
            offdiag_eigenvalue(&g, 2, 2),
            Err(Error::InvalidPair(2))
        ));

        // term by term: 2*1 + (1/3)*3 + (4/3)*3 + (1/15)*7 = 112/15
        let g = build_generator(DeformationParams::new(2.0, 1.0, LN_2).unwrap(), 4, None).unwrap();
        let xi = offdiag_eigenvalue(&g, 1, 2).unwrap();
        assert_relative_eq!(xi.re, -56.0 / 15.0, epsilon = 1e-13);
    }

    #[test]
    fn offdiag_with_kappas_is_conjugate_symmetric() {
        let p = DeformationParams::new(2.0, 0.5, 1.0).unwrap();
        let k = Kappas {
            minus: vec![0.3, -1.0, 2.0, 0.5],
            plus: vec![1.0, 0.25, -0.75, 0.1],
        };
        let g = build_generator(p, 4, Some(&k)).unwrap();
        let a = offdiag_eigenvalue(&g, 0, 2).unwrap();
        let b = offdiag_eigenvalue(&g, 2, 0).unwrap();
        assert_eq!(a, b.conj());
        assert!(a.im != 0.0);
        let y = g.apply_primal(&matrix_unit(4, 0, 2)).unwrap();
        assert!((y[(0, 2)] - a).norm() <= 1e-12 * a.norm());

        let short = Kappas {
            minus: vec![0.0],
            plus: vec![0.0],
        };
        assert!(matches!(
            build_generator(p, 4, Some(&short)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::from_populations(&[0.5, 0.5]).is_ok());
        assert!(DensityMatrix::from_populations(&[0.6, 0.5]).is_err());
        assert!(DensityMatrix::from_populations(&[1.5, -0.5]).is_err());
        let mut m = matrix_unit(2, 0, 0);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());
        let a = DensityMatrix::level(3, 0).unwrap();
        let b = DensityMatrix::level(3, 2).unwrap();
        assert_relative_eq!(a.trace_distance(&b).unwrap(), 1.0, epsilon = 1e-14);
        assert!(DensityMatrix::level(3, 3).is_err());
    }
}
