// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! The classical birth-death chain carried by the diagonal algebra.
//!
//! On diagonal observables the generator acts as
//! `(A f)_n = lambda_n (f_{n+1} - f_n) + mu_n (f_{n-1} - f_n)` with
//! `lambda_n = G+_{n+1} eps_{n+1}` and `mu_n = G-_n eps_n`. The chain is
//! reversible for `pi_n = exp(-beta eps_n)`, and its spectral gap is the
//! smallest eigenvalue of a positive definite Jacobi matrix.

use serde::Serialize;

use crate::algebra::{eps_iter, DeformationParams, SpectrumTable, DEFAULT_MAX_LEVEL};
use crate::error::{Error, Result};

/// Tail weight below which a truncation counts as converged for gap work,
/// relative to `Z_beta`.
pub const GAP_TAIL_TOL: f64 = 1e-12;
/// Tail weight above which [`stationary_density`] refuses a truncation.
pub const DENSITY_TAIL_TOL: f64 = 1e-8;
/// Slack accepted when checking the tail inequalities.
pub const INEQUALITY_TOL: f64 = 1e-12;

/// `(lambda_n, mu_n)`; `mu_0` does not exist.
pub fn bd_rates(params: &DeformationParams, n: usize) -> Result<(f64, Option<f64>)> {
    params.require_region_a_strict()?;
    let mut it = eps_iter(params);
    let eps: Vec<f64> = it.by_ref().take(n + 2).collect();
    let beta = params.beta;
    let lambda = eps[n + 1] / (beta * (eps[n + 1] - eps[n])).exp_m1();
    let mu = (n > 0).then(|| eps[n] / -(-beta * (eps[n] - eps[n - 1])).exp_m1());
    if !lambda.is_finite() || mu.is_some_and(|m| !m.is_finite()) {
        return Err(Error::Overflow {
            level: n + 1,
            cap: DEFAULT_MAX_LEVEL,
        });
    }
    Ok((lambda, mu))
}

/// Rates of the undeformed oscillator, the `r, q -> 1` limit:
/// `lambda_n = (n+1)/(e^beta - 1)`, `mu_n = n e^beta/(e^beta - 1)`.
pub fn bose_rates(beta: f64, n: usize) -> (f64, f64) {
    let em1 = beta.exp_m1();
    ((n + 1) as f64 / em1, n as f64 / -(-beta).exp_m1())
}

/// Reflecting truncation of the chain on levels `0..N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BDChain {
    pub beta: f64,
    /// `lambda_n` for `n < N`; the last entry leaves the truncation and is
    /// dropped by the reflecting boundary.
    pub lambda: Vec<f64>,
    /// `mu_n` for `n < N`, with `mu_0 = 0`.
    pub mu: Vec<f64>,
    /// `log pi_n = -beta eps_n`.
    pub log_pi: Vec<f64>,
}

impl BDChain {
    pub fn new(params: &DeformationParams, n_levels: usize) -> Result<Self> {
        params.require_region_a_strict()?;
        if n_levels < 2 {
            return Err(Error::InvalidTruncation(format!(
                "N >= 2 required, got {n_levels}"
            )));
        }
        let table = SpectrumTable::new(*params, n_levels)?;
        Ok(Self::from_table(&table))
    }

    pub fn from_table(table: &SpectrumTable) -> Self {
        let (eps, omega, beta) = (table.eps(), table.omegas(), table.params().beta);
        let n = table.n_levels();
        let lambda = (0..n)
            .map(|k| eps[k + 1] / (beta * omega[k]).exp_m1())
            .collect();
        let mu = (0..n)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    eps[k] / -(-beta * omega[k - 1]).exp_m1()
                }
            })
            .collect();
        Self {
            beta,
            lambda,
            mu,
            log_pi: table.log_weights(),
        }
    }

    /// The undeformed chain with energies `eps_n = n`.
    pub fn bose(beta: f64, n_levels: usize) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "beta > 0 required, got {beta}"
            )));
        }
        if n_levels < 2 {
            return Err(Error::InvalidTruncation(format!(
                "N >= 2 required, got {n_levels}"
            )));
        }
        let (lambda, mu) = (0..n_levels).map(|n| bose_rates(beta, n)).unzip();
        let log_pi = (0..n_levels).map(|n| -beta * n as f64).collect();
        Ok(Self {
            beta,
            lambda,
            mu,
            log_pi,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.lambda.len()
    }

    /// Normalized stationary weights on the truncation.
    pub fn pi_tilde(&self) -> Vec<f64> {
        let z = neumaier_sum(self.log_pi.iter().map(|l| l.exp()));
        self.log_pi.iter().map(|l| l.exp() / z).collect()
    }

    /// Largest relative mismatch of `log(lambda_n pi_n)` and
    /// `log(mu_{n+1} pi_{n+1})` over `n < N-1`.
    pub fn detailed_balance_residual(&self) -> f64 {
        (0..self.n_levels() - 1)
            .map(|n| {
                let lhs = self.lambda[n].ln() + self.log_pi[n];
                let rhs = self.mu[n + 1].ln() + self.log_pi[n + 1];
                (lhs - rhs).abs() / lhs.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Compensated summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Upper bound on `sum_{y >= N} pi_y`, or `None` when the bound is not
/// rigorous because the gaps `omega_k` are not yet nondecreasing at `k = N`.
///
/// The bound uses `sum_{y>u} pi_y <= pi_{u+1} / (1 - exp(-beta omega_{u+1}))`
/// with `u = N - 1`, which needs `omega_{k+1} >= omega_k` for every `k >= N`,
/// that is `r^{N-1} (r-1)^2 >= |q|^{N-1} (1-q)^2`.
pub fn tail_bound(table: &SpectrumTable) -> Option<f64> {
    let p = table.params();
    let n = table.n_levels();
    let u = (n - 1) as f64;
    let lhs = u * p.r.ln() + 2.0 * (p.r - 1.0).ln();
    let rhs = u * p.q.abs().ln() + 2.0 * (1.0 - p.q).abs().ln();
    if !(p.r > 1.0) || lhs < rhs {
        return None;
    }
    let omega_n = table.omegas()[n - 1];
    if !(omega_n > 0.0) {
        return None;
    }
    let pi_n = (-p.beta * table.energy(n)).exp();
    Some(pi_n / -(-p.beta * omega_n).exp_m1())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryDensity {
    /// `log pi_n` for the retained levels.
    pub log_weights: Vec<f64>,
    /// Sum of the retained weights; the full `Z_beta` exceeds it by at most
    /// `tail_bound`.
    pub z_beta: f64,
    pub tail_bound: f64,
}

impl StationaryDensity {
    /// `pi_n / Z` over the truncation.
    pub fn pi_tilde(&self) -> Vec<f64> {
        self.log_weights
            .iter()
            .map(|l| l.exp() / self.z_beta)
            .collect()
    }
}

pub fn stationary_density(
    params: &DeformationParams,
    n_levels: usize,
) -> Result<StationaryDensity> {
    stationary_density_with_tol(params, n_levels, DENSITY_TAIL_TOL)
}

pub(crate) fn stationary_density_with_tol(
    params: &DeformationParams,
    n_levels: usize,
    rel_tol: f64,
) -> Result<StationaryDensity> {
    params.require_region_a_strict()?;
    if n_levels < 2 {
        return Err(Error::InvalidTruncation(format!(
            "N >= 2 required, got {n_levels}"
        )));
    }
    let table = SpectrumTable::new(*params, n_levels)?;
    let log_weights = table.log_weights();
    let z_beta = neumaier_sum(log_weights.iter().map(|l| l.exp()));
    let tail = tail_bound(&table).unwrap_or(f64::INFINITY);
    if !(tail <= rel_tol * z_beta) {
        return Err(Error::TruncationTooSmall {
            levels: n_levels,
            tail,
            limit: rel_tol * z_beta,
        });
    }
    Ok(StationaryDensity {
        log_weights,
        z_beta,
        tail_bound: tail,
    })
}

/// Smallest `N >= min_levels` whose rigorous tail bound is at most
/// `rel_tol * Z_beta`.
pub fn levels_for_tail(
    params: &DeformationParams,
    rel_tol: f64,
    min_levels: usize,
) -> Result<usize> {
    params.require_region_a_strict()?;
    let table = SpectrumTable::largest_fitting(*params, DEFAULT_MAX_LEVEL)?;
    let mut z = 0.0;
    for n in 1..table.n_levels() {
        z += (-params.beta * table.energy(n - 1)).exp();
        if n < min_levels.max(2) {
            continue;
        }
        let sub = SpectrumTable::new(*params, n)?;
        if tail_bound(&sub).is_some_and(|t| t <= rel_tol * z) {
            return Ok(n);
        }
    }
    Err(Error::TruncationTooSmall {
        levels: table.n_levels(),
        tail: f64::INFINITY,
        limit: rel_tol,
    })
}

/// Full partition function, summed until the rigorous tail is below
/// `1e-17 Z`.
pub fn partition_function(params: &DeformationParams) -> Result<f64> {
    Ok(1.0 + excited_weight(params)?)
}

/// `Z_beta - 1 = sum_{n >= 1} pi_n`, summed without the ground term so it
/// keeps full relative precision at low temperature.
pub fn excited_weight(params: &DeformationParams) -> Result<f64> {
    let n = levels_for_tail(params, 1e-17, 2)?;
    let d = stationary_density_with_tol(params, n, 1e-17)?;
    Ok(neumaier_sum(d.log_weights[1..].iter().map(|l| l.exp())))
}

/// Evidence for non-explosion of the infinite chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KMReport {
    /// `log` of `(1/(lambda_n pi_n)) sum_{k=1}^n pi_k` for `n = 1..=m`.
    pub log_terms: Vec<f64>,
    /// `log S_m` of the partial sums.
    pub log_partial_sums: Vec<f64>,
    pub strictly_increasing: bool,
    /// Last ten term ratios exceed one and the last term exceeds the
    /// preceding partial sum.
    pub diverges: bool,
    /// `log(term_m / term_{m-1})` at the end of the scan.
    pub witness_rate: f64,
    pub label: &'static str,
}

pub fn km_conservativity(params: &DeformationParams, n_terms: usize) -> Result<KMReport> {
    params.require_region_a_strict()?;
    if n_terms < 10 {
        return Err(Error::InvalidTruncation(format!(
            "n_terms >= 10 required, got {n_terms}"
        )));
    }
    let beta = params.beta;
    let eps: Vec<f64> = eps_iter(params).take(n_terms + 2).collect();
    if let Some(n) = eps.iter().position(|e| !e.is_finite()) {
        return Err(Error::Overflow {
            level: n,
            cap: n_terms + 1,
        });
    }
    // log(e^x - 1) without overflow for large x
    let log_expm1 = |x: f64| {
        if x > 30.0 {
            x + (-(-x).exp()).ln_1p()
        } else {
            x.exp_m1().ln()
        }
    };

    let mut log_terms = Vec::with_capacity(n_terms);
    let mut log_partial_sums = Vec::with_capacity(n_terms);
    let mut log_pi_sum = f64::NEG_INFINITY;
    let mut log_s = f64::NEG_INFINITY;
    for n in 1..=n_terms {
        log_pi_sum = log_add(log_pi_sum, -beta * eps[n]);
        let log_inv_lambda = log_expm1(beta * (eps[n + 1] - eps[n])) - eps[n + 1].ln();
        let t = beta * eps[n] + log_inv_lambda + log_pi_sum;
        log_s = log_add(log_s, t);
        log_terms.push(t);
        log_partial_sums.push(log_s);
    }
    let strictly_increasing = log_partial_sums.windows(2).all(|w| w[1] > w[0]);
    let m = log_terms.len();
    let ratios_grow = log_terms[m.saturating_sub(11)..]
        .windows(2)
        .all(|w| w[1] > w[0]);
    let dominates = log_terms[m - 1] > log_partial_sums[m - 2];
    Ok(KMReport {
        witness_rate: log_terms[m - 1] - log_terms[m - 2],
        log_terms,
        log_partial_sums,
        strictly_increasing,
        diverges: ratios_grow && dominates,
        label: "consistent with divergence (numerical evidence)",
    })
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `sum_n pi~_n lambda_n (f_{n+1} - f_n)^2` over the truncation.
pub fn dirichlet_form_classical(chain: &BDChain, f: &[f64]) -> Result<f64> {
    let n = chain.n_levels();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.len(),
        });
    }
    let pi = chain.pi_tilde();
    Ok(neumaier_sum((0..n - 1).map(|k| {
        pi[k] * chain.lambda[k] * (f[k + 1] - f[k]).powi(2)
    })))
}

/// `sum_n pi~_n f_n^2`.
pub fn l2_norm_sq(chain: &BDChain, f: &[f64]) -> Result<f64> {
    let n = chain.n_levels();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.len(),
        });
    }
    let pi = chain.pi_tilde();
    Ok(neumaier_sum(pi.iter().zip(f).map(|(p, v)| p * v * v)))
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        })
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.dim() {
            let b2 = if i == 0 {
                0.0
            } else {
                self.off[i - 1] * self.off[i - 1]
            };
            d = self.diag[i] - x - b2 / d;
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Interval containing every eigenvalue.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut rad = 0.0;
            if i > 0 {
                rad += self.off[i - 1].abs();
            }
            if i + 1 < n {
                rad += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - rad);
            hi = hi.max(self.diag[i] + rad);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection in `[lo, hi]`,
    /// stopping at relative width `rel_tol`.
    pub fn eigenvalue_in(&self, k: usize, mut lo: f64, mut hi: f64, rel_tol: f64) -> Result<f64> {
        if k >= self.dim() {
            return Err(Error::Index {
                index: k,
                min: 0,
                max: self.dim() - 1,
            });
        }
        for _ in 0..4000 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= rel_tol * lo.abs().max(hi.abs()) || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::NoConvergence(format!(
            "bisection for eigenvalue {k} did not converge"
        )))
    }

    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        let (lo, hi) = self.gershgorin();
        let pad = f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
        self.eigenvalue_in(k, lo - pad, hi + pad, 1e-15)
    }
}

/// `-A` in the symmetric coordinates `g_n = sqrt(pi~_n) f_n`, with the
/// reflecting top boundary.
pub fn symmetrized_tridiagonal(chain: &BDChain) -> SymTridiagonal {
    let n = chain.n_levels();
    let diag = (0..n)
        .map(|k| if k + 1 < n { chain.lambda[k] } else { 0.0 } + chain.mu[k])
        .collect();
    let off = (0..n - 1)
        .map(|k| -(chain.lambda[k] * chain.mu[k + 1]).sqrt())
        .collect();
    SymTridiagonal { diag, off }
}

/// `B B^T` where `-A = B^T B` in symmetric coordinates; it carries the
/// nonzero spectrum of [`symmetrized_tridiagonal`] and is positive definite.
pub fn dual_tridiagonal(chain: &BDChain) -> SymTridiagonal {
    let n = chain.n_levels();
    let diag = (0..n - 1)
        .map(|k| chain.lambda[k] + chain.mu[k + 1])
        .collect();
    let off = (0..n.saturating_sub(2))
        .map(|k| -(chain.mu[k + 1] * chain.lambda[k + 1]).sqrt())
        .collect();
    SymTridiagonal { diag, off }
}

/// Smallest nonzero eigenvalue of the truncated chain.
pub fn chain_gap(chain: &BDChain) -> Result<f64> {
    let dual = dual_tridiagonal(chain);
    let hi = dual.diag.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = dual.eigenvalue_in(0, 0.0, hi * (1.0 + 1e-15), 1e-15)?;
    if !(gap > 0.0) {
        return Err(Error::NoConvergence(format!("nonpositive gap {gap}")));
    }
    Ok(gap)
}

/// Spectral gap of the diagonal dynamics on `N` levels.
pub fn diagonal_gap_numeric(params: &DeformationParams, n_levels: usize) -> Result<f64> {
    if n_levels < 16 {
        return Err(Error::InvalidTruncation(format!(
            "N >= 16 required, got {n_levels}"
        )));
    }
    stationary_density_with_tol(params, n_levels, GAP_TAIL_TOL)?;
    chain_gap(&BDChain::new(params, n_levels)?)
}

/// Per-level slack of the tail inequalities; nonnegative means the
/// inequality holds. Slacks of the series bounds are relative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityRow {
    pub u: usize,
    /// `1 - T (1 - e^{-x})^2` with `T = sum_{y>u} (y-u) pi_y / pi_{u+1}`.
    pub a1_slack: f64,
    /// Right side minus left side of `sum_{x<u} (u-x) pi_x <= ...`.
    pub a2_moment_slack: f64,
    /// Right side minus left side of `sum_{x<=u} pi_x <= ...`.
    pub a2_mass_slack: f64,
    /// `sum_{y>u} pi_y / pi_{u+1} - 1`.
    pub a3_lower_slack: f64,
    /// `1 - (1 - e^{-x}) sum_{y>u} pi_y / pi_{u+1}`.
    pub a3_upper_slack: f64,
}

impl InequalityRow {
    pub fn min_slack(&self) -> f64 {
        [
            self.a1_slack,
            self.a2_moment_slack,
            self.a2_mass_slack,
            self.a3_lower_slack,
            self.a3_upper_slack,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub rows: Vec<InequalityRow>,
    pub all_hold: bool,
}

/// Series over `y > u` of `w(y) exp(-beta (eps_y - eps_{u+1}))`, summed to
/// negligible terms and closed with a geometric bound. Returns lower and
/// upper estimates.
fn tail_series(eps: &[f64], u: usize, beta: f64, weight: impl Fn(usize) -> f64) -> (f64, f64) {
    let base = eps[u + 1];
    let mut terms = Vec::new();
    let mut y = u + 1;
    loop {
        let t = weight(y) * (-beta * (eps[y] - base)).exp();
        terms.push(t);
        let sum: f64 = terms.iter().sum();
        if y + 2 >= eps.len() || (t <= 1e-20 * sum && y > u + 1) {
            break;
        }
        y += 1;
    }
    let partial = neumaier_sum(terms.iter().copied());
    // beyond y the gaps are at least omega_{y+1}, so the remaining terms are
    // dominated by weight(y + m) z^m times the last exponential
    let z = (-beta * (eps[y + 1] - eps[y])).exp();
    let last = (-beta * (eps[y] - base)).exp();
    let a = weight(y);
    let w1 = weight(y + 1) - a;
    let geo = last * (a * z / (1.0 - z) + w1 * z / ((1.0 - z) * (1.0 - z)));
    (partial, partial + geo)
}

pub fn appendix_a_validators(params: &DeformationParams, u_max: usize) -> Result<InequalityReport> {
    params.require_region_b()?;
    if u_max < 5 {
        return Err(Error::InvalidTruncation(format!(
            "u_max >= 5 required, got {u_max}"
        )));
    }
    let beta = params.beta;
    let mut eps: Vec<f64> = Vec::new();
    for e in eps_iter(params) {
        let n = eps.len();
        eps.push(e);
        if n > u_max + 2 && (-beta * (e - eps[u_max + 1])).exp() < 1e-40
            || !e.is_finite()
            || n > 1_000_000
        {
            break;
        }
    }
    if eps.iter().any(|e| !e.is_finite()) {
        return Err(Error::Overflow {
            level: eps.len(),
            cap: DEFAULT_MAX_LEVEL,
        });
    }
    let em = -(-beta).exp_m1();
    let pi = |n: usize| (-beta * eps[n]).exp();

    let rows = (0..=u_max)
        .map(|u| {
            let one_minus = -(-beta * (eps[u + 1] - eps[u])).exp_m1();
            let (_, t_up) = tail_series(&eps, u, beta, |y| (y - u) as f64);
            let (s_low, s_up) = tail_series(&eps, u, beta, |_| 1.0);

            let moment = neumaier_sum((0..u).map(|x| (u - x) as f64 * pi(x)));
            let moment_rhs =
                u as f64 / em - (-beta).exp() * -(-beta * u as f64).exp_m1() / (em * em);
            let mass = neumaier_sum((0..=u).map(pi));
            let mass_rhs = -(-beta * (u + 1) as f64).exp_m1() / em;
            InequalityRow {
                u,
                a1_slack: 1.0 - t_up * one_minus * one_minus,
                a2_moment_slack: moment_rhs - moment,
                a2_mass_slack: mass_rhs - mass,
                a3_lower_slack: s_low - 1.0,
                a3_upper_slack: 1.0 - s_up * one_minus,
            }
        })
        .collect::<Vec<_>>();
    let all_hold = rows.iter().all(|r| r.min_slack() >= -INEQUALITY_TOL);
    Ok(InequalityReport { rows, all_hold })
}
