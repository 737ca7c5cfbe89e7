// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! (q,r)-integers, nearest-neighbour Bohr frequencies and truncated ladder
//! operators of the generalized Fibonacci oscillator.
//!
//! The spectrum of `H_S = a†a` is the generalized Fibonacci sequence
//!
//! ```text
//! eps_0 = 0,  eps_1 = 1,  eps_n = (r^n - q^n) / (r - q)
//! eps_{n+2} = (r + q) eps_{n+1} - r q eps_n
//! ```
//!
//! and the ladder operators act as `a e_n = sqrt(eps_n) e_{n-1}`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Levels above this are evaluated with the three-term recurrence instead of
/// the two-power formula.
pub const POWER_FORMULA_MAX: usize = 64;

/// Default cap on the level index accepted by [`qr_integer`].
pub const DEFAULT_MAX_LEVEL: usize = 1024;

/// Largest energy a table may hold; beyond this exponentials of `beta * eps`
/// and products of rates stop being meaningful.
pub const EPS_CEILING: f64 = 1e300;

/// Relative tolerance for the monotonicity scans.
pub const SCAN_TOL: f64 = 1e-12;

/// Deformation parameters `(r, q)` and inverse temperature `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeformationParams {
    pub r: f64,
    pub q: f64,
    pub beta: f64,
}

impl DeformationParams {
    /// Validates `r > q` and `beta > 0`. Region membership is not required
    /// here; downstream operations check the region they need.
    pub fn new(r: f64, q: f64, beta: f64) -> Result<Self> {
        if !(r.is_finite() && q.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "r, q, beta must be finite, got r={r}, q={q}, beta={beta}"
            )));
        }
        if r == q {
            return Err(Error::DegenerateParams(format!("r = q = {r}")));
        }
        if r < q {
            return Err(Error::InvalidParams(format!(
                "r > q required, got r={r}, q={q}"
            )));
        }
        if beta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "beta > 0 required, got {beta}"
            )));
        }
        Ok(Self { r, q, beta })
    }

    /// The golden-ratio pair that produces the classical Fibonacci numbers.
    pub fn fibonacci(beta: f64) -> Result<Self> {
        let s5 = 5f64.sqrt();
        Self::new((1.0 + s5) / 2.0, (1.0 - s5) / 2.0, beta)
    }

    pub fn with_beta(self, beta: f64) -> Result<Self> {
        Self::new(self.r, self.q, beta)
    }

    pub fn sum(&self) -> f64 {
        self.r + self.q
    }

    pub fn product(&self) -> f64 {
        self.r * self.q
    }

    /// `-1 <= q <= 1 < r` and `r + q >= 1`.
    pub fn region_a(&self) -> bool {
        -1.0 <= self.q && self.q <= 1.0 && 1.0 < self.r && self.sum() >= 1.0
    }

    /// Region A with `r + q >= 2` (nondecreasing Bohr frequencies).
    pub fn region_b(&self) -> bool {
        self.region_a() && self.sum() >= 2.0
    }

    /// Region B with `q >= -2/3`.
    pub fn region_c(&self) -> bool {
        self.region_b() && self.q >= -2.0 / 3.0
    }

    /// Region A with `r + q > 1` strictly, so every Bohr frequency is positive.
    pub fn region_a_strict(&self) -> bool {
        self.region_a() && self.sum() > 1.0
    }

    /// Human-readable name of the first violated region-A inequality.
    pub fn region_a_violation(&self) -> Option<String> {
        if self.q < -1.0 {
            Some(format!("q >= -1 required, got {}", self.q))
        } else if self.q > 1.0 {
            Some(format!("q <= 1 required, got {}", self.q))
        } else if self.r <= 1.0 {
            Some(format!("r > 1 required, got {}", self.r))
        } else if self.sum() < 1.0 {
            Some(format!("r+q >= 1 required, got {}", self.sum()))
        } else {
            None
        }
    }

    pub(crate) fn require_region_a_strict(&self) -> Result<()> {
        if let Some(v) = self.region_a_violation() {
            return Err(Error::RegionViolation(v));
        }
        if self.sum() <= 1.0 {
            return Err(Error::DegenerateParams(format!(
                "r+q > 1 required (omega_2 = 0 makes the thermal rates diverge), got {}",
                self.sum()
            )));
        }
        Ok(())
    }

    pub(crate) fn require_region_b(&self) -> Result<()> {
        if let Some(v) = self.region_a_violation() {
            return Err(Error::RegionViolation(v));
        }
        if self.sum() < 2.0 {
            return Err(Error::RegionViolation(format!(
                "r+q >= 2 required, got {}",
                self.sum()
            )));
        }
        Ok(())
    }
}

/// The (q,r)-integer `eps_n` with the default level cap.
pub fn qr_integer(params: &DeformationParams, n: usize) -> Result<f64> {
    qr_integer_capped(params, n, DEFAULT_MAX_LEVEL)
}

/// The (q,r)-integer `eps_n`, refusing levels above `max_level`.
pub fn qr_integer_capped(params: &DeformationParams, n: usize, max_level: usize) -> Result<f64> {
    if n > max_level {
        return Err(Error::Overflow {
            level: n,
            cap: max_level,
        });
    }
    let value = match n {
        0 => 0.0,
        1 => 1.0,
        n if n <= POWER_FORMULA_MAX => power_formula(params, n),
        n => {
            let (s, p) = (params.sum(), params.product());
            let mut prev = power_formula(params, POWER_FORMULA_MAX - 1);
            let mut cur = power_formula(params, POWER_FORMULA_MAX);
            for _ in POWER_FORMULA_MAX..n {
                let next = s * cur - p * prev;
                prev = cur;
                cur = next;
                if !cur.is_finite() {
                    break;
                }
            }
            cur
        }
    };
    if !value.is_finite() || value.abs() > EPS_CEILING {
        return Err(Error::Overflow {
            level: n,
            cap: max_level,
        });
    }
    Ok(value)
}

fn power_formula(params: &DeformationParams, n: usize) -> f64 {
    let e = n as i32;
    (params.r.powi(e) - params.q.powi(e)) / (params.r - params.q)
}

/// Unbounded stream `eps_0, eps_1, ...`, switching from the power formula to
/// the recurrence past [`POWER_FORMULA_MAX`]. Values grow without a cap;
/// callers stop when they have what they need.
pub fn eps_iter(params: &DeformationParams) -> impl Iterator<Item = f64> {
    let p = *params;
    let (s, prod) = (p.sum(), p.product());
    let mut prev2 = 0.0;
    let mut prev1 = 0.0;
    (0usize..).map(move |n| {
        let v = match n {
            0 => 0.0,
            1 => 1.0,
            n if n <= POWER_FORMULA_MAX => power_formula(&p, n),
            _ => s * prev1 - prod * prev2,
        };
        prev2 = prev1;
        prev1 = v;
        v
    })
}

/// `eps_0 ..= eps_N` together with the nearest-neighbour gaps `omega_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    params: DeformationParams,
    n_levels: usize,
    eps: Vec<f64>,
    omega: Vec<f64>,
}

impl SpectrumTable {
    /// Builds the table for levels `0..n_levels`, storing one extra energy
    /// `eps_N` so the rates of the top transition are available.
    pub fn new(params: DeformationParams, n_levels: usize) -> Result<Self> {
        if n_levels == 0 {
            return Err(Error::InvalidTruncation(
                "at least one level required".into(),
            ));
        }
        if n_levels > DEFAULT_MAX_LEVEL {
            return Err(Error::Overflow {
                level: n_levels,
                cap: DEFAULT_MAX_LEVEL,
            });
        }
        let (s, p) = (params.sum(), params.product());
        let mut eps = Vec::with_capacity(n_levels + 1);
        for n in 0..=n_levels {
            let v = if n <= POWER_FORMULA_MAX {
                match n {
                    0 => 0.0,
                    1 => 1.0,
                    _ => power_formula(&params, n),
                }
            } else {
                s * eps[n - 1] - p * eps[n - 2]
            };
            if !v.is_finite() || v.abs() > EPS_CEILING {
                return Err(Error::Overflow {
                    level: n,
                    cap: DEFAULT_MAX_LEVEL,
                });
            }
            eps.push(v);
        }
        let omega = eps.windows(2).map(|w| w[1] - w[0]).collect();
        Ok(Self {
            params,
            n_levels,
            eps,
            omega,
        })
    }

    /// Largest table whose top energy stays below `EPS_CEILING`, capped at
    /// `max_levels`.
    pub fn largest_fitting(params: DeformationParams, max_levels: usize) -> Result<Self> {
        let mut n = max_levels.min(DEFAULT_MAX_LEVEL);
        loop {
            match Self::new(params, n) {
                Err(Error::Overflow { level, .. }) if level > 1 => n = level - 1,
                other => return other,
            }
        }
    }

    pub fn params(&self) -> &DeformationParams {
        &self.params
    }

    /// Truncation `N` (number of retained levels).
    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    /// `eps_0 ..= eps_N`.
    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    /// `eps_n` for `0 <= n <= N`.
    pub fn energy(&self, n: usize) -> f64 {
        self.eps[n]
    }

    /// `omega_1 ..= omega_N`, so `omegas()[n - 1]` is `omega_n`.
    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    /// `log pi_n = -beta eps_n` for the retained levels `0..N`.
    pub fn log_weights(&self) -> Vec<f64> {
        self.eps[..self.n_levels]
            .iter()
            .map(|e| -self.params.beta * e)
            .collect()
    }

    /// True on the boundary `r + q = 1`, where `omega_2 = 0`.
    pub fn is_degenerate_boundary(&self) -> bool {
        self.params.sum() == 1.0
    }

    /// Largest scaled residual of the three-term recurrence over the table.
    pub fn recurrence_residual(&self) -> f64 {
        let (s, p) = (self.params.sum(), self.params.product());
        self.eps
            .windows(3)
            .map(|w| {
                let res = w[2] - s * w[1] + p * w[0];
                let scale = w[2].abs().max(s.abs() * w[1].abs()).max(1.0);
                res.abs() / scale
            })
            .fold(0.0, f64::max)
    }
}

/// `omega_n = eps_n - eps_{n-1}` for `1 <= n <= N`.
pub fn bohr_frequency(table: &SpectrumTable, n: usize) -> Result<f64> {
    if n == 0 || n > table.n_levels {
        return Err(Error::Index {
            index: n,
            min: 1,
            max: table.n_levels,
        });
    }
    Ok(table.omega[n - 1])
}

/// Scan verdict next to the closed-form iff-condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualVerdict {
    pub scan: bool,
    /// `None` when the closed-form condition is outside its hypothesis.
    pub analytic: Option<bool>,
    /// First level at which the scan found a violation.
    pub first_violation: Option<usize>,
}

impl DualVerdict {
    pub fn agrees(&self) -> bool {
        self.analytic.is_none_or(|a| a == self.scan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub n_check: usize,
    pub c: f64,
    pub eps_nondecreasing: DualVerdict,
    pub eps_strictly_increasing: DualVerdict,
    pub omega_nondecreasing: DualVerdict,
    pub ratio_bound_holds: DualVerdict,
}

impl MonotonicityReport {
    pub fn all_agree(&self) -> bool {
        self.eps_nondecreasing.agrees()
            && self.eps_strictly_increasing.agrees()
            && self.omega_nondecreasing.agrees()
            && self.ratio_bound_holds.agrees()
    }
}

/// Checks monotonicity of `eps`, of `omega`, and the bound
/// `eps_k / omega_k >= 1 + 1/(r+q+c)` on levels `1..=n_check`, both by
/// scanning the sequence and through their closed-form characterisations.
///
/// Requires `-1 <= q <= 1 < r`. The ratio bound's closed form is asserted
/// whenever `r + q > 1`, where every `omega_k` is positive and the bound is
/// equivalent to `eps_k <= (r+q+1+c) eps_{k-1}`.
pub fn monotonicity_report(
    params: &DeformationParams,
    n_check: usize,
    c: f64,
) -> Result<MonotonicityReport> {
    if n_check < 3 {
        return Err(Error::InvalidTruncation(format!(
            "n_check >= 3 required, got {n_check}"
        )));
    }
    if !(-1.0..=1.0).contains(&params.q) || params.r <= 1.0 {
        return Err(Error::RegionViolation(format!(
            "-1 <= q <= 1 < r required, got r={}, q={}",
            params.r, params.q
        )));
    }
    if c < 0.0 {
        return Err(Error::InvalidParams(format!("c >= 0 required, got {c}")));
    }
    let table = SpectrumTable::new(*params, n_check)?;
    let eps = table.eps();
    let omega = table.omegas();
    let s = params.sum();
    let tol = |x: f64| SCAN_TOL * x.abs().max(1.0);

    let first = |bad: &mut dyn Iterator<Item = usize>| bad.next();

    let eps_bad = first(&mut (1..=n_check).filter(|&n| eps[n] - eps[n - 1] < -tol(eps[n])));
    let eps_strict_bad = first(&mut (1..=n_check).filter(|&n| eps[n] - eps[n - 1] <= tol(eps[n])));
    // omegas()[k] is omega_{k+1}; report the level whose gap shrank
    let omega_bad = first(
        &mut (1..n_check)
            .filter(|&k| omega[k] - omega[k - 1] < -tol(eps[k + 1]))
            .map(|k| k + 1),
    );
    // eps_k / omega_k >= 1 + 1/(s+c)  <=>  eps_k <= (s+c+1) eps_{k-1}  when omega_k > 0
    let ratio_bad =
        first(&mut (2..=n_check).filter(|&k| {
            omega[k - 1] <= 0.0 || (s + c + 1.0) * eps[k - 1] - eps[k] < -tol(eps[k])
        }));

    let verdict = |bad: Option<usize>, analytic: Option<bool>| DualVerdict {
        scan: bad.is_none(),
        analytic,
        first_violation: bad,
    };
    Ok(MonotonicityReport {
        n_check,
        c,
        eps_nondecreasing: verdict(eps_bad, Some(s >= 1.0)),
        eps_strictly_increasing: verdict(eps_strict_bad, Some(s > 1.0)),
        omega_nondecreasing: verdict(omega_bad, Some(s >= 2.0)),
        ratio_bound_holds: verdict(
            ratio_bad,
            (s > 1.0).then(|| (1.0 + c) * s + params.product() >= 0.0),
        ),
    })
}

/// Truncated ladder operators on levels `0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderMatrices {
    pub dim: usize,
    pub a: DMatrix<f64>,
    pub a_dag: DMatrix<f64>,
    pub number_op: DMatrix<f64>,
    pub h_s: DMatrix<f64>,
}

pub fn ladder_matrices(table: &SpectrumTable) -> Result<LadderMatrices> {
    let dim = table.n_levels();
    if let Some(n) = (0..dim).find(|&n| table.energy(n) < 0.0) {
        return Err(Error::NegativeEigenvalue {
            level: n,
            value: table.energy(n),
        });
    }
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = table.energy(n).sqrt();
    }
    let a_dag = a.transpose();
    let number_op = DMatrix::from_fn(dim, dim, |i, j| if i == j { i as f64 } else { 0.0 });
    let h_s = DMatrix::from_fn(dim, dim, |i, j| if i == j { table.energy(i) } else { 0.0 });
    Ok(LadderMatrices {
        dim,
        a,
        a_dag,
        number_op,
        h_s,
    })
}

/// Residuals of `a a† - r a† a = q^N` and `a a† - q a† a = r^N` on the first
/// `N - 1` levels (the top level is cut by the truncation).
///
/// Each entry is divided by `max(1, |a a†| + |c a† a| + |d^n|)` so the
/// residual measures rounding relative to the size of the terms.
pub fn commutation_residuals(
    mats: &LadderMatrices,
    params: &DeformationParams,
) -> Result<(f64, f64)> {
    let n = mats.dim;
    if n < 3 {
        return Err(Error::InvalidTruncation(format!(
            "commutation check needs N >= 3, got {n}"
        )));
    }
    let aad = &mats.a * &mats.a_dag;
    let ada = &mats.a_dag * &mats.a;
    let residual = |c: f64, d: f64| {
        let mut worst = 0.0f64;
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let pow = if i == j { d.powi(i as i32) } else { 0.0 };
                let res = aad[(i, j)] - c * ada[(i, j)] - pow;
                let scale = (aad[(i, j)].abs() + c.abs() * ada[(i, j)].abs() + pow.abs()).max(1.0);
                worst = worst.max(res.abs() / scale);
            }
        }
        worst
    };
    Ok((residual(params.r, params.q), residual(params.q, params.r)))
}
