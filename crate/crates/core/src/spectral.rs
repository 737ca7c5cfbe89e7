// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Spectral gap of the full generator.
//!
//! The gap splits into an off-diagonal part, the smallest `|Re xi_jk|`, and
//! the gap of the birth-death chain on the diagonal. The diagonal part is
//! bracketed by `Z(1 - e^{-beta}) >= 1 - e^{-2 beta}` from below and by
//! `alpha = Z lambda_0 / (Z - 1)` from above.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{qr_integer, DeformationParams};
use crate::birthdeath::{
    diagonal_gap_numeric, excited_weight, partition_function, stationary_density_with_tol,
    GAP_TAIL_TOL,
};
use crate::error::{Error, Result};
use crate::generator::{outflow_rate, DensityMatrix};

/// Slack used by the consistency flags.
pub const FLAG_TOL: f64 = 1e-8;

/// Gibbs state `exp(-beta eps_n) / Z` on `N` levels.
pub fn invariant_state(params: &DeformationParams, n_levels: usize) -> Result<DensityMatrix> {
    let d = stationary_density_with_tol(params, n_levels, GAP_TAIL_TOL)?;
    DensityMatrix::from_populations(&d.pi_tilde())
}

/// `rho^{1/4} x rho^{1/4}` for a faithful diagonal `rho`.
pub fn embed_l2(rho_inv: &DensityMatrix, x: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = rho_inv.dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.nrows().max(x.ncols()),
        });
    }
    let m = rho_inv.matrix();
    let off = (0..n)
        .flat_map(|j| (0..n).filter(move |&k| k != j).map(move |k| (j, k)))
        .any(|(j, k)| m[(j, k)].norm() > 0.0);
    if off {
        return Err(Error::NonDiagonalInvariant);
    }
    let quarter: Vec<f64> = rho_inv.populations().iter().map(|p| p.powf(0.25)).collect();
    if quarter.iter().any(|q| !(*q > 0.0)) {
        return Err(Error::InvalidState(
            "invariant state is not faithful".into(),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |j, k| {
        x[(j, k)] * quarter[j] * quarter[k]
    }))
}

/// Hilbert-Schmidt norm.
pub fn hs_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OffdiagMinimum {
    pub value: f64,
    pub argmin: (usize, usize),
    /// Levels examined before the cutoff.
    pub levels_searched: usize,
}

/// Minimum of `(s_j + s_k)/2` over `j != k`, where `s_j` is the outflow
/// rate of level `j`. Since `s_j >= eps_j`, no level with `eps_j` above the
/// second-smallest `s` seen so far can improve the result, which ends the
/// search.
pub fn offdiag_minimum(params: &DeformationParams) -> Result<OffdiagMinimum> {
    params.require_region_a_strict()?;
    // (value, index) of the two smallest outflow rates
    let mut best = [(f64::INFINITY, 0usize); 2];
    let mut j = 0;
    loop {
        let eps_j = qr_integer(params, j)?;
        if j >= 2 && eps_j >= best[1].0 {
            break;
        }
        let s = outflow_rate(params, j)?;
        if s < best[0].0 {
            best = [(s, j), best[0]];
        } else if s < best[1].0 {
            best[1] = (s, j);
        }
        j += 1;
    }
    let (a, b) = (best[0].1, best[1].1);
    Ok(OffdiagMinimum {
        value: 0.5 * (best[0].0 + best[1].0),
        argmin: (a.min(b), a.max(b)),
        levels_searched: j,
    })
}

/// Value at the pair `(0, 1)`:
/// `((e^b + 1)/(e^b - 1) + (r+q)/(e^{b(r+q-1)} - 1)) / 2`.
pub fn offdiag_closed_form(params: &DeformationParams) -> f64 {
    let (b, s) = (params.beta, params.sum());
    0.5 * (1.0 + 2.0 / b.exp_m1() + s / (b * (s - 1.0)).exp_m1())
}

/// `(Z(1 - e^{-beta}), 1 - e^{-2 beta})`.
pub fn diag_lower_bounds(params: &DeformationParams) -> Result<(f64, f64)> {
    params.require_region_b()?;
    let z = partition_function(params)?;
    let b = params.beta;
    Ok((z * -(-b).exp_m1(), -(-2.0 * b).exp_m1()))
}

/// `alpha = 1 / ((e^beta - 1)(1 - 1/Z))`.
pub fn diag_upper_alpha(params: &DeformationParams) -> Result<f64> {
    let excited = excited_weight(params)?;
    Ok((1.0 + excited) / (params.beta.exp_m1() * excited))
}

/// `alpha` for the undeformed oscillator, `1/(1 - e^{-beta})`.
pub fn bose_alpha(beta: f64) -> f64 {
    1.0 / -(-beta).exp_m1()
}

/// Off-diagonal minimum of the undeformed oscillator,
/// `(1 + 3 e^{-beta}) / (2 (1 - e^{-beta}))`.
pub fn bose_offdiag_min(beta: f64) -> f64 {
    (1.0 + 3.0 * (-beta).exp()) / (2.0 * -(-beta).exp_m1())
}

/// Inverse temperature where the two undeformed comparison values meet.
pub fn bose_crossover() -> Result<f64> {
    bisect(|b| bose_offdiag_min(b) - bose_alpha(b), 0.01, 20.0, 1e-13)
        .ok_or_else(|| Error::NoRootInRange("undeformed crossover".into()))
}

/// Root of `f` in `[lo, hi]` when `f` changes sign there.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub r: f64,
    pub q: f64,
    pub beta: f64,
    pub n_levels: usize,
    pub offdiag_min: f64,
    pub offdiag_argmin: (usize, usize),
    /// The `(0, 1)` closed form, for comparison with the searched minimum.
    pub offdiag_closed_form: f64,
    pub diag_lower_strong: Option<f64>,
    pub diag_lower_weak: Option<f64>,
    pub diag_upper_alpha: f64,
    pub diag_numeric: f64,
    /// `min(1 - e^{-2 beta}, offdiag_min)`.
    pub gap_formula_paper: Option<f64>,
    /// `min(diag_numeric, offdiag_min)`.
    pub gap_numeric: f64,
    /// `gap_formula_paper < gap_numeric`: the formula acts as a lower bound.
    pub formula_below_numeric: bool,
    /// `weak <= strong <= diag_numeric <= alpha`, each within tolerance.
    pub sandwich_holds: Option<bool>,
    /// `alpha` below the numeric diagonal gap.
    pub alpha_below_numeric: bool,
}

pub fn gap_report(params: &DeformationParams, n_levels: usize) -> Result<GapReport> {
    params.require_region_a_strict()?;
    let off = offdiag_minimum(params)?;
    let diag_numeric = diagonal_gap_numeric(params, n_levels)?;
    let alpha = diag_upper_alpha(params)?;
    let lower = if params.region_b() {
        Some(diag_lower_bounds(params)?)
    } else {
        None
    };
    let gap_numeric = diag_numeric.min(off.value);
    let gap_formula_paper = lower.map(|(_, weak)| weak.min(off.value));
    let sandwich_holds = lower.map(|(strong, weak)| {
        weak <= strong + FLAG_TOL
            && strong <= diag_numeric + FLAG_TOL
            && diag_numeric <= alpha + FLAG_TOL
    });
    Ok(GapReport {
        r: params.r,
        q: params.q,
        beta: params.beta,
        n_levels,
        offdiag_min: off.value,
        offdiag_argmin: off.argmin,
        offdiag_closed_form: offdiag_closed_form(params),
        diag_lower_strong: lower.map(|l| l.0),
        diag_lower_weak: lower.map(|l| l.1),
        diag_upper_alpha: alpha,
        diag_numeric,
        gap_formula_paper,
        gap_numeric,
        formula_below_numeric: gap_formula_paper.is_some_and(|g| g < gap_numeric - FLAG_TOL),
        sandwich_holds,
        alpha_below_numeric: alpha < diag_numeric - FLAG_TOL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub r: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveMiss {
    pub curve: &'static str,
    pub r: f64,
    pub reason: String,
}

/// Level curves in the `(r, beta)` plane at fixed `q`.
///
/// `upper` is where the off-diagonal minimum equals `1 - e^{-2 beta}`; above
/// it the off-diagonal sector sets the gap. `lower` is where it equals
/// `alpha`; below it the diagonal sector does.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingCurves {
    pub q: f64,
    pub upper: Vec<CurvePoint>,
    pub lower: Vec<CurvePoint>,
    pub misses: Vec<CurveMiss>,
}

pub fn crossing_curves(
    q: f64,
    r_range: (f64, f64),
    beta_range: (f64, f64),
    resolution: usize,
) -> CrossingCurves {
    let mut out = CrossingCurves {
        q,
        upper: Vec::new(),
        lower: Vec::new(),
        misses: Vec::new(),
    };
    let (r0, r1) = r_range;
    let (b0, b1) = beta_range;
    if resolution == 0 || !(r1 >= r0) || !(b1 > b0) {
        return out;
    }
    for i in 0..resolution {
        let r = if resolution == 1 {
            r0
        } else {
            r0 + (r1 - r0) * i as f64 / (resolution - 1) as f64
        };
        let at = |beta: f64| DeformationParams::new(r, q, beta);
        if let Err(e) = at(b0).and_then(|p| p.require_region_b()) {
            for curve in ["upper", "lower"] {
                out.misses.push(CurveMiss {
                    curve,
                    r,
                    reason: e.to_string(),
                });
            }
            continue;
        }
        let off = |beta: f64| at(beta).and_then(|p| offdiag_minimum(&p)).map(|o| o.value);
        let weak = |beta: f64| -(-2.0 * beta).exp_m1();
        let alpha = |beta: f64| at(beta).and_then(|p| diag_upper_alpha(&p));

        let upper = bisect(|b| off(b).map_or(f64::NAN, |o| o - weak(b)), b0, b1, 1e-8);
        let lower = bisect(
            |b| match (off(b), alpha(b)) {
                (Ok(o), Ok(a)) => o - a,
                _ => f64::NAN,
            },
            b0,
            b1,
            1e-8,
        );
        for (curve, root, dest) in [
            ("upper", upper, &mut out.upper),
            ("lower", lower, &mut out.lower),
        ] {
            match root {
                Some(beta) => dest.push(CurvePoint { r, beta }),
                None => out.misses.push(CurveMiss {
                    curve,
                    r,
                    reason: Error::NoRootInRange(format!(
                        "no sign change for beta in [{b0}, {b1}]"
                    ))
                    .to_string(),
                }),
            }
        }
    }
    out
}
