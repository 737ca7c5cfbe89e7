// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Relaxation of density matrices under the truncated predual generator.
//!
//! [`evolve`] integrates `d rho/dt = L_*(rho)` with classical fixed-step RK4
//! and records distances to the invariant state. The weighted distance
//! `||rho_inv^{-1/4} (rho - rho_inv) rho_inv^{-1/4}||_HS` is the norm in
//! which the spectral gap bounds the decay, and [`decay_rate_fit`] reads the
//! asymptotic rate off its logarithm.

use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::birthdeath::BDChain;
use crate::cli::{trajectory_table, Format};
use crate::error::{Error, Result};
use crate::generator::{hermitian_eigenvalues, DensityMatrix, TruncatedGenerator};

/// Upper bound on `dt * max_rate`.
pub const STABILITY_FACTOR: f64 = 0.1;
/// Trace drift that aborts a run.
pub const DRIFT_ABORT: f64 = 1e-6;
/// Population of the top level that aborts a run.
pub const LEAK_TOL: f64 = 1e-6;
/// Stored samples per trajectory, apart from the final state.
pub const MAX_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// `max |tr rho(t) - 1|` over every step, stored or not.
    pub trace_drift: f64,
    pub min_eigs: Vec<f64>,
    pub trace_distances: Vec<f64>,
    pub l2_distances: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states
            .last()
            .expect("trajectories hold the initial state")
    }

    /// Writes one CSV row per stored sample; see [`trajectory_table`].
    ///
    /// [`trajectory_table`]: crate::cli::trajectory_table
    pub fn write_csv<W: Write>(&self, out: W, entries: &[(usize, usize)]) -> Result<()> {
        trajectory_table(self, entries)?.write(Format::Csv, out)
    }
}

/// Stationary state of the truncated chain, `pi_n / sum_{m<N} pi_m`. It is
/// an exact fixed point of the truncated generator.
pub fn truncated_invariant(gen: &TruncatedGenerator) -> Result<DensityMatrix> {
    DensityMatrix::from_populations(&BDChain::from_table(&gen.table).pi_tilde())
}

/// Weighted Hilbert-Schmidt distance to a diagonal faithful `rho_inv`, with
/// weights taken in the log domain so that vanishing differences on
/// negligible levels contribute zero.
pub fn l2_distance(rho: &DMatrix<Complex64>, log_pi_tilde: &[f64]) -> f64 {
    let n = log_pi_tilde.len();
    let mut sum = 0.0;
    for j in 0..n {
        for k in 0..n {
            let mut d = rho[(j, k)];
            if j == k {
                d -= log_pi_tilde[j].exp();
            }
            let a = d.norm();
            if a > 0.0 {
                let log_w = -0.25 * (log_pi_tilde[j] + log_pi_tilde[k]);
                sum += (2.0 * (a.ln() + log_w)).exp();
            }
        }
    }
    sum.sqrt()
}

fn trace_distance_to(rho: &DMatrix<Complex64>, pi: &[f64]) -> f64 {
    let mut diff = rho.clone();
    for (n, p) in pi.iter().enumerate() {
        diff[(n, n)] -= p;
    }
    0.5 * hermitian_eigenvalues(&diff)
        .iter()
        .map(|v| v.abs())
        .sum::<f64>()
}

/// RK4 integration of the predual flow from `rho0` up to `t_max`.
///
/// The step count is `round(t_max / dt)` and the step is exactly `dt`.
pub fn evolve(
    gen: &TruncatedGenerator,
    rho0: &DensityMatrix,
    t_max: f64,
    dt: f64,
) -> Result<Trajectory> {
    let dim = gen.dim();
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho0.dim(),
        });
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "t_max > 0 required, got {t_max}"
        )));
    }
    let dt_max = STABILITY_FACTOR / gen.max_rate();
    if !(dt > 0.0 && dt <= dt_max) {
        return Err(Error::InvalidParams(format!(
            "dt <= 0.1/max_rate = {dt_max:e} required, got {dt}"
        )));
    }
    let top_mass = rho0.matrix()[(dim - 1, dim - 1)].re;
    if top_mass > LEAK_TOL {
        return Err(Error::TruncationLeak { mass: top_mass });
    }

    let inv = truncated_invariant(gen)?;
    let pi = inv.populations();
    let log_pi: Vec<f64> = pi.iter().map(|p| p.ln()).collect();
    let n_steps = ((t_max / dt).round() as usize).max(1);
    let stride = n_steps.div_ceil(MAX_SAMPLES);

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        trace_drift: 0.0,
        min_eigs: Vec::new(),
        trace_distances: Vec::new(),
        l2_distances: Vec::new(),
    };
    let record = |traj: &mut Trajectory, t: f64, rho: &DMatrix<Complex64>| -> Result<()> {
        let min_eig = hermitian_eigenvalues(rho)[0];
        if min_eig < -crate::generator::PSD_TOL {
            return Err(Error::StabilityViolation(format!(
                "eigenvalue {min_eig:e} at t = {t}"
            )));
        }
        traj.times.push(t);
        traj.min_eigs.push(min_eig);
        traj.trace_distances.push(trace_distance_to(rho, &pi));
        traj.l2_distances.push(l2_distance(rho, &log_pi));
        traj.states.push(DensityMatrix::new_unchecked(rho.clone()));
        Ok(())
    };

    let mut rho = rho0.matrix().clone();
    record(&mut traj, 0.0, &rho)?;
    for step in 1..=n_steps {
        let k1 = gen.apply_predual(&rho)?;
        let k2 = gen.apply_predual(&(&rho + &k1 * Complex64::from(0.5 * dt)))?;
        let k3 = gen.apply_predual(&(&rho + &k2 * Complex64::from(0.5 * dt)))?;
        let k4 = gen.apply_predual(&(&rho + &k3 * Complex64::from(dt)))?;
        rho += (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4)
            * Complex64::from(dt / 6.0);
        rho = (&rho + rho.adjoint()) * Complex64::from(0.5);

        let t = step as f64 * dt;
        let drift = (rho.trace().re - 1.0).abs();
        traj.trace_drift = traj.trace_drift.max(drift);
        if drift > DRIFT_ABORT {
            return Err(Error::StabilityViolation(format!(
                "trace drift {drift:e} at t = {t}"
            )));
        }
        let top = rho[(dim - 1, dim - 1)].re;
        if top > LEAK_TOL {
            return Err(Error::TruncationLeak { mass: top });
        }
        if step % stride == 0 || step == n_steps {
            record(&mut traj, t, &rho)?;
        }
    }
    Ok(traj)
}

/// Asymptotic decay rate of the weighted distance: minus the least-squares
/// slope of `log l2_dist` against `t` over the last `tail_fraction` of the
/// samples. Samples below `1e-12` of the initial distance sit at the
/// rounding floor and are dropped.
pub fn decay_rate_fit(traj: &Trajectory, tail_fraction: f64) -> Result<f64> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "tail_fraction in (0, 1] required, got {tail_fraction}"
        )));
    }
    let d0 = traj.l2_distances.first().copied().unwrap_or(0.0);
    let d_end = traj.l2_distances.last().copied().unwrap_or(0.0);
    if !(d0 > 0.0) || !(d_end < 1e-3 * d0) {
        return Err(Error::InsufficientDecay(format!(
            "final distance {d_end:e} is not below 1e-3 of the initial {d0:e}"
        )));
    }
    let floor = 1e-12 * d0;
    let pts: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&traj.l2_distances)
        .filter(|(_, d)| **d > floor)
        .map(|(t, d)| (*t, d.ln()))
        .collect();
    let start = ((1.0 - tail_fraction) * pts.len() as f64).floor() as usize;
    let tail = &pts[start.min(pts.len())..];
    if tail.len() < 3 {
        return Err(Error::InsufficientDecay(format!(
            "{} samples above the rounding floor",
            tail.len()
        )));
    }
    let n = tail.len() as f64;
    let (mt, my) = tail
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (sxy, sxx) = tail.iter().fold((0.0, 0.0), |(a, b), (t, y)| {
        (a + (t - mt) * (y - my), b + (t - mt) * (t - mt))
    });
    let rate = -sxy / sxx;
    if !(rate > 0.0) {
        return Err(Error::InsufficientDecay(format!(
            "fitted slope {} is not negative",
            -rate
        )));
    }
    Ok(rate)
}

/// Initial conditions offered by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// `|e_0><e_0|`.
    Ground,
    /// `|e_n><e_n|`.
    Level(usize),
    /// The invariant state itself.
    Invariant,
    /// Diagonal with populations proportional to `(n+1) pi_n`.
    ThermalPerturbed,
    /// `rho_inv + delta (|e_j><e_k| + |e_k><e_j|)` with
    /// `delta = sqrt(pi_j pi_k) / 2`.
    Coherence(usize, usize),
}

impl InitialState {
    pub fn build(&self, gen: &TruncatedGenerator) -> Result<DensityMatrix> {
        let dim = gen.dim();
        let pi = truncated_invariant(gen)?.populations();
        let check = |n: usize| {
            if n >= dim {
                Err(Error::Index {
                    index: n,
                    min: 0,
                    max: dim - 1,
                })
            } else {
                Ok(())
            }
        };
        match *self {
            InitialState::Ground => DensityMatrix::level(dim, 0),
            InitialState::Level(n) => DensityMatrix::level(dim, n),
            InitialState::Invariant => DensityMatrix::from_populations(&pi),
            InitialState::ThermalPerturbed => {
                let w: Vec<f64> = pi
                    .iter()
                    .enumerate()
                    .map(|(n, p)| (n + 1) as f64 * p)
                    .collect();
                let s: f64 = w.iter().sum();
                DensityMatrix::from_populations(&w.iter().map(|x| x / s).collect::<Vec<_>>())
            }
            InitialState::Coherence(j, k) => {
                check(j)?;
                check(k)?;
                if j == k {
                    return Err(Error::InvalidPair(j));
                }
                let delta = 0.5 * (pi[j] * pi[k]).sqrt();
                let mut m = DensityMatrix::from_populations(&pi)?.into_matrix();
                m[(j, k)] += delta;
                m[(k, j)] += delta;
                DensityMatrix::new(m)
            }
        }
    }
}

impl FromStr for InitialState {
    type Err = Error;

    /// Accepts `ground`, `invariant`, `thermal-perturbed`, `level:n` and
    /// `coherence:j,k` (parentheses optional).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("unknown initial state '{s}'"));
        let s = s.trim();
        match s {
            "ground" => return Ok(InitialState::Ground),
            "invariant" => return Ok(InitialState::Invariant),
            "thermal-perturbed" => return Ok(InitialState::ThermalPerturbed),
            _ => {}
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "level" => arg
                .trim()
                .parse()
                .map(InitialState::Level)
                .map_err(|_| bad()),
            "coherence" => {
                let inner = arg.trim().trim_start_matches('(').trim_end_matches(')');
                let (j, k) = inner.split_once(',').ok_or_else(bad)?;
                let j = j.trim().parse().map_err(|_| bad())?;
                let k = k.trim().parse().map_err(|_| bad())?;
                Ok(InitialState::Coherence(j, k))
            }
            _ => Err(bad()),
        }
    }
}
