// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Every subcommand resolves a [`RunConfig`] from an optional flat
//! `key = value` file overridden by flags, then returns a [`Table`] that is
//! written as CSV or JSON. Floats are printed with 17 significant digits so
//! that identical configurations give byte-identical output.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::algebra::{DeformationParams, SpectrumTable};
use crate::birthdeath::{levels_for_tail, BDChain};
use crate::coupling::bohr_spectrum;
use crate::dynamics::{evolve, InitialState, Trajectory};
use crate::error::{Error, Result};
use crate::generator::{build_generator, gamma_rates};
use crate::spectral::{crossing_curves, diag_lower_bounds, gap_report, offdiag_minimum, GapReport};

pub const DEFAULT_LEVELS: usize = 64;
pub const DEFAULT_T_MAX: f64 = 10.0;
/// `dt * max_rate` used when no step is given.
pub const DEFAULT_DT_FACTOR: f64 = 0.05;
pub const MAX_SWEEP_POINTS: usize = 1_000_000;
/// Relative agreement needed for the `(0, 1)` closed form to count as exact.
pub const CLOSED_FORM_TOL: f64 = 1e-10;
const BOHR_TOL: f64 = 1e-9;

/// `x` in scientific notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        // adding zero turns -0 into +0
        format!("{:.16e}", x + 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::InvalidParams(format!(
                "format must be csv or json, got '{other}'"
            ))),
        }
    }
}

/// Inclusive grid `start..=stop` with `count` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

impl FromStr for Range {
    type Err = Error;

    /// `start:stop:count`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("range must be start:stop:count, got '{s}'"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(bad());
        };
        let start: f64 = a.trim().parse().map_err(|_| bad())?;
        let stop: f64 = b.trim().parse().map_err(|_| bad())?;
        let count: usize = c.trim().parse().map_err(|_| bad())?;
        if !(start.is_finite() && stop.is_finite()) || count == 0 {
            return Err(bad());
        }
        Ok(Range { start, stop, count })
    }
}

/// Resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub r: Option<f64>,
    pub q: Option<f64>,
    pub beta: Option<f64>,
    pub levels: Option<usize>,
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub r_range: Option<Range>,
    pub q_range: Option<Range>,
    pub beta_range: Option<Range>,
    pub initial: Option<InitialState>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParams(format!("cannot parse {key} = '{value}'")))
}

impl RunConfig {
    /// Parses flat `key = value` lines. `#` starts a comment; keys may use
    /// `-` or `_`.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParams(format!("line {}: expected key = value", i + 1))
            })?;
            cfg.set(&key.trim().replace('-', "_"), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_config_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::InvalidParams(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_config_str(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "r" => self.r = Some(parse_value(key, value)?),
            "q" => self.q = Some(parse_value(key, value)?),
            "beta" => self.beta = Some(parse_value(key, value)?),
            "levels" => self.levels = Some(parse_value(key, value)?),
            "t_max" => self.t_max = Some(parse_value(key, value)?),
            "dt" => self.dt = Some(parse_value(key, value)?),
            "format" => self.format = value.parse()?,
            "out" => self.out = Some(PathBuf::from(value)),
            "workers" => self.workers = Some(parse_value(key, value)?),
            "r_range" => self.r_range = Some(value.parse()?),
            "q_range" => self.q_range = Some(value.parse()?),
            "beta_range" => self.beta_range = Some(value.parse()?),
            "initial" => self.initial = Some(value.parse()?),
            other => {
                return Err(Error::InvalidParams(format!(
                    "unknown config key '{other}'"
                )))
            }
        }
        Ok(())
    }

    fn require(&self, name: &str, v: Option<f64>) -> Result<f64> {
        v.ok_or_else(|| Error::InvalidParams(format!("--{name} is required")))
    }

    /// `(r, q, beta)` with `beta` defaulting to `default_beta`.
    fn params(&self, default_beta: Option<f64>) -> Result<DeformationParams> {
        let r = self.require("r", self.r)?;
        let q = self.require("q", self.q)?;
        let beta = self.require("beta", self.beta.or(default_beta))?;
        DeformationParams::new(r, q, beta)
    }

    fn levels(&self) -> usize {
        self.levels.unwrap_or(DEFAULT_LEVELS)
    }
}

fn require_region_a(p: &DeformationParams) -> Result<()> {
    match p.region_a_violation() {
        Some(v) => Err(Error::RegionViolation(v)),
        None => Ok(()),
    }
}

/// A cell of an output table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(usize),
    Bool(bool),
    Text(String),
    Pair(usize, usize),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<Option<bool>> for Cell {
    fn from(x: Option<bool>) -> Self {
        x.map_or(Cell::Empty, Cell::Bool)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(x) => format_float(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Pair(j, k) => format!("{j}:{k}"),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Float(x) if x.is_finite() => format_float(*x),
            Cell::Float(_) | Cell::Empty => "null".into(),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => serde_json::Value::String(s.clone()).to_string(),
            Cell::Pair(j, k) => format!("[{j},{k}]"),
        }
    }
}

/// Column-named rows. JSON output is an array of objects, or a single
/// object when `single` is set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub single: bool,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
            single: false,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush()?;
            }
            Format::Json => {
                let object = |row: &[Cell]| {
                    let fields: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| {
                            format!("{}:{}", serde_json::Value::String(c.clone()), v.json())
                        })
                        .collect();
                    format!("{{{}}}", fields.join(","))
                };
                if self.single && self.rows.len() == 1 {
                    writeln!(out, "{}", object(&self.rows[0]))?;
                } else {
                    let objs: Vec<String> = self.rows.iter().map(|r| object(r)).collect();
                    writeln!(out, "[{}]", objs.join(",\n"))?;
                }
            }
        }
        Ok(())
    }

    pub fn to_string(&self, format: Format) -> Result<String> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(String::from_utf8(buf).expect("tables are written as UTF-8"))
    }
}

/// `n, eps_n, omega_n, pi_tilde_n` and log weights for `n < N`.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Table> {
    let params = cfg.params(Some(1.0))?;
    require_region_a(&params)?;
    let n = cfg.levels();
    if n == 0 {
        return Err(Error::InvalidTruncation("N >= 1 required, got 0".into()));
    }
    let table = SpectrumTable::new(params, n)?;
    let log_pi = table.log_weights();
    let max = log_pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = max + log_pi.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let mut out = Table::new(&[
        "n",
        "eps_n",
        "omega_n",
        "pi_tilde_n",
        "log_pi_n",
        "log_pi_tilde_n",
    ]);
    for (k, &log_pi_k) in log_pi.iter().enumerate() {
        let omega = if k == 0 {
            Cell::Empty
        } else {
            table.omegas()[k - 1].into()
        };
        out.push(vec![
            k.into(),
            table.energy(k).into(),
            omega,
            (log_pi_k - log_z).exp().into(),
            log_pi_k.into(),
            (log_pi_k - log_z).into(),
        ]);
    }
    Ok(out)
}

/// Thermal rates and birth-death rates per level.
pub fn cmd_rates(cfg: &RunConfig) -> Result<Table> {
    let params = cfg.params(None)?;
    let n = cfg.levels();
    let chain = BDChain::new(&params, n)?;
    let table = SpectrumTable::new(params, n)?;
    let mut out = Table::new(&[
        "n",
        "eps_n",
        "omega_n",
        "gamma_minus_n",
        "gamma_plus_n",
        "lambda_n",
        "mu_n",
    ]);
    for k in 0..n {
        let (omega, gm, gp) = if k == 0 {
            (Cell::Empty, Cell::Empty, Cell::Empty)
        } else {
            let w = table.omegas()[k - 1];
            let (gm, gp) = gamma_rates(w, params.beta)?;
            (w.into(), gm.into(), gp.into())
        };
        let mu = if k == 0 {
            Cell::Empty
        } else {
            chain.mu[k].into()
        };
        out.push(vec![
            k.into(),
            table.energy(k).into(),
            omega,
            gm,
            gp,
            chain.lambda[k].into(),
            mu,
        ]);
    }
    Ok(out)
}

/// Bohr classes of the truncated spectrum.
pub fn cmd_bohr(cfg: &RunConfig) -> Result<Table> {
    let params = cfg.params(Some(1.0))?;
    require_region_a(&params)?;
    let table = SpectrumTable::new(params, cfg.levels())?;
    let spec = bohr_spectrum(&table, BOHR_TOL)?;
    let mut out = Table::new(&["omega", "n_pairs", "pairs", "touches_top"]);
    for (i, w) in spec.omegas.iter().enumerate() {
        let pairs: Vec<String> = spec.pairs[i]
            .iter()
            .map(|(n, m)| format!("{n}:{m}"))
            .collect();
        out.push(vec![
            (*w).into(),
            spec.pairs[i].len().into(),
            Cell::Text(pairs.join(" ")),
            spec.touches_top(i).into(),
        ]);
    }
    Ok(out)
}

const GAP_COLUMNS: [&str; 18] = [
    "r",
    "q",
    "beta",
    "n_levels",
    "offdiag_min",
    "offdiag_argmin",
    "offdiag_closed_form",
    "closed_form_matches",
    "diag_lower_strong",
    "diag_lower_weak",
    "diag_upper_alpha",
    "diag_numeric",
    "gap_formula_paper",
    "gap_numeric",
    "formula_below_numeric",
    "sandwich_holds",
    "alpha_below_numeric",
    "strong_exceeds_weak",
];

/// True when the searched minimum sits at `(0, 1)` and equals the closed form.
pub fn closed_form_matches(rep: &GapReport) -> bool {
    rep.offdiag_argmin == (0, 1)
        && (rep.offdiag_closed_form - rep.offdiag_min).abs()
            <= CLOSED_FORM_TOL * rep.offdiag_min.abs()
}

fn gap_cells(rep: &GapReport) -> Vec<Cell> {
    let strong_exceeds_weak = match (rep.diag_lower_strong, rep.diag_lower_weak) {
        (Some(s), Some(w)) => Cell::Bool(s > w),
        _ => Cell::Empty,
    };
    vec![
        rep.r.into(),
        rep.q.into(),
        rep.beta.into(),
        rep.n_levels.into(),
        rep.offdiag_min.into(),
        Cell::Pair(rep.offdiag_argmin.0, rep.offdiag_argmin.1),
        rep.offdiag_closed_form.into(),
        closed_form_matches(rep).into(),
        rep.diag_lower_strong.into(),
        rep.diag_lower_weak.into(),
        rep.diag_upper_alpha.into(),
        rep.diag_numeric.into(),
        rep.gap_formula_paper.into(),
        rep.gap_numeric.into(),
        rep.formula_below_numeric.into(),
        rep.sandwich_holds.into(),
        rep.alpha_below_numeric.into(),
        strong_exceeds_weak,
    ]
}

/// One [`GapReport`] with consistency flags.
pub fn cmd_gap(cfg: &RunConfig) -> Result<Table> {
    let params = cfg.params(None)?;
    let rep = gap_report(&params, cfg.levels())?;
    let mut out = Table::new(&GAP_COLUMNS);
    out.push(gap_cells(&rep));
    out.single = true;
    Ok(out)
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::DegenerateParams(_) => "degenerate",
        Error::RegionViolation(_) => "region",
        Error::InvalidParams(_) => "invalid",
        _ => "error",
    }
}

/// Gap reports over the Cartesian product of the configured ranges, in
/// `r`-major grid order. Failing points become rows with a status and
/// message instead of aborting.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Table> {
    if cfg.r_range.is_none() && cfg.q_range.is_none() && cfg.beta_range.is_none() {
        return Err(Error::InvalidParams(
            "sweep needs at least one of --r-range, --q-range, --beta-range".into(),
        ));
    }
    let axis = |range: Option<Range>, value: Option<f64>, name: &str| -> Result<Vec<f64>> {
        match (range, value) {
            (Some(r), _) => Ok(r.points()),
            (None, Some(v)) => Ok(vec![v]),
            (None, None) => Err(Error::InvalidParams(format!(
                "--{name} or --{name}-range is required"
            ))),
        }
    };
    let rs = axis(cfg.r_range, cfg.r, "r")?;
    let qs = axis(cfg.q_range, cfg.q, "q")?;
    let bs = axis(cfg.beta_range, cfg.beta, "beta")?;
    let total = rs.len().saturating_mul(qs.len()).saturating_mul(bs.len());
    if total > MAX_SWEEP_POINTS {
        return Err(Error::InvalidParams(format!(
            "{total} sweep points exceed the limit {MAX_SWEEP_POINTS}"
        )));
    }
    let mut grid = Vec::with_capacity(total);
    for &r in &rs {
        for &q in &qs {
            grid.extend(bs.iter().map(|&b| (r, q, b)));
        }
    }
    let levels = cfg.levels();
    let eval = |&(r, q, b): &(f64, f64, f64)| -> Vec<Cell> {
        let res = DeformationParams::new(r, q, b).and_then(|p| gap_report(&p, levels));
        match res {
            Ok(rep) => {
                let mut row = vec![Cell::from("ok"), Cell::Empty];
                row.extend(gap_cells(&rep));
                row
            }
            Err(e) => {
                let mut row = vec![Cell::from(status_of(&e)), Cell::Text(e.to_string())];
                row.extend([r.into(), q.into(), b.into(), levels.into()]);
                row.resize(GAP_COLUMNS.len() + 2, Cell::Empty);
                row
            }
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<Vec<Cell>> = pool.install(|| grid.par_iter().map(eval).collect());
    let mut columns = vec!["status", "message"];
    columns.extend(GAP_COLUMNS);
    let mut out = Table::new(&columns);
    out.rows = rows;
    Ok(out)
}

/// Curve data for the three gap figures.
///
/// 1. `(r, diag_lower, offdiag_min)` at `beta = 1.5`, `q = 1` unless
///    overridden, over `r` from just above `2 - q`.
/// 2. `(beta, diag_lower, offdiag_min)` at `r = 2` and `q = 1` unless
///    overridden; the figure does not state `q`.
/// 3. The two crossing curves at `q = 1` unless overridden.
///
/// `diag_lower` is `1 - e^{-2 beta}`.
pub fn cmd_figure(which: u8, cfg: &RunConfig) -> Result<Table> {
    let q = cfg.q.unwrap_or(1.0);
    let weak = |b: f64| -(-2.0 * b).exp_m1();
    let off = |r: f64, b: f64| {
        DeformationParams::new(r, q, b)
            .and_then(|p| offdiag_minimum(&p))
            .map(|o| o.value)
    };
    match which {
        1 => {
            let beta = cfg.beta.unwrap_or(1.5);
            let r0 = (2.0 - q).max(1.0);
            let range = cfg.r_range.unwrap_or(Range {
                start: r0 + 0.01,
                stop: r0 + 5.0,
                count: 200,
            });
            let mut out = Table::new(&["r", "diag_lower", "offdiag_min"]);
            for r in range.points() {
                DeformationParams::new(r, q, beta)?.require_region_b()?;
                out.push(vec![r.into(), weak(beta).into(), off(r, beta)?.into()]);
            }
            Ok(out)
        }
        2 => {
            let r = cfg.r.unwrap_or(2.0);
            let range = cfg.beta_range.unwrap_or(Range {
                start: 0.05,
                stop: 5.0,
                count: 200,
            });
            let mut out = Table::new(&["beta", "diag_lower", "offdiag_min"]);
            for b in range.points() {
                diag_lower_bounds(&DeformationParams::new(r, q, b)?)?;
                out.push(vec![b.into(), weak(b).into(), off(r, b)?.into()]);
            }
            Ok(out)
        }
        3 => {
            let r0 = (2.0 - q).max(1.0);
            let rr = cfg.r_range.unwrap_or(Range {
                start: r0 + 0.01,
                stop: r0 + 5.0,
                count: 100,
            });
            let br = cfg.beta_range.unwrap_or(Range {
                start: 0.01,
                stop: 10.0,
                count: 2,
            });
            let curves = crossing_curves(q, (rr.start, rr.stop), (br.start, br.stop), rr.count);
            let mut out = Table::new(&["curve", "r", "beta"]);
            for (name, pts) in [("upper", &curves.upper), ("lower", &curves.lower)] {
                for p in pts {
                    out.push(vec![name.into(), p.r.into(), p.beta.into()]);
                }
            }
            Ok(out)
        }
        other => Err(Error::InvalidParams(format!(
            "figure must be 1, 2 or 3, got {other}"
        ))),
    }
}

/// Rows of a trajectory: `t, trace, min_eig, trace_dist, l2_dist`, then
/// `re_rho_jk` for each requested entry and `im_rho_jk` off the diagonal.
pub fn trajectory_table(traj: &Trajectory, entries: &[(usize, usize)]) -> Result<Table> {
    let dim = traj.states.first().map_or(0, |s| s.dim());
    if let Some(&(j, k)) = entries.iter().find(|(j, k)| *j >= dim || *k >= dim) {
        return Err(Error::Index {
            index: j.max(k),
            min: 0,
            max: dim.saturating_sub(1),
        });
    }
    let mut columns: Vec<String> = ["t", "trace", "min_eig", "trace_dist", "l2_dist"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for &(j, k) in entries {
        columns.push(format!("re_rho_{j}_{k}"));
        if j != k {
            columns.push(format!("im_rho_{j}_{k}"));
        }
    }
    let mut out = Table::new(&columns);
    for i in 0..traj.len() {
        let m = traj.states[i].matrix();
        let mut row: Vec<Cell> = vec![
            traj.times[i].into(),
            m.trace().re.into(),
            traj.min_eigs[i].into(),
            traj.trace_distances[i].into(),
            traj.l2_distances[i].into(),
        ];
        for &(j, k) in entries {
            row.push(m[(j, k)].re.into());
            if j != k {
                row.push(m[(j, k)].im.into());
            }
        }
        out.push(row);
    }
    Ok(out)
}

/// Levels used by `simulate` when none are given: the smallest truncation
/// whose stationary tail is below `1e-12 Z`.
pub fn simulate_levels(params: &DeformationParams) -> Result<usize> {
    levels_for_tail(params, 1e-12, 4)
}

/// Relaxation from the configured initial state, `level:1` by default.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Table> {
    let params = cfg.params(None)?;
    let levels = match cfg.levels {
        Some(n) => n,
        None => simulate_levels(&params)?,
    };
    let gen = build_generator(params, levels, None)?;
    let initial = cfg.initial.unwrap_or(InitialState::Level(1));
    let rho0 = initial.build(&gen)?;
    let dt = cfg.dt.unwrap_or(DEFAULT_DT_FACTOR / gen.max_rate());
    let traj = evolve(&gen, &rho0, cfg.t_max.unwrap_or(DEFAULT_T_MAX), dt)?;
    let mut entries = vec![(0, 0), (1, 1)];
    entries.push(match initial {
        InitialState::Coherence(j, k) => (j.min(k), j.max(k)),
        _ => (0, 1),
    });
    trajectory_table(&traj, &entries)
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub r: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Truncation `N` (default 64; `simulate` picks it from the tail bound).
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// `csv` or `json`.
    #[arg(long, global = true)]
    pub format: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for `sweep` (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Flat `key = value` file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// `start:stop:count`.
    #[arg(long = "r-range", global = true)]
    pub r_range: Option<String>,
    #[arg(long = "q-range", global = true)]
    pub q_range: Option<String>,
    #[arg(long = "beta-range", global = true)]
    pub beta_range: Option<String>,
    /// `ground`, `invariant`, `thermal-perturbed`, `level:n` or `coherence:j,k`.
    #[arg(long, global = true)]
    pub initial: Option<String>,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_config_file(path)?,
            None => RunConfig::default(),
        };
        let floats = [
            ("r", self.r),
            ("q", self.q),
            ("beta", self.beta),
            ("t_max", self.t_max),
            ("dt", self.dt),
        ];
        for (key, v) in floats {
            if let Some(v) = v {
                cfg.set(key, &v.to_string())?;
            }
        }
        if let Some(n) = self.levels {
            cfg.levels = Some(n);
        }
        if let Some(n) = self.workers {
            cfg.workers = Some(n);
        }
        if let Some(p) = &self.out {
            cfg.out = Some(p.clone());
        }
        let texts = [
            ("format", &self.format),
            ("r_range", &self.r_range),
            ("q_range", &self.q_range),
            ("beta_range", &self.beta_range),
            ("initial", &self.initial),
        ];
        for (key, v) in texts {
            if let Some(v) = v {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fibosc",
    version,
    about = "Open generalized Fibonacci oscillator: spectra, rates and spectral gaps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Energies, Bohr gaps and Gibbs weights.
    Spectrum,
    /// Thermal and birth-death rates.
    Rates,
    /// Bohr frequency classes.
    Bohr,
    /// Gap report with consistency flags.
    Gap,
    /// Relaxation trajectory.
    Simulate,
    /// Gap reports over a parameter grid.
    Sweep,
    /// Figure data: 1, 2 or 3.
    Figure { which: u8 },
}

pub fn dispatch(command: &Command, cfg: &RunConfig) -> Result<Table> {
    match command {
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Rates => cmd_rates(cfg),
        Command::Bohr => cmd_bohr(cfg),
        Command::Gap => cmd_gap(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::Figure { which } => cmd_figure(*which, cfg),
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        3
    }
}

/// Parses `args`, runs the command and writes its output. Returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = cli.common.resolve().and_then(|cfg| {
        let table = dispatch(&cli.command, &cfg)?;
        match &cfg.out {
            Some(path) => {
                let file = std::fs::File::create(path)?;
                table.write(cfg.format, std::io::BufWriter::new(file))
            }
            None => {
                let mut buf = Vec::new();
                table.write(cfg.format, &mut buf)?;
                match std::io::stdout().lock().write_all(&buf) {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                    _ => Ok(()),
                }
            }
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Key-value view of a single-row table, for tests and examples.
pub fn row_map(table: &Table, row: usize) -> BTreeMap<String, Cell> {
    table
        .columns
        .iter()
        .cloned()
        .zip(table.rows[row].iter().cloned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn cfg(r: f64, q: f64, beta: f64) -> RunConfig {
        RunConfig {
            r: Some(r),
            q: Some(q),
            beta: Some(beta),
            ..Default::default()
        }
    }

    fn floats(t: &Table, col: &str) -> Vec<f64> {
        t.column(col)
            .unwrap()
            .into_iter()
            .map(|c| match c {
                Cell::Float(x) => *x,
                other => panic!("not a float: {other:?}"),
            })
            .collect()
    }

    #[test]
    fn float_format() {
        assert_eq!(format_float(0.75), "7.5000000000000000e-1");
        assert_eq!(format_float(0.0), "0.0000000000000000e0");
        assert_eq!(format_float(-0.0), "0.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(format_float(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn config_file() {
        let text = "# comment\nr = 2\nq=1 # trailing\n\nbeta = 0.5\nt-max = 3\nformat = json\nr_range = 1.5:3:4\n";
        let c = RunConfig::from_config_str(text).unwrap();
        assert_eq!(
            (c.r, c.q, c.beta, c.t_max),
            (Some(2.0), Some(1.0), Some(0.5), Some(3.0))
        );
        assert_eq!(c.format, Format::Json);
        assert_eq!(c.r_range.unwrap().points(), vec![1.5, 2.0, 2.5, 3.0]);
        assert!(RunConfig::from_config_str("colour = red").is_err());
        assert!(RunConfig::from_config_str("r 2").is_err());
        assert!(RunConfig::from_config_str("r = two").is_err());
    }

    #[test]
    fn spectrum_columns() {
        let mut c = cfg(2.0, 1.0, 1.0);
        c.levels = Some(4);
        assert_eq!(
            floats(&cmd_spectrum(&c).unwrap(), "eps_n"),
            vec![0.0, 1.0, 3.0, 7.0]
        );

        let mut c = RunConfig {
            r: Some((1.0 + 5f64.sqrt()) / 2.0),
            q: Some((1.0 - 5f64.sqrt()) / 2.0),
            ..Default::default()
        };
        c.levels = Some(8);
        let eps = floats(&cmd_spectrum(&c).unwrap(), "eps_n");
        for (e, f) in eps.iter().zip([0.0, 1.0, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0]) {
            assert!((e - f).abs() < 1e-12);
        }

        let mut c = cfg(2.0, 1.0, 1.0);
        c.levels = Some(1);
        let t = cmd_spectrum(&c).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(
            t.rows[0][..4],
            [
                Cell::Int(0),
                Cell::Float(0.0),
                Cell::Empty,
                Cell::Float(1.0)
            ]
        );
    }

    #[test]
    fn gap_examples() {
        let t = cmd_gap(&cfg(2.0, 1.0, LN_2)).unwrap();
        let m = row_map(&t, 0);
        assert_eq!(m["gap_formula_paper"], Cell::Float(0.75));
        assert_eq!(m["formula_below_numeric"], Cell::Bool(true));

        let t = cmd_gap(&cfg(1.5, 0.5, 3f64.ln())).unwrap();
        match row_map(&t, 0)["gap_formula_paper"] {
            Cell::Float(g) => assert!((g - 8.0 / 9.0).abs() < 1e-12),
            ref other => panic!("{other:?}"),
        }

        let e = cmd_gap(&cfg(1.0, 0.5, 1.0)).unwrap_err();
        assert!(e.to_string().contains("r > 1 required"));
        assert_eq!(exit_code(&e), 2);

        let json = cmd_gap(&cfg(2.0, 1.0, LN_2))
            .unwrap()
            .to_string(Format::Json)
            .unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["offdiag_argmin"], serde_json::json!([0, 1]));
    }

    #[test]
    fn sweep_status() {
        let mut c = cfg(0.0, 0.0, 1.5);
        c.r = None;
        c.q = Some(-0.5);
        c.r_range = Some(Range {
            start: 1.0,
            stop: 2.0,
            count: 3,
        });
        c.workers = Some(2);
        let t = cmd_sweep(&c).unwrap();
        let status: Vec<String> = t
            .column("status")
            .unwrap()
            .iter()
            .map(|c| c.csv())
            .collect();
        assert_eq!(
            status,
            ["region", "degenerate", "ok"],
            "{:?}",
            t.column("message")
        );
        assert!(cmd_sweep(&cfg(2.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn sweep_is_deterministic() {
        let mut c = cfg(2.0, 1.0, 1.0);
        c.r_range = Some(Range {
            start: 1.2,
            stop: 3.0,
            count: 5,
        });
        c.beta_range = Some(Range {
            start: 0.5,
            stop: 2.0,
            count: 3,
        });
        c.workers = Some(1);
        let a = cmd_sweep(&c).unwrap().to_string(Format::Csv).unwrap();
        c.workers = Some(4);
        let b = cmd_sweep(&c).unwrap().to_string(Format::Csv).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 16);
    }

    #[test]
    fn figure_one_crosses() {
        let t = cmd_figure(1, &RunConfig::default()).unwrap();
        let d: Vec<f64> = floats(&t, "offdiag_min")
            .iter()
            .zip(floats(&t, "diag_lower"))
            .map(|(o, l)| o - l)
            .collect();
        assert!(d.windows(2).any(|w| w[0].signum() != w[1].signum()));
        assert!(cmd_figure(4, &RunConfig::default()).is_err());
    }

    #[test]
    fn simulate_level_one() {
        let t = cmd_simulate(&cfg(2.0, 1.0, LN_2)).unwrap();
        let td = floats(&t, "trace_dist");
        assert!(*td.last().unwrap() <= 1e-6);
        assert_eq!(t.columns.last().unwrap(), "im_rho_0_1");
    }

    #[test]
    fn cli_parsing() {
        let cli = Cli::try_parse_from(["fibosc", "gap", "--r", "2", "--q", "-0.5", "--beta", "1"])
            .unwrap();
        let c = cli.common.resolve().unwrap();
        assert_eq!(c.q, Some(-0.5));
        let cli = Cli::try_parse_from(["fibosc", "figure", "3", "--format", "json"]).unwrap();
        assert!(matches!(cli.command, Command::Figure { which: 3 }));
        assert!(Cli::try_parse_from(["fibosc", "gap", "--bogus"]).is_err());
    }
}
