// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end checks, one line per criterion. Exits nonzero if any fails.

use std::f64::consts::LN_2;
use std::time::Instant;

use fibosc::algebra::{
    commutation_residuals, ladder_matrices, monotonicity_report, DeformationParams, SpectrumTable,
};
use fibosc::birthdeath::{
    appendix_a_validators, diagonal_gap_numeric, km_conservativity, levels_for_tail,
};
use fibosc::cli::{cmd_figure, Cell, RunConfig, Table};
use fibosc::coupling::{bohr_spectrum, complexify, kraus_from_coupling};
use fibosc::dynamics::{decay_rate_fit, evolve, InitialState};
use fibosc::generator::{build_generator, matrix_unit, max_abs, DensityMatrix, Kappas};
use fibosc::spectral::{
    bose_crossover, gap_report, invariant_state, offdiag_closed_form, offdiag_minimum,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(r, q)` with `-1 <= q <= 1 < r <= r_max` and `r + q >= min_sum`.
fn draw_rq(rng: &mut ChaCha8Rng, min_sum: f64, r_max: f64) -> (f64, f64) {
    loop {
        let q = rng.gen_range(-1.0..=1.0);
        let r = rng.gen_range(1.0..r_max);
        if r > 1.0 && r + q >= min_sum && r != q {
            return (r, q);
        }
    }
}

fn commutation() -> Outcome {
    let mut g = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (r, q) = draw_rq(&mut g, 1.0, 3.0);
        let p = DeformationParams::new(r, q, 1.0).map_err(|e| e.to_string())?;
        let t = SpectrumTable::new(p, 32).map_err(|e| e.to_string())?;
        let m = ladder_matrices(&t).map_err(|e| e.to_string())?;
        let (a, b) = commutation_residuals(&m, &p).map_err(|e| e.to_string())?;
        worst = worst.max(a).max(b);
    }
    if worst <= 1e-10 {
        Ok(format!("100 draws, worst residual {worst:.2e}"))
    } else {
        Err(format!("worst residual {worst:.2e}"))
    }
}

fn dual_verdicts() -> Outcome {
    let mut g = rng(2);
    let mut count = 0;
    let mut bad = Vec::new();
    let (mut below1, mut below2, mut ratio_false) = (0, 0, 0);
    while count < 1200 {
        // sums clustered around the boundaries r+q = 1 and r+q = 2
        let q = g.gen_range(-1.0..=1.0);
        let target = [1.0, 2.0][count % 2] + g.gen_range(-0.3..0.3);
        let r = target - q;
        if r <= 1.0 || r == q {
            continue;
        }
        let c = g.gen_range(0.0..2.0);
        let p = DeformationParams::new(r, q, 1.0).map_err(|e| e.to_string())?;
        let rep = monotonicity_report(&p, 40, c).map_err(|e| e.to_string())?;
        below1 += usize::from(r + q < 1.0);
        below2 += usize::from(r + q < 2.0);
        ratio_false += usize::from(rep.ratio_bound_holds.analytic == Some(false));
        if !rep.all_agree() {
            bad.push((r, q, c));
        }
        count += 1;
    }
    if bad.is_empty() {
        Ok(format!(
            "{count} draws ({below1} with r+q<1, {below2} with r+q<2, {ratio_false} failing the ratio bound), 0 disagreements"
        ))
    } else {
        Err(format!("{} disagreements, first {:?}", bad.len(), bad[0]))
    }
}

fn eigenvectors() -> Outcome {
    let mut g = rng(3);
    let n = 16;
    let mut worst = 0.0f64;
    for draw in 0..20 {
        let (r, q) = draw_rq(&mut g, 1.05, 2.5);
        let beta = g.gen_range(0.3..3.0);
        let p = DeformationParams::new(r, q, beta).map_err(|e| e.to_string())?;
        let kappas = (draw % 2 == 1).then(|| Kappas {
            minus: (0..n).map(|_| g.gen_range(-1.0..1.0)).collect(),
            plus: (0..n).map(|_| g.gen_range(-1.0..1.0)).collect(),
        });
        let gen = build_generator(p, n, kappas.as_ref()).map_err(|e| e.to_string())?;
        for j in 0..n - 1 {
            for k in 0..n - 1 {
                if j == k {
                    continue;
                }
                let xi = gen.offdiag_eigenvalue(j, k).map_err(|e| e.to_string())?;
                let e = matrix_unit(n, j, k);
                let lhs = gen.apply_primal(&e).map_err(|e| e.to_string())?;
                let diff = lhs - &e * xi;
                worst = worst.max(max_abs(&diff) / xi.norm());
            }
        }
    }
    if worst <= 1e-9 {
        Ok(format!("20 draws, N=16, worst relative error {worst:.2e}"))
    } else {
        Err(format!("worst relative error {worst:.2e}"))
    }
}

fn offdiag_closed_form_grid() -> Outcome {
    let mut total = 0;
    let mut misses = Vec::new();
    for iq in 0..20 {
        let q = -2.0 / 3.0 + (1.0 + 2.0 / 3.0) * iq as f64 / 19.0;
        let r_lo = (2.0 - q).max(1.0) + 1e-3;
        for ir in 0..20 {
            let r = r_lo + (5.0 - r_lo) * ir as f64 / 19.0;
            for ib in 0..10 {
                let beta = 0.1 + (5.0 - 0.1) * ib as f64 / 9.0;
                let p = DeformationParams::new(r, q, beta).map_err(|e| e.to_string())?;
                let m = offdiag_minimum(&p).map_err(|e| e.to_string())?;
                let cf = offdiag_closed_form(&p);
                total += 1;
                if m.argmin != (0, 1) || (m.value - cf).abs() > 1e-10 * m.value {
                    misses.push((r, q, beta, m.argmin, m.value, cf));
                }
            }
        }
    }
    if misses.is_empty() {
        Ok(format!("{total} region C points, argmin (0,1) everywhere"))
    } else {
        let (r, q, b, arg, v, cf) = misses[0];
        Err(format!(
            "{} of {total} points have a smaller pair; e.g. r={r:.4}, q={q:.4}, beta={b:.4}: argmin {arg:?} = {v:.6} < closed form {cf:.6}",
            misses.len()
        ))
    }
}

/// Region B grid with `beta <= 2`, shared by the sandwich and lower-bound checks.
fn region_b_grid() -> Vec<(f64, f64, f64)> {
    let mut pts = Vec::new();
    for q in [-1.0f64, -0.5, 0.0, 0.5, 1.0] {
        for dr in [0.05, 0.5, 1.5] {
            let r = (2.0 - q).max(1.0) + dr;
            for beta in [0.25, 0.7, 1.3, 2.0] {
                pts.push((r, q, beta));
            }
        }
    }
    pts
}

fn sandwich_and_lower_bound() -> (Outcome, Outcome) {
    let grid = region_b_grid();
    let mut sandwich_bad = Vec::new();
    let mut lower_bad = Vec::new();
    for &(r, q, beta) in &grid {
        let rep = match DeformationParams::new(r, q, beta).and_then(|p| gap_report(&p, 128)) {
            Ok(rep) => rep,
            Err(e) => return (Err(e.to_string()), Err(e.to_string())),
        };
        if rep.sandwich_holds != Some(true) {
            sandwich_bad.push((r, q, beta));
        }
        if !rep
            .gap_formula_paper
            .is_some_and(|g| g <= rep.gap_numeric + 1e-8)
        {
            lower_bad.push((r, q, beta));
        }
    }
    let sandwich = if sandwich_bad.is_empty() {
        Ok(format!("{} region B points, N=128", grid.len()))
    } else {
        Err(format!(
            "{} violations, first {:?}",
            sandwich_bad.len(),
            sandwich_bad[0]
        ))
    };
    let flag = DeformationParams::new(2.0, 1.0, LN_2).and_then(|p| gap_report(&p, 128));
    let lower = match flag {
        Err(e) => Err(e.to_string()),
        Ok(_) if !lower_bad.is_empty() => Err(format!(
            "{} violations, first {:?}",
            lower_bad.len(),
            lower_bad[0]
        )),
        Ok(rep) => {
            let strong = rep.diag_lower_strong.unwrap_or(f64::NAN);
            let weak = rep.diag_lower_weak.unwrap_or(f64::NAN);
            if rep.formula_below_numeric && (weak - 0.75).abs() < 1e-12 && strong >= 0.816 {
                Ok(format!(
                    "{} points; (2, 1, ln 2) flagged: formula {weak:.4} < strong bound {strong:.4}",
                    grid.len()
                ))
            } else {
                Err(format!(
                    "(2, 1, ln 2) not flagged: weak {weak}, strong {strong}"
                ))
            }
        }
    };
    (sandwich, lower)
}

fn tail_inequalities() -> Outcome {
    let mut g = rng(7);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let (r, q) = draw_rq(&mut g, 2.0, 4.0);
        let beta = g.gen_range(0.1..3.0);
        let p = DeformationParams::new(r, q, beta).map_err(|e| e.to_string())?;
        let rep = appendix_a_validators(&p, 30).map_err(|e| e.to_string())?;
        let min = rep
            .rows
            .iter()
            .map(|row| row.min_slack())
            .fold(f64::INFINITY, f64::min);
        worst = worst.min(min);
        if !rep.all_hold {
            return Err(format!("r={r}, q={q}, beta={beta}: min slack {min:e}"));
        }
    }
    Ok(format!("20 draws, u <= 30, smallest slack {worst:.2e}"))
}

fn karlin_mcgregor() -> Outcome {
    let mut g = rng(8);
    for _ in 0..50 {
        let (r, q) = draw_rq(&mut g, 1.05, 3.0);
        let beta = g.gen_range(0.1..3.0);
        let p = DeformationParams::new(r, q, beta).map_err(|e| e.to_string())?;
        let rep = km_conservativity(&p, 40).map_err(|e| e.to_string())?;
        if !(rep.strictly_increasing && rep.diverges) {
            return Err(format!(
                "r={r}, q={q}, beta={beta}: partial sums not diverging"
            ));
        }
    }
    Ok("50 draws, partial sums strictly increasing with final-term dominance".into())
}

fn stationarity() -> Outcome {
    let e = |e: fibosc::Error| e.to_string();
    let mut worst = 0.0f64;
    for (r, q, beta) in [
        (2.0, 1.0, LN_2),
        (1.5, 0.5, 3f64.ln()),
        (3.0, -0.5, 1.0),
        (1.8, 0.9, 0.4),
    ] {
        let p = DeformationParams::new(r, q, beta).map_err(e)?;
        let n = levels_for_tail(&p, 1e-12, 4).map_err(e)?;
        let inv = invariant_state(&p, n).map_err(e)?;
        let gen = build_generator(p, n, None).map_err(e)?;
        worst = worst.max(max_abs(&gen.apply_predual(inv.matrix()).map_err(e)?));
    }
    if worst > 1e-8 {
        return Err(format!("|L_*(rho_inv)| = {worst:e}"));
    }
    let p = DeformationParams::new(2.0, 1.0, LN_2).map_err(e)?;
    let n = levels_for_tail(&p, 1e-12, 4).map_err(e)?;
    let gen = build_generator(p, n, None).map_err(e)?;
    let inv = invariant_state(&p, n).map_err(e)?;
    let traj = evolve(
        &gen,
        &DensityMatrix::level(n, 1).map_err(e)?,
        10.0,
        0.05 / gen.max_rate(),
    )
    .map_err(e)?;
    let dist = traj.final_state().trace_distance(&inv).map_err(e)?;
    if dist <= 1e-6 && traj.trace_drift <= 1e-8 {
        Ok(format!(
            "|L_*(rho_inv)| <= {worst:.1e}; from |e1><e1| at t=10: distance {dist:.1e}, drift {:.1e}",
            traj.trace_drift
        ))
    } else {
        Err(format!("distance {dist:e}, drift {:e}", traj.trace_drift))
    }
}

fn kraus_examples() -> Outcome {
    let e = |e: fibosc::Error| e.to_string();
    let fib = SpectrumTable::new(DeformationParams::fibonacci(1.0).map_err(e)?, 6).map_err(e)?;
    let a = complexify(&ladder_matrices(&fib).map_err(e)?.a);
    let d = kraus_from_coupling(&a, &bohr_spectrum(&fib, 1e-9).map_err(e)?, 1.0).map_err(e)?;
    let mut expected = DMatrix::<Complex64>::zeros(6, 6);
    expected[(0, 1)] = 1.0.into();
    expected[(2, 3)] = 2f64.sqrt().into();
    expected[(3, 4)] = 3f64.sqrt().into();
    let err_fib = max_abs(&(d.d_omega - expected));

    let free =
        SpectrumTable::new(DeformationParams::new(1.0, 0.0, 1.0).map_err(e)?, 4).map_err(e)?;
    let a = complexify(&ladder_matrices(&free).map_err(e)?.a);
    let d = kraus_from_coupling(&a, &bohr_spectrum(&free, 1e-9).map_err(e)?, 1.0).map_err(e)?;
    let err_free = max_abs(&(d.d_omega - matrix_unit(4, 0, 1)));
    if err_fib <= 1e-12 && err_free <= 1e-12 {
        Ok(format!(
            "Fibonacci D_1 error {err_fib:.1e}, free D_1 error {err_free:.1e}"
        ))
    } else {
        Err(format!(
            "Fibonacci error {err_fib:e}, free error {err_free:e}"
        ))
    }
}

fn floats(t: &Table, col: &str) -> Vec<f64> {
    t.column(col)
        .unwrap_or_default()
        .into_iter()
        .map(|c| if let Cell::Float(x) = c { *x } else { f64::NAN })
        .collect()
}

fn figures() -> Outcome {
    let e = |e: fibosc::Error| e.to_string();
    let f1 = cmd_figure(1, &RunConfig::default()).map_err(e)?;
    let diff: Vec<f64> = floats(&f1, "offdiag_min")
        .iter()
        .zip(floats(&f1, "diag_lower"))
        .map(|(o, l)| o - l)
        .collect();
    let crossing = diff.windows(2).position(|w| w[0] > 0.0 && w[1] <= 0.0);
    let Some(i) = crossing else {
        return Err("figure 1 has no sign change".into());
    };
    let r_cross = floats(&f1, "r")[i];

    let f3 = cmd_figure(3, &RunConfig::default()).map_err(e)?;
    let curves: Vec<String> = f3
        .column("curve")
        .unwrap_or_default()
        .iter()
        .map(|c| format!("{c:?}"))
        .collect();
    let (rs, bs) = (floats(&f3, "r"), floats(&f3, "beta"));
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (k, c) in curves.iter().enumerate() {
        if c.contains("upper") {
            &mut upper
        } else {
            &mut lower
        }
        .push((rs[k], bs[k]));
    }
    let mut compared = 0;
    for &(r, bu) in &upper {
        if let Some(&(_, bl)) = lower.iter().find(|(rl, _)| *rl == r) {
            compared += 1;
            if bu < bl - 1e-8 {
                return Err(format!(
                    "figure 3 curves cross at r={r}: upper {bu} < lower {bl}"
                ));
            }
        }
    }
    if compared == 0 {
        return Err("figure 3 curves share no r".into());
    }
    let b = bose_crossover().map_err(e)?;
    if (b - 3f64.ln()).abs() > 1e-6 {
        return Err(format!("undeformed crossover {b} differs from ln 3"));
    }
    Ok(format!(
        "figure 1 crosses near r={r_cross:.3}; figure 3 ordered at {compared} shared r; crossover {b:.9}"
    ))
}

fn decay_rates() -> Outcome {
    let e = |e: fibosc::Error| e.to_string();
    let p = DeformationParams::new(2.0, 1.0, LN_2).map_err(e)?;
    let gen = build_generator(p, 8, None).map_err(e)?;
    let dt = 0.05 / gen.max_rate();
    let gap = diagonal_gap_numeric(&p, 64).map_err(e)?;
    let rho0 = InitialState::ThermalPerturbed.build(&gen).map_err(e)?;
    let diag_rate = decay_rate_fit(&evolve(&gen, &rho0, 10.0, dt).map_err(e)?, 0.5).map_err(e)?;

    let xi = gen.offdiag_eigenvalue(0, 1).map_err(e)?.re.abs();
    let rho0 = InitialState::Coherence(0, 1).build(&gen).map_err(e)?;
    let coh_rate = decay_rate_fit(&evolve(&gen, &rho0, 8.0, dt).map_err(e)?, 0.5).map_err(e)?;

    let (rd, rc) = ((diag_rate / gap - 1.0).abs(), (coh_rate / xi - 1.0).abs());
    let msg = format!("diagonal {diag_rate:.6} vs gap {gap:.6} ({:.2}%), coherence {coh_rate:.6} vs {xi:.6} ({:.3}%)", 100.0 * rd, 100.0 * rc);
    if rd < 0.1 && rc < 0.01 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn main() {
    let mut failures = 0;
    let mut report = |id: usize, name: &str, start: Instant, outcome: Outcome| {
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name} [{ms:.0} ms]: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {id:>2} {name} [{ms:.0} ms]: {detail}");
            }
        }
    };
    let t = Instant::now();
    report(1, "commutation relations", t, commutation());
    let t = Instant::now();
    report(2, "monotonicity dual verdicts", t, dual_verdicts());
    let t = Instant::now();
    report(3, "off-diagonal eigenvectors", t, eigenvectors());
    let t = Instant::now();
    report(4, "off-diagonal closed form", t, offdiag_closed_form_grid());
    let t = Instant::now();
    let (sandwich, lower) = sandwich_and_lower_bound();
    report(5, "diagonal gap sandwich", t, sandwich);
    report(6, "gap formula as lower bound", t, lower);
    let t = Instant::now();
    report(7, "tail inequalities", t, tail_inequalities());
    let t = Instant::now();
    report(8, "conservativity evidence", t, karlin_mcgregor());
    let t = Instant::now();
    report(9, "stationarity and relaxation", t, stationarity());
    let t = Instant::now();
    report(10, "Kraus operator examples", t, kraus_examples());
    let t = Instant::now();
    report(11, "figure data", t, figures());
    let t = Instant::now();
    report(12, "decay-rate consistency", t, decay_rates());
    println!("{} of 12 criteria passed", 12 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
