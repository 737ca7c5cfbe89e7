// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Relaxation from an excited level and from a coherence, with fitted rates.

use fibosc::birthdeath::diagonal_gap_numeric;
use fibosc::dynamics::{decay_rate_fit, evolve, InitialState};
use fibosc::generator::build_generator;
use fibosc::DeformationParams;

fn main() -> fibosc::Result<()> {
    let params = DeformationParams::new(2.0, 1.0, 2f64.ln())?;
    let gen = build_generator(params, 8, None)?;
    let dt = 0.05 / gen.max_rate();
    let gap = diagonal_gap_numeric(&params, 64)?;
    for init in [
        InitialState::Level(1),
        InitialState::ThermalPerturbed,
        InitialState::Coherence(0, 1),
    ] {
        let traj = evolve(&gen, &init.build(&gen)?, 10.0, dt)?;
        let rate = decay_rate_fit(&traj, 0.5)?;
        println!(
            "{init:?}: final trace distance {:.2e}, fitted rate {rate:.6}",
            traj.trace_distances.last().unwrap()
        );
    }
    println!(
        "diagonal gap {gap:.6}, |Re xi_01| {:.6}",
        gen.offdiag_eigenvalue(0, 1)?.re.abs()
    );
    Ok(())
}
