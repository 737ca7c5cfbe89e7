// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Fibonacci energies, their gaps, and the ladder commutation residuals.

use fibosc::{commutation_residuals, ladder_matrices, DeformationParams, SpectrumTable};

fn main() -> fibosc::Result<()> {
    let params = DeformationParams::fibonacci(1.0)?;
    let table = SpectrumTable::new(params, 12)?;
    println!("{:>3} {:>8} {:>8}", "n", "eps_n", "omega_n");
    for n in 0..table.n_levels() {
        let omega = if n == 0 {
            String::from("-")
        } else {
            format!("{:.0}", table.omegas()[n - 1])
        };
        println!("{n:>3} {:>8} {omega:>8}", table.energy(n).round());
    }
    let (r1, r2) = commutation_residuals(&ladder_matrices(&table)?, &params)?;
    println!("commutation residuals: {r1:.2e}, {r2:.2e}");
    Ok(())
}
