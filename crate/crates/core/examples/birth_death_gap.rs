// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! The diagonal birth-death chain: rates, detailed balance and its gap
//! against the analytic lower and upper bounds.

use fibosc::birthdeath::{diagonal_gap_numeric, BDChain};
use fibosc::spectral::{diag_lower_bounds, diag_upper_alpha};
use fibosc::DeformationParams;

fn main() -> fibosc::Result<()> {
    let params = DeformationParams::new(2.0, 1.0, 2f64.ln())?;
    let chain = BDChain::new(&params, 6)?;
    for n in 0..5 {
        println!(
            "n={n}  lambda={:.6}  mu={:.6}",
            chain.lambda[n], chain.mu[n]
        );
    }
    println!(
        "detailed balance residual {:.1e}",
        chain.detailed_balance_residual()
    );
    let (strong, weak) = diag_lower_bounds(&params)?;
    let gap = diagonal_gap_numeric(&params, 64)?;
    let alpha = diag_upper_alpha(&params)?;
    println!("{weak:.6} <= {strong:.6} <= gap {gap:.6} <= alpha {alpha:.6}");
    Ok(())
}
