// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Full gap reports at a few parameter points.

use fibosc::spectral::gap_report;
use fibosc::DeformationParams;

fn main() -> fibosc::Result<()> {
    for (r, q, beta) in [
        (2.0, 1.0, 2f64.ln()),
        (1.5, 0.5, 3f64.ln()),
        (4.01, 1.0, 0.1),
    ] {
        let rep = gap_report(&DeformationParams::new(r, q, beta)?, 64)?;
        println!("r={r} q={q} beta={beta:.4}");
        println!(
            "  offdiag min {:.6} at {:?} (pair (0,1) gives {:.6})",
            rep.offdiag_min, rep.offdiag_argmin, rep.offdiag_closed_form
        );
        println!(
            "  diag gap {:.6}, gap {:.6}, formula {:?}",
            rep.diag_numeric, rep.gap_numeric, rep.gap_formula_paper
        );
        println!(
            "  formula below numeric: {}, sandwich: {:?}",
            rep.formula_below_numeric, rep.sandwich_holds
        );
    }
    Ok(())
}
