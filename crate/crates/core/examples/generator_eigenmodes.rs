// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Off-diagonal matrix units are eigenvectors of the truncated generator.

use fibosc::generator::{build_generator, matrix_unit, max_abs};
use fibosc::DeformationParams;

fn main() -> fibosc::Result<()> {
    let gen = build_generator(DeformationParams::new(2.0, 1.0, 2f64.ln())?, 8, None)?;
    for (j, k) in [(0, 1), (1, 2), (0, 3), (2, 5)] {
        let xi = gen.offdiag_eigenvalue(j, k)?;
        let e = matrix_unit(gen.dim(), j, k);
        let residual = max_abs(&(gen.apply_primal(&e)? - &e * xi));
        println!(
            "xi_{j}{k} = {:>10.6} {:+.6}i  residual {residual:.1e}",
            xi.re, xi.im
        );
    }
    Ok(())
}
