// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Bohr frequency classes and the Kraus operator of the lowest class.

use fibosc::coupling::{bohr_spectrum, complexify, is_generic, kraus_from_coupling};
use fibosc::{ladder_matrices, DeformationParams, SpectrumTable};

fn main() -> fibosc::Result<()> {
    for (label, params) in [
        ("r=2, q=1", DeformationParams::new(2.0, 1.0, 1.0)?),
        ("Fibonacci", DeformationParams::fibonacci(1.0)?),
    ] {
        let table = SpectrumTable::new(params, 6)?;
        let spec = bohr_spectrum(&table, 1e-9)?;
        let generic = is_generic(&spec, &table);
        println!(
            "{label}: {} classes, generic = {}",
            spec.omegas.len(),
            generic.generic
        );
        for (w, pairs) in spec.omegas.iter().zip(&spec.pairs).take(4) {
            println!("  omega = {w:<8.4} pairs {pairs:?}");
        }
        let a = complexify(&ladder_matrices(&table)?.a);
        let k = kraus_from_coupling(&a, &spec, spec.omegas[0])?;
        println!("  D at omega = {} has rank {}", k.omega, k.rank);
    }
    Ok(())
}
