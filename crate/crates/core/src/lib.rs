// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Open generalized Fibonacci oscillators: the (q,r)-deformed spectrum, the
//! truncated GKLS generator of a weak coupling limit type semigroup, its
//! classical birth-death shadow, and every spectral-gap quantity built from
//! them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod birthdeath;
pub mod cli;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod generator;
pub mod spectral;

pub use algebra::{
    bohr_frequency, commutation_residuals, ladder_matrices, monotonicity_report, qr_integer,
    DeformationParams, LadderMatrices, MonotonicityReport, SpectrumTable,
};
pub use dynamics::{decay_rate_fit, evolve, InitialState, Trajectory};
pub use error::{Error, Result};
pub use generator::{build_generator, DensityMatrix, TruncatedGenerator};
pub use spectral::{gap_report, GapReport};
