// Copyright 2026 fibosc Contributors
// SPDX-License-Identifier: Apache-2.0

//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParams(String),

    #[error("parameters outside the required region: {0}")]
    RegionViolation(String),

    #[error("eps_{level} is not representable (level cap {cap})")]
    Overflow { level: usize, cap: usize },

    #[error("index {index} outside valid range {min}..={max}")]
    Index {
        index: usize,
        min: usize,
        max: usize,
    },

    #[error("negative energy eps_{level} = {value}")]
    NegativeEigenvalue { level: usize, value: f64 },

    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("frequency {0} is not a Bohr frequency of the spectrum")]
    UnknownFrequency(f64),

    #[error("Bohr frequency must be positive, got {0}")]
    DegenerateFrequency(f64),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("off-diagonal eigenvalue needs j != k, got j = k = {0}")]
    InvalidPair(usize),

    #[error("truncation at N = {levels} too small: tail bound {tail:e} exceeds {limit:e}")]
    TruncationTooSmall {
        levels: usize,
        tail: f64,
        limit: f64,
    },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("invariant state must be diagonal and faithful")]
    NonDiagonalInvariant,

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("integration unstable: {0}")]
    StabilityViolation(String),

    #[error("population {mass:e} leaked into the top truncation level")]
    TruncationLeak { mass: f64 },

    #[error("insufficient decay: {0}")]
    InsufficientDecay(String),

    #[error("no root in range: {0}")]
    NoRootInRange(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by bad input rather than a numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::DegenerateParams(_)
                | Error::RegionViolation(_)
                | Error::Index { .. }
                | Error::InvalidTruncation(_)
                | Error::UnknownFrequency(_)
                | Error::DegenerateFrequency(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidPair(_)
                | Error::InvalidState(_)
        )
    }
}
