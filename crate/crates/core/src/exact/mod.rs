//! Exact arithmetic bedrock: rationals, determinants, interpolation and
//! rational root extraction for low-degree polynomials.

pub mod matrix;
pub mod poly;
pub mod rational;

pub use matrix::{rat_det, RatMatrix};
pub use poly::{poly_from_samples, rational_roots, NonRationalRoots, RatPoly, Roots};
pub use rational::{format_rational, parse_rational, rat, ratio, Rational};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("matrix is {rows}x{cols}, determinant needs a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("empty matrix")]
    Empty,
    #[error("rows have differing lengths")]
    Ragged,
    #[error("expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("duplicate sample point {0}")]
    DuplicateSample(Rational),
    #[error("sample at {at} has value {expected} but interpolant gives {found}; degree bound violated")]
    InconsistentSamples { at: Rational, expected: Rational, found: Rational },
    #[error("polynomial is identically zero")]
    IdenticallyZero,
    #[error("root extraction supports degree <= 2, got {0}")]
    DegreeTooHigh(usize),
}
