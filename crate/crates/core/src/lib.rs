//! # normforge
//!
//! A numerical laboratory for multiplicative symmetric norms on finitely
//! supported sequences, simple random variables and matrices.
//!
//! A norm on finite sequences that is invariant under coordinate permutation
//! and multiplicative under the tensor product `‖x ⊗ y‖ = ‖x‖·‖y‖` is an
//! `ℓ_p` norm. The crate turns the moving parts of that statement into
//! procedures that can be run and checked:
//!
//! | Module | What it computes |
//! |--------|------------------|
//! | [`seqcore`] | sequences, tensor products, `ℓ_p` and Ky Fan norms, norm oracles |
//! | [`tensor_stats`] | exact value counts of `x^{⊗n}` by log-domain self-convolution |
//! | [`rate_function`] | `Λ_x(λ) = ln Σ x_i^λ`, its derivative and Legendre conjugate |
//! | [`sandwich`] | finite-`n` lower and staircase upper bounds around `‖x‖_p` |
//! | [`characterize`] | classify a norm oracle as `ℓ_p` or return a violation witness |
//! | [`rvalg`] | exact simple random variables, Bernoulli algebra, `L_p` norms |
//! | [`schatten`] | Jacobi singular values, Kronecker products, Schatten norms |
//!
//! ## Quick example
//!
//! ```rust
//! use normforge::seqcore::{lp_norm, tensor, Exponent, FiniteSequence};
//!
//! let x = FiniteSequence::new(vec![2.0, 1.0]);
//! let y = FiniteSequence::new(vec![3.0, 1.0]);
//! let p = Exponent::finite(2.0).unwrap();
//! let lhs = lp_norm(&tensor(&x, &y), p);
//! let rhs = lp_norm(&x, p) * lp_norm(&y, p);
//! assert!((lhs - rhs).abs() <= 1e-12 * rhs);
//! ```

#![forbid(unsafe_code)]

use thiserror::Error;

pub mod characterize;
pub mod rate_function;
pub mod rvalg;
pub mod sandwich;
pub mod schatten;
pub mod seqcore;
pub mod tensor_stats;

pub use characterize::{characterize, CharacterizationReport, CharacterizeConfig, Verdict};
pub use rate_function::{Extended, RateFunction};
pub use seqcore::{Exponent, FiniteSequence, NormOracle};
pub use tensor_stats::LogAtomMeasure;

/// Errors raised by the laboratory's operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent must satisfy p >= 1 (got {0})")]
    InvalidExponent(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sequence has no nonzero coordinates")]
    ZeroSequence,

    #[error("projected atom count {projected} exceeds the limit {limit} (set NORMFORGE_MAX_ATOMS to raise it)")]
    AtomLimit { projected: f64, limit: u64 },

    #[error("embedding needs {lcm} slots, above the limit of {limit}")]
    EmbeddingTooLarge { lcm: String, limit: u64 },

    #[error("probabilities sum to {0}, expected exactly 1")]
    NotNormalized(String),

    #[error("matrix shape {rows}x{cols} is not allowed: {reason}")]
    Shape {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },

    #[error("oracle returned {value} on a sequence where a positive norm is required ({label})")]
    NonPositiveNorm { label: String, value: f64 },

    #[error("norm oracle `{label}` is not an l_p norm: {verdict}")]
    NotLp { label: String, verdict: String },

    #[error("padding consistency failed: {lhs} vs {rhs}")]
    PaddingMismatch { lhs: f64, rhs: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
