//! # pjdet — projected-Jacobi detection for large MIMO uplinks
//!
//! Simulation toolkit for uplink detection in large quasi-symmetric MIMO
//! systems (`y = Hx + v` with many service antennas `M` and a user count `N`
//! that may approach `M`). The crate provides:
//!
//! - [`numerics`] — dense complex linear algebra (Gram matrices, Hermitian
//!   Cholesky solves, eigenvalues) and a reproducible streamed RNG.
//! - [`channel`] — i.i.d. and spatially non-stationary (per-subarray
//!   large-scale fading) Rayleigh channel generation with verifiable
//!   statistics.
//! - [`modem`] — square-QAM constellations, symbol sourcing, slicing and
//!   error counting.
//! - [`detectors`] — matched filter, (regularized) zero forcing / LMMSE
//!   (direct, Jacobi, and conjugate-gradient solvers), classical Jacobi,
//!   projected Jacobi with residual-minimizing output selection, the
//!   matched-filter bound, and exhaustive maximum-likelihood detection.
//! - [`analysis`] — closed-form pairwise error probabilities and SER
//!   approximations for overlaying theory on Monte Carlo curves.
//! - [`oracle`] — conditioned Monte Carlo estimators of the same pairwise
//!   error probabilities, kept independent of the closed forms so the two
//!   can be cross-checked.
//! - [`sim`] — configuration, a deterministic parallel Monte Carlo sweep
//!   engine, CSV/SVG/manifest emission, and op-count reporting.
//!
//! The primary interface is the library plus the runnable programs under
//! `examples/`; a thin `pjdet` binary exposes the sweep engine as a CLI
//! (`simulate`, `theory`, `validate`, `opcount`).
//!
//! ## Reproducibility
//!
//! Every random draw is keyed by an explicit `(seed, stream)` pair
//! ([`numerics::SeededRng`]). Sweeps derive one stream per (point, trial),
//! so results are bit-identical regardless of worker count or scheduling.

pub mod analysis;
pub mod channel;
pub mod detectors;
pub mod modem;
pub mod numerics;
pub mod oracle;
pub mod sim;

pub use num_complex::Complex64;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Shape or length mismatch between operands.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A Hermitian factorization failed; the matrix is not positive definite.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    /// The Gram diagonal contains a zero (or non-positive) entry.
    #[error("zero diagonal entry in Gram matrix at index {0}")]
    ZeroDiagonal(usize),
    /// An argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A NaN or infinity showed up where finite values are required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    /// Exhaustive search space exceeds the configured cap.
    #[error("enumeration space {space:.3e} exceeds cap {cap:.3e}")]
    EnumerationCap { space: f64, cap: f64 },
    /// Experiment configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Configuration file could not be parsed.
    #[error("config parse error: {0}")]
    ConfigParse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
