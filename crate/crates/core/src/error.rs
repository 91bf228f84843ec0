//! Error type shared by every module of the crate.
//!
//! Each variant carries enough context to locate the offending input (the
//! curve cell, the matrix dimension, the spectrum that failed a rank gate).
//! [`Error::kind`] classifies variants into input problems versus numerical
//! failures so that front ends can map them onto distinct exit codes.

use thiserror::Error;

/// Coarse classification of an [`Error`], used by callers that need to
/// distinguish "your input is malformed" from "the computation broke down".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The input data or arguments were invalid before any numerics ran.
    Input,
    /// A numerical condition (rank, convergence, degeneracy) failed.
    Numerical,
}

/// Errors produced by the basis, linear-algebra, FPCA, ICA, evaluation and
/// simulation modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Fourier bases pair a sine and cosine per frequency, so the size must
    /// be odd (constant plus whole pairs).
    #[error("basis size must be odd and positive, got {k}")]
    EvenBasisSize { k: usize },

    /// Catch-all for argument validation that has no dedicated variant.
    #[error("invalid argument for {context}: {message}")]
    InvalidArgument {
        context: &'static str,
        message: String,
    },

    /// Basis interval is empty or reversed.
    #[error("basis interval [{a}, {b}] is empty or reversed")]
    BadInterval { a: f64, b: f64 },

    /// An evaluation point fell outside the basis interval.
    #[error("point t = {t} lies outside the basis interval [{a}, {b}]")]
    PointOutsideInterval { t: f64, a: f64, b: f64 },

    /// A curve cell does not carry enough sample points for the requested
    /// basis size.
    #[error(
        "observation {obs}, component {component}: {points} sample point(s) \
         cannot determine {k} basis coefficients"
    )]
    UnderdeterminedCell {
        obs: usize,
        component: usize,
        points: usize,
        k: usize,
    },

    /// The least-squares design matrix of a curve cell is rank deficient.
    #[error(
        "observation {obs}, component {component}: design matrix has rank \
         {rank} < {k}; sample points do not separate the basis functions"
    )]
    RankDeficientCell {
        obs: usize,
        component: usize,
        rank: usize,
        k: usize,
    },

    /// Centering needs at least two observations.
    #[error("centering requires at least 2 observations, got {n}")]
    TooFewObservations { n: usize },

    /// A matrix or data set contained NaN or infinity.
    #[error("{context} contains a non-finite value")]
    NonFinite { context: &'static str },

    /// A matrix handed to a symmetric routine was too far from symmetric.
    #[error(
        "matrix is not symmetric: max |S - S'| = {asymmetry:.3e} exceeds \
         {limit:.3e}"
    )]
    NotSymmetric { asymmetry: f64, limit: f64 },

    /// `sym_inv_sqrt` (or a whitening step) found fewer than `d` eigenvalues
    /// above the tolerance.
    #[error(
        "effective rank below {d}: eigenvalue {d} is {lambda_d:.6e}, \
         tolerance {eps:.6e}"
    )]
    EffectiveRankBelowD { d: usize, lambda_d: f64, eps: f64 },

    /// The covariance spectrum cannot support the requested reduction.
    #[error(
        "effective dimension below {d}: covariance spectrum {spectrum:?} has \
         eigenvalue {d} at or below tolerance {eps:.6e}"
    )]
    EffectiveDimensionBelowD {
        d: usize,
        eps: f64,
        spectrum: Vec<f64>,
    },

    /// Two objects that must agree in shape did not.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// An operation that requires centered coefficients received raw ones.
    #[error("coefficient matrix must be centered first (call center_coefficients)")]
    Uncentered,

    /// New data was pre-centered with means that differ from the training
    /// means stored on the model.
    #[error(
        "input was centered with different column means than the model's \
         training data (max deviation {deviation:.3e}); pass raw coefficients \
         and let the model apply its stored means"
    )]
    CenteringMismatch { deviation: f64 },

    /// A cumulant index was outside `0..d`.
    #[error("cumulant index {index} out of range for dimension {d}")]
    IndexOutOfRange { index: usize, d: usize },

    /// The minimum distance index is undefined when a row is identically zero.
    #[error("gain matrix row {row} is identically zero; distance index undefined")]
    ZeroRow { row: usize },

    /// Exact permutation enumeration is only feasible for small dimensions.
    #[error("minimum distance index enumeration supports p <= {limit}, got {p}")]
    DimensionTooLarge { p: usize, limit: usize },

    /// Joint diagonalization needs at least one matrix of dimension >= 2.
    #[error("joint diagonalization requires {requirement}, got {actual}")]
    BadDiagonalizationInput {
        requirement: &'static str,
        actual: String,
    },

    /// A simulation configuration failed validation.
    #[error("invalid simulation configuration: {message}")]
    BadSimConfig { message: String },

    /// A CSV or JSON document failed to parse.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Wrapper for I/O failures while reading or writing artifacts.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Classify this error for exit-code mapping: malformed input versus a
    /// numerical failure discovered mid-computation.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::EvenBasisSize { .. }
            | Error::InvalidArgument { .. }
            | Error::BadInterval { .. }
            | Error::PointOutsideInterval { .. }
            | Error::UnderdeterminedCell { .. }
            | Error::TooFewObservations { .. }
            | Error::DimensionMismatch { .. }
            | Error::Uncentered
            | Error::IndexOutOfRange { .. }
            | Error::DimensionTooLarge { .. }
            | Error::BadDiagonalizationInput { .. }
            | Error::BadSimConfig { .. }
            | Error::Parse { .. }
            | Error::Io { .. } => ErrorKind::Input,
            Error::NonFinite { .. }
            | Error::NotSymmetric { .. }
            | Error::RankDeficientCell { .. }
            | Error::EffectiveRankBelowD { .. }
            | Error::EffectiveDimensionBelowD { .. }
            | Error::CenteringMismatch { .. }
            | Error::ZeroRow { .. } => ErrorKind::Numerical,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
