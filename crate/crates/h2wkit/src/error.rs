//! Error type shared by every module.
//!
//! Violated mathematical preconditions (wrong stability class, nonzero
//! feedthrough, band bound at or above an imaginary-axis pole) are ordinary
//! variants rather than panics: callers such as the CLI map them to distinct
//! exit codes, and the comparison driver needs to distinguish "this backend
//! does not apply" from "this backend failed".

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed model file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Matrices whose shapes do not describe one system.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// NaN or infinity in an input matrix.
    #[error("non-finite entry in matrix {0}")]
    NonFinite(&'static str),

    /// An argument outside an operation's domain (bad band, negative
    /// tolerance, unsupported option value, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A scalar function evaluated at a point where it is undefined.
    #[error("{func} is undefined at z = {z}")]
    Domain { func: &'static str, z: Complex64 },

    /// `s I - A` numerically singular while evaluating the transfer function.
    #[error("transfer function evaluated numerically on the spectrum of A (s = {s})")]
    SingularShift { s: Complex64 },

    /// Eigenvalues too close to trust the residue expansion (the spectral
    /// formula assumes simple poles), or left/right eigenvectors nearly
    /// orthogonal.
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    /// The band bound does not stay below every imaginary-axis pole.
    #[error("frequency bound {omega} not below all imaginary-axis pole magnitudes (offending poles: {poles:?})")]
    BandViolation { omega: f64, poles: Vec<Complex64> },

    /// Operation defined only for D = 0.
    #[error("operation requires a strictly proper model (D = 0)")]
    NotStrictlyProper,

    /// Operation defined only for asymptotically stable models.
    #[error("operation requires a stable model (offending poles: {poles:?})")]
    RequiresStable { poles: Vec<Complex64> },

    /// A Lyapunov equation whose operator is (near-)singular: some pair of
    /// eigenvalues of A sums to approximately zero.
    #[error("Lyapunov operator singular: {0}")]
    LyapunovSingular(String),

    /// Failure inside a linear-algebra kernel (LAPACK/Schur).
    #[error("linear-algebra backend failure: {0}")]
    Backend(String),

    /// A computed quantity violated an internal accuracy contract
    /// (imaginary residual, Lyapunov residual, trace disagreement, ...).
    #[error("{what}: {got:e} exceeds tolerance {tol:e}")]
    ToleranceExceeded { what: String, got: f64, tol: f64 },

    /// Adaptive quadrature stalled above its error target.
    #[error("quadrature did not converge: error estimate {estimate:e} > target {target:e} after {panels} panels")]
    NonConvergence {
        estimate: f64,
        target: f64,
        panels: usize,
    },

    /// Backends disagree beyond the comparison tolerance.
    #[error("backends disagree: max relative deviation {deviation:e} > {tol:e}")]
    BackendDisagreement { deviation: f64, tol: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}
