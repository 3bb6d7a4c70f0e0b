//! H2 and frequency-limited H2 norms of continuous-time LTI state-space
//! models.
//!
//! The frequency-limited squared H2 norm of a system with transfer function
//! `H(s) = C (sI - A)^{-1} B + D` over the band `[-omega, omega]` is
//!
//! ```text
//! (1/2 pi) * integral over [-omega, omega] of ||H(j nu)||_F^2 d nu
//! ```
//!
//! Three independent backends compute it:
//!
//! * [`spectral`]: an eigenvalue/residue expression that needs one
//!   eigendecomposition of `A` and then evaluates a closed form in the
//!   eigenvalues, residue matrices, and complex arctangents. Fast, and the
//!   only backend that accepts unstable models and nonzero feedthrough.
//! * [`gramian`]: the classical route through frequency-limited Gramians,
//!   solving Lyapunov equations with a matrix-logarithm forcing term.
//!   Stable, strictly proper models only.
//! * [`quadrature`]: adaptive Gauss-Kronrod integration of the defining
//!   integral. Slow but assumption-free; serves as the ground-truth oracle
//!   for the other two.
//!
//! [`model`] holds the state-space types and the eigenvalue/residue
//! decomposition, [`complexfn`] the branch-cut-sensitive scalar functions
//! the spectral formula depends on, [`io`] a text model format plus a
//! seeded random-model generator, and [`sweep`]/[`bench`] the grid and
//! timing drivers behind the CLI.

pub mod bench;
pub mod complexfn;
pub mod error;
pub mod gramian;
pub mod io;
pub mod model;
pub mod quadrature;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{
    classify_poles, eval_transfer, spectral_decompose, validate_band, BandCheck, FrequencyBand,
    PoleClassification, SpectralData, StateSpaceModel,
};
pub use spectral::{Backend, NormResult};
