//! State-space models, transfer-function evaluation, the eigenvalue/residue
//! decomposition, pole classification, and the band-validity check.
//!
//! The residue matrix of a simple pole `lambda_i` is
//!
//! ```text
//! phi_i = (C x_i)(y_i* B) / (y_i* x_i)
//! ```
//!
//! with `x_i` a right eigenvector of `A` and `y_i` a left one. Left
//! eigenvectors come from a second eigendecomposition of `A` transposed
//! (`y* A = lambda y*` is `A^T y = conj(lambda) y`), matched to the right
//! ones by nearest eigenvalue, rather than from inverting the right
//! eigenvector matrix: the inner product `y_i* x_i` then doubles as a
//! conditioning diagnostic, and an ill-conditioned eigenbasis never gets
//! inverted.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1};
use ndarray_linalg::{Eig, Factorize, ReciprocalConditionNum, Solve};
use num_complex::Complex64;

/// Pairwise eigenvalue gaps below this multiple of `max(1, spectral radius)`
/// mark the spectrum as numerically non-simple. LAPACK places eigenvalues of
/// a real matrix within roughly `1e-14 * ||A||` of the true ones, so 1e-8
/// leaves six orders of margin before pair terms in the spectral norm
/// formula start dividing by noise.
pub const GAP_TOL_REL: f64 = 1e-8;

/// Default |Re lambda| band (relative to `max(1, spectral radius)`) inside
/// which a pole counts as imaginary-axis. The stable/antistable/imaginary
/// trichotomy is exact in real arithmetic; floating point needs a declared
/// threshold, overridable per call in [`classify_poles`].
pub const IMAG_POLE_TOL_REL: f64 = 1e-9;

/// `|y* x|` below this multiple of `||x|| ||y||` marks a near-defective
/// eigenvalue: the left and right eigenvectors are close to orthogonal and
/// the residue would be dominated by roundoff.
pub const NEAR_DEFECTIVE_TOL: f64 = 1e-12;

/// Reciprocal condition number below which a shifted solve `(sI - A) x = b`
/// is treated as singular.
const SHIFT_RCOND_MIN: f64 = 1e-14;

/// A continuous-time LTI system `x' = Ax + Bu`, `y = Cx + Du` with `n`
/// states, `nu` inputs, and `ny` outputs. Immutable after construction;
/// construction validates shapes and finiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: Array2<f64>,
    b: Array2<f64>,
    c: Array2<f64>,
    d: Array2<f64>,
}

impl StateSpaceModel {
    pub fn new(
        a: Array2<f64>,
        b: Array2<f64>,
        c: Array2<f64>,
        d: Array2<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A must be square and nonempty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "B must be {}x(nu >= 1), got {}x{}",
                n,
                b.nrows(),
                b.ncols()
            )));
        }
        if c.ncols() != n || c.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "C must be (ny >= 1)x{}, got {}x{}",
                n,
                c.nrows(),
                c.ncols()
            )));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "D must be {}x{}, got {}x{}",
                c.nrows(),
                b.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        for (name, m) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(match name {
                    "A" => "A",
                    "B" => "B",
                    "C" => "C",
                    _ => "D",
                }));
            }
        }
        Ok(Self { a, b, c, d })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
    pub fn nu(&self) -> usize {
        self.b.ncols()
    }
    pub fn ny(&self) -> usize {
        self.c.nrows()
    }
    pub fn a(&self) -> &Array2<f64> {
        &self.a
    }
    pub fn b(&self) -> &Array2<f64> {
        &self.b
    }
    pub fn c(&self) -> &Array2<f64> {
        &self.c
    }
    pub fn d(&self) -> &Array2<f64> {
        &self.d
    }

    /// True when the feedthrough matrix D is exactly zero.
    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|&v| v == 0.0)
    }
}

/// Eigenvalues and residue matrices of a model, with the two diagnostics
/// that certify the simple-pole assumption behind the spectral formula.
#[derive(Debug, Clone)]
pub struct SpectralData {
    eigenvalues: Vec<Complex64>,
    residues: Vec<Array2<Complex64>>,
    min_pairwise_gap: f64,
    eigvec_condition: f64,
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }
    pub fn ny(&self) -> usize {
        self.residues[0].nrows()
    }
    pub fn nu(&self) -> usize {
        self.residues[0].ncols()
    }
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }
    pub fn residues(&self) -> &[Array2<Complex64>] {
        &self.residues
    }

    /// Smallest pairwise eigenvalue distance (infinite for n = 1).
    pub fn min_pairwise_gap(&self) -> f64 {
        self.min_pairwise_gap
    }

    /// Largest eigenvalue condition number `||x|| ||y|| / |y* x|` seen
    /// during the decomposition (1 for a normal matrix).
    pub fn eigvec_condition(&self) -> f64 {
        self.eigvec_condition
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.norm())
            .fold(0.0, f64::max)
    }
}

/// A frequency interval `[omega_lo, omega_hi)` bound pair in rad/s with
/// `0 <= omega_lo < omega_hi < inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBand {
    omega_lo: f64,
    omega_hi: f64,
}

impl FrequencyBand {
    pub fn new(omega_lo: f64, omega_hi: f64) -> Result<Self> {
        if !(omega_lo.is_finite() && omega_hi.is_finite() && 0.0 <= omega_lo && omega_lo < omega_hi)
        {
            return Err(Error::InvalidArgument(format!(
                "frequency band must satisfy 0 <= lo < hi < inf, got [{omega_lo}, {omega_hi}]"
            )));
        }
        Ok(Self { omega_lo, omega_hi })
    }

    /// The single-bound band `[0, omega_hi]`.
    pub fn upto(omega_hi: f64) -> Result<Self> {
        Self::new(0.0, omega_hi)
    }

    pub fn omega_lo(&self) -> f64 {
        self.omega_lo
    }
    pub fn omega_hi(&self) -> f64 {
        self.omega_hi
    }
}

/// Index partition of a spectrum into stable, antistable, and
/// imaginary-axis poles under the tolerance used for the split.
#[derive(Debug, Clone)]
pub struct PoleClassification {
    pub stable: Vec<usize>,
    pub antistable: Vec<usize>,
    pub imaginary: Vec<usize>,
    pub tol: f64,
}

impl PoleClassification {
    pub fn is_all_stable(&self) -> bool {
        self.antistable.is_empty() && self.imaginary.is_empty()
    }
}

/// Outcome of the band-validity check. A violation is a value, not an
/// error, so callers can decide whether to abort or report.
#[derive(Debug, Clone)]
pub enum BandCheck {
    Ok,
    Violation { omega: f64, poles: Vec<Complex64> },
}

impl BandCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, BandCheck::Ok)
    }

    pub fn into_result(self) -> Result<()> {
        match self {
            BandCheck::Ok => Ok(()),
            BandCheck::Violation { omega, poles } => Err(Error::BandViolation { omega, poles }),
        }
    }
}

/// Evaluates `H(s) = C (sI - A)^{-1} B + D` by an LU solve per input
/// column; the resolvent is never formed explicitly.
pub fn eval_transfer(model: &StateSpaceModel, s: Complex64) -> Result<Array2<Complex64>> {
    let n = model.n();
    let (nu, ny) = (model.nu(), model.ny());
    let mut shifted = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut v = Complex64::new(-model.a[[i, j]], 0.0);
            if i == j {
                v += s;
            }
            shifted[[i, j]] = v;
        }
    }
    let factored = shifted
        .factorize()
        .map_err(|_| Error::SingularShift { s })?;
    if factored.rcond()? < SHIFT_RCOND_MIN {
        return Err(Error::SingularShift { s });
    }
    let mut x = Array2::<Complex64>::zeros((n, nu));
    for j in 0..nu {
        let rhs = Array1::from_iter((0..n).map(|i| Complex64::new(model.b[[i, j]], 0.0)));
        let sol = factored.solve(&rhs)?;
        for i in 0..n {
            x[[i, j]] = sol[i];
        }
    }
    let mut h = Array2::<Complex64>::zeros((ny, nu));
    for r in 0..ny {
        for j in 0..nu {
            let mut acc = Complex64::new(model.d[[r, j]], 0.0);
            for k in 0..n {
                acc += Complex64::new(model.c[[r, k]], 0.0) * x[[k, j]];
            }
            h[[r, j]] = acc;
        }
    }
    Ok(h)
}

/// Residue of one simple pole from its eigenvector pair, together with the
/// eigenvalue condition number `||x|| ||y|| / |y* x|`. The division by
/// `y* x` makes the result invariant under rescaling of either vector.
pub(crate) fn residue_from_vectors(
    c: &Array2<Complex64>,
    b: &Array2<Complex64>,
    x: ArrayView1<Complex64>,
    y: ArrayView1<Complex64>,
) -> Result<(Array2<Complex64>, f64)> {
    let n = x.len();
    let mut dot = Complex64::new(0.0, 0.0);
    let mut nx_sq = 0.0;
    let mut ny_sq = 0.0;
    for k in 0..n {
        dot += y[k].conj() * x[k];
        nx_sq += x[k].norm_sqr();
        ny_sq += y[k].norm_sqr();
    }
    let scale = nx_sq.sqrt() * ny_sq.sqrt();
    if dot.norm() < NEAR_DEFECTIVE_TOL * scale {
        return Err(Error::DegenerateSpectrum(format!(
            "near-defective eigenvector pair: |y* x| = {:e} against ||x|| ||y|| = {:e}",
            dot.norm(),
            scale
        )));
    }
    let kappa = scale / dot.norm();
    let (rows, cols) = (c.nrows(), b.ncols());
    let mut cx = vec![Complex64::new(0.0, 0.0); rows];
    for (r, slot) in cx.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            acc += c[[r, k]] * x[k];
        }
        *slot = acc;
    }
    let mut yb = vec![Complex64::new(0.0, 0.0); cols];
    for (j, slot) in yb.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            acc += y[k].conj() * b[[k, j]];
        }
        *slot = acc;
    }
    let mut phi = Array2::<Complex64>::zeros((rows, cols));
    for r in 0..rows {
        for j in 0..cols {
            phi[[r, j]] = cx[r] * yb[j] / dot;
        }
    }
    Ok((phi, kappa))
}

/// Computes all eigenvalue/residue pairs of a model.
///
/// Fails when the spectrum is numerically non-simple: pairwise gap below
/// [`GAP_TOL_REL`] times `max(1, spectral radius)`, or some `|y* x|` below
/// [`NEAR_DEFECTIVE_TOL`] relative to the vector norms.
pub fn spectral_decompose(model: &StateSpaceModel) -> Result<SpectralData> {
    let n = model.n();
    let (lam, right) = model.a().eig()?;
    let a_t = model.a().t().to_owned();
    let (mu, left) = a_t.eig()?;

    let rho = lam.iter().map(|l| l.norm()).fold(0.0_f64, f64::max);
    let gap_tol = GAP_TOL_REL * rho.max(1.0);
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for k in (i + 1)..n {
            min_gap = min_gap.min((lam[i] - lam[k]).norm());
        }
    }
    if n >= 2 && min_gap < gap_tol {
        return Err(Error::DegenerateSpectrum(format!(
            "minimum pairwise eigenvalue gap {min_gap:e} below threshold {gap_tol:e}"
        )));
    }

    // y* A = lambda y*  <=>  A^T y = conj(lambda) y: match each lambda_i to
    // the nearest unused eigenvalue of A^T at conj(lambda_i). The spectra
    // agree to solver precision, far below the simple-pole gap, so nearest
    // neighbor is unambiguous.
    let mut used = vec![false; n];
    let mut left_of = vec![usize::MAX; n];
    for i in 0..n {
        let target = lam[i].conj();
        let mut best = usize::MAX;
        let mut best_dist = f64::INFINITY;
        for (j, flag) in used.iter().enumerate() {
            if !flag {
                let d = (mu[j] - target).norm();
                if d < best_dist {
                    best_dist = d;
                    best = j;
                }
            }
        }
        if best == usize::MAX || (n >= 2 && best_dist > 0.5 * min_gap) {
            return Err(Error::DegenerateSpectrum(format!(
                "left/right eigenvalue matching failed near lambda = {} (distance {best_dist:e})",
                lam[i]
            )));
        }
        used[best] = true;
        left_of[i] = best;
    }

    let b_c = model.b().mapv(|v| Complex64::new(v, 0.0));
    let c_c = model.c().mapv(|v| Complex64::new(v, 0.0));
    let mut residues = Vec::with_capacity(n);
    let mut worst_kappa = 1.0_f64;
    for (i, &li) in left_of.iter().enumerate() {
        let (phi, kappa) =
            residue_from_vectors(&c_c, &b_c, right.column(i), left.column(li))?;
        worst_kappa = worst_kappa.max(kappa);
        residues.push(phi);
    }

    Ok(SpectralData {
        eigenvalues: lam.to_vec(),
        residues,
        min_pairwise_gap: min_gap,
        eigvec_condition: worst_kappa,
    })
}

/// Default imaginary-axis tolerance for a spectrum: [`IMAG_POLE_TOL_REL`]
/// times `max(1, spectral radius)`.
pub fn default_imag_tol(eigenvalues: &[Complex64]) -> f64 {
    let rho = eigenvalues.iter().map(|l| l.norm()).fold(0.0_f64, f64::max);
    IMAG_POLE_TOL_REL * rho.max(1.0)
}

/// Splits pole indices by the sign of `Re lambda` against `tol` (negative
/// tolerances are treated as zero). The three sets always partition `0..n`.
pub fn classify_poles(eigenvalues: &[Complex64], tol: f64) -> PoleClassification {
    let tol = tol.max(0.0);
    let mut out = PoleClassification {
        stable: Vec::new(),
        antistable: Vec::new(),
        imaginary: Vec::new(),
        tol,
    };
    for (i, l) in eigenvalues.iter().enumerate() {
        if l.re < -tol {
            out.stable.push(i);
        } else if l.re > tol {
            out.antistable.push(i);
        } else {
            out.imaginary.push(i);
        }
    }
    out
}

/// Checks the validity hypothesis of the spectral band formula: the upper
/// band edge must stay strictly below every imaginary-axis pole magnitude.
pub fn validate_band(
    classification: &PoleClassification,
    eigenvalues: &[Complex64],
    band: &FrequencyBand,
) -> BandCheck {
    validate_omega_hi(classification, eigenvalues, band.omega_hi())
}

/// [`validate_band`] for a single upper bound (the band `[0, omega_hi]`);
/// `omega_hi = inf` is allowed and violates whenever an imaginary-axis pole
/// exists.
pub fn validate_omega_hi(
    classification: &PoleClassification,
    eigenvalues: &[Complex64],
    omega_hi: f64,
) -> BandCheck {
    if classification.imaginary.is_empty() {
        return BandCheck::Ok;
    }
    let offending: Vec<Complex64> = classification
        .imaginary
        .iter()
        .map(|&i| eigenvalues[i])
        .filter(|l| omega_hi >= l.norm())
        .collect();
    if offending.is_empty() {
        BandCheck::Ok
    } else {
        BandCheck::Violation {
            omega: omega_hi,
            poles: offending,
        }
    }
}
