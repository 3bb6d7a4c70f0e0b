//! Gramian norm backend: Lyapunov equations and frequency-limited
//! Gramians.
//!
//! The infinite-horizon squared H2 norm is `tr(B^T Q B) = tr(C P C^T)` with
//! `P`, `Q` the controllability/observability Gramians. The band-limited
//! version replaces them with frequency-limited Gramians built from the
//! matrix
//!
//! ```text
//! S(omega) = (j / 2 pi) log( (A + j omega I) (A - j omega I)^{-1} )
//! ```
//!
//! evaluated here through the eigendecomposition of `A` with the principal
//! logarithm applied per eigenvalue. `S BB^T + BB^T S^H` and
//! `S^H C^T C + C^T C S` are Hermitian with real parts symmetric; their
//! imaginary parts are pure roundoff and are checked against a tolerance
//! before being discarded.
//!
//! Lyapunov equations are solved directly (Bartels-Stewart): one real Schur
//! form, then a block back-substitution over the quasi-triangular factor
//! with at most 4x4 linear systems per block pair.

use crate::error::{Error, Result};
use crate::model::{
    classify_poles, default_imag_tol, PoleClassification, StateSpaceModel, GAP_TOL_REL,
};
use crate::spectral::{Backend, NormResult};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Solve};
use num_complex::Complex64;
use std::time::Instant;

/// Relative bound on `||A X + X A^T + RHS||_F` accepted from the Lyapunov
/// solver, against the natural scale `||A|| ||X|| + ||RHS||`. A correct
/// solve lands orders of magnitude below this; violations indicate
/// near-singularity that escaped the eigenvalue pre-check.
pub const LYAP_RESIDUAL_TOL: f64 = 1e-10;

/// `|lambda_i + lambda_k|` below this multiple of `max(1, spectral radius)`
/// makes the Lyapunov operator numerically singular and the solve is
/// refused rather than returning an exploding solution.
pub const LYAP_SINGULAR_TOL_REL: f64 = 1e-10;

/// Relative bound on the Frobenius norm of the imaginary part discarded
/// when realifying `S BB^T + BB^T S^H` and its observability twin.
pub const GRAMIAN_IMAG_TOL_REL: f64 = 1e-10;

/// Relative disagreement allowed between `tr(B^T Q B)` and `tr(C P C^T)`
/// for the infinite-horizon norm, where both traces come from plain
/// Lyapunov solves.
pub const H2_TRACE_AGREE_TOL: f64 = 1e-10;

/// Relative disagreement allowed between the two trace forms of the band
/// norm; looser than the infinite-horizon bound because the matrix
/// logarithm goes through an eigendecomposition.
pub const H2W_TRACE_AGREE_TOL: f64 = 1e-8;

/// `|lambda -+ j omega|` below this multiple of `max(1, spectral radius,
/// omega)` means `A -+ j omega I` is numerically singular in `S(omega)`.
const SHIFT_SINGULAR_TOL_REL: f64 = 1e-12;

/// Frequency-limited Gramian pair with the residuals of the two Lyapunov
/// solves that produced it.
#[derive(Debug, Clone)]
pub struct GramianPair {
    /// Controllability Gramian (symmetric).
    pub p: Array2<f64>,
    /// Observability Gramian (symmetric).
    pub q: Array2<f64>,
    /// `||A P + P A^T + W_c||_F`.
    pub residual_p: f64,
    /// `||A^T Q + Q A + W_o||_F`.
    pub residual_q: f64,
}

fn to_dmatrix(a: &Array2<f64>) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Positions and sizes of the diagonal blocks of a real quasi-triangular
/// Schur factor. A subdiagonal entry counts as zero when it is negligible
/// against its diagonal neighbors (the usual deflation criterion); treating
/// such an entry as zero perturbs the equation by the entry itself, far
/// below the residual tolerance.
fn diagonal_blocks(t: &nalgebra::DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let coupled = i + 1 < n
            && t[(i + 1, i)].abs()
                > f64::EPSILON * (t[(i, i)].abs() + t[(i + 1, i + 1)].abs()) + f64::MIN_POSITIVE;
        if coupled {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

/// Eigenvalues of the quasi-triangular factor, block by block.
fn block_eigenvalues(t: &nalgebra::DMatrix<f64>, blocks: &[(usize, usize)]) -> Vec<Complex64> {
    let mut eigs = Vec::with_capacity(t.nrows());
    for &(s, size) in blocks {
        if size == 1 {
            eigs.push(Complex64::new(t[(s, s)], 0.0));
        } else {
            let (a, b) = (t[(s, s)], t[(s, s + 1)]);
            let (c, d) = (t[(s + 1, s)], t[(s + 1, s + 1)]);
            let mid = 0.5 * (a + d);
            let disc = mid * mid - (a * d - b * c);
            if disc >= 0.0 {
                let r = disc.sqrt();
                eigs.push(Complex64::new(mid + r, 0.0));
                eigs.push(Complex64::new(mid - r, 0.0));
            } else {
                let r = (-disc).sqrt();
                eigs.push(Complex64::new(mid, r));
                eigs.push(Complex64::new(mid, -r));
            }
        }
    }
    eigs
}

/// Gaussian elimination with partial pivoting on an up-to-4x4 system,
/// solved in place. Returns `None` on a hard zero pivot; genuine
/// near-singularity is caught beforehand by the eigenvalue pre-check.
#[allow(clippy::needless_range_loop)] // row/column indexing mirrors the elimination math
fn solve_small(m: &mut [[f64; 4]; 4], rhs: &mut [f64; 4], size: usize) -> Option<()> {
    for col in 0..size {
        let mut piv = col;
        for r in (col + 1)..size {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        if m[piv][col].abs() < f64::MIN_POSITIVE {
            return None;
        }
        if piv != col {
            m.swap(piv, col);
            rhs.swap(piv, col);
        }
        for r in (col + 1)..size {
            let f = m[r][col] / m[col][col];
            for c in col..size {
                m[r][c] -= f * m[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    for col in (0..size).rev() {
        let mut acc = rhs[col];
        for c in (col + 1)..size {
            acc -= m[col][c] * rhs[c];
        }
        rhs[col] = acc / m[col][col];
    }
    Some(())
}

/// Solves `T Y + Y T^T = C` for quasi-upper-triangular `T` by block
/// back-substitution from the last block pair upward.
fn quasi_triangular_lyap(
    t: &nalgebra::DMatrix<f64>,
    c: &nalgebra::DMatrix<f64>,
    blocks: &[(usize, usize)],
) -> Result<nalgebra::DMatrix<f64>> {
    let n = t.nrows();
    let nb = blocks.len();
    let mut y = nalgebra::DMatrix::<f64>::zeros(n, n);
    for bi in (0..nb).rev() {
        let (i0, pi) = blocks[bi];
        for bj in (0..nb).rev() {
            let (j0, pj) = blocks[bj];
            // F = C_IJ - sum_{K>I} T_IK Y_KJ - sum_{L>J} Y_IL (T_JL)^T
            let mut f = [[0.0_f64; 2]; 2];
            for r in 0..pi {
                for s in 0..pj {
                    f[r][s] = c[(i0 + r, j0 + s)];
                }
            }
            for &(k0, pk) in &blocks[bi + 1..] {
                for r in 0..pi {
                    for s in 0..pj {
                        let mut acc = 0.0;
                        for q in 0..pk {
                            acc += t[(i0 + r, k0 + q)] * y[(k0 + q, j0 + s)];
                        }
                        f[r][s] -= acc;
                    }
                }
            }
            for &(l0, pl) in &blocks[bj + 1..] {
                for r in 0..pi {
                    for s in 0..pj {
                        let mut acc = 0.0;
                        for q in 0..pl {
                            acc += y[(i0 + r, l0 + q)] * t[(j0 + s, l0 + q)];
                        }
                        f[r][s] -= acc;
                    }
                }
            }
            // Solve T_II X + X (T_JJ)^T = F as a (pi pj) x (pi pj) system
            // in the unknowns z[r + pi s] = X[r][s].
            let size = pi * pj;
            let mut m = [[0.0_f64; 4]; 4];
            let mut rhs = [0.0_f64; 4];
            for s in 0..pj {
                for r in 0..pi {
                    let row = r + pi * s;
                    for r2 in 0..pi {
                        m[row][r2 + pi * s] += t[(i0 + r, i0 + r2)];
                    }
                    for s2 in 0..pj {
                        m[row][r + pi * s2] += t[(j0 + s, j0 + s2)];
                    }
                    rhs[row] = f[r][s];
                }
            }
            solve_small(&mut m, &mut rhs, size).ok_or_else(|| {
                Error::LyapunovSingular(
                    "zero pivot in a diagonal block system of the Lyapunov solve".into(),
                )
            })?;
            for s in 0..pj {
                for r in 0..pi {
                    y[(i0 + r, j0 + s)] = rhs[r + pi * s];
                }
            }
        }
    }
    Ok(y)
}

fn lyap_solve_with_residual(a: &Array2<f64>, rhs: &Array2<f64>) -> Result<(Array2<f64>, f64)> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "A must be square and nonempty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if rhs.nrows() != n || rhs.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "RHS must be {}x{}, got {}x{}",
            n,
            n,
            rhs.nrows(),
            rhs.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("A"));
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("RHS"));
    }

    let (q, t) = to_dmatrix(a).schur().unpack();
    let blocks = diagonal_blocks(&t);
    let eigs = block_eigenvalues(&t, &blocks);
    let rho = eigs.iter().map(|e| e.norm()).fold(0.0_f64, f64::max);
    let tol = LYAP_SINGULAR_TOL_REL * rho.max(1.0);
    for i in 0..eigs.len() {
        for k in i..eigs.len() {
            let s = eigs[i] + eigs[k];
            if s.norm() <= tol {
                return Err(Error::LyapunovSingular(format!(
                    "eigenvalue pair sum {:.3e}{:+.3e}i is numerically zero",
                    s.re, s.im
                )));
            }
        }
    }

    // A X + X A^T + RHS = 0 becomes T Y + Y T^T = -Q^T RHS Q.
    let c = -(q.transpose() * to_dmatrix(rhs) * &q);
    let y = quasi_triangular_lyap(&t, &c, &blocks)?;
    let x_dm = &q * y * q.transpose();
    let mut x = Array2::from_shape_fn((n, n), |(i, j)| x_dm[(i, j)]);

    let asym = frob(&(rhs - &rhs.t()));
    if asym <= 1e-12 * frob(rhs) {
        // Symmetric data has a symmetric solution; average out roundoff.
        x = 0.5 * (&x + &x.t());
    }

    let residual = frob(&(a.dot(&x) + x.dot(&a.t()) + rhs));
    let scale = frob(a) * frob(&x) + frob(rhs);
    if residual > LYAP_RESIDUAL_TOL * scale.max(1.0) {
        return Err(Error::ToleranceExceeded {
            what: "Lyapunov solve residual".into(),
            got: residual,
            tol: LYAP_RESIDUAL_TOL * scale.max(1.0),
        });
    }
    Ok((x, residual))
}

/// Solves `A X + X A^T + RHS = 0` directly via the real Schur form of `A`.
///
/// Fails with [`Error::LyapunovSingular`] when some eigenvalue pair sum
/// `lambda_i + lambda_k` is numerically zero (for example any `A` with
/// imaginary-axis eigenvalues), and with [`Error::ToleranceExceeded`] if
/// the verified residual is out of tolerance.
pub fn lyap_solve(a: &Array2<f64>, rhs: &Array2<f64>) -> Result<Array2<f64>> {
    lyap_solve_with_residual(a, rhs).map(|(x, _)| x)
}

/// `S(omega)` from a precomputed eigendecomposition of `A`.
fn s_omega_from_eig(
    lam: &Array1<Complex64>,
    v: &Array2<Complex64>,
    omega: f64,
) -> Result<Array2<Complex64>> {
    let n = lam.len();
    if omega == 0.0 {
        return Ok(Array2::zeros((n, n)));
    }
    let rho = lam.iter().map(|e| e.norm()).fold(0.0_f64, f64::max);

    // Simple-spectrum guard, same scale-relative threshold as the spectral
    // decomposition: the diagonalization of the matrix logarithm is only
    // trustworthy away from eigenvalue collisions.
    if n >= 2 {
        let gap_tol = GAP_TOL_REL * rho.max(1.0);
        for i in 0..n {
            for k in (i + 1)..n {
                if (lam[i] - lam[k]).norm() < gap_tol {
                    return Err(Error::DegenerateSpectrum(format!(
                        "eigenvalues {} and {} are closer than {:.3e}",
                        lam[i], lam[k], gap_tol
                    )));
                }
            }
        }
    }

    let shift_tol = SHIFT_SINGULAR_TOL_REL * rho.max(omega).max(1.0);
    let jw = Complex64::new(0.0, omega);
    let mut f = Array1::<Complex64>::zeros(n);
    for (i, &l) in lam.iter().enumerate() {
        if (l - jw).norm() <= shift_tol || (l + jw).norm() <= shift_tol {
            return Err(Error::SingularShift { s: jw });
        }
        let ratio = (l + jw) / (l - jw);
        f[i] = Complex64::new(0.0, 0.5 / std::f64::consts::PI) * ratio.ln();
    }

    // S = V diag(f) V^{-1}: scale columns of V, then solve V^T S^T = W^T
    // row by row.
    let mut w = v.to_owned();
    for (i, mut col) in w.columns_mut().into_iter().enumerate() {
        col.mapv_inplace(|x| x * f[i]);
    }
    let vt = v.t().to_owned();
    let mut s = Array2::<Complex64>::zeros((n, n));
    for k in 0..n {
        let sol = vt.solve(&w.row(k).to_owned()).map_err(|_| {
            Error::DegenerateSpectrum("eigenvector matrix is numerically singular".into())
        })?;
        s.row_mut(k).assign(&sol);
    }
    Ok(s)
}

/// The frequency-band selector matrix
/// `S(omega) = (j/2pi) log((A + j omega I)(A - j omega I)^{-1})`, computed
/// via the eigendecomposition of `A` with per-eigenvalue principal
/// logarithms. `S(0) = 0`; `omega` must be finite and nonnegative and the
/// shifts `A -+ j omega I` must be nonsingular.
pub fn s_omega(a: &Array2<f64>, omega: f64) -> Result<Array2<Complex64>> {
    if a.nrows() != a.ncols() || a.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "A must be square and nonempty, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("A"));
    }
    if !omega.is_finite() || omega < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "omega must be finite and nonnegative, got {omega}"
        )));
    }
    if omega == 0.0 {
        return Ok(Array2::zeros((a.nrows(), a.nrows())));
    }
    let (lam, v) = a.eig()?;
    s_omega_from_eig(&lam, &v, omega)
}

fn hermitian_part_realified(
    w: &Array2<Complex64>,
    what: &'static str,
) -> Result<(Array2<f64>, f64)> {
    let total: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let imag: f64 = w.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
    if imag > GRAMIAN_IMAG_TOL_REL * total {
        return Err(Error::ToleranceExceeded {
            what: format!("imaginary part of {what}"),
            got: imag,
            tol: GRAMIAN_IMAG_TOL_REL * total,
        });
    }
    let re = w.mapv(|z| z.re);
    Ok((0.5 * (&re + &re.t()), imag))
}

fn require_stable(eigs: &[Complex64]) -> Result<PoleClassification> {
    let cls = classify_poles(eigs, default_imag_tol(eigs));
    if !cls.is_all_stable() {
        let poles = cls
            .antistable
            .iter()
            .chain(&cls.imaginary)
            .map(|&i| eigs[i])
            .collect();
        return Err(Error::RequiresStable { poles });
    }
    Ok(cls)
}

fn freq_limited_with_diagnostics(
    model: &StateSpaceModel,
    omega: f64,
) -> Result<(GramianPair, f64)> {
    if !omega.is_finite() || omega < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "omega must be finite and nonnegative, got {omega}"
        )));
    }
    let a = model.a();
    let (lam, v) = a.eig()?;
    require_stable(lam.as_slice().expect("contiguous eigenvalue array"))?;
    let s = s_omega_from_eig(&lam, &v, omega)?;
    let s_h = s.t().mapv(|z| z.conj());

    let bbt_r = model.b().dot(&model.b().t());
    let ctc_r = model.c().t().dot(model.c());
    let bbt = bbt_r.mapv(|x| Complex64::new(x, 0.0));
    let ctc = ctc_r.mapv(|x| Complex64::new(x, 0.0));

    let wc_c = s.dot(&bbt) + bbt.dot(&s_h);
    let wo_c = s_h.dot(&ctc) + ctc.dot(&s);
    let (wc, im_c) = hermitian_part_realified(&wc_c, "the band-limited controllability data")?;
    let (wo, im_o) = hermitian_part_realified(&wo_c, "the band-limited observability data")?;

    let (p, residual_p) = lyap_solve_with_residual(a, &wc)?;
    let (q, residual_q) = lyap_solve_with_residual(&a.t().to_owned(), &wo)?;
    Ok((
        GramianPair {
            p,
            q,
            residual_p,
            residual_q,
        },
        im_c.max(im_o),
    ))
}

/// Frequency-limited Gramian pair of a stable model over `[-omega, omega]`:
/// `P` solves `A P + P A^T + (S BB^T + BB^T S^H) = 0` and `Q` solves the
/// dual equation with `S^H C^T C + C^T C S`.
pub fn freq_limited_gramians(model: &StateSpaceModel, omega: f64) -> Result<GramianPair> {
    freq_limited_with_diagnostics(model, omega).map(|(pair, _)| pair)
}

/// `tr(B^T Q B)` given `Q`.
fn input_trace(model: &StateSpaceModel, q: &Array2<f64>) -> f64 {
    let qb = q.dot(model.b());
    model.b().iter().zip(qb.iter()).map(|(x, y)| x * y).sum()
}

/// `tr(C P C^T)` given `P`.
fn output_trace(model: &StateSpaceModel, p: &Array2<f64>) -> f64 {
    let cp = model.c().dot(p);
    model.c().iter().zip(cp.iter()).map(|(x, y)| x * y).sum()
}

fn combine_traces(t_in: f64, t_out: f64, rel_tol: f64) -> Result<f64> {
    let tol = rel_tol * t_in.abs().max(t_out.abs()).max(1.0);
    if (t_in - t_out).abs() > tol {
        return Err(Error::ToleranceExceeded {
            what: "disagreement between the two Gramian trace forms".into(),
            got: (t_in - t_out).abs(),
            tol,
        });
    }
    Ok(0.5 * (t_in + t_out))
}

/// Infinite-horizon squared H2 norm of a stable, strictly proper model via
/// both Gramian traces, which must agree to [`H2_TRACE_AGREE_TOL`]; their
/// mean is returned.
pub fn h2_gramian(model: &StateSpaceModel) -> Result<NormResult> {
    let start = Instant::now();
    if !model.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    let a = model.a();
    let (lam, _) = a.eig()?;
    require_stable(lam.as_slice().expect("contiguous eigenvalue array"))?;

    let bbt = model.b().dot(&model.b().t());
    let ctc = model.c().t().dot(model.c());
    let (p, _) = lyap_solve_with_residual(a, &bbt)?;
    let (q, _) = lyap_solve_with_residual(&a.t().to_owned(), &ctc)?;

    let value_sq = combine_traces(input_trace(model, &q), output_trace(model, &p), H2_TRACE_AGREE_TOL)?;
    NormResult::from_real(value_sq, 0.0, Backend::Gramian, start.elapsed(), false)
}

/// Squared band norm of a stable, strictly proper model over
/// `[-omega, omega]` via frequency-limited Gramians; the two trace forms
/// must agree to [`H2W_TRACE_AGREE_TOL`] and their mean is returned.
pub fn h2w_gramian(model: &StateSpaceModel, omega: f64) -> Result<NormResult> {
    let start = Instant::now();
    if !model.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    let (pair, imag) = freq_limited_with_diagnostics(model, omega)?;
    let value_sq = combine_traces(
        input_trace(model, &pair.q),
        output_trace(model, &pair.p),
        H2W_TRACE_AGREE_TOL,
    )?;
    NormResult::from_real(value_sq, imag, Backend::Gramian, start.elapsed(), false)
}
