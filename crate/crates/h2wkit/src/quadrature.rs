//! Quadrature norm backend: adaptive Gauss-Kronrod integration of the
//! frequency response.
//!
//! The squared band norm over `[omega_lo, omega_hi]` equals
//! `(1/pi) integral ||H(j nu)||_F^2 d nu` over the band (the response is
//! even in `nu`, so only the positive half is integrated). This backend
//! makes no structural assumptions beyond poles staying off the band
//! itself: it serves as the independent oracle against the spectral and
//! Gramian routes.
//!
//! The kernel is the classical 15-point Gauss-Kronrod rule with the
//! standard QUADPACK error rescaling; panels are kept in a max-heap by
//! error estimate and the worst panel is bisected until the total error
//! passes a value-relative tolerance. Known resonance locations (lightly
//! damped pole pairs) become panel boundaries up front so the first pass
//! already isolates each peak.

use crate::error::{Error, Result};
use crate::model::{
    classify_poles, default_imag_tol, eval_transfer, FrequencyBand, StateSpaceModel,
};
use crate::spectral::{Backend, NormResult};
use ndarray_linalg::EigVals;
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::time::Instant;

/// Default value-relative tolerance: the oracle should sit comfortably
/// below the cross-backend comparison tolerances.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Damping ratio `|Re lambda| / |lambda|` below which a complex pole pair
/// counts as a resonance and its frequency is made a panel boundary.
pub const LIGHT_DAMPING_RATIO: f64 = 0.1;

/// Hard cap on simultaneously held panels; exceeding it means the
/// integrand is effectively singular on the band.
const MAX_PANELS: usize = 20_000;

/// A panel narrower than this fraction of the band cannot be split
/// meaningfully in f64 and signals stalled refinement.
const MIN_PANEL_FRACTION: f64 = 1e-13;

// 15-point Gauss-Kronrod rule on [-1, 1]: positive abscissae (descending;
// odd indices are the embedded 7-point Gauss nodes, the last entry is the
// center), Kronrod weights for them, and Gauss weights for the embedded
// rule. The canonical QUADPACK tables carry more digits than f64 keeps;
// they are reproduced verbatim rather than pre-rounded.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// QUADPACK error rescaling: inflate the raw Gauss-Kronrod difference
/// toward the scale of the integrand's variation and floor it at roundoff
/// level.
fn rescale_error(err: f64, result_abs: f64, result_asc: f64) -> f64 {
    let mut err = err.abs();
    if result_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / result_asc).powf(1.5);
        err = if scale < 1.0 { result_asc * scale } else { result_asc };
    }
    if result_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * result_abs;
        if min_err > err {
            err = min_err;
        }
    }
    err
}

/// One 15-point Gauss-Kronrod evaluation of `f` over `[a, b]`, returning
/// the Kronrod estimate and its rescaled error.
#[allow(clippy::needless_range_loop)] // keeps the classical jtw/jtwm1 node indexing
fn qk15(f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0_f64; 7];
    let mut fv2 = [0.0_f64; 7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let absc = half * XGK[jtw];
        let f1 = f(center - absc)?;
        let f2 = f(center + absc)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        let fsum = f1 + f2;
        resg += WG[j] * fsum;
        resk += WGK[jtw] * fsum;
        resabs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let absc = half * XGK[jtwm1];
        let f1 = f(center - absc)?;
        let f2 = f(center + absc)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        let fsum = f1 + f2;
        resk += WGK[jtwm1] * fsum;
        resabs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }

    let result = resk * half;
    resabs *= half.abs();
    resasc *= half.abs();
    let err = rescale_error((resk - resg) * half, resabs, resasc);
    Ok((result, err))
}

/// `||H(j nu)||_F^2`, the integrand of the squared band norm up to the
/// `1/pi` prefactor.
pub fn integrand(model: &StateSpaceModel, nu: f64) -> Result<f64> {
    if !nu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "frequency must be finite, got {nu}"
        )));
    }
    let h = eval_transfer(model, Complex64::new(0.0, nu))?;
    Ok(h.iter().map(|z| z.norm_sqr()).sum())
}

/// Diagnostics of an adaptive integration run.
#[derive(Debug, Clone)]
pub struct QuadratureReport {
    /// Converged squared band norm.
    pub value_sq: f64,
    /// Total error estimate on `value_sq` (same `1/pi` scale).
    pub error_estimate: f64,
    /// Number of integrand evaluations.
    pub evaluations: usize,
    /// Number of panels at convergence.
    pub panels: usize,
}

#[derive(Debug)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Squared band norm by adaptive quadrature, with the run's diagnostics.
///
/// `tol` is relative to `max(1, value_sq)`. Fails with
/// [`Error::BandViolation`] if an imaginary-axis pole magnitude lies inside
/// the closed band, and with [`Error::NonConvergence`] if refinement stalls
/// or exhausts the panel budget.
pub fn h2w_quadrature_report(
    model: &StateSpaceModel,
    band: &FrequencyBand,
    tol: f64,
) -> Result<(NormResult, QuadratureReport)> {
    let start = Instant::now();
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be finite and positive, got {tol}"
        )));
    }
    let eigs_arr = model.a().eigvals()?;
    let eigs = eigs_arr.as_slice().expect("contiguous eigenvalue array");
    let cls = classify_poles(eigs, default_imag_tol(eigs));
    let (lo, hi) = (band.omega_lo(), band.omega_hi());
    let on_band: Vec<Complex64> = cls
        .imaginary
        .iter()
        .map(|&i| eigs[i])
        .filter(|l| lo <= l.norm() && l.norm() <= hi)
        .collect();
    if !on_band.is_empty() {
        return Err(Error::BandViolation {
            omega: hi,
            poles: on_band,
        });
    }
    let no_h2 = !cls.is_all_stable();

    // Panel boundaries at known resonance frequencies.
    let span = hi - lo;
    let mut cuts: Vec<f64> = eigs
        .iter()
        .filter(|l| l.norm() > 0.0 && l.re.abs() / l.norm() < LIGHT_DAMPING_RATIO)
        .map(|l| l.im.abs())
        .filter(|&w| w > lo + 1e-12 * span && w < hi - 1e-12 * span)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * span);

    let mut evaluations = 0usize;
    let mut f = |nu: f64| -> Result<f64> {
        evaluations += 1;
        let h = eval_transfer(model, Complex64::new(0.0, nu))?;
        Ok(h.iter().map(|z| z.norm_sqr()).sum())
    };

    let mut heap = BinaryHeap::new();
    let mut sum = 0.0_f64;
    let mut err = 0.0_f64;
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);
    for pair in edges.windows(2) {
        let (value, error) = qk15(&mut f, pair[0], pair[1])?;
        sum += value;
        err += error;
        heap.push(Panel {
            lo: pair[0],
            hi: pair[1],
            value,
            error,
        });
    }

    let mut splits_since_resync = 0usize;
    loop {
        if err <= tol * sum.abs().max(PI) {
            break;
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::NonConvergence {
                estimate: sum / PI,
                target: tol * (sum / PI).abs().max(1.0),
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("band always holds at least one panel");
        if worst.hi - worst.lo <= MIN_PANEL_FRACTION * span {
            return Err(Error::NonConvergence {
                estimate: sum / PI,
                target: tol * (sum / PI).abs().max(1.0),
                panels: heap.len() + 1,
            });
        }
        sum -= worst.value;
        err -= worst.error;
        let mid = 0.5 * (worst.lo + worst.hi);
        for (a, b) in [(worst.lo, mid), (mid, worst.hi)] {
            let (value, error) = qk15(&mut f, a, b)?;
            sum += value;
            err += error;
            heap.push(Panel {
                lo: a,
                hi: b,
                value,
                error,
            });
        }
        // The running totals drift after many incremental updates; resync
        // them from the heap periodically.
        splits_since_resync += 1;
        if splits_since_resync == 512 {
            splits_since_resync = 0;
            sum = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }

    let report = QuadratureReport {
        value_sq: sum / PI,
        error_estimate: err / PI,
        evaluations,
        panels: heap.len(),
    };
    let result = NormResult::from_real(sum / PI, 0.0, Backend::Quadrature, start.elapsed(), no_h2)?;
    Ok((result, report))
}

/// Squared band norm by adaptive quadrature. See
/// [`h2w_quadrature_report`] for the failure modes.
pub fn h2w_quadrature(
    model: &StateSpaceModel,
    band: &FrequencyBand,
    tol: f64,
) -> Result<NormResult> {
    h2w_quadrature_report(model, band, tol).map(|(r, _)| r)
}
