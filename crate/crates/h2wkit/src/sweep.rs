//! Band-edge sweeps: the band norm evaluated over a grid of upper edges.
//!
//! The squared band norm is nondecreasing in the band edge (the integrand
//! is nonnegative), so a sweep doubles as a consistency check: any decrease
//! beyond the backend's numerical slack is reported as an error.

use crate::error::{Error, Result};
use crate::gramian::h2w_gramian;
use crate::model::{spectral_decompose, FrequencyBand, StateSpaceModel};
use crate::quadrature::h2w_quadrature;
use crate::spectral::{h2w_spectral, Backend};
use rayon::prelude::*;

/// Monotonicity slack for the closed-form backends, relative to
/// `max(1, previous value)`.
const EXACT_BACKEND_SLACK: f64 = 1e-12;

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub omega: f64,
    pub value_sq: f64,
    pub value: f64,
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    for &w in grid {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grid points must be finite and nonnegative, got {w}"
            )));
        }
    }
    for pair in grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidArgument(format!(
                "grid must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

/// Evaluates the band norm at every grid edge with the chosen backend.
///
/// `quad_tol` applies only to [`Backend::Quadrature`]. With `parallel` the
/// grid points are evaluated on the rayon thread pool; results are
/// identical to the serial path, in grid order. The monotonicity check
/// runs on the finished table with a backend-appropriate slack
/// (quadrature values carry their integration tolerance).
pub fn sweep(
    model: &StateSpaceModel,
    grid: &[f64],
    backend: Backend,
    quad_tol: f64,
    parallel: bool,
) -> Result<Vec<SweepRow>> {
    validate_grid(grid)?;

    let eval: Box<dyn Fn(f64) -> Result<SweepRow> + Sync> = match backend {
        Backend::Spectral => {
            let spec = spectral_decompose(model)?;
            Box::new(move |omega: f64| {
                let r = h2w_spectral(&spec, model.d(), omega)?;
                Ok(SweepRow {
                    omega,
                    value_sq: r.value_sq,
                    value: r.value,
                })
            })
        }
        Backend::Gramian => Box::new(move |omega: f64| {
            let r = h2w_gramian(model, omega)?;
            Ok(SweepRow {
                omega,
                value_sq: r.value_sq,
                value: r.value,
            })
        }),
        Backend::Quadrature => Box::new(move |omega: f64| {
            if omega == 0.0 {
                return Ok(SweepRow {
                    omega,
                    value_sq: 0.0,
                    value: 0.0,
                });
            }
            let band = FrequencyBand::upto(omega)?;
            let r = h2w_quadrature(model, &band, quad_tol)?;
            Ok(SweepRow {
                omega,
                value_sq: r.value_sq,
                value: r.value,
            })
        }),
    };

    let rows: Vec<SweepRow> = if parallel {
        grid.par_iter()
            .map(|&w| eval(w))
            .collect::<Result<Vec<_>>>()?
    } else {
        grid.iter().map(|&w| eval(w)).collect::<Result<Vec<_>>>()?
    };

    let slack_rel = match backend {
        Backend::Quadrature => 4.0 * quad_tol,
        _ => EXACT_BACKEND_SLACK,
    };
    for pair in rows.windows(2) {
        let slack = slack_rel * pair[0].value_sq.max(1.0);
        if pair[1].value_sq < pair[0].value_sq - slack {
            return Err(Error::ToleranceExceeded {
                what: format!(
                    "sweep monotonicity between omega = {} and {}",
                    pair[0].omega, pair[1].omega
                ),
                got: pair[0].value_sq - pair[1].value_sq,
                tol: slack,
            });
        }
    }
    Ok(rows)
}
