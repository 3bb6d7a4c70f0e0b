//! Wall-clock comparison of the spectral and Gramian backends on seeded
//! random models of growing order.

use crate::error::{Error, Result};
use crate::gramian::h2w_gramian;
use crate::io::{random_model, SpectrumSpec};
use crate::model::spectral_decompose;
use crate::spectral::{h2w_spectral, Backend};
use std::time::Instant;

/// Measurements discarded as warmup when enough repetitions are available.
const WARMUP_REPS: usize = 3;

/// Timing summary for one backend at one model order.
#[derive(Debug, Clone, Copy)]
pub struct BenchRow {
    pub n: usize,
    pub backend: Backend,
    /// Mean wall-clock seconds per evaluation after warmup.
    pub mean_s: f64,
    /// Sample standard deviation of the timed repetitions (0 for a single
    /// measurement).
    pub std_s: f64,
}

fn time_reps(reps: usize, mut eval: impl FnMut() -> Result<f64>) -> Result<Vec<f64>> {
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let value = eval()?;
        std::hint::black_box(value);
        times.push(start.elapsed().as_secs_f64());
    }
    let skip = if times.len() > WARMUP_REPS { WARMUP_REPS } else { 0 };
    Ok(times[skip..].to_vec())
}

fn summarize(n: usize, backend: Backend, times: &[f64]) -> BenchRow {
    let count = times.len() as f64;
    let mean = times.iter().sum::<f64>() / count;
    let std = if times.len() >= 2 {
        (times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (count - 1.0)).sqrt()
    } else {
        0.0
    };
    BenchRow {
        n,
        backend,
        mean_s: mean,
        std_s: std,
    }
}

/// Times both band-norm backends end to end (decomposition or Lyapunov
/// solves included) on one stable SISO model per order in `sizes`. Each
/// evaluation is repeated `reps` times; when `reps` exceeds the warmup
/// count, the first [`WARMUP_REPS`] measurements are discarded.
pub fn bench(sizes: &[usize], reps: usize, omega: f64, seed: u64) -> Result<Vec<BenchRow>> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidArgument(
            "bench sizes must be a nonempty list of positive orders".into(),
        ));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    if !omega.is_finite() || omega < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "omega must be finite and nonnegative, got {omega}"
        )));
    }
    let mut rows = Vec::with_capacity(2 * sizes.len());
    for &n in sizes {
        let model_seed = seed ^ (n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let model = random_model(n, 1, 1, SpectrumSpec::Stable, model_seed)?;

        let spectral_times = time_reps(reps, || {
            let spec = spectral_decompose(&model)?;
            h2w_spectral(&spec, model.d(), omega).map(|r| r.value_sq)
        })?;
        rows.push(summarize(n, Backend::Spectral, &spectral_times));

        let gramian_times = time_reps(reps, || h2w_gramian(&model, omega).map(|r| r.value_sq))?;
        rows.push(summarize(n, Backend::Gramian, &gramian_times));
    }
    Ok(rows)
}
