//! Command-line frontend for the band-limited H2 norm toolkit.
//!
//! Exit codes: 0 success, 2 parse/IO/precondition errors, 3 band
//! violations, 4 degenerate spectra, 5 backend disagreement (`compare`),
//! 6 solver failures.

use clap::{Parser, Subcommand, ValueEnum};
use h2wkit::bench::bench;
use h2wkit::gramian::{h2_gramian, h2w_gramian};
use h2wkit::io::{load_model_path, random_model, random_model_with_feedthrough, save_model, SpectrumSpec};
use h2wkit::model::spectral_decompose;
use h2wkit::quadrature::h2w_quadrature;
use h2wkit::spectral::{
    h2_spectral, h2w_band, h2w_limit, h2w_spectral, LimitRegime, NormResult,
};
use h2wkit::sweep::{sweep, SweepRow};
use h2wkit::{classify_poles, Backend, Error, FrequencyBand, StateSpaceModel};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "h2wkit",
    version,
    about = "H2 and band-limited H2 norms of LTI state-space models",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Spectral,
    Gramian,
    Quadrature,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Backend {
        match b {
            BackendArg::Spectral => Backend::Spectral,
            BackendArg::Gramian => Backend::Gramian,
            BackendArg::Quadrature => Backend::Quadrature,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute one norm value: H2 (--omega inf) or the band norm.
    Norm(NormArgs),
    /// Run every applicable backend at one band edge and report the
    /// maximum pairwise relative deviation.
    Compare(CompareArgs),
    /// Evaluate the band norm over a grid of edges and emit CSV.
    Sweep(SweepArgs),
    /// Time the spectral and Gramian backends on random models and emit
    /// CSV.
    Bench(BenchArgs),
    /// Generate a seeded random model file.
    Gen(GenArgs),
}

#[derive(Parser)]
struct NormArgs {
    /// Model file.
    model: PathBuf,
    /// Band edge: the norm over [-omega, omega]. `inf` requests the
    /// wide-band limit (the H2 norm when the model is stable).
    #[arg(long, conflicts_with = "band")]
    omega: Option<f64>,
    /// Two-sided band `lo:hi`: the norm over [lo, hi] (in |frequency|).
    #[arg(long)]
    band: Option<String>,
    #[arg(long, value_enum, default_value_t = BackendArg::Spectral)]
    backend: BackendArg,
    /// Integration tolerance (quadrature backend only).
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Parser)]
struct CompareArgs {
    /// Model file.
    model: PathBuf,
    /// Band edge shared by all backends (finite).
    #[arg(long)]
    omega: f64,
    /// Maximum allowed pairwise relative deviation.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Integration tolerance for the quadrature backend.
    #[arg(long, default_value_t = 1e-9)]
    quad_tol: f64,
}

#[derive(Parser)]
struct SweepArgs {
    /// Model file.
    model: PathBuf,
    /// Linear grid of band edges, `lo:step:hi` (inclusive).
    #[arg(long, conflicts_with = "log_grid")]
    grid: Option<String>,
    /// Geometric grid of band edges, `lo:hi:count`.
    #[arg(long)]
    log_grid: Option<String>,
    #[arg(long, value_enum, default_value_t = BackendArg::Spectral)]
    backend: BackendArg,
    /// Integration tolerance (quadrature backend only).
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Evaluate grid points on a thread pool (same results as serial).
    #[arg(long)]
    parallel: bool,
    /// CSV destination (`-` for stdout).
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Parser)]
struct BenchArgs {
    /// Model orders: `a,b,c`, `lo:hi`, or `lo:hi:step`.
    #[arg(long, default_value = "2:200")]
    sizes: String,
    /// Evaluations per backend and order (first 3 discarded as warmup when
    /// more are available).
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// Band edge used for every timing.
    #[arg(long, default_value_t = 100.0)]
    omega: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination (`-` for stdout).
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Parser)]
struct GenArgs {
    /// State dimension.
    #[arg(long)]
    n: usize,
    /// Input count.
    #[arg(long, default_value_t = 1)]
    nu: usize,
    /// Output count.
    #[arg(long, default_value_t = 1)]
    ny: usize,
    /// Pole placement: `stable`, `antistable`, `mixed:<fraction>`, or
    /// `light:<zeta-max>`.
    #[arg(long, default_value = "stable")]
    spectrum: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add a standard-normal feedthrough matrix.
    #[arg(long)]
    feedthrough: bool,
    /// Model name recorded in the file.
    #[arg(long)]
    name: Option<String>,
    /// Destination (`-` for stdout).
    #[arg(long, default_value = "-")]
    output: String,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::BandViolation { .. } => 3,
        Error::DegenerateSpectrum(_) => 4,
        Error::BackendDisagreement { .. } => 5,
        Error::SingularShift { .. }
        | Error::LyapunovSingular(_)
        | Error::Backend(_)
        | Error::ToleranceExceeded { .. }
        | Error::NonConvergence { .. } => 6,
        _ => 2,
    }
}

fn open_output(spec: &str) -> Result<Box<dyn Write>, Error> {
    if spec == "-" {
        Ok(Box::new(std::io::stdout().lock()))
    } else {
        Ok(Box::new(BufWriter::new(File::create(spec)?)))
    }
}

fn parse_band(text: &str) -> Result<FrequencyBand, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidArgument(format!(
            "band must be lo:hi, got '{text}'"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid band edge '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid band edge '{}'", parts[1])))?;
    FrequencyBand::new(lo, hi)
}

fn parse_linear_grid(text: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "grid must be lo:step:hi, got '{text}'"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("invalid grid number '{p}'")))
        })
        .collect::<Result<_, _>>()?;
    let (lo, step, hi) = (nums[0], nums[1], nums[2]);
    if !(lo.is_finite() && step.is_finite() && hi.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::InvalidArgument(format!(
            "grid requires finite lo <= hi and step > 0, got '{text}'"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + step * i as f64).collect())
}

fn parse_log_grid(text: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "log grid must be lo:hi:count, got '{text}'"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid grid number '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid grid number '{}'", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("invalid grid count '{}'", parts[2])))?;
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi <= lo || count < 2 {
        return Err(Error::InvalidArgument(format!(
            "log grid requires 0 < lo < hi and count >= 2, got '{text}'"
        )));
    }
    let ratio = hi / lo;
    Ok((0..count)
        .map(|i| lo * ratio.powf(i as f64 / (count - 1) as f64))
        .collect())
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, Error> {
    let bad = |t: &str| Error::InvalidArgument(format!("invalid size list '{t}'"));
    if text.contains(',') {
        return text
            .split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad(text)))
            .collect();
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => Ok(vec![parts[0].parse().map_err(|_| bad(text))?]),
        2 | 3 => {
            let lo: usize = parts[0].parse().map_err(|_| bad(text))?;
            let hi: usize = parts[1].parse().map_err(|_| bad(text))?;
            let step: usize = if parts.len() == 3 {
                parts[2].parse().map_err(|_| bad(text))?
            } else {
                1
            };
            if step == 0 || hi < lo {
                return Err(bad(text));
            }
            Ok((lo..=hi).step_by(step).collect())
        }
        _ => Err(bad(text)),
    }
}

fn parse_spectrum(text: &str) -> Result<SpectrumSpec, Error> {
    let (kind, param) = match text.split_once(':') {
        Some((k, p)) => (k, Some(p)),
        None => (text, None),
    };
    match (kind, param) {
        ("stable", None) => Ok(SpectrumSpec::Stable),
        ("antistable", None) => Ok(SpectrumSpec::Antistable),
        ("mixed", Some(p)) => {
            let unstable_fraction: f64 = p.parse().map_err(|_| {
                Error::InvalidArgument(format!("invalid mixed fraction '{p}'"))
            })?;
            Ok(SpectrumSpec::Mixed { unstable_fraction })
        }
        ("light", Some(p)) => {
            let zeta_max: f64 = p.parse().map_err(|_| {
                Error::InvalidArgument(format!("invalid damping bound '{p}'"))
            })?;
            Ok(SpectrumSpec::LightlyDamped { zeta_max })
        }
        _ => Err(Error::InvalidArgument(format!(
            "spectrum must be stable, antistable, mixed:<fraction> or light:<zeta-max>, got '{text}'"
        ))),
    }
}

fn print_norm(out: &mut dyn Write, r: &NormResult, notes: &[String]) -> Result<(), Error> {
    writeln!(out, "backend: {}", r.backend)?;
    writeln!(out, "value_sq: {:.16e}", r.value_sq)?;
    writeln!(out, "value: {:.16e}", r.value)?;
    writeln!(out, "imag_residual: {:.16e}", r.imag_residual)?;
    writeln!(out, "elapsed_s: {:.6e}", r.elapsed.as_secs_f64())?;
    for note in notes {
        writeln!(out, "note: {note}")?;
    }
    Ok(())
}

/// The exact-zero result for a zero-width band, used where a backend has
/// no natural omega = 0 path.
fn zero_norm(backend: Backend) -> NormResult {
    NormResult {
        value_sq: 0.0,
        value: 0.0,
        imag_residual: 0.0,
        backend,
        elapsed: std::time::Duration::ZERO,
        no_h2_interpretation: false,
    }
}

fn norm_infinite_spectral(model: &StateSpaceModel, out: &mut dyn Write) -> Result<(), Error> {
    let start = Instant::now();
    let spec = spectral_decompose(model)?;
    let cls = classify_poles(
        spec.eigenvalues(),
        h2wkit::model::default_imag_tol(spec.eigenvalues()),
    );
    if !cls.imaginary.is_empty() {
        return Err(Error::BandViolation {
            omega: f64::INFINITY,
            poles: cls.imaginary.iter().map(|&i| spec.eigenvalues()[i]).collect(),
        });
    }
    if cls.is_all_stable() {
        let r = h2_spectral(&spec, model)?;
        return print_norm(out, &r, &[]);
    }
    // Finite wide-band limit of an unstable model (Gramian-free, needs
    // zero feedthrough like the H2 case).
    if !model.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    let lim = h2w_limit(&spec, &cls);
    debug_assert_eq!(lim.regime, LimitRegime::UnstableFinite);
    let r = NormResult {
        value_sq: lim.value_sq.expect("finite regime carries a value"),
        value: lim.value.expect("finite regime carries a value"),
        imag_residual: lim.imag_residual,
        backend: Backend::Spectral,
        elapsed: start.elapsed(),
        no_h2_interpretation: true,
    };
    print_norm(
        out,
        &r,
        &["wide-band limit of an unstable model; not an H2 norm".into()],
    )
}

fn cmd_norm(args: &NormArgs) -> Result<(), Error> {
    let model = load_model_path(&args.model)?.model;
    let backend: Backend = args.backend.into();
    let mut out: Box<dyn Write> = Box::new(std::io::stdout().lock());

    if let Some(text) = &args.band {
        let band = parse_band(text)?;
        let r = match backend {
            Backend::Spectral => {
                let spec = spectral_decompose(&model)?;
                h2w_band(&spec, model.d(), &band)?
            }
            Backend::Quadrature => h2w_quadrature(&model, &band, args.tol)?,
            Backend::Gramian => {
                let hi = h2w_gramian(&model, band.omega_hi())?;
                let lo = h2w_gramian(&model, band.omega_lo())?;
                let value_sq = (hi.value_sq - lo.value_sq).max(0.0);
                NormResult {
                    value_sq,
                    value: value_sq.sqrt(),
                    imag_residual: hi.imag_residual.max(lo.imag_residual),
                    backend: Backend::Gramian,
                    elapsed: hi.elapsed + lo.elapsed,
                    no_h2_interpretation: false,
                }
            }
        };
        let notes = if r.no_h2_interpretation {
            vec!["model has non-stable poles; the band value is not an H2 quantity".to_string()]
        } else {
            vec![]
        };
        return print_norm(out.as_mut(), &r, &notes);
    }

    let omega = args.omega.ok_or_else(|| {
        Error::InvalidArgument("norm requires --omega or --band".into())
    })?;
    if omega.is_nan() || omega < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "omega must be nonnegative, got {omega}"
        )));
    }

    if omega.is_infinite() {
        return match backend {
            Backend::Spectral => norm_infinite_spectral(&model, out.as_mut()),
            Backend::Gramian => {
                let r = h2_gramian(&model)?;
                print_norm(out.as_mut(), &r, &[])
            }
            Backend::Quadrature => Err(Error::InvalidArgument(
                "the quadrature backend cannot integrate an unbounded band; pass a finite omega"
                    .into(),
            )),
        };
    }

    let r = match backend {
        Backend::Spectral => {
            let spec = spectral_decompose(&model)?;
            h2w_spectral(&spec, model.d(), omega)?
        }
        Backend::Gramian => h2w_gramian(&model, omega)?,
        Backend::Quadrature => {
            if omega == 0.0 {
                zero_norm(Backend::Quadrature)
            } else {
                h2w_quadrature(&model, &FrequencyBand::upto(omega)?, args.tol)?
            }
        }
    };
    let notes = if r.no_h2_interpretation {
        vec!["model has non-stable poles; the band value is not an H2 quantity".to_string()]
    } else {
        vec![]
    };
    print_norm(out.as_mut(), &r, &notes)
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Error> {
    if !args.omega.is_finite() || args.omega < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "compare requires a finite nonnegative omega, got {}",
            args.omega
        )));
    }
    let model = load_model_path(&args.model)?.model;
    let spec = spectral_decompose(&model)?;
    let cls = classify_poles(
        spec.eigenvalues(),
        h2wkit::model::default_imag_tol(spec.eigenvalues()),
    );

    let mut rows: Vec<NormResult> = Vec::new();
    rows.push(h2w_spectral(&spec, model.d(), args.omega)?);
    let mut notes: Vec<String> = Vec::new();
    if cls.is_all_stable() && model.is_strictly_proper() {
        rows.push(h2w_gramian(&model, args.omega)?);
    } else {
        notes.push(
            "gramian backend skipped: it requires a stable, strictly proper model".to_string(),
        );
    }
    rows.push(if args.omega == 0.0 {
        zero_norm(Backend::Quadrature)
    } else {
        h2w_quadrature(&model, &FrequencyBand::upto(args.omega)?, args.quad_tol)?
    });

    let mut out = std::io::stdout().lock();
    writeln!(out, "{:<12} {:<26} {:<26} elapsed_s", "backend", "value_sq", "value")?;
    for r in &rows {
        writeln!(
            out,
            "{:<12} {:<26.16e} {:<26.16e} {:.6e}",
            r.backend.to_string(),
            r.value_sq,
            r.value,
            r.elapsed.as_secs_f64()
        )?;
    }
    for note in &notes {
        writeln!(out, "note: {note}")?;
    }

    let mut deviation = 0.0_f64;
    for i in 0..rows.len() {
        for k in (i + 1)..rows.len() {
            let (a, b) = (rows[i].value_sq, rows[k].value_sq);
            deviation = deviation.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        }
    }
    writeln!(
        out,
        "max_relative_deviation: {:.16e} (threshold {:.3e})",
        deviation, args.tol
    )?;
    if deviation > args.tol {
        return Err(Error::BackendDisagreement {
            deviation,
            tol: args.tol,
        });
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Error> {
    let grid = match (&args.grid, &args.log_grid) {
        (Some(g), None) => parse_linear_grid(g)?,
        (None, Some(g)) => parse_log_grid(g)?,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "sweep requires --grid or --log-grid".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects conflicting grid flags"),
    };
    let model = load_model_path(&args.model)?.model;
    let rows: Vec<SweepRow> = sweep(&model, &grid, args.backend.into(), args.tol, args.parallel)?;
    let mut out = open_output(&args.output)?;
    writeln!(out, "omega,value_sq,value")?;
    for row in &rows {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", row.omega, row.value_sq, row.value)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Error> {
    // Pin the BLAS pool before the first numeric call so timings compare a
    // single thread per backend.
    std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    std::env::set_var("OMP_NUM_THREADS", "1");
    let sizes = parse_sizes(&args.sizes)?;
    let rows = bench(&sizes, args.reps, args.omega, args.seed)?;
    let mut out = open_output(&args.output)?;
    writeln!(out, "n,backend,mean_s,std_s")?;
    for row in &rows {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e}",
            row.n, row.backend, row.mean_s, row.std_s
        )?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), Error> {
    let spectrum = parse_spectrum(&args.spectrum)?;
    let model = if args.feedthrough {
        random_model_with_feedthrough(args.n, args.nu, args.ny, spectrum, args.seed)?
    } else {
        random_model(args.n, args.nu, args.ny, spectrum, args.seed)?
    };
    let name = args.name.clone().unwrap_or_else(|| {
        format!("random-{}-n{}-seed{}", args.spectrum.replace(':', "-"), args.n, args.seed)
    });
    let out = open_output(&args.output)?;
    save_model(&model, &name, out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Norm(args) => cmd_norm(args),
        Cmd::Compare(args) => cmd_compare(args),
        Cmd::Sweep(args) => cmd_sweep(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::Gen(args) => cmd_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
