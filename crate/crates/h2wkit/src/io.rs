//! Text model format and seeded random model generation.
//!
//! The on-disk format is line-oriented UTF-8:
//!
//! ```text
//! h2wkit-model v1
//! # anything after a hash is a comment
//! name my-model
//! dims 2 1 1
//! matrix A
//! -1 0
//! 0 -2
//! matrix B
//! 1
//! 1
//! matrix C
//! 1 1
//! matrix D
//! 0
//! ```
//!
//! `dims n nu ny` must precede the matrix blocks; each of `A`, `B`, `C`,
//! `D` appears exactly once, with one row per line and entries separated by
//! whitespace. The writer prints entries with 17 significant digits, so a
//! save/load round trip reproduces every `f64` bit for bit.

use crate::error::{Error, Result};
use crate::model::StateSpaceModel;
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// First line of every model file.
pub const FORMAT_HEADER: &str = "h2wkit-model v1";

/// Smallest pairwise eigenvalue distance the random generator accepts, so
/// generated spectra stay safely simple for the spectral decomposition.
pub const MIN_EIGENVALUE_GAP: f64 = 1e-3;

/// A parsed model file: the model plus its optional name.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub name: String,
    pub model: StateSpaceModel,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a model from any source in the text format.
pub fn load_model<R: Read>(source: R) -> Result<ModelFile> {
    let reader = BufReader::new(source);
    let mut name = String::new();
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut mats: [Option<Array2<f64>>; 4] = [None, None, None, None];
    let mut header_seen = false;
    // (matrix index, rows collected, rows expected, cols expected)
    let mut block: Option<(usize, Vec<Vec<f64>>, usize, usize)> = None;

    for (idx, raw) in reader.lines().enumerate() {
        let ln = idx + 1;
        let raw = raw?;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if !header_seen {
            if line != FORMAT_HEADER {
                return Err(parse_err(
                    ln,
                    format!("expected header '{FORMAT_HEADER}', found '{line}'"),
                ));
            }
            header_seen = true;
            continue;
        }

        // Inside a matrix block, every line is a row until the block fills.
        if let Some((mat, rows, want_rows, want_cols)) = block.as_mut() {
            let mut row = Vec::with_capacity(*want_cols);
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| {
                    parse_err(ln, format!("'{tok}' is not a valid number"))
                })?;
                row.push(v);
            }
            if row.len() != *want_cols {
                return Err(parse_err(
                    ln,
                    format!("expected {} entries in this row, found {}", want_cols, row.len()),
                ));
            }
            rows.push(row);
            if rows.len() == *want_rows {
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                let arr = Array2::from_shape_vec((*want_rows, *want_cols), flat)
                    .expect("row-collected shape is consistent");
                mats[*mat] = Some(arr);
                block = None;
            }
            continue;
        }

        let mut toks = line.split_whitespace();
        let keyword = toks.next().expect("non-empty line has a first token");
        match keyword {
            "name" => {
                name = line["name".len()..].trim().to_string();
                if name.is_empty() {
                    return Err(parse_err(ln, "'name' requires a value"));
                }
            }
            "dims" => {
                if dims.is_some() {
                    return Err(parse_err(ln, "duplicate 'dims' line"));
                }
                let vals: Vec<usize> = toks
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| parse_err(ln, format!("'{t}' is not a valid dimension")))
                    })
                    .collect::<Result<_>>()?;
                if vals.len() != 3 {
                    return Err(parse_err(ln, "'dims' requires exactly n nu ny"));
                }
                if vals.contains(&0) {
                    return Err(parse_err(ln, "dimensions must be positive"));
                }
                dims = Some((vals[0], vals[1], vals[2]));
            }
            "matrix" => {
                let (n, nu, ny) = dims.ok_or_else(|| {
                    parse_err(ln, "'matrix' requires a preceding 'dims' line")
                })?;
                let which = toks.next().ok_or_else(|| {
                    parse_err(ln, "'matrix' requires a name (A, B, C or D)")
                })?;
                if toks.next().is_some() {
                    return Err(parse_err(ln, "unexpected content after the matrix name"));
                }
                let (mat, want_rows, want_cols) = match which {
                    "A" => (0, n, n),
                    "B" => (1, n, nu),
                    "C" => (2, ny, n),
                    "D" => (3, ny, nu),
                    other => {
                        return Err(parse_err(
                            ln,
                            format!("unknown matrix '{other}', expected A, B, C or D"),
                        ))
                    }
                };
                if mats[mat].is_some() {
                    return Err(parse_err(ln, format!("duplicate 'matrix {which}' block")));
                }
                block = Some((mat, Vec::with_capacity(want_rows), want_rows, want_cols));
            }
            other => {
                return Err(parse_err(
                    ln,
                    format!("unknown keyword '{other}', expected name, dims or matrix"),
                ));
            }
        }
    }

    if !header_seen {
        return Err(parse_err(1, format!("missing header '{FORMAT_HEADER}'")));
    }
    if let Some((mat, rows, want_rows, _)) = &block {
        let label = ["A", "B", "C", "D"][*mat];
        return Err(parse_err(
            0,
            format!(
                "matrix {label} ended after {} of {} rows",
                rows.len(),
                want_rows
            ),
        ));
    }
    let labels = ["A", "B", "C", "D"];
    for (i, m) in mats.iter().enumerate() {
        if m.is_none() {
            return Err(parse_err(0, format!("missing 'matrix {}' block", labels[i])));
        }
    }
    let [a, b, c, d] = mats;
    let model = StateSpaceModel::new(
        a.expect("checked above"),
        b.expect("checked above"),
        c.expect("checked above"),
        d.expect("checked above"),
    )?;
    Ok(ModelFile {
        name,
        model,
    })
}

/// Reads a model from a file path.
pub fn load_model_path<P: AsRef<Path>>(path: P) -> Result<ModelFile> {
    load_model(File::open(path)?)
}

fn write_matrix<W: Write>(out: &mut W, label: &str, m: &Array2<f64>) -> std::io::Result<()> {
    writeln!(out, "matrix {label}")?;
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                write!(out, " ")?;
            }
            write!(out, "{v:.16e}")?;
            first = false;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes a model in the text format. Entries carry 17 significant digits,
/// enough to reproduce each `f64` exactly on reload.
pub fn save_model<W: Write>(model: &StateSpaceModel, name: &str, sink: W) -> Result<()> {
    let mut out = BufWriter::new(sink);
    writeln!(out, "{FORMAT_HEADER}")?;
    if !name.is_empty() {
        writeln!(out, "name {name}")?;
    }
    writeln!(out, "dims {} {} {}", model.n(), model.nu(), model.ny())?;
    write_matrix(&mut out, "A", model.a())?;
    write_matrix(&mut out, "B", model.b())?;
    write_matrix(&mut out, "C", model.c())?;
    write_matrix(&mut out, "D", model.d())?;
    out.flush()?;
    Ok(())
}

/// Writes a model to a file path.
pub fn save_model_path<P: AsRef<Path>>(model: &StateSpaceModel, name: &str, path: P) -> Result<()> {
    save_model(model, name, File::create(path)?)
}

/// Eigenvalue placement for generated models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumSpec {
    /// All real parts in `[-10, -0.05]`.
    Stable,
    /// All real parts in `[0.05, 10]`.
    Antistable,
    /// Each pole block flips to the right half-plane with this probability.
    Mixed { unstable_fraction: f64 },
    /// Complex pairs with magnitude log-uniform in `[0.1, 100]` and damping
    /// ratio in `[0.01 zeta_max, zeta_max]`; one well-damped real pole when
    /// the order is odd.
    LightlyDamped { zeta_max: f64 },
}

#[derive(Debug, Clone, Copy)]
enum PoleBlock {
    Real(f64),
    Pair { re: f64, im: f64 },
}

impl PoleBlock {
    fn eigenvalues(self) -> Vec<Complex64> {
        match self {
            PoleBlock::Real(a) => vec![Complex64::new(a, 0.0)],
            PoleBlock::Pair { re, im } => {
                vec![Complex64::new(re, im), Complex64::new(re, -im)]
            }
        }
    }

    fn size(self) -> usize {
        match self {
            PoleBlock::Real(_) => 1,
            PoleBlock::Pair { .. } => 2,
        }
    }
}

fn sample_block(rng: &mut ChaCha8Rng, spectrum: SpectrumSpec, pair: bool) -> PoleBlock {
    match spectrum {
        SpectrumSpec::Stable | SpectrumSpec::Antistable | SpectrumSpec::Mixed { .. } => {
            let mut re = -rng.gen_range(0.05..=10.0);
            match spectrum {
                SpectrumSpec::Antistable => re = -re,
                SpectrumSpec::Mixed { unstable_fraction } if rng.gen_bool(unstable_fraction) => {
                    re = -re;
                }
                _ => {}
            }
            if pair {
                let im = rng.gen_range(0.05..=10.0);
                PoleBlock::Pair { re, im }
            } else {
                PoleBlock::Real(re)
            }
        }
        SpectrumSpec::LightlyDamped { zeta_max } => {
            if pair {
                let mag = 10.0_f64.powf(rng.gen_range(-1.0..=2.0));
                let zeta = rng.gen_range(0.01 * zeta_max..=zeta_max);
                PoleBlock::Pair {
                    re: -zeta * mag,
                    im: mag * (1.0 - zeta * zeta).sqrt(),
                }
            } else {
                PoleBlock::Real(-rng.gen_range(0.05..=10.0))
            }
        }
    }
}

fn block_is_separated(block: PoleBlock, accepted: &[Complex64]) -> bool {
    let eigs = block.eigenvalues();
    if eigs.len() == 2 && (eigs[0] - eigs[1]).norm() < MIN_EIGENVALUE_GAP {
        return false;
    }
    eigs.iter()
        .all(|e| accepted.iter().all(|f| (e - f).norm() >= MIN_EIGENVALUE_GAP))
}

fn validate_spectrum_spec(spectrum: SpectrumSpec) -> Result<()> {
    match spectrum {
        SpectrumSpec::Mixed { unstable_fraction }
            if !(0.0..=1.0).contains(&unstable_fraction) || !unstable_fraction.is_finite() =>
        {
            Err(Error::InvalidArgument(format!(
                "unstable_fraction must be in [0, 1], got {unstable_fraction}"
            )))
        }
        SpectrumSpec::LightlyDamped { zeta_max } if !(zeta_max > 0.0 && zeta_max < 1.0) => {
            Err(Error::InvalidArgument(format!(
                "zeta_max must be in (0, 1), got {zeta_max}"
            )))
        }
        _ => Ok(()),
    }
}

fn random_model_impl(
    n: usize,
    nu: usize,
    ny: usize,
    spectrum: SpectrumSpec,
    seed: u64,
    feedthrough: bool,
) -> Result<StateSpaceModel> {
    if n == 0 || nu == 0 || ny == 0 {
        return Err(Error::InvalidArgument(
            "model dimensions must be positive".into(),
        ));
    }
    validate_spectrum_spec(spectrum)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Sample pole blocks with rejection until every eigenvalue keeps the
    // minimum pairwise distance.
    let mut blocks: Vec<PoleBlock> = Vec::new();
    let mut accepted: Vec<Complex64> = Vec::new();
    let mut remaining = n;
    while remaining > 0 {
        let pair = remaining >= 2
            && match spectrum {
                SpectrumSpec::LightlyDamped { .. } => true,
                _ => rng.gen_bool(0.5),
            };
        let mut placed = false;
        for _ in 0..10_000 {
            let block = sample_block(&mut rng, spectrum, pair);
            if block_is_separated(block, &accepted) {
                accepted.extend(block.eigenvalues());
                remaining -= block.size();
                blocks.push(block);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Backend(format!(
                "random spectrum generation stalled after 10000 rejections (n = {n}, seed = {seed})"
            )));
        }
    }

    // Real block-diagonal form carrying exactly the sampled eigenvalues.
    let mut block_diag = Array2::<f64>::zeros((n, n));
    let mut at = 0;
    for block in &blocks {
        match *block {
            PoleBlock::Real(a) => {
                block_diag[[at, at]] = a;
                at += 1;
            }
            PoleBlock::Pair { re, im } => {
                block_diag[[at, at]] = re;
                block_diag[[at, at + 1]] = im;
                block_diag[[at + 1, at]] = -im;
                block_diag[[at + 1, at + 1]] = re;
                at += 2;
            }
        }
    }

    // Random orthogonal similarity: QR of a Gaussian matrix with the sign
    // convention that makes the distribution uniform (Haar).
    let g = Array2::from_shape_fn((n, n), |_| rng.sample::<f64, _>(StandardNormal));
    let (mut q, r) = ndarray_linalg::QR::qr(&g)?;
    for j in 0..n {
        if r[[j, j]] < 0.0 {
            q.column_mut(j).mapv_inplace(|x| -x);
        }
    }
    let a = q.dot(&block_diag).dot(&q.t());

    let b = Array2::from_shape_fn((n, nu), |_| rng.sample::<f64, _>(StandardNormal));
    let c = Array2::from_shape_fn((ny, n), |_| rng.sample::<f64, _>(StandardNormal));
    let d = if feedthrough {
        Array2::from_shape_fn((ny, nu), |_| rng.sample::<f64, _>(StandardNormal))
    } else {
        Array2::zeros((ny, nu))
    };
    StateSpaceModel::new(a, b, c, d)
}

/// Deterministic random model with zero feedthrough: eigenvalues sampled
/// per `spectrum` with pairwise gaps of at least [`MIN_EIGENVALUE_GAP`],
/// realized through a Haar-random orthogonal similarity; `B` and `C` are
/// standard normal. The same arguments always produce the same model.
pub fn random_model(
    n: usize,
    nu: usize,
    ny: usize,
    spectrum: SpectrumSpec,
    seed: u64,
) -> Result<StateSpaceModel> {
    random_model_impl(n, nu, ny, spectrum, seed, false)
}

/// Same as [`random_model`] with a standard-normal feedthrough matrix.
pub fn random_model_with_feedthrough(
    n: usize,
    nu: usize,
    ny: usize,
    spectrum: SpectrumSpec,
    seed: u64,
) -> Result<StateSpaceModel> {
    random_model_impl(n, nu, ny, spectrum, seed, true)
}
