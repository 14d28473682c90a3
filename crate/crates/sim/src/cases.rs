//! Binary case files.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 8 | magic `EFADCASE` |
//! | 8 | 4 | format version, `1` |
//! | 12 | 8 | case seed |
//! | 20 | 8 | dimension `d` |
//! | 28 | 8 | noise variance (binary64) |
//! | 36 | 8·d² | `A`, row-major binary64 |
//! | 36 + 8·d² | 8·d | `x*`, binary64 |
//!
//! Nothing may follow `x*`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use effadam_core::linalg::{DenseMatrix, DenseVector};
use effadam_core::problems::LeastSquares;

use crate::error::{Result, SimError};

pub const MAGIC: &[u8; 8] = b"EFADCASE";
pub const VERSION: u32 = 1;

/// Seeds of the standard 20-case protocol.
pub const STANDARD_CASES: std::ops::RangeInclusive<u64> = 1..=20;

pub fn write_case<W: Write>(mut out: W, seed: u64, problem: &LeastSquares) -> Result<()> {
    let d = problem.a.cols() as u64;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&seed.to_le_bytes())?;
    out.write_all(&d.to_le_bytes())?;
    out.write_all(&problem.noise_variance.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * (problem.a.as_slice().len() + problem.x_star.dim()));
    for v in problem.a.as_slice().iter().chain(problem.x_star.iter()) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn malformed(detail: impl Into<String>) -> SimError {
    SimError::Format {
        what: "case file",
        detail: detail.into(),
    }
}

/// Returns the seed recorded in the file and the problem.
pub fn read_case<R: Read>(mut input: R) -> Result<(u64, LeastSquares)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 36 || &bytes[..8] != MAGIC {
        return Err(malformed("missing magic or truncated header"));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let seed = u64_at(12);
    let d = usize::try_from(u64_at(20)).map_err(|_| malformed("dimension overflows"))?;
    let noise = f64::from_bits(u64_at(28));
    let expected = d
        .checked_mul(d)
        .and_then(|dd| dd.checked_add(d))
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(36))
        .ok_or_else(|| malformed("dimension overflows"))?;
    if bytes.len() != expected {
        return Err(malformed(format!(
            "expected {expected} bytes for d = {d}, found {}",
            bytes.len()
        )));
    }
    let floats: Vec<f64> = bytes[36..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let (a, x) = floats.split_at(d * d);
    let problem = LeastSquares::new(
        DenseMatrix::new(d, d, a.to_vec())?,
        DenseVector::new(x.to_vec())?,
        noise,
    )?;
    Ok((seed, problem))
}

pub fn case_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("case-{seed:03}.bin"))
}

pub fn save_case(path: &Path, seed: u64, problem: &LeastSquares) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_case(&mut w, seed, problem)?;
    w.flush()?;
    Ok(())
}

pub fn load_case(path: &Path) -> Result<(u64, LeastSquares)> {
    read_case(std::io::BufReader::new(fs::File::open(path)?))
}

/// Generates and saves the cases for `seeds` into `dir`; returns the paths.
pub fn generate_cases(
    dir: &Path,
    seeds: &[u64],
    dim: usize,
    noise_variance: f64,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    seeds
        .iter()
        .map(|&seed| {
            let path = case_path(dir, seed);
            save_case(
                &path,
                seed,
                &LeastSquares::make_case_with(seed, dim, noise_variance),
            )?;
            Ok(path)
        })
        .collect()
}
