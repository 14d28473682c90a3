//! Dense vectors and matrices over `f64`, and the seeded random stream that
//! feeds every stochastic component.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, Index};

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

/// A d-dimensional real vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    /// Builds a vector, rejecting empty input and non-finite entries.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid("vector must have at least one entry"));
        }
        check_finite(&data)?;
        Ok(DenseVector(data))
    }

    /// Wraps `data` without validation. Callers that feed the result back
    /// into a public operation still get the finiteness check there.
    pub fn from_vec_unchecked(data: Vec<f64>) -> Self {
        DenseVector(data)
    }

    pub fn zeros(dim: usize) -> Self {
        DenseVector(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        DenseVector(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        check_finite(&self.0)
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }

    pub fn norm2(&self) -> f64 {
        libm::sqrt(self.norm2_sq())
    }

    pub fn norm2_sq(&self) -> f64 {
        dot_slices(&self.0, &self.0)
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn dot(&self, other: &DenseVector) -> Result<f64> {
        other.ensure_dim(self.dim())?;
        Ok(dot_slices(&self.0, &other.0))
    }

    /// `a * x + y`.
    pub fn axpy(a: f64, x: &DenseVector, y: &DenseVector) -> Result<DenseVector> {
        y.ensure_dim(x.dim())?;
        Ok(DenseVector(
            x.0.iter().zip(&y.0).map(|(xi, yi)| a * xi + yi).collect(),
        ))
    }

    pub fn sub(&self, other: &DenseVector) -> Result<DenseVector> {
        other.ensure_dim(self.dim())?;
        Ok(DenseVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &DenseVector) -> Result<DenseVector> {
        other.ensure_dim(self.dim())?;
        Ok(DenseVector(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn scale(&self, a: f64) -> DenseVector {
        DenseVector(self.0.iter().map(|v| a * v).collect())
    }

    pub fn sub_assign(&mut self, other: &DenseVector) -> Result<()> {
        other.ensure_dim(self.dim())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a -= b;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &DenseVector) -> Result<()> {
        other.ensure_dim(self.dim())?;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
        Ok(())
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Self {
        v.0
    }
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Dot product with four interleaved accumulators. The summation order is
/// fixed by this function, so results are reproducible everywhere.
pub fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0_f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        check_finite(&data)?;
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseMatrix {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `A x`.
    pub fn matvec(&self, x: &DenseVector) -> Result<DenseVector> {
        x.ensure_dim(self.cols)?;
        Ok(DenseVector(
            (0..self.rows).map(|i| dot_slices(self.row(i), x)).collect(),
        ))
    }

    /// `Aᵀ y`.
    pub fn matvec_transposed(&self, y: &DenseVector) -> Result<DenseVector> {
        y.ensure_dim(self.rows)?;
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += yi * a;
            }
        }
        Ok(DenseVector(out))
    }

    /// `Aᵀ y` for several right-hand sides in one pass over `A`.
    ///
    /// Every output is bit-identical to [`DenseMatrix::matvec_transposed`]
    /// on the same input; only the memory traffic differs.
    pub fn matvec_transposed_batch(&self, ys: &[&[f64]]) -> Result<Vec<DenseVector>> {
        for y in ys {
            if y.len() != self.rows {
                return Err(Error::DimensionMismatch {
                    expected: self.rows,
                    found: y.len(),
                });
            }
        }
        let mut outs: Vec<Vec<f64>> = ys.iter().map(|_| vec![0.0; self.cols]).collect();
        for i in 0..self.rows {
            let row = self.row(i);
            for (out, y) in outs.iter_mut().zip(ys) {
                let yi = y[i];
                for (o, a) in out.iter_mut().zip(row) {
                    *o += yi * a;
                }
            }
        }
        Ok(outs.into_iter().map(DenseVector).collect())
    }
}

/// Seeded pseudo-random stream.
///
/// The generator is xoshiro256++ seeded through SplitMix64
/// (`Xoshiro256PlusPlus::seed_from_u64`); Gaussian draws use the polar-free
/// Box–Muller transform with `libm` transcendental functions, and the second
/// variate of each pair is cached. The whole pipeline is integer arithmetic
/// plus correctly specified software math, so a seed yields the same scalar
/// sequence on every platform.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl RandomStream {
    pub const ALGORITHM_ID: &'static str = "xoshiro256++/splitmix64/box-muller";

    pub fn new(seed: u64) -> Self {
        RandomStream {
            seed,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    /// An independent stream for `(seed, label)`; used to give every node and
    /// every purpose its own sequence under one user-facing seed.
    pub fn derive(seed: u64, label: u64) -> Self {
        RandomStream::new(splitmix64(
            seed ^ splitmix64(label.wrapping_add(0x5851_f42d_4c95_7f2d)),
        ))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let phi = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(phi));
        r * libm::cos(phi)
    }

    pub fn normal(&mut self, mean: f64, variance: f64) -> f64 {
        mean + libm::sqrt(variance) * self.standard_normal()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `dim` i.i.d. `N(mean, variance)` draws.
pub fn gaussian_vector(
    stream: &mut RandomStream,
    dim: usize,
    mean: f64,
    variance: f64,
) -> Result<DenseVector> {
    if dim == 0 {
        return Err(Error::invalid("gaussian_vector: dim must be positive"));
    }
    if !(variance >= 0.0) || !variance.is_finite() || !mean.is_finite() {
        return Err(Error::invalid(
            "gaussian_vector: need finite mean and variance >= 0",
        ));
    }
    Ok(DenseVector(
        (0..dim).map(|_| stream.normal(mean, variance)).collect(),
    ))
}
