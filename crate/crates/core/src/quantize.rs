//! Quantization mappings, their (δ, δ′) contracts, and bit-exact codecs.
//!
//! A quantization mapping `Q` comes with constants `δ ∈ (0, 1]`, `δ′ ≥ 0`
//! such that for every `x`
//!
//! ```text
//! ‖x − Q(x)‖ ≤ (1 − δ)‖x‖ + δ′      and      ‖Q(x)‖ ≤ (2 − δ)‖x‖.
//! ```
//!
//! A compressor is the `δ′ = 0` case.
//!
//! # Wire format
//!
//! Every payload is a plain MSB-first bit string with no header or framing;
//! the receiver knows the kind and the dimension `d`. Lengths are exact:
//!
//! | kind                | layout                                              | bits                          |
//! |---------------------|-----------------------------------------------------|-------------------------------|
//! | `Identity`          | `d` × binary32                                      | `32d`                         |
//! | `ExactIdentity`     | `d` × binary64                                      | `64d`                         |
//! | `NormUniform{k}`    | binary32 scale, then `d` level indices              | `32 + d⌈log₂(2^{k+1}−1)⌉`     |
//! | `LogGrid{k,K}`      | `d` × (sign bit, magnitude symbol)                  | `d(1 + ⌈log₂(K−k+2)⌉)`        |
//! | `Terngrad`          | binary32 scale, then `d` 2-bit symbols              | `32 + 2d`                     |
//! | `TopK{f}`           | `c = ⌈fd⌉` × (index, binary32 value), index-ordered | `c(⌈log₂ d⌉ + 32)`            |
//!
//! * `NormUniform`: level `l ∈ [−m, m]` with `m = 2^k − 1` is stored as the
//!   unsigned index `l + m`; the decoded value is `s · (l / m)`.
//! * `LogGrid`: symbol `0` is zero, symbol `j ≥ 1` is magnitude `2^{k+j−1}`.
//!   The sign bit of a zero is `0`.
//! * `Terngrad`: symbols `00` zero, `01` `+s`, `10` `−s`.
//! * `TopK`: entries are the `c` largest magnitudes (ties to the lower
//!   index) written in ascending index order.
//!
//! `Identity` and `TopK` carry binary32 values: `encode` rounds to nearest
//! binary32 and this rounding is the only lossy step in any codec. For all
//! other kinds `decode(encode(q)) == q` exactly for every `q` in the codebook.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bits::{ceil_log2, BitReader, BitWriter};
use crate::error::{Error, Result};
use crate::linalg::{DenseVector, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantizerKind {
    /// Full precision; the wire carries binary32.
    Identity,
    /// binary64 pass-through, for equivalence testing against a serial
    /// reference.
    ExactIdentity,
    /// Scale `s = fl32(‖x‖∞)` times the nearest level of
    /// `{i / (2^k − 1) : |i| ≤ 2^k − 1}`.
    NormUniform { k: u32 },
    /// Sign times the floored power of two in `{2^min_exp, …, 2^max_exp}`;
    /// magnitudes below `2^min_exp` map to zero.
    LogGrid { min_exp: i32, max_exp: i32 },
    /// Unbiased stochastic ternarization.
    Terngrad,
    /// Keep the `⌈fraction · d⌉` largest-magnitude coordinates.
    TopK { fraction: f64 },
}

impl QuantizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            QuantizerKind::Identity => "identity",
            QuantizerKind::ExactIdentity => "exact-identity",
            QuantizerKind::NormUniform { .. } => "norm-uniform",
            QuantizerKind::LogGrid { .. } => "log-grid",
            QuantizerKind::Terngrad => "terngrad",
            QuantizerKind::TopK { .. } => "top-k",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            QuantizerKind::NormUniform { k } if !(1..=16).contains(&k) => Err(Error::invalid(
                format!("norm-uniform needs 1 <= k <= 16, got {k}"),
            )),
            QuantizerKind::LogGrid { min_exp, max_exp } => {
                if max_exp <= min_exp {
                    return Err(Error::invalid(format!(
                        "log-grid needs max_exp > min_exp, got {min_exp}..{max_exp}"
                    )));
                }
                if min_exp < -1000 || max_exp > 1000 {
                    return Err(Error::invalid(
                        "log-grid exponents must lie in [-1000, 1000]",
                    ));
                }
                Ok(())
            }
            QuantizerKind::TopK { fraction } if !(fraction > 0.0 && fraction <= 1.0) => Err(
                Error::invalid(format!("top-k fraction must lie in (0, 1], got {fraction}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, QuantizerKind::Terngrad)
    }

    /// Exact payload length for a `dim`-dimensional message.
    pub fn encoded_bit_len(&self, dim: usize) -> usize {
        match *self {
            QuantizerKind::Identity => 32 * dim,
            QuantizerKind::ExactIdentity => 64 * dim,
            QuantizerKind::NormUniform { k } => 32 + dim * norm_uniform_index_bits(k) as usize,
            QuantizerKind::LogGrid { min_exp, max_exp } => {
                dim * (1 + log_grid_symbol_bits(min_exp, max_exp) as usize)
            }
            QuantizerKind::Terngrad => 32 + 2 * dim,
            QuantizerKind::TopK { fraction } => {
                top_k_count(fraction, dim) * (ceil_log2(dim as u64) as usize + 32)
            }
        }
    }
}

fn norm_uniform_levels(k: u32) -> i64 {
    (1i64 << k) - 1
}

fn norm_uniform_index_bits(k: u32) -> u32 {
    ceil_log2((1u64 << (k + 1)) - 1)
}

fn log_grid_symbol_bits(min_exp: i32, max_exp: i32) -> u32 {
    ceil_log2((max_exp - min_exp + 2) as u64)
}

/// `⌈fraction · dim⌉` clamped to `[1, dim]`. A `1e-9` slack absorbs binary
/// rounding in the product (e.g. `0.7 · 10`).
pub fn top_k_count(fraction: f64, dim: usize) -> usize {
    let c = libm::ceil(fraction * dim as f64 - 1e-9);
    (c.max(1.0) as usize).min(dim)
}

fn pow2(e: i32) -> f64 {
    libm::ldexp(1.0, e)
}

/// `NormUniform` level value. Shared by the quantizer and the decoder so both
/// produce the same bits.
fn level_value(scale: f64, level: i64, levels: i64) -> f64 {
    scale * (level as f64 / levels as f64)
}

/// Exact `floor(log2 |v|)` for a finite, nonzero `v`.
fn floor_log2(v: f64) -> i32 {
    let bits = v.abs().to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased == 0 {
        // subnormal: locate the leading mantissa bit
        let mant = bits & ((1u64 << 52) - 1);
        -1074 + (63 - mant.leading_zeros() as i32)
    } else {
        biased - 1023
    }
}

fn round_up_to_f32(v: f64) -> f64 {
    let f = v as f32;
    if (f as f64) < v {
        f.next_up() as f64
    } else {
        f as f64
    }
}

fn ensure_f32_range(x: &DenseVector) -> Result<()> {
    if let Some(index) = x.iter().position(|v| v.abs() > f32::MAX as f64) {
        return Err(Error::invalid(format!(
            "value at index {index} exceeds the binary32 range of the wire format"
        )));
    }
    Ok(())
}

/// Output of [`quantize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Quantized {
    pub values: DenseVector,
    /// Coordinates whose magnitude lay outside the range on which the kind's
    /// contract is guaranteed (for `LogGrid`: above `2^K + 2^{K−1}`).
    pub out_of_range: usize,
}

/// Applies the quantization mapping `kind` to `x`.
///
/// `stream` is consulted only by `Terngrad` (one uniform draw per
/// coordinate); every other kind is deterministic.
pub fn quantize(
    kind: &QuantizerKind,
    x: &DenseVector,
    stream: Option<&mut RandomStream>,
) -> Result<Quantized> {
    kind.validate()?;
    x.ensure_finite()?;
    let mut out_of_range = 0;
    let values = match *kind {
        QuantizerKind::Identity | QuantizerKind::ExactIdentity => x.clone(),
        QuantizerKind::NormUniform { k } => {
            ensure_f32_range(x)?;
            let scale = (x.norm_inf() as f32) as f64;
            if scale == 0.0 {
                DenseVector::zeros(x.dim())
            } else {
                let m = norm_uniform_levels(k);
                let q = x
                    .iter()
                    .map(|&xi| {
                        let y = xi.abs() / scale * m as f64;
                        let base = libm::floor(y);
                        // ties go toward zero
                        let mut level = if y - base > 0.5 { base + 1.0 } else { base } as i64;
                        level = level.min(m);
                        let level = if xi < 0.0 { -level } else { level };
                        level_value(scale, level, m)
                    })
                    .collect();
                DenseVector::from_vec_unchecked(q)
            }
        }
        QuantizerKind::LogGrid { min_exp, max_exp } => {
            let top = pow2(max_exp);
            let guarantee = top + pow2(max_exp - 1);
            let q = x
                .iter()
                .map(|&xi| {
                    let a = xi.abs();
                    if a < pow2(min_exp) {
                        return 0.0;
                    }
                    if a > guarantee {
                        out_of_range += 1;
                    }
                    let mag = if a >= top { top } else { pow2(floor_log2(a)) };
                    if xi < 0.0 {
                        -mag
                    } else {
                        mag
                    }
                })
                .collect();
            DenseVector::from_vec_unchecked(q)
        }
        QuantizerKind::Terngrad => {
            let stream = stream.ok_or_else(|| Error::invalid("terngrad needs a random stream"))?;
            ensure_f32_range(x)?;
            let scale = round_up_to_f32(x.norm_inf());
            let q = x
                .iter()
                .map(|&xi| {
                    let u = stream.uniform();
                    if scale > 0.0 && u < xi.abs() / scale {
                        if xi < 0.0 {
                            -scale
                        } else {
                            scale
                        }
                    } else {
                        0.0
                    }
                })
                .collect();
            DenseVector::from_vec_unchecked(q)
        }
        QuantizerKind::TopK { fraction } => {
            let keep = top_k_indices(x, top_k_count(fraction, x.dim()));
            let mut q = vec![0.0; x.dim()];
            for i in keep {
                q[i] = x[i];
            }
            DenseVector::from_vec_unchecked(q)
        }
    };
    Ok(Quantized {
        values,
        out_of_range,
    })
}

/// Indices of the `count` largest magnitudes (ties to the lower index), in
/// ascending index order.
fn top_k_indices(x: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    order.truncate(count);
    order.sort_unstable();
    order
}

/// Where a contract's constants come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// The mapping is exact.
    Exact,
    /// Closed-form worst-case analysis.
    Analytic,
    /// Worst-case analysis checked against an adversarial sampling oracle
    /// ([`calibrate`]); no published constants exist.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerContract {
    pub delta: f64,
    pub delta_prime: f64,
    pub provenance: Provenance,
}

impl QuantizerContract {
    pub fn new(delta: f64, delta_prime: f64, provenance: Provenance) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) || !(delta_prime >= 0.0) || !delta_prime.is_finite() {
            return Err(Error::invalid(format!(
                "contract needs 0 < delta <= 1 and delta' >= 0, got ({delta}, {delta_prime})"
            )));
        }
        Ok(QuantizerContract {
            delta,
            delta_prime,
            provenance,
        })
    }

    pub fn is_compressor(&self) -> bool {
        self.delta_prime == 0.0
    }

    /// Slack of both contract inequalities for one input/output pair;
    /// non-negative means satisfied.
    pub fn slack(&self, x: &DenseVector, q: &DenseVector) -> (f64, f64) {
        let nx = x.norm2();
        let err = x.sub(q).map(|r| r.norm2()).unwrap_or(f64::INFINITY);
        (
            (1.0 - self.delta) * nx + self.delta_prime - err,
            (2.0 - self.delta) * nx - q.norm2(),
        )
    }
}

/// The contract `kind` provides on `dim`-dimensional inputs, or `None` for
/// `Terngrad`, which is unbiased but carries no deterministic guarantee.
///
/// * `LogGrid`: `δ = 1/2`, `δ′ = 2^k √d`, valid while `‖x‖∞ ≤ 2^K + 2^{K−1}`.
/// * `TopK(f)`: `δ = 1 − √(1 − ⌈fd⌉/d)`, `δ′ = 0`.
/// * `NormUniform{k}`: with half step `h = 1 / (2(2^k − 1))` and scale `s`,
///   every non-maximal coordinate errs by at most `min(|xᵢ|, h·s)` and the
///   largest coordinate is reproduced up to binary32 rounding of `s`. The
///   ratio `Σ min(xᵢ², h²s²) / (s² + Σ xᵢ²)` peaks when every other
///   coordinate sits at `h·s`, giving
///   `(1 − δ)² = ((d − 1)H + 2^{−40}) / (1 + (d − 1)H)` with `H = h²(1 + 2^{−23})`
///   (the extra factors absorb binary32 and binary64 rounding), and
///   `δ′ = 2^{−126}√d` for scales in the binary32 subnormal range.
pub fn contract_of(kind: &QuantizerKind, dim: usize) -> Option<QuantizerContract> {
    let d = dim as f64;
    let c = |delta, delta_prime, provenance| {
        Some(QuantizerContract {
            delta,
            delta_prime,
            provenance,
        })
    };
    match *kind {
        QuantizerKind::Identity | QuantizerKind::ExactIdentity => c(1.0, 0.0, Provenance::Exact),
        QuantizerKind::LogGrid { min_exp, .. } => {
            c(0.5, pow2(min_exp) * libm::sqrt(d), Provenance::Analytic)
        }
        QuantizerKind::TopK { fraction } => {
            let kept = top_k_count(fraction, dim) as f64;
            c(1.0 - libm::sqrt(1.0 - kept / d), 0.0, Provenance::Analytic)
        }
        QuantizerKind::NormUniform { k } => {
            let h = 0.5 / norm_uniform_levels(k) as f64;
            let big_h = h * h * (1.0 + pow2(-23));
            let ratio_sq = ((d - 1.0) * big_h + pow2(-40)) / (1.0 + (d - 1.0) * big_h);
            c(
                1.0 - libm::sqrt(ratio_sq),
                pow2(-126) * libm::sqrt(d),
                Provenance::Empirical,
            )
        }
        QuantizerKind::Terngrad => None,
    }
}

/// Result of the adversarial calibration oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Largest observed `‖x − Q(x)‖ / ‖x‖`.
    pub max_error_ratio: f64,
    /// Largest observed `‖Q(x)‖ / ‖x‖`.
    pub max_norm_ratio: f64,
    pub samples: usize,
}

/// Measures the worst relative error of `kind` over `samples` vectors drawn
/// from adversarial families: one dominant coordinate over a bed of values
/// just under the rounding threshold, uniform and Gaussian vectors, sparse
/// vectors, and vectors sitting on the level midpoints.
pub fn calibrate(
    kind: &QuantizerKind,
    dim: usize,
    samples: usize,
    stream: &mut RandomStream,
) -> Result<Calibration> {
    let mut out = Calibration {
        max_error_ratio: 0.0,
        max_norm_ratio: 0.0,
        samples,
    };
    let half_step = match *kind {
        QuantizerKind::NormUniform { k } => 0.5 / norm_uniform_levels(k) as f64,
        _ => 0.5,
    };
    for n in 0..samples {
        let scale = libm::exp2(stream.uniform() * 40.0 - 20.0);
        let data: Vec<f64> = match n % 4 {
            0 => (0..dim)
                .map(|i| {
                    if i == 0 {
                        scale
                    } else {
                        let jitter = 1.0 - stream.uniform() * 1e-6;
                        let sign = if stream.bernoulli(0.5) { 1.0 } else { -1.0 };
                        sign * scale * half_step * jitter
                    }
                })
                .collect(),
            1 => (0..dim).map(|_| scale * stream.standard_normal()).collect(),
            2 => (0..dim)
                .map(|_| {
                    if stream.bernoulli(0.1) {
                        scale * (2.0 * stream.uniform() - 1.0)
                    } else {
                        0.0
                    }
                })
                .collect(),
            _ => (0..dim)
                .map(|_| scale * (2.0 * stream.uniform() - 1.0))
                .collect(),
        };
        let x = DenseVector::from_vec_unchecked(data);
        let nx = x.norm2();
        if nx == 0.0 {
            continue;
        }
        let q = quantize(kind, &x, Some(stream))?.values;
        out.max_error_ratio = out.max_error_ratio.max(x.sub(&q)?.norm2() / nx);
        out.max_norm_ratio = out.max_norm_ratio.max(q.norm2() / nx);
    }
    Ok(out)
}

/// An encoded update together with its exact bit length.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMessage {
    pub kind: QuantizerKind,
    pub payload: Vec<u8>,
    pub bit_len: usize,
    pub dim: usize,
}

/// Encodes a codebook vector of `kind`.
pub fn encode(kind: &QuantizerKind, q: &DenseVector) -> Result<QuantizedMessage> {
    kind.validate()?;
    q.ensure_finite()?;
    let dim = q.dim();
    let mut w = BitWriter::with_capacity(kind.encoded_bit_len(dim));
    match *kind {
        QuantizerKind::Identity => {
            ensure_f32_range(q)?;
            for &v in q.iter() {
                w.write(u64::from((v as f32).to_bits()), 32);
            }
        }
        QuantizerKind::ExactIdentity => {
            for &v in q.iter() {
                w.write(v.to_bits(), 64);
            }
        }
        QuantizerKind::NormUniform { k } => {
            let m = norm_uniform_levels(k);
            let scale = q.norm_inf();
            if (scale as f32) as f64 != scale {
                return Err(Error::NotInCodebook {
                    kind: kind.name(),
                    index: 0,
                });
            }
            w.write(u64::from((scale as f32).to_bits()), 32);
            let bits = norm_uniform_index_bits(k);
            for (index, &v) in q.iter().enumerate() {
                let level = if scale == 0.0 {
                    0
                } else {
                    libm::round(v / scale * m as f64) as i64
                };
                if level.abs() > m || level_value(scale, level, m) != v {
                    return Err(Error::NotInCodebook {
                        kind: kind.name(),
                        index,
                    });
                }
                w.write((level + m) as u64, bits);
            }
        }
        QuantizerKind::LogGrid { min_exp, max_exp } => {
            let bits = log_grid_symbol_bits(min_exp, max_exp);
            for (index, &v) in q.iter().enumerate() {
                let (sign, symbol) = if v == 0.0 {
                    (0, 0)
                } else {
                    let e = floor_log2(v);
                    if v.abs() != pow2(e) || e < min_exp || e > max_exp {
                        return Err(Error::NotInCodebook {
                            kind: kind.name(),
                            index,
                        });
                    }
                    (u64::from(v < 0.0), (e - min_exp + 1) as u64)
                };
                w.write(sign, 1);
                w.write(symbol, bits);
            }
        }
        QuantizerKind::Terngrad => {
            let scale = q.norm_inf();
            if (scale as f32) as f64 != scale {
                return Err(Error::NotInCodebook {
                    kind: kind.name(),
                    index: 0,
                });
            }
            w.write(u64::from((scale as f32).to_bits()), 32);
            for (index, &v) in q.iter().enumerate() {
                let symbol = if v == 0.0 {
                    0b00
                } else if v == scale {
                    0b01
                } else if v == -scale {
                    0b10
                } else {
                    return Err(Error::NotInCodebook {
                        kind: kind.name(),
                        index,
                    });
                };
                w.write(symbol, 2);
            }
        }
        QuantizerKind::TopK { fraction } => {
            ensure_f32_range(q)?;
            let count = top_k_count(fraction, dim);
            if let Some(index) = q
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .nth(count)
                .map(|(i, _)| i)
            {
                return Err(Error::NotInCodebook {
                    kind: kind.name(),
                    index,
                });
            }
            let index_bits = ceil_log2(dim as u64);
            for i in top_k_indices(q, count) {
                w.write(i as u64, index_bits);
                w.write(u64::from((q[i] as f32).to_bits()), 32);
            }
        }
    }
    let (payload, bit_len) = w.finish();
    debug_assert_eq!(bit_len, kind.encoded_bit_len(dim));
    Ok(QuantizedMessage {
        kind: *kind,
        payload,
        bit_len,
        dim,
    })
}

pub fn decode(msg: &QuantizedMessage) -> Result<DenseVector> {
    let kind = msg.kind;
    kind.validate()?;
    let dim = msg.dim;
    if dim == 0 {
        return Err(Error::Malformed("zero-dimensional message".into()));
    }
    let expected = kind.encoded_bit_len(dim);
    if msg.bit_len != expected {
        return Err(Error::Malformed(format!(
            "{} message of dim {dim} must have {expected} bits, has {}",
            kind.name(),
            msg.bit_len
        )));
    }
    let mut r = BitReader::new(&msg.payload, msg.bit_len)?;
    let read_f32 = |r: &mut BitReader| -> Result<f64> {
        let v = f32::from_bits(r.read(32)? as u32) as f64;
        if !v.is_finite() {
            return Err(Error::Malformed("non-finite binary32 field".into()));
        }
        Ok(v)
    };
    let values = match kind {
        QuantizerKind::Identity => (0..dim)
            .map(|_| read_f32(&mut r))
            .collect::<Result<Vec<_>>>()?,
        QuantizerKind::ExactIdentity => (0..dim)
            .map(|_| {
                let v = f64::from_bits(r.read(64)?);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Malformed("non-finite binary64 field".into()))
                }
            })
            .collect::<Result<Vec<_>>>()?,
        QuantizerKind::NormUniform { k } => {
            let m = norm_uniform_levels(k);
            let scale = read_f32(&mut r)?;
            let bits = norm_uniform_index_bits(k);
            (0..dim)
                .map(|_| {
                    let level = r.read(bits)? as i64 - m;
                    if level.abs() > m {
                        return Err(Error::Malformed(format!(
                            "level index {} out of range",
                            level + m
                        )));
                    }
                    Ok(if scale == 0.0 {
                        0.0
                    } else {
                        level_value(scale, level, m)
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        QuantizerKind::LogGrid { min_exp, max_exp } => {
            let bits = log_grid_symbol_bits(min_exp, max_exp);
            let symbols = (max_exp - min_exp + 1) as u64;
            (0..dim)
                .map(|_| {
                    let negative = r.read(1)? == 1;
                    let symbol = r.read(bits)?;
                    if symbol > symbols {
                        return Err(Error::Malformed(format!(
                            "log-grid symbol {symbol} out of range"
                        )));
                    }
                    let mag = if symbol == 0 {
                        0.0
                    } else {
                        pow2(min_exp + symbol as i32 - 1)
                    };
                    Ok(if negative { -mag } else { mag })
                })
                .collect::<Result<Vec<_>>>()?
        }
        QuantizerKind::Terngrad => {
            let scale = read_f32(&mut r)?;
            (0..dim)
                .map(|_| match r.read(2)? {
                    0b00 => Ok(0.0),
                    0b01 => Ok(scale),
                    0b10 => Ok(-scale),
                    s => Err(Error::Malformed(format!("terngrad symbol {s:#b}"))),
                })
                .collect::<Result<Vec<_>>>()?
        }
        QuantizerKind::TopK { fraction } => {
            let mut out = vec![0.0; dim];
            let index_bits = ceil_log2(dim as u64);
            for _ in 0..top_k_count(fraction, dim) {
                let i = r.read(index_bits)? as usize;
                if i >= dim {
                    return Err(Error::Malformed(format!("top-k index {i} out of range")));
                }
                out[i] = read_f32(&mut r)?;
            }
            out
        }
    };
    Ok(DenseVector::from_vec_unchecked(values))
}
