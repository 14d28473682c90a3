//! Worker and server state machines.
//!
//! A worker turns a stochastic gradient into an update, adds its carried
//! quantization error, quantizes, and keeps the residual. The server averages
//! the decoded worker updates, does the same error-compensated quantization
//! on the average, and broadcasts it. Every node applies the decoded
//! broadcast to its iterate, so all copies of `x` stay identical.

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::{DenseVector, RandomStream};
use crate::quantize::{decode, encode, quantize, QuantizedMessage, QuantizerKind};

/// How the moving-average constant and the step size evolve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// `θ_t = 1 − θ/T`, `α_t = α/√T`.
    Horizon,
    /// `θ_t = θ`, `α_t = α`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    /// Initial value of every coordinate of the second moment.
    pub epsilon: f64,
    /// Number of rounds `T`.
    pub horizon: u64,
    pub schedule: Schedule,
}

impl HyperParams {
    pub fn new(
        alpha: f64,
        beta: f64,
        theta: f64,
        epsilon: f64,
        horizon: u64,
        schedule: Schedule,
    ) -> Result<Self> {
        let h = HyperParams {
            alpha,
            beta,
            theta,
            epsilon,
            horizon,
            schedule,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::invalid(format!(
                "beta must lie in [0, 1), got {}",
                self.beta
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::invalid(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        let ema = self.ema();
        if !(ema > 0.0 && ema < 1.0) {
            return Err(Error::invalid(format!(
                "moving-average constant {ema} outside (0, 1)"
            )));
        }
        if self.gamma() >= 1.0 {
            return Err(Error::invalid(format!(
                "gamma = beta / theta_t = {} must be below 1",
                self.gamma()
            )));
        }
        Ok(())
    }

    /// `θ_t`.
    pub fn ema(&self) -> f64 {
        match self.schedule {
            Schedule::Horizon => 1.0 - self.theta / self.horizon as f64,
            Schedule::Constant => self.theta,
        }
    }

    /// `α_t`.
    pub fn step_size(&self) -> f64 {
        match self.schedule {
            Schedule::Horizon => self.alpha / libm::sqrt(self.horizon as f64),
            Schedule::Constant => self.alpha,
        }
    }

    /// `γ = β / θ_t`.
    pub fn gamma(&self) -> f64 {
        self.beta / self.ema()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalOptimizer {
    Adam,
    /// Heavy-ball momentum: `m' = μ m + g`, update `α_t m'`.
    Sgdm {
        momentum: f64,
    },
}

/// What a worker produces in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkerOutput {
    pub message: QuantizedMessage,
    /// The update before error compensation and quantization.
    pub raw_update: DenseVector,
}

/// Running quantities for the moment and log-sum diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamDiagnostics {
    /// `Σ_t ‖√(1 − θ_t) g_t / √v_t‖²`.
    pub normalized_grad_sum: f64,
    /// `max_t ‖g_t‖`.
    pub max_grad_norm: f64,
    /// `Σ_t −ln θ_t`.
    pub log_weight: f64,
    /// Largest `m_j² − v_j / ((1 − γ)(1 − θ_t))` seen so far; `−∞` before
    /// the first step.
    pub worst_moment_excess: f64,
}

impl Default for AdamDiagnostics {
    fn default() -> Self {
        AdamDiagnostics {
            normalized_grad_sum: 0.0,
            max_grad_norm: 0.0,
            log_weight: 0.0,
            worst_moment_excess: f64::NEG_INFINITY,
        }
    }
}

impl AdamDiagnostics {
    /// Upper bound on [`AdamDiagnostics::normalized_grad_sum`] for the
    /// gradients seen so far.
    ///
    /// Under [`Schedule::Horizon`] this is `d[ln(1 + G²/(εd)) + θ/(1 − θ)]`.
    /// With a constant `θ_t` the weight term grows with `t`, so the bound uses
    /// the accumulated `Σ −ln θ_t` instead.
    pub fn log_sum_bound(&self, hp: &HyperParams, dim: usize) -> f64 {
        let d = dim as f64;
        let g2 = self.max_grad_norm * self.max_grad_norm;
        let weight = match hp.schedule {
            Schedule::Horizon => hp.theta / (1.0 - hp.theta),
            Schedule::Constant => self.log_weight,
        };
        d * (libm::log(1.0 + g2 / (hp.epsilon * d)) + weight)
    }
}

#[derive(Debug, Clone)]
pub struct Worker {
    pub x: DenseVector,
    pub m: DenseVector,
    /// Second moment; unused by [`LocalOptimizer::Sgdm`].
    pub v: DenseVector,
    pub e: DenseVector,
    /// Rounds completed.
    pub t: u64,
    pub optimizer: LocalOptimizer,
    pub quantizer: QuantizerKind,
    pub error_feedback: bool,
    /// Coordinates quantized outside their contract's guaranteed range.
    pub out_of_range: u64,
    pub diagnostics: AdamDiagnostics,
    stream: RandomStream,
}

impl Worker {
    /// An Adam worker holding `x1`, with `m = 0`, `v = ε`, `e = 0`.
    pub fn adam(x1: DenseVector, quantizer: QuantizerKind, hp: &HyperParams) -> Result<Self> {
        hp.validate()?;
        Self::build(x1, quantizer, LocalOptimizer::Adam, hp.epsilon)
    }

    pub fn sgdm(x1: DenseVector, quantizer: QuantizerKind, momentum: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::invalid(format!(
                "momentum must lie in [0, 1), got {momentum}"
            )));
        }
        Self::build(x1, quantizer, LocalOptimizer::Sgdm { momentum }, 1.0)
    }

    fn build(
        x1: DenseVector,
        quantizer: QuantizerKind,
        optimizer: LocalOptimizer,
        v0: f64,
    ) -> Result<Self> {
        x1.ensure_finite()?;
        quantizer.validate()?;
        let d = x1.dim();
        Ok(Worker {
            m: DenseVector::zeros(d),
            v: DenseVector::filled(d, v0),
            e: DenseVector::zeros(d),
            x: x1,
            t: 0,
            optimizer,
            quantizer,
            error_feedback: true,
            out_of_range: 0,
            diagnostics: AdamDiagnostics::default(),
            stream: RandomStream::new(0),
        })
    }

    /// When disabled, the residual of each quantization is discarded and
    /// `e` stays zero.
    pub fn with_error_feedback(mut self, enabled: bool) -> Self {
        self.error_feedback = enabled;
        self
    }

    /// Stream for stochastic quantizers.
    pub fn with_stream(mut self, stream: RandomStream) -> Self {
        self.stream = stream;
        self
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// One local step on gradient `g`; does not touch `x`.
    pub fn step(&mut self, hp: &HyperParams, g: &DenseVector) -> Result<WorkerOutput> {
        g.ensure_dim(self.dim())?;
        g.ensure_finite()?;
        if self.t >= hp.horizon {
            return Err(Error::invalid(format!(
                "worker already completed the horizon of {} rounds",
                hp.horizon
            )));
        }
        let step = hp.step_size();
        let raw = match self.optimizer {
            LocalOptimizer::Adam => {
                let ema = hp.ema();
                let bound_scale = 1.0 / ((1.0 - hp.gamma()) * (1.0 - ema));
                let mut norm_sum = 0.0;
                let mut worst = self.diagnostics.worst_moment_excess;
                let m = self.m.as_mut_slice();
                let v = self.v.as_mut_slice();
                let mut raw = DenseVector::zeros(g.dim());
                for (j, (r, &gj)) in raw.as_mut_slice().iter_mut().zip(g.iter()).enumerate() {
                    v[j] = ema * v[j] + (1.0 - ema) * (gj * gj);
                    m[j] = hp.beta * m[j] + (1.0 - hp.beta) * gj;
                    *r = step * m[j] / libm::sqrt(v[j]);
                    norm_sum += (1.0 - ema) * (gj * gj) / v[j];
                    worst = worst.max(m[j] * m[j] - bound_scale * v[j]);
                }
                let diag = &mut self.diagnostics;
                diag.normalized_grad_sum += norm_sum;
                diag.max_grad_norm = diag.max_grad_norm.max(g.norm2());
                diag.log_weight -= libm::log(ema);
                diag.worst_moment_excess = worst;
                raw
            }
            LocalOptimizer::Sgdm { momentum } => {
                let m = self.m.as_mut_slice();
                let mut raw = DenseVector::zeros(g.dim());
                for (j, (r, &gj)) in raw.as_mut_slice().iter_mut().zip(g.iter()).enumerate() {
                    m[j] = momentum * m[j] + gj;
                    *r = step * m[j];
                }
                raw
            }
        };
        raw.ensure_finite()?;
        let (message, residual, flagged) = compensate_and_send(
            &self.quantizer,
            &raw,
            &self.e,
            self.error_feedback,
            &mut self.stream,
        )?;
        self.e = residual;
        self.out_of_range += flagged as u64;
        self.t += 1;
        Ok(WorkerOutput {
            message,
            raw_update: raw,
        })
    }

    /// `x ← x − decode(msg)`.
    pub fn apply_broadcast(&mut self, msg: &QuantizedMessage) -> Result<()> {
        self.apply_update(&decode(msg)?)
    }

    /// `x ← x − delta` for an already decoded broadcast.
    pub fn apply_update(&mut self, delta: &DenseVector) -> Result<()> {
        self.x.sub_assign(delta)
    }
}

/// Quantizes `raw + e` (or `raw` alone without error feedback), encodes it,
/// and returns the message, the new residual, and the out-of-range count.
fn compensate_and_send(
    kind: &QuantizerKind,
    raw: &DenseVector,
    e: &DenseVector,
    error_feedback: bool,
    stream: &mut RandomStream,
) -> Result<(QuantizedMessage, DenseVector, usize)> {
    let target = if error_feedback {
        raw.add(e)?
    } else {
        raw.clone()
    };
    let q = quantize(kind, &target, Some(stream))?;
    let message = encode(kind, &q.values)?;
    let residual = if error_feedback {
        target.sub(&q.values)?
    } else {
        DenseVector::zeros(raw.dim())
    };
    Ok((message, residual, q.out_of_range))
}

/// What the server produces in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerOutput {
    pub broadcast: QuantizedMessage,
    /// `δ̂_t`, the mean of the decoded worker updates.
    pub average: DenseVector,
}

#[derive(Debug, Clone)]
pub struct Server {
    pub x: DenseVector,
    pub e: DenseVector,
    pub t: u64,
    pub quantizer: QuantizerKind,
    pub error_feedback: bool,
    pub out_of_range: u64,
    stream: RandomStream,
}

impl Server {
    pub fn new(x1: DenseVector, quantizer: QuantizerKind) -> Result<Self> {
        x1.ensure_finite()?;
        quantizer.validate()?;
        Ok(Server {
            e: DenseVector::zeros(x1.dim()),
            x: x1,
            t: 0,
            quantizer,
            error_feedback: true,
            out_of_range: 0,
            stream: RandomStream::new(0),
        })
    }

    pub fn with_error_feedback(mut self, enabled: bool) -> Self {
        self.error_feedback = enabled;
        self
    }

    pub fn with_stream(mut self, stream: RandomStream) -> Self {
        self.stream = stream;
        self
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    /// Averages `inbox` (in index order), quantizes with error compensation,
    /// and applies the decoded broadcast to `x`.
    pub fn step(&mut self, inbox: &[QuantizedMessage], workers: usize) -> Result<ServerOutput> {
        if inbox.len() != workers || workers == 0 {
            return Err(Error::InboxSize {
                expected: workers,
                received: inbox.len(),
            });
        }
        let mut sum = DenseVector::zeros(self.dim());
        for msg in inbox {
            sum.add_assign(&decode(msg)?)?;
        }
        let n = workers as f64;
        let average = DenseVector::from_vec_unchecked(sum.iter().map(|s| s / n).collect());
        let (broadcast, residual, flagged) = compensate_and_send(
            &self.quantizer,
            &average,
            &self.e,
            self.error_feedback,
            &mut self.stream,
        )?;
        self.e = residual;
        self.out_of_range += flagged as u64;
        self.x.sub_assign(&decode(&broadcast)?)?;
        self.t += 1;
        Ok(ServerOutput { broadcast, average })
    }
}
