//! Closed-form convergence and communication bounds.
//!
//! Every logarithm here is natural. The bounds are stated for the schedule
//! `θ_t = 1 − θ/T`, `α_t = α/√T`, so `θ₁ = 1 − θ/T` and `γ = β/θ₁` are used
//! whatever [`Schedule`](crate::node::Schedule) the hyperparameters carry.

use alloc::format;

use crate::error::{Error, Result};
use crate::node::HyperParams;
use crate::quantize::{QuantizerContract, QuantizerKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    /// Gradient norm bound `G`.
    pub g_bound: f64,
    /// Gradient Lipschitz constant `L`.
    pub lipschitz: f64,
    /// `F(x₁) − F*`.
    pub f_gap: f64,
    pub dim: usize,
    pub hp: HyperParams,
    pub contract_w: QuantizerContract,
    pub contract_s: QuantizerContract,
    pub workers: usize,
    /// Target accuracy `ε` for the iteration and bit bounds.
    pub target: f64,
}

/// Which iteration bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundForm {
    /// Factor 4 with `C2` built from the actual contracts.
    Theorem,
    /// Factor 16 with `C4`, the `δ_w = δ_s = 1/2` specialization.
    Corollary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryReport {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// `None` when the nested logarithm has a non-positive argument.
    pub c5: Option<f64>,
    pub t_bound: f64,
    pub t_bound_corollary: f64,
    pub error_floor: f64,
}

/// `C5` beside what a concrete codec spends per message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitsBound {
    pub c5: f64,
    pub codec_bits: Option<usize>,
}

struct Shared {
    theta: f64,
    theta1: f64,
    gamma: f64,
    one_minus_gamma: f64,
    one_minus_sqrt_gamma: f64,
    log_term: f64,
}

impl TheoryInputs {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("G", self.g_bound),
            ("L", self.lipschitz),
            ("F gap", self.f_gap),
            ("target", self.target),
            ("alpha", self.hp.alpha),
            ("epsilon", self.hp.epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.dim == 0 || self.workers == 0 || self.hp.horizon == 0 {
            return Err(Error::invalid(
                "dimension, worker count and horizon must be positive",
            ));
        }
        if !(0.0..1.0).contains(&self.hp.beta) || !(self.hp.theta > 0.0 && self.hp.theta < 1.0) {
            return Err(Error::invalid("need beta in [0, 1) and theta in (0, 1)"));
        }
        let s = self.shared();
        if !(s.theta1 > 0.0) || s.gamma >= 1.0 {
            return Err(Error::invalid(format!(
                "gamma = beta / (1 - theta/T) = {} must be below 1",
                s.gamma
            )));
        }
        Ok(())
    }

    fn shared(&self) -> Shared {
        let theta = self.hp.theta;
        let theta1 = 1.0 - theta / self.hp.horizon as f64;
        let gamma = self.hp.beta / theta1;
        // both differences are formed without cancellation against 1
        let one_minus_gamma = (theta1 - self.hp.beta) / theta1;
        let d = self.dim as f64;
        let g2 = self.g_bound * self.g_bound;
        Shared {
            theta,
            theta1,
            gamma,
            one_minus_gamma,
            one_minus_sqrt_gamma: one_minus_gamma / (1.0 + libm::sqrt(gamma)),
            log_term: libm::log1p(g2 / (self.hp.epsilon * d)) + theta / (1.0 - theta),
        }
    }

    fn c1_with(&self, s: &Shared) -> f64 {
        let b = self.hp.beta;
        let inner = b / (1.0 - b) / libm::sqrt(s.one_minus_gamma * s.theta1) + 1.0;
        inner * inner
    }

    /// `C2` with `ratio` standing in for `(2 − δ_w)(2 − δ_s)/(δ_w δ_s)`.
    fn c2_with(&self, s: &Shared, ratio: f64) -> f64 {
        let h = &self.hp;
        let d = self.dim as f64;
        let oms = s.one_minus_sqrt_gamma;
        let quant = ratio * h.alpha * h.alpha * self.lipschitz / (s.theta * oms * oms);
        let moment = 2.0 * self.c1_with(s) * self.g_bound * h.alpha / libm::sqrt(s.theta);
        d / oms * (quant + moment) * s.log_term
    }

    fn c3_with(&self, s: &Shared) -> f64 {
        let oms2 = s.one_minus_sqrt_gamma * s.one_minus_sqrt_gamma;
        libm::sqrt(self.dim as f64 / (s.theta * oms2 * oms2) * s.log_term)
    }

    fn contract_ratio(&self) -> f64 {
        let (w, s) = (self.contract_w.delta, self.contract_s.delta);
        (2.0 - w) * (2.0 - s) / (w * s)
    }

    fn radius(&self) -> f64 {
        libm::sqrt(self.g_bound * self.g_bound + self.hp.epsilon * self.dim as f64)
    }
}

pub fn constants(inp: &TheoryInputs) -> Result<TheoryReport> {
    inp.validate()?;
    let s = inp.shared();
    let c2 = inp.c2_with(&s, inp.contract_ratio());
    let c4 = inp.c2_with(&s, 9.0);
    Ok(TheoryReport {
        c1: inp.c1_with(&s),
        c2,
        c3: inp.c3_with(&s),
        c4,
        c5: bits_bound(inp, None).ok().map(|b| b.c5),
        t_bound: t_from(inp, inp.target, 4.0, c2),
        t_bound_corollary: t_from(inp, inp.target, 16.0, c4),
        error_floor: floor_with(inp, &s),
    })
}

fn t_from(inp: &TheoryInputs, eps: f64, factor: f64, c: f64) -> f64 {
    let h = &inp.hp;
    let r2 = inp.g_bound * inp.g_bound + h.epsilon * inp.dim as f64;
    let om = 1.0 - h.beta;
    let gap = inp.f_gap + c;
    libm::ceil(factor * r2 / (om * om * h.alpha * h.alpha * eps * eps) * gap * gap)
}

/// Rounds needed to reach `E‖∇F‖² ≤ eps`, rounded up. Returned as `f64`
/// because the bound routinely exceeds every integer type.
pub fn iteration_bound(inp: &TheoryInputs, eps: f64, form: BoundForm) -> Result<f64> {
    inp.validate()?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!(
            "target accuracy must be positive, got {eps}"
        )));
    }
    let s = inp.shared();
    Ok(match form {
        BoundForm::Theorem => t_from(inp, eps, 4.0, inp.c2_with(&s, inp.contract_ratio())),
        BoundForm::Corollary => t_from(inp, eps, 16.0, inp.c2_with(&s, 9.0)),
    })
}

fn floor_with(inp: &TheoryInputs, s: &Shared) -> f64 {
    let (dw, dwp) = (inp.contract_w.delta, inp.contract_w.delta_prime);
    let (ds, dsp) = (inp.contract_s.delta, inp.contract_s.delta_prime);
    let weight = (2.0 - ds) * dsp / ds + (2.0 - ds) * (2.0 - dw) * dwp / (ds * dw);
    weight * 2.0 * inp.lipschitz * inp.radius() * inp.c3_with(s) / (1.0 - inp.hp.beta)
}

/// The additive term quantization leaves in the bound. Exactly zero when
/// both contracts are compressors.
pub fn error_floor(inp: &TheoryInputs) -> Result<f64> {
    inp.validate()?;
    Ok(floor_with(inp, &inp.shared()))
}

/// `C5 = d(1 + ln(ln(α/((1−γ)θ)) + ln(24 L d √(G²+εd) C3 / (ε(1−β))) + 1))`,
/// plus the bits `codec` spends per message at this dimension.
pub fn bits_bound(inp: &TheoryInputs, codec: Option<&QuantizerKind>) -> Result<BitsBound> {
    inp.validate()?;
    let s = inp.shared();
    let h = &inp.hp;
    let d = inp.dim as f64;
    let first = libm::log(h.alpha / (s.one_minus_gamma * s.theta));
    let second = libm::log(
        24.0 * inp.lipschitz * d * inp.radius() * inp.c3_with(&s) / (inp.target * (1.0 - h.beta)),
    );
    let outer = first + second + 1.0;
    if !(outer > 0.0) {
        return Err(Error::invalid(format!(
            "C5 undefined: ln(alpha/((1-gamma)theta)) = {first}, ln(24 L d R C3/(eps(1-beta))) = {second}, \
             their sum plus one is {outer} <= 0"
        )));
    }
    Ok(BitsBound {
        c5: d * (1.0 + libm::log(outer)),
        codec_bits: codec.map(|k| k.encoded_bit_len(inp.dim)),
    })
}
