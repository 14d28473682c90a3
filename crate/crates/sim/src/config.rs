//! Run configuration and the algorithm registry.
//!
//! A [`RunConfig`] names an algorithm; the registry turns the name into a
//! [`Wiring`] (local optimizer, quantizer per direction, error feedback per
//! side). Explicit `optimizer`, `uplink`, `downlink` and `error_feedback`
//! fields are only accepted when they agree with the registry, except for
//! [`Algo::Custom`] where all four are required.

use std::fmt;
use std::str::FromStr;

use effadam_core::node::{HyperParams, Schedule};
use effadam_core::quantize::QuantizerKind;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algo {
    OursFull,
    OursCom1,
    OursCom1Err,
    OursCom2,
    OursCom2Err,
    SgdmFull,
    Zheng,
    SgdmTerngrad,
    DadamFull,
    DadamTerngrad,
    ChenApprox,
    Custom,
}

impl Algo {
    pub const ALL: [Algo; 12] = [
        Algo::OursFull,
        Algo::OursCom1,
        Algo::OursCom1Err,
        Algo::OursCom2,
        Algo::OursCom2Err,
        Algo::SgdmFull,
        Algo::Zheng,
        Algo::SgdmTerngrad,
        Algo::DadamFull,
        Algo::DadamTerngrad,
        Algo::ChenApprox,
        Algo::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algo::OursFull => "Ours_full",
            Algo::OursCom1 => "Ours_com1",
            Algo::OursCom1Err => "Ours_com1_err",
            Algo::OursCom2 => "Ours_com2",
            Algo::OursCom2Err => "Ours_com2_err",
            Algo::SgdmFull => "Sgdm_full",
            Algo::Zheng => "Zheng",
            Algo::SgdmTerngrad => "Sgdm_terngrad",
            Algo::DadamFull => "Dadam_full",
            Algo::DadamTerngrad => "Dadam_terngrad",
            Algo::ChenApprox => "ChenApprox",
            Algo::Custom => "Custom",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algo::ALL.iter().map(|a| a.name()).collect();
                SimError::config(format!(
                    "unknown algorithm {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl TryFrom<String> for Algo {
    type Error = SimError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Algo> for String {
    fn from(a: Algo) -> Self {
        a.name().to_string()
    }
}

macro_rules! string_enum {
    ($name:ident, $what:literal, { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn name(self) -> &'static str {
                match self { $($name::$variant => $text),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = SimError;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(SimError::config(format!(
                        concat!("unknown ", $what, " {:?}; expected one of {}"),
                        s,
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }

        impl TryFrom<String> for $name {
            type Error = SimError;

            fn try_from(s: String) -> Result<Self> {
                s.parse()
            }
        }

        impl From<$name> for String {
            fn from(v: $name) -> Self {
                v.name().to_string()
            }
        }
    };
}

string_enum!(ScheduleChoice, "schedule", {
    Constant => "constant",
    Horizon => "horizon",
});

string_enum!(OptimizerChoice, "optimizer", {
    Adam => "adam",
    Sgdm => "sgdm",
});

string_enum!(QuantizerChoice, "quantizer", {
    Identity => "identity",
    ExactIdentity => "exact_identity",
    NormUniform => "norm_uniform",
    LogGrid => "log_grid",
    Terngrad => "terngrad",
    TopK => "top_k",
});

impl From<ScheduleChoice> for Schedule {
    fn from(s: ScheduleChoice) -> Self {
        match s {
            ScheduleChoice::Constant => Schedule::Constant,
            ScheduleChoice::Horizon => Schedule::Horizon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Adam,
    Sgdm { momentum: f64 },
}

/// The node-level realization of an algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wiring {
    pub optimizer: Optimizer,
    pub uplink: QuantizerKind,
    pub downlink: QuantizerKind,
    pub worker_error_feedback: bool,
    pub server_error_feedback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Defaults to a label built from the algorithm, seeds and step size.
    pub run_id: Option<String>,
    pub algo: Algo,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub schedule: ScheduleChoice,
    pub rounds: u64,
    pub workers: usize,
    pub dim: usize,
    pub noise_variance: f64,
    pub case_seed: u64,
    pub noise_seed: u64,
    /// SGDM momentum coefficient.
    pub momentum: f64,
    /// `k` of the norm-scaled uniform grid.
    pub norm_bits: u32,
    pub log_min_exp: i32,
    pub log_max_exp: i32,
    pub topk_fraction: f64,
    pub optimizer: Option<OptimizerChoice>,
    pub uplink: Option<QuantizerChoice>,
    pub downlink: Option<QuantizerChoice>,
    pub error_feedback: Option<bool>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run_id: None,
            algo: Algo::OursCom1,
            alpha: 1e-4,
            beta: 0.9,
            theta: 0.99,
            epsilon: 1e-8,
            schedule: ScheduleChoice::Constant,
            rounds: 5000,
            workers: 10,
            dim: 500,
            noise_variance: 0.1,
            case_seed: 1,
            noise_seed: 1,
            momentum: 0.9,
            norm_bits: 1,
            log_min_exp: -17,
            log_max_exp: -11,
            topk_fraction: 0.5,
            optimizer: None,
            uplink: None,
            downlink: None,
            error_feedback: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain data serializes")
    }

    pub fn run_id(&self) -> String {
        match &self.run_id {
            Some(id) => id.clone(),
            None => format!(
                "{}-c{}-n{}-a{:e}",
                self.algo, self.case_seed, self.noise_seed, self.alpha
            ),
        }
    }

    /// The hyperparameters nodes run with. The horizon is `rounds`
    /// (at least one, so that a zero-round config still validates).
    pub fn hyper_params(&self) -> Result<HyperParams> {
        Ok(HyperParams::new(
            self.alpha,
            self.beta,
            self.theta,
            self.epsilon,
            self.rounds.max(1),
            self.schedule.into(),
        )?)
    }

    pub fn quantizer(&self, choice: QuantizerChoice) -> QuantizerKind {
        match choice {
            QuantizerChoice::Identity => QuantizerKind::Identity,
            QuantizerChoice::ExactIdentity => QuantizerKind::ExactIdentity,
            QuantizerChoice::NormUniform => QuantizerKind::NormUniform { k: self.norm_bits },
            QuantizerChoice::LogGrid => QuantizerKind::LogGrid {
                min_exp: self.log_min_exp,
                max_exp: self.log_max_exp,
            },
            QuantizerChoice::Terngrad => QuantizerKind::Terngrad,
            QuantizerChoice::TopK => QuantizerKind::TopK {
                fraction: self.topk_fraction,
            },
        }
    }

    fn optimizer_of(&self, choice: OptimizerChoice) -> Optimizer {
        match choice {
            OptimizerChoice::Adam => Optimizer::Adam,
            OptimizerChoice::Sgdm => Optimizer::Sgdm {
                momentum: self.momentum,
            },
        }
    }

    /// `(optimizer, uplink, downlink, worker EF, server EF)` for a named algorithm.
    pub fn registry(
        algo: Algo,
    ) -> Option<(
        OptimizerChoice,
        QuantizerChoice,
        QuantizerChoice,
        bool,
        bool,
    )> {
        use OptimizerChoice::{Adam, Sgdm};
        use QuantizerChoice::{Identity, LogGrid, NormUniform, Terngrad};
        Some(match algo {
            Algo::OursFull => (Adam, Identity, Identity, false, false),
            Algo::OursCom1 => (Adam, NormUniform, NormUniform, true, true),
            Algo::OursCom1Err => (Adam, NormUniform, NormUniform, false, false),
            Algo::OursCom2 => (Adam, LogGrid, LogGrid, true, true),
            Algo::OursCom2Err => (Adam, LogGrid, LogGrid, false, false),
            Algo::SgdmFull => (Sgdm, Identity, Identity, false, false),
            Algo::Zheng => (Sgdm, NormUniform, NormUniform, true, true),
            Algo::SgdmTerngrad => (Sgdm, Terngrad, Terngrad, false, false),
            Algo::DadamFull => (Adam, Identity, Identity, false, false),
            Algo::DadamTerngrad => (Adam, Terngrad, Terngrad, false, false),
            Algo::ChenApprox => (Adam, NormUniform, LogGrid, true, false),
            Algo::Custom => return None,
        })
    }

    /// Resolves the algorithm to node wiring, rejecting inconsistent overrides.
    pub fn wiring(&self) -> Result<Wiring> {
        let (opt, up, down, wef, sef) = match Self::registry(self.algo) {
            Some(entry) => {
                let (opt, up, down, wef, sef) = entry;
                let clash = |field: &str, given: String, expected: String| {
                    SimError::config(format!(
                        "{} uses {field} = {expected}, but the config sets {given}",
                        self.algo
                    ))
                };
                if let Some(o) = self.optimizer.filter(|o| *o != opt) {
                    return Err(clash("optimizer", o.to_string(), opt.to_string()));
                }
                if let Some(q) = self.uplink.filter(|q| *q != up) {
                    return Err(clash("uplink", q.to_string(), up.to_string()));
                }
                if let Some(q) = self.downlink.filter(|q| *q != down) {
                    return Err(clash("downlink", q.to_string(), down.to_string()));
                }
                if let Some(ef) = self.error_feedback {
                    if ef != wef || ef != sef {
                        return Err(clash(
                            "error_feedback",
                            ef.to_string(),
                            format!("worker {wef} / server {sef}"),
                        ));
                    }
                }
                entry
            }
            None => {
                let missing = |f: &str| SimError::config(format!("Custom requires `{f}`"));
                let ef = self
                    .error_feedback
                    .ok_or_else(|| missing("error_feedback"))?;
                (
                    self.optimizer.ok_or_else(|| missing("optimizer"))?,
                    self.uplink.ok_or_else(|| missing("uplink"))?,
                    self.downlink.ok_or_else(|| missing("downlink"))?,
                    ef,
                    ef,
                )
            }
        };
        let wiring = Wiring {
            optimizer: self.optimizer_of(opt),
            uplink: self.quantizer(up),
            downlink: self.quantizer(down),
            worker_error_feedback: wef,
            server_error_feedback: sef,
        };
        wiring.uplink.validate()?;
        wiring.downlink.validate()?;
        Ok(wiring)
    }

    /// Checks everything that can be checked before a round runs.
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(SimError::config("workers must be at least 1"));
        }
        if self.dim == 0 {
            return Err(SimError::config("dim must be at least 1"));
        }
        if !(self.noise_variance >= 0.0) || !self.noise_variance.is_finite() {
            return Err(SimError::config(
                "noise_variance must be finite and nonnegative",
            ));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(SimError::config("momentum must lie in [0, 1)"));
        }
        self.hyper_params()?;
        self.wiring()?;
        Ok(())
    }
}
