use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::filterbank::{BankMember, FilterShape, Sign};

/// A β or γ coordinate: either the lowpass member (`log|·| = -∞`) or a
/// signed wavelet at `±2^log_abs` cycles per octave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Quefrency {
    Lowpass,
    Band { sign: Sign, log_abs: f64 },
}

impl Quefrency {
    pub fn value(&self) -> f64 {
        match *self {
            Quefrency::Lowpass => 0.0,
            Quefrency::Band { sign, log_abs } => sign.value() * log_abs.exp2(),
        }
    }

    pub fn sign(&self) -> Sign {
        match *self {
            Quefrency::Lowpass => Sign::Zero,
            Quefrency::Band { sign, .. } => sign,
        }
    }

    pub fn log_abs(&self) -> f64 {
        match *self {
            Quefrency::Lowpass => f64::NEG_INFINITY,
            Quefrency::Band { log_abs, .. } => log_abs,
        }
    }

    /// From a signed value in cycles per octave; zero maps to the lowpass.
    pub fn from_value(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return invalid("quefrency", format!("must be finite, got {v}"));
        }
        Ok(if v == 0.0 {
            Quefrency::Lowpass
        } else {
            Quefrency::Band {
                sign: Sign::of(v),
                log_abs: v.abs().log2(),
            }
        })
    }

    /// Bank member → coordinate. Identity members have none.
    pub fn from_member(m: &BankMember) -> Option<Self> {
        match m.shape {
            FilterShape::Identity => None,
            FilterShape::Lowpass { .. } => Some(Quefrency::Lowpass),
            FilterShape::Bandpass => Some(Quefrency::Band {
                sign: m.sign,
                log_abs: m.log_abs_center,
            }),
        }
    }

    fn order_key(&self) -> (Sign, f64) {
        (self.sign(), self.log_abs())
    }
}

/// Second-order index `λ2 = (α, β, γ)`. Joint coefficients carry no γ and
/// time coefficients carry neither β nor γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralIndex {
    log_alpha: f64,
    beta: Option<Quefrency>,
    gamma: Option<Quefrency>,
}

/// Log-domain encoding `(log α, log|β|, sign β, log|γ|, sign γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLambda2 {
    pub log_alpha: f64,
    pub beta: Option<(f64, i8)>,
    pub gamma: Option<(f64, i8)>,
}

impl SpiralIndex {
    pub fn new(alpha_hz: f64, beta: Option<Quefrency>, gamma: Option<Quefrency>) -> Result<Self> {
        if !(alpha_hz.is_finite() && alpha_hz > 0.0) {
            return invalid("alpha", format!("must be positive, got {alpha_hz}"));
        }
        Ok(Self {
            log_alpha: alpha_hz.log2(),
            beta,
            gamma,
        })
    }

    pub(crate) fn from_log_alpha(log_alpha: f64, beta: Option<Quefrency>, gamma: Option<Quefrency>) -> Self {
        Self {
            log_alpha,
            beta,
            gamma,
        }
    }

    /// Builds an index from periods: `α⁻¹` in seconds, `β⁻¹` and `γ⁻¹` in
    /// signed octaves.
    pub fn from_periods(alpha_period: f64, beta_period: f64, gamma_period: f64) -> Result<Self> {
        Self::new(
            1.0 / alpha_period,
            Some(Quefrency::from_value(1.0 / beta_period)?),
            Some(Quefrency::from_value(1.0 / gamma_period)?),
        )
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp2()
    }

    pub fn log_alpha(&self) -> f64 {
        self.log_alpha
    }

    pub fn beta(&self) -> Option<Quefrency> {
        self.beta
    }

    pub fn gamma(&self) -> Option<Quefrency> {
        self.gamma
    }

    /// `β` in cycles per octave, 0 when absent.
    pub fn beta_value(&self) -> f64 {
        self.beta.map(|q| q.value()).unwrap_or(0.0)
    }

    /// `γ` in cycles per octave, 0 when absent.
    pub fn gamma_value(&self) -> f64 {
        self.gamma.map(|q| q.value()).unwrap_or(0.0)
    }

    pub fn encode(&self) -> LogLambda2 {
        let enc = |q: Quefrency| (q.log_abs(), q.sign().value() as i8);
        LogLambda2 {
            log_alpha: self.log_alpha,
            beta: self.beta.map(enc),
            gamma: self.gamma.map(enc),
        }
    }

    pub fn decode(code: &LogLambda2) -> Result<Self> {
        let dec = |(log_abs, sign): (f64, i8)| -> Result<Quefrency> {
            match sign {
                0 if log_abs == f64::NEG_INFINITY => Ok(Quefrency::Lowpass),
                -1 | 1 if log_abs.is_finite() => Ok(Quefrency::Band {
                    sign: if sign < 0 { Sign::Negative } else { Sign::Positive },
                    log_abs,
                }),
                _ => invalid(
                    "lambda2",
                    format!("sign {sign} inconsistent with log|·| = {log_abs}"),
                ),
            }
        };
        if !code.log_alpha.is_finite() {
            return invalid("lambda2", "log α must be finite");
        }
        Ok(Self {
            log_alpha: code.log_alpha,
            beta: code.beta.map(dec).transpose()?,
            gamma: code.gamma.map(dec).transpose()?,
        })
    }

    /// Canonical order: `(log α, sign β, log|β|, sign γ, log|γ|)`.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        let key = |q: Option<Quefrency>| q.map(|q| q.order_key());
        let cmp_opt = |a: Option<(Sign, f64)>, b: Option<(Sign, f64)>| match (a, b) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(x), Some(y)) => x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)),
        };
        self.log_alpha
            .total_cmp(&other.log_alpha)
            .then(cmp_opt(key(self.beta), key(other.beta)))
            .then(cmp_opt(key(self.gamma), key(other.gamma)))
    }
}
