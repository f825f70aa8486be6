use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Orientation-preserving time warp `w(t)` with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum WarpSpec {
    Identity,
    /// `w(t) = rate · t`.
    LinearScale { rate: f64 },
    /// `ẇ(t) = base_rate · 2^(velocity · t)`, `w(0) = 0`.
    Exponential { base_rate: f64, velocity: f64 },
}

impl WarpSpec {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            WarpSpec::Identity => t,
            WarpSpec::LinearScale { rate } => rate * t,
            WarpSpec::Exponential { base_rate, velocity } => {
                let k = velocity * LN_2;
                if k == 0.0 {
                    base_rate * t
                } else {
                    base_rate * (k * t).exp_m1() / k
                }
            }
        }
    }

    /// `ẇ(t)`.
    pub fn rate(&self, t: f64) -> f64 {
        match *self {
            WarpSpec::Identity => 1.0,
            WarpSpec::LinearScale { rate } => rate,
            WarpSpec::Exponential { base_rate, velocity } => base_rate * (velocity * t).exp2(),
        }
    }

    /// `ẅ(t)`.
    pub fn acceleration(&self, t: f64) -> f64 {
        match *self {
            WarpSpec::Exponential { velocity, .. } => self.rate(t) * velocity * LN_2,
            _ => 0.0,
        }
    }

    /// Third derivative of `w`.
    pub fn jerk(&self, t: f64) -> f64 {
        match *self {
            WarpSpec::Exponential { velocity, .. } => self.rate(t) * (velocity * LN_2).powi(2),
            _ => 0.0,
        }
    }

    /// `(ẅ/ẇ)/ln 2`: rate of `log2 ẇ` in octaves per second.
    pub fn velocity(&self, t: f64) -> f64 {
        self.acceleration(t) / self.rate(t) / LN_2
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            WarpSpec::Identity => Ok(()),
            WarpSpec::LinearScale { rate } if !(rate.is_finite() && rate > 0.0) => {
                invalid("rate", format!("warp rate must be positive, got {rate}"))
            }
            WarpSpec::Exponential { base_rate, .. } if !(base_rate.is_finite() && base_rate > 0.0) => {
                invalid("base_rate", format!("warp rate must be positive, got {base_rate}"))
            }
            WarpSpec::Exponential { velocity, .. } if !velocity.is_finite() => {
                invalid("velocity", "must be finite")
            }
            _ => Ok(()),
        }
    }
}
