//! Warped source-filter model: synthesis, assumption checks, ridge-plane
//! prediction and fitting.

mod assumptions;
mod ridge;
mod synth;
mod warp;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use assumptions::{check_assumptions, AssumptionReport, RATIO_LIMIT};
pub use ridge::{
    closed_form_x2, fit_ridge_plane, predicted_plane, quadrant_argmax, ClosedForm, PlaneFit, Quadrant,
    RidgePlane,
};
pub use synth::{synthesize, Synthesis};
pub use warp::WarpSpec;

/// Spectral magnitude `|ĥ(ω)|` of the filter, `ω` in Hz before warping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum Envelope {
    Flat,
    /// `exp(-ω² / 2ω_c²)`.
    Gaussian { cutoff: f64 },
}

impl Envelope {
    pub fn magnitude(&self, omega: f64) -> f64 {
        match *self {
            Envelope::Flat => 1.0,
            Envelope::Gaussian { cutoff } => (-omega * omega / (2.0 * cutoff * cutoff)).exp(),
        }
    }

    /// `sup |d log|ĥ| / dω|` over `[lo, hi]`.
    pub fn log_slope_bound(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            Envelope::Flat => 0.0,
            Envelope::Gaussian { cutoff } => lo.abs().max(hi.abs()) / (cutoff * cutoff),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFilterSpec {
    /// `θ`: pitch warp; `θ̇` is the fundamental in Hz.
    pub source_warp: WarpSpec,
    /// `η`: spectral-envelope warp.
    pub filter_warp: WarpSpec,
    pub envelope: Envelope,
    /// Highest harmonic index `P`.
    pub partial_count: usize,
    /// Seed for random partial phases; all phases are zero when absent.
    #[serde(default)]
    pub phase_seed: Option<u64>,
}

impl SourceFilterSpec {
    pub fn validate(&self) -> Result<()> {
        self.source_warp.validate()?;
        self.filter_warp.validate()?;
        if self.partial_count == 0 {
            return invalid("partial_count", "need at least one partial");
        }
        if let Envelope::Gaussian { cutoff } = self.envelope {
            if !(cutoff.is_finite() && cutoff > 0.0) {
                return invalid("cutoff", format!("must be positive, got {cutoff}"));
            }
        }
        Ok(())
    }

    /// Amplitude of partial `p` at time `t`: `|ĥ(p θ̇ / η̇)|`.
    pub fn partial_amplitude(&self, p: usize, t: f64) -> f64 {
        self.envelope
            .magnitude(p as f64 * self.source_warp.rate(t) / self.filter_warp.rate(t))
    }
}
