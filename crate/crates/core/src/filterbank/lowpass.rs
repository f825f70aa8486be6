use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Gaussian averaging window `φ_T` with unit DC gain.
///
/// The standard deviation is `T/4`, so `±2σ` spans `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowpassWindow {
    t: f64,
}

impl LowpassWindow {
    pub fn new(t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return invalid("T", format!("averaging scale must be positive, got {t}"));
        }
        Ok(Self { t })
    }

    /// Averaging scale in seconds.
    pub fn scale(&self) -> f64 {
        self.t
    }

    pub fn sigma(&self) -> f64 {
        self.t / 4.0
    }

    /// Transfer function at `f` Hz. Exactly 1 at DC.
    pub fn transfer(&self, f: f64) -> f64 {
        let s = self.sigma();
        (-2.0 * std::f64::consts::PI.powi(2) * s * s * f * f).exp()
    }

    /// Impulse response sampled at `sample_rate`, centered, truncated at
    /// `±T` and normalized to unit sum.
    pub fn impulse_response(&self, sample_rate: f64) -> Vec<f64> {
        let half = (self.t * sample_rate).ceil() as i64;
        let s = self.sigma() * sample_rate;
        let mut taps: Vec<f64> = (-half..=half)
            .map(|n| (-(n as f64).powi(2) / (2.0 * s * s)).exp())
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|v| *v /= sum);
        taps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_dc_gain() {
        let w = LowpassWindow::new(0.5).unwrap();
        assert_eq!(w.transfer(0.0), 1.0);
        let sum: f64 = w.impulse_response(100.0).iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn support_matches_scale() {
        let w = LowpassWindow::new(0.25).unwrap();
        let taps = w.impulse_response(1000.0);
        let peak = taps[taps.len() / 2];
        // ±2σ point sits at exp(-2) of the peak.
        let at_edge = taps[taps.len() / 2 + 125];
        assert!((at_edge / peak - (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_scale() {
        assert!(LowpassWindow::new(0.0).is_err());
        assert!(LowpassWindow::new(-1.0).is_err());
    }
}
