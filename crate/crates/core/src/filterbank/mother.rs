//! Analytic Morlet-type mother wavelet designed in the frequency domain.
//!
//! The spectrum lives on a dimensionless axis where the center frequency is
//! `ω = 1`. A Gaussian bump is corrected by a scaled Gaussian at the origin so
//! that `ψ̂(0) = 0` exactly, and negative frequencies are zeroed. The bump
//! center `ξ` is shifted slightly below 1 so that the corrected spectrum still
//! peaks at `ω = 1`, which matters for the low quality factors used by
//! second-order banks.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Points per unit of dimensionless frequency, per unit of Q, in the stored
/// spectrum profile.
const PROFILE_DENSITY: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotherWavelet {
    quality_factor: f64,
    /// Gaussian width in dimensionless frequency.
    sigma: f64,
    /// Gaussian center, slightly below 1 for small Q.
    xi: f64,
    /// Zero-mean correction weight.
    kappa: f64,
    /// Peak normalization.
    norm: f64,
    spectrum: Vec<f64>,
    spectrum_step: f64,
    time_support: f64,
}

impl MotherWavelet {
    pub fn quality_factor(&self) -> f64 {
        self.quality_factor
    }

    /// Spectrum sampled on `[0, 2]`, centered at `ω = 1`.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn spectrum_step(&self) -> f64 {
        self.spectrum_step
    }

    /// Dimensionless frequency of sample `i` of [`MotherWavelet::spectrum`].
    pub fn spectrum_frequency(&self, i: usize) -> f64 {
        i as f64 * self.spectrum_step
    }

    /// Width of the time envelope above 1e-3 of its peak, in dimensionless
    /// time units (divide by the center frequency to get seconds).
    pub fn time_support(&self) -> f64 {
        self.time_support
    }

    /// Closed-form spectrum `ψ̂(ω)`.
    pub fn eval(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let two_var = 2.0 * self.sigma * self.sigma;
        let d = omega - self.xi;
        self.norm * ((-d * d / two_var).exp() - self.kappa * (-omega * omega / two_var).exp())
    }

    /// Measured full width at half power (−3 dB) of the sampled profile.
    pub fn bandwidth_3db(&self) -> f64 {
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let peak = self
            .spectrum
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let crossing = |range: &mut dyn Iterator<Item = usize>| -> f64 {
            let mut prev = peak;
            for i in range {
                if self.spectrum[i] < half {
                    let (a, b) = (self.spectrum[prev], self.spectrum[i]);
                    let frac = (a - half) / (a - b);
                    let (fa, fb) = (self.spectrum_frequency(prev), self.spectrum_frequency(i));
                    return fa + frac * (fb - fa);
                }
                prev = i;
            }
            self.spectrum_frequency(prev)
        };
        let hi = crossing(&mut (peak + 1..self.spectrum.len()));
        let lo = crossing(&mut (0..peak).rev());
        hi - lo
    }

    /// Ratio of spectral mass at `ω < 0` to total mass, on a dense grid.
    pub fn negative_mass_ratio(&self) -> f64 {
        let step = self.spectrum_step;
        let n = (4.0 / step) as usize;
        let mut neg = 0.0;
        let mut total = 0.0;
        for i in 0..=n {
            let w = -2.0 + i as f64 * step;
            let v = self.eval(w).abs();
            total += v;
            if w < 0.0 {
                neg += v;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            neg / total
        }
    }
}

/// Designs the mother wavelet for quality factor `q`, so that the −3 dB
/// bandwidth is `1/q` around `ω = 1`.
pub fn design_mother_wavelet(q: f64) -> Result<MotherWavelet> {
    if !(q.is_finite() && q >= 1.0) {
        return invalid("Q", format!("quality factor must be >= 1, got {q}"));
    }
    let sigma = 1.0 / (2.0 * q * std::f64::consts::LN_2.sqrt());
    let two_var = 2.0 * sigma * sigma;
    let xi = peak_aligned_center(sigma);
    let kappa = (-xi * xi / two_var).exp();
    let raw = |w: f64| {
        let d = w - xi;
        (-d * d / two_var).exp() - kappa * (-w * w / two_var).exp()
    };
    let norm = 1.0 / raw(1.0);

    // Envelope |ψ(t)| ∝ exp(-2π²σ²t²); width above 1e-3.
    let time_sigma = 1.0 / (2.0 * std::f64::consts::PI * sigma);
    let time_support = 2.0 * time_sigma * (2.0 * 1000f64.ln()).sqrt();

    let mut mother = MotherWavelet {
        quality_factor: q,
        sigma,
        xi,
        kappa,
        norm,
        spectrum: Vec::new(),
        spectrum_step: 1.0 / (PROFILE_DENSITY * q),
        time_support,
    };
    let n = (2.0 / mother.spectrum_step).round() as usize;
    mother.spectrum = (0..=n)
        .map(|i| mother.eval(i as f64 * mother.spectrum_step))
        .collect();
    Ok(mother)
}

/// Finds `ξ` such that the corrected bump has zero slope at `ω = 1`.
fn peak_aligned_center(sigma: f64) -> f64 {
    let two_var = 2.0 * sigma * sigma;
    // slope(1) ∝ (1-ξ)·exp(-(1-ξ)²/2σ²) - exp(-(ξ²+1)/2σ²)
    let slope = |xi: f64| {
        let d = 1.0 - xi;
        d * (-d * d / two_var).exp() - (-(xi * xi + 1.0) / two_var).exp()
    };
    if slope(1.0) >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.5, 1.0);
    if slope(lo) <= 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
