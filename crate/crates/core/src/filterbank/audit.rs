//! Frame-quality audits for time-domain banks.

use super::bank::{Grid, WaveletFilterbank};
use super::lowpass::LowpassWindow;
use crate::error::{invalid, Result};

#[derive(Debug, Clone)]
pub struct LittlewoodPaley {
    /// Frequencies in Hz, nonnegative half of the bank's FFT grid.
    pub frequencies: Vec<f64>,
    /// `|φ̂|² + Σ|ψ̂_λ|²` before renormalization.
    pub raw: Vec<f64>,
    /// `raw` scaled so that its maximum is 1.
    pub profile: Vec<f64>,
    /// Audited band between the lowest and highest centers.
    pub passband: (f64, f64),
    pub passband_min: f64,
}

pub fn littlewood_paley(bank: &WaveletFilterbank, lowpass: &LowpassWindow) -> Result<LittlewoodPaley> {
    let Grid::Time {
        sample_rate,
        fft_size,
    } = bank.grid()
    else {
        return invalid("bank", "Littlewood-Paley audit needs a time-domain bank on a fixed grid");
    };
    if bank.is_empty() {
        return invalid("J", "empty bank has no passband");
    }
    let filters = bank.sampled_filters(fft_size).expect("time grid");
    let half = fft_size / 2;
    let df = sample_rate / fft_size as f64;
    let frequencies: Vec<f64> = (0..=half).map(|m| m as f64 * df).collect();
    let mut raw: Vec<f64> = frequencies.iter().map(|&f| lowpass.transfer(f).powi(2)).collect();
    for f in filters.iter() {
        for (i, v) in f.values.iter().enumerate() {
            raw[f.first_bin + i] += v * v;
        }
    }
    let peak = raw.iter().cloned().fold(0.0, f64::max);
    let profile: Vec<f64> = raw.iter().map(|v| v / peak).collect();

    let centers = bank.centers();
    let passband = (
        centers.iter().cloned().fold(f64::INFINITY, f64::min),
        centers.iter().cloned().fold(0.0, f64::max),
    );
    let passband_min = frequencies
        .iter()
        .zip(&profile)
        .filter(|(&f, _)| f >= passband.0 && f <= passband.1)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    Ok(LittlewoodPaley {
        frequencies,
        raw,
        profile,
        passband,
        passband_min,
    })
}

/// Largest relative error, over adjacent member pairs, between the sampled
/// spectrum of the upper member and the lower member's sampled spectrum
/// resampled at dilated frequencies (4-point cubic interpolation).
pub fn dilation_covariance_error(bank: &WaveletFilterbank) -> Option<f64> {
    let Grid::Time { fft_size, .. } = bank.grid() else {
        return None;
    };
    let filters = bank.sampled_filters(fft_size)?;
    let dense = |i: usize| -> Vec<f64> { (0..=fft_size / 2).map(|b| filters[i].at(b)).collect() };
    let members = bank.members();
    let mut worst: f64 = 0.0;
    for i in 0..members.len().saturating_sub(1) {
        let ratio = members[i].center / members[i + 1].center;
        let lower = dense(i);
        let upper = &filters[i + 1];
        let peak = upper.values.iter().cloned().fold(0.0, f64::max);
        for (j, &v) in upper.values.iter().enumerate() {
            let pos = (upper.first_bin + j) as f64 * ratio;
            let err = (cubic_at(&lower, pos) - v).abs() / peak;
            worst = worst.max(err);
        }
    }
    Some(worst)
}

fn cubic_at(y: &[f64], x: f64) -> f64 {
    let i = x.floor() as isize;
    let t = x - i as f64;
    let get = |k: isize| -> f64 {
        if k < 0 || k as usize >= y.len() {
            0.0
        } else {
            y[k as usize]
        }
    };
    let (p0, p1, p2, p3) = (get(i - 1), get(i), get(i + 1), get(i + 2));
    // Lagrange weights on nodes -1, 0, 1, 2.
    let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
}
