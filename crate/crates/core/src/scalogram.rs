//! First-order layer: constant-Q scalogram `x1`, its time average `S1`, and
//! the octave/chroma geometry of the log-frequency axis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conv::TimeConvolver;
use crate::error::{invalid, Result};
use crate::filterbank::{fft_frequency, BankKind, Grid, LowpassWindow, WaveletFilterbank};

/// Uniformly sampled real waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return invalid("samples", "signal is empty");
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return invalid("samples", format!("non-finite sample at index {i}"));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return invalid("sample_rate", format!("must be positive, got {sample_rate}"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Octave and chroma of a log-frequency bin, `log λ = j1 + chi1/Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinLabel {
    pub j1: i64,
    pub chi1: usize,
}

/// Log-frequency axis of a scalogram: `λ = 2^(k/Q)` Hz for consecutive `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyAxis {
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "J")]
    pub octaves: usize,
    pub lowest_numerator: i64,
    pub hz: Vec<f64>,
    pub labels: Vec<BinLabel>,
}

impl FrequencyAxis {
    fn from_bank(bank: &WaveletFilterbank) -> Self {
        let q = bank.quality_factor().round() as usize;
        let octaves = bank.octaves().unwrap_or(0);
        let first = bank.members()[0].log_abs_center;
        let lowest_numerator = (first * q as f64).round() as i64;
        let mut axis = Self::new(q, octaves, lowest_numerator);
        axis.hz = bank.centers();
        axis
    }

    /// `q · octaves` bins starting at `2^(lowest_numerator/q)` Hz.
    pub fn new(q: usize, octaves: usize, lowest_numerator: i64) -> Self {
        let n = q * octaves;
        let hz = (0..n)
            .map(|b| ((lowest_numerator + b as i64) as f64 / q as f64).exp2())
            .collect();
        let labels = (0..n)
            .map(|b| {
                let (j1, chi1) = split_numerator(lowest_numerator + b as i64, q);
                BinLabel { j1, chi1 }
            })
            .collect();
        Self {
            q,
            octaves,
            lowest_numerator,
            hz,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hz.is_empty()
    }

    pub fn log_lambda(&self, bin: usize) -> f64 {
        (self.lowest_numerator + bin as i64) as f64 / self.q as f64
    }

    /// Bin whose center is closest to `hz` in log-frequency.
    pub fn nearest_bin(&self, hz: f64) -> usize {
        let target = hz.log2();
        (0..self.len())
            .min_by(|&a, &b| {
                (self.log_lambda(a) - target)
                    .abs()
                    .total_cmp(&(self.log_lambda(b) - target).abs())
            })
            .unwrap_or(0)
    }
}

/// Nonnegative `[frame × bin]` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    values: Vec<f64>,
    frames: usize,
    hop: usize,
    sample_rate: f64,
    axis: FrequencyAxis,
    warnings: Vec<String>,
}

impl Scalogram {
    /// Builds a scalogram from raw values; used for synthetic inputs.
    pub fn from_values(
        values: Vec<f64>,
        frames: usize,
        hop: usize,
        sample_rate: f64,
        axis: FrequencyAxis,
    ) -> Result<Self> {
        if values.len() != frames * axis.len() {
            return Err(crate::SpiralError::Shape(format!(
                "{} values for {frames} frames × {} bins",
                values.len(),
                axis.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("values", "scalogram entries must be finite and nonnegative");
        }
        Ok(Self {
            values,
            frames,
            hop,
            sample_rate,
            axis,
            warnings: Vec::new(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.axis.len()
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn frame_rate(&self) -> f64 {
        self.sample_rate / self.hop as f64
    }

    pub fn axis(&self) -> &FrequencyAxis {
        &self.axis
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn at(&self, frame: usize, bin: usize) -> f64 {
        self.values[frame * self.bins() + bin]
    }

    pub fn frame(&self, frame: usize) -> &[f64] {
        let b = self.bins();
        &self.values[frame * b..(frame + 1) * b]
    }

    pub fn row(&self, bin: usize) -> Vec<f64> {
        (0..self.frames).map(|t| self.at(t, bin)).collect()
    }

    /// Same grid with time-averaged values; see [`average_time`].
    fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            ..self.clone()
        }
    }
}

/// Computes `x1 = |x ∗ ψ_λ|` for every member of a first-order bank,
/// sampled every `hop` samples.
///
/// The signal is reflect padded by at least the support of the lowest
/// filter; shorter signals still run but carry a boundary warning.
pub fn compute_scalogram(x: &Signal, bank: &WaveletFilterbank, hop: usize) -> Result<Scalogram> {
    if bank.kind() != BankKind::FirstOrderTime {
        return invalid("bank", "scalogram needs a first-order time bank");
    }
    let Grid::Time {
        sample_rate,
        fft_size,
    } = bank.grid()
    else {
        return invalid("bank", "first-order bank without a time grid");
    };
    if (sample_rate - x.sample_rate()).abs() > 1e-9 * sample_rate {
        return invalid(
            "sample_rate",
            format!("bank built for {sample_rate} Hz, signal is {} Hz", x.sample_rate()),
        );
    }
    if hop == 0 {
        return invalid("hop", "must be at least 1");
    }
    let lowest = bank.members().iter().map(|m| m.center).fold(f64::INFINITY, f64::min);
    let support = (bank.mother().time_support() / lowest * sample_rate).ceil() as usize;
    let mut warnings = Vec::new();
    if x.len() < support {
        warnings.push(format!(
            "signal ({} samples) is shorter than the longest filter support ({support} samples); \
             coefficients are boundary-dominated",
            x.len()
        ));
    }
    let n_fft = fft_size.max((x.len() + support).next_power_of_two());
    let conv = TimeConvolver::with_fft_size(x.len(), n_fft);
    let spectrum = conv.spectrum_real(x.samples());
    let filters = bank.sampled_filters(n_fft).expect("time grid");
    let frames = x.len().div_ceil(hop);
    let rows: Vec<Vec<f64>> = filters
        .par_iter()
        .map(|f| {
            let y = conv.apply_sparse(&spectrum, f);
            (0..frames).map(|t| y[t * hop].norm()).collect()
        })
        .collect();
    let bins = rows.len();
    let mut values = vec![0.0; frames * bins];
    for (b, row) in rows.iter().enumerate() {
        for (t, &v) in row.iter().enumerate() {
            values[t * bins + b] = v;
        }
    }
    Ok(Scalogram {
        values,
        frames,
        hop,
        sample_rate,
        axis: FrequencyAxis::from_bank(bank),
        warnings,
    })
}

/// Time-averaged scalogram `S1 = x1 ∗ φ_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedScalogram {
    pub grid: Scalogram,
    pub t: f64,
}

/// Averages each log-frequency row with `φ_T`, reflect padded along time.
pub fn average_time(x1: &Scalogram, lowpass: &LowpassWindow) -> Result<AveragedScalogram> {
    let hop_duration = x1.hop() as f64 / x1.sample_rate();
    if lowpass.scale() < hop_duration {
        return invalid(
            "T",
            format!("averaging scale {} s is shorter than one hop ({hop_duration} s)", lowpass.scale()),
        );
    }
    let values = smooth_rows(x1.values(), x1.frames(), x1.bins(), x1.frame_rate(), lowpass);
    Ok(AveragedScalogram {
        grid: x1.with_values(values),
        t: lowpass.scale(),
    })
}

/// Lowpass filters every column of a `[frames × width]` grid along frames.
pub(crate) fn smooth_rows(
    values: &[f64],
    frames: usize,
    width: usize,
    frame_rate: f64,
    lowpass: &LowpassWindow,
) -> Vec<f64> {
    let pad = (2.0 * lowpass.scale() * frame_rate).ceil() as usize;
    let conv = TimeConvolver::new(frames, pad);
    let n = conv.n_fft();
    let transfer: Vec<f64> = (0..n).map(|m| lowpass.transfer(fft_frequency(m, n, frame_rate))).collect();
    let cols: Vec<Vec<f64>> = (0..width)
        .into_par_iter()
        .map(|c| {
            let col: Vec<f64> = (0..frames).map(|t| values[t * width + c]).collect();
            let spec = conv.spectrum_real(&col);
            conv.apply(&spec, &transfer).iter().map(|v| v.re).collect()
        })
        .collect();
    let mut out = vec![0.0; frames * width];
    for (c, col) in cols.iter().enumerate() {
        for (t, &v) in col.iter().enumerate() {
            out[t * width + c] = v;
        }
    }
    out
}

/// Splits a grid log-frequency into octave `j1 = ⌊log λ⌋` and chroma
/// `chi1 ∈ {0, …, Q-1}`.
pub fn split_logfreq(log_lambda1: f64, q: usize) -> Result<(i64, usize)> {
    if q == 0 {
        return invalid("Q", "must be positive");
    }
    let scaled = log_lambda1 * q as f64;
    let k = scaled.round();
    if !log_lambda1.is_finite() || (log_lambda1 - k / q as f64).abs() > 1e-9 {
        return invalid(
            "log_lambda1",
            format!("{log_lambda1} is not a multiple of 1/{q}"),
        );
    }
    Ok(split_numerator(k as i64, q))
}

fn split_numerator(k: i64, q: usize) -> (i64, usize) {
    let q = q as i64;
    (k.div_euclid(q), k.rem_euclid(q) as usize)
}
