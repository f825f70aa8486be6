use std::borrow::Cow;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::lowpass::LowpassWindow;
use super::mother::{design_mother_wavelet, MotherWavelet};
use crate::conv::AxisKernel;
use crate::error::{invalid, Result};

/// Kernel taps below this fraction of the largest tap are dropped.
const TAP_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BankKind {
    FirstOrderTime,
    AlphaTime,
    BetaLogfreq,
    GammaOctave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "-")]
    Negative,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "+")]
    Positive,
}

impl Sign {
    pub fn of(x: f64) -> Self {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Zero => 0.0,
            Sign::Positive => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum FilterShape {
    Bandpass,
    /// Hann window whose support spans `support` axis units.
    Lowpass { support: f64 },
    /// Dirac along the axis. Only built by [`WaveletFilterbank::identity`].
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BankMember {
    /// Signed center frequency in axis units; 0 for lowpass and identity.
    pub center: f64,
    /// `log2 |center|`, exact on the construction grid; `-inf` when zero.
    pub log_abs_center: f64,
    pub sign: Sign,
    pub shape: FilterShape,
}

impl BankMember {
    fn bandpass(log_abs: f64, sign: Sign) -> Self {
        Self {
            center: sign.value() * log_abs.exp2(),
            log_abs_center: log_abs,
            sign,
            shape: FilterShape::Bandpass,
        }
    }

    fn flat(shape: FilterShape) -> Self {
        Self {
            center: 0.0,
            log_abs_center: f64::NEG_INFINITY,
            sign: Sign::Zero,
            shape,
        }
    }

    pub fn is_bandpass(&self) -> bool {
        matches!(self.shape, FilterShape::Bandpass)
    }
}

/// The axis a bank convolves over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "axis")]
pub enum Grid {
    /// Time axis sampled on a fixed FFT grid.
    Time { sample_rate: f64, fft_size: usize },
    /// Time axis whose rate is fixed only when the bank is applied.
    Frames,
    /// Rectilinear log-frequency, `bins_per_octave` samples per octave.
    LogFrequency { bins_per_octave: usize },
    /// Octave index, one sample per octave.
    Octave,
}

impl Grid {
    /// Axis units per sample for the discrete axes.
    fn spacing(&self) -> Option<f64> {
        match *self {
            Grid::LogFrequency { bins_per_octave } => Some(1.0 / bins_per_octave as f64),
            Grid::Octave => Some(1.0),
            _ => None,
        }
    }
}

/// Transfer function on bins `first_bin..first_bin + values.len()` of the
/// nonnegative half of an FFT grid; zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFilter {
    pub first_bin: usize,
    pub values: Vec<f64>,
}

impl SampledFilter {
    pub fn at(&self, bin: usize) -> f64 {
        bin.checked_sub(self.first_bin)
            .and_then(|i| self.values.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct WaveletFilterbank {
    kind: BankKind,
    q: f64,
    mother: MotherWavelet,
    members: Vec<BankMember>,
    grid: Grid,
    gain: f64,
    octaves: Option<usize>,
    sampled: Option<Arc<Vec<SampledFilter>>>,
}

impl WaveletFilterbank {
    pub fn kind(&self) -> BankKind {
        self.kind
    }

    pub fn quality_factor(&self) -> f64 {
        self.q
    }

    pub fn mother(&self) -> &MotherWavelet {
        &self.mother
    }

    pub fn members(&self) -> &[BankMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Global scale applied on top of per-filter peak normalization.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Number of octaves spanned (first-order and γ banks).
    pub fn octaves(&self) -> Option<usize> {
        self.octaves
    }

    pub fn centers(&self) -> Vec<f64> {
        self.members.iter().map(|m| m.center).collect()
    }

    /// Continuous transfer function of member `i` at frequency `f` (axis units).
    ///
    /// For lowpass members this is the DTFT of the untruncated window.
    pub fn response(&self, i: usize, f: f64) -> f64 {
        let m = &self.members[i];
        match m.shape {
            FilterShape::Bandpass => self.gain * self.mother.eval(f / m.center),
            FilterShape::Identity => 1.0,
            FilterShape::Lowpass { support } => {
                let d = self.grid.spacing().unwrap_or(1.0);
                let taps = hann_taps(support, d, usize::MAX);
                let sum: f64 = taps.iter().map(|(_, w)| w).sum();
                taps.iter()
                    .map(|&(k, w)| w * (2.0 * std::f64::consts::PI * f * k as f64 * d).cos())
                    .sum::<f64>()
                    / sum
            }
        }
    }

    /// Sampled transfer functions on the bank's own FFT grid, or on an
    /// `fft_size`-point grid at the same sample rate.
    pub fn sampled_filters(&self, fft_size: usize) -> Option<Cow<'_, [SampledFilter]>> {
        let Grid::Time {
            sample_rate,
            fft_size: own,
        } = self.grid
        else {
            return None;
        };
        match &self.sampled {
            Some(s) if own == fft_size => Some(Cow::Borrowed(s.as_slice())),
            _ => Some(Cow::Owned(self.sample_time_filters(sample_rate, fft_size))),
        }
    }

    /// Transfer function of member `i` on an `n`-point FFT grid with rate
    /// `rate`, full length (negative frequencies in the upper half).
    pub fn transfer_on_grid(&self, i: usize, n: usize, rate: f64) -> Vec<f64> {
        (0..n)
            .map(|m| self.response(i, fft_frequency(m, n, rate)))
            .collect()
    }

    fn sample_time_filters(&self, sample_rate: f64, fft_size: usize) -> Vec<SampledFilter> {
        let df = sample_rate / fft_size as f64;
        let half = fft_size / 2;
        self.members
            .iter()
            .enumerate()
            .map(|(i, m)| {
                // The Gaussian is below 1e-16 beyond 9σ; σ = center/(2Q√ln2).
                let sigma = m.center / (2.0 * self.q * std::f64::consts::LN_2.sqrt());
                let lo = ((m.center - 9.0 * sigma).max(0.0) / df).floor() as usize;
                let hi = (((m.center + 9.0 * sigma) / df).ceil() as usize).min(half);
                let values = (lo..=hi).map(|b| self.response(i, b as f64 * df)).collect();
                SampledFilter {
                    first_bin: lo,
                    values,
                }
            })
            .collect()
    }

    /// Discrete kernel of member `i` for zero-padded convolution along a
    /// `len`-sample log-frequency or octave axis. Covers every offset that
    /// can reach inside the axis.
    pub fn axis_kernel(&self, i: usize, len: usize) -> AxisKernel {
        let m = &self.members[i];
        let d = self.grid.spacing().expect("axis_kernel needs a discrete axis");
        match m.shape {
            FilterShape::Identity => AxisKernel::identity(),
            FilterShape::Lowpass { support } => {
                let taps = hann_taps(support, d, len.saturating_sub(1));
                let sum: f64 = taps.iter().map(|(_, w)| w).sum();
                let min_offset = taps.first().map(|t| t.0).unwrap_or(0);
                AxisKernel::new(
                    min_offset,
                    taps.iter().map(|(_, w)| Complex64::new(w / sum, 0.0)).collect(),
                )
            }
            FilterShape::Bandpass => {
                let reach = len.max(1) as isize - 1;
                let l = (8 * len).max(1024).next_power_of_two();
                let period = l as f64 * d;
                let mut spec: Vec<Complex64> = (0..l)
                    .map(|k| {
                        let f = if k <= l / 2 { k as f64 } else { k as f64 - l as f64 } / period;
                        Complex64::new(self.response(i, f), 0.0)
                    })
                    .collect();
                FftPlanner::new().plan_fft_inverse(l).process(&mut spec);
                let scale = 1.0 / l as f64;
                let mut taps: Vec<(isize, Complex64)> = (-reach..=reach)
                    .map(|k| (k, spec[k.rem_euclid(l as isize) as usize] * scale))
                    .collect();
                let peak = taps.iter().map(|t| t.1.norm()).fold(0.0, f64::max);
                let keep = |t: &(isize, Complex64)| t.1.norm() >= TAP_FLOOR * peak;
                let first = taps.iter().position(keep).unwrap_or(0);
                let last = taps.iter().rposition(keep).unwrap_or(0);
                taps.truncate(last + 1);
                let min_offset = taps[first].0;
                let mut coeffs: Vec<Complex64> = taps.drain(first..).map(|t| t.1).collect();
                // Truncation leaves a small mean; remove it in proportion to
                // the tap envelope so the kernel stays exactly zero-mean.
                let mean: Complex64 = coeffs.iter().sum();
                let mass: f64 = coeffs.iter().map(|c| c.norm()).sum();
                for c in coeffs.iter_mut() {
                    *c -= mean * (c.norm() / mass);
                }
                AxisKernel::new(min_offset, coeffs)
            }
        }
    }

    /// A bank holding a single identity member along `kind`'s axis.
    pub fn identity(kind: BankKind, grid: Grid) -> Self {
        Self {
            kind,
            q: 1.0,
            mother: design_mother_wavelet(1.0).expect("Q = 1 is valid"),
            members: vec![BankMember::flat(FilterShape::Identity)],
            grid,
            gain: 1.0,
            octaves: None,
            sampled: None,
        }
    }

    /// Parameter document for this bank.
    pub fn params(&self, lowpass: Option<&LowpassWindow>) -> FilterbankParams {
        let (sample_rate, fft_size) = match self.grid {
            Grid::Time {
                sample_rate,
                fft_size,
            } => (Some(sample_rate), Some(fft_size)),
            _ => (None, None),
        };
        FilterbankParams {
            kind: self.kind,
            q: self.q,
            j: self.octaves,
            sample_rate,
            fft_size,
            centers: self.centers(),
            signs: self.members.iter().map(|m| m.sign).collect(),
            t: lowpass.map(|w| w.scale()),
        }
    }
}

/// Serialized filterbank parameters. Field names follow
/// `docs/filterbank.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterbankParams {
    pub kind: BankKind,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "J")]
    pub j: Option<usize>,
    pub sample_rate: Option<f64>,
    pub fft_size: Option<usize>,
    pub centers: Vec<f64>,
    pub signs: Vec<Sign>,
    #[serde(rename = "T")]
    pub t: Option<f64>,
}

/// Frequency of bin `m` on an `n`-point FFT grid at `rate` samples per unit.
/// The Nyquist bin counts as positive.
pub fn fft_frequency(m: usize, n: usize, rate: f64) -> f64 {
    let k = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
    k * rate / n as f64
}

/// Hann window `cos²(πu/L)` on `|u| < L/2`, sampled at integer offsets of
/// spacing `d` and limited to `|k| <= reach`. Unnormalized.
fn hann_taps(support: f64, d: f64, reach: usize) -> Vec<(isize, f64)> {
    let half = support / 2.0;
    let kmax = ((half / d).ceil() as usize).min(reach) as isize;
    (-kmax..=kmax)
        .filter_map(|k| {
            let u = k as f64 * d;
            (u.abs() < half).then(|| (k, (std::f64::consts::PI * u / support).cos().powi(2)))
        })
        .collect()
}

/// Log-frequency layout of a first-order bank: centers `2^(k/Q)` Hz for
/// consecutive integers `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderLayout {
    pub q: usize,
    pub octaves: usize,
    /// Numerator of the lowest center's binary log.
    pub lowest_numerator: i64,
}

impl FirstOrderLayout {
    pub fn bins(&self) -> usize {
        self.q * self.octaves
    }

    pub fn log_center(&self, bin: usize) -> f64 {
        (self.lowest_numerator + bin as i64) as f64 / self.q as f64
    }
}

/// Builds the constant-Q bank: `J·Q` filters at `λ = 2^(k/Q)` Hz, the top
/// one being the highest grid point below Nyquist. Filters are peak
/// normalized, then the whole bank is scaled so that the Littlewood-Paley
/// sum peaks at 1.
pub fn build_first_order_bank(
    mother: &MotherWavelet,
    q: usize,
    octaves: usize,
    sample_rate: f64,
    fft_size: usize,
) -> Result<WaveletFilterbank> {
    if q == 0 || octaves == 0 {
        return invalid("J·Q", format!("need at least one filter, got J={octaves} Q={q}"));
    }
    if (mother.quality_factor() - q as f64).abs() > 1e-12 {
        return invalid(
            "Q",
            format!("mother wavelet has Q={}, bank asks Q={q}", mother.quality_factor()),
        );
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return invalid("sample_rate", format!("must be positive, got {sample_rate}"));
    }
    if fft_size < 2 {
        return invalid("fft_size", "must be at least 2");
    }
    let layout = first_order_layout(q, octaves, sample_rate)?;
    let lowest = layout.log_center(0).exp2();
    let resolvable = sample_rate / fft_size as f64;
    if lowest < resolvable {
        return invalid(
            "J",
            format!(
                "lowest center {lowest:.3} Hz is below the {resolvable:.3} Hz resolution of a {fft_size}-point grid"
            ),
        );
    }
    let members = (0..layout.bins())
        .map(|b| BankMember::bandpass(layout.log_center(b), Sign::Positive))
        .collect();
    let mut bank = WaveletFilterbank {
        kind: BankKind::FirstOrderTime,
        q: q as f64,
        mother: mother.clone(),
        members,
        grid: Grid::Time {
            sample_rate,
            fft_size,
        },
        gain: 1.0,
        octaves: Some(octaves),
        sampled: None,
    };
    let sampled = bank.sample_time_filters(sample_rate, fft_size);
    let mut lp = vec![0.0f64; fft_size / 2 + 1];
    for f in &sampled {
        for (i, v) in f.values.iter().enumerate() {
            lp[f.first_bin + i] += v * v;
        }
    }
    let peak = lp.iter().cloned().fold(0.0, f64::max);
    bank.gain = 1.0 / peak.sqrt();
    bank.sampled = Some(Arc::new(
        sampled
            .into_iter()
            .map(|mut f| {
                f.values.iter_mut().for_each(|v| *v *= bank.gain);
                f
            })
            .collect(),
    ));
    Ok(bank)
}

/// Grid layout shared by [`build_first_order_bank`] and the scalogram.
pub fn first_order_layout(q: usize, octaves: usize, sample_rate: f64) -> Result<FirstOrderLayout> {
    let nyquist = sample_rate / 2.0;
    let mut top = (q as f64 * nyquist.log2()).floor() as i64;
    while (top as f64 / q as f64).exp2() >= nyquist {
        top -= 1;
    }
    let lowest_numerator = top - (q * octaves) as i64 + 1;
    Ok(FirstOrderLayout {
        q,
        octaves,
        lowest_numerator,
    })
}

/// Smallest power-of-two FFT size holding `len` samples plus reflect padding
/// for the longest filter of a `(q, octaves)` bank.
pub fn fft_size_for(len: usize, q: usize, octaves: usize, sample_rate: f64) -> Result<usize> {
    let layout = first_order_layout(q, octaves, sample_rate)?;
    let mother = design_mother_wavelet(q as f64)?;
    let lowest = layout.log_center(0).exp2();
    let support = (mother.time_support() / lowest * sample_rate).ceil() as usize;
    Ok((len + support).next_power_of_two())
}

/// Configuration of the second-order banks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralBankConfig {
    /// Modulation frequency range in Hz.
    pub alpha_range: (f64, f64),
    /// `|β|` range in cycles per octave.
    pub beta_range: (f64, f64),
    /// `|γ|` range in cycles per octave.
    pub gamma_range: (f64, f64),
    pub q2: u32,
    /// First-order bins per octave (the β axis sampling).
    pub bins_per_octave: usize,
    /// Octaves spanned by the analyzed scalogram (the γ axis length).
    pub octaves: usize,
}

#[derive(Debug, Clone)]
pub struct SpiralBanks {
    pub alpha: WaveletFilterbank,
    pub beta: WaveletFilterbank,
    pub gamma: WaveletFilterbank,
}

/// Support of the `β = 0` lowpass, in octaves.
pub const BETA_LOWPASS_SUPPORT: f64 = 1.0;
/// Support of the `γ = 0` lowpass, in octaves.
pub const GAMMA_LOWPASS_SUPPORT: f64 = 6.0;

/// Builds the α (time), β (log-frequency) and γ (octave) banks.
///
/// Centers sit on the absolute grid `2^(k/Q2)`. β and γ carry both sign
/// branches around a single lowpass member; α has no lowpass.
pub fn build_spiral_banks(config: &SpiralBankConfig) -> Result<SpiralBanks> {
    let q2 = config.q2;
    if !(q2 == 1 || q2 == 2) {
        return invalid("Q2", format!("second-order quality factor must be 1 or 2, got {q2}"));
    }
    if config.bins_per_octave == 0 {
        return invalid("bins_per_octave", "must be positive");
    }
    if config.octaves < 2 {
        return invalid(
            "octaves",
            format!(
                "octave convolution needs at least 2 octaves, got {}",
                config.octaves
            ),
        );
    }
    let mother = design_mother_wavelet(q2 as f64)?;
    let alpha_logs = grid_logs("alpha_range", config.alpha_range, q2)?;
    let beta_logs = grid_logs("beta_range", config.beta_range, q2)?;
    let gamma_logs = grid_logs("gamma_range", config.gamma_range, q2)?;

    let beta_nyquist = config.bins_per_octave as f64 / 2.0;
    if config.beta_range.1 > beta_nyquist {
        return invalid(
            "beta_range",
            format!("|β| up to {} exceeds the axis Nyquist {beta_nyquist}", config.beta_range.1),
        );
    }
    if config.gamma_range.1 > 0.5 {
        return invalid(
            "gamma_range",
            format!("|γ| up to {} exceeds the octave-axis Nyquist 0.5", config.gamma_range.1),
        );
    }

    let alpha = WaveletFilterbank {
        kind: BankKind::AlphaTime,
        q: q2 as f64,
        mother: mother.clone(),
        members: alpha_logs
            .iter()
            .map(|&l| BankMember::bandpass(l, Sign::Positive))
            .collect(),
        grid: Grid::Frames,
        gain: 1.0,
        octaves: None,
        sampled: None,
    };
    let beta = WaveletFilterbank {
        kind: BankKind::BetaLogfreq,
        q: q2 as f64,
        mother: mother.clone(),
        members: signed_members(&beta_logs, BETA_LOWPASS_SUPPORT),
        grid: Grid::LogFrequency {
            bins_per_octave: config.bins_per_octave,
        },
        gain: 1.0,
        octaves: None,
        sampled: None,
    };
    let gamma = WaveletFilterbank {
        kind: BankKind::GammaOctave,
        q: q2 as f64,
        mother,
        members: signed_members(&gamma_logs, GAMMA_LOWPASS_SUPPORT),
        grid: Grid::Octave,
        gain: 1.0,
        octaves: Some(config.octaves),
        sampled: None,
    };
    Ok(SpiralBanks { alpha, beta, gamma })
}

/// Binary logs `k/q` of grid points inside `[lo, hi]`, ascending.
fn grid_logs(name: &'static str, (lo, hi): (f64, f64), q: u32) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
        return invalid(name, format!("need 0 < min <= max, got [{lo}, {hi}]"));
    }
    let q = q as f64;
    let eps = 1e-9;
    let k_lo = (q * lo.log2() - eps).ceil() as i64;
    let k_hi = (q * hi.log2() + eps).floor() as i64;
    if k_lo > k_hi {
        return invalid(name, format!("no grid point 2^(k/{q}) inside [{lo}, {hi}]"));
    }
    Ok((k_lo..=k_hi).map(|k| k as f64 / q).collect())
}

fn signed_members(logs: &[f64], lowpass_support: f64) -> Vec<BankMember> {
    let mut members: Vec<BankMember> = logs
        .iter()
        .rev()
        .map(|&l| BankMember::bandpass(l, Sign::Negative))
        .collect();
    members.push(BankMember::flat(FilterShape::Lowpass {
        support: lowpass_support,
    }));
    members.extend(logs.iter().map(|&l| BankMember::bandpass(l, Sign::Positive)));
    members
}
