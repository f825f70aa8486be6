use std::borrow::Cow;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::index::{Quefrency, SpiralIndex};
use super::tensor::{ScatteringMode, ScatteringTensor};
use crate::conv::{AxisKernel, TimeConvolver};
use crate::error::{invalid, Result};
use crate::filterbank::{BankKind, Grid, LowpassWindow, WaveletFilterbank};
use crate::scalogram::{smooth_rows, Scalogram};

/// Order of the separable stages before the final modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageOrder {
    /// time → chroma → octave.
    #[default]
    TimeFirst,
    /// chroma → octave → time.
    FrequencyFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringOptions {
    /// Averages the moduli along time when set.
    pub lowpass: Option<LowpassWindow>,
    pub stage_order: StageOrder,
    /// Keeps one frame out of `decimation` after the time stage.
    pub decimation: usize,
}

impl Default for ScatteringOptions {
    fn default() -> Self {
        Self {
            lowpass: None,
            stage_order: StageOrder::TimeFirst,
            decimation: 1,
        }
    }
}

/// Complex `[frame × bin]` grid carried between stages.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    pub values: Vec<Complex64>,
    pub frames: usize,
    pub bins: usize,
}

impl ComplexGrid {
    pub fn zeros(frames: usize, bins: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); frames * bins],
            frames,
            bins,
        }
    }

    pub fn from_scalogram(x1: &Scalogram) -> Self {
        Self {
            values: x1.values().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            frames: x1.frames(),
            bins: x1.bins(),
        }
    }

    pub fn at(&self, frame: usize, bin: usize) -> Complex64 {
        self.values[frame * self.bins + bin]
    }

    pub fn column(&self, bin: usize) -> Vec<Complex64> {
        (0..self.frames).map(|t| self.at(t, bin)).collect()
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

/// Zero-padded convolution along the rectilinear log-frequency axis.
pub fn chroma_conv(grid: &ComplexGrid, kernel: &AxisKernel) -> ComplexGrid {
    let mut out = ComplexGrid::zeros(grid.frames, grid.bins);
    for t in 0..grid.frames {
        kernel.apply_strided(&grid.values, t * grid.bins, 1, grid.bins, &mut out.values);
    }
    out
}

/// Zero-padded convolution across octaves at each fixed chroma; bins `c`,
/// `c + q`, `c + 2q`, … share a chroma.
pub fn octave_conv(grid: &ComplexGrid, kernel: &AxisKernel, q: usize) -> ComplexGrid {
    let mut out = ComplexGrid::zeros(grid.frames, grid.bins);
    for t in 0..grid.frames {
        for c in 0..q.min(grid.bins) {
            let count = (grid.bins - c).div_ceil(q);
            kernel.apply_strided(&grid.values, t * grid.bins + c, q, count, &mut out.values);
        }
    }
    out
}

/// Number of octave samples per chroma.
pub fn octave_len(bins: usize, q: usize) -> usize {
    bins.div_ceil(q)
}

fn time_padding(alpha: &WaveletFilterbank, members: &[usize], frame_rate: f64) -> usize {
    let lowest = members
        .iter()
        .map(|&i| alpha.members()[i].center)
        .fold(f64::INFINITY, f64::min);
    (alpha.mother().time_support() / lowest * frame_rate / 2.0).ceil() as usize
}

/// Time convolution of every bin column of `grid` with α member `member`.
pub fn time_stage(grid: &ComplexGrid, alpha: &WaveletFilterbank, member: usize, frame_rate: f64) -> ComplexGrid {
    let conv = TimeConvolver::new(grid.frames, time_padding(alpha, &[member], frame_rate));
    let transfer = alpha.transfer_on_grid(member, conv.n_fft(), frame_rate);
    let mut out = ComplexGrid::zeros(grid.frames, grid.bins);
    for b in 0..grid.bins {
        let y = conv.apply(&conv.spectrum_complex(&grid.column(b)), &transfer);
        for (t, v) in y.into_iter().enumerate() {
            out.values[t * grid.bins + b] = v;
        }
    }
    out
}

/// Time scattering `|x1 ∗ ψ_α|`, optionally averaged by `φ_T`.
pub fn time_scattering(
    x1: &Scalogram,
    alpha: &WaveletFilterbank,
    lowpass: Option<&LowpassWindow>,
) -> Result<ScatteringTensor> {
    let opts = ScatteringOptions {
        lowpass: lowpass.copied(),
        ..Default::default()
    };
    scatter(x1, alpha, None, None, &opts)
}

/// Joint time-frequency scattering `|x1 ∗t ψ_α ∗χ ψ_β|`.
pub fn joint_scattering(
    x1: &Scalogram,
    alpha: &WaveletFilterbank,
    beta: &WaveletFilterbank,
) -> Result<ScatteringTensor> {
    scatter(x1, alpha, Some(beta), None, &ScatteringOptions::default())
}

/// Spiral scattering `|x1 ∗t ψ_α ∗χ ψ_β ∗j ψ_γ|`.
pub fn spiral_scattering(
    x1: &Scalogram,
    alpha: &WaveletFilterbank,
    beta: &WaveletFilterbank,
    gamma: &WaveletFilterbank,
) -> Result<ScatteringTensor> {
    scatter(x1, alpha, Some(beta), Some(gamma), &ScatteringOptions::default())
}

struct AxisStage {
    coord: Option<Quefrency>,
    kernel: Option<AxisKernel>,
}

fn axis_stages(bank: Option<&WaveletFilterbank>, len: usize) -> Vec<AxisStage> {
    match bank {
        None => vec![AxisStage {
            coord: None,
            kernel: None,
        }],
        Some(bank) => bank
            .members()
            .iter()
            .enumerate()
            .map(|(i, m)| AxisStage {
                coord: Quefrency::from_member(m),
                kernel: Some(bank.axis_kernel(i, len)),
            })
            .collect(),
    }
}

fn apply_axis<'a>(
    grid: &'a ComplexGrid,
    stage: &AxisStage,
    f: impl Fn(&ComplexGrid, &AxisKernel) -> ComplexGrid,
) -> Cow<'a, ComplexGrid> {
    match &stage.kernel {
        Some(k) => Cow::Owned(f(grid, k)),
        None => Cow::Borrowed(grid),
    }
}

/// Shared second-order engine. `beta` and `gamma` select joint and spiral
/// modes; the modulus is taken once after all linear stages.
///
/// Every λ2 tuple is computed independently from the read-only `x1`, so the
/// output does not depend on scheduling.
pub fn scatter(
    x1: &Scalogram,
    alpha: &WaveletFilterbank,
    beta: Option<&WaveletFilterbank>,
    gamma: Option<&WaveletFilterbank>,
    opts: &ScatteringOptions,
) -> Result<ScatteringTensor> {
    let mode = match (beta, gamma) {
        (None, None) => ScatteringMode::Time,
        (Some(_), None) => ScatteringMode::Joint,
        (Some(_), Some(_)) => ScatteringMode::Spiral,
        (None, Some(_)) => return invalid("gamma", "octave stage requires a log-frequency stage"),
    };
    if alpha.kind() != BankKind::AlphaTime {
        return invalid("alpha", format!("expected an α time bank, got {:?}", alpha.kind()));
    }
    let q = x1.axis().q;
    if let Some(b) = beta {
        if b.kind() != BankKind::BetaLogfreq {
            return invalid("beta", format!("expected a β log-frequency bank, got {:?}", b.kind()));
        }
        if b.grid() != (Grid::LogFrequency { bins_per_octave: q }) {
            return invalid("beta", format!("β bank not built for {q} bins per octave"));
        }
    }
    if let Some(g) = gamma {
        if g.kind() != BankKind::GammaOctave {
            return invalid("gamma", format!("expected a γ octave bank, got {:?}", g.kind()));
        }
        if x1.bins() < 2 * q {
            return invalid(
                "octaves",
                format!("spiral scattering needs at least 2 octaves, scalogram spans {}", x1.bins() as f64 / q as f64),
            );
        }
    }
    if opts.decimation == 0 {
        return invalid("decimation", "must be at least 1");
    }
    let frame_rate = x1.frame_rate();
    let mut warnings = x1.warnings().to_vec();
    let kept: Vec<usize> = alpha
        .members()
        .iter()
        .enumerate()
        .filter_map(|(i, m)| {
            if m.center < frame_rate / 2.0 {
                Some(i)
            } else {
                warnings.push(format!(
                    "α = {} Hz is above the frame-rate Nyquist {} Hz; skipped",
                    m.center,
                    frame_rate / 2.0
                ));
                None
            }
        })
        .collect();
    if kept.is_empty() {
        return invalid("alpha", "no α member below the frame-rate Nyquist");
    }

    let (frames, bins) = (x1.frames(), x1.bins());
    let betas = axis_stages(beta, bins);
    let gammas = axis_stages(gamma, octave_len(bins, q));
    let conv = TimeConvolver::new(frames, time_padding(alpha, &kept, frame_rate));
    let n = conv.n_fft();
    let dec = opts.decimation;

    // (α position in `kept`, β, γ) → decimated modulus grid.
    let mut results: Vec<((usize, usize, usize), Vec<f64>)> = match opts.stage_order {
        StageOrder::TimeFirst => {
            let spectra: Vec<Vec<Complex64>> = (0..bins)
                .into_par_iter()
                .map(|b| conv.spectrum_real(&x1.row(b)))
                .collect();
            let after_time: Vec<ComplexGrid> = kept
                .par_iter()
                .map(|&i| {
                    let transfer = alpha.transfer_on_grid(i, n, frame_rate);
                    let mut g = ComplexGrid::zeros(frames.div_ceil(dec), bins);
                    for (b, s) in spectra.iter().enumerate() {
                        let y = conv.apply(s, &transfer);
                        for t in 0..g.frames {
                            g.values[t * bins + b] = y[t * dec];
                        }
                    }
                    g
                })
                .collect();
            let pairs: Vec<(usize, usize)> = (0..kept.len())
                .flat_map(|a| (0..betas.len()).map(move |b| (a, b)))
                .collect();
            pairs
                .par_iter()
                .flat_map_iter(|&(a, b)| {
                    let chroma = apply_axis(&after_time[a], &betas[b], chroma_conv);
                    gammas
                        .iter()
                        .enumerate()
                        .map(|(g, stage)| {
                            let octave = apply_axis(&chroma, stage, |x, k| octave_conv(x, k, q));
                            ((a, b, g), octave.modulus())
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        }
        StageOrder::FrequencyFirst => {
            let base = ComplexGrid::from_scalogram(x1);
            let transfers: Vec<Vec<f64>> = kept
                .iter()
                .map(|&i| alpha.transfer_on_grid(i, n, frame_rate))
                .collect();
            let pairs: Vec<(usize, usize)> = (0..betas.len())
                .flat_map(|b| (0..gammas.len()).map(move |g| (b, g)))
                .collect();
            pairs
                .par_iter()
                .flat_map_iter(|&(b, g)| {
                    let chroma = apply_axis(&base, &betas[b], chroma_conv);
                    let octave = apply_axis(&chroma, &gammas[g], |x, k| octave_conv(x, k, q));
                    let spectra: Vec<Vec<Complex64>> =
                        (0..bins).map(|c| conv.spectrum_complex(&octave.column(c))).collect();
                    transfers
                        .iter()
                        .enumerate()
                        .map(|(a, transfer)| {
                            let mut grid = ComplexGrid::zeros(frames.div_ceil(dec), bins);
                            for (c, s) in spectra.iter().enumerate() {
                                let y = conv.apply(s, transfer);
                                for t in 0..grid.frames {
                                    grid.values[t * bins + c] = y[t * dec];
                                }
                            }
                            ((a, b, g), grid.modulus())
                        })
                        .collect::<Vec<_>>()
                })
                .collect()
        }
    };

    let frames_out = frames.div_ceil(dec);
    if let Some(w) = &opts.lowpass {
        let rate = frame_rate / dec as f64;
        results
            .par_iter_mut()
            .for_each(|(_, grid)| *grid = smooth_rows(grid, frames_out, bins, rate, w));
    }

    let mut entries: Vec<(SpiralIndex, Vec<f64>)> = results
        .into_iter()
        .map(|((a, b, g), grid)| {
            let log_alpha = alpha.members()[kept[a]].log_abs_center;
            (
                SpiralIndex::from_log_alpha(log_alpha, betas[b].coord, gammas[g].coord),
                grid,
            )
        })
        .collect();
    entries.sort_by(|x, y| x.0.canonical_cmp(&y.0));

    let l2 = entries.len();
    let mut values = vec![0.0; frames_out * bins * l2];
    for (l, (_, grid)) in entries.iter().enumerate() {
        for (k, &v) in grid.iter().enumerate() {
            // The lowpass can undershoot zero by rounding.
            values[k * l2 + l] = v.max(0.0);
        }
    }
    let tensor = ScatteringTensor::new(
        values,
        frames_out,
        x1.hop() * dec,
        x1.sample_rate(),
        x1.axis().clone(),
        entries.into_iter().map(|e| e.0).collect(),
        mode,
        opts.lowpass.map(|w| w.scale()),
    )?;
    Ok(tensor.with_warnings(warnings))
}
