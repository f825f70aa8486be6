use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use spiral_core::conv::AxisKernel;
use spiral_core::filterbank::{
    build_first_order_bank, build_spiral_banks, design_mother_wavelet, fft_size_for, LowpassWindow,
    SpiralBankConfig, WaveletFilterbank,
};
use spiral_core::scalogram::{average_time, compute_scalogram, FrequencyAxis, Scalogram, Signal};
use spiral_core::scattering::{chroma_conv, octave_len, scatter, ComplexGrid, ScatteringOptions};
use spiral_core::sourcefilter::{synthesize, Envelope, SourceFilterSpec, WarpSpec};

const SR: f64 = 22050.0;

fn bank(q: usize, octaves: usize, len: usize) -> WaveletFilterbank {
    let mother = design_mother_wavelet(q as f64).unwrap();
    let fft = fft_size_for(len, q, octaves, SR).unwrap();
    build_first_order_bank(&mother, q, octaves, SR, fft).unwrap()
}

fn tone(f: f64, secs: f64) -> Vec<f64> {
    (0..(secs * SR) as usize)
        .map(|i| (2.0 * PI * f * i as f64 / SR).sin())
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn scalogram_shifts_by_whole_frames() {
    let hop = 32;
    let n = 16384;
    // Random partials up to 0.9 Nyquist. The top filters are cut at Nyquist
    // and ring for a long time on energy right at the band edge.
    let noise: Vec<f64> = {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let partials: Vec<(f64, f64)> = (0..96)
            .map(|_| (rng.gen_range(40.0..0.45 * SR), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        (0..n + 8 * hop)
            .map(|i| partials.iter().map(|&(f, ph)| (2.0 * PI * f * i as f64 / SR + ph).sin()).sum())
            .collect()
    };
    let b = bank(8, 5, n);
    for k in [1usize, 3, 8] {
        let delayed: Vec<f64> = noise[8 * hop - k * hop..8 * hop - k * hop + n].to_vec();
        let ahead: Vec<f64> = noise[8 * hop..8 * hop + n].to_vec();
        let x = compute_scalogram(&Signal::new(ahead, SR).unwrap(), &b, hop).unwrap();
        let y = compute_scalogram(&Signal::new(delayed, SR).unwrap(), &b, hop).unwrap();
        let margin = 160;
        let mut num = 0.0;
        let mut den = 0.0;
        for t in margin..x.frames() - margin - k {
            for bin in 0..x.bins() {
                num += (y.at(t + k, bin) - x.at(t, bin)).powi(2);
                den += x.at(t, bin).powi(2);
            }
        }
        assert!((num / den).sqrt() <= 1e-4, "k={k}: {}", (num / den).sqrt());
    }
}

#[test]
fn octave_transposition_moves_ridge_by_q_bins() {
    let q = 12;
    let b = bank(q, 8, SR as usize);
    for f in [150.0, 233.0, 410.0] {
        let lo = compute_scalogram(&Signal::new(tone(f, 1.0), SR).unwrap(), &b, 256).unwrap();
        let hi = compute_scalogram(&Signal::new(tone(2.0 * f, 1.0), SR).unwrap(), &b, 256).unwrap();
        let mid = lo.frames() / 2;
        assert_eq!(argmax(hi.frame(mid)), argmax(lo.frame(mid)) + q, "f={f}");
    }
}

#[test]
fn averaging_removes_fast_tremolo() {
    let n = (3.0 * SR) as usize;
    let am: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / SR;
            (1.0 + 0.5 * (2.0 * PI * 8.0 * t).cos()) * (2.0 * PI * 440.0 * t).sin()
        })
        .collect();
    let b = bank(12, 6, n);
    let x1 = compute_scalogram(&Signal::new(am, SR).unwrap(), &b, 64).unwrap();
    let s1 = average_time(&x1, &LowpassWindow::new(0.5).unwrap()).unwrap().grid;
    let bin = x1.axis().nearest_bin(440.0);
    let depth = |row: &[f64]| {
        let max = row.iter().cloned().fold(0.0, f64::max);
        let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
        (max - min) / (max + min)
    };
    let interior = |g: &Scalogram| g.row(bin)[400..g.frames() - 400].to_vec();
    let (d1, ds) = (depth(&interior(&x1)), depth(&interior(&s1)));
    assert!(d1 > 0.3, "{d1}");
    assert!(ds <= 0.05 * d1, "{ds} vs {d1}");
}

#[test]
fn octave_per_second_glissando_has_unit_ridge_slope() {
    let spec = SourceFilterSpec {
        source_warp: WarpSpec::Exponential {
            base_rate: 110.0,
            velocity: 1.0,
        },
        filter_warp: WarpSpec::Identity,
        envelope: Envelope::Flat,
        partial_count: 1,
        phase_seed: None,
    };
    let secs = 3.0;
    let sig = synthesize(&spec, secs, SR).unwrap().signal;
    let q = 24;
    let b = bank(q, 7, sig.len());
    let x1 = compute_scalogram(&sig, &b, 128).unwrap();
    let (mut ts, mut us) = (Vec::new(), Vec::new());
    for t in (x1.frames() / 6)..(5 * x1.frames() / 6) {
        let row = x1.frame(t);
        let k = argmax(row);
        if k == 0 || k + 1 == row.len() {
            continue;
        }
        // Parabolic peak interpolation in log-amplitude.
        let (a, c, e) = (row[k - 1].ln(), row[k].ln(), row[k + 1].ln());
        let offset = 0.5 * (a - e) / (a - 2.0 * c + e);
        ts.push(t as f64 / x1.frame_rate());
        us.push(x1.axis().log_lambda(k) + offset / q as f64);
    }
    let s = slope(&ts, &us);
    assert!((s - 1.0).abs() <= 0.05, "{s}");
}

/// Gaussian cutoff fitted to the resolved partial peaks of one frame.
fn fitted_cutoff(x1: &Scalogram, b: &WaveletFilterbank, frame: usize, f0: f64, partials: usize) -> f64 {
    let (mut f2, mut ln_a) = (Vec::new(), Vec::new());
    for p in 1..=partials {
        let f = p as f64 * f0;
        let bin = x1.axis().nearest_bin(f);
        let amp = x1.at(frame, bin) / b.response(bin, f);
        f2.push(f * f);
        ln_a.push(amp.ln());
    }
    // ln|ĥ(f)| = −f²/(2c²) + const
    (-1.0 / (2.0 * slope(&f2, &ln_a))).sqrt()
}

#[test]
fn envelope_cutoff_follows_filter_warp() {
    let secs = 3.0;
    let f0 = 110.0;
    let spec = SourceFilterSpec {
        source_warp: WarpSpec::LinearScale { rate: f0 },
        filter_warp: WarpSpec::Exponential {
            base_rate: 1.0,
            velocity: 1.0 / secs,
        },
        envelope: Envelope::Gaussian { cutoff: 600.0 },
        partial_count: 40,
        phase_seed: None,
    };
    let sig = synthesize(&spec, secs, SR).unwrap().signal;
    let b = bank(24, 7, sig.len());
    let x1 = compute_scalogram(&sig, &b, 256).unwrap();
    let (t0, t1) = (0.5, 2.5);
    let frame = |t: f64| (t * x1.frame_rate()).round() as usize;
    let c0 = fitted_cutoff(&x1, &b, frame(t0), f0, 16);
    let c1 = fitted_cutoff(&x1, &b, frame(t1), f0, 16);
    let expected = spec.filter_warp.rate(t1) / spec.filter_warp.rate(t0);
    assert!((c0 / (600.0 * spec.filter_warp.rate(t0)) - 1.0).abs() < 0.1, "{c0}");
    assert!(((c1 / c0) / expected - 1.0).abs() < 0.1, "{} vs {expected}", c1 / c0);
}

/// Per-row phase rate of `x1 ∗ ψ_β` on a single-partial glissando, as a
/// ratio to `−β·v`; worst row over the octaves the partial sweeps.
fn phase_law_ratio_error(q2: u32, max_beta: f64) -> Vec<(f64, f64)> {
    let v = 1.0;
    let spec = SourceFilterSpec {
        source_warp: WarpSpec::Exponential {
            base_rate: 110.0,
            velocity: v,
        },
        filter_warp: WarpSpec::Identity,
        envelope: Envelope::Flat,
        partial_count: 1,
        phase_seed: None,
    };
    let sig = synthesize(&spec, 3.0, SR).unwrap().signal;
    let q = 12;
    let b = bank(q, 8, sig.len());
    let x1 = compute_scalogram(&sig, &b, 64).unwrap();
    let banks = build_spiral_banks(&SpiralBankConfig {
        alpha_range: (1.0, 32.0),
        beta_range: (0.5, 4.0),
        gamma_range: (0.25, 0.5),
        q2,
        bins_per_octave: q,
        octaves: 8,
    })
    .unwrap();
    let grid = ComplexGrid::from_scalogram(&x1);
    let lo = x1.axis().nearest_bin(110.0 * 0.75f64.exp2());
    let hi = x1.axis().nearest_bin(110.0 * 2.25f64.exp2());
    let mut out = Vec::new();
    for (i, m) in banks.beta.members().iter().enumerate() {
        if !m.is_bandpass() || m.center.abs() > max_beta + 1e-9 {
            continue;
        }
        let z = chroma_conv(&grid, &banks.beta.axis_kernel(i, x1.bins()));
        let worst = (lo..=hi)
            .map(|bin| {
                let acc: Complex64 = (0..x1.frames() - 1).map(|t| z.at(t + 1, bin) * z.at(t, bin).conj()).sum();
                let rate = acc.arg() / (2.0 * PI) * x1.frame_rate();
                (rate / (-m.center * v) - 1.0).abs()
            })
            .fold(0.0, f64::max);
        out.push((m.center, worst));
    }
    out
}

// The law holds while ψ_β stays inside the flat part of the ridge's own
// quefrency spectrum; larger |β| reads low.
#[test]
fn chroma_phase_advances_at_minus_beta_v() {
    for (q2, max_beta) in [(1, 1.0), (2, 2.0)] {
        let errs = phase_law_ratio_error(q2, max_beta);
        assert!(errs.len() >= 4, "{errs:?}");
        for (beta, err) in errs {
            assert!(err <= 0.1, "Q2={q2} β={beta}: {err}");
        }
    }
}

/// Largest DTFT magnitude of an axis kernel.
fn kernel_peak(k: &AxisKernel) -> f64 {
    (0..2048)
        .map(|m| {
            let w = 2.0 * PI * m as f64 / 2048.0;
            k.coeffs()
                .iter()
                .enumerate()
                .map(|(j, c)| c * Complex64::from_polar(1.0, -w * j as f64))
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scattering_paths_are_contractive(seed in any::<u64>(), frames in 64usize..160) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let q = 4;
        let frame_rate = 100.0;
        let axis = FrequencyAxis::new(q, 3, 5 * q as i64);
        let values: Vec<f64> = (0..frames * axis.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let x1 = Scalogram::from_values(values, frames, 64, 64.0 * frame_rate, axis).unwrap();
        let banks = build_spiral_banks(&SpiralBankConfig {
            alpha_range: (4.0, 32.0),
            beta_range: (0.5, 2.0),
            gamma_range: (0.25, 0.5),
            q2: 1,
            bins_per_octave: q,
            octaves: 3,
        })
        .unwrap();
        let x2 = scatter(&x1, &banks.alpha, Some(&banks.beta), Some(&banks.gamma), &ScatteringOptions::default()).unwrap();

        let alpha_peak = (0..banks.alpha.len())
            .flat_map(|i| (0..=5000).map(move |m| (i, m as f64 * frame_rate / 10000.0)))
            .map(|(i, f)| banks.alpha.response(i, f).abs())
            .fold(0.0, f64::max);
        let beta_peak = (0..banks.beta.len())
            .map(|i| kernel_peak(&banks.beta.axis_kernel(i, x1.bins())))
            .fold(0.0, f64::max);
        let gamma_peak = (0..banks.gamma.len())
            .map(|i| kernel_peak(&banks.gamma.axis_kernel(i, octave_len(x1.bins(), q))))
            .fold(0.0, f64::max);
        // Reflect padding repeats each sample at most three times.
        let bound = 3f64.sqrt()
            * x1.values().iter().map(|v| v * v).sum::<f64>().sqrt()
            * alpha_peak
            * beta_peak
            * gamma_peak;
        for l in 0..x2.lambda2().len() {
            let energy = (0..frames)
                .flat_map(|t| (0..x1.bins()).map(move |k| (t, k)))
                .map(|(t, k)| x2.at(t, k, l).powi(2))
                .sum::<f64>()
                .sqrt();
            prop_assert!(energy <= bound * (1.0 + 1e-6), "{:?}: {} > {}", x2.lambda2()[l], energy, bound);
        }
    }
}
