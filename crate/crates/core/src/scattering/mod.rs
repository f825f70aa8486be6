//! Second-order scattering over time, log-frequency and octave index.

mod index;
mod tensor;
mod transform;

pub use index::{LogLambda2, Quefrency, SpiralIndex};
pub use tensor::{ScatteringMode, ScatteringTensor};
pub use transform::{
    chroma_conv, joint_scattering, octave_conv, octave_len, scatter, spiral_scattering, time_scattering,
    time_stage, ComplexGrid, ScatteringOptions, StageOrder,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::{build_spiral_banks, BankKind, Grid, LowpassWindow, SpiralBankConfig, WaveletFilterbank};
    use crate::scalogram::{FrequencyAxis, Scalogram};
    use std::f64::consts::PI;

    const FRAME_RATE: f64 = 100.0;

    fn grid(q: usize, octaves: usize, frames: usize, f: impl Fn(f64, f64) -> f64) -> Scalogram {
        let axis = FrequencyAxis::new(q, octaves, 7 * q as i64);
        let mut values = Vec::with_capacity(frames * axis.len());
        for t in 0..frames {
            for b in 0..axis.len() {
                values.push(f(t as f64 / FRAME_RATE, b as f64 / q as f64));
            }
        }
        Scalogram::from_values(values, frames, 100, FRAME_RATE * 100.0, axis).unwrap()
    }

    fn banks(q: usize, octaves: usize) -> crate::filterbank::SpiralBanks {
        build_spiral_banks(&SpiralBankConfig {
            alpha_range: (0.5, 16.0),
            beta_range: (0.5, 4.0),
            gamma_range: (0.25, 0.5),
            q2: 2,
            bins_per_octave: q,
            octaves,
        })
        .unwrap()
    }

    fn glissando(v: f64) -> Scalogram {
        grid(16, 4, 400, |t, u| {
            let d = u - 1.0 - v * t;
            (-d * d / (2.0 * 0.08 * 0.08)).exp()
        })
    }

    #[test]
    fn stationary_input_has_no_modulation_energy() {
        let x1 = grid(8, 3, 300, |_, u| 1.0 + u);
        let b = banks(8, 3);
        let s2 = time_scattering(&x1, &b.alpha, None).unwrap();
        let peak = s2.values().iter().cloned().fold(0.0, f64::max);
        assert!(peak < 1e-9, "{peak}");
    }

    #[test]
    fn tremolo_peaks_at_modulation_rate() {
        let x1 = grid(8, 2, 400, |t, _| 1.0 + 0.5 * (2.0 * PI * 6.0 * t).cos());
        let b = banks(8, 2);
        let s2 = time_scattering(&x1, &b.alpha, None).unwrap();
        let energy: Vec<f64> = (0..s2.lambda2().len())
            .map(|l| (100..300).map(|t| s2.at(t, 3, l).powi(2)).sum())
            .collect();
        let best = (0..energy.len()).max_by(|&a, &c| energy[a].total_cmp(&energy[c])).unwrap();
        let alpha = s2.lambda2()[best].alpha();
        assert!((alpha / 6.0).log2().abs() <= 0.25, "{alpha}");
    }

    #[test]
    fn identity_stages_reduce_exactly() {
        let x1 = glissando(1.0);
        let b = banks(16, 4);
        let id_beta = WaveletFilterbank::identity(BankKind::BetaLogfreq, Grid::LogFrequency { bins_per_octave: 16 });
        let id_gamma = WaveletFilterbank::identity(BankKind::GammaOctave, Grid::Octave);
        let time = time_scattering(&x1, &b.alpha, None).unwrap();
        let joint_id = joint_scattering(&x1, &b.alpha, &id_beta).unwrap();
        assert_eq!(time.values(), joint_id.values());
        assert_eq!(time.lambda2(), joint_id.lambda2());
        let joint = joint_scattering(&x1, &b.alpha, &b.beta).unwrap();
        let spiral_id = spiral_scattering(&x1, &b.alpha, &b.beta, &id_gamma).unwrap();
        assert_eq!(joint.values(), spiral_id.values());
        assert_eq!(joint.lambda2(), spiral_id.lambda2());
    }

    #[test]
    fn stage_order_commutes() {
        let x1 = glissando(0.5);
        let b = banks(16, 4);
        let run = |order| {
            let opts = ScatteringOptions {
                stage_order: order,
                ..Default::default()
            };
            scatter(&x1, &b.alpha, Some(&b.beta), Some(&b.gamma), &opts).unwrap()
        };
        let a = run(StageOrder::TimeFirst);
        let c = run(StageOrder::FrequencyFirst);
        assert_eq!(a.lambda2(), c.lambda2());
        let peak = a.values().iter().cloned().fold(0.0, f64::max);
        let err = a.values().iter().zip(c.values()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-9 * peak.max(1.0), "{err}");
    }

    #[test]
    fn glissando_lands_on_the_predicted_modulation() {
        let x1 = glissando(1.0);
        let b = banks(16, 4);
        let s2 = joint_scattering(&x1, &b.alpha, &b.beta).unwrap();
        let energy = |l: usize| -> f64 {
            (100..300)
                .map(|t| (0..s2.bins()).map(|k| s2.at(t, k, l).powi(2)).sum::<f64>())
                .sum()
        };
        let at_beta = |beta: f64| -> Vec<(f64, f64)> {
            (0..s2.lambda2().len())
                .filter(|&l| (s2.lambda2()[l].beta_value() - beta).abs() < 1e-9)
                .map(|l| (s2.lambda2()[l].alpha(), energy(l)))
                .collect()
        };
        let neg = at_beta(-2.0);
        let best = neg.iter().cloned().max_by(|a, c| a.1.total_cmp(&c.1)).unwrap();
        assert!((best.0 - 2.0).abs() < 1e-9, "{best:?}");
        let pos: f64 = at_beta(2.0).iter().map(|p| p.1).sum();
        let neg_total: f64 = neg.iter().map(|p| p.1).sum();
        assert!(pos < 0.05 * neg_total, "{pos} vs {neg_total}");
    }

    #[test]
    fn lambda2_axis_is_canonical_and_permutable() {
        let x1 = glissando(0.5);
        let b = banks(16, 4);
        let s2 = spiral_scattering(&x1, &b.alpha, &b.beta, &b.gamma).unwrap();
        assert_eq!(s2.lambda2().len(), b.alpha.len() * b.beta.len() * b.gamma.len());
        for w in s2.lambda2().windows(2) {
            assert_eq!(w[0].canonical_cmp(&w[1]), std::cmp::Ordering::Less);
        }
        let n = s2.lambda2().len();
        let order: Vec<usize> = (0..n).rev().cycle().skip(3).take(n).collect();
        let p = s2.permuted(&order).unwrap();
        for (l, idx) in s2.lambda2().iter().enumerate() {
            let k = p.position(idx).unwrap();
            assert_eq!(p.channel(5, k), s2.channel(5, l));
        }
    }

    #[test]
    fn averaged_output_keeps_constant_channels() {
        let x1 = grid(8, 2, 300, |t, _| 1.0 + 0.5 * (2.0 * PI * 4.0 * t).cos());
        let b = banks(8, 2);
        let w = LowpassWindow::new(0.5).unwrap();
        let s2 = time_scattering(&x1, &b.alpha, Some(&w)).unwrap();
        assert_eq!(s2.averaging(), Some(0.5));
        let l = s2.position(&SpiralIndex::new(4.0, None, None).unwrap()).unwrap();
        let c = s2.channel(0, l);
        let mid = c[150];
        assert!(c[100..200].iter().all(|v| (v - mid).abs() < 0.02 * mid));
    }

    #[test]
    fn spiral_needs_two_octaves() {
        let x1 = grid(8, 1, 50, |_, _| 1.0);
        let b = banks(8, 2);
        assert!(spiral_scattering(&x1, &b.alpha, &b.beta, &b.gamma).is_err());
    }

    #[test]
    fn alpha_above_frame_nyquist_is_skipped() {
        let x1 = grid(8, 2, 100, |_, _| 1.0);
        let b = build_spiral_banks(&SpiralBankConfig {
            alpha_range: (1.0, 64.0),
            beta_range: (0.5, 1.0),
            gamma_range: (0.5, 0.5),
            q2: 1,
            bins_per_octave: 8,
            octaves: 2,
        })
        .unwrap();
        let s2 = time_scattering(&x1, &b.alpha, None).unwrap();
        assert_eq!(s2.lambda2().len(), 6);
        assert_eq!(s2.warnings().len(), 1);
    }
}
