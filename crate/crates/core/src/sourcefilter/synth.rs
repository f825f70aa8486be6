use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SourceFilterSpec;
use crate::error::{invalid, Result};
use crate::scalogram::Signal;

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub signal: Signal,
    /// Harmonic indices kept after Nyquist clipping.
    pub partials: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Additive rendering `Σ_p |ĥ(p θ̇/η̇)| cos(2π p θ(t) + φ_p)`.
///
/// Partials whose instantaneous frequency reaches Nyquist anywhere in the
/// signal are dropped with a warning.
pub fn synthesize(spec: &SourceFilterSpec, duration: f64, sample_rate: f64) -> Result<Synthesis> {
    spec.validate()?;
    if !(duration.is_finite() && duration > 0.0) {
        return invalid("duration", format!("must be positive, got {duration}"));
    }
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return invalid("sample_rate", format!("must be positive, got {sample_rate}"));
    }
    let n = (duration * sample_rate).round() as usize;
    let nyquist = sample_rate / 2.0;
    let times: Vec<f64> = (0..n).map(|i| i as f64 / sample_rate).collect();
    // θ̇ is monotone for every warp family, so its maximum sits at an end.
    let last = (n.max(1) - 1) as f64 / sample_rate;
    let top = spec.source_warp.rate(0.0).max(spec.source_warp.rate(last));

    let mut warnings = Vec::new();
    let partials: Vec<usize> = (1..=spec.partial_count).filter(|&p| p as f64 * top < nyquist).collect();
    if partials.len() < spec.partial_count {
        warnings.push(format!(
            "partials {}..={} reach the Nyquist frequency {nyquist} Hz and were dropped",
            partials.len() + 1,
            spec.partial_count
        ));
    }
    let phases: Vec<f64> = match spec.phase_seed {
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..spec.partial_count).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
        }
        None => vec![0.0; spec.partial_count],
    };

    let samples = times
        .iter()
        .map(|&t| {
            let theta = spec.source_warp.value(t);
            partials
                .iter()
                .map(|&p| spec.partial_amplitude(p, t) * (2.0 * PI * p as f64 * theta + phases[p - 1]).cos())
                .sum()
        })
        .collect();
    Ok(Synthesis {
        signal: Signal::new(samples, sample_rate)?,
        partials,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{Envelope, WarpSpec};
    use super::*;

    fn comb(p: usize) -> SourceFilterSpec {
        SourceFilterSpec {
            source_warp: WarpSpec::LinearScale { rate: 440.0 },
            filter_warp: WarpSpec::Identity,
            envelope: Envelope::Flat,
            partial_count: p,
            phase_seed: None,
        }
    }

    #[test]
    fn stationary_comb_matches_direct_sum() {
        let s = synthesize(&comb(8), 0.01, 22050.0).unwrap();
        assert!(s.warnings.is_empty());
        for (i, &x) in s.signal.samples().iter().enumerate() {
            let t = i as f64 / 22050.0;
            let expect: f64 = (1..=8).map(|p| (2.0 * PI * 440.0 * p as f64 * t).cos()).sum();
            assert!((x - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn partials_above_nyquist_are_dropped() {
        let s = synthesize(&comb(40), 0.01, 22050.0).unwrap();
        assert_eq!(s.partials.len(), 25);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn seeded_phases_are_reproducible() {
        let mut spec = comb(4);
        spec.phase_seed = Some(7);
        let a = synthesize(&spec, 0.01, 8000.0).unwrap();
        let b = synthesize(&spec, 0.01, 8000.0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.signal.samples()[0], 4.0);
    }
}
