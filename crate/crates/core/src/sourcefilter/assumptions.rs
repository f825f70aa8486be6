use serde::{Deserialize, Serialize};

use super::{SourceFilterSpec, WarpSpec};
use crate::error::{invalid, Result};
use crate::filterbank::{LowpassWindow, WaveletFilterbank};

/// Largest ratio accepted for a "much smaller than" inequality.
pub const RATIO_LIMIT: f64 = 0.1;

const WINDOW_POINTS: usize = 65;

/// Left side over right side of each model inequality at one `(p, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub p: usize,
    pub t: f64,
    /// First-order center closest to the `p`-th partial.
    pub lambda1: f64,
    /// `2p / Q`; strict inequality, satisfied iff `< 1`.
    pub partial_separation: f64,
    /// `sup |θ̈/θ̇| · Q / λ1`.
    pub source_variation: f64,
    /// `sup |η̈/η̇| · Q / λ1`.
    pub filter_variation: f64,
    /// `sup |d log|ĥ|/dω| · sup(1/η̇) · λ1 / Q`.
    pub spectral_smoothness: f64,
    /// `sup |w⃛/ẅ − ẅ/ẇ| · T` over both warps, when `T` is given.
    pub averaging: Option<f64>,
}

impl AssumptionReport {
    pub fn separation_ok(&self) -> bool {
        self.partial_separation < 1.0
    }

    /// Every inequality holds, the "much smaller" ones with
    /// ratio ≤ [`RATIO_LIMIT`].
    pub fn all_satisfied(&self) -> bool {
        self.separation_ok()
            && [self.source_variation, self.filter_variation, self.spectral_smoothness]
                .iter()
                .chain(self.averaging.iter())
                .all(|&r| r <= RATIO_LIMIT)
    }
}

/// Evaluates the model assumptions for partial `p` at time `t`.
///
/// Suprema are taken over the first-order wavelet support around `t`, where
/// the linearizations are made.
pub fn check_assumptions(
    spec: &SourceFilterSpec,
    bank: &WaveletFilterbank,
    p: usize,
    t: f64,
    lowpass: Option<&LowpassWindow>,
) -> Result<AssumptionReport> {
    spec.validate()?;
    if p == 0 || p > spec.partial_count {
        return invalid("p", format!("partial index must lie in 1..={}, got {p}", spec.partial_count));
    }
    if bank.is_empty() {
        return invalid("bank", "empty filterbank");
    }
    let q = bank.quality_factor();
    let target = (p as f64 * spec.source_warp.rate(t)).log2();
    let lambda1 = bank
        .centers()
        .into_iter()
        .min_by(|a, b| (a.log2() - target).abs().total_cmp(&(b.log2() - target).abs()))
        .unwrap_or(1.0);

    let half = 2.0 * q / lambda1;
    let window: Vec<f64> = (0..WINDOW_POINTS)
        .map(|i| t - half + 2.0 * half * i as f64 / (WINDOW_POINTS - 1) as f64)
        .collect();
    let sup = |f: &dyn Fn(f64) -> f64| window.iter().map(|&s| f(s).abs()).fold(0.0, f64::max);
    let log_rate = |w: WarpSpec| move |s: f64| w.acceleration(s) / w.rate(s);

    let eta = spec.filter_warp;
    let inv_eta = sup(&|s| 1.0 / eta.rate(s));
    let omega_hi = lambda1 * (1.0 + 1.0 / q) * inv_eta;
    let omega_lo = lambda1 * (1.0 - 1.0 / q) / sup(&|s| eta.rate(s));
    let slope = spec.envelope.log_slope_bound(omega_lo, omega_hi);

    let averaging = lowpass.map(|w| {
        let drift = |x: WarpSpec| {
            move |s: f64| {
                if x.acceleration(s) == 0.0 {
                    0.0
                } else {
                    x.jerk(s) / x.acceleration(s) - x.acceleration(s) / x.rate(s)
                }
            }
        };
        let d = sup(&drift(spec.source_warp)).max(sup(&drift(eta)));
        d * w.scale()
    });

    Ok(AssumptionReport {
        p,
        t,
        lambda1,
        partial_separation: 2.0 * p as f64 / q,
        source_variation: sup(&log_rate(spec.source_warp)) * q / lambda1,
        filter_variation: sup(&log_rate(eta)) * q / lambda1,
        spectral_smoothness: slope * inv_eta * lambda1 / q,
        averaging,
    })
}
