use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::assumptions::{check_assumptions, AssumptionReport};
use super::SourceFilterSpec;
use crate::error::{invalid, Result, SpiralError};
use crate::filterbank::{Grid, Sign, SpiralBanks, WaveletFilterbank};
use crate::scattering::{
    chroma_conv, octave_conv, octave_len, ComplexGrid, Quefrency, ScatteringMode, ScatteringTensor, SpiralIndex,
};

/// Plane `α + v_θ β + v_η γ = 0` with `α` in Hz, `β`, `γ` in cycles per
/// octave and velocities in octaves per second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgePlane {
    pub v_theta: f64,
    pub v_eta: f64,
    pub t: f64,
}

impl RidgePlane {
    /// Modulation frequency on the plane above `(β, γ)`.
    pub fn alpha_at(&self, beta: f64, gamma: f64) -> f64 {
        -self.v_theta * beta - self.v_eta * gamma
    }
}

/// Velocities of pitch and spectral envelope at `t`.
pub fn predicted_plane(spec: &SourceFilterSpec, t: f64) -> RidgePlane {
    RidgePlane {
        v_theta: spec.source_warp.velocity(t),
        v_eta: spec.filter_warp.velocity(t),
        t,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub value: f64,
    /// `|E ∗χ ψ_β|`: chroma-convolved source scalogram.
    pub source: f64,
    /// `|H ∗j ψ_γ|`: octave-convolved filter scalogram.
    pub filter: f64,
    /// `|ψ̂_α(−v_θ β − v_η γ)|`.
    pub modulation: f64,
    /// Set when the model assumptions fail at this point.
    pub degraded: bool,
    pub assumptions: AssumptionReport,
}

fn member_index(bank: &WaveletFilterbank, coord: Option<Quefrency>) -> Option<usize> {
    let coord = coord?;
    bank.members().iter().position(|m| match Quefrency::from_member(m) {
        Some(Quefrency::Lowpass) => coord == Quefrency::Lowpass,
        Some(Quefrency::Band { sign, log_abs }) => {
            coord.sign() == sign && (coord.log_abs() - log_abs).abs() < 1e-9
        }
        None => false,
    })
}

/// Approximate spiral coefficient of the model at first-order bin
/// `lambda1_bin` of `first` and second-order index `lambda2`.
///
/// The source term is the sum of partial responses `½|ψ̂_λ1(p θ̇)|`, the
/// filter term is `|ĥ(λ1/η̇)|`; each is convolved along its own axis before
/// the modulus, then weighted by the α wavelet at the ridge frequency.
pub fn closed_form_x2(
    spec: &SourceFilterSpec,
    first: &WaveletFilterbank,
    banks: &SpiralBanks,
    lambda1_bin: usize,
    lambda2: &SpiralIndex,
    t: f64,
) -> Result<ClosedForm> {
    spec.validate()?;
    let Grid::Time { sample_rate, .. } = first.grid() else {
        return invalid("first", "closed form needs a first-order time bank");
    };
    let bins = first.len();
    if lambda1_bin >= bins {
        return invalid("lambda1", format!("bin {lambda1_bin} outside 0..{bins}"));
    }
    let q = first.quality_factor().round() as usize;
    let theta_rate = spec.source_warp.rate(t);
    let eta_rate = spec.filter_warp.rate(t);
    let centers = first.centers();

    let partials: Vec<f64> = (1..=spec.partial_count)
        .map(|p| p as f64 * theta_rate)
        .filter(|&f| f < sample_rate / 2.0)
        .collect();
    let source_row: Vec<Complex64> = (0..bins)
        .map(|b| Complex64::new(0.5 * partials.iter().map(|&f| first.response(b, f)).sum::<f64>(), 0.0))
        .collect();
    let filter_row: Vec<Complex64> = centers
        .iter()
        .map(|&c| Complex64::new(spec.envelope.magnitude(c / eta_rate), 0.0))
        .collect();
    let row = |values: Vec<Complex64>| ComplexGrid { values, frames: 1, bins };

    let source = match member_index(&banks.beta, lambda2.beta()) {
        Some(i) => chroma_conv(&row(source_row), &banks.beta.axis_kernel(i, bins)).values[lambda1_bin].norm(),
        None if lambda2.beta().is_none() => source_row[lambda1_bin].norm(),
        None => return invalid("lambda2", "β coordinate not in the β bank"),
    };
    let filter = match member_index(&banks.gamma, lambda2.gamma()) {
        Some(i) => {
            let kernel = banks.gamma.axis_kernel(i, octave_len(bins, q));
            octave_conv(&row(filter_row), &kernel, q).values[lambda1_bin].norm()
        }
        None if lambda2.gamma().is_none() => filter_row[lambda1_bin].norm(),
        None => return invalid("lambda2", "γ coordinate not in the γ bank"),
    };
    let alpha_member = banks
        .alpha
        .members()
        .iter()
        .position(|m| (m.log_abs_center - lambda2.log_alpha()).abs() < 1e-9)
        .ok_or_else(|| SpiralError::InvalidParameter {
            name: "lambda2",
            reason: format!("α = {} Hz not in the α bank", lambda2.alpha()),
        })?;
    let plane = predicted_plane(spec, t);
    let modulation = banks
        .alpha
        .response(alpha_member, plane.alpha_at(lambda2.beta_value(), lambda2.gamma_value()));

    let p = ((centers[lambda1_bin] / theta_rate).round() as usize).clamp(1, spec.partial_count);
    let assumptions = check_assumptions(spec, first, p, t, None)?;
    Ok(ClosedForm {
        value: source * filter * modulation,
        source,
        filter,
        modulation,
        degraded: !assumptions.all_satisfied(),
        assumptions,
    })
}

/// Velocities estimated from the maxima of one spiral fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub v_theta: f64,
    pub v_eta: f64,
    /// Weighted RMS of `α + v_θ β + v_η γ` over the weighted RMS of `α`.
    pub residual: f64,
    pub selected: usize,
}

/// Fits `α + a β + b γ = 0` by magnitude-weighted least squares over the λ2
/// entries at `(frame, bin)` whose value is at least `threshold_ratio` of
/// the fiber maximum.
pub fn fit_ridge_plane(
    tensor: &ScatteringTensor,
    frame: usize,
    bin: usize,
    threshold_ratio: f64,
) -> Result<PlaneFit> {
    if tensor.mode() != ScatteringMode::Spiral {
        return invalid("tensor", format!("plane fit needs a spiral tensor, got {:?}", tensor.mode()));
    }
    if !(threshold_ratio > 0.0 && threshold_ratio < 1.0) {
        return invalid("threshold_ratio", format!("must lie in (0, 1), got {threshold_ratio}"));
    }
    if frame >= tensor.frames() || bin >= tensor.bins() {
        return invalid("frame", format!("({frame}, {bin}) outside the tensor"));
    }
    let fiber = tensor.fiber(frame, bin);
    let peak = fiber.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(SpiralError::DegenerateFit("fiber is identically zero".into()));
    }
    let points: Vec<(f64, f64, f64, f64)> = tensor
        .lambda2()
        .iter()
        .zip(fiber)
        .filter(|(_, &v)| v >= threshold_ratio * peak)
        .map(|(idx, &w)| (w, idx.alpha(), idx.beta_value(), idx.gamma_value()))
        .collect();
    if points.len() < 3 {
        return Err(SpiralError::DegenerateFit(format!(
            "{} entries above threshold, need at least 3",
            points.len()
        )));
    }
    let (mut sbb, mut sbg, mut sgg, mut sab, mut sag) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(w, a, b, g) in &points {
        sbb += w * b * b;
        sbg += w * b * g;
        sgg += w * g * g;
        sab += w * a * b;
        sag += w * a * g;
    }
    let det = sbb * sgg - sbg * sbg;
    if det <= 1e-12 * (sbb + sgg).powi(2) {
        return Err(SpiralError::DegenerateFit("selected entries are collinear in (β, γ)".into()));
    }
    let v_theta = -(sab * sgg - sag * sbg) / det;
    let v_eta = -(sag * sbb - sab * sbg) / det;
    let (mut num, mut den) = (0.0, 0.0);
    for &(w, a, b, g) in &points {
        num += w * (a + v_theta * b + v_eta * g).powi(2);
        den += w * a * a;
    }
    Ok(PlaneFit {
        v_theta,
        v_eta,
        residual: (num / den).sqrt(),
        selected: points.len(),
    })
}

/// Sign pair winning at the fiber's strongest `(α, |β|, |γ|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadrant {
    pub beta: Sign,
    pub gamma: Sign,
    pub alpha: f64,
    pub beta_abs: f64,
    pub gamma_abs: f64,
    /// Values at `(−,−)`, `(−,+)`, `(+,−)`, `(+,+)`.
    pub values: [f64; 4],
}

/// Finds the largest band-band entry at `(frame, bin)`, then compares the
/// four sign pairs sharing its `α`, `|β|` and `|γ|`. With `alpha` set, only
/// entries at the α member closest to it (in log) are considered.
pub fn quadrant_argmax(tensor: &ScatteringTensor, frame: usize, bin: usize, alpha: Option<f64>) -> Result<Quadrant> {
    if tensor.mode() != ScatteringMode::Spiral {
        return invalid("tensor", "quadrant test needs a spiral tensor");
    }
    if frame >= tensor.frames() || bin >= tensor.bins() {
        return invalid("frame", format!("({frame}, {bin}) outside the tensor"));
    }
    let fiber = tensor.fiber(frame, bin);
    let is_band = |q: Option<Quefrency>| matches!(q, Some(Quefrency::Band { .. }));
    let fixed = match alpha {
        Some(a) if a > 0.0 => tensor
            .lambda2()
            .iter()
            .map(|i| i.log_alpha())
            .min_by(|x, y| (x - a.log2()).abs().total_cmp(&(y - a.log2()).abs())),
        Some(a) => return invalid("alpha", format!("must be positive, got {a}")),
        None => None,
    };
    let best = tensor
        .lambda2()
        .iter()
        .zip(fiber)
        .filter(|(i, _)| is_band(i.beta()) && is_band(i.gamma()))
        .filter(|(i, _)| fixed.is_none_or(|l| i.log_alpha() == l))
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| *i)
        .ok_or_else(|| SpiralError::DegenerateFit("no band-band entries".into()))?;
    let (lb, lg) = (best.beta().unwrap().log_abs(), best.gamma().unwrap().log_abs());
    let signs = [Sign::Negative, Sign::Positive];
    let mut values = [0.0; 4];
    for (k, (sb, sg)) in signs.iter().flat_map(|&b| signs.iter().map(move |&g| (b, g))).enumerate() {
        let idx = SpiralIndex::from_log_alpha(
            best.log_alpha(),
            Some(Quefrency::Band { sign: sb, log_abs: lb }),
            Some(Quefrency::Band { sign: sg, log_abs: lg }),
        );
        let pos = tensor
            .position(&idx)
            .ok_or_else(|| SpiralError::Shape("sign branches are not symmetric".into()))?;
        values[k] = fiber[pos];
    }
    let k = (0..4).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    Ok(Quadrant {
        beta: signs[k / 2],
        gamma: signs[k % 2],
        alpha: best.alpha(),
        beta_abs: lb.exp2(),
        gamma_abs: lg.exp2(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{Envelope, WarpSpec};
    use super::*;
    use crate::filterbank::{build_first_order_bank, build_spiral_banks, design_mother_wavelet, SpiralBankConfig};
    use crate::scalogram::FrequencyAxis;

    fn band(v: f64) -> Option<Quefrency> {
        Some(Quefrency::from_value(v).unwrap())
    }

    fn tensor_from(entries: &[(SpiralIndex, f64)]) -> ScatteringTensor {
        let axis = FrequencyAxis::new(1, 1, 0);
        ScatteringTensor::new(
            entries.iter().map(|e| e.1).collect(),
            1,
            1,
            1.0,
            axis,
            entries.iter().map(|e| e.0).collect(),
            ScatteringMode::Spiral,
            None,
        )
        .unwrap()
    }

    fn spec(v_theta: f64, v_eta: f64) -> SourceFilterSpec {
        SourceFilterSpec {
            source_warp: WarpSpec::Exponential { base_rate: 200.0, velocity: v_theta },
            filter_warp: WarpSpec::Exponential { base_rate: 1.0, velocity: v_eta },
            envelope: Envelope::Gaussian { cutoff: 2000.0 },
            partial_count: 16,
            phase_seed: None,
        }
    }

    #[test]
    fn plane_examples() {
        let p = RidgePlane { v_theta: 0.5, v_eta: 0.0, t: 0.0 };
        assert_eq!(p.alpha_at(-2.0, 3.0), 1.0);
        let p = RidgePlane { v_theta: 1.0, v_eta: -0.5, t: 0.0 };
        assert_eq!(p.alpha_at(-1.0, 2.0), 2.0);
        let still = SourceFilterSpec {
            source_warp: WarpSpec::LinearScale { rate: 440.0 },
            filter_warp: WarpSpec::Identity,
            ..spec(0.0, 0.0)
        };
        let p = predicted_plane(&still, 1.0);
        assert_eq!((p.v_theta, p.v_eta), (0.0, 0.0));
        let p = predicted_plane(&spec(0.5, -0.25), 1.0);
        assert!((p.v_theta - 0.5).abs() < 1e-12 && (p.v_eta + 0.25).abs() < 1e-12);
    }

    #[test]
    fn exact_plane_is_recovered() {
        let (a, b) = (0.7, -0.3);
        let mut entries = Vec::new();
        for &beta in &[-4.0, -2.0, -1.0] {
            for &gamma in &[-0.5, 0.25, 0.5] {
                let alpha = -a * beta - b * gamma;
                entries.push((SpiralIndex::new(alpha, band(beta), band(gamma)).unwrap(), 1.0 + 0.1 * beta.abs()));
            }
        }
        entries.push((SpiralIndex::new(3.0, band(2.0), band(0.5)).unwrap(), 0.1));
        let fit = fit_ridge_plane(&tensor_from(&entries), 0, 0, 0.5).unwrap();
        assert!((fit.v_theta - a).abs() < 1e-9 && (fit.v_eta - b).abs() < 1e-9, "{fit:?}");
        assert!(fit.residual < 1e-9);
        assert_eq!(fit.selected, 9);
    }

    #[test]
    fn degenerate_fits_are_errors() {
        let one = [
            (SpiralIndex::new(1.0, band(-1.0), band(0.5)).unwrap(), 1.0),
            (SpiralIndex::new(2.0, band(-2.0), band(0.5)).unwrap(), 0.0),
            (SpiralIndex::new(4.0, band(-4.0), band(0.5)).unwrap(), 0.0),
        ];
        assert!(matches!(fit_ridge_plane(&tensor_from(&one), 0, 0, 0.5), Err(SpiralError::DegenerateFit(_))));
        let line = [
            (SpiralIndex::new(1.0, band(-1.0), band(-0.5)).unwrap(), 1.0),
            (SpiralIndex::new(2.0, band(-2.0), band(-1.0)).unwrap(), 1.0),
            (SpiralIndex::new(4.0, band(-4.0), band(-2.0)).unwrap(), 1.0),
        ];
        assert!(matches!(fit_ridge_plane(&tensor_from(&line), 0, 0, 0.5), Err(SpiralError::DegenerateFit(_))));
    }

    fn banks() -> (WaveletFilterbank, SpiralBanks) {
        let mother = design_mother_wavelet(16.0).unwrap();
        let first = build_first_order_bank(&mother, 16, 8, 22050.0, 1 << 16).unwrap();
        let banks = build_spiral_banks(&SpiralBankConfig {
            alpha_range: (0.25, 8.0),
            beta_range: (0.5, 4.0),
            gamma_range: (0.25, 0.5),
            q2: 1,
            bins_per_octave: 16,
            octaves: 8,
        })
        .unwrap();
        (first, banks)
    }

    #[test]
    fn stationary_model_predicts_zero() {
        let (first, banks) = banks();
        let still = SourceFilterSpec {
            source_warp: WarpSpec::LinearScale { rate: 220.0 },
            filter_warp: WarpSpec::Identity,
            ..spec(0.0, 0.0)
        };
        let bin = first.centers().iter().position(|&c| (c / 440.0 - 1.0).abs() < 0.03).unwrap();
        for l in [0.5, 1.0, 4.0] {
            let idx = SpiralIndex::new(l, band(-1.0), band(0.25)).unwrap();
            let cf = closed_form_x2(&still, &first, &banks, bin, &idx, 1.0).unwrap();
            assert!(cf.modulation <= 1e-7);
        }
    }

    #[test]
    fn closed_form_is_separable() {
        let (first, banks) = banks();
        let s = spec(0.5, -0.25);
        let bin = 100;
        let eval = |b: f64, g: f64| {
            let cf = closed_form_x2(&s, &first, &banks, bin, &SpiralIndex::new(1.0, band(b), band(g)).unwrap(), 1.0)
                .unwrap();
            cf.source * cf.filter
        };
        let lhs = eval(-1.0, 0.25) * eval(2.0, -0.5);
        let rhs = eval(-1.0, -0.5) * eval(2.0, 0.25);
        assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs().max(1e-300));
    }
}
