//! End-to-end scenarios: synthesize a warped source-filter signal, run the
//! spiral pipeline, and compare the measured ridge with the model.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::filterbank::{
    build_first_order_bank, build_spiral_banks, design_mother_wavelet, fft_size_for, Sign, SpiralBankConfig,
    SpiralBanks, WaveletFilterbank,
};
use crate::scalogram::{compute_scalogram, Scalogram, Signal};
use crate::scattering::{scatter, ScatteringOptions, ScatteringTensor, SpiralIndex};
use crate::sourcefilter::{
    check_assumptions, closed_form_x2, fit_ridge_plane, predicted_plane, quadrant_argmax, synthesize,
    AssumptionReport, Envelope, PlaneFit, Quadrant, RidgePlane, SourceFilterSpec, WarpSpec,
};

/// Tolerances a scenario is judged against. Absent entries are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Expectations {
    pub v_theta_rel_tol: Option<f64>,
    pub v_eta_rel_tol: Option<f64>,
    pub closed_form_rel_tol: Option<f64>,
    /// Expected `(sign β, sign γ)` of the quadrant test.
    pub quadrant: Option<(Sign, Sign)>,
    /// Modulation frequency at which quadrants are compared; the fiber's
    /// strongest α when absent.
    pub quadrant_alpha: Option<f64>,
    /// Require every model assumption to hold at the analysis point.
    pub assumptions: bool,
    pub max_runtime_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub spec: SourceFilterSpec,
    pub duration: f64,
    pub sample_rate: f64,
    #[serde(rename = "Q1")]
    pub q1: usize,
    #[serde(rename = "Q2")]
    pub q2: u32,
    #[serde(rename = "J")]
    pub octaves: usize,
    /// Scalogram hop in samples.
    pub hop: usize,
    /// Frame decimation after the time stage.
    pub decimation: usize,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub gamma_range: (f64, f64),
    /// Time of the analyzed fiber, in seconds.
    pub analysis_time: f64,
    /// Harmonic whose first-order bin is analyzed.
    pub partial: usize,
    pub threshold_ratio: f64,
    #[serde(default)]
    pub expect: Expectations,
}

impl Scenario {
    /// Pitch rising 220 → 440 Hz over 0.5–2.5 s (0.5 octave/s) while the
    /// envelope contracts at 0.25 octave/s.
    pub fn ridge_plane() -> Self {
        Self {
            name: "ridge_plane".into(),
            spec: SourceFilterSpec {
                source_warp: WarpSpec::Exponential {
                    base_rate: 220.0 * (-0.25f64).exp2(),
                    velocity: 0.5,
                },
                filter_warp: WarpSpec::Exponential {
                    base_rate: 1.0,
                    velocity: -0.25,
                },
                envelope: Envelope::Gaussian { cutoff: 2000.0 },
                partial_count: 16,
                phase_seed: None,
            },
            duration: 3.0,
            sample_rate: 22050.0,
            q1: 16,
            q2: 1,
            octaves: 8,
            hop: 1,
            decimation: 256,
            alpha_range: (0.25, 8.0),
            beta_range: (0.5, 4.0),
            gamma_range: (0.25, 0.5),
            analysis_time: 1.5,
            partial: 4,
            threshold_ratio: 0.5,
            expect: Expectations {
                v_theta_rel_tol: Some(0.15),
                v_eta_rel_tol: Some(0.20),
                closed_form_rel_tol: Some(0.25),
                quadrant: None,
                quadrant_alpha: None,
                assumptions: true,
                max_runtime_s: Some(120.0),
            },
        }
    }

    /// Rising pitch and brightening envelope.
    pub fn attack() -> Self {
        Self::quadrant_case("attack", 0.5, 2.0, (Sign::Negative, Sign::Negative))
    }

    /// Falling pitch and darkening envelope.
    pub fn release() -> Self {
        Self::quadrant_case("release", -0.5, -2.0, (Sign::Positive, Sign::Positive))
    }

    /// Pitch at 311 Hz and unit envelope rate at 1.5 s.
    fn quadrant_case(name: &str, v_theta: f64, v_eta: f64, quadrant: (Sign, Sign)) -> Self {
        let base = Self::ridge_plane();
        Self {
            name: name.into(),
            spec: SourceFilterSpec {
                source_warp: WarpSpec::Exponential {
                    base_rate: 311.0 * (-1.5 * v_theta).exp2(),
                    velocity: v_theta,
                },
                filter_warp: WarpSpec::Exponential {
                    base_rate: (-1.5 * v_eta).exp2(),
                    velocity: v_eta,
                },
                ..base.spec
            },
            expect: Expectations {
                quadrant: Some(quadrant),
                ..Default::default()
            },
            // Octave-wide β filters leak the comb's non-octave-periodic
            // content into γ and swamp the envelope term.
            q2: 2,
            ..base
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "ridge_plane" => Some(Self::ridge_plane()),
            "attack" => Some(Self::attack()),
            "release" => Some(Self::release()),
            _ => None,
        }
    }

    pub fn bank_config(&self) -> SpiralBankConfig {
        SpiralBankConfig {
            alpha_range: self.alpha_range,
            beta_range: self.beta_range,
            gamma_range: self.gamma_range,
            q2: self.q2,
            bins_per_octave: self.q1,
            octaves: self.octaves,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.analysis_time >= 0.0 && self.analysis_time < self.duration) {
            return invalid("analysis_time", format!("must lie in [0, {})", self.duration));
        }
        if self.partial == 0 || self.partial > self.spec.partial_count {
            return invalid("partial", format!("must lie in 1..={}", self.spec.partial_count));
        }
        if self.hop == 0 || self.decimation == 0 {
            return invalid("hop", "hop and decimation must be at least 1");
        }
        Ok(())
    }
}

/// Everything computed by [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub signal: Signal,
    pub first: WaveletFilterbank,
    pub banks: SpiralBanks,
    pub x1: Scalogram,
    pub x2: ScatteringTensor,
    pub warnings: Vec<String>,
    pub runtime_s: f64,
}

impl PipelineRun {
    /// Frame of `x2` closest to `t` seconds.
    pub fn frame_at(&self, t: f64) -> usize {
        ((t * self.x2.frame_rate()).round() as usize).min(self.x2.frames() - 1)
    }
}

/// Synthesis → scalogram → spiral scattering (no time averaging).
pub fn run_pipeline(scenario: &Scenario) -> Result<PipelineRun> {
    scenario.validate()?;
    let start = Instant::now();
    let synth = synthesize(&scenario.spec, scenario.duration, scenario.sample_rate)?;
    let mother = design_mother_wavelet(scenario.q1 as f64)?;
    let n = synth.signal.len();
    let fft = fft_size_for(n, scenario.q1, scenario.octaves, scenario.sample_rate)?;
    let first = build_first_order_bank(&mother, scenario.q1, scenario.octaves, scenario.sample_rate, fft)?;
    let x1 = compute_scalogram(&synth.signal, &first, scenario.hop)?;
    let banks = build_spiral_banks(&scenario.bank_config())?;
    let opts = ScatteringOptions {
        decimation: scenario.decimation,
        ..Default::default()
    };
    let x2 = scatter(&x1, &banks.alpha, Some(&banks.beta), Some(&banks.gamma), &opts)?;
    let mut warnings = synth.warnings;
    warnings.extend(x2.warnings().iter().cloned());
    Ok(PipelineRun {
        signal: synth.signal,
        first,
        banks,
        x1,
        x2,
        warnings,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda2Entry {
    pub alpha_hz: f64,
    pub beta_cpo: f64,
    pub gamma_cpo: f64,
}

impl From<&SpiralIndex> for Lambda2Entry {
    fn from(i: &SpiralIndex) -> Self {
        Self {
            alpha_hz: i.alpha(),
            beta_cpo: i.beta_value(),
            gamma_cpo: i.gamma_value(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormCheck {
    pub lambda2: Lambda2Entry,
    pub measured: f64,
    pub predicted: f64,
    pub rel_error: f64,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub frame: usize,
    pub time_s: f64,
    pub lambda1_hz: f64,
    pub assumptions: AssumptionReport,
    pub predicted: RidgePlane,
    pub fitted: Option<PlaneFit>,
    pub fit_error: Option<String>,
    pub closed_form: Option<ClosedFormCheck>,
    pub quadrant: Option<Quadrant>,
    pub runtime_s: f64,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn rel_error(measured: f64, expected: f64) -> f64 {
    (measured - expected).abs() / expected.abs()
}

/// Judges a pipeline run against the scenario's expectations.
pub fn evaluate(scenario: &Scenario, run: &PipelineRun) -> Result<ValidationReport> {
    let frame = run.frame_at(scenario.analysis_time);
    let t = frame as f64 / run.x2.frame_rate();
    let target = scenario.partial as f64 * scenario.spec.source_warp.rate(t);
    let bin = run.x2.axis().nearest_bin(target);
    let assumptions = check_assumptions(&scenario.spec, &run.first, scenario.partial, t, None)?;
    let predicted = predicted_plane(&scenario.spec, t);
    let mut checks = Vec::new();
    let expect = &scenario.expect;

    let (fitted, fit_error) = match fit_ridge_plane(&run.x2, frame, bin, scenario.threshold_ratio) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    for (name, tol, truth, est) in [
        ("v_theta", expect.v_theta_rel_tol, predicted.v_theta, fitted.as_ref().map(|f| f.v_theta)),
        ("v_eta", expect.v_eta_rel_tol, predicted.v_eta, fitted.as_ref().map(|f| f.v_eta)),
    ] {
        if let Some(tol) = tol {
            let err = est.map(|e| rel_error(e, truth)).unwrap_or(f64::INFINITY);
            checks.push(Check {
                name: format!("{name}_rel_error"),
                passed: err <= tol,
                value: err,
                limit: tol,
            });
        }
    }

    if expect.assumptions {
        checks.push(Check {
            name: "partial_separation".into(),
            passed: assumptions.separation_ok(),
            value: assumptions.partial_separation,
            limit: 1.0,
        });
        for (name, v) in [
            ("source_variation", assumptions.source_variation),
            ("filter_variation", assumptions.filter_variation),
            ("spectral_smoothness", assumptions.spectral_smoothness),
        ] {
            checks.push(Check {
                name: name.into(),
                passed: v <= crate::sourcefilter::RATIO_LIMIT,
                value: v,
                limit: crate::sourcefilter::RATIO_LIMIT,
            });
        }
    }

    let fiber = run.x2.fiber(frame, bin);
    let argmax = (0..fiber.len()).max_by(|&a, &b| fiber[a].total_cmp(&fiber[b])).unwrap_or(0);
    let closed_form = match expect.closed_form_rel_tol {
        Some(tol) => {
            let idx = run.x2.lambda2()[argmax];
            let cf = closed_form_x2(&scenario.spec, &run.first, &run.banks, bin, &idx, t)?;
            let measured = fiber[argmax];
            let err = rel_error(cf.value, measured);
            checks.push(Check {
                name: "closed_form_rel_error".into(),
                passed: err <= tol,
                value: err,
                limit: tol,
            });
            Some(ClosedFormCheck {
                lambda2: (&idx).into(),
                measured,
                predicted: cf.value,
                rel_error: err,
                degraded: cf.degraded,
            })
        }
        None => None,
    };

    let quadrant = match expect.quadrant {
        Some((b, g)) => {
            let q = quadrant_argmax(&run.x2, frame, bin, expect.quadrant_alpha)?;
            checks.push(Check {
                name: "quadrant".into(),
                passed: q.beta == b && q.gamma == g,
                value: q.beta.value() * 2.0 + q.gamma.value(),
                limit: b.value() * 2.0 + g.value(),
            });
            Some(q)
        }
        None => None,
    };

    if let Some(limit) = expect.max_runtime_s {
        checks.push(Check {
            name: "runtime_s".into(),
            passed: run.runtime_s <= limit,
            value: run.runtime_s,
            limit,
        });
    }

    Ok(ValidationReport {
        scenario: scenario.name.clone(),
        frame,
        time_s: t,
        lambda1_hz: run.x2.axis().hz[bin],
        assumptions,
        predicted,
        passed: checks.iter().all(|c| c.passed),
        fitted,
        fit_error,
        closed_form,
        quadrant,
        runtime_s: run.runtime_s,
        warnings: run.warnings.clone(),
        checks,
    })
}

/// [`run_pipeline`] followed by [`evaluate`].
pub fn run_scenario(scenario: &Scenario) -> Result<ValidationReport> {
    let run = run_pipeline(scenario)?;
    evaluate(scenario, &run)
}
