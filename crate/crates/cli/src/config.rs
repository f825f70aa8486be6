use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spiral_core::filterbank::{
    build_first_order_bank, build_spiral_banks, design_mother_wavelet, fft_size_for, LowpassWindow,
    SpiralBankConfig,
};
use spiral_core::scalogram::{average_time, compute_scalogram, AveragedScalogram, Scalogram, Signal};
use spiral_core::scattering::{scatter, ScatteringMode, ScatteringOptions, ScatteringTensor};
use spiral_core::{Result, SpiralError};

/// Analysis settings, read from a JSON document and overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(rename = "Q1")]
    pub q1: usize,
    #[serde(rename = "Q2")]
    pub q2: u32,
    #[serde(rename = "J")]
    pub octaves: usize,
    /// Averaging scale of `S1` (and of `S2` with `average`), seconds.
    #[serde(rename = "T")]
    pub t: f64,
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub gamma_range: (f64, f64),
    pub hop: usize,
    pub decimation: usize,
    pub mode: ScatteringMode,
    /// Average the second-order tensor with `φ_T` as well.
    pub average: bool,
    pub output: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            q1: 12,
            q2: 1,
            octaves: 8,
            t: 0.1,
            alpha_range: (1.0, 32.0),
            beta_range: (0.5, 4.0),
            gamma_range: (0.25, 0.5),
            hop: 64,
            decimation: 1,
            mode: ScatteringMode::Spiral,
            average: false,
            output: PathBuf::from("out"),
        }
    }
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| SpiralError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| SpiralError::InvalidParameter {
        name: "config",
        reason: format!("{}: {e}", path.display()),
    })
}

fn bad(name: &'static str, reason: String) -> SpiralError {
    SpiralError::InvalidParameter { name, reason }
}

impl PipelineConfig {
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

    /// Checks everything that does not depend on the input signal.
    pub fn validate(&self) -> Result<()> {
        if self.q1 == 0 {
            return Err(bad("Q1", "must be positive".into()));
        }
        if self.octaves == 0 {
            return Err(bad("J", "must be positive".into()));
        }
        if self.hop == 0 {
            return Err(bad("hop", "must be positive".into()));
        }
        if self.decimation == 0 {
            return Err(bad("decimation", "must be positive".into()));
        }
        LowpassWindow::new(self.t)?;
        if self.mode == ScatteringMode::Spiral && self.octaves < 2 {
            return Err(bad(
                "J",
                format!(
                    "spiral scattering convolves across octaves and needs a span of at least 2, got J={}",
                    self.octaves
                ),
            ));
        }
        let mut banks = self.bank_config();
        // Time and joint modes never build a γ bank, so its span is moot.
        banks.octaves = banks.octaves.max(2);
        build_spiral_banks(&banks)?;
        Ok(())
    }
}

pub struct Analysis {
    pub x1: Scalogram,
    pub s1: AveragedScalogram,
    pub x2: ScatteringTensor,
}

pub fn analyze(signal: &Signal, cfg: &PipelineConfig) -> Result<Analysis> {
    cfg.validate()?;
    let sr = signal.sample_rate();
    let mother = design_mother_wavelet(cfg.q1 as f64)?;
    let fft = fft_size_for(signal.len(), cfg.q1, cfg.octaves, sr)?;
    let first = build_first_order_bank(&mother, cfg.q1, cfg.octaves, sr, fft)?;
    let x1 = compute_scalogram(signal, &first, cfg.hop)?;
    let lowpass = LowpassWindow::new(cfg.t)?;
    let s1 = average_time(&x1, &lowpass)?;
    let mut bank_cfg = cfg.bank_config();
    bank_cfg.octaves = bank_cfg.octaves.max(2);
    let banks = build_spiral_banks(&bank_cfg)?;
    let opts = ScatteringOptions {
        lowpass: cfg.average.then_some(lowpass),
        decimation: cfg.decimation,
        ..Default::default()
    };
    let (beta, gamma) = match cfg.mode {
        ScatteringMode::Time => (None, None),
        ScatteringMode::Joint => (Some(&banks.beta), None),
        ScatteringMode::Spiral => (Some(&banks.beta), Some(&banks.gamma)),
    };
    let x2 = scatter(&x1, &banks.alpha, beta, gamma, &opts)?;
    Ok(Analysis { x1, s1, x2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_documents_fill_defaults() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"Q1": 16, "mode": "joint"}"#).unwrap();
        assert_eq!(cfg.q1, 16);
        assert_eq!(cfg.mode, ScatteringMode::Joint);
        assert_eq!(cfg.octaves, PipelineConfig::default().octaves);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"Q3": 1}"#).is_err());
    }

    #[test]
    fn invariants_are_named() {
        let cfg = PipelineConfig {
            octaves: 1,
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("`J`"));
        let cfg = PipelineConfig {
            beta_range: (0.5, 16.0),
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("beta_range"));
        let time_only = PipelineConfig {
            octaves: 1,
            mode: ScatteringMode::Time,
            ..Default::default()
        };
        time_only.validate().unwrap();
    }
}
