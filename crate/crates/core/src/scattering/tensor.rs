use serde::{Deserialize, Serialize};

use super::index::SpiralIndex;
use crate::error::{Result, SpiralError};
use crate::scalogram::FrequencyAxis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScatteringMode {
    Time,
    Joint,
    Spiral,
}

/// Nonnegative coefficients over `(frame, log λ1 bin, λ2)`, row-major in
/// that axis order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringTensor {
    values: Vec<f64>,
    frames: usize,
    hop: usize,
    sample_rate: f64,
    axis: FrequencyAxis,
    lambda2: Vec<SpiralIndex>,
    mode: ScatteringMode,
    averaging: Option<f64>,
    warnings: Vec<String>,
}

impl ScatteringTensor {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        values: Vec<f64>,
        frames: usize,
        hop: usize,
        sample_rate: f64,
        axis: FrequencyAxis,
        lambda2: Vec<SpiralIndex>,
        mode: ScatteringMode,
        averaging: Option<f64>,
    ) -> Result<Self> {
        let expected = frames * axis.len() * lambda2.len();
        if values.len() != expected {
            return Err(SpiralError::Shape(format!(
                "{} values for {frames} × {} × {}",
                values.len(),
                axis.len(),
                lambda2.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SpiralError::Shape("coefficients must be finite and nonnegative".into()));
        }
        for (i, a) in lambda2.iter().enumerate() {
            if lambda2[..i].iter().any(|b| b == a) {
                return Err(SpiralError::Shape(format!("duplicate λ2 entry {a:?}")));
            }
        }
        Ok(Self {
            values,
            frames,
            hop,
            sample_rate,
            axis,
            lambda2,
            mode,
            averaging,
            warnings: Vec::new(),
        })
    }

    pub(crate) fn with_warnings(mut self, warnings: Vec<String>) -> Self {
        self.warnings = warnings;
        self
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

    pub fn lambda2(&self) -> &[SpiralIndex] {
        &self.lambda2
    }

    pub fn mode(&self) -> ScatteringMode {
        self.mode
    }

    pub fn averaging(&self) -> Option<f64> {
        self.averaging
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn at(&self, frame: usize, bin: usize, l2: usize) -> f64 {
        self.values[(frame * self.bins() + bin) * self.lambda2.len() + l2]
    }

    /// All λ2 coefficients at one `(frame, bin)`.
    pub fn fiber(&self, frame: usize, bin: usize) -> &[f64] {
        let n = self.lambda2.len();
        let start = (frame * self.bins() + bin) * n;
        &self.values[start..start + n]
    }

    /// Time series of one `(bin, λ2)` channel.
    pub fn channel(&self, bin: usize, l2: usize) -> Vec<f64> {
        (0..self.frames).map(|t| self.at(t, bin, l2)).collect()
    }

    pub fn position(&self, index: &SpiralIndex) -> Option<usize> {
        self.lambda2.iter().position(|x| x == index)
    }

    /// Same coefficients with the λ2 axis permuted: entry `i` of the result
    /// is entry `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let n = self.lambda2.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(SpiralError::Shape("not a permutation of the λ2 axis".into()));
        }
        let mut values = Vec::with_capacity(self.values.len());
        for chunk in self.values.chunks(n) {
            values.extend(order.iter().map(|&i| chunk[i]));
        }
        Ok(Self {
            values,
            lambda2: order.iter().map(|&i| self.lambda2[i]).collect(),
            ..self.clone()
        })
    }
}
