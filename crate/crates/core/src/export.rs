//! Raw tensor files and their JSON sidecars.
//!
//! A tensor is stored as `<stem>.f32`, little-endian 32-bit floats in
//! row-major `(time, log λ1[, λ2])` order, next to `<stem>.meta.json`
//! describing every axis.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SpiralError};
use crate::filterbank::Sign;
use crate::scalogram::{AveragedScalogram, FrequencyAxis, Scalogram};
use crate::scattering::{ScatteringMode, ScatteringTensor, SpiralIndex};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lambda2Meta {
    pub alpha_hz: f64,
    pub beta_cpo: Option<f64>,
    pub gamma_cpo: Option<f64>,
    pub beta_sign: Option<Sign>,
    pub gamma_sign: Option<Sign>,
}

impl From<&SpiralIndex> for Lambda2Meta {
    fn from(i: &SpiralIndex) -> Self {
        Self {
            alpha_hz: i.alpha(),
            beta_cpo: i.beta().map(|q| q.value()),
            gamma_cpo: i.gamma().map(|q| q.value()),
            beta_sign: i.beta().map(|q| q.sign()),
            gamma_sign: i.gamma().map(|q| q.sign()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorMeta {
    /// `x1`, `S1`, or the scattering mode.
    pub kind: String,
    pub shape: Vec<usize>,
    pub axes: Vec<String>,
    pub dtype: String,
    pub hop: usize,
    pub sample_rate: f64,
    pub frame_rate: f64,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "J")]
    pub octaves: usize,
    /// Center of each log-frequency bin.
    pub hz: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<Vec<Lambda2Meta>>,
    /// Averaging scale in seconds, absent for unaveraged tensors.
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl TensorMeta {
    fn grid(kind: &str, x: &Scalogram, t: Option<f64>) -> Self {
        Self::base(kind, x.frames(), x.hop(), x.sample_rate(), x.frame_rate(), x.axis(), t)
    }

    fn base(
        kind: &str,
        frames: usize,
        hop: usize,
        sample_rate: f64,
        frame_rate: f64,
        axis: &FrequencyAxis,
        t: Option<f64>,
    ) -> Self {
        Self {
            kind: kind.into(),
            shape: vec![frames, axis.len()],
            axes: vec!["time".into(), "log_lambda1".into()],
            dtype: "f32le".into(),
            hop,
            sample_rate,
            frame_rate,
            q: axis.q,
            octaves: axis.octaves,
            hz: axis.hz.clone(),
            lambda2: None,
            t,
            warnings: Vec::new(),
        }
    }

    pub fn for_scalogram(x1: &Scalogram) -> Self {
        let mut m = Self::grid("x1", x1, None);
        m.warnings = x1.warnings().to_vec();
        m
    }

    pub fn for_averaged(s1: &AveragedScalogram) -> Self {
        Self::grid("S1", &s1.grid, Some(s1.t))
    }

    pub fn for_scattering(x2: &ScatteringTensor) -> Self {
        let kind = match x2.mode() {
            ScatteringMode::Time => "time",
            ScatteringMode::Joint => "joint",
            ScatteringMode::Spiral => "spiral",
        };
        let mut m = Self::base(
            kind,
            x2.frames(),
            x2.hop(),
            x2.sample_rate(),
            x2.frame_rate(),
            x2.axis(),
            x2.averaging(),
        );
        m.shape.push(x2.lambda2().len());
        m.axes.push("lambda2".into());
        m.lambda2 = Some(x2.lambda2().iter().map(Lambda2Meta::from).collect());
        m.warnings = x2.warnings().to_vec();
        m
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn width(&self) -> usize {
        self.shape.get(2).copied().unwrap_or(1)
    }
}

pub fn data_path(stem: &Path) -> PathBuf {
    with_suffix(stem, ".f32")
}

pub fn meta_path(stem: &Path) -> PathBuf {
    with_suffix(stem, ".meta.json")
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Strips a trailing `.f32` or `.meta.json`, so either file names the tensor.
pub fn stem_of(path: &Path) -> PathBuf {
    let s = path.to_string_lossy();
    for suffix in [".meta.json", ".f32"] {
        if let Some(stem) = s.strip_suffix(suffix) {
            return PathBuf::from(stem);
        }
    }
    path.to_path_buf()
}

pub fn encode_f32(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

pub fn write_tensor(stem: &Path, values: &[f64], meta: &TensorMeta) -> Result<()> {
    if values.len() != meta.len() {
        return Err(SpiralError::Shape(format!(
            "{} values for shape {:?}",
            values.len(),
            meta.shape
        )));
    }
    fs::write(data_path(stem), encode_f32(values))?;
    let json = serde_json::to_string_pretty(meta).map_err(|e| SpiralError::Io(e.to_string()))?;
    fs::write(meta_path(stem), json + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTensor {
    pub meta: TensorMeta,
    pub values: Vec<f32>,
}

pub fn read_tensor(path: &Path) -> Result<LoadedTensor> {
    let stem = stem_of(path);
    let text = fs::read_to_string(meta_path(&stem))?;
    let meta: TensorMeta = serde_json::from_str(&text)
        .map_err(|e| SpiralError::Io(format!("{}: {e}", meta_path(&stem).display())))?;
    let bytes = fs::read(data_path(&stem))?;
    if bytes.len() != 4 * meta.len() {
        return Err(SpiralError::Shape(format!(
            "{} bytes on disk for shape {:?}",
            bytes.len(),
            meta.shape
        )));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(LoadedTensor { meta, values })
}

/// Coordinates a slice can fix or range over. Periods are reciprocals:
/// seconds for α, signed octaves for β and γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SliceAxis {
    Time,
    Lambda1,
    Alpha,
    AlphaPeriod,
    Beta,
    BetaPeriod,
    Gamma,
    GammaPeriod,
}

impl SliceAxis {
    pub const ALL: [SliceAxis; 8] = [
        SliceAxis::Time,
        SliceAxis::Lambda1,
        SliceAxis::Alpha,
        SliceAxis::AlphaPeriod,
        SliceAxis::Beta,
        SliceAxis::BetaPeriod,
        SliceAxis::Gamma,
        SliceAxis::GammaPeriod,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SliceAxis::Time => "time_s",
            SliceAxis::Lambda1 => "lambda1_hz",
            SliceAxis::Alpha => "alpha_hz",
            SliceAxis::AlphaPeriod => "alpha_period_s",
            SliceAxis::Beta => "beta_cpo",
            SliceAxis::BetaPeriod => "beta_period_oct",
            SliceAxis::Gamma => "gamma_cpo",
            SliceAxis::GammaPeriod => "gamma_period_oct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let key = s.trim();
        Self::ALL.into_iter().find(|a| {
            a.name() == key || a.name().rsplit_once('_').map(|(b, _)| b) == Some(key)
        })
    }

    /// The underlying coordinate, with periods mapped to their rates.
    fn base(self) -> Coord {
        match self {
            SliceAxis::Time => Coord::Time,
            SliceAxis::Lambda1 => Coord::Lambda1,
            SliceAxis::Alpha | SliceAxis::AlphaPeriod => Coord::Alpha,
            SliceAxis::Beta | SliceAxis::BetaPeriod => Coord::Beta,
            SliceAxis::Gamma | SliceAxis::GammaPeriod => Coord::Gamma,
        }
    }

    fn is_period(self) -> bool {
        matches!(
            self,
            SliceAxis::AlphaPeriod | SliceAxis::BetaPeriod | SliceAxis::GammaPeriod
        )
    }

    /// Expresses a base-coordinate value in this axis' units.
    fn express(self, v: f64) -> f64 {
        if self.is_period() {
            if v == 0.0 {
                f64::INFINITY
            } else {
                1.0 / v
            }
        } else {
            v
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Coord {
    Time,
    Lambda1,
    Alpha,
    Beta,
    Gamma,
}

impl Coord {
    fn name(self) -> &'static str {
        match self {
            Coord::Time => "time",
            Coord::Lambda1 => "lambda1",
            Coord::Alpha => "alpha",
            Coord::Beta => "beta",
            Coord::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    Fixed(f64),
    /// Inclusive range; free axes without one span the whole tensor.
    Range(f64, f64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SliceSpec {
    pub selections: Vec<(SliceAxis, Selection)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    /// Free axis names followed by `value`.
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// Extracts every tensor entry matching `spec`.
///
/// Fixed coordinates snap to the nearest grid value, with a warning when
/// the request was off-grid; a fixed value outside the grid's extent by
/// more than one step is an error.
pub fn slice(tensor: &LoadedTensor, spec: &SliceSpec) -> Result<Slice> {
    let meta = &tensor.meta;
    let frames = meta.shape[0];
    let bins = meta.shape[1];
    let lambda2 = meta.lambda2.as_deref().unwrap_or(&[]);
    let has = |c: Coord| match c {
        Coord::Time | Coord::Lambda1 => true,
        Coord::Alpha => meta.lambda2.is_some(),
        Coord::Beta => lambda2.iter().any(|l| l.beta_cpo.is_some()),
        Coord::Gamma => lambda2.iter().any(|l| l.gamma_cpo.is_some()),
    };

    let mut warnings = Vec::new();
    let mut fixed: Vec<(Coord, f64)> = Vec::new();
    let mut ranges: Vec<(SliceAxis, f64, f64)> = Vec::new();
    for &(axis, sel) in &spec.selections {
        let coord = axis.base();
        if !has(coord) {
            return invalid("slice", format!("{} is not an axis of a `{}` tensor", axis.name(), meta.kind));
        }
        if fixed.iter().any(|(c, _)| *c == coord) || ranges.iter().any(|(a, _, _)| a.base() == coord) {
            return invalid("slice", format!("{} selected more than once", coord.name()));
        }
        match sel {
            Selection::Fixed(v) => {
                let v = if axis.is_period() { 1.0 / v } else { v };
                let grid = grid_values(meta, coord);
                let (snapped, w) = snap(coord, &grid, v)?;
                warnings.extend(w);
                fixed.push((coord, snapped));
            }
            Selection::Range(lo, hi) => ranges.push((axis, lo.min(hi), lo.max(hi))),
        }
    }

    let coord_of = |c: Coord, f: usize, b: usize, l: Option<&Lambda2Meta>| -> f64 {
        match c {
            Coord::Time => f as f64 / meta.frame_rate,
            Coord::Lambda1 => meta.hz[b],
            Coord::Alpha => l.map_or(0.0, |l| l.alpha_hz),
            Coord::Beta => l.and_then(|l| l.beta_cpo).unwrap_or(0.0),
            Coord::Gamma => l.and_then(|l| l.gamma_cpo).unwrap_or(0.0),
        }
    };

    let free: Vec<SliceAxis> = {
        let mut v: Vec<SliceAxis> = Vec::new();
        for c in [Coord::Time, Coord::Lambda1, Coord::Alpha, Coord::Beta, Coord::Gamma] {
            if !has(c) || fixed.iter().any(|(f, _)| *f == c) {
                continue;
            }
            let shown = ranges
                .iter()
                .find(|(a, _, _)| a.base() == c)
                .map(|(a, _, _)| *a)
                .unwrap_or(match c {
                    Coord::Time => SliceAxis::Time,
                    Coord::Lambda1 => SliceAxis::Lambda1,
                    Coord::Alpha => SliceAxis::Alpha,
                    Coord::Beta => SliceAxis::Beta,
                    Coord::Gamma => SliceAxis::Gamma,
                });
            v.push(shown);
        }
        v
    };
    let mut header: Vec<String> = free.iter().map(|a| a.name().to_string()).collect();
    header.push("value".into());

    let width = meta.width();
    let entries: Vec<Option<&Lambda2Meta>> = if meta.lambda2.is_some() {
        lambda2.iter().map(Some).collect()
    } else {
        vec![None]
    };
    let mut rows = Vec::new();
    for f in 0..frames {
        for b in 0..bins {
            for (k, l) in entries.iter().enumerate() {
                let at = |c: Coord| coord_of(c, f, b, *l);
                if fixed.iter().any(|&(c, v)| at(c) != v) {
                    continue;
                }
                if ranges.iter().any(|&(a, lo, hi)| {
                    let v = a.express(at(a.base()));
                    !(v >= lo && v <= hi)
                }) {
                    continue;
                }
                let mut row: Vec<f64> = free.iter().map(|a| a.express(at(a.base()))).collect();
                row.push(tensor.values[(f * bins + b) * width + k] as f64);
                rows.push(row);
            }
        }
    }
    Ok(Slice {
        header,
        rows,
        warnings,
    })
}

/// Distinct values of a coordinate, ascending.
fn grid_values(meta: &TensorMeta, c: Coord) -> Vec<f64> {
    let lambda2 = meta.lambda2.as_deref().unwrap_or(&[]);
    let mut v: Vec<f64> = match c {
        Coord::Time => (0..meta.shape[0]).map(|f| f as f64 / meta.frame_rate).collect(),
        Coord::Lambda1 => meta.hz.clone(),
        Coord::Alpha => lambda2.iter().map(|l| l.alpha_hz).collect(),
        Coord::Beta => lambda2.iter().filter_map(|l| l.beta_cpo).collect(),
        Coord::Gamma => lambda2.iter().filter_map(|l| l.gamma_cpo).collect(),
    };
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn snap(c: Coord, grid: &[f64], v: f64) -> Result<(f64, Option<String>)> {
    if !v.is_finite() {
        return invalid("slice", format!("fixed {} must be finite, got {v}", c.name()));
    }
    // Frequencies are compared on a log scale.
    let log = matches!(c, Coord::Lambda1 | Coord::Alpha);
    if log && v <= 0.0 {
        return invalid("slice", format!("fixed {} must be positive, got {v}", c.name()));
    }
    let key = |x: f64| if log { x.log2() } else { x };
    let Some(&nearest) = grid
        .iter()
        .min_by(|a, b| (key(**a) - key(v)).abs().total_cmp(&(key(**b) - key(v)).abs()))
    else {
        return invalid("slice", format!("tensor has no {} values", c.name()));
    };
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let step = if grid.len() > 1 {
        grid.windows(2).map(|w| key(w[1]) - key(w[0])).fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    if key(v) < key(lo) - step || key(v) > key(hi) + step {
        return invalid(
            "slice",
            format!("{} = {v} lies outside the tensor's range [{lo}, {hi}]", c.name()),
        );
    }
    let off_grid = (key(nearest) - key(v)).abs() > 1e-9 * key(v).abs().max(1.0);
    let warning = off_grid.then(|| format!("{} = {v} is off-grid; snapped to {nearest}", c.name()));
    Ok((nearest, warning))
}
