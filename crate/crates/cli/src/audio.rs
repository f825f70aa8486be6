use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use spiral_core::scalogram::Signal;
use spiral_core::{Result, SpiralError};

fn io(path: &Path, e: impl std::fmt::Display) -> SpiralError {
    SpiralError::Io(format!("{}: {e}", path.display()))
}

/// Reads PCM 16/24-bit or 32-bit float WAV. Only the first channel is kept.
pub fn read_wav(path: &Path, warnings: &mut Vec<String>) -> Result<Signal> {
    let mut reader = WavReader::open(path).map_err(|e| io(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(io(path, "no channels"));
    }
    if channels > 1 {
        warnings.push(format!("{}: {channels} channels, analyzing the first", path.display()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| io(path, e))?,
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = (1i64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| io(path, e))?
        }
        (format, bits) => {
            return Err(io(path, format!("unsupported sample format {format:?} with {bits} bits")));
        }
    };
    let samples = interleaved.into_iter().step_by(channels).collect();
    Signal::new(samples, spec.sample_rate as f64)
}

pub fn write_wav(path: &Path, signal: &Signal) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate().round() as u32,
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut w = WavWriter::create(path, spec).map_err(|e| io(path, e))?;
    for &s in signal.samples() {
        w.write_sample(s as f32).map_err(|e| io(path, e))?;
    }
    w.finalize().map_err(|e| io(path, e))
}
