//! Convolution engine shared by every cascade stage.
//!
//! Time-axis convolutions run on the FFT grid after reflect padding; the
//! filters are real-valued transfer functions, so their impulse responses are
//! centered on sample 0. Log-frequency and octave convolutions are short and
//! run directly with zero padding.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::filterbank::SampledFilter;

/// Index into an `n`-sample sequence under reflection without edge
/// repetition (`... x2 x1 | x0 x1 x2 ... | x_{n-2} ...`).
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Reflect-padded FFT convolution of length-`len` sequences.
pub struct TimeConvolver {
    len: usize,
    pad_left: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl TimeConvolver {
    /// Grid large enough for `min_pad` samples of padding on both sides.
    pub fn new(len: usize, min_pad: usize) -> Self {
        Self::with_fft_size(len, (len + 2 * min_pad).max(2).next_power_of_two())
    }

    pub fn with_fft_size(len: usize, n_fft: usize) -> Self {
        assert!(n_fft >= len, "FFT grid smaller than the sequence");
        let mut planner = FftPlanner::new();
        Self {
            len,
            pad_left: (n_fft - len) / 2,
            fwd: planner.plan_fft_forward(n_fft),
            inv: planner.plan_fft_inverse(n_fft),
        }
    }

    pub fn n_fft(&self) -> usize {
        self.fwd.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Padding available on the shorter side.
    pub fn pad(&self) -> usize {
        self.pad_left.min(self.n_fft() - self.len - self.pad_left)
    }

    pub fn spectrum_real(&self, x: &[f64]) -> Vec<Complex64> {
        self.spectrum_with(|i| Complex64::new(x[i], 0.0), x.len())
    }

    pub fn spectrum_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.spectrum_with(|i| x[i], x.len())
    }

    fn spectrum_with(&self, at: impl Fn(usize) -> Complex64, n: usize) -> Vec<Complex64> {
        assert_eq!(n, self.len);
        let n_fft = self.n_fft();
        let mut buf: Vec<Complex64> = (0..n_fft)
            .map(|k| at(reflect_index(k as isize - self.pad_left as isize, n)))
            .collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Multiplies `spectrum` by the dense real `transfer` and returns the
    /// cropped time-domain result.
    pub fn apply(&self, spectrum: &[Complex64], transfer: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = spectrum.iter().zip(transfer).map(|(s, &h)| s * h).collect();
        self.finish(&mut buf)
    }

    /// Same as [`TimeConvolver::apply`] for an arbitrary complex transfer.
    pub fn apply_complex(&self, spectrum: &[Complex64], transfer: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = spectrum.iter().zip(transfer).map(|(s, h)| s * h).collect();
        self.finish(&mut buf)
    }

    /// Same as [`TimeConvolver::apply`] for a filter stored sparsely on the
    /// nonnegative half of the grid.
    pub fn apply_sparse(&self, spectrum: &[Complex64], filter: &SampledFilter) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_fft()];
        for (i, &h) in filter.values.iter().enumerate() {
            let b = filter.first_bin + i;
            buf[b] = spectrum[b] * h;
        }
        self.finish(&mut buf)
    }

    fn finish(&self, buf: &mut [Complex64]) -> Vec<Complex64> {
        self.inv.process(buf);
        let scale = 1.0 / self.n_fft() as f64;
        buf[self.pad_left..self.pad_left + self.len]
            .iter()
            .map(|v| v * scale)
            .collect()
    }
}

/// Full linear convolution of two real sequences through a zero-padded FFT.
pub fn fft_convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let out_len = x.len() + h.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let load = |v: &[f64]| {
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf.iter_mut().zip(v).for_each(|(b, &s)| b.re = s);
        fwd.process(&mut buf);
        buf
    };
    let (a, b) = (load(x), load(h));
    let mut prod: Vec<Complex64> = a.iter().zip(&b).map(|(p, q)| p * q).collect();
    inv.process(&mut prod);
    prod[..out_len].iter().map(|v| v.re / n as f64).collect()
}

/// Discrete kernel along a short axis: `coeffs[j]` sits at offset
/// `min_offset + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisKernel {
    min_offset: isize,
    coeffs: Vec<Complex64>,
}

impl AxisKernel {
    pub fn new(min_offset: isize, coeffs: Vec<Complex64>) -> Self {
        Self { min_offset, coeffs }
    }

    pub fn identity() -> Self {
        Self::new(0, vec![Complex64::new(1.0, 0.0)])
    }

    pub fn is_identity(&self) -> bool {
        self.min_offset == 0 && self.coeffs == [Complex64::new(1.0, 0.0)]
    }

    pub fn min_offset(&self) -> isize {
        self.min_offset
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Zero-padded convolution over `count` samples of `data` starting at
    /// `start` with the given `stride`; writes the same positions of `out`.
    pub fn apply_strided(
        &self,
        data: &[Complex64],
        start: usize,
        stride: usize,
        count: usize,
        out: &mut [Complex64],
    ) {
        if self.is_identity() {
            for i in 0..count {
                out[start + i * stride] = data[start + i * stride];
            }
            return;
        }
        for i in 0..count as isize {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, c) in self.coeffs.iter().enumerate() {
                let src = i - (self.min_offset + j as isize);
                if src >= 0 && src < count as isize {
                    acc += c * data[start + src as usize * stride];
                }
            }
            out[start + i as usize * stride] = acc;
        }
    }

    pub fn apply(&self, data: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
        self.apply_strided(data, 0, 1, data.len(), &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_matches_numpy_convention() {
        let idx: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(idx, vec![2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1]);
        assert_eq!(reflect_index(-7, 1), 0);
    }

    #[test]
    fn constant_passes_unit_dc_transfer() {
        let conv = TimeConvolver::new(100, 20);
        let spec = conv.spectrum_real(&[3.0; 100]);
        let transfer: Vec<f64> = (0..conv.n_fft()).map(|m| if m == 0 { 1.0 } else { 0.5 }).collect();
        for v in conv.apply(&spec, &transfer) {
            assert!((v.re - 3.0).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn identity_kernel_is_exact() {
        let data: Vec<Complex64> = (0..10).map(|i| Complex64::new(i as f64 * 0.1, -0.3)).collect();
        assert_eq!(AxisKernel::identity().apply(&data), data);
    }

    #[test]
    fn axis_kernel_zero_pads() {
        let k = AxisKernel::new(-1, vec![Complex64::new(1.0, 0.0); 3]);
        let data = vec![Complex64::new(1.0, 0.0); 4];
        let out: Vec<f64> = k.apply(&data).iter().map(|c| c.re).collect();
        assert_eq!(out, vec![2.0, 3.0, 3.0, 2.0]);
    }

    #[test]
    fn fft_convolve_small() {
        let y = fft_convolve(&[1.0, 2.0, 3.0], &[0.0, 1.0, 0.5]);
        let expect = [0.0, 1.0, 2.5, 4.0, 1.5];
        for (a, b) in y.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
