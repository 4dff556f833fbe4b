//! FFT plumbing shared by the propagation and estimation kernels.
//!
//! Forward transforms are unnormalized; inverse transforms divide by `n`, so
//! `inverse(forward(x)) == x`. Time is measured in ps and angular frequency in
//! rad/ps, which pairs with dispersion in ps².

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// A forward/inverse transform pair for one length with its own scratch.
pub struct Transform {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    len: usize,
}

impl Transform {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    pub fn inverse(&mut self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Frequency of FFT bin `k` for a length-`n` transform, in units of the sample rate.
#[inline]
pub fn bin_frequency(k: usize, n: usize) -> f64 {
    let k = k as isize;
    let n_i = n as isize;
    let signed = if k < (n_i + 1) / 2 { k } else { k - n_i };
    signed as f64 / n as f64
}

/// Baseband frequencies in Hz, FFT order.
pub fn frequency_grid_hz(n: usize, sample_rate_hz: f64) -> Vec<f64> {
    (0..n).map(|k| bin_frequency(k, n) * sample_rate_hz).collect()
}

/// Angular frequencies in rad/ps, FFT order.
pub fn omega_grid(n: usize, sample_rate_hz: f64) -> Vec<f64> {
    frequency_grid_hz(n, sample_rate_hz)
        .into_iter()
        .map(|f| 2.0 * PI * f * 1e-12)
        .collect()
}

/// All-pass dispersion response `exp(j * beta2_total / 2 * w^2)` for accumulated `beta2_total` in ps².
pub fn dispersion_response(omega: &[f64], beta2_total_ps2: f64) -> Vec<Complex64> {
    omega
        .iter()
        .map(|&w| Complex64::from_polar(1.0, 0.5 * beta2_total_ps2 * w * w))
        .collect()
}
