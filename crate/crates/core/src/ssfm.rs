//! Split-step Fourier propagation.
//!
//! Field evolution follows
//! `∂E/∂z = −j(β2/2)∂²E/∂t² − (α/2)E − jγ_eff|E|²E`, i.e. in the frequency
//! domain dispersion multiplies by `exp(+j(β2/2)ω²z)`. Fiber segments use the
//! symmetric scheme (half dispersion, nonlinear phase over the effective
//! length, half dispersion) with adjacent half steps fused. Boundaries are
//! periodic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_config, Error, Result};
use crate::link::{NoiseLevel, PropagationPlan, Step};
use crate::rng::{derive_seed, Stream};
use crate::spectral::{bin_frequency, dispersion_response, omega_grid, Transform};
use crate::units::db_to_lin;
use crate::waveform::{generate_awgn, ComplexWaveform};

/// Manakov averaging factor for the dual-polarization Kerr term.
pub const MANAKOV_FACTOR: f64 = 8.0 / 9.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Symmetric,
}

fn default_step() -> f64 {
    0.25
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsfmConfig {
    #[serde(default = "default_step")]
    pub step_km: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Use the Manakov equation for dual-polarization fields.
    #[serde(default = "default_true")]
    pub manakov: bool,
    /// Bandwidth in which in-band noise levels are defined (the signal symbol
    /// rate). Required when the plan carries in-band noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_bandwidth_hz: Option<f64>,
}

impl Default for SsfmConfig {
    fn default() -> Self {
        Self {
            step_km: default_step(),
            scheme: Scheme::Symmetric,
            manakov: true,
            noise_bandwidth_hz: None,
        }
    }
}

impl SsfmConfig {
    pub fn with_step(step_km: f64) -> Self {
        Self {
            step_km,
            ..Self::default()
        }
    }

    pub fn with_noise_bandwidth(mut self, hz: f64) -> Self {
        self.noise_bandwidth_hz = Some(hz);
        self
    }
}

fn apply_response(buf: &mut [Complex64], h: &[Complex64]) {
    for (b, g) in buf.iter_mut().zip(h) {
        *b *= g;
    }
}

/// All-pass chromatic dispersion with accumulated `beta2_total` (ps²).
pub fn dispersion_step(w: &ComplexWaveform, beta2_total: f64) -> ComplexWaveform {
    if beta2_total == 0.0 {
        return w.clone();
    }
    let n = w.len();
    let h = dispersion_response(&omega_grid(n, w.sample_rate()), beta2_total);
    let mut fft = Transform::new(n);
    let mut out = w.clone();
    for pol in out.pols_mut() {
        fft.forward(pol);
        apply_response(pol, &h);
        fft.inverse(pol);
    }
    out
}

fn effective_gamma(gamma: f64, manakov: bool, pol_count: usize) -> f64 {
    if manakov && pol_count == 2 {
        gamma * MANAKOV_FACTOR
    } else {
        gamma
    }
}

fn kerr_rotate(pols: &mut [Vec<Complex64>], gamma_eff: f64, effective_km: f64, amplitude_scale: f64) {
    let n = pols[0].len();
    // mW -> W
    let k = -gamma_eff * effective_km * 1e-3;
    for t in 0..n {
        let p: f64 = pols.iter().map(|pol| pol[t].norm_sqr()).sum();
        let rot = Complex64::from_polar(amplitude_scale, k * p);
        for pol in pols.iter_mut() {
            pol[t] *= rot;
        }
    }
}

/// Kerr phase rotation `exp(−j·γ_eff·P_tot(t)·L_eff)`, with `P_tot` summed over
/// polarizations and converted to W. `γ_eff = 8/9·γ` when `manakov` is set and
/// the field is dual-polarization.
pub fn nonlinear_step(w: &ComplexWaveform, gamma: f64, effective_km: f64, manakov: bool) -> Result<ComplexWaveform> {
    if !(effective_km >= 0.0) {
        return invalid_arg(format!("effective length must be non-negative, got {effective_km}"));
    }
    let mut out = w.clone();
    if gamma == 0.0 || effective_km == 0.0 {
        return Ok(out);
    }
    let g = effective_gamma(gamma, manakov, w.pol_count());
    kerr_rotate(out.pols_mut(), g, effective_km, 1.0);
    Ok(out)
}

/// Effective nonlinear length of a lossy segment, `(1 − e^{−αΔz})/α`.
pub fn effective_length(alpha_per_km: f64, dz_km: f64) -> f64 {
    if alpha_per_km == 0.0 {
        dz_km
    } else {
        -(-alpha_per_km * dz_km).exp_m1() / alpha_per_km
    }
}

fn scale_all(pols: &mut [Vec<Complex64>], factor: f64) {
    for s in pols.iter_mut().flatten() {
        *s *= factor;
    }
}

struct FiberSegment<'a> {
    length_km: f64,
    alpha_per_km: f64,
    beta2: f64,
    gamma: f64,
    omega: &'a [f64],
}

fn propagate_fiber(
    pols: &mut [Vec<Complex64>],
    seg: &FiberSegment<'_>,
    step_km: f64,
    manakov: bool,
    fft: &mut Transform,
) {
    if seg.gamma == 0.0 {
        let h = dispersion_response(seg.omega, seg.beta2 * seg.length_km);
        for pol in pols.iter_mut() {
            fft.forward(pol);
            apply_response(pol, &h);
            fft.inverse(pol);
        }
        scale_all(pols, (-seg.alpha_per_km * seg.length_km / 2.0).exp());
        return;
    }
    let steps = (seg.length_km / step_km - 1e-9).ceil().max(1.0) as usize;
    let dz = seg.length_km / steps as f64;
    let half = dispersion_response(seg.omega, seg.beta2 * dz / 2.0);
    let full = dispersion_response(seg.omega, seg.beta2 * dz);
    let leff = effective_length(seg.alpha_per_km, dz);
    let attenuation = (-seg.alpha_per_km * dz / 2.0).exp();
    let g = effective_gamma(seg.gamma, manakov, pols.len());

    for pol in pols.iter_mut() {
        fft.forward(pol);
        apply_response(pol, &half);
    }
    for i in 0..steps {
        for pol in pols.iter_mut() {
            fft.inverse(pol);
        }
        kerr_rotate(pols, g, leff, attenuation);
        let h = if i + 1 == steps { &half } else { &full };
        for pol in pols.iter_mut() {
            fft.forward(pol);
            apply_response(pol, h);
        }
    }
    for pol in pols.iter_mut() {
        fft.inverse(pol);
    }
}

/// Propagate `w` through every step of `plan`.
///
/// Noise injections draw from streams derived from `seed` and the injection
/// index, so the output is a pure function of the inputs.
pub fn propagate(w: &ComplexWaveform, plan: &PropagationPlan, cfg: &SsfmConfig, seed: u64) -> Result<ComplexWaveform> {
    if !(cfg.step_km > 0.0 && cfg.step_km.is_finite()) {
        return invalid_config(format!("step size must be positive, got {}", cfg.step_km));
    }
    let shortest = plan.shortest_fiber_km();
    if cfg.step_km > shortest + 1e-12 {
        return invalid_config(format!(
            "step size {} km exceeds the shortest span ({shortest} km)",
            cfg.step_km
        ));
    }
    let n = w.len();
    let fs = w.sample_rate();
    let omega = omega_grid(n, fs);
    let mut fft = Transform::new(n);
    let mut out = w.clone();
    let mut noise_index = 0u64;
    for step in plan.steps() {
        match *step {
            Step::Fiber {
                length_km,
                alpha_per_km,
                beta2_ps2_per_km,
                gamma_per_w_km,
                ..
            } => {
                let seg = FiberSegment {
                    length_km,
                    alpha_per_km,
                    beta2: beta2_ps2_per_km,
                    gamma: gamma_per_w_km,
                    omega: &omega,
                };
                propagate_fiber(out.pols_mut(), &seg, cfg.step_km, cfg.manakov, &mut fft);
            }
            Step::Gain { gain_db, .. } => scale_all(out.pols_mut(), db_to_lin(gain_db).sqrt()),
            Step::Loss { loss_db, .. } => scale_all(out.pols_mut(), db_to_lin(-loss_db).sqrt()),
            Step::Noise { level, .. } => {
                let total_mw = match level {
                    NoiseLevel::InBand { power_mw } => {
                        let b = cfg.noise_bandwidth_hz.ok_or_else(|| {
                            Error::InvalidConfig("in-band noise requires noise_bandwidth_hz".into())
                        })?;
                        power_mw * fs / b
                    }
                    NoiseLevel::Psd { mw_per_hz } => mw_per_hz * fs,
                };
                let noise = generate_awgn(&out, total_mw, derive_seed(seed, Stream::Noise, noise_index))?;
                noise_index += 1;
                out = out.add(&noise)?;
            }
        }
    }
    Ok(out)
}

fn bin_shift(offset_hz: f64, n: usize, fs: f64) -> isize {
    (offset_hz / (fs / n as f64)).round() as isize
}

/// Largest |bin index| carrying non-negligible power, over all polarizations.
fn occupied_half_width(spectra: &[Vec<Complex64>]) -> usize {
    let n = spectra[0].len();
    let peak = spectra.iter().flatten().map(|c| c.norm_sqr()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0;
    }
    let mut hw = 0usize;
    for spec in spectra {
        for (k, c) in spec.iter().enumerate() {
            if c.norm_sqr() > 1e-16 * peak {
                let signed = (bin_frequency(k, n) * n as f64).round().abs() as usize;
                hw = hw.max(signed);
            }
        }
    }
    hw
}

fn rotate_bins(spec: &[Complex64], shift: isize) -> Vec<Complex64> {
    let n = spec.len() as isize;
    let mut out = vec![Complex64::new(0.0, 0.0); spec.len()];
    for (k, v) in spec.iter().enumerate() {
        let dst = (k as isize + shift).rem_euclid(n) as usize;
        out[dst] = *v;
    }
    out
}

/// Sum of channels shifted to their frequency offsets.
///
/// Offsets snap to the nearest FFT bin so the circular time grid stays
/// consistent. A channel whose shifted spectrum would wrap around the
/// simulated band is rejected.
pub fn wdm_multiplex(channels: &[(ComplexWaveform, f64)]) -> Result<ComplexWaveform> {
    let Some((first, _)) = channels.first() else {
        return invalid_arg("no channels to multiplex");
    };
    let n = first.len();
    let fs = first.sample_rate();
    let mut fft = Transform::new(n);
    let mut acc = vec![vec![Complex64::new(0.0, 0.0); n]; first.pol_count()];
    for (w, offset) in channels {
        first.check_compatible(w)?;
        let shift = bin_shift(*offset, n, fs);
        let mut spectra: Vec<Vec<Complex64>> = w.pols().to_vec();
        for s in spectra.iter_mut() {
            fft.forward(s);
        }
        let hw = occupied_half_width(&spectra);
        if shift.unsigned_abs() + hw >= n / 2 {
            return Err(Error::InvalidConfig(format!(
                "channel at {offset} Hz does not fit in the simulated band of {fs} Hz"
            )));
        }
        for (a, s) in acc.iter_mut().zip(&spectra) {
            for (x, y) in a.iter_mut().zip(rotate_bins(s, shift)) {
                *x += y;
            }
        }
    }
    for a in acc.iter_mut() {
        fft.inverse(a);
    }
    Ok(ComplexWaveform::from_parts(acc, fs, first.center_offset()))
}

/// Brick-wall filter of total width `bandwidth_hz` around `offset_hz`, shifted to baseband.
pub fn channel_select(w: &ComplexWaveform, offset_hz: f64, bandwidth_hz: f64) -> Result<ComplexWaveform> {
    let fs = w.sample_rate();
    if !(bandwidth_hz > 0.0 && bandwidth_hz <= fs) {
        return invalid_arg(format!("selection bandwidth must be in (0, {fs}], got {bandwidth_hz}"));
    }
    let n = w.len();
    let shift = bin_shift(offset_hz, n, fs);
    let mut fft = Transform::new(n);
    let pols = w
        .pols()
        .iter()
        .map(|pol| {
            let mut s = pol.clone();
            fft.forward(&mut s);
            let mut s = rotate_bins(&s, -shift);
            for (k, v) in s.iter_mut().enumerate() {
                if (bin_frequency(k, n) * fs).abs() > bandwidth_hz / 2.0 * (1.0 + 1e-12) {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
            fft.inverse(&mut s);
            s
        })
        .collect();
    Ok(ComplexWaveform::from_parts(pols, fs, w.center_offset() + offset_hz))
}

/// Spectral resampling to `new_len` samples over the same time window.
///
/// Content outside the new Nyquist band is discarded, so the caller should
/// band-limit first when decimating.
pub fn resample(w: &ComplexWaveform, new_len: usize) -> Result<ComplexWaveform> {
    if new_len == 0 {
        return invalid_arg("resample length must be positive");
    }
    let n = w.len();
    if new_len == n {
        return Ok(w.clone());
    }
    let mut fwd = Transform::new(n);
    let mut inv = Transform::new(new_len);
    let keep = n.min(new_len);
    let pos = keep.div_ceil(2);
    let neg = keep / 2;
    let gain = new_len as f64 / n as f64;
    let pols = w
        .pols()
        .iter()
        .map(|pol| {
            let mut s = pol.clone();
            fwd.forward(&mut s);
            let mut out = vec![Complex64::new(0.0, 0.0); new_len];
            for k in 0..pos {
                out[k] = s[k] * gain;
            }
            for k in 1..=neg {
                out[new_len - k] = s[n - k] * gain;
            }
            inv.inverse(&mut out);
            out
        })
        .collect();
    let fs = w.sample_rate() * new_len as f64 / n as f64;
    Ok(ComplexWaveform::from_parts(pols, fs, w.center_offset()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{compile, FiberSpan, LinkElement, LinkSpec, NoiseInjection, NoiseMode, NoisePower};
    use crate::waveform::{average_power, generate_symbols, set_average_power, shape_pulse};
    use rand::Rng;

    fn random_waveform(pols: usize, n: usize, seed: u64) -> ComplexWaveform {
        let mut rng = crate::rng::rng_from_seed(seed);
        let data = (0..pols)
            .map(|_| {
                (0..n)
                    .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect()
            })
            .collect();
        ComplexWaveform::new(data, 100e9, 0.0).unwrap()
    }

    fn rms_diff(a: &ComplexWaveform, b: &ComplexWaveform) -> f64 {
        let d: f64 = a
            .pols()
            .iter()
            .flatten()
            .zip(b.pols().iter().flatten())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        (d / (a.len() * a.pol_count()) as f64).sqrt()
    }

    #[test]
    fn zero_dispersion_is_identity() {
        let w = random_waveform(2, 256, 1);
        assert_eq!(dispersion_step(&w, 0.0), w);
    }

    #[test]
    fn dispersion_is_unitary_and_invertible() {
        let w = random_waveform(2, 1024, 2);
        let fwd = dispersion_step(&w, -1734.7);
        assert!((fwd.energy() - w.energy()).abs() <= 1e-12 * w.energy());
        let back = dispersion_step(&fwd, 1734.7);
        assert!(rms_diff(&back, &w) < 1e-12);
    }

    #[test]
    fn gaussian_pulse_matches_closed_form() {
        // dt = 0.5 ps, T0 = 20 ps, B = -2000 ps^2
        let n = 8192;
        let fs = 2e12;
        let dt = 1e12 / fs;
        let t0 = 20.0;
        let b = -2000.0;
        let t = |k: usize| (k as f64 - (n / 2) as f64) * dt;
        let pulse: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new((-t(k) * t(k) / (2.0 * t0 * t0)).exp(), 0.0))
            .collect();
        let w = ComplexWaveform::new(vec![pulse], fs, 0.0).unwrap();
        let out = dispersion_step(&w, b);
        let q = Complex64::new(t0 * t0, -b);
        let amp = Complex64::new(t0, 0.0) / q.sqrt();
        let mut max_err: f64 = 0.0;
        for (k, v) in out.pol(0).iter().enumerate() {
            let exact = amp * (-(t(k) * t(k)) / (2.0 * q)).exp();
            max_err = max_err.max((v - exact).norm());
        }
        let peak = amp.norm();
        assert!(max_err / peak < 1e-6, "field error {}", max_err / peak);

        // RMS intensity width against T0·sqrt(1 + (B/T0²)²)
        let e: f64 = out.pol(0).iter().map(|v| v.norm_sqr()).sum();
        let m2: f64 = out
            .pol(0)
            .iter()
            .enumerate()
            .map(|(k, v)| t(k) * t(k) * v.norm_sqr())
            .sum::<f64>()
            / e;
        let width = (2.0 * m2).sqrt();
        let expected = t0 * (1.0 + (b / (t0 * t0)).powi(2)).sqrt();
        assert!(((width - expected) / expected).abs() < 1e-6, "{width} vs {expected}");
    }

    #[test]
    fn nonlinear_step_examples() {
        let w = random_waveform(2, 512, 3);
        assert_eq!(nonlinear_step(&w, 0.0, 10.0, true).unwrap(), w);
        let out = nonlinear_step(&w, 1.3, 20.0, true).unwrap();
        for (a, b) in w.pols().iter().flatten().zip(out.pols().iter().flatten()) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
        assert!((out.energy() - w.energy()).abs() <= 1e-12 * w.energy());
        assert!(nonlinear_step(&w, 1.3, -1.0, true).is_err());
    }

    #[test]
    fn cw_spm_phase() {
        let p_mw: f64 = 10.0;
        let cw = ComplexWaveform::new(vec![vec![Complex64::new(p_mw.sqrt(), 0.0); 64]], 1e9, 0.0).unwrap();
        let leff = effective_length(crate::units::alpha_db_to_neper(0.2), 80.0);
        let out = nonlinear_step(&cw, 1.3, leff, false).unwrap();
        let expected = -1.3 * p_mw * 1e-3 * leff;
        for v in out.pol(0) {
            assert!((v.arg() - expected).abs() < 1e-12);
            assert!((v.norm() - p_mw.sqrt()).abs() < 1e-12);
        }
        // Manakov: same total power split over two pols rotates by 8/9 of that.
        let half = (p_mw / 2.0).sqrt();
        let dp = ComplexWaveform::new(vec![vec![Complex64::new(half, 0.0); 8]; 2], 1e9, 0.0).unwrap();
        let out = nonlinear_step(&dp, 1.3, leff, true).unwrap();
        assert!((out.pol(1)[0].arg() - expected * MANAKOV_FACTOR).abs() < 1e-12);
    }

    fn test_signal(symbols: usize, pols: usize, p_dbm: f64, seed: u64) -> ComplexWaveform {
        let frame = generate_symbols(symbols, pols, 68e9, seed).unwrap();
        set_average_power(&shape_pulse(&frame, 0.1, 2).unwrap(), p_dbm).unwrap()
    }

    #[test]
    fn linear_limit_reduces_to_dispersion_and_loss() {
        let mut span = FiberSpan::ssmf(80.0);
        span.gamma_per_w_km = 0.0;
        let spec = LinkSpec::new(
            vec![LinkElement::Span(span.clone()), LinkElement::Span(span.clone())],
            0.0,
            vec![],
        )
        .unwrap();
        let plan = compile(&spec).unwrap();
        let w = test_signal(1024, 2, 0.0, 1);
        let out = propagate(&w, &plan, &SsfmConfig::with_step(1.0), 0).unwrap();
        let expected = dispersion_step(&w, plan.cumulative_beta2(160.0).unwrap())
            .scaled(Complex64::new(db_to_lin(-32.0).sqrt(), 0.0));
        assert!(rms_diff(&out, &expected) < 1e-12 * average_power(&w).unwrap().sqrt());
    }

    #[test]
    fn step_larger_than_span_is_invalid() {
        let spec = LinkSpec::new(vec![LinkElement::Span(FiberSpan::ssmf(10.0))], 0.0, vec![]).unwrap();
        let plan = compile(&spec).unwrap();
        let w = test_signal(64, 1, 0.0, 1);
        assert!(matches!(
            propagate(&w, &plan, &SsfmConfig::with_step(20.0), 0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(propagate(&w, &plan, &SsfmConfig::with_step(0.0), 0).is_err());
    }

    #[test]
    fn step_halving_converges() {
        let mut span = FiberSpan::ssmf(10.0);
        span.alpha_db_per_km = 0.0;
        let spec = LinkSpec::new(vec![LinkElement::Span(span)], 0.0, vec![]).unwrap();
        let plan = compile(&spec).unwrap();
        let w = test_signal(1024, 1, 0.0, 7);
        let runs: Vec<ComplexWaveform> = [1.0, 0.5, 0.25, 0.125, 0.0625]
            .iter()
            .map(|&s| propagate(&w, &plan, &SsfmConfig::with_step(s), 0).unwrap())
            .collect();
        let diffs: Vec<f64> = runs.windows(2).map(|p| rms_diff(&p[0], &p[1])).collect();
        for d in diffs.windows(2) {
            assert!(d[1] < d[0], "{diffs:?}");
        }
        assert!(*diffs.last().unwrap() < 1e-6, "{diffs:?}");
    }

    #[test]
    fn injected_noise_hits_set_snr() {
        let mut elements = Vec::new();
        for k in 0..6 {
            elements.push(LinkElement::Amplifier(crate::link::AmplifierNode::auto(NoiseMode::None)));
            if k == 3 {
                elements.push(LinkElement::NoiseInjection(NoiseInjection {
                    power: NoisePower::SetSnrDb(20.0),
                }));
            }
            elements.push(LinkElement::Span(FiberSpan::ssmf(80.0)));
        }
        elements.push(LinkElement::Amplifier(crate::link::AmplifierNode::auto(NoiseMode::None)));
        let spec = LinkSpec::new(elements, 0.0, vec![]).unwrap();
        let plan = compile(&spec).unwrap();
        let w = test_signal(1 << 14, 1, 0.0, 11);
        let cfg = SsfmConfig::with_step(2.0).with_noise_bandwidth(68e9);
        let noisy = propagate(&w, &plan, &cfg, 5).unwrap();
        let mut clean_plan_spec = spec.clone();
        clean_plan_spec = LinkSpec::new(
            clean_plan_spec
                .elements()
                .iter()
                .filter(|e| !matches!(e, LinkElement::NoiseInjection(_)))
                .cloned()
                .collect(),
            0.0,
            vec![],
        )
        .unwrap();
        let clean = propagate(&w, &compile(&clean_plan_spec).unwrap(), &cfg, 5).unwrap();
        let diff = channel_select(&noisy.sub(&clean).unwrap(), 0.0, 68e9).unwrap();
        let snr_db = 10.0 * (average_power(&clean).unwrap() / average_power(&diff).unwrap()).log10();
        assert!((snr_db - 20.0).abs() < 0.3, "snr {snr_db}");
    }

    #[test]
    fn propagate_is_deterministic() {
        let spec = LinkSpec::uniform_chain(FiberSpan::ssmf(20.0), 2, 3.0, NoiseMode::SetSnrDb(15.0)).unwrap();
        let plan = compile(&spec).unwrap();
        let w = test_signal(256, 2, 3.0, 1);
        let cfg = SsfmConfig::with_step(1.0).with_noise_bandwidth(68e9);
        let a = propagate(&w, &plan, &cfg, 9).unwrap();
        let b = propagate(&w, &plan, &cfg, 9).unwrap();
        assert_eq!(a, b);
        let c = propagate(&w, &plan, &cfg, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn in_band_noise_needs_bandwidth() {
        let spec = LinkSpec::uniform_chain(FiberSpan::ssmf(20.0), 1, 0.0, NoiseMode::SetSnrDb(15.0)).unwrap();
        let plan = compile(&spec).unwrap();
        let w = test_signal(64, 1, 0.0, 1);
        assert!(propagate(&w, &plan, &SsfmConfig::with_step(1.0), 0).is_err());
    }

    fn shaped_at(sps: usize, seed: u64) -> ComplexWaveform {
        let frame = generate_symbols(512, 2, 10e9, seed).unwrap();
        shape_pulse(&frame, 0.1, sps).unwrap()
    }

    #[test]
    fn single_channel_multiplex_is_identity() {
        let a = shaped_at(8, 1);
        let m = wdm_multiplex(&[(a.clone(), 0.0)]).unwrap();
        assert!(rms_diff(&m, &a) < 1e-14);
    }

    #[test]
    fn disjoint_channels_separate_cleanly() {
        let a = shaped_at(8, 1);
        let b = shaped_at(8, 2);
        let m = wdm_multiplex(&[(a.clone(), 0.0), (b.clone(), 20e9)]).unwrap();
        assert!((m.energy() - a.energy() - b.energy()).abs() < 1e-9 * m.energy());
        let sel = channel_select(&m, 0.0, 1.1 * 10e9).unwrap();
        let rel = rms_diff(&sel, &a) / average_power(&a).unwrap().sqrt();
        assert!(rel < 1e-6, "{rel}");
        let sel_b = channel_select(&m, 20e9, 1.1 * 10e9).unwrap();
        let rel_b = rms_diff(&sel_b, &b) / average_power(&b).unwrap().sqrt();
        assert!(rel_b < 1e-6, "{rel_b}");
    }

    #[test]
    fn spectral_overflow_rejected() {
        let a = shaped_at(2, 1);
        assert!(matches!(wdm_multiplex(&[(a, 15e9)]), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn resample_preserves_band_limited_content() {
        let a = shaped_at(8, 4);
        let down = resample(&a, a.len() / 4).unwrap();
        assert!((down.sample_rate() - 20e9).abs() < 1e-3);
        let up = resample(&down, a.len()).unwrap();
        assert!(rms_diff(&up, &a) < 1e-12);
        let direct = shape_pulse(&generate_symbols(512, 2, 10e9, 4).unwrap(), 0.1, 2).unwrap();
        assert!(rms_diff(&down, &direct) < 1e-12);
    }
}
