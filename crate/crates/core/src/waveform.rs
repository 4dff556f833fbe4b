//! Symbol frames, sampled complex baseband waveforms, pulse shaping and
//! Gaussian noise.
//!
//! Amplitudes are in √mW, so `|sample|²` summed over polarizations is the
//! instantaneous optical power in mW.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};
use crate::rng::rng_from_seed;
use crate::spectral::{bin_frequency, Transform};
use crate::units::dbm_to_mw;

const QPSK_AMPLITUDE: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// QPSK symbols per polarization together with the symbol rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolFrame {
    symbols: Vec<Vec<Complex64>>,
    baud_rate: f64,
    seed: u64,
}

impl SymbolFrame {
    pub fn new(symbols: Vec<Vec<Complex64>>, baud_rate: f64, seed: u64) -> Result<Self> {
        check_pols(&symbols)?;
        if !(baud_rate > 0.0 && baud_rate.is_finite()) {
            return invalid_arg(format!("baud rate must be positive, got {baud_rate}"));
        }
        if symbols[0].is_empty() {
            return invalid_arg("symbol frame is empty");
        }
        Ok(Self {
            symbols,
            baud_rate,
            seed,
        })
    }

    pub fn symbols(&self) -> &[Vec<Complex64>] {
        &self.symbols
    }

    pub fn pol(&self, p: usize) -> &[Complex64] {
        &self.symbols[p]
    }

    pub fn pol_count(&self) -> usize {
        self.symbols.len()
    }

    /// Symbols per polarization.
    pub fn len(&self) -> usize {
        self.symbols[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn baud_rate(&self) -> f64 {
        self.baud_rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// A sampled complex baseband field with one or two polarizations.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexWaveform {
    pols: Vec<Vec<Complex64>>,
    sample_rate: f64,
    center_offset: f64,
}

impl ComplexWaveform {
    pub fn new(pols: Vec<Vec<Complex64>>, sample_rate: f64, center_offset: f64) -> Result<Self> {
        check_pols(&pols)?;
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return invalid_arg(format!("sample rate must be positive, got {sample_rate}"));
        }
        if !center_offset.is_finite() {
            return invalid_arg("center offset must be finite");
        }
        if pols.iter().flatten().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return invalid_arg("waveform contains non-finite samples");
        }
        Ok(Self {
            pols,
            sample_rate,
            center_offset,
        })
    }

    /// Build from samples already known to satisfy the invariants.
    pub(crate) fn from_parts(pols: Vec<Vec<Complex64>>, sample_rate: f64, center_offset: f64) -> Self {
        debug_assert!(check_pols(&pols).is_ok());
        Self {
            pols,
            sample_rate,
            center_offset,
        }
    }

    pub fn zeros(pol_count: usize, len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(
            vec![vec![Complex64::new(0.0, 0.0); len]; pol_count],
            sample_rate,
            0.0,
        )
    }

    pub fn pols(&self) -> &[Vec<Complex64>] {
        &self.pols
    }

    pub fn pol(&self, p: usize) -> &[Complex64] {
        &self.pols[p]
    }

    pub(crate) fn pols_mut(&mut self) -> &mut [Vec<Complex64>] {
        &mut self.pols
    }

    pub fn into_pols(self) -> Vec<Vec<Complex64>> {
        self.pols
    }

    pub fn pol_count(&self) -> usize {
        self.pols.len()
    }

    /// Samples per polarization.
    pub fn len(&self) -> usize {
        self.pols[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn center_offset(&self) -> f64 {
        self.center_offset
    }

    pub fn with_center_offset(mut self, offset_hz: f64) -> Self {
        self.center_offset = offset_hz;
        self
    }

    /// Sum over polarizations and samples of `|x|²` (mW · samples).
    pub fn energy(&self) -> f64 {
        self.pols.iter().flatten().map(|s| s.norm_sqr()).sum()
    }

    /// Total instantaneous power `Σ_pol |x(t)|²` per sample.
    pub fn instantaneous_power(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.len()];
        for pol in &self.pols {
            for (acc, s) in p.iter_mut().zip(pol) {
                *acc += s.norm_sqr();
            }
        }
        p
    }

    pub fn scaled(mut self, factor: Complex64) -> Self {
        for s in self.pols.iter_mut().flatten() {
            *s *= factor;
        }
        self
    }

    /// Sample-wise sum. Both operands must share shape and sample rate.
    pub fn add(&self, other: &ComplexWaveform) -> Result<ComplexWaveform> {
        self.check_compatible(other)?;
        let pols = self
            .pols
            .iter()
            .zip(&other.pols)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(Self::from_parts(pols, self.sample_rate, self.center_offset))
    }

    /// Sample-wise difference `self - other`.
    pub fn sub(&self, other: &ComplexWaveform) -> Result<ComplexWaveform> {
        self.check_compatible(other)?;
        let pols = self
            .pols
            .iter()
            .zip(&other.pols)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(Self::from_parts(pols, self.sample_rate, self.center_offset))
    }

    pub(crate) fn check_compatible(&self, other: &ComplexWaveform) -> Result<()> {
        if self.pol_count() != other.pol_count() || self.len() != other.len() {
            return invalid_arg(format!(
                "waveform shape mismatch: {}x{} vs {}x{}",
                self.pol_count(),
                self.len(),
                other.pol_count(),
                other.len()
            ));
        }
        if (self.sample_rate - other.sample_rate).abs() > 1e-9 * self.sample_rate {
            return invalid_arg("waveform sample rates differ");
        }
        Ok(())
    }
}

fn check_pols<T>(pols: &[Vec<T>]) -> Result<()> {
    if pols.is_empty() || pols.len() > 2 {
        return invalid_arg(format!("polarization count must be 1 or 2, got {}", pols.len()));
    }
    if pols.iter().any(|p| p.len() != pols[0].len()) {
        return invalid_arg("polarizations have unequal lengths");
    }
    Ok(())
}

/// Draw `count` uniform QPSK symbols `(±1 ± j)/√2` per polarization.
pub fn generate_symbols(count: usize, pol_count: usize, baud_rate: f64, seed: u64) -> Result<SymbolFrame> {
    if count == 0 {
        return invalid_arg("symbol count must be at least 1");
    }
    if !(1..=2).contains(&pol_count) {
        return invalid_arg(format!("polarization count must be 1 or 2, got {pol_count}"));
    }
    let mut rng = rng_from_seed(seed);
    let symbols = (0..pol_count)
        .map(|_| {
            (0..count)
                .map(|_| {
                    let bits: u8 = rng.random_range(0..4);
                    let re = if bits & 1 == 0 { QPSK_AMPLITUDE } else { -QPSK_AMPLITUDE };
                    let im = if bits & 2 == 0 { QPSK_AMPLITUDE } else { -QPSK_AMPLITUDE };
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    SymbolFrame::new(symbols, baud_rate, seed)
}

/// Root-raised-cosine amplitude response on an FFT grid of `n` bins sampled
/// at `sps` samples per symbol. Frequencies are taken in units of the symbol rate.
///
/// The response is real and even; squaring it gives a raised cosine whose
/// aliases at the symbol rate sum to one.
pub fn rrc_response(n: usize, sps: usize, rolloff: f64) -> Vec<f64> {
    let lo = (1.0 - rolloff) / 2.0;
    let hi = (1.0 + rolloff) / 2.0;
    (0..n)
        .map(|k| {
            let f = (bin_frequency(k, n) * sps as f64).abs();
            if rolloff == 0.0 {
                if f < 0.5 - 1e-12 {
                    1.0
                } else if (f - 0.5).abs() <= 1e-12 {
                    std::f64::consts::FRAC_1_SQRT_2
                } else {
                    0.0
                }
            } else if f <= lo {
                1.0
            } else if f <= hi {
                (0.5 * (1.0 + (std::f64::consts::PI / rolloff * (f - lo)).cos())).sqrt()
            } else {
                0.0
            }
        })
        .collect()
}

fn check_shaping(rolloff: f64, sps: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&rolloff) {
        return invalid_arg(format!("rolloff must be in [0, 1], got {rolloff}"));
    }
    if sps < 2 {
        return invalid_arg(format!("samples per symbol must be at least 2, got {sps}"));
    }
    Ok(())
}

/// Circular RRC shaping of arbitrary symbol sequences, without power normalization.
///
/// Symbol `k` is centered on sample `k * sps`.
pub fn shape_symbols(symbols: &[Vec<Complex64>], rolloff: f64, sps: usize) -> Result<Vec<Vec<Complex64>>> {
    check_shaping(rolloff, sps)?;
    check_pols(symbols)?;
    let n = symbols[0].len() * sps;
    let h = rrc_response(n, sps, rolloff);
    let mut fft = Transform::new(n);
    Ok(symbols
        .iter()
        .map(|pol| {
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for (k, s) in pol.iter().enumerate() {
                buf[k * sps] = *s;
            }
            fft.forward(&mut buf);
            for (b, g) in buf.iter_mut().zip(&h) {
                *b *= g;
            }
            fft.inverse(&mut buf);
            buf
        })
        .collect())
}

/// RRC pulse shaping; output average power is normalized to 1 mW.
pub fn shape_pulse(frame: &SymbolFrame, rolloff: f64, sps: usize) -> Result<ComplexWaveform> {
    let pols = shape_symbols(frame.symbols(), rolloff, sps)?;
    let w = ComplexWaveform::new(pols, frame.baud_rate() * sps as f64, 0.0)?;
    set_average_power(&w, 0.0)
}

/// Matched RRC filter followed by decimation to one sample per symbol.
pub fn matched_filter_decimate(w: &ComplexWaveform, rolloff: f64, sps: usize) -> Result<Vec<Vec<Complex64>>> {
    check_shaping(rolloff, sps)?;
    let n = w.len();
    if !n.is_multiple_of(sps) {
        return invalid_arg(format!("waveform length {n} is not a multiple of {sps} samples/symbol"));
    }
    let h = rrc_response(n, sps, rolloff);
    let mut fft = Transform::new(n);
    Ok(w.pols()
        .iter()
        .map(|pol| {
            let mut buf = pol.clone();
            fft.forward(&mut buf);
            for (b, g) in buf.iter_mut().zip(&h) {
                *b *= g;
            }
            fft.inverse(&mut buf);
            buf.into_iter().step_by(sps).collect()
        })
        .collect())
}

/// Time-mean of `Σ_pol |x|²`, in mW.
pub fn average_power(w: &ComplexWaveform) -> Result<f64> {
    if w.is_empty() {
        return invalid_arg("average power of an empty waveform");
    }
    Ok(w.energy() / w.len() as f64)
}

/// Rescale so that the average total power equals `p_dbm`.
pub fn set_average_power(w: &ComplexWaveform, p_dbm: f64) -> Result<ComplexWaveform> {
    let current = average_power(w)?;
    if current <= 0.0 {
        return invalid_arg("cannot set the power of an all-zero waveform");
    }
    if !p_dbm.is_finite() {
        return invalid_arg("target power must be finite");
    }
    let factor = (dbm_to_mw(p_dbm) / current).sqrt();
    Ok(w.clone().scaled(Complex64::new(factor, 0.0)))
}

/// Circularly-symmetric white Gaussian noise shaped like `shape_of`.
///
/// The total power is split evenly across polarizations, so each real
/// quadrature has variance `total_power_mw / (2 * pol_count)`.
pub fn generate_awgn(shape_of: &ComplexWaveform, total_power_mw: f64, seed: u64) -> Result<ComplexWaveform> {
    if !(total_power_mw >= 0.0) || !total_power_mw.is_finite() {
        return invalid_arg(format!("noise power must be non-negative, got {total_power_mw}"));
    }
    let pol_count = shape_of.pol_count();
    let len = shape_of.len();
    if total_power_mw == 0.0 {
        let w = ComplexWaveform::zeros(pol_count, len, shape_of.sample_rate())?;
        return Ok(w.with_center_offset(shape_of.center_offset()));
    }
    let sigma = (total_power_mw / (2.0 * pol_count as f64)).sqrt();
    let mut rng = rng_from_seed(seed);
    let pols = (0..pol_count)
        .map(|_| {
            (0..len)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(sigma * re, sigma * im)
                })
                .collect()
        })
        .collect();
    Ok(ComplexWaveform::from_parts(
        pols,
        shape_of.sample_rate(),
        shape_of.center_offset(),
    ))
}

const FPWV_MAGIC: &[u8; 4] = b"FPWV";
const FPWV_VERSION: u16 = 1;

/// Serialize a waveform in the little-endian FPWV capture format.
///
/// Layout: magic `FPWV`, u16 version, u8 pol count, f64 sample rate (Hz),
/// f64 center offset (Hz), u64 sample count, then for each sample and each
/// polarization an `(re, im)` pair of f64.
pub fn write_fpwv<W: Write>(w: &ComplexWaveform, mut out: W) -> Result<()> {
    out.write_all(FPWV_MAGIC)?;
    out.write_all(&FPWV_VERSION.to_le_bytes())?;
    out.write_all(&[w.pol_count() as u8])?;
    out.write_all(&w.sample_rate().to_le_bytes())?;
    out.write_all(&w.center_offset().to_le_bytes())?;
    out.write_all(&(w.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(w.len() * w.pol_count() * 16);
    for t in 0..w.len() {
        for pol in w.pols() {
            buf.extend_from_slice(&pol[t].re.to_le_bytes());
            buf.extend_from_slice(&pol[t].im.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    input.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated header".into()),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

/// Parse an FPWV capture.
pub fn read_fpwv<R: Read>(mut input: R) -> Result<ComplexWaveform> {
    let magic: [u8; 4] = read_array(&mut input)?;
    if &magic != FPWV_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes(read_array(&mut input)?);
    if version != FPWV_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let [pol_count] = read_array::<1, _>(&mut input)?;
    if !(1..=2).contains(&pol_count) {
        return Err(Error::Format(format!("bad polarization count {pol_count}")));
    }
    let sample_rate = f64::from_le_bytes(read_array(&mut input)?);
    let center_offset = f64::from_le_bytes(read_array(&mut input)?);
    let count = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let pol_count = pol_count as usize;
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let expected = count
        .checked_mul(pol_count * 16)
        .ok_or_else(|| Error::Format("sample count overflows".into()))?;
    if data.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} payload bytes, found {}",
            data.len()
        )));
    }
    let mut pols = vec![Vec::with_capacity(count); pol_count];
    for (i, chunk) in data.chunks_exact(16).enumerate() {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        pols[i % pol_count].push(Complex64::new(re, im));
    }
    ComplexWaveform::new(pols, sample_rate, center_offset).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross_correlation(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
        let ea: f64 = a.iter().map(|x| x.norm_sqr()).sum();
        let eb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
        num.norm() / (ea * eb).sqrt()
    }

    #[test]
    fn symbols_are_reproducible_and_unit_energy() {
        let a = generate_symbols(4, 1, 68e9, 11).unwrap();
        let b = generate_symbols(4, 1, 68e9, 11).unwrap();
        assert_eq!(a, b);
        for s in a.pol(0) {
            assert!((s.norm() - 1.0).abs() < 1e-15);
            assert_eq!(s.re.abs(), QPSK_AMPLITUDE);
            assert_eq!(s.im.abs(), QPSK_AMPLITUDE);
        }
    }

    #[test]
    fn large_dual_pol_frame_has_unit_power_per_pol() {
        let f = generate_symbols(1 << 16, 2, 68e9, 1).unwrap();
        for p in 0..2 {
            let mean: f64 = f.pol(p).iter().map(|s| s.norm_sqr()).sum::<f64>() / f.len() as f64;
            assert!((mean - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symbol_points_are_uniform() {
        let f = generate_symbols(1 << 16, 1, 1e9, 5).unwrap();
        let mut counts = [0usize; 4];
        for s in f.pol(0) {
            counts[(s.re < 0.0) as usize + 2 * (s.im < 0.0) as usize] += 1;
        }
        let expected = (1 << 16) as f64 / 4.0;
        for c in counts {
            // 5 binomial standard deviations
            assert!((c as f64 - expected).abs() < 5.0 * (expected * 0.75).sqrt());
        }
    }

    #[test]
    fn different_seeds_are_uncorrelated() {
        let n = 1 << 14;
        let a = generate_symbols(n, 1, 1e9, 1).unwrap();
        let b = generate_symbols(n, 1, 1e9, 2).unwrap();
        assert!(cross_correlation(a.pol(0), b.pol(0)) < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn zero_count_rejected() {
        assert!(matches!(generate_symbols(0, 1, 1e9, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_symbol_gives_centered_rrc_pulse() {
        let n_sym = 64;
        let sps = 4;
        let mut syms = vec![Complex64::new(0.0, 0.0); n_sym];
        syms[n_sym / 2] = Complex64::new(1.0, 0.0);
        let out = shape_symbols(&[syms], 0.25, sps).unwrap();
        let peak = out[0]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, n_sym / 2 * sps);
        // pulse is symmetric about its center
        for k in 1..20 {
            let l = out[0][peak - k];
            let r = out[0][peak + k];
            assert!((l - r).norm() < 1e-12);
        }
    }

    #[test]
    fn shape_match_decimate_is_zero_isi() {
        let frame = generate_symbols(4096, 2, 68e9, 3).unwrap();
        let w = shape_pulse(&frame, 0.1, 2).unwrap();
        assert_eq!(w.sample_rate(), 136e9);
        assert!((average_power(&w).unwrap() - 1.0).abs() < 1e-12);
        let rx = matched_filter_decimate(&w, 0.1, 2).unwrap();
        for (p, rxp) in rx.iter().enumerate() {
            let scale: Complex64 = rxp.iter().zip(frame.pol(p)).map(|(y, s)| s.conj() * y).sum::<Complex64>()
                / frame.len() as f64;
            let err: f64 = rxp
                .iter()
                .zip(frame.pol(p))
                .map(|(y, s)| (y / scale - s).norm_sqr())
                .sum::<f64>()
                / frame.len() as f64;
            assert!(err.sqrt() < 1e-6, "evm {}", err.sqrt());
        }
    }

    #[test]
    fn rrc_spectrum_is_band_limited() {
        let frame = generate_symbols(2048, 1, 68e9, 9).unwrap();
        let w = shape_pulse(&frame, 0.1, 2).unwrap();
        let mut buf = w.pol(0).to_vec();
        let n = buf.len();
        Transform::new(n).forward(&mut buf);
        let peak = buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (k, c) in buf.iter().enumerate() {
            let f = bin_frequency(k, n).abs() * 2.0; // in units of baud
            if f > 0.55 + 1e-9 {
                assert!(c.norm() < 1e-9 * peak, "leak at {f}");
            }
        }
    }

    #[test]
    fn shaping_arguments_validated() {
        let frame = generate_symbols(8, 1, 1e9, 0).unwrap();
        assert!(shape_pulse(&frame, 0.1, 1).is_err());
        assert!(shape_pulse(&frame, 1.5, 2).is_err());
        assert!(shape_pulse(&frame, 0.0, 2).is_ok());
    }

    #[test]
    fn set_power_examples() {
        let frame = generate_symbols(256, 2, 1e9, 4).unwrap();
        let w = shape_pulse(&frame, 0.1, 2).unwrap();
        let w5 = set_average_power(&w, 5.0).unwrap();
        assert!((average_power(&w5).unwrap() - 3.162_277_660_168_379).abs() < 1e-12);
        let twice = set_average_power(&w5, 5.0).unwrap();
        for (a, b) in twice.pols().iter().flatten().zip(w5.pols().iter().flatten()) {
            assert!((a - b).norm() < 1e-14);
        }
        let zero = ComplexWaveform::zeros(1, 8, 1e9).unwrap();
        assert!(set_average_power(&zero, 0.0).is_err());
    }

    #[test]
    fn average_power_examples() {
        let ones = ComplexWaveform::new(vec![vec![Complex64::new(1.0, 0.0); 10]], 1.0, 0.0).unwrap();
        assert_eq!(average_power(&ones).unwrap(), 1.0);
        let twos = ComplexWaveform::new(vec![vec![Complex64::new(2.0, 0.0); 30]], 1.0, 0.0).unwrap();
        let mut cat = ones.pol(0).to_vec();
        cat.extend_from_slice(twos.pol(0));
        let cat = ComplexWaveform::new(vec![cat], 1.0, 0.0).unwrap();
        assert!((average_power(&cat).unwrap() - (10.0 * 1.0 + 30.0 * 4.0) / 40.0).abs() < 1e-15);
        let empty = ComplexWaveform::new(vec![vec![]], 1.0, 0.0).unwrap();
        assert!(average_power(&empty).is_err());
    }

    #[test]
    fn awgn_power_and_symmetry() {
        let shape = ComplexWaveform::zeros(2, 1 << 18, 1e9).unwrap();
        let n = generate_awgn(&shape, 1.0, 42).unwrap();
        for p in 0..2 {
            let pw: f64 = n.pol(p).iter().map(|s| s.norm_sqr()).sum::<f64>() / n.len() as f64;
            assert!((pw - 0.5).abs() < 0.005, "pol {p}: {pw}");
            let var_re: f64 = n.pol(p).iter().map(|s| s.re * s.re).sum::<f64>() / n.len() as f64;
            let var_im: f64 = n.pol(p).iter().map(|s| s.im * s.im).sum::<f64>() / n.len() as f64;
            assert!((var_re - 0.25).abs() < 0.0025);
            assert!((var_im - 0.25).abs() < 0.0025);
        }
        let zero = generate_awgn(&shape, 0.0, 1).unwrap();
        assert_eq!(zero.energy(), 0.0);
        assert!(generate_awgn(&shape, -1.0, 1).is_err());
    }

    #[test]
    fn awgn_seeds_uncorrelated() {
        let shape = ComplexWaveform::zeros(1, 1 << 16, 1e9).unwrap();
        let a = generate_awgn(&shape, 1.0, 1).unwrap();
        let b = generate_awgn(&shape, 1.0, 2).unwrap();
        assert!(cross_correlation(a.pol(0), b.pol(0)) < 3.0 / ((1 << 16) as f64).sqrt());
    }

    #[test]
    fn fpwv_rejects_garbage() {
        assert!(matches!(read_fpwv(&b"NOPE"[..]), Err(Error::Format(_))));
        let w = ComplexWaveform::new(vec![vec![Complex64::new(1.0, 2.0); 3]; 2], 2e9, 5e9).unwrap();
        let mut bytes = Vec::new();
        write_fpwv(&w, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 2 + 1 + 8 + 8 + 8 + 3 * 2 * 16);
        assert!(read_fpwv(&bytes[..bytes.len() - 1]).is_err());
        assert_eq!(read_fpwv(&bytes[..]).unwrap(), w);
    }
}
