//! Correlation templates and power / noise-inclusive power profiles.
//!
//! A template for position z launches a z = 0 waveform to z through the
//! accumulated dispersion, applies the first-order Kerr operator with the
//! mean-power term removed, and returns the result to the z = 0 plane. Its
//! correlation with the receiver residual measures the nonlinear distortion
//! generated near z.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::link::PropagationPlan;
use crate::receiver::RxOutput;
use crate::spectral::{dispersion_response, omega_grid, Transform};
use crate::ssfm::dispersion_step;
use crate::waveform::ComplexWaveform;

const MINUS_J: Complex64 = Complex64::new(0.0, -1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    /// Template from the clean regenerated signal.
    Ppe,
    /// Template from the total received field.
    Nppe,
}

impl ProfileKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProfileKind::Ppe => "PPE",
            ProfileKind::Nppe => "NPPE",
        }
    }
}

/// Which scalar of the complex correlation enters the profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    Real,
    Magnitude,
}

impl Convention {
    fn apply(self, c: Complex64) -> f64 {
        match self {
            Convention::Real => c.re,
            Convention::Magnitude => c.norm(),
        }
    }
}

/// Correlation against position, averaged over independent blocks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationProfile {
    pub z_grid_km: Vec<f64>,
    /// Block mean of the selected scalar per position.
    pub values: Vec<f64>,
    /// Block mean of the imaginary part per position.
    pub imag_values: Vec<f64>,
    /// Standard error of `values` from the block-to-block spread; zero for one block.
    pub std_errors: Vec<f64>,
    pub kind: ProfileKind,
    pub convention: Convention,
    pub blocks_averaged: usize,
    /// RMS over the grid of the block-mean imaginary part, after removing its
    /// grid average, relative to the RMS of the block-mean real part.
    ///
    /// The grid average is removed because a total-field template contains the
    /// residual itself; for dual-polarization fields that adds a nearly
    /// position-independent imaginary offset which is not a phase error.
    pub imag_leakage: f64,
    /// Raw complex correlations, `[block][z]`.
    pub block_values: Vec<Vec<Complex64>>,
    pub pol_count: usize,
    /// Block mean of the template base power, relative to the unit-power signal.
    pub base_power: f64,
}

impl CorrelationProfile {
    /// Assemble a profile from per-block complex correlations.
    pub fn from_blocks(
        z_grid_km: Vec<f64>,
        block_values: Vec<Vec<Complex64>>,
        kind: ProfileKind,
        convention: Convention,
    ) -> Result<Self> {
        check_grid(&z_grid_km)?;
        if block_values.is_empty() {
            return invalid_arg("profile needs at least one block");
        }
        if block_values.iter().any(|b| b.len() != z_grid_km.len()) {
            return invalid_arg("block correlations do not match the z grid");
        }
        let nb = block_values.len();
        let nz = z_grid_km.len();
        let mut values = vec![0.0; nz];
        let mut imag_values = vec![0.0; nz];
        let mut std_errors = vec![0.0; nz];
        for k in 0..nz {
            let xs: Vec<f64> = block_values.iter().map(|b| convention.apply(b[k])).collect();
            let mean = xs.iter().sum::<f64>() / nb as f64;
            values[k] = mean;
            imag_values[k] = block_values.iter().map(|b| b[k].im).sum::<f64>() / nb as f64;
            if nb > 1 {
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nb - 1) as f64;
                std_errors[k] = (var / nb as f64).sqrt();
            }
        }
        let re_means: Vec<f64> = (0..nz)
            .map(|k| block_values.iter().map(|b| b[k].re).sum::<f64>() / nb as f64)
            .collect();
        let im_offset = imag_values.iter().sum::<f64>() / nz as f64;
        let re2: f64 = re_means.iter().map(|r| r * r).sum();
        let im2: f64 = imag_values.iter().map(|i| (i - im_offset).powi(2)).sum();
        let imag_leakage = if re2 > 0.0 { (im2 / re2).sqrt() } else { f64::INFINITY };
        Ok(Self {
            z_grid_km,
            values,
            imag_values,
            std_errors,
            kind,
            convention,
            blocks_averaged: nb,
            imag_leakage,
            block_values,
            pol_count: 1,
            base_power: 1.0,
        })
    }

    /// Record the polarization count and mean base power of the templates.
    pub fn with_base(mut self, pol_count: usize, base_power: f64) -> Self {
        self.pol_count = pol_count;
        self.base_power = base_power;
        self
    }

    /// CSV with columns `z_km,value_real,value_imag,kind,blocks`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("z_km,value_real,value_imag,kind,blocks\n");
        for k in 0..self.z_grid_km.len() {
            let _ = writeln!(
                s,
                "{},{:.12e},{:.12e},{},{}",
                self.z_grid_km[k],
                self.values[k],
                self.imag_values[k],
                self.kind.as_str(),
                self.blocks_averaged
            );
        }
        s
    }
}

fn check_grid(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        return invalid_arg("z grid is empty");
    }
    if z.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid_arg("z grid must be strictly increasing");
    }
    Ok(())
}

/// Uniform grid `0, step, 2·step, …` that always ends exactly at `length_km`.
pub fn uniform_z_grid(length_km: f64, step_km: f64) -> Result<Vec<f64>> {
    if !(step_km > 0.0 && length_km > 0.0) {
        return invalid_arg("z grid needs a positive step and length");
    }
    let n = (length_km / step_km - 1e-9).ceil() as usize;
    let mut g: Vec<f64> = (0..n).map(|k| k as f64 * step_km).collect();
    g.push(length_km);
    Ok(g)
}

fn erp_in_place(pols: &mut [Vec<Complex64>]) {
    let n = pols[0].len();
    let p: Vec<f64> = (0..n).map(|t| pols.iter().map(|x| x[t].norm_sqr()).sum()).collect();
    let mean = p.iter().sum::<f64>() / n as f64;
    for pol in pols.iter_mut() {
        for (x, pt) in pol.iter_mut().zip(&p) {
            *x *= pt - 2.0 * mean;
        }
    }
}

/// Enhanced regular-perturbation operator `(P_tot(t) − 2⟨P_tot⟩)·w_p(t)`.
pub fn n_erp(w: &ComplexWaveform) -> ComplexWaveform {
    let mut pols = w.pols().to_vec();
    if !w.is_empty() {
        erp_in_place(&mut pols);
    }
    ComplexWaveform::from_parts(pols, w.sample_rate(), w.center_offset())
}

/// Template of the distortion generated at `z_km`, on the z = 0 plane.
pub fn build_template(base: &ComplexWaveform, z_km: f64, plan: &PropagationPlan) -> Result<ComplexWaveform> {
    let b = plan.cumulative_beta2(z_km)?;
    let at_z = dispersion_step(base, b);
    let back = dispersion_step(&n_erp(&at_z), -b);
    Ok(back.scaled(MINUS_J))
}

/// `⟨conj(delta_e)·template⟩`, averaged over time and summed over polarizations.
pub fn correlate(delta_e: &ComplexWaveform, template: &ComplexWaveform) -> Result<Complex64> {
    delta_e.check_compatible(template)?;
    if delta_e.is_empty() {
        return invalid_arg("cannot correlate empty waveforms");
    }
    let s: Complex64 = delta_e
        .pols()
        .iter()
        .zip(template.pols())
        .flat_map(|(a, b)| a.iter().zip(b))
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(s / delta_e.len() as f64)
}

/// Spectra of one block, reused for every grid position.
struct BlockSpectra {
    residual: Vec<Vec<Complex64>>,
    bases: Vec<Vec<Vec<Complex64>>>,
}

fn spectra(w: &ComplexWaveform, fft: &mut Transform) -> Vec<Vec<Complex64>> {
    w.pols()
        .iter()
        .map(|p| {
            let mut s = p.clone();
            fft.forward(&mut s);
            s
        })
        .collect()
}

fn base_for(rx: &RxOutput, kind: ProfileKind) -> &ComplexWaveform {
    match kind {
        ProfileKind::Ppe => &rx.u_ref,
        ProfileKind::Nppe => &rx.e_tot_0,
    }
}

/// Complex correlations of one block for each kind and position, `[kind][z]`.
///
/// Works in the frequency domain: the return trip through dispersion and the
/// time average both fold into a single weighted inner product of spectra.
fn block_correlations(
    rx: &RxOutput,
    kinds: &[ProfileKind],
    betas: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    for k in kinds {
        rx.delta_e.check_compatible(base_for(rx, *k))?;
    }
    let n = rx.delta_e.len();
    let omega = omega_grid(n, rx.delta_e.sample_rate());
    let mut fft = Transform::new(n);
    let sp = BlockSpectra {
        residual: spectra(&rx.delta_e, &mut fft),
        bases: kinds.iter().map(|k| spectra(base_for(rx, *k), &mut fft)).collect(),
    };
    let norm = MINUS_J / (n as f64 * n as f64);
    let mut out = vec![Vec::with_capacity(betas.len()); kinds.len()];
    let mut work = vec![vec![Complex64::new(0.0, 0.0); n]; rx.delta_e.pol_count()];
    for &b in betas {
        let h = dispersion_response(&omega, b);
        for (ki, base) in sp.bases.iter().enumerate() {
            for (w, s) in work.iter_mut().zip(base) {
                for ((x, y), g) in w.iter_mut().zip(s).zip(&h) {
                    *x = y * g;
                }
                fft.inverse(w);
            }
            erp_in_place(&mut work);
            let mut acc = Complex64::new(0.0, 0.0);
            for (w, r) in work.iter_mut().zip(&sp.residual) {
                fft.forward(w);
                for ((x, rr), g) in w.iter().zip(r).zip(&h) {
                    acc += rr.conj() * g.conj() * x;
                }
            }
            out[ki].push(acc * norm);
        }
    }
    Ok(out)
}

/// Profiles for several kinds at once, sharing the per-block transforms.
///
/// Blocks are processed in parallel; results are reduced in block order.
pub fn profiles(
    rx_blocks: &[RxOutput],
    kinds: &[ProfileKind],
    plan: &PropagationPlan,
    z_grid_km: &[f64],
    convention: Convention,
) -> Result<Vec<CorrelationProfile>> {
    if rx_blocks.is_empty() {
        return invalid_arg("profile needs at least one block");
    }
    check_grid(z_grid_km)?;
    let betas = z_grid_km
        .iter()
        .map(|z| plan.cumulative_beta2(*z))
        .collect::<Result<Vec<f64>>>()?;
    let per_block = rx_blocks
        .par_iter()
        .map(|rx| block_correlations(rx, kinds, &betas))
        .collect::<Result<Vec<_>>>()?;
    kinds
        .iter()
        .enumerate()
        .map(|(ki, kind)| {
            let blocks = per_block.iter().map(|b| b[ki].clone()).collect();
            let base_power = rx_blocks.iter().map(|r| base_for(r, *kind).energy()).sum::<f64>()
                / rx_blocks.iter().map(|r| r.u_ref.energy()).sum::<f64>();
            let pols = rx_blocks[0].u_ref.pol_count();
            Ok(CorrelationProfile::from_blocks(z_grid_km.to_vec(), blocks, *kind, convention)?.with_base(pols, base_power))
        })
        .collect()
}

/// Single-kind profile.
pub fn profile(
    rx_blocks: &[RxOutput],
    kind: ProfileKind,
    plan: &PropagationPlan,
    z_grid_km: &[f64],
    convention: Convention,
) -> Result<CorrelationProfile> {
    Ok(profiles(rx_blocks, &[kind], plan, z_grid_km, convention)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{compile, FiberSpan, LinkSpec, NoiseMode};
    use crate::receiver::{build_reference_and_residual, ReceiverConfig};
    use crate::waveform::{average_power, generate_awgn, generate_symbols, shape_pulse};

    fn signal(n: usize, pols: usize, seed: u64) -> ComplexWaveform {
        shape_pulse(&generate_symbols(n, pols, 68e9, seed).unwrap(), 0.1, 2).unwrap()
    }

    fn plan(d: f64) -> PropagationPlan {
        let mut span = FiberSpan::ssmf(80.0);
        span.dispersion_ps_per_nm_km = d;
        compile(&LinkSpec::uniform_chain(span, 2, 0.0, NoiseMode::None).unwrap()).unwrap()
    }

    fn rms(w: &ComplexWaveform) -> f64 {
        average_power(w).unwrap().sqrt()
    }

    #[test]
    fn erp_examples() {
        let cm = ComplexWaveform::new(
            vec![(0..16).map(|k| Complex64::from_polar(1.0, k as f64)).collect()],
            1.0,
            0.0,
        )
        .unwrap();
        assert!(rms(&n_erp(&cm).add(&cm).unwrap()) < 1e-15);
        let z = ComplexWaveform::zeros(2, 8, 1.0).unwrap();
        assert_eq!(n_erp(&z), z);
        let x = signal(256, 2, 1);
        let c = 1.7;
        let lhs = n_erp(&x.clone().scaled(Complex64::new(c, 0.0)));
        let rhs = n_erp(&x).scaled(Complex64::new(c * c * c, 0.0));
        assert!(rms(&lhs.sub(&rhs).unwrap()) < 1e-12 * rms(&rhs));
    }

    #[test]
    fn template_is_cubic_in_base() {
        let p = plan(17.0);
        let x = signal(512, 2, 2);
        let c = Complex64::new(0.3, -1.1);
        let t1 = build_template(&x.clone().scaled(c), 55.0, &p).unwrap();
        let t0 = build_template(&x, 55.0, &p).unwrap();
        // a complex base scale c gives |c|²·c
        let t0 = t0.scaled(c * c.norm_sqr());
        assert!(rms(&t1.sub(&t0).unwrap()) < 1e-12 * rms(&t0));
    }

    #[test]
    fn template_edge_cases() {
        let flat = plan(0.0);
        let x = signal(256, 1, 3);
        let a = build_template(&x, 10.0, &flat).unwrap();
        let b = build_template(&x, 150.0, &flat).unwrap();
        assert!(rms(&a.sub(&b).unwrap()) < 1e-15);
        let zero = ComplexWaveform::zeros(1, 512, 136e9).unwrap();
        assert_eq!(rms(&build_template(&zero, 40.0, &plan(17.0)).unwrap()), 0.0);
        assert!(build_template(&x, 161.0, &flat).is_err());
        assert!(build_template(&x, -1.0, &flat).is_err());
    }

    #[test]
    fn correlate_examples() {
        let t = signal(1024, 2, 4);
        let c = correlate(&t, &t).unwrap();
        assert!((c.re - average_power(&t).unwrap()).abs() < 1e-12 && c.im.abs() < 1e-12);

        let x = signal(1024, 2, 5);
        let s = Complex64::new(2.0, -0.5);
        let lhs = correlate(&x.clone().scaled(s), &t).unwrap();
        let rhs = s.conj() * correlate(&x, &t).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);

        let short = signal(512, 2, 6);
        assert!(correlate(&short, &t).is_err());
    }

    #[test]
    fn independent_noise_stays_within_clt_bound() {
        let t = build_template(&signal(1 << 13, 2, 7), 30.0, &plan(17.0)).unwrap();
        let mut outside = 0;
        for seed in 0..40 {
            let n = generate_awgn(&t, 1.0, 100 + seed).unwrap();
            let v = correlate(&n, &t).unwrap();
            let sigma = (average_power(&n).unwrap() * average_power(&t).unwrap() / t.len() as f64).sqrt();
            if v.norm() >= 3.0 * sigma {
                outside += 1;
            }
        }
        assert!(outside <= 1, "{outside} of 40 outside 3σ");
    }

    #[test]
    fn fast_profile_matches_direct_construction() {
        let p = plan(17.0);
        let f = generate_symbols(1024, 2, 68e9, 8).unwrap();
        let u = shape_pulse(&f, 0.1, 2).unwrap();
        let w = u.add(&generate_awgn(&u, 0.05, 9).unwrap()).unwrap();
        let rx = build_reference_and_residual(&w, &f, &ReceiverConfig::new(0.1, 2)).unwrap();
        let grid = [0.0, 20.0, 95.0, 160.0];
        let fast = profiles(
            std::slice::from_ref(&rx),
            &[ProfileKind::Ppe, ProfileKind::Nppe],
            &p,
            &grid,
            Convention::Real,
        )
        .unwrap();
        for (prof, base) in fast.iter().zip([&rx.u_ref, &rx.e_tot_0]) {
            for (k, z) in grid.iter().enumerate() {
                let direct = correlate(&rx.delta_e, &build_template(base, *z, &p).unwrap()).unwrap();
                assert!((prof.block_values[0][k] - direct).norm() < 1e-12 * direct.norm().max(1e-6));
            }
        }
    }

    #[test]
    fn profile_statistics() {
        let z = vec![0.0, 1.0];
        let blocks = vec![
            vec![Complex64::new(1.0, 0.1), Complex64::new(2.0, 0.0)],
            vec![Complex64::new(3.0, -0.1), Complex64::new(2.0, 0.0)],
        ];
        let p = CorrelationProfile::from_blocks(z.clone(), blocks, ProfileKind::Ppe, Convention::Real).unwrap();
        assert_eq!(p.values, vec![2.0, 2.0]);
        assert!((p.std_errors[0] - 1.0).abs() < 1e-12);
        assert_eq!(p.std_errors[1], 0.0);
        assert_eq!(p.blocks_averaged, 2);
        assert!(p.to_csv().starts_with("z_km,value_real,value_imag,kind,blocks\n0,2.0"));
        assert!(CorrelationProfile::from_blocks(z.clone(), vec![], ProfileKind::Ppe, Convention::Real).is_err());
        assert!(CorrelationProfile::from_blocks(vec![1.0, 1.0], vec![vec![Complex64::default(); 2]], ProfileKind::Ppe, Convention::Real).is_err());
    }

    #[test]
    fn grid_ends_on_link_length() {
        assert_eq!(uniform_z_grid(12.0, 5.0).unwrap(), vec![0.0, 5.0, 10.0, 12.0]);
        assert_eq!(uniform_z_grid(10.0, 5.0).unwrap(), vec![0.0, 5.0, 10.0]);
    }
}
