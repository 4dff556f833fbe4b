//! Longitudinal gOSNR from PPE / NPPE profiles, plus analytic and simulated
//! reference levels.
//!
//! The correlation ratio `NPPE/PPE` grows with the local noise-to-signal ratio
//! `η`, but not linearly. The received field is normalized so that its signal
//! part has unit amplitude and the Kerr operator is cubic, so for Gaussian-like
//! fields the expected ratio is
//!
//! * one polarization: `(1 + η)³`
//! * two polarizations: `(3(1 + η)³ + b(1 + η)²) / (4 + η)`
//!
//! where `b` is the mean power of the total-field template base. The default
//! [`Readout::Gaussian`] inverts this relation for `η` and reports
//! `gOSNR = R/η`. [`Readout::Linear`] applies `R/(ratio − 1)` directly.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationProfile;
use crate::error::{invalid_arg, Error, Result};
use crate::link::{compile, LinkSpec, NoiseLevel, Step};
use crate::pipeline::{simulate_block, SignalConfig};
use crate::receiver::RxOutput;
use crate::ssfm::SsfmConfig;
use crate::units::{lin_to_db, osnr_r_factor};

/// Signal-to-residual ratios above this are reported as clean.
pub const ORACLE_FLOOR_DB: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    #[default]
    Gaussian,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Ok,
    Clamped,
    #[serde(rename = "ratio_le_1")]
    RatioLeOne,
}

impl Validity {
    pub fn as_str(self) -> &'static str {
        match self {
            Validity::Ok => "ok",
            Validity::Clamped => "clamped",
            Validity::RatioLeOne => "ratio<=1",
        }
    }
}

fn default_ceiling() -> f64 {
    40.0
}
fn default_floor() -> f64 {
    -10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GosnrConfig {
    #[serde(default = "default_ceiling")]
    pub ceiling_db: f64,
    #[serde(default = "default_floor")]
    pub floor_db: f64,
    #[serde(default)]
    pub readout: Readout,
}

impl Default for GosnrConfig {
    fn default() -> Self {
        Self {
            ceiling_db: default_ceiling(),
            floor_db: default_floor(),
            readout: Readout::Gaussian,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GosnrProfile {
    pub z_grid_km: Vec<f64>,
    pub gosnr_db: Vec<f64>,
    pub validity: Vec<Validity>,
    pub r_factor: f64,
    pub f_baud: f64,
}

impl GosnrProfile {
    pub fn flagged_count(&self) -> usize {
        self.validity.iter().filter(|v| **v != Validity::Ok).count()
    }

    /// CSV with columns `z_km,gosnr_db,validity`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("z_km,gosnr_db,validity\n");
        for k in 0..self.z_grid_km.len() {
            let _ = writeln!(
                s,
                "{},{:.6},{}",
                self.z_grid_km[k],
                self.gosnr_db[k],
                self.validity[k].as_str()
            );
        }
        s
    }
}

fn dual_pol_ratio(eta: f64, base_power: f64) -> f64 {
    let g = 1.0 + eta;
    (3.0 * g * g * g + base_power * g * g) / (4.0 + eta)
}

/// Noise-to-signal ratio `η` implied by a correlation ratio. Zero when the
/// ratio is at or below the noise-free expectation.
pub fn excess_from_ratio(ratio: f64, readout: Readout, pol_count: usize, base_power: f64) -> f64 {
    match (readout, pol_count) {
        (Readout::Linear, _) => ratio - 1.0,
        (Readout::Gaussian, 1) => ratio.cbrt() - 1.0,
        (Readout::Gaussian, _) => {
            if ratio <= dual_pol_ratio(0.0, base_power) {
                return 0.0;
            }
            let mut hi = 1.0;
            while dual_pol_ratio(hi, base_power) < ratio && hi < 1e6 {
                hi *= 2.0;
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if dual_pol_ratio(mid, base_power) < ratio {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            0.5 * (lo + hi)
        }
    }
}

/// Turn one correlation ratio into gOSNR in dB.
///
/// `pol_count` and `base_power` describe the total-field template and are
/// only used by the Gaussian readout.
pub fn gosnr_from_ratio(
    ratio: f64,
    r_factor: f64,
    pol_count: usize,
    base_power: f64,
    cfg: &GosnrConfig,
) -> (f64, Validity) {
    if !(ratio > 1.0) || !ratio.is_finite() {
        return (cfg.ceiling_db, Validity::RatioLeOne);
    }
    let excess = excess_from_ratio(ratio, cfg.readout, pol_count, base_power);
    if !(excess > 0.0) {
        return (cfg.ceiling_db, Validity::Clamped);
    }
    let db = lin_to_db(r_factor / excess);
    if db > cfg.ceiling_db {
        (cfg.ceiling_db, Validity::Clamped)
    } else if db < cfg.floor_db {
        (cfg.floor_db, Validity::Clamped)
    } else {
        (db, Validity::Ok)
    }
}

fn check_pair(ppe: &CorrelationProfile, nppe: &CorrelationProfile) -> Result<()> {
    if ppe.z_grid_km != nppe.z_grid_km {
        return invalid_arg("PPE and NPPE profiles use different z grids");
    }
    Ok(())
}

/// Pointwise gOSNR along the grid. Points with a non-positive PPE value or a
/// ratio at or below one are flagged and clamped to the ceiling.
pub fn gosnr_from_profiles(
    ppe: &CorrelationProfile,
    nppe: &CorrelationProfile,
    f_baud: f64,
    cfg: &GosnrConfig,
) -> Result<GosnrProfile> {
    check_pair(ppe, nppe)?;
    let r = osnr_r_factor(f_baud);
    let (gosnr_db, validity) = ppe
        .values
        .iter()
        .zip(&nppe.values)
        .map(|(p, n)| {
            if *p > 0.0 {
                gosnr_from_ratio(n / p, r, nppe.pol_count, nppe.base_power, cfg)
            } else {
                (cfg.ceiling_db, Validity::RatioLeOne)
            }
        })
        .unzip();
    Ok(GosnrProfile {
        z_grid_km: ppe.z_grid_km.clone(),
        gosnr_db,
        validity,
        r_factor: r,
        f_baud,
    })
}

/// gOSNR read from a stretch of the link.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowEstimate {
    pub z_start_km: f64,
    pub z_end_km: f64,
    /// `Σ NPPE / Σ PPE` over the grid points inside the window.
    pub ratio: f64,
    /// Standard error of the ratio from per-block ratios; zero for one block.
    pub ratio_std_error: f64,
    pub gosnr_db: f64,
    pub validity: Validity,
}

/// Estimate over all grid points with `z_start ≤ z ≤ z_end`.
///
/// Summing before dividing weights each position by its PPE value, so the
/// high-power parts of the window dominate.
pub fn window_estimate(
    ppe: &CorrelationProfile,
    nppe: &CorrelationProfile,
    z_start_km: f64,
    z_end_km: f64,
    f_baud: f64,
    cfg: &GosnrConfig,
) -> Result<WindowEstimate> {
    check_pair(ppe, nppe)?;
    let idx: Vec<usize> = (0..ppe.z_grid_km.len())
        .filter(|&k| ppe.z_grid_km[k] >= z_start_km - 1e-9 && ppe.z_grid_km[k] <= z_end_km + 1e-9)
        .collect();
    if idx.is_empty() {
        return invalid_arg(format!("no grid points in [{z_start_km}, {z_end_km}] km"));
    }
    let sum = |v: &[f64]| idx.iter().map(|&k| v[k]).sum::<f64>();
    let ratio = sum(&nppe.values) / sum(&ppe.values);
    let nb = ppe.block_values.len().min(nppe.block_values.len());
    let ratio_std_error = if nb > 1 {
        let per: Vec<f64> = (0..nb)
            .map(|b| {
                let n: f64 = idx.iter().map(|&k| nppe.block_values[b][k].re).sum();
                let p: f64 = idx.iter().map(|&k| ppe.block_values[b][k].re).sum();
                n / p
            })
            .collect();
        let mean = per.iter().sum::<f64>() / nb as f64;
        let var = per.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nb - 1) as f64;
        (var / nb as f64).sqrt()
    } else {
        0.0
    };
    let (gosnr_db, validity) = if sum(&ppe.values) > 0.0 {
        gosnr_from_ratio(ratio, osnr_r_factor(f_baud), nppe.pol_count, nppe.base_power, cfg)
    } else {
        (cfg.ceiling_db, Validity::RatioLeOne)
    };
    Ok(WindowEstimate {
        z_start_km,
        z_end_km,
        ratio,
        ratio_std_error,
        gosnr_db,
        validity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseSpecies {
    Ase,
    Nli,
}

/// Expected OSNR along the link.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceProfile {
    pub z_grid_km: Vec<f64>,
    pub osnr_db: Vec<f64>,
    pub includes: Vec<NoiseSpecies>,
}

impl ReferenceProfile {
    fn includes_label(&self) -> String {
        self.includes
            .iter()
            .map(|s| match s {
                NoiseSpecies::Ase => "ase",
                NoiseSpecies::Nli => "nli",
            })
            .collect::<Vec<_>>()
            .join("+")
    }

    /// CSV with columns `z_km,osnr_db,includes`.
    pub fn to_csv(&self) -> String {
        let label = self.includes_label();
        let mut s = String::from("z_km,osnr_db,includes\n");
        for (z, o) in self.z_grid_km.iter().zip(&self.osnr_db) {
            let _ = writeln!(s, "{z},{o:.6},{label}");
        }
        s
    }
}

/// Position and in-band SNR (linear) of every lumped noise source.
pub fn noise_sources(spec: &LinkSpec) -> Result<Vec<(f64, f64)>> {
    let plan = compile(spec)?;
    plan.steps()
        .iter()
        .filter_map(|s| match s {
            Step::Noise {
                z_km,
                level,
                signal_power_mw,
            } => Some(match level {
                NoiseLevel::InBand { power_mw } => Ok((*z_km, signal_power_mw / power_mw)),
                NoiseLevel::Psd { .. } => Err(Error::Unsupported(
                    "noise-figure amplifiers have no analytic reference; use the simulation oracle".into(),
                )),
            }),
            _ => None,
        })
        .collect()
}

/// ASE-only OSNR from harmonic accumulation of the configured set SNRs.
/// Positions before the first noise source read the ceiling.
pub fn analytic_ase_osnr(spec: &LinkSpec, z_grid_km: &[f64], f_baud: f64, ceiling_db: f64) -> Result<ReferenceProfile> {
    let sources = noise_sources(spec)?;
    let r = osnr_r_factor(f_baud);
    let osnr_db = z_grid_km
        .iter()
        .map(|z| {
            let inv: f64 = sources
                .iter()
                .filter(|(zi, _)| *zi <= z + 1e-9)
                .map(|(_, snr)| 1.0 / snr)
                .sum();
            if inv > 0.0 {
                lin_to_db(r / inv).min(ceiling_db)
            } else {
                ceiling_db
            }
        })
        .collect();
    Ok(ReferenceProfile {
        z_grid_km: z_grid_km.to_vec(),
        osnr_db,
        includes: vec![NoiseSpecies::Ase],
    })
}

/// End-of-link effective SNR measured in simulation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReading {
    pub snr_db: f64,
    pub gosnr_db: f64,
    pub blocks: usize,
}

/// Pooled signal-to-residual power over receiver outputs, capped at
/// [`ORACLE_FLOOR_DB`] above which the link is treated as clean.
pub fn effective_snr_from_rx(blocks: &[RxOutput], f_baud: f64) -> Result<OracleReading> {
    if blocks.is_empty() {
        return invalid_arg("oracle needs at least one block");
    }
    let s: f64 = blocks.iter().map(|b| b.fit_scale.norm_sqr() * b.u_ref.energy()).sum();
    let n: f64 = blocks.iter().map(|b| b.delta_e.energy()).sum();
    let snr_db = if n > 0.0 {
        lin_to_db(s / n).min(ORACLE_FLOOR_DB)
    } else {
        ORACLE_FLOOR_DB
    };
    Ok(OracleReading {
        snr_db,
        gosnr_db: snr_db + lin_to_db(osnr_r_factor(f_baud)),
        blocks: blocks.len(),
    })
}

/// Run the full simulator and read the end-of-link SNR from the receiver residual.
pub fn effective_snr_oracle(
    spec: &LinkSpec,
    signal: &SignalConfig,
    ssfm: &SsfmConfig,
    seed: u64,
    blocks: usize,
) -> Result<OracleReading> {
    signal.validate()?;
    let plan = compile(spec)?;
    let rx_cfg = signal.receiver();
    let rx = (0..blocks)
        .into_par_iter()
        .map(|b| simulate_block(spec, &plan, signal, ssfm, &rx_cfg, seed, b).map(|r| r.0))
        .collect::<Result<Vec<_>>>()?;
    effective_snr_from_rx(&rx, signal.baud_hz)
}
