//! Receiver front end: dispersion compensation back to the z = 0 plane,
//! symbol decisions and the split of the received field into a clean
//! reference and a noise residual.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::link::PropagationPlan;
use crate::ssfm::{channel_select, dispersion_step};
use crate::waveform::{average_power, matched_filter_decimate, shape_pulse, ComplexWaveform, SymbolFrame};

/// Symbols used for the pilot-aided phase and scale fit in genie mode.
pub const PILOT_SYMBOLS: usize = 1024;

/// Decision error rate above which results are marked unreliable.
pub const UNRELIABLE_DECISION_RATE: f64 = 1e-2;

pub const UNRELIABLE_DECISIONS: &str = "unreliable-decisions";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionMode {
    /// Known transmitted symbols are available.
    #[default]
    Genie,
    /// Decision-directed, with fourth-power phase recovery.
    Blind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub rolloff: f64,
    pub sps: usize,
    #[serde(default)]
    pub mode: DecisionMode,
    /// Width of the brick-wall front-end filter as a multiple of the symbol
    /// rate. `None` leaves the field unfiltered.
    #[serde(default = "default_filter")]
    pub filter_bandwidth_factor: Option<f64>,
}

fn default_filter() -> Option<f64> {
    Some(1.0)
}

impl ReceiverConfig {
    pub fn new(rolloff: f64, sps: usize) -> Self {
        Self {
            rolloff,
            sps,
            mode: DecisionMode::Genie,
            filter_bandwidth_factor: default_filter(),
        }
    }

    pub fn with_mode(mut self, mode: DecisionMode) -> Self {
        self.mode = mode;
        self
    }
}

/// Hard decisions together with their measured error rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Demodulated {
    pub frame: SymbolFrame,
    /// Fraction of symbols differing from the hint; `None` without a hint.
    pub decision_error_rate: Option<f64>,
    pub warnings: Vec<String>,
}

/// Receiver-plane split of one block.
#[derive(Clone, Debug, PartialEq)]
pub struct RxOutput {
    /// Filtered received field at z = 0, divided by the raw alignment so the
    /// signal component has unit amplitude.
    pub e_tot_0: ComplexWaveform,
    /// Regenerated signal waveform, unit average power.
    pub u_ref: ComplexWaveform,
    /// `e_tot_0 − fit_scale·u_ref`.
    pub delta_e: ComplexWaveform,
    /// Least-squares alignment of `e_tot_0` onto `u_ref` (unity up to rounding).
    pub fit_scale: Complex64,
    /// Least-squares alignment of the unnormalized field onto `u_ref`.
    pub raw_scale: Complex64,
    pub decision_error_rate: Option<f64>,
    pub warnings: Vec<String>,
}

impl RxOutput {
    /// In-band signal-to-residual power ratio, linear.
    pub fn residual_snr(&self) -> f64 {
        let s = self.fit_scale.norm_sqr() * self.u_ref.energy();
        s / self.delta_e.energy()
    }
}

/// Remove all dispersion accumulated over the link.
pub fn compensate_dispersion(w: &ComplexWaveform, plan: &PropagationPlan) -> Result<ComplexWaveform> {
    let b = plan.cumulative_beta2(plan.total_length_km())?;
    Ok(dispersion_step(w, -b))
}

fn inner(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Complex64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y))
        .map(|(x, y)| x.conj() * y)
        .sum()
}

fn qpsk_decide(s: Complex64) -> Complex64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(a.copysign(s.re), a.copysign(s.im))
}

/// Matched filter, decimation, phase alignment and hard QPSK decisions.
///
/// With a `hint` the phase and scale come from a least-squares fit to the first
/// [`PILOT_SYMBOLS`] known symbols and the decision error rate is measured.
/// Without one, the phase is taken from the fourth-power estimator, which
/// assumes the residual carrier phase lies within ±π/4.
pub fn demodulate(
    w0: &ComplexWaveform,
    hint: Option<&SymbolFrame>,
    rolloff: f64,
    sps: usize,
) -> Result<Demodulated> {
    let rx = matched_filter_decimate(w0, rolloff, sps)?;
    let n = rx[0].len();
    let baud = w0.sample_rate() / sps as f64;
    let rotation = match hint {
        Some(h) => {
            if h.pol_count() != rx.len() || h.len() != n {
                return invalid_arg("symbol hint does not cover the received waveform");
            }
            let m = PILOT_SYMBOLS.min(n);
            let pilots: Vec<Vec<Complex64>> = h.symbols().iter().map(|p| p[..m].to_vec()).collect();
            let head: Vec<Vec<Complex64>> = rx.iter().map(|p| p[..m].to_vec()).collect();
            let a = inner(&pilots, &head);
            if a.norm() == 0.0 {
                return invalid_arg("received waveform carries no signal");
            }
            a.conj() / a.norm()
        }
        None => {
            let s4: Complex64 = rx.iter().flatten().map(|s| s.powi(4)).sum();
            if s4.norm() == 0.0 {
                return invalid_arg("received waveform carries no signal");
            }
            // QPSK symbols raised to the fourth power sit at −1.
            Complex64::from_polar(1.0, -(-s4).arg() / 4.0)
        }
    };
    let decided: Vec<Vec<Complex64>> = rx
        .iter()
        .map(|p| p.iter().map(|s| qpsk_decide(s * rotation)).collect())
        .collect();
    let mut warnings = Vec::new();
    let decision_error_rate = hint.map(|h| {
        let errors = decided
            .iter()
            .flatten()
            .zip(h.symbols().iter().flatten())
            .filter(|(d, t)| (*d - *t).norm() > 1e-9)
            .count();
        errors as f64 / (n * rx.len()) as f64
    });
    if decision_error_rate.is_some_and(|r| r > UNRELIABLE_DECISION_RATE) {
        warnings.push(UNRELIABLE_DECISIONS.to_string());
    }
    let seed = hint.map_or(0, |h| h.seed());
    Ok(Demodulated {
        frame: SymbolFrame::new(decided, baud, seed)?,
        decision_error_rate,
        warnings,
    })
}

fn front_end(w: &ComplexWaveform, baud: f64, factor: Option<f64>) -> Result<ComplexWaveform> {
    match factor {
        Some(f) => {
            let bw = (f * baud).min(w.sample_rate());
            let out = channel_select(w, 0.0, bw)?;
            Ok(out.with_center_offset(w.center_offset()))
        }
        None => Ok(w.clone()),
    }
}

/// Regenerate the signal from `decided`, align the received field onto it and
/// split off the residual.
///
/// Both the field and the reference pass the same brick-wall front-end filter
/// (`filter_bandwidth_factor` × symbol rate), so the residual holds only the
/// noise inside the signal band. The field is then divided by its least-squares
/// alignment onto the unit-power reference, which removes any common complex
/// gain of the link.
pub fn build_reference_and_residual(
    w0: &ComplexWaveform,
    decided: &SymbolFrame,
    cfg: &ReceiverConfig,
) -> Result<RxOutput> {
    if w0.energy() == 0.0 {
        return invalid_arg("received waveform is all zeros");
    }
    if decided.pol_count() != w0.pol_count() || decided.len() * cfg.sps != w0.len() {
        return invalid_arg("decided symbols do not cover the received waveform");
    }
    let baud = decided.baud_rate();
    let u = shape_pulse(decided, cfg.rolloff, cfg.sps)?;
    let u = front_end(&u, baud, cfg.filter_bandwidth_factor)?;
    let u_ref = u.clone().scaled(Complex64::new(average_power(&u)?.sqrt().recip(), 0.0));
    let e = front_end(w0, baud, cfg.filter_bandwidth_factor)?;
    let uu = u_ref.energy();
    let raw_scale = inner(u_ref.pols(), e.pols()) / uu;
    if raw_scale.norm() == 0.0 {
        return invalid_arg("received waveform is orthogonal to the reference");
    }
    let e_tot_0 = e.scaled(raw_scale.inv());
    let fit_scale = inner(u_ref.pols(), e_tot_0.pols()) / uu;
    let delta_e = e_tot_0.sub(&u_ref.clone().scaled(fit_scale))?;
    Ok(RxOutput {
        e_tot_0,
        u_ref,
        delta_e,
        fit_scale,
        raw_scale,
        decision_error_rate: None,
        warnings: Vec::new(),
    })
}

/// Full receiver chain for a field captured at the end of the link.
///
/// In genie mode the reference is regenerated from `hint` itself; decisions
/// are still taken and scored so the metadata reports their error rate.
pub fn receive(
    w_end: &ComplexWaveform,
    plan: &PropagationPlan,
    hint: Option<&SymbolFrame>,
    cfg: &ReceiverConfig,
) -> Result<RxOutput> {
    let w0 = compensate_dispersion(w_end, plan)?;
    let demod = demodulate(&w0, hint, cfg.rolloff, cfg.sps)?;
    let reference = match (cfg.mode, hint) {
        (DecisionMode::Genie, Some(h)) => h,
        (DecisionMode::Genie, None) => return invalid_arg("genie mode needs the transmitted symbols"),
        (DecisionMode::Blind, _) => &demod.frame,
    };
    let mut out = build_reference_and_residual(&w0, reference, cfg)?;
    out.decision_error_rate = demod.decision_error_rate;
    out.warnings = demod.warnings;
    Ok(out)
}
