//! Link topology and its compilation into an ordered propagation plan.
//!
//! A [`LinkSpec`] is an ordered list of spans and lumped elements. The
//! position along the link (`z`) is defined by the spans alone; lumped
//! elements sit at span boundaries. Between two spans the canonical order is
//! point losses, then amplifiers, then explicit noise injections.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_config, Result};
use crate::units::{
    alpha_db_to_neper, beta2_from_dispersion, db_to_lin, dbm_to_mw, mw_to_dbm, PLANCK,
    SPEED_OF_LIGHT,
};

pub const SSMF_ALPHA_DB_PER_KM: f64 = 0.2;
pub const SSMF_DISPERSION_PS_NM_KM: f64 = 17.0;
pub const SSMF_GAMMA_PER_W_KM: f64 = 1.3;
pub const REFERENCE_WAVELENGTH_NM: f64 = 1550.0;

fn default_alpha() -> f64 {
    SSMF_ALPHA_DB_PER_KM
}
fn default_dispersion() -> f64 {
    SSMF_DISPERSION_PS_NM_KM
}
fn default_gamma() -> f64 {
    SSMF_GAMMA_PER_W_KM
}
fn default_wavelength() -> f64 {
    REFERENCE_WAVELENGTH_NM
}
fn default_count() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpan {
    pub length_km: f64,
    #[serde(default = "default_alpha")]
    pub alpha_db_per_km: f64,
    #[serde(default = "default_dispersion")]
    pub dispersion_ps_per_nm_km: f64,
    #[serde(default = "default_gamma")]
    pub gamma_per_w_km: f64,
    #[serde(default = "default_wavelength")]
    pub reference_wavelength_nm: f64,
}

impl FiberSpan {
    /// Standard single-mode fiber with default parameters.
    pub fn ssmf(length_km: f64) -> Self {
        Self {
            length_km,
            alpha_db_per_km: SSMF_ALPHA_DB_PER_KM,
            dispersion_ps_per_nm_km: SSMF_DISPERSION_PS_NM_KM,
            gamma_per_w_km: SSMF_GAMMA_PER_W_KM,
            reference_wavelength_nm: REFERENCE_WAVELENGTH_NM,
        }
    }

    pub fn beta2_ps2_per_km(&self) -> f64 {
        beta2_from_dispersion(self.dispersion_ps_per_nm_km, self.reference_wavelength_nm)
    }

    pub fn loss_db(&self) -> f64 {
        self.alpha_db_per_km * self.length_km
    }

    fn validate(&self) -> Result<()> {
        if !(self.length_km > 0.0 && self.length_km.is_finite()) {
            return invalid_config(format!("span length must be positive, got {}", self.length_km));
        }
        if !(self.alpha_db_per_km >= 0.0 && self.alpha_db_per_km.is_finite()) {
            return invalid_config("span attenuation must be non-negative");
        }
        if !(self.gamma_per_w_km >= 0.0 && self.gamma_per_w_km.is_finite()) {
            return invalid_config("span nonlinear coefficient must be non-negative");
        }
        if !self.dispersion_ps_per_nm_km.is_finite() {
            return invalid_config("span dispersion must be finite");
        }
        if !(self.reference_wavelength_nm > 0.0) {
            return invalid_config("reference wavelength must be positive");
        }
        Ok(())
    }
}

/// Amplifier gain: explicit, or `auto` to restore the launch power.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Gain {
    #[default]
    Auto,
    Db(f64),
}

impl Serialize for Gain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Gain::Auto => s.serialize_str("auto"),
            Gain::Db(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Gain {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Gain::Db(v)),
            Raw::Str(s) if s == "auto" => Ok(Gain::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "expected a gain in dB or \"auto\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseMode {
    #[default]
    None,
    /// Injected in-band SNR relative to the signal power at the node.
    SetSnrDb(f64),
    /// ASE from a noise figure: `NF·h·ν·(G−1)` per Hz.
    NoiseFigureDb(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplifierNode {
    pub gain: Gain,
    pub noise: NoiseMode,
}

impl AmplifierNode {
    pub fn auto(noise: NoiseMode) -> Self {
        Self {
            gain: Gain::Auto,
            noise,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Gain::Db(g) = self.gain {
            if !g.is_finite() {
                return invalid_config("amplifier gain must be finite");
            }
        }
        match self.noise {
            NoiseMode::SetSnrDb(snr) if !(snr > 0.0 && snr.is_finite()) => {
                invalid_config(format!("amplifier set-SNR must be > 0 dB, got {snr}"))
            }
            NoiseMode::NoiseFigureDb(nf) if !nf.is_finite() => invalid_config("noise figure must be finite"),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLoss {
    pub loss_db: f64,
}

/// Power of an explicit noise injection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoisePower {
    /// In-band SNR relative to the nominal signal power at the injection point.
    SetSnrDb(f64),
    /// Absolute in-band noise power.
    PowerDbm(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseInjection {
    pub power: NoisePower,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LinkElement {
    Span(FiberSpan),
    Amplifier(AmplifierNode),
    PointLoss(PointLoss),
    NoiseInjection(NoiseInjection),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WdmNeighbor {
    pub center_offset_hz: f64,
    pub power_dbm: f64,
    pub seed: u64,
}

/// Declarative link description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinkConfig", into = "LinkConfig")]
pub struct LinkSpec {
    elements: Vec<LinkElement>,
    launch_power_dbm: f64,
    wdm_neighbors: Vec<WdmNeighbor>,
}

fn boundary_rank(e: &LinkElement) -> Option<u8> {
    match e {
        LinkElement::Span(_) => None,
        LinkElement::PointLoss(_) => Some(0),
        LinkElement::Amplifier(_) => Some(1),
        LinkElement::NoiseInjection(_) => Some(2),
    }
}

impl LinkSpec {
    pub fn new(elements: Vec<LinkElement>, launch_power_dbm: f64, wdm_neighbors: Vec<WdmNeighbor>) -> Result<Self> {
        let spec = Self {
            elements,
            launch_power_dbm,
            wdm_neighbors,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `count` identical spans, each preceded by an auto-gain amplifier with
    /// the given noise mode (the first one acts as the booster at z = 0).
    pub fn uniform_chain(span: FiberSpan, count: usize, launch_power_dbm: f64, noise: NoiseMode) -> Result<Self> {
        let mut elements = Vec::with_capacity(2 * count);
        for _ in 0..count {
            elements.push(LinkElement::Amplifier(AmplifierNode::auto(noise)));
            elements.push(LinkElement::Span(span.clone()));
        }
        Self::new(elements, launch_power_dbm, Vec::new())
    }

    pub fn elements(&self) -> &[LinkElement] {
        &self.elements
    }

    pub fn launch_power_dbm(&self) -> f64 {
        self.launch_power_dbm
    }

    pub fn wdm_neighbors(&self) -> &[WdmNeighbor] {
        &self.wdm_neighbors
    }

    pub fn with_launch_power(mut self, dbm: f64) -> Self {
        self.launch_power_dbm = dbm;
        self
    }

    pub fn with_wdm_neighbors(mut self, neighbors: Vec<WdmNeighbor>) -> Self {
        self.wdm_neighbors = neighbors;
        self
    }

    pub fn spans(&self) -> impl Iterator<Item = &FiberSpan> {
        self.elements.iter().filter_map(|e| match e {
            LinkElement::Span(s) => Some(s),
            _ => None,
        })
    }

    pub fn span_count(&self) -> usize {
        self.spans().count()
    }

    pub fn total_length_km(&self) -> f64 {
        self.spans().map(|s| s.length_km).sum()
    }

    /// Start position of each span, km.
    pub fn span_starts_km(&self) -> Vec<f64> {
        let mut z = 0.0;
        self.spans()
            .map(|s| {
                let start = z;
                z += s.length_km;
                start
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return invalid_config("link has no elements");
        }
        if self.span_count() == 0 {
            return invalid_config("link has no fiber spans");
        }
        let mut last_rank = 0u8;
        for e in &self.elements {
            match e {
                LinkElement::Span(s) => {
                    s.validate()?;
                    last_rank = 0;
                    continue;
                }
                LinkElement::Amplifier(a) => a.validate()?,
                LinkElement::PointLoss(l) => {
                    if !(l.loss_db >= 0.0 && l.loss_db.is_finite()) {
                        return invalid_config(format!("point loss must be non-negative, got {}", l.loss_db));
                    }
                }
                LinkElement::NoiseInjection(n) => match n.power {
                    NoisePower::SetSnrDb(snr) if !(snr > 0.0 && snr.is_finite()) => {
                        return invalid_config(format!("injection set-SNR must be > 0 dB, got {snr}"));
                    }
                    NoisePower::PowerDbm(p) if !p.is_finite() => {
                        return invalid_config("injection power must be finite");
                    }
                    _ => {}
                },
            }
            let rank = boundary_rank(e).unwrap();
            if rank < last_rank {
                return invalid_config(
                    "elements between spans must be ordered: point losses, amplifiers, noise injections",
                );
            }
            last_rank = rank;
        }
        for n in &self.wdm_neighbors {
            if !n.center_offset_hz.is_finite() || n.center_offset_hz == 0.0 {
                return invalid_config("WDM neighbor offsets must be finite and nonzero");
            }
            if !n.power_dbm.is_finite() {
                return invalid_config("WDM neighbor power must be finite");
            }
        }
        Ok(())
    }
}

// Keyed configuration schema. Span numbers are 1-based: an amplifier or
// injection at `span_input = k` sits at the start of span k (k = N + 1 is the
// link end); a point loss at `span_end = k` sits at the end of span k.

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpanEntry {
    length_km: f64,
    #[serde(default = "default_alpha")]
    alpha_db_per_km: f64,
    #[serde(default = "default_dispersion")]
    dispersion_ps_per_nm_km: f64,
    #[serde(default = "default_gamma")]
    gamma_per_w_km: f64,
    #[serde(default = "default_wavelength")]
    reference_wavelength_nm: f64,
    #[serde(default = "default_count", skip_serializing_if = "is_one")]
    count: usize,
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmpEntry {
    span_input: usize,
    #[serde(default)]
    gain_db: Gain,
    #[serde(default)]
    noise: NoiseMode,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LossEntry {
    span_end: usize,
    loss_db: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InjectionEntry {
    span_input: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    set_snr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    power_dbm: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkConfig {
    launch_power_dbm: f64,
    spans: Vec<SpanEntry>,
    #[serde(default)]
    amps: Vec<AmpEntry>,
    #[serde(default)]
    point_losses: Vec<LossEntry>,
    #[serde(default)]
    noise_injections: Vec<InjectionEntry>,
    #[serde(default)]
    wdm_neighbors: Vec<WdmNeighbor>,
}

impl TryFrom<LinkConfig> for LinkSpec {
    type Error = crate::error::Error;

    fn try_from(cfg: LinkConfig) -> Result<Self> {
        let spans: Vec<FiberSpan> = cfg
            .spans
            .iter()
            .flat_map(|e| {
                std::iter::repeat_n(
                    FiberSpan {
                        length_km: e.length_km,
                        alpha_db_per_km: e.alpha_db_per_km,
                        dispersion_ps_per_nm_km: e.dispersion_ps_per_nm_km,
                        gamma_per_w_km: e.gamma_per_w_km,
                        reference_wavelength_nm: e.reference_wavelength_nm,
                    },
                    e.count,
                )
            })
            .collect();
        let n = spans.len();
        if n == 0 {
            return invalid_config("link has no fiber spans");
        }
        for a in &cfg.amps {
            if a.span_input == 0 || a.span_input > n + 1 {
                return invalid_config(format!("amps[].span_input {} outside 1..={}", a.span_input, n + 1));
            }
        }
        for i in &cfg.noise_injections {
            if i.span_input == 0 || i.span_input > n + 1 {
                return invalid_config(format!(
                    "noise_injections[].span_input {} outside 1..={}",
                    i.span_input,
                    n + 1
                ));
            }
        }
        for l in &cfg.point_losses {
            if l.span_end > n {
                return invalid_config(format!("point_losses[].span_end {} outside 0..={n}", l.span_end));
            }
        }
        let mut elements = Vec::new();
        // boundary b sits before span b+1 (0-based b = 0..=n)
        #[allow(clippy::needless_range_loop)]
        for b in 0..=n {
            for l in cfg.point_losses.iter().filter(|l| l.span_end == b) {
                elements.push(LinkElement::PointLoss(PointLoss { loss_db: l.loss_db }));
            }
            for a in cfg.amps.iter().filter(|a| a.span_input == b + 1) {
                elements.push(LinkElement::Amplifier(AmplifierNode {
                    gain: a.gain_db,
                    noise: a.noise,
                }));
            }
            for i in cfg.noise_injections.iter().filter(|i| i.span_input == b + 1) {
                let power = match (i.set_snr_db, i.power_dbm) {
                    (Some(snr), None) => NoisePower::SetSnrDb(snr),
                    (None, Some(p)) => NoisePower::PowerDbm(p),
                    _ => {
                        return invalid_config(
                            "noise_injections[] needs exactly one of set_snr_db or power_dbm",
                        )
                    }
                };
                elements.push(LinkElement::NoiseInjection(NoiseInjection { power }));
            }
            if b < n {
                elements.push(LinkElement::Span(spans[b].clone()));
            }
        }
        LinkSpec::new(elements, cfg.launch_power_dbm, cfg.wdm_neighbors)
    }
}

impl From<LinkSpec> for LinkConfig {
    fn from(spec: LinkSpec) -> Self {
        let mut cfg = LinkConfig {
            launch_power_dbm: spec.launch_power_dbm,
            spans: Vec::new(),
            amps: Vec::new(),
            point_losses: Vec::new(),
            noise_injections: Vec::new(),
            wdm_neighbors: spec.wdm_neighbors,
        };
        let mut spans_seen = 0usize;
        for e in spec.elements {
            match e {
                LinkElement::Span(s) => {
                    spans_seen += 1;
                    cfg.spans.push(SpanEntry {
                        length_km: s.length_km,
                        alpha_db_per_km: s.alpha_db_per_km,
                        dispersion_ps_per_nm_km: s.dispersion_ps_per_nm_km,
                        gamma_per_w_km: s.gamma_per_w_km,
                        reference_wavelength_nm: s.reference_wavelength_nm,
                        count: 1,
                    });
                }
                LinkElement::PointLoss(l) => cfg.point_losses.push(LossEntry {
                    span_end: spans_seen,
                    loss_db: l.loss_db,
                }),
                LinkElement::Amplifier(a) => cfg.amps.push(AmpEntry {
                    span_input: spans_seen + 1,
                    gain_db: a.gain,
                    noise: a.noise,
                }),
                LinkElement::NoiseInjection(i) => cfg.noise_injections.push(InjectionEntry {
                    span_input: spans_seen + 1,
                    set_snr_db: match i.power {
                        NoisePower::SetSnrDb(v) => Some(v),
                        _ => None,
                    },
                    power_dbm: match i.power {
                        NoisePower::PowerDbm(v) => Some(v),
                        _ => None,
                    },
                }),
            }
        }
        cfg
    }
}

/// Noise added at a lumped node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum NoiseLevel {
    /// Power within a bandwidth equal to the signal symbol rate, mW.
    InBand { power_mw: f64 },
    /// One-sided white spectral density over the simulated band, mW/Hz.
    Psd { mw_per_hz: f64 },
}

/// One atomic propagation step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Step {
    Fiber {
        start_z_km: f64,
        length_km: f64,
        /// Power attenuation, 1/km.
        alpha_per_km: f64,
        beta2_ps2_per_km: f64,
        gamma_per_w_km: f64,
    },
    Gain { z_km: f64, gain_db: f64 },
    Loss { z_km: f64, loss_db: f64 },
    Noise {
        z_km: f64,
        level: NoiseLevel,
        /// Nominal signal power at this point, mW.
        signal_power_mw: f64,
    },
}

impl Step {
    pub fn start_z_km(&self) -> f64 {
        match self {
            Step::Fiber { start_z_km, .. } => *start_z_km,
            Step::Gain { z_km, .. } | Step::Loss { z_km, .. } | Step::Noise { z_km, .. } => *z_km,
        }
    }
}

/// Executable step list plus the cumulative dispersion map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropagationPlan {
    steps: Vec<Step>,
    /// `(z_km, accumulated β2 in ps²)` at every fiber step boundary.
    dispersion_map: Vec<(f64, f64)>,
    total_length_km: f64,
    launch_power_dbm: f64,
    span_starts_km: Vec<f64>,
    wdm_neighbors: Vec<WdmNeighbor>,
}

impl PropagationPlan {
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn total_length_km(&self) -> f64 {
        self.total_length_km
    }

    pub fn launch_power_dbm(&self) -> f64 {
        self.launch_power_dbm
    }

    pub fn span_starts_km(&self) -> &[f64] {
        &self.span_starts_km
    }

    pub fn wdm_neighbors(&self) -> &[WdmNeighbor] {
        &self.wdm_neighbors
    }

    /// Shortest fiber step, km.
    pub fn shortest_fiber_km(&self) -> f64 {
        self.steps
            .iter()
            .filter_map(|s| match s {
                Step::Fiber { length_km, .. } => Some(*length_km),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Accumulated dispersion from 0 to `z_km`, ps².
    pub fn cumulative_beta2(&self, z_km: f64) -> Result<f64> {
        cumulative_beta2(self, z_km)
    }
}

/// Accumulated β2 between z = 0 and `z_km`, in ps². Piecewise linear in z.
pub fn cumulative_beta2(plan: &PropagationPlan, z_km: f64) -> Result<f64> {
    let l = plan.total_length_km;
    let tol = 1e-9 * l.max(1.0);
    if !(z_km >= -tol && z_km <= l + tol) {
        return invalid_arg(format!("position {z_km} km outside the link [0, {l}]"));
    }
    let z = z_km.clamp(0.0, l);
    let map = &plan.dispersion_map;
    let idx = map.partition_point(|(zb, _)| *zb <= z);
    if idx == 0 {
        return Ok(map[0].1);
    }
    let (z0, b0) = map[idx - 1];
    if idx == map.len() {
        return Ok(b0);
    }
    let (z1, b1) = map[idx];
    if z1 == z0 {
        return Ok(b1);
    }
    Ok(b0 + (b1 - b0) * (z - z0) / (z1 - z0))
}

/// Compile a link into an ordered step list.
///
/// The nominal signal power is tracked from the launch power so that
/// `set_snr` noise levels resolve to absolute in-band powers and `auto`
/// amplifier gains restore the launch power.
pub fn compile(spec: &LinkSpec) -> Result<PropagationPlan> {
    spec.validate()?;
    if !spec.launch_power_dbm.is_finite() {
        return invalid_config("no signal power defined: launch power must be finite");
    }
    let launch_mw = dbm_to_mw(spec.launch_power_dbm);
    let mut power_mw = launch_mw;
    let mut z = 0.0;
    let mut b_acc = 0.0;
    let mut steps = Vec::new();
    let mut dispersion_map = vec![(0.0, 0.0)];
    let mut span_starts_km = Vec::new();
    let mut last_wavelength_nm = REFERENCE_WAVELENGTH_NM;
    for e in &spec.elements {
        match e {
            LinkElement::Span(s) => {
                span_starts_km.push(z);
                let beta2 = s.beta2_ps2_per_km();
                steps.push(Step::Fiber {
                    start_z_km: z,
                    length_km: s.length_km,
                    alpha_per_km: alpha_db_to_neper(s.alpha_db_per_km),
                    beta2_ps2_per_km: beta2,
                    gamma_per_w_km: s.gamma_per_w_km,
                });
                z += s.length_km;
                b_acc += beta2 * s.length_km;
                dispersion_map.push((z, b_acc));
                power_mw *= db_to_lin(-s.loss_db());
                last_wavelength_nm = s.reference_wavelength_nm;
            }
            LinkElement::PointLoss(l) => {
                steps.push(Step::Loss {
                    z_km: z,
                    loss_db: l.loss_db,
                });
                power_mw *= db_to_lin(-l.loss_db);
            }
            LinkElement::Amplifier(a) => {
                let gain_db = match a.gain {
                    Gain::Auto => spec.launch_power_dbm - mw_to_dbm(power_mw),
                    Gain::Db(g) => g,
                };
                steps.push(Step::Gain { z_km: z, gain_db });
                power_mw *= db_to_lin(gain_db);
                let level = match a.noise {
                    NoiseMode::None => None,
                    NoiseMode::SetSnrDb(snr) => Some(NoiseLevel::InBand {
                        power_mw: power_mw / db_to_lin(snr),
                    }),
                    NoiseMode::NoiseFigureDb(nf) => {
                        let nu = SPEED_OF_LIGHT / (last_wavelength_nm * 1e-9);
                        let g = db_to_lin(gain_db);
                        Some(NoiseLevel::Psd {
                            mw_per_hz: db_to_lin(nf) * PLANCK * nu * (g - 1.0).max(0.0) * 1e3,
                        })
                    }
                };
                if let Some(level) = level {
                    steps.push(Step::Noise {
                        z_km: z,
                        level,
                        signal_power_mw: power_mw,
                    });
                }
            }
            LinkElement::NoiseInjection(n) => {
                let power = match n.power {
                    NoisePower::SetSnrDb(snr) => power_mw / db_to_lin(snr),
                    NoisePower::PowerDbm(p) => dbm_to_mw(p),
                };
                steps.push(Step::Noise {
                    z_km: z,
                    level: NoiseLevel::InBand { power_mw: power },
                    signal_power_mw: power_mw,
                });
            }
        }
    }
    Ok(PropagationPlan {
        steps,
        dispersion_map,
        total_length_km: z,
        launch_power_dbm: spec.launch_power_dbm,
        span_starts_km,
        wdm_neighbors: spec.wdm_neighbors.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six_by_80() -> LinkSpec {
        LinkSpec::uniform_chain(FiberSpan::ssmf(80.0), 6, 0.0, NoiseMode::None).unwrap()
    }

    #[test]
    fn six_span_totals() {
        let plan = compile(&six_by_80()).unwrap();
        assert_eq!(plan.total_length_km(), 480.0);
        let b2 = FiberSpan::ssmf(80.0).beta2_ps2_per_km();
        let b = plan.cumulative_beta2(480.0).unwrap();
        assert!((b - 6.0 * 80.0 * b2).abs() < 1e-9 * b.abs());
        assert_eq!(plan.span_starts_km(), &[0.0, 80.0, 160.0, 240.0, 320.0, 400.0]);
    }

    #[test]
    fn empty_and_spanless_links_rejected() {
        assert!(LinkSpec::new(vec![], 0.0, vec![]).is_err());
        let amp_only = vec![LinkElement::Amplifier(AmplifierNode::auto(NoiseMode::None))];
        assert!(LinkSpec::new(amp_only, 0.0, vec![]).is_err());
    }

    #[test]
    fn negative_span_rejected() {
        let e = vec![LinkElement::Span(FiberSpan::ssmf(-1.0))];
        assert!(LinkSpec::new(e, 0.0, vec![]).is_err());
    }

    #[test]
    fn non_finite_launch_power_rejected_at_compile() {
        let spec = six_by_80().with_launch_power(f64::NAN);
        assert!(compile(&spec).is_err());
    }

    #[test]
    fn cumulative_beta2_examples() {
        let plan = compile(&six_by_80()).unwrap();
        let b2 = FiberSpan::ssmf(80.0).beta2_ps2_per_km();
        assert_eq!(plan.cumulative_beta2(0.0).unwrap(), 0.0);
        let mid = plan.cumulative_beta2(120.0).unwrap();
        assert!((mid - (80.0 + 40.0) * b2).abs() < 1e-9);
        assert!(plan.cumulative_beta2(-1.0).is_err());
        assert!(plan.cumulative_beta2(481.0).is_err());
        for k in 0..=6 {
            let bk = plan.cumulative_beta2(80.0 * k as f64).unwrap();
            let b1 = plan.cumulative_beta2(80.0).unwrap();
            assert!((bk - k as f64 * b1).abs() <= 1e-12 * bk.abs().max(1.0));
        }
    }

    #[test]
    fn auto_gain_restores_launch_power() {
        let mut elements = Vec::new();
        for k in 0..3 {
            elements.push(LinkElement::Amplifier(AmplifierNode::auto(NoiseMode::SetSnrDb(20.0))));
            elements.push(LinkElement::Span(FiberSpan::ssmf(80.0)));
            if k == 1 {
                elements.push(LinkElement::PointLoss(PointLoss { loss_db: 7.0 }));
            }
        }
        let spec = LinkSpec::new(elements, 5.0, vec![]).unwrap();
        let plan = compile(&spec).unwrap();
        let gains: Vec<f64> = plan
            .steps()
            .iter()
            .filter_map(|s| match s {
                Step::Gain { gain_db, .. } => Some(*gain_db),
                _ => None,
            })
            .collect();
        assert!((gains[0]).abs() < 1e-12);
        assert!((gains[1] - 16.0).abs() < 1e-9);
        assert!((gains[2] - 23.0).abs() < 1e-9);
        for s in plan.steps() {
            if let Step::Noise { level, signal_power_mw, .. } = s {
                assert!((signal_power_mw - dbm_to_mw(5.0)).abs() < 1e-9);
                match level {
                    NoiseLevel::InBand { power_mw } => {
                        assert!((power_mw - dbm_to_mw(5.0) / 100.0).abs() < 1e-12)
                    }
                    _ => panic!(),
                }
            }
        }
    }

    #[test]
    fn non_canonical_boundary_order_rejected() {
        let e = vec![
            LinkElement::Span(FiberSpan::ssmf(80.0)),
            LinkElement::Amplifier(AmplifierNode::auto(NoiseMode::None)),
            LinkElement::PointLoss(PointLoss { loss_db: 1.0 }),
            LinkElement::Span(FiberSpan::ssmf(80.0)),
        ];
        assert!(LinkSpec::new(e, 0.0, vec![]).is_err());
    }

    #[test]
    fn keyed_schema_parses() {
        let json = r#"{
            "launch_power_dbm": 5.0,
            "spans": [{"length_km": 75.0, "count": 12}],
            "amps": [{"span_input": 1, "noise": {"set_snr_db": 20.0}},
                     {"span_input": 5, "gain_db": "auto", "noise": {"set_snr_db": 13.0}}],
            "point_losses": [{"span_end": 4, "loss_db": 7.0}],
            "noise_injections": [{"span_input": 3, "power_dbm": -30.0}],
            "wdm_neighbors": [{"center_offset_hz": 75e9, "power_dbm": -10.0, "seed": 3}]
        }"#;
        let spec: LinkSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.span_count(), 12);
        assert_eq!(spec.total_length_km(), 900.0);
        // the loss must precede the span-5 amplifier
        let pos_loss = spec
            .elements()
            .iter()
            .position(|e| matches!(e, LinkElement::PointLoss(_)))
            .unwrap();
        assert!(matches!(spec.elements()[pos_loss + 1], LinkElement::Amplifier(_)));
        let back = serde_json::to_string(&spec).unwrap();
        let again: LinkSpec = serde_json::from_str(&back).unwrap();
        assert_eq!(compile(&spec).unwrap(), compile(&again).unwrap());
    }

    #[test]
    fn schema_rejects_unknown_keys_and_bad_positions() {
        let bad = r#"{"launch_power_dbm": 0, "spans": [{"length_km": 80}], "amp": []}"#;
        assert!(serde_json::from_str::<LinkSpec>(bad).is_err());
        let bad = r#"{"launch_power_dbm": 0, "spans": [{"length_km": 80}], "amps": [{"span_input": 3}]}"#;
        assert!(serde_json::from_str::<LinkSpec>(bad).is_err());
        let bad = r#"{"launch_power_dbm": 0, "spans": [{"length_km": 80}],
                      "noise_injections": [{"span_input": 1, "set_snr_db": 20, "power_dbm": 0}]}"#;
        assert!(serde_json::from_str::<LinkSpec>(bad).is_err());
    }
}
