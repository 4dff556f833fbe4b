//! Named scenarios modelled on the reference experiments.

use crate::error::{invalid_arg, invalid_config, Result};
use crate::link::{
    AmplifierNode, FiberSpan, LinkElement, LinkSpec, NoiseInjection, NoiseMode, NoisePower, PointLoss, WdmNeighbor,
};
use crate::pipeline::SignalConfig;
use crate::scenario::{EstimatorConfig, ScenarioConfig};
use crate::ssfm::SsfmConfig;

pub const PRESETS: [&str; 6] = ["fig2a", "fig2b", "fig2c", "fig3", "pointloss", "xpm"];

/// Set SNR of every noisy amplifier / injection unless overridden.
pub const DEFAULT_SET_SNR_DB: f64 = 20.0;

/// Overrides accepted by [`preset`]. Unset fields keep the preset default.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PresetOptions {
    pub launch_dbm: Option<f64>,
    pub set_snr_db: Option<f64>,
    /// 1-based span whose input receives the single injection (fig2a / fig2b).
    pub injection_span: Option<usize>,
    pub neighbor_dbm: Option<f64>,
    pub loss_db: Option<f64>,
    pub blocks: Option<usize>,
    pub symbols_per_block: Option<usize>,
    pub seed: Option<u64>,
}

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2a" => "6x80 km, 0 dBm, one 20 dB set-SNR injection at a chosen span input (default span 4)",
        "fig2b" => "6x80 km, 0 dBm, one injection at span 4 with a chosen set-SNR",
        "fig2c" => "6x80 km, 0 dBm, 20 dB set-SNR injection at every span input",
        "fig3" => "12x80 km amplifier chain, 20 dB set-SNR per amplifier, launch 0 or 5 dBm",
        "pointloss" => "12x75 km, 5 dBm, 7 dB point loss after span 4 with a degraded post-loss amplifier",
        "xpm" => "12x75 km, 5 dBm test channel with 4 WDM neighbors at -10 or +8 dBm",
        _ => return None,
    })
}

fn amp(noise: NoiseMode) -> LinkElement {
    LinkElement::Amplifier(AmplifierNode::auto(noise))
}

fn injection(snr_db: f64) -> LinkElement {
    LinkElement::NoiseInjection(NoiseInjection {
        power: NoisePower::SetSnrDb(snr_db),
    })
}

fn signal(symbols: usize, blocks: usize) -> SignalConfig {
    SignalConfig {
        baud_hz: 68e9,
        pol_count: 2,
        rolloff: 0.1,
        sps: 2,
        symbols_per_block: symbols,
        blocks,
    }
}

fn injection_chain(spans: usize, launch: f64, at: &[usize], snr: f64) -> Result<LinkSpec> {
    let mut el = Vec::new();
    for k in 1..=spans {
        el.push(amp(NoiseMode::None));
        if at.contains(&k) {
            el.push(injection(snr));
        }
        el.push(LinkElement::Span(FiberSpan::ssmf(80.0)));
    }
    LinkSpec::new(el, launch, vec![])
}

fn amplified_chain(spans: usize, length_km: f64, launch: f64, snr: f64, loss: Option<(usize, f64)>) -> Result<LinkSpec> {
    let mut el = Vec::new();
    for k in 1..=spans {
        let mut amp_snr = snr;
        if let Some((after, db)) = loss {
            if k == after + 1 {
                el.push(LinkElement::PointLoss(PointLoss { loss_db: db }));
                // the amplifier compensating the loss runs at higher gain
                amp_snr = snr - db;
            }
        }
        el.push(amp(NoiseMode::SetSnrDb(amp_snr)));
        el.push(LinkElement::Span(FiberSpan::ssmf(length_km)));
    }
    LinkSpec::new(el, launch, vec![])
}

fn averaging_note(s: &SignalConfig) -> String {
    format!(
        "averaging over {} blocks of {} symbols (not reported for the reference experiments)",
        s.blocks, s.symbols_per_block
    )
}

/// Build a named scenario.
pub fn preset(name: &str, opts: &PresetOptions) -> Result<ScenarioConfig> {
    let snr = opts.set_snr_db.unwrap_or(DEFAULT_SET_SNR_DB);
    let mut deviations = Vec::new();
    let mut ssfm = SsfmConfig::with_step(4.0);
    let mut sig = signal(1 << 17, 16);
    let link = match name {
        "fig2a" | "fig2b" => {
            let at = opts.injection_span.unwrap_or(4);
            if !(1..=6).contains(&at) {
                return invalid_config(format!("injection span must be in 1..=6, got {at}"));
            }
            injection_chain(6, opts.launch_dbm.unwrap_or(0.0), &[at], snr)?
        }
        "fig2c" => injection_chain(6, opts.launch_dbm.unwrap_or(0.0), &[1, 2, 3, 4, 5, 6], snr)?,
        "fig3" => amplified_chain(12, 80.0, opts.launch_dbm.unwrap_or(0.0), snr, None)?,
        "pointloss" => {
            deviations.push("simulated analog of a field measurement; transceiver noise is not modelled".into());
            let loss = opts.loss_db.unwrap_or(7.0);
            amplified_chain(12, 75.0, opts.launch_dbm.unwrap_or(5.0), snr, Some((4, loss)))?
        }
        "xpm" => {
            deviations.push("simulated analog of a field measurement; transceiver noise is not modelled".into());
            deviations.push("4 WDM neighbors instead of 20".into());
            sig.sps = 6;
            sig.symbols_per_block = 1 << 15;
            ssfm = SsfmConfig::with_step(1.0);
            let p = opts.neighbor_dbm.unwrap_or(-10.0);
            let neighbors = [-150e9, -75e9, 75e9, 150e9]
                .iter()
                .enumerate()
                .map(|(i, f)| WdmNeighbor {
                    center_offset_hz: *f,
                    power_dbm: p,
                    seed: i as u64 + 1,
                })
                .collect();
            amplified_chain(12, 75.0, opts.launch_dbm.unwrap_or(5.0), snr, None)?.with_wdm_neighbors(neighbors)
        }
        other => return invalid_arg(format!("unknown preset '{other}'; known: {}", PRESETS.join(", "))),
    };
    if let Some(b) = opts.blocks {
        sig.blocks = b;
    }
    if let Some(n) = opts.symbols_per_block {
        sig.symbols_per_block = n;
    }
    deviations.push(averaging_note(&sig));
    let cfg = ScenarioConfig {
        name: name.to_string(),
        link,
        signal: sig,
        ssfm,
        estimator: EstimatorConfig::default(),
        seed: opts.seed.unwrap_or(1),
        outputs: None,
        deviations,
    };
    cfg.validate()?;
    Ok(cfg)
}
