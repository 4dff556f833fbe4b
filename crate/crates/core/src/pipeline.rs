//! One simulated block: symbols, shaping, optional WDM neighbors,
//! propagation and the receiver chain.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, Result};
use crate::link::{LinkSpec, PropagationPlan};
use crate::receiver::{receive, ReceiverConfig, RxOutput};
use crate::rng::{derive_seed, Stream};
use crate::ssfm::{channel_select, propagate, resample, wdm_multiplex, SsfmConfig};
use crate::waveform::{generate_symbols, set_average_power, shape_pulse, ComplexWaveform, SymbolFrame};

/// Samples per symbol handed to the receiver.
pub const RX_SPS: usize = 2;

fn default_rolloff() -> f64 {
    0.1
}
fn default_sps() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    pub baud_hz: f64,
    pub pol_count: usize,
    #[serde(default = "default_rolloff")]
    pub rolloff: f64,
    /// Simulation oversampling. Values above [`RX_SPS`] are decimated after
    /// channel selection.
    #[serde(default = "default_sps")]
    pub sps: usize,
    pub symbols_per_block: usize,
    pub blocks: usize,
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.baud_hz > 0.0 && self.baud_hz.is_finite()) {
            return invalid_config(format!("signal.baud_hz must be positive, got {}", self.baud_hz));
        }
        if !(1..=2).contains(&self.pol_count) {
            return invalid_config(format!("signal.pol_count must be 1 or 2, got {}", self.pol_count));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return invalid_config(format!("signal.rolloff must be in [0, 1], got {}", self.rolloff));
        }
        if self.sps < RX_SPS || !self.sps.is_multiple_of(RX_SPS) {
            return invalid_config(format!("signal.sps must be an even number ≥ 2, got {}", self.sps));
        }
        if !self.symbols_per_block.is_power_of_two() || self.symbols_per_block < 64 {
            return invalid_config(format!(
                "signal.symbols_per_block must be a power of two ≥ 64, got {}",
                self.symbols_per_block
            ));
        }
        if self.blocks == 0 {
            return invalid_config("signal.blocks must be at least 1");
        }
        Ok(())
    }

    pub fn receiver(&self) -> ReceiverConfig {
        ReceiverConfig::new(self.rolloff, RX_SPS)
    }
}

/// Seeds consumed by one block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSeeds {
    pub block: u64,
    pub symbols: u64,
    pub noise: u64,
    pub neighbors: Vec<u64>,
}

impl BlockSeeds {
    pub fn derive(root: u64, index: usize, spec: &LinkSpec) -> Self {
        let block = derive_seed(root, Stream::Block, index as u64);
        let neighbors = spec
            .wdm_neighbors()
            .iter()
            .enumerate()
            .map(|(i, n)| derive_seed(derive_seed(block, Stream::NeighborSymbols, i as u64), Stream::Neighbor, n.seed))
            .collect();
        Self {
            block,
            symbols: derive_seed(block, Stream::Symbols, 0),
            noise: derive_seed(block, Stream::Noise, 0),
            neighbors,
        }
    }
}

/// Transmitted symbols and the field captured at the end of the link, already
/// reduced to the receiver sampling rate.
#[derive(Clone, Debug)]
pub struct CapturedBlock {
    pub frame: SymbolFrame,
    pub field: ComplexWaveform,
    pub seeds: BlockSeeds,
}

/// Regenerate the transmitted frame of a block.
pub fn transmitted_frame(signal: &SignalConfig, seeds: &BlockSeeds) -> Result<SymbolFrame> {
    generate_symbols(signal.symbols_per_block, signal.pol_count, signal.baud_hz, seeds.symbols)
}

fn launch_field(spec: &LinkSpec, signal: &SignalConfig, frame: &SymbolFrame, seeds: &BlockSeeds) -> Result<ComplexWaveform> {
    let tx = set_average_power(&shape_pulse(frame, signal.rolloff, signal.sps)?, spec.launch_power_dbm())?;
    if spec.wdm_neighbors().is_empty() {
        return Ok(tx);
    }
    let mut channels = vec![(tx, 0.0)];
    for (n, seed) in spec.wdm_neighbors().iter().zip(&seeds.neighbors) {
        let f = generate_symbols(signal.symbols_per_block, signal.pol_count, signal.baud_hz, *seed)?;
        let w = set_average_power(&shape_pulse(&f, signal.rolloff, signal.sps)?, n.power_dbm)?;
        channels.push((w, n.center_offset_hz));
    }
    wdm_multiplex(&channels)
}

/// Transmit and propagate one block.
pub fn capture_block(
    spec: &LinkSpec,
    plan: &PropagationPlan,
    signal: &SignalConfig,
    ssfm: &SsfmConfig,
    root_seed: u64,
    index: usize,
) -> Result<CapturedBlock> {
    let seeds = BlockSeeds::derive(root_seed, index, spec);
    let frame = transmitted_frame(signal, &seeds)?;
    let tx = launch_field(spec, signal, &frame, &seeds)?;
    let cfg = SsfmConfig {
        noise_bandwidth_hz: Some(signal.baud_hz),
        ..ssfm.clone()
    };
    let mut field = propagate(&tx, plan, &cfg, seeds.noise)?;
    if !spec.wdm_neighbors().is_empty() {
        field = channel_select(&field, 0.0, (1.0 + signal.rolloff) * signal.baud_hz)?;
    }
    if signal.sps != RX_SPS {
        field = resample(&field, signal.symbols_per_block * RX_SPS)?;
    }
    Ok(CapturedBlock { frame, field, seeds })
}

/// Transmit, propagate and receive one block.
pub fn simulate_block(
    spec: &LinkSpec,
    plan: &PropagationPlan,
    signal: &SignalConfig,
    ssfm: &SsfmConfig,
    rx: &ReceiverConfig,
    root_seed: u64,
    index: usize,
) -> Result<(RxOutput, BlockSeeds)> {
    let c = capture_block(spec, plan, signal, ssfm, root_seed, index)?;
    let out = receive(&c.field, plan, Some(&c.frame), rx)?;
    Ok((out, c.seeds))
}
