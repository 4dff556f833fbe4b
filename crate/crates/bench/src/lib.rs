//! Shared fixtures for the kernel benchmarks.

use fibermon_core::link::{compile, FiberSpan, LinkSpec, NoiseMode, PropagationPlan};
use fibermon_core::pipeline::{simulate_block, SignalConfig};
use fibermon_core::receiver::RxOutput;
use fibermon_core::ssfm::SsfmConfig;
use fibermon_core::waveform::{generate_symbols, set_average_power, shape_pulse, ComplexWaveform};

pub fn signal(symbols: usize, pol_count: usize) -> SignalConfig {
    SignalConfig {
        baud_hz: 68e9,
        pol_count,
        rolloff: 0.1,
        sps: 2,
        symbols_per_block: symbols,
        blocks: 1,
    }
}

/// Shaped launch field at 0 dBm.
pub fn launch_field(s: &SignalConfig) -> ComplexWaveform {
    let frame = generate_symbols(s.symbols_per_block, s.pol_count, s.baud_hz, 7).expect("valid frame");
    set_average_power(&shape_pulse(&frame, s.rolloff, s.sps).expect("valid shaping"), 0.0).expect("nonzero field")
}

/// Amplified 80 km SSMF chain.
pub fn chain(spans: usize) -> (LinkSpec, PropagationPlan) {
    let spec = LinkSpec::uniform_chain(FiberSpan::ssmf(80.0), spans, 0.0, NoiseMode::SetSnrDb(20.0)).expect("valid chain");
    let plan = compile(&spec).expect("compiles");
    (spec, plan)
}

/// One received block over the given chain.
pub fn received(s: &SignalConfig, spec: &LinkSpec, plan: &PropagationPlan) -> RxOutput {
    simulate_block(spec, plan, s, &SsfmConfig::with_step(4.0), &s.receiver(), 3, 0)
        .expect("block simulates")
        .0
}
