// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod error;
pub mod gosnr;
pub mod link;
pub mod pipeline;
pub mod preset;
pub mod receiver;
pub mod rng;
pub mod scenario;
pub mod spectral;
pub mod ssfm;
pub mod svg;
pub mod units;
pub mod waveform;

pub use error::{Error, Result};
pub use link::{compile, cumulative_beta2, LinkSpec, PropagationPlan};
pub use ssfm::{propagate, SsfmConfig};
pub use waveform::{ComplexWaveform, SymbolFrame};
