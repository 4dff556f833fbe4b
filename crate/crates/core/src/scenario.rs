//! End-to-end scenarios: configuration, block fan-out, estimation and
//! in-memory artifacts. Writing the artifacts is left to the caller.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::correlation::{profiles, uniform_z_grid, Convention, CorrelationProfile, ProfileKind};
use crate::error::{invalid_config, Error, Result};
use crate::gosnr::{
    analytic_ase_osnr, effective_snr_from_rx, gosnr_from_profiles, window_estimate, GosnrConfig, GosnrProfile,
    OracleReading, Readout, ReferenceProfile, Validity, WindowEstimate,
};
use crate::link::{compile, LinkSpec, PropagationPlan};
use crate::pipeline::{capture_block, transmitted_frame, BlockSeeds, CapturedBlock, SignalConfig};
use crate::receiver::{receive, DecisionMode, RxOutput};
use crate::ssfm::SsfmConfig;
use crate::svg;
use crate::waveform::ComplexWaveform;

fn default_z_step() -> f64 {
    5.0
}
fn default_ceiling() -> f64 {
    40.0
}
fn default_floor() -> f64 {
    -10.0
}
fn default_filter() -> Option<f64> {
    Some(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default = "default_z_step")]
    pub z_step_km: f64,
    #[serde(default)]
    pub correlation_convention: Convention,
    #[serde(default = "default_ceiling")]
    pub ceiling_db: f64,
    #[serde(default = "default_floor")]
    pub floor_db: f64,
    #[serde(default)]
    pub readout: Readout,
    #[serde(default)]
    pub decision_mode: DecisionMode,
    #[serde(default = "default_filter")]
    pub filter_bandwidth_factor: Option<f64>,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            z_step_km: default_z_step(),
            correlation_convention: Convention::Real,
            ceiling_db: default_ceiling(),
            floor_db: default_floor(),
            readout: Readout::Gaussian,
            decision_mode: DecisionMode::Genie,
            filter_bandwidth_factor: default_filter(),
        }
    }
}

impl EstimatorConfig {
    pub fn gosnr(&self) -> GosnrConfig {
        GosnrConfig {
            ceiling_db: self.ceiling_db,
            floor_db: self.floor_db,
            readout: self.readout,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub link: LinkSpec,
    pub signal: SignalConfig,
    #[serde(default)]
    pub ssfm: SsfmConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<String>,
    /// Known departures from the reference setup, copied into the manifest.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deviations: Vec<String>,
}

impl ScenarioConfig {
    /// Parse JSON, reporting schema violations with the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::InvalidConfig(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        if !(self.estimator.z_step_km > 0.0) {
            return invalid_config("estimator.z_step_km must be positive");
        }
        if !(self.estimator.ceiling_db > self.estimator.floor_db) {
            return invalid_config("estimator.ceiling_db must exceed estimator.floor_db");
        }
        if !(self.ssfm.step_km > 0.0) {
            return invalid_config("ssfm.step_km must be positive");
        }
        compile(&self.link).map(|_| ())
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn z_grid(&self) -> Result<Vec<f64>> {
        uniform_z_grid(self.link.total_length_km(), self.estimator.z_step_km)
    }

    fn receiver(&self) -> crate::receiver::ReceiverConfig {
        let mut rx = self.signal.receiver();
        rx.mode = self.estimator.decision_mode;
        rx.filter_bandwidth_factor = self.estimator.filter_bandwidth_factor;
        rx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timings {
    pub simulate_s: f64,
    pub estimate_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub name: String,
    pub config_hash: String,
    pub root_seed: u64,
    pub block_seeds: Vec<BlockSeeds>,
    pub artifacts: Vec<String>,
    pub library_version: String,
    pub timings: Timings,
    pub deviations: Vec<String>,
    pub warnings: Vec<String>,
    pub flagged_points: usize,
    pub imag_leakage: [f64; 2],
    pub oracle: OracleReading,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Span-by-span window estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanEstimate {
    pub span: usize,
    #[serde(flatten)]
    pub window: WindowEstimate,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub ppe: CorrelationProfile,
    pub nppe: CorrelationProfile,
    pub gosnr: GosnrProfile,
    /// ASE-only reference, absent when the link has noise-figure amplifiers.
    pub reference: Option<ReferenceProfile>,
    pub oracle: OracleReading,
    pub spans: Vec<SpanEstimate>,
    pub manifest: RunManifest,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }
}

/// Propagate every block of the scenario and return the end-of-link captures.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Vec<CapturedBlock>> {
    cfg.validate()?;
    let plan = compile(&cfg.link)?;
    (0..cfg.signal.blocks)
        .into_par_iter()
        .map(|b| capture_block(&cfg.link, &plan, &cfg.signal, &cfg.ssfm, cfg.seed, b))
        .collect()
}

fn spans_csv(spans: &[SpanEstimate]) -> String {
    let mut s = String::from("span,z_start_km,z_end_km,ratio,ratio_std_error,gosnr_db,validity\n");
    for e in spans {
        let w = &e.window;
        s.push_str(&format!(
            "{},{},{},{:.9},{:.9},{:.6},{}\n",
            e.span,
            w.z_start_km,
            w.z_end_km,
            w.ratio,
            w.ratio_std_error,
            w.gosnr_db,
            w.validity.as_str()
        ));
    }
    s
}

fn oracle_csv(z_end: f64, o: &OracleReading) -> String {
    format!("z_km,osnr_db,includes\n{z_end},{:.6},ase+nli\n", o.gosnr_db)
}

/// Estimate profiles from captured end-of-link fields.
///
/// In genie mode the transmitted symbols are regenerated from the block seeds.
pub fn estimate(cfg: &ScenarioConfig, fields: &[(ComplexWaveform, BlockSeeds)], with_svg: bool) -> Result<RunOutput> {
    let mut out = estimate_timed(cfg, fields, 0.0, with_svg)?;
    finish(&mut out);
    Ok(out)
}

fn receive_all(
    cfg: &ScenarioConfig,
    plan: &PropagationPlan,
    fields: &[(ComplexWaveform, BlockSeeds)],
) -> Result<Vec<RxOutput>> {
    let rx_cfg = cfg.receiver();
    fields
        .par_iter()
        .map(|(field, seeds)| {
            let frame = transmitted_frame(&cfg.signal, seeds)?;
            receive(field, plan, Some(&frame), &rx_cfg)
        })
        .collect()
}

fn estimate_timed(
    cfg: &ScenarioConfig,
    fields: &[(ComplexWaveform, BlockSeeds)],
    simulate_s: f64,
    with_svg: bool,
) -> Result<RunOutput> {
    cfg.validate()?;
    if fields.is_empty() {
        return invalid_config("no blocks to estimate");
    }
    let t0 = Instant::now();
    let plan = compile(&cfg.link)?;
    let rx = receive_all(cfg, &plan, fields)?;
    let mut out = estimate_from_rx(cfg, &plan, &rx, with_svg)?;
    out.manifest.block_seeds = fields.iter().map(|f| f.1.clone()).collect();
    out.manifest.timings = Timings {
        simulate_s,
        estimate_s: t0.elapsed().as_secs_f64(),
    };
    Ok(out)
}

/// Profiles, gOSNR, references and artifacts from receiver outputs.
pub fn estimate_from_rx(cfg: &ScenarioConfig, plan: &PropagationPlan, rx: &[RxOutput], with_svg: bool) -> Result<RunOutput> {
    let z = cfg.z_grid()?;
    let mut prof = profiles(
        rx,
        &[ProfileKind::Ppe, ProfileKind::Nppe],
        plan,
        &z,
        cfg.estimator.correlation_convention,
    )?;
    let nppe = prof.pop().expect("two profiles");
    let ppe = prof.pop().expect("two profiles");
    let baud = cfg.signal.baud_hz;
    let gcfg = cfg.estimator.gosnr();
    let gosnr = gosnr_from_profiles(&ppe, &nppe, baud, &gcfg)?;
    let reference = match analytic_ase_osnr(&cfg.link, &z, baud, cfg.estimator.ceiling_db) {
        Ok(r) => Some(r),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let oracle = effective_snr_from_rx(rx, baud)?;
    let starts = plan.span_starts_km();
    let total = plan.total_length_km();
    let spans = starts
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let end = starts.get(k + 1).copied().unwrap_or(total);
            window_estimate(&ppe, &nppe, *s, end, baud, &gcfg).map(|window| SpanEstimate { span: k + 1, window })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut warnings: Vec<String> = rx.iter().flat_map(|r| r.warnings.iter().cloned()).collect();
    warnings.sort();
    warnings.dedup();

    let mut artifacts = vec![
        Artifact { name: "ppe.csv".into(), contents: ppe.to_csv().into_bytes() },
        Artifact { name: "nppe.csv".into(), contents: nppe.to_csv().into_bytes() },
        Artifact { name: "gosnr.csv".into(), contents: gosnr.to_csv().into_bytes() },
        Artifact { name: "spans.csv".into(), contents: spans_csv(&spans).into_bytes() },
        Artifact {
            name: "reference_effective.csv".into(),
            contents: oracle_csv(total, &oracle).into_bytes(),
        },
    ];
    if let Some(r) = &reference {
        artifacts.push(Artifact { name: "reference_ase.csv".into(), contents: r.to_csv().into_bytes() });
    }
    if with_svg {
        artifacts.push(Artifact {
            name: "gosnr.svg".into(),
            contents: svg::gosnr_plot(&cfg.name, &gosnr, reference.as_ref(), Some((total, oracle.gosnr_db))).into_bytes(),
        });
        artifacts.push(Artifact {
            name: "profiles.svg".into(),
            contents: svg::profile_plot(&cfg.name, &ppe, &nppe).into_bytes(),
        });
    }
    let mut names: Vec<String> = artifacts.iter().map(|a| a.name.clone()).collect();
    names.push("manifest.json".into());
    let manifest = RunManifest {
        name: cfg.name.clone(),
        config_hash: cfg.hash(),
        root_seed: cfg.seed,
        block_seeds: Vec::new(),
        artifacts: names,
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        timings: Timings { simulate_s: 0.0, estimate_s: 0.0 },
        deviations: cfg.deviations.clone(),
        warnings,
        flagged_points: gosnr.validity.iter().filter(|v| **v != Validity::Ok).count(),
        imag_leakage: [ppe.imag_leakage, nppe.imag_leakage],
        oracle: oracle.clone(),
    };
    Ok(RunOutput {
        ppe,
        nppe,
        gosnr,
        reference,
        oracle,
        spans,
        manifest,
        artifacts,
    })
}

/// Serialize the manifest and append it to the artifacts.
pub fn finish(out: &mut RunOutput) {
    let json = serde_json::to_string_pretty(&out.manifest).expect("manifest serializes");
    out.artifacts.retain(|a| a.name != "manifest.json");
    out.artifacts.push(Artifact {
        name: "manifest.json".into(),
        contents: json.into_bytes(),
    });
}

/// Simulate and estimate. Artifacts include the manifest.
pub fn run(cfg: &ScenarioConfig, with_svg: bool) -> Result<RunOutput> {
    let t0 = Instant::now();
    let captured = simulate(cfg)?;
    let simulate_s = t0.elapsed().as_secs_f64();
    let fields: Vec<_> = captured.into_iter().map(|c| (c.field, c.seeds)).collect();
    let mut out = estimate_timed(cfg, &fields, simulate_s, with_svg)?;
    finish(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{FiberSpan, NoiseMode};

    fn small() -> ScenarioConfig {
        ScenarioConfig {
            name: "small".into(),
            link: LinkSpec::uniform_chain(FiberSpan::ssmf(40.0), 2, 3.0, NoiseMode::SetSnrDb(18.0)).unwrap(),
            signal: SignalConfig {
                baud_hz: 68e9,
                pol_count: 1,
                rolloff: 0.1,
                sps: 2,
                symbols_per_block: 1 << 11,
                blocks: 2,
            },
            ssfm: SsfmConfig::with_step(4.0),
            estimator: EstimatorConfig {
                z_step_km: 10.0,
                ..EstimatorConfig::default()
            },
            seed: 5,
            outputs: None,
            deviations: vec!["tiny".into()],
        }
    }

    #[test]
    fn json_round_trip_and_hash() {
        let cfg = small();
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        let mut other = cfg.clone();
        other.seed = 6;
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn schema_errors_carry_paths() {
        let mut v: serde_json::Value = serde_json::from_str(&small().to_json()).unwrap();
        v["signal"]["pol_count"] = serde_json::json!("two");
        let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("signal.pol_count"), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(&small().to_json()).unwrap();
        v["estimator"]["bogus"] = serde_json::json!(1);
        let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("estimator"), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(&small().to_json()).unwrap();
        v["signal"]["symbols_per_block"] = serde_json::json!(1000);
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&small().to_json()).unwrap();
        v.as_object_mut().unwrap().remove("seed");
        let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn run_is_reproducible() {
        let a = run(&small(), true).unwrap();
        let b = run(&small(), true).unwrap();
        for name in ["ppe.csv", "nppe.csv", "gosnr.csv", "spans.csv", "reference_ase.csv", "gosnr.svg"] {
            assert_eq!(a.artifact(name).unwrap().contents, b.artifact(name).unwrap().contents, "{name}");
        }
        assert_eq!(a.manifest.block_seeds.len(), 2);
        assert_eq!(a.manifest.deviations, vec!["tiny".to_string()]);
        assert_eq!(a.spans.len(), 2);
        assert!(a.artifact("manifest.json").is_some());
        assert_eq!(a.ppe.z_grid_km, vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0]);
    }

    #[test]
    fn estimate_matches_run() {
        let cfg = small();
        let r = run(&cfg, false).unwrap();
        let fields: Vec<_> = simulate(&cfg).unwrap().into_iter().map(|c| (c.field, c.seeds)).collect();
        let e = estimate(&cfg, &fields, false).unwrap();
        assert_eq!(r.artifact("gosnr.csv"), e.artifact("gosnr.csv"));
    }
}
