use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use fibermon_core::pipeline::BlockSeeds;
use fibermon_core::preset::{describe, preset, PresetOptions, PRESETS};
use fibermon_core::scenario::{self, Artifact, RunOutput, ScenarioConfig};
use fibermon_core::waveform::{read_fpwv, write_fpwv};
use fibermon_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_FLAGGED: u8 = 4;

const CAPTURE_INDEX: &str = "capture.json";
const DEFAULT_OUT: &str = "fibermon-out";

/// Longitudinal gOSNR monitoring from simulated coherent receiver captures.
#[derive(Parser)]
#[command(name = "fibermon", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate, estimate and write every artifact.
    Run {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write SVG plots.
        #[arg(long)]
        svg: bool,
    },
    /// Propagate every block and write the end-of-link fields as FPWV files.
    Simulate {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate profiles from a directory written by `simulate`.
    Estimate {
        /// Capture directory.
        #[arg(long)]
        input: PathBuf,
        /// Config to use instead of the one stored with the capture.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
    /// Inspect the built-in scenarios.
    Preset {
        #[command(subcommand)]
        cmd: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    List,
    /// Print the scenario config as JSON.
    Show {
        name: String,
        #[command(flatten)]
        opts: PresetArgs,
    },
}

#[derive(Args)]
struct Source {
    /// Scenario config file (JSON).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    opts: PresetArgs,
}

#[derive(Args, Default)]
struct PresetArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    blocks: Option<usize>,
    /// Symbols per block (power of two).
    #[arg(long)]
    symbols: Option<usize>,
    /// Launch power in dBm.
    #[arg(long, allow_negative_numbers = true)]
    pin: Option<f64>,
    /// Set SNR of injections / amplifiers in dB.
    #[arg(long, allow_negative_numbers = true)]
    snr: Option<f64>,
    /// 1-based span receiving the single injection (fig2a, fig2b).
    #[arg(long)]
    inject_span: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    neighbor_dbm: Option<f64>,
    #[arg(long)]
    loss_db: Option<f64>,
}

impl PresetArgs {
    fn options(&self) -> PresetOptions {
        PresetOptions {
            launch_dbm: self.pin,
            set_snr_db: self.snr,
            injection_span: self.inject_span,
            neighbor_dbm: self.neighbor_dbm,
            loss_db: self.loss_db,
            blocks: self.blocks,
            symbols_per_block: self.symbols,
            seed: self.seed,
        }
    }

    fn preset_only(&self) -> bool {
        self.pin.is_some()
            || self.snr.is_some()
            || self.inject_span.is_some()
            || self.neighbor_dbm.is_some()
            || self.loss_db.is_some()
    }
}

/// Index written next to the FPWV files by `simulate`.
#[derive(Serialize, Deserialize)]
struct CaptureIndex {
    config: ScenarioConfig,
    blocks: Vec<CaptureEntry>,
}

#[derive(Serialize, Deserialize)]
struct CaptureEntry {
    file: String,
    seeds: BlockSeeds,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidArgument(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn resolve(src: &Source) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match (&src.config, &src.preset) {
        (Some(path), None) => {
            if src.opts.preset_only() {
                return Err(Failure::Config(
                    "--pin, --snr, --inject-span, --neighbor-dbm and --loss-db only apply to --preset".into(),
                ));
            }
            load_config(path)?
        }
        (None, Some(name)) => preset(name, &src.opts.options())?,
        _ => return Err(Failure::Config("pass either --config or --preset".into())),
    };
    if let Some(s) = src.opts.seed {
        cfg.seed = s;
    }
    if let Some(b) = src.opts.blocks {
        cfg.signal.blocks = b;
    }
    if let Some(n) = src.opts.symbols {
        cfg.signal.symbols_per_block = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(flag: &Option<PathBuf>, cfg: &ScenarioConfig) -> PathBuf {
    flag.clone()
        .or_else(|| cfg.outputs.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.contents).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

fn report(out: &RunOutput, dir: &Path) -> u8 {
    for s in &out.spans {
        println!(
            "span {:>2}  {:>6.1}-{:<6.1} km  gOSNR {:6.2} dB  {}",
            s.span,
            s.window.z_start_km,
            s.window.z_end_km,
            s.window.gosnr_db,
            s.window.validity.as_str()
        );
    }
    println!("end-of-link oracle gOSNR {:.2} dB", out.oracle.gosnr_db);
    for w in &out.manifest.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {} artifacts to {}", out.artifacts.len(), dir.display());
    if out.manifest.flagged_points > 0 {
        eprintln!("{} grid points flagged (see gosnr.csv)", out.manifest.flagged_points);
        EXIT_FLAGGED
    } else {
        0
    }
}

fn block_file(i: usize) -> String {
    format!("block_{i:04}.fpwv")
}

fn simulate(src: &Source, out: &Option<PathBuf>) -> Result<u8, Failure> {
    let cfg = resolve(src)?;
    let dir = out_dir(out, &cfg);
    let captured = scenario::simulate(&cfg)?;
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let mut blocks = Vec::with_capacity(captured.len());
    for (i, c) in captured.into_iter().enumerate() {
        let file = block_file(i);
        let path = dir.join(&file);
        let f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        write_fpwv(&c.field, BufWriter::new(f))?;
        blocks.push(CaptureEntry { file, seeds: c.seeds });
    }
    let index = CaptureIndex { config: cfg, blocks };
    let path = dir.join(CAPTURE_INDEX);
    let json = serde_json::to_string_pretty(&index).expect("capture index serializes");
    fs::write(&path, json).map_err(|e| io_err(&path, e))?;
    println!("wrote {} blocks to {}", index.blocks.len(), dir.display());
    Ok(0)
}

fn estimate(input: &Path, config: &Option<PathBuf>, out: &Option<PathBuf>, svg: bool) -> Result<u8, Failure> {
    let path = input.join(CAPTURE_INDEX);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let index: CaptureIndex =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let cfg = match config {
        Some(p) => load_config(p)?,
        None => index.config,
    };
    let mut fields = Vec::with_capacity(index.blocks.len());
    for b in index.blocks {
        let p = input.join(&b.file);
        let f = fs::File::open(&p).map_err(|e| io_err(&p, e))?;
        let w = read_fpwv(BufReader::new(f)).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
        fields.push((w, b.seeds));
    }
    let result = scenario::estimate(&cfg, &fields, svg)?;
    let dir = out_dir(out, &cfg);
    write_artifacts(&dir, &result.artifacts)?;
    Ok(report(&result, &dir))
}

/// Write to stdout, tolerating a closed pipe (`fibermon preset show x | head`).
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    match cli.cmd {
        Cmd::Run { src, out, svg } => {
            let cfg = resolve(&src)?;
            let result = scenario::run(&cfg, svg)?;
            let dir = out_dir(&out, &cfg);
            write_artifacts(&dir, &result.artifacts)?;
            Ok(report(&result, &dir))
        }
        Cmd::Simulate { src, out } => simulate(&src, &out),
        Cmd::Estimate { input, config, out, svg } => estimate(&input, &config, &out, svg),
        Cmd::Preset { cmd: PresetCmd::List } => {
            let mut text = String::new();
            for name in PRESETS {
                text.push_str(&format!("{name:<10} {}\n", describe(name).unwrap_or("")));
            }
            emit(&text);
            Ok(0)
        }
        Cmd::Preset {
            cmd: PresetCmd::Show { name, opts },
        } => {
            let cfg = preset(&name, &opts.options())?;
            emit(&(serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
