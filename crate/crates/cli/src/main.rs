use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use rocketlite::io::{
    emit_golden_vectors, export_static_arrays, footprint, load_bundle, replay_vectors, save_bundle, ModelBundle,
};
use rocketlite::pipeline::{self, RunConfig, ScanGrid, SCAN_CSV_HEADER};
use rocketlite::signal::synth::SynthGenerator;
use rocketlite::signal::{resample, write_recording_csv, RecordingMeta};
use rocketlite::sim::{
    battery_life, parse_scenario, render_scenario, simulate, write_trace_csv, EnergyProfile, RenderSettings,
    SimSettings,
};
use rocketlite::transform::Window;
use rocketlite::{Error, Result};

#[derive(Parser)]
#[command(name = "rocketlite", version, about = "MiniRocket training, quantization and device simulation")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print a machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Output path; its meaning depends on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic corpus as recording CSVs with JSON sidecars.
    GenData,
    /// Train a float model and save it as a bundle.
    Train,
    /// Calibrate and attach the integer model to a bundle.
    Quantize { bundle: PathBuf },
    /// Score a bundle on the held-out test windows.
    Eval { bundle: PathBuf },
    /// Emit the quantized model as a C header.
    Export {
        bundle: PathBuf,
        /// Also write golden test vectors to this path.
        #[arg(long)]
        vectors: Option<PathBuf>,
        /// Number of golden vector cases.
        #[arg(long, default_value_t = 100)]
        vector_count: usize,
    },
    /// Simulate the device's duty cycle and energy use.
    Simulate {
        /// Scenario JSON; without one the device sees no motion.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Model to run on wake-ups.
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Simulated time in seconds.
        #[arg(long, default_value_t = 3600.0)]
        duration: f64,
        /// Battery capacity for a lifetime estimate.
        #[arg(long)]
        capacity_mah: Option<f64>,
        /// Total usage hours over the battery's life.
        #[arg(long, default_value_t = 0.0)]
        usage_hours: f64,
    },
    /// Train and score one quantized model per grid point.
    Hyperscan {
        #[arg(long, value_delimiter = ',', default_value = "10,50,100,200,400")]
        rates: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "80")]
        windows: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "84")]
        features: Vec<usize>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn out_or(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn split_for(config: &RunConfig) -> Result<rocketlite::signal::DatasetSplit> {
    let corpus = pipeline::load_corpus(config, &[config.sampling_rate])?.remove(0);
    pipeline::prepare_split(config, &corpus)
}

fn report(common: &Common, value: Value, text: impl FnOnce() -> String) {
    if common.json {
        println!("{value}");
    } else {
        println!("{}", text());
    }
}

fn check_bundle_matches(bundle: &ModelBundle, config: &RunConfig) -> Result<()> {
    if bundle.kernels.window_length() != config.window_len {
        return Err(Error::Config(format!(
            "bundle window length {} differs from config window_len {}",
            bundle.kernels.window_length(),
            config.window_len
        )));
    }
    Ok(())
}

fn gen_data(common: &Common, config: &RunConfig) -> Result<()> {
    let dir = out_or(common, "data");
    std::fs::create_dir_all(&dir)?;
    let mut files = 0;
    for rec in SynthGenerator::new(config.synth.clone(), config.seed) {
        let rec = resample(&rec, config.sampling_rate)?;
        let stem = dir.join(format!("rec{:04}", rec.id));
        let meta = RecordingMeta {
            source_rate_hz: rec.rate_hz,
            ..rec.meta.clone()
        };
        std::fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&meta).unwrap())?;
        write_recording_csv(&rec, BufWriter::new(File::create(stem.with_extension("csv"))?))?;
        files += 1;
    }
    report(common, json!({"recordings": files, "dir": dir}), || {
        format!("wrote {files} recordings at {} Hz to {}", config.sampling_rate, dir.display())
    });
    Ok(())
}

fn train(common: &Common, config: &RunConfig) -> Result<()> {
    let split = split_for(config)?;
    for w in &split.warnings {
        eprintln!("warning: {w}");
    }
    let (bundle, r) = pipeline::train(config, &split)?;
    let path = out_or(common, "model.rklm");
    save_bundle(&bundle, &path)?;
    report(
        common,
        json!({
            "bundle": path,
            "lambda": r.lambda,
            "train_windows": split.train.len(),
            "validation": {"accuracy": r.validation.accuracy, "f1": r.validation.f1},
        }),
        || {
            format!(
                "trained on {} windows (lambda {})\nvalidation accuracy {:.4}  F1 {:.4}\nsaved {}",
                split.train.len(),
                r.lambda,
                r.validation.accuracy,
                r.validation.f1,
                path.display()
            )
        },
    );
    Ok(())
}

fn quantize(common: &Common, config: &RunConfig, bundle_path: &Path) -> Result<()> {
    let mut bundle = load_bundle(bundle_path)?;
    pipeline::quantize(&mut bundle, config.input_clamp_mg, config.bit_width)?;
    let path = common.out.clone().unwrap_or_else(|| bundle_path.to_path_buf());
    save_bundle(&bundle, &path)?;
    let c = bundle.calibration().expect("just quantized");
    report(
        common,
        json!({"bundle": path, "bit_width": c.bit_width, "s1": c.s1, "s2": c.s2, "input_clamp_mg": c.input_clamp}),
        || format!("S1 = {}  S2 = {}  ({}-bit)\nsaved {}", c.s1, c.s2, c.bit_width, path.display()),
    );
    Ok(())
}

fn eval(common: &Common, config: &RunConfig, bundle_path: &Path) -> Result<()> {
    let bundle = load_bundle(bundle_path)?;
    check_bundle_matches(&bundle, config)?;
    let split = split_for(config)?;
    let windows = if split.test.is_empty() { &split.validation } else { &split.test };
    let r = pipeline::evaluate(&bundle, windows)?;
    report(common, serde_json::to_value(&r).unwrap(), || {
        let mut s = format!(
            "{} windows\nfloat      accuracy {:.4}  F1 {:.4}",
            r.float.windows, r.float.accuracy, r.float.f1
        );
        if let (Some(q), Some(a)) = (r.quantized, r.agreement) {
            s += &format!(
                "\nquantized  accuracy {:.4}  F1 {:.4}\nagreement  {:.4} ({} disagreements)",
                q.accuracy, q.f1, a, r.disagreements
            );
        }
        s
    });
    Ok(())
}

/// Seeded windows within the input clamp: noise, DC and impulses.
fn vector_windows(bundle: &ModelBundle, count: usize, seed: u64) -> Vec<Window> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (len, channels) = (bundle.kernels.window_length(), bundle.kernels.channels());
    let clamp = bundle.calibration().map_or(16_000.0, |c| c.input_clamp as f32);
    (0..count)
        .map(|i| {
            let samples = (0..channels)
                .map(|_| match i % 4 {
                    0 if i == 0 => vec![0.0; len],
                    1 => vec![rng.gen_range(-clamp..clamp); len],
                    2 => {
                        let mut x = vec![0.0; len];
                        x[rng.gen_range(0..len)] = clamp;
                        x
                    }
                    _ => (0..len).map(|_| rng.gen_range(-clamp..clamp)).collect(),
                })
                .collect();
            Window::new(samples, 0.0)
        })
        .collect()
}

fn export(common: &Common, config: &RunConfig, bundle_path: &Path, vectors: Option<&Path>, count: usize) -> Result<()> {
    let bundle = load_bundle(bundle_path)?;
    let header = export_static_arrays(&bundle)?;
    let q = bundle.quantized.as_ref().expect("export checked quantization");
    let fp = footprint(q)?;
    match &common.out {
        Some(path) => std::fs::write(path, &header)?,
        None if !common.json => print!("{header}"),
        None => {}
    }
    let mut replay = None;
    if let Some(path) = vectors {
        let v = emit_golden_vectors(&bundle, &vector_windows(&bundle, count, config.seed))?;
        std::fs::write(path, v.to_bytes()?)?;
        replay = Some(replay_vectors(&v, q)?);
    }
    let summary = json!({
        "header": common.out,
        "parameter_bytes": fp.parameter_bytes,
        "working_bytes": fp.working_bytes,
        "vectors": vectors,
        "vector_cases": replay.as_ref().map(|r| r.cases),
        "vector_replay_exact": replay.as_ref().map(|r| r.exact),
    });
    if common.json {
        println!("{summary}");
    } else if common.out.is_some() {
        println!(
            "parameters {} bytes, working buffers {} bytes",
            fp.parameter_bytes, fp.working_bytes
        );
        if let Some(r) = replay {
            println!("golden vectors: {}/{} replay bit-exact", r.exact, r.cases);
        }
    }
    Ok(())
}

fn simulate_cmd(
    common: &Common,
    config: &RunConfig,
    scenario: Option<&Path>,
    bundle: Option<&Path>,
    duration: f64,
    battery: Option<(f64, f64)>,
) -> Result<()> {
    let segments = match scenario {
        Some(path) => parse_scenario(&std::fs::read_to_string(path)?)?,
        None => Vec::new(),
    };
    let bundle = bundle.map(load_bundle).transpose()?;
    let settings = RenderSettings {
        source_rate_hz: config.synth.source_rate_hz,
        rate_hz: config.sampling_rate,
        seed: config.seed,
    };
    let motion = render_scenario(&segments, duration, &settings)?;
    let profile = EnergyProfile::default();
    let trace = simulate(&motion, bundle.as_ref(), &profile, &SimSettings::default(), duration)?;
    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &common.out {
        write_trace_csv(&trace, BufWriter::new(File::create(path)?))?;
    }
    let estimate = battery
        .map(|(capacity, hours)| battery_life(&profile, capacity, hours))
        .transpose()?;
    let inferences = trace.classifications.len();
    report(
        common,
        json!({
            "duration_s": duration,
            "average_power_uW": trace.average_power_uw,
            "total_energy_uJ": trace.total_energy_uj,
            "inferences": inferences,
            "runtime_s": trace.runtime_s,
            "battery": estimate,
        }),
        || {
            let mut s = format!(
                "{duration} s simulated\naverage power {:.3} uW\ntotal energy {:.1} uJ\ninferences {inferences}\nestimated usage {} s",
                trace.average_power_uw, trace.total_energy_uj, trace.runtime_s
            );
            if let Some(e) = &estimate {
                s += &format!("\nbattery life {:.2} years", e.years);
            }
            s
        },
    );
    Ok(())
}

fn hyperscan(common: &Common, config: &RunConfig, grid: ScanGrid) -> Result<()> {
    let rows = pipeline::hyperscan(config, &grid)?;
    let mut csv = String::from(SCAN_CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv += &r.csv_line();
        csv.push('\n');
    }
    if let Some(path) = &common.out {
        std::fs::write(path, &csv)?;
    }
    if common.json {
        println!("{}", serde_json::to_string(&rows).unwrap());
    } else {
        print!("{csv}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let config = load_config(common)?;
    match cli.command {
        Command::GenData => gen_data(common, &config),
        Command::Train => train(common, &config),
        Command::Quantize { bundle } => quantize(common, &config, &bundle),
        Command::Eval { bundle } => eval(common, &config, &bundle),
        Command::Export {
            bundle,
            vectors,
            vector_count,
        } => export(common, &config, &bundle, vectors.as_deref(), vector_count),
        Command::Simulate {
            scenario,
            bundle,
            duration,
            capacity_mah,
            usage_hours,
        } => simulate_cmd(
            common,
            &config,
            scenario.as_deref(),
            bundle.as_deref(),
            duration,
            capacity_mah.map(|c| (c, usage_hours)),
        ),
        Command::Hyperscan {
            rates,
            windows,
            features,
        } => hyperscan(
            common,
            &config,
            ScanGrid {
                sampling_rates: rates,
                window_lens: windows,
                feature_counts: features,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {
            let _ = std::io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
