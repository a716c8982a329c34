//! `cmavm` command-line runner.
//!
//! On failure the process exits with status 1 and prints one JSON object on
//! stderr: `{"error": {"kind": ..., "message": ..., "frequency_hz"?: ..., "stage"?: ...}}`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use cmavm::acoustics::bessel_null_frequencies;
use cmavm::compare::{compare_runs, Comparison};
use cmavm::geometry::{aliasing_cutoff, MicKind, RingSpec};
use cmavm::io::{
    load_config, read_impulse_responses, write_transfer_functions, ExperimentConfig, IoError,
};
use cmavm::runner::{run, RunError, TrainingCache};
use cmavm::scenario::Scenario;

#[derive(Parser)]
#[command(name = "cmavm", version, about = "Circular-harmonic beamforming with virtual microphones")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one or more scenarios and write metrics.csv, beampattern.csv and run.json.
    Run(RunArgs),
    /// Per-frequency DI/WNG deltas (b − a) and null detection for two run directories.
    Compare {
        run_a: PathBuf,
        run_b: PathBuf,
        /// Print the full comparison as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Frequencies where J_n(kr) vanishes on a ring of the given radius.
    Nulls {
        #[arg(long, default_value_t = 0.12)]
        radius: f64,
        #[arg(long, default_value_t = 4000.0)]
        f_max: f64,
        #[arg(long, default_value_t = 10)]
        max_order: u32,
        #[arg(long, default_value_t = 340.0)]
        speed_of_sound: f64,
    },
    /// Spatial-aliasing cutoff of a uniform ring.
    Cutoff {
        #[arg(long, default_value_t = 0.12)]
        radius: f64,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 340.0)]
        speed_of_sound: f64,
    },
    /// Convert impulse responses (JSON) to a transfer-function table (CSV).
    Ir2tf {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Comma-separated frequencies in Hz.
        #[arg(long, value_delimiter = ',', required = true)]
        frequencies: Vec<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario name(s), comma-separated: cma30, ccma30, cmavm30, cma10, ccma10,
    /// cmavm10, cmavm-i, cmavm-ii, cmavm-iii. Overrides the config's scenario.
    #[arg(long, value_delimiter = ',')]
    scenario: Vec<String>,
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Evaluate only these frequencies (Hz, comma-separated).
    #[arg(long, value_delimiter = ',', conflicts_with = "nulls")]
    frequencies: Option<Vec<f64>>,
    /// Evaluate only the predicted Bessel-null frequencies of the outer physical ring
    /// (rounded to 1 Hz) up to the grid's stop frequency.
    #[arg(long)]
    nulls: bool,
    /// Override the AINN seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the AINN epoch cap.
    #[arg(long)]
    max_epochs: Option<usize>,
    /// Output directory; each scenario writes into `<output>/<scenario>`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Exact constraints (δ = 0); singular systems become errors.
    #[arg(long)]
    strict_delta: bool,
    /// Skip per-source-angle training for virtual scenarios (DI/WNG only).
    #[arg(long)]
    no_virtual_pattern: bool,
    /// Also write trained models under `models/`.
    #[arg(long)]
    save_models: bool,
}

struct CliError {
    kind: &'static str,
    message: String,
    extra: Value,
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let extra = match &e {
            IoError::Config { key, .. } => json!({ "key": key }),
            _ => json!({}),
        };
        CliError {
            kind: "io",
            message: e.to_string(),
            extra,
        }
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Io(e) => e.into(),
            RunError::AtFrequency { frequency, source } => CliError {
                kind: "frequency",
                message: source.to_string(),
                extra: json!({ "frequency_hz": frequency, "stage": source.stage() }),
            },
            RunError::GridMismatch(m) => CliError {
                kind: "grid_mismatch",
                message: m,
                extra: json!({}),
            },
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        kind: "usage",
        message: message.into(),
        extra: json!({}),
    }
}

fn configs_for(args: &RunArgs) -> Result<Vec<ExperimentConfig>, CliError> {
    let base = match &args.config {
        Some(path) => Some(load_config(path)?),
        None => None,
    };
    let scenarios: Vec<Scenario> = args
        .scenario
        .iter()
        .map(|s| s.parse::<Scenario>().map_err(|e| usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    let mut configs = match (base, scenarios.is_empty()) {
        (None, true) => return Err(usage("need --scenario or --config")),
        (Some(base), true) => vec![base],
        (base, false) => scenarios
            .into_iter()
            .map(|s| {
                let mut c = base.clone().unwrap_or_else(|| ExperimentConfig::for_scenario(s));
                if c.scenario != s {
                    c.scenario = s;
                    c.layout = None;
                }
                c
            })
            .collect(),
    };
    let multiple = configs.len() > 1 || !args.scenario.is_empty();
    for c in &mut configs {
        if let Some(seed) = args.seed {
            c.ainn.rng_seed = seed;
        }
        if let Some(e) = args.max_epochs {
            c.ainn.max_epochs = e;
        }
        if args.strict_delta {
            c.strict_delta = true;
        }
        if args.no_virtual_pattern {
            c.virtual_pattern = false;
        }
        if let Some(f) = &args.frequencies {
            c.frequencies = Some(f.clone());
        }
        if args.nulls {
            let layout = c.array_layout()?;
            let radius = layout
                .rings()
                .iter()
                .filter(|r| r.kind() == MicKind::Physical)
                .map(RingSpec::radius)
                .fold(0.0, f64::max);
            let nulls = bessel_null_frequencies(radius, c.speed_of_sound, c.frequency_grid.stop, 20)
                .map_err(|e| usage(e.to_string()))?;
            let mut f: Vec<f64> = nulls.iter().map(|n| n.frequency.round()).filter(|f| *f >= c.frequency_grid.start).collect();
            f.dedup();
            if f.is_empty() {
                return Err(usage("no Bessel nulls inside the frequency grid"));
            }
            c.frequencies = Some(f);
        }
        let root = args.output.clone().unwrap_or_else(|| c.output_dir.clone());
        c.output_dir = if multiple { root.join(c.scenario.name()) } else { root };
        c.validate()?;
    }
    Ok(configs)
}

fn run_command(args: &RunArgs) -> Result<Value, CliError> {
    let configs = configs_for(args)?;
    let cache = TrainingCache::new();
    let mut runs = Vec::new();
    for c in &configs {
        let out = run(c, &cache, args.save_models)?;
        runs.push(json!({
            "scenario": c.scenario.name(),
            "output_dir": c.output_dir.display().to_string(),
            "frequencies": out.results.len(),
        }));
    }
    Ok(json!({ "runs": runs }))
}

fn print_comparison(c: &Comparison) {
    println!("frequency_hz,di_delta_db,wng_delta_db");
    for d in &c.deltas {
        println!("{},{},{}", d.frequency_hz, d.di_delta_db, d.wng_delta_db);
    }
    let list = |n: &[cmavm::compare::Null]| n.iter().map(|x| format!("{}", x.frequency_hz)).collect::<Vec<_>>().join(" ");
    println!("# DI nulls a: {}", list(&c.di_nulls_a));
    println!("# DI nulls b: {}", list(&c.di_nulls_b));
    println!("# WNG nulls a: {}", list(&c.wng_nulls_a));
    println!("# WNG nulls b: {}", list(&c.wng_nulls_b));
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let summary = run_command(&args)?;
            println!("{summary}");
        }
        Command::Compare { run_a, run_b, json } => {
            let c = compare_runs(&run_a, &run_b)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&c).expect("serializable comparison"));
            } else {
                print_comparison(&c);
            }
        }
        Command::Nulls {
            radius,
            f_max,
            max_order,
            speed_of_sound,
        } => {
            let nulls = bessel_null_frequencies(radius, speed_of_sound, f_max, max_order).map_err(|e| usage(e.to_string()))?;
            println!("order,zero,frequency_hz");
            for n in nulls {
                println!("{},{},{}", n.order, n.zero, n.frequency);
            }
        }
        Command::Cutoff {
            radius,
            count,
            speed_of_sound,
        } => {
            let ring = RingSpec::physical(radius, count).map_err(|e| usage(e.to_string()))?;
            let f = aliasing_cutoff(&ring, speed_of_sound).map_err(|e| usage(e.to_string()))?;
            println!("{f}");
        }
        Command::Ir2tf {
            input,
            output,
            frequencies,
        } => {
            let irs = read_impulse_responses(&input)?;
            let table = cmavm::io::ir_to_transfer_function(&irs, &frequencies)?;
            write_transfer_functions(&table, &output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut error = json!({ "kind": e.kind, "message": e.message });
            if let (Value::Object(map), Value::Object(extra)) = (&mut error, e.extra) {
                map.extend(extra);
            }
            eprintln!("{}", json!({ "error": error }));
            ExitCode::FAILURE
        }
    }
}
