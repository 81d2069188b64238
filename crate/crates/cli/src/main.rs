//! `compass`: build codes, sample shots, decode them and run sweeps.
//!
//! Exit codes: 0 on success, 1 when an experiment fails, 2 on configuration
//! or usage errors. `COMPASS_WORKERS` sets the worker count.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use compass_core::circuit::Basis;
use compass_core::code::{build_code, describe, Deformation};
use compass_core::decoder::{Cell, CellSpec, DecoderKind, NoiseModel};
use compass_core::dem::{decompose_hyperedges, write_decomposed, write_dem};
use compass_core::experiment::{run_experiment, run_gap, ExperimentConfig};
use compass_core::noise::format_eta;
use compass_core::sim::{read_shots, write_shots};
use compass_core::stats::{estimate_rate, PointLabel};
use compass_core::Error;
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "compass", version, about = "Compass-code memory experiments with correlated matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Code construction and decoding-graph inspection.
    #[command(subcommand)]
    Code(CodeCommand),
    /// Sample detection events into a shot file.
    Sample(SampleArgs),
    /// Decode a shot file and report the logical error rate.
    Decode(DecodeArgs),
    /// Sweep distances and error rates, fit thresholds.
    Threshold(SweepArgs),
    /// Per-shot complementary gaps at one distance and error rate.
    Gap(SweepArgs),
}

#[derive(Subcommand)]
enum CodeCommand {
    /// Print stabilizers, logicals and the Hadamard mask as JSON.
    Describe(CodeArgs),
    /// Print the detector error model in text form.
    Dem(DemArgs),
}

#[derive(Args, Clone)]
struct CodeArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    ell: usize,
    #[arg(long, default_value = "css")]
    deformation: String,
}

#[derive(Args, Clone)]
struct SetupArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// `code_capacity` or `hbd`.
    #[arg(long, default_value = "hbd")]
    noise: String,
    #[arg(long, default_value = "z")]
    basis: String,
    /// Syndrome rounds (defaults to d).
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    p: f64,
    /// Bias; `inf` for pure dephasing.
    #[arg(long, default_value = "1")]
    eta: String,
}

#[derive(Args)]
struct DemArgs {
    #[command(flatten)]
    setup: SetupArgs,
    /// Print hyperedges split into graph edges.
    #[arg(long)]
    decomposed: bool,
    /// Also write the matching graph in DOT format.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    setup: SetupArgs,
    #[arg(long)]
    shots: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the detector error model.
    #[arg(long)]
    dem_out: Option<PathBuf>,
}

#[derive(Args)]
struct DecodeArgs {
    /// Shot file written by `sample`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "mwpm")]
    decoder: String,
    /// Write one prediction mask per shot.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the matching graph in DOT format.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    deformation: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<String>>,
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    decoder: Option<Vec<String>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    no_plots: bool,
}

fn config_err(path: &str, e: impl ToString) -> Error {
    Error::config(path, e.to_string())
}

impl SetupArgs {
    fn spec(&self) -> Result<CellSpec, Error> {
        let eta = compass_core::noise::parse_eta(&self.eta).map_err(|e| config_err("eta", e))?;
        let deformation: Deformation = self.code.deformation.parse()?;
        let noise: NoiseModel = self.noise.parse().map_err(|e: String| config_err("noise", e))?;
        let basis: Basis = self.basis.parse().map_err(|e: String| config_err("basis", e))?;
        // Reuse the sweep validation for a single cell.
        let cfg = ExperimentConfig {
            d: vec![self.code.d],
            ell: self.code.ell,
            deformation,
            noise,
            p: vec![self.p],
            eta: vec![eta],
            basis,
            rounds: self.rounds,
            shots: 1,
            seed: 0,
            decoders: vec![DecoderKind::Mwpm],
            output: None,
            fit_window: 0.3,
            bootstrap: 0,
            plots: false,
        };
        cfg.validate()?;
        cfg.cell_spec(self.code.d, self.p, eta)
    }
}

impl SweepArgs {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| config_err(&path.display().to_string(), e))?;
                match serde_json::from_str::<Value>(&text).map_err(|e| config_err(&path.display().to_string(), e))? {
                    Value::Object(m) => m,
                    _ => return Err(config_err(&path.display().to_string(), "config must be a JSON object")),
                }
            }
            None => Map::new(),
        };
        let mut set = |key: &str, v: Value| {
            map.insert(key.to_string(), v);
        };
        if let Some(v) = &self.d {
            set("d", json!(v));
        }
        if let Some(v) = self.ell {
            set("ell", json!(v));
        }
        if let Some(v) = &self.deformation {
            let def: Deformation = v.parse()?;
            set("deformation", json!(def));
        }
        if let Some(v) = &self.noise {
            let model: NoiseModel = v.parse().map_err(|e: String| config_err("noise", e))?;
            set("noise", json!(model));
        }
        if let Some(v) = &self.p {
            set("p", json!(v));
        }
        if let Some(v) = &self.eta {
            let etas: Vec<Value> = v
                .iter()
                .map(|e| compass_core::noise::parse_eta(e).map(|x| if x.is_infinite() { json!("inf") } else { json!(x) }))
                .collect::<Result<_, _>>()
                .map_err(|e| config_err("eta", e))?;
            set("eta", Value::Array(etas));
        }
        if let Some(v) = &self.basis {
            let b: Basis = v.parse().map_err(|e: String| config_err("basis", e))?;
            set("basis", json!(b));
        }
        if let Some(v) = self.rounds {
            set("rounds", json!(v));
        }
        if let Some(v) = self.shots {
            set("shots", json!(v));
        }
        if let Some(v) = self.seed {
            set("seed", json!(v));
        }
        if let Some(v) = &self.decoder {
            let kinds: Vec<DecoderKind> = v.iter().map(|k| k.parse()).collect::<Result<_, String>>().map_err(|e| config_err("decoders", e))?;
            set("decoders", json!(kinds));
        }
        if let Some(v) = &self.out {
            set("output", json!(v));
        }
        if let Some(v) = self.bootstrap {
            set("bootstrap", json!(v));
        }
        if self.no_plots {
            set("plots", json!(false));
        }
        ExperimentConfig::from_json(&Value::Object(map).to_string())
    }
}

fn code_describe(args: &CodeArgs) -> Result<(), Error> {
    let deformation: Deformation = args.deformation.parse()?;
    let code = build_code(args.d, args.ell, deformation).map_err(|e| config_err("d/ell", e))?;
    println!("{}", serde_json::to_string_pretty(&describe(&code))?);
    Ok(())
}

fn code_dem(args: &DemArgs) -> Result<(), Error> {
    let cell = Cell::new(args.setup.spec()?)?;
    if args.decomposed {
        print!("{}", write_decomposed(&decompose_hyperedges(&cell.dem)?));
    } else {
        print!("{}", write_dem(&cell.dem));
    }
    if let Some(path) = &args.dot {
        std::fs::write(path, cell.graph.to_dot())?;
    }
    Ok(())
}

fn sample(args: &SampleArgs) -> Result<(), Error> {
    if args.shots == 0 {
        return Err(config_err("shots", "must be positive"));
    }
    let spec = args.setup.spec()?;
    let cell = Cell::new(spec)?;
    let batch = cell.sample(args.shots, args.seed);
    let file = File::create(&args.out)?;
    write_shots(BufWriter::new(file), &batch, args.seed, serde_json::to_value(spec)?)?;
    if let Some(path) = &args.dem_out {
        std::fs::write(path, write_dem(&cell.dem))?;
    }
    eprintln!(
        "wrote {} shots ({} detectors, {} observables) to {}; digest {}",
        batch.shots(),
        batch.num_detectors(),
        batch.num_observables(),
        args.out.display(),
        batch.digest()
    );
    Ok(())
}

fn decode(args: &DecodeArgs) -> Result<(), Error> {
    let kind: DecoderKind = args.decoder.parse().map_err(|e: String| config_err("decoder", e))?;
    let (header, batch) = read_shots(BufReader::new(File::open(&args.input).map_err(|e| config_err("in", e))?))?;
    let spec: CellSpec = serde_json::from_value(header.config.clone()).map_err(|e| config_err("in", format!("shot file header: {e}")))?;
    let cell = Cell::new(spec)?;
    if !cell.supports(kind) {
        return Err(config_err("decoder", format!("{kind} needs an undeformed code under code_capacity noise")));
    }
    if batch.num_detectors() != cell.dem.num_detectors {
        return Err(Error::Parse("shot file does not match its recorded setup".into()));
    }
    if let Some(path) = &args.dot {
        std::fs::write(path, cell.graph.to_dot())?;
    }
    let predicted = cell.predict_batch(kind, &batch)?;
    let truth: Vec<u64> = (0..batch.shots()).map(|s| batch.observable_mask(s)).collect();
    let label = PointLabel { d: spec.d, ell: spec.ell, deformation: spec.deformation, eta: spec.params.eta, p: spec.params.p, decoder: kind.name().into() };
    let rate = estimate_rate(label, &predicted, &truth)?;
    if let Some(path) = &args.out {
        let mut w = BufWriter::new(File::create(path)?);
        for p in &predicted {
            writeln!(w, "{p}")?;
        }
        w.flush()?;
    }
    println!("{}", serde_json::to_string_pretty(&rate)?);
    Ok(())
}

fn threshold(args: &SweepArgs) -> Result<(), Error> {
    let cfg = args.config()?;
    let res = run_experiment(&cfg)?;
    for f in &res.fits {
        match &f.fit {
            Some(fit) => println!(
                "eta={} {}: p_th = {:.5} [{:.5}, {:.5}], nu = {:.3}",
                format_eta(f.eta),
                f.decoder,
                fit.p_th,
                fit.p_th_ci.0,
                fit.p_th_ci.1,
                fit.nu
            ),
            None => println!("eta={} {}: no fit ({})", format_eta(f.eta), f.decoder, f.error.as_deref().unwrap_or("")),
        }
    }
    for g in &res.gains {
        let rel = g.gain.relative_gain.map_or("n/a".to_string(), |r| format!("{:.1}%", 100.0 * r));
        println!("eta={} {} vs {}: delta = {:+.5} +- {:.5}, relative {rel}", format_eta(g.eta), g.decoder, g.baseline, g.gain.delta, g.gain.delta_uncertainty);
    }
    eprintln!("results in {}", cfg.output.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
    Ok(())
}

fn gap(args: &SweepArgs) -> Result<(), Error> {
    let cfg = args.config()?;
    for s in run_gap(&cfg)? {
        println!(
            "eta={} {}: mean signed gap {:.3} +- {:.3} ({:.3} dB), failures {} / {}, negative gaps {}",
            format_eta(s.eta),
            s.decoder,
            s.mean_signed_gap,
            s.sem_signed_gap,
            s.mean_gap_db,
            s.failures,
            s.shots,
            s.negative_gaps
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = compass_core::exec::workers_from_env() {
        compass_core::exec::configure_workers(w);
    }
    let result = match &cli.command {
        Command::Code(CodeCommand::Describe(a)) => code_describe(a),
        Command::Code(CodeCommand::Dem(a)) => code_dem(a),
        Command::Sample(a) => sample(a),
        Command::Decode(a) => decode(a),
        Command::Threshold(a) => threshold(a),
        Command::Gap(a) => gap(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_config_error() => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
