use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use secinfer::ckks::Preset;
use secinfer::harness::{
    self, emit_report, party::PartyArgs, ExperimentConfig, HarnessError, Mode, ReportFormat,
    TransportSpec,
};

#[derive(Parser)]
#[command(
    name = "bench",
    about = "Benchmark plain, FHE and GC private inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write a report.
    Run(RunArgs),
    #[command(hide = true)]
    Party {
        #[arg(long)]
        args: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// plain, fhe or gc; a comma-separated list runs several into one report.
    #[arg(long, value_delimiter = ',', required = true)]
    mode: Vec<Mode>,
    /// inproc or tcp:<host:port>.
    #[arg(long, default_value = "inproc")]
    transport: TransportSpec,
    /// paper or test.
    #[arg(long, default_value = "paper")]
    preset: Preset,
    /// Model JSON; defaults to the committed canonical model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// JSON array of 3-element vectors; defaults to the committed stress set.
    #[arg(long)]
    inputs: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    repeat: usize,
    /// FHE: consecutive inferences sharing one key set.
    #[arg(long, default_value_t = 1)]
    reuse_keys: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write per-figure CSV series next to the report.
    #[arg(long)]
    plot_data: bool,
    /// GC layer sweep over 1..=L layers.
    #[arg(long)]
    layers: Option<usize>,
    /// Inference count for the scaling sweep.
    #[arg(long)]
    inferences: Option<usize>,
}

fn run(args: RunArgs) -> Result<(), HarnessError> {
    let mut records = Vec::new();
    let mut sweeps = Vec::new();
    for &mode in &args.mode {
        let cfg = ExperimentConfig {
            mode,
            transport: args.transport.clone(),
            preset: args.preset,
            model_path: args.model.clone(),
            inputs_path: args.inputs.clone(),
            repetitions: args.repeat,
            reuse_keys: args.reuse_keys,
            layer_sweep: args.layers,
            inferences: args.inferences.unwrap_or(1),
            seed: args.seed,
            party_exe: None,
        };
        records.extend(harness::run_experiment(&cfg)?);
        let wants_sweep = args.layers.is_some() || args.inferences.is_some();
        if wants_sweep && mode != Mode::Plain {
            let layers = if mode == Mode::Gc {
                args.layers.unwrap_or(0)
            } else {
                0
            };
            sweeps.push(harness::run_scaling_sweep(&cfg, layers, cfg.inferences)?);
        }
    }
    let mut written = emit_report(
        &records,
        ReportFormat::from_path(&args.out),
        args.plot_data,
        &args.out,
    )?;
    if !sweeps.is_empty() {
        let stem = args
            .out
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("report");
        let path = args.out.with_file_name(format!("{stem}_scaling.json"));
        let text = serde_json::to_string_pretty(&sweeps)
            .map_err(|e| HarnessError::Report(e.to_string()))?;
        std::fs::write(&path, text)?;
        written.push(path);
    }
    let summary = serde_json::json!({
        "status": "ok",
        "records": records.len(),
        "files": written,
    });
    println!("{summary}");
    Ok(())
}

fn party(json: &str) -> Result<(), HarnessError> {
    let args: PartyArgs =
        serde_json::from_str(json).map_err(|e| HarnessError::Config(e.to_string()))?;
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    harness::party::run_party(&args, &mut lock)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Party { args } => party(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({
                "error": e.kind(),
                "party": e.party(),
                "message": e.to_string(),
            });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
