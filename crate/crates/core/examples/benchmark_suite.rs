//! All three modes on the stress inputs, one report plus figure data.
//!
//! cargo run --release --example benchmark_suite -- out/report.csv

use std::path::PathBuf;

use secinfer::harness::{emit_report, run_experiment, ExperimentConfig, Mode, ReportFormat};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("secinfer_report.csv"));
    if let Some(dir) = out.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut records = Vec::new();
    for mode in Mode::ALL {
        let cfg = ExperimentConfig {
            mode,
            repetitions: 1,
            ..Default::default()
        };
        let batch = run_experiment(&cfg)?;
        let mean = batch.iter().map(|r| r.rtt_seconds).sum::<f64>() / batch.len() as f64;
        let worst = batch
            .iter()
            .map(|r| r.deviation.value())
            .fold(0.0, f64::max);
        println!(
            "{mode:<5} mean rtt {mean:>10.6} s | bytes {:>10} | flights {} | worst deviation {worst:.2}%",
            batch[0].comm.total_bytes(),
            batch[0].comm.flights
        );
        records.extend(batch);
    }
    for path in emit_report(&records, ReportFormat::from_path(&out), true, &out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
