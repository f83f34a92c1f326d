//! Traffic growth with depth and with repeated inference. Pass `fhe` to also
//! measure the key-reuse setup/marginal split (paper-size parameters, slower).
//!
//! cargo run --release --example scaling_sweep -- fhe

use secinfer::harness::{run_scaling_sweep, ExperimentConfig, Mode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let with_fhe = std::env::args().any(|a| a == "fhe");
    let gc = ExperimentConfig {
        mode: Mode::Gc,
        ..Default::default()
    };
    let r = run_scaling_sweep(&gc, 4, 3)?;
    println!("garbled circuits, bytes garbler -> evaluator by depth:");
    for p in &r.layers {
        println!(
            "  {} layer(s): {:>10} B  (+{})",
            p.layers,
            p.garbler_to_evaluator_bytes,
            p.delta_bytes.unwrap_or(0)
        );
    }
    if let Some(f) = r.layer_fit {
        println!(
            "  linear fit: {:.0} B/layer, R^2 = {:.4}",
            f.slope, f.r_squared
        );
    }
    println!(
        "  {} fresh inferences: {} B = {:.4} x single ({} B)",
        r.inferences,
        r.gc_total_bytes.unwrap_or(0),
        r.gc_ratio.unwrap_or(f64::NAN),
        r.gc_single_bytes.unwrap_or(0)
    );

    if with_fhe {
        let fhe = ExperimentConfig {
            mode: Mode::Fhe,
            ..Default::default()
        };
        let r = run_scaling_sweep(&fhe, 0, 3)?;
        let s = r.fhe_setup_bytes.unwrap_or(0);
        let eps = r.fhe_marginal_bytes.unwrap_or(f64::NAN);
        println!(
            "fhe with reused keys: S = {s} B, eps = {eps:.0} B ({:.2}% of S)",
            100.0 * eps / s as f64
        );
        for row in &r.crossover {
            println!(
                "  n = {:>4}: gc {:>14.0} B | fhe {:>14.0} B | cheaper {}",
                row.n, row.gc_bytes, row.fhe_bytes, row.cheaper
            );
        }
        if let Some(n) = r.crossover_n {
            println!("  fhe moves fewer bytes from n >= {n:.2}");
        }
    }
    Ok(())
}
