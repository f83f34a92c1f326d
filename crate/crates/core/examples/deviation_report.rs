//! How far each secure pipeline's arithmetic drifts from the exact network
//! on the committed stress inputs (reference arithmetic, no cryptography).
//!
//! cargo run --release --example deviation_report

use secinfer::gc::FixedPointSpec;
use secinfer::model::{
    canonical_model, deviation, infer_fhe_approx, infer_gc_fixed, infer_plain, stress_inputs,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = canonical_model();
    let spec = FixedPointSpec::default();
    let (mut worst_fhe, mut worst_gc) = (0.0f64, 0.0f64);
    println!(
        "{:<24} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "x", "plain", "fhe", "dev %", "gc", "dev %"
    );
    for x in stress_inputs() {
        let p = infer_plain(&model, &x);
        let f = infer_fhe_approx(&model, &x);
        let g = infer_gc_fixed(&model, &x, spec)?;
        let (df, dg) = (deviation(f, p), deviation(g, p));
        worst_fhe = worst_fhe.max(df.value());
        worst_gc = worst_gc.max(dg.value());
        println!(
            "{:<24} {:>9.4} {:>9.4} {:>9.2} {:>9.4} {:>9.2}",
            format!("{x:?}"),
            p,
            f,
            df.value(),
            g,
            dg.value()
        );
    }
    println!("worst case: fhe {worst_fhe:.2}% | gc {worst_gc:.2}%");
    Ok(())
}
