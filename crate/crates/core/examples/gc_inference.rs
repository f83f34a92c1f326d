//! One garbled-circuit inference of the canonical model, checked against the
//! fixed-point reference.
//!
//! cargo run --release --example gc_inference -- 0.3 -1.2 2.0

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use secinfer::gc::{
    fixed_decode, fixed_encode, run_evaluator, run_garbler, EvaluatorOptions, FixedPointSpec, Plan,
};
use secinfer::model::{canonical_model, infer_gc_fixed, infer_plain};
use secinfer::transport::make_inproc_pair;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let x: [f64; 3] = if args.len() == 3 {
        [args[0], args[1], args[2]]
    } else {
        [0.3, -1.2, 2.0]
    };
    let spec = FixedPointSpec::default();
    let model = canonical_model();
    let stack = model.as_stack();
    let plan = Plan::for_stack(&stack);
    let weights = Plan::garbler_values(&stack, spec)?;
    let inputs: Vec<i64> = x
        .iter()
        .map(|&v| fixed_encode(v, spec))
        .collect::<Result<_, _>>()?;

    let (mut garbler, mut evaluator) = make_inproc_pair();
    let stats = garbler.stats_handle();
    let p = plan.clone();
    let handle = std::thread::spawn(move || {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        run_garbler(&mut garbler, &p, &weights, spec, &mut rng)
    });
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let out = run_evaluator(
        &mut evaluator,
        &plan,
        &inputs,
        spec,
        &EvaluatorOptions::default(),
        &mut rng,
    )?;
    let g = handle.join().expect("garbler thread")?;

    let y = fixed_decode(out.outputs[0], spec);
    let reference = infer_gc_fixed(&model, &x, spec)?;
    let s = stats.snapshot();
    println!("x = {x:?}");
    println!(
        "garbled    y = {y}  (fixed-point reference {reference}, match: {})",
        y == reference
    );
    println!("plaintext  y = {:.6}", infer_plain(&model, &x));
    println!(
        "steps {} | AND gates {} | table bytes {}",
        plan.steps.len(),
        g.and_count,
        g.table_bytes
    );
    println!("per layer table bytes {:?}", g.layer_table_bytes);
    println!(
        "garbler->evaluator {} B | evaluator->garbler {} B | flights {}",
        s.bytes_a_to_b, s.bytes_b_to_a, s.flights
    );
    Ok(())
}
