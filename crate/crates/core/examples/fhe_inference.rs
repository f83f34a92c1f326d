//! One encrypted inference of the canonical model: the client sends keys and
//! an encrypted input, the server answers with one ciphertext.
//!
//! cargo run --release --example fhe_inference -- 1.0 -1.0 0.5

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use secinfer::ckks::{CkksParams, Preset};
use secinfer::fhe;
use secinfer::model::{canonical_model, infer_fhe_approx, infer_plain};
use secinfer::transport::make_inproc_pair;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let x: [f64; 3] = if args.len() == 3 {
        [args[0], args[1], args[2]]
    } else {
        [1.0, -1.0, 0.5]
    };
    let model = canonical_model();
    let params = CkksParams::preset(Preset::Paper);

    let (mut server, mut client) = make_inproc_pair();
    let stats = client.stats_handle();
    let m = model.clone();
    let t0 = std::time::Instant::now();
    let handle = std::thread::spawn(move || fhe::run_server(&mut server, &m, 1));
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let y = fhe::run_client(&mut client, &params, &[x], false, &mut rng)?[0];
    handle.join().expect("server thread")?;
    let elapsed = t0.elapsed();

    let reference = infer_fhe_approx(&model, &x);
    let s = stats.snapshot();
    println!("x = {x:?}");
    println!("encrypted   y = {y:.6}");
    println!(
        "approx ref  y = {reference:.6}  (rel err {:.2e})",
        ((y - reference) / reference).abs()
    );
    println!("plaintext   y = {:.6}", infer_plain(&model, &x));
    println!(
        "client->server {} B | server->client {} B | round trips {} | {:.2?}",
        s.bytes_b_to_a, s.bytes_a_to_b, s.round_trips, elapsed
    );
    Ok(())
}
