//! A batch of 1-out-of-2 transfers of 16-byte messages over a channel.
//!
//! cargo run --release --example oblivious_transfer

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use secinfer::ot::{ot_receive, ot_send, Block, OtBackend};
use secinfer::transport::make_inproc_pair;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let pairs: Vec<(Block, Block)> = (0..128).map(|_| (rng.gen(), rng.gen())).collect();
    let choices: Vec<bool> = (0..128).map(|_| rng.gen()).collect();

    let (mut sender, mut receiver) = make_inproc_pair();
    let stats = sender.stats_handle();
    let sent = pairs.clone();
    let t0 = std::time::Instant::now();
    let handle = std::thread::spawn(move || {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        ot_send(&mut sender, &sent, &mut rng)
    });
    let got = ot_receive(&mut receiver, &choices, OtBackend::Dh, &mut rng)?;
    handle.join().expect("sender thread")?;

    let correct = got
        .iter()
        .zip(&pairs)
        .zip(&choices)
        .filter(|((g, p), &c)| **g == if c { p.1 } else { p.0 })
        .count();
    let s = stats.snapshot();
    println!(
        "{correct}/{} chosen messages recovered in {:.2?}",
        pairs.len(),
        t0.elapsed()
    );
    println!(
        "request {} B | response {} B | flights {}",
        s.bytes_b_to_a, s.bytes_a_to_b, s.flights
    );
    Ok(())
}
