//! Encrypt, compute on and decrypt a vector with the small test parameters.
//!
//! cargo run --release --example ckks_roundtrip

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use secinfer::ckks::{keygen, validate_params, CkksParams, Preset};

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let ctx = validate_params(&CkksParams::preset(Preset::Test))?;
    let keys = keygen(&ctx, &[1], &mut rng);
    println!(
        "degree {} | slots {} | levels {} | chain {:?}",
        ctx.degree(),
        ctx.slot_count(),
        ctx.max_level(),
        ctx.chain_primes()
    );

    let a = [0.5, -1.25, 2.0, 3.5];
    let b = [1.5, 0.75, -0.5, 0.25];
    let top = ctx.max_level();
    let ca = ctx.encrypt(
        &ctx.encode(&a, ctx.initial_scale(), top)?,
        &keys.public,
        &mut rng,
    );
    let cb = ctx.encrypt_symmetric(
        &ctx.encode(&b, ctx.initial_scale(), top)?,
        &keys.secret,
        &mut rng,
    );

    let got = ctx.decrypt_decode(&ca, &keys.secret);
    println!("decrypt(a)      err {:.2e}", max_err(&got[..4], &a));

    let sum = ctx.decrypt_decode(&ctx.add(&ca, &cb)?, &keys.secret);
    let want: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    println!("a + b           err {:.2e}", max_err(&sum[..4], &want));

    let prod = ctx.rescale(&ctx.eval_mul(&ca, &cb, &keys.relin)?)?;
    let want: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let got = ctx.decrypt_decode(&prod, &keys.secret);
    println!(
        "a * b           err {:.2e}  (level {} -> {})",
        max_err(&got[..4], &want),
        top,
        prod.level()
    );

    let rot = ctx.rotate(&ca, 1, &keys.galois)?;
    let got = ctx.decrypt_decode(&rot, &keys.secret);
    println!("rotate(a, 1)    err {:.2e}", max_err(&got[..3], &a[1..]));
    Ok(())
}
