mod common;

use std::time::Instant;

use rand::Rng;
use secinfer::ckks::math::{ntt_primes_above, NttTables};
use secinfer::ckks::{
    keygen, validate_params, write_public_key, write_relin_key, CkksError, CkksParams, Encoder,
    Preset,
};
use secinfer::wire::Writer;

use common::{max_abs, rng};

fn test_ctx() -> std::sync::Arc<secinfer::ckks::CkksContext> {
    validate_params(&CkksParams::preset(Preset::Test)).unwrap()
}

#[test]
fn roundtrip_of_100_random_vectors() {
    let ctx = test_ctx();
    let mut r = rng(1);
    let keys = keygen(&ctx, &[1, 2], &mut r);
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let v: Vec<f64> = (0..ctx.slot_count())
            .map(|_| r.gen_range(-1.0..1.0))
            .collect();
        let pt = ctx
            .encode(&v, ctx.initial_scale(), ctx.max_level())
            .unwrap();
        let ct = ctx.encrypt(&pt, &keys.public, &mut r);
        worst = worst.max(max_abs(&ctx.decrypt_decode(&ct, &keys.secret), &v));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(worst < 1e-4, "max error {worst}");
    assert!(elapsed < 5.0, "took {elapsed}s");
}

#[test]
fn encoding_of_zero_and_constants() {
    let ctx = test_ctx();
    let zero = ctx
        .encode(&[0.0; 8], ctx.initial_scale(), ctx.max_level())
        .unwrap();
    for k in 0..ctx.max_level() {
        assert!(zero.poly().limb(k).iter().all(|&c| c == 0));
    }
    assert!(ctx.decode(&zero).iter().all(|&x| x == 0.0));

    let enc = Encoder::new(4096);
    let scale = 2f64.powi(30);
    let coeffs = enc.encode_coeffs(&vec![1.25; enc.slots()], scale);
    assert_eq!(coeffs[0], (1.25 * scale) as i128);
    assert!(coeffs[1..].iter().all(|&c| c == 0));

    let v = [1.0, 2.0, 3.0];
    let pt = ctx.encode(&v, scale, ctx.max_level()).unwrap();
    assert!(max_abs(&ctx.decode(&pt)[..3], &v) < 1e-4);
}

#[test]
fn encrypt_is_randomized_and_zero_decrypts_to_zero() {
    let ctx = test_ctx();
    let mut r = rng(2);
    let keys = keygen(&ctx, &[1, 2], &mut r);
    let v = [1.5, -2.0, 0.25];
    let pt = ctx
        .encode(&v, ctx.initial_scale(), ctx.max_level())
        .unwrap();
    let a = ctx.encrypt(&pt, &keys.public, &mut r);
    let b = ctx.encrypt(&pt, &keys.public, &mut r);
    assert_ne!(a, b);
    assert!(max_abs(&ctx.decrypt_decode(&a, &keys.secret)[..3], &v) < 1e-4);
    assert!(max_abs(&ctx.decrypt_decode(&b, &keys.secret)[..3], &v) < 1e-4);

    let z = ctx
        .encode(&[0.0], ctx.initial_scale(), ctx.max_level())
        .unwrap();
    let ct = ctx.encrypt_symmetric(&z, &keys.secret, &mut r);
    assert!(ctx
        .decrypt_decode(&ct, &keys.secret)
        .iter()
        .all(|x| x.abs() < 1e-6));
    let ct = ctx.encrypt(&z, &keys.public, &mut r);
    assert!(ctx
        .decrypt_decode(&ct, &keys.secret)
        .iter()
        .all(|x| x.abs() < 1e-4));
}

#[test]
fn wrong_key_gives_garbage() {
    let ctx = test_ctx();
    let mut r = rng(3);
    let k1 = keygen(&ctx, &[], &mut r);
    let k2 = keygen(&ctx, &[], &mut r);
    let v = [1.0, 2.0, 3.0];
    let pt = ctx
        .encode(&v, ctx.initial_scale(), ctx.max_level())
        .unwrap();
    let ct = ctx.encrypt(&pt, &k1.public, &mut r);
    assert!(max_abs(&ctx.decrypt_decode(&ct, &k2.secret)[..3], &v) > 1.0);
}

#[test]
fn keygen_is_deterministic_under_a_seed() {
    let ctx = test_ctx();
    let a = keygen(&ctx, &[1, 2], &mut rng(9));
    let b = keygen(&ctx, &[1, 2], &mut rng(9));
    assert!(a.secret == b.secret);
    assert_eq!(a.public, b.public);
    assert_eq!(a.relin, b.relin);
    assert_eq!(a.galois, b.galois);
    assert_eq!(a.galois.steps(), vec![1, 2]);
    let bytes = |k: &secinfer::ckks::KeyMaterial| {
        let mut w = Writer::new();
        write_public_key(&mut w, &ctx, &k.public);
        write_relin_key(&mut w, &ctx, &k.relin);
        w.finish()
    };
    assert_eq!(bytes(&a), bytes(&b));
}

#[test]
fn slotwise_homomorphism_to_depth_two() {
    let ctx = test_ctx();
    let mut r = rng(4);
    let keys = keygen(&ctx, &[1, 2], &mut r);
    let n = ctx.slot_count();
    let a: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let s = ctx.initial_scale();
    let l = ctx.max_level();
    let ca = ctx.encrypt(&ctx.encode(&a, s, l).unwrap(), &keys.public, &mut r);
    let cb = ctx.encrypt(&ctx.encode(&b, s, l).unwrap(), &keys.public, &mut r);

    let sum = ctx.add(&ca, &cb).unwrap();
    let want: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    assert!(max_abs(&ctx.decrypt_decode(&sum, &keys.secret), &want) < 1e-2);

    // (a + b) * a, then that times b.
    let p1 = ctx
        .rescale(&ctx.eval_mul(&sum, &ca, &keys.relin).unwrap())
        .unwrap();
    let want1: Vec<f64> = want.iter().zip(&a).map(|(x, y)| x * y).collect();
    assert!(max_abs(&ctx.decrypt_decode(&p1, &keys.secret), &want1) < 1e-2);

    let bb = ctx.encrypt(
        &ctx.encode(&b, p1.scale(), p1.level()).unwrap(),
        &keys.public,
        &mut r,
    );
    let p2 = ctx
        .rescale(&ctx.eval_mul(&p1, &bb, &keys.relin).unwrap())
        .unwrap();
    let want2: Vec<f64> = want1.iter().zip(&b).map(|(x, y)| x * y).collect();
    assert_eq!(p2.level(), 1);
    assert!(max_abs(&ctx.decrypt_decode(&p2, &keys.secret), &want2) < 1e-2);

    let rot = ctx.rotate(&p1, 1, &keys.galois).unwrap();
    let want_rot: Vec<f64> = (0..n).map(|i| want1[(i + 1) % n]).collect();
    assert!(max_abs(&ctx.decrypt_decode(&rot, &keys.secret), &want_rot) < 1e-2);
}

#[test]
fn slotwise_examples() {
    let ctx = test_ctx();
    let mut r = rng(5);
    let keys = keygen(&ctx, &[1, 2], &mut r);
    let s = ctx.initial_scale();
    let l = ctx.max_level();
    let n = ctx.slot_count();
    let enc = |v: &[f64], r: &mut rand_chacha::ChaCha20Rng| {
        ctx.encrypt(&ctx.encode(v, s, l).unwrap(), &keys.public, r)
    };
    let a = enc(&[1.0, 2.0, 3.0], &mut r);

    let z = enc(&[0.0], &mut r);
    let id = ctx.add(&a, &z).unwrap();
    assert!(
        max_abs(
            &ctx.decrypt_decode(&id, &keys.secret)[..3],
            &[1.0, 2.0, 3.0]
        ) < 1e-3
    );

    let p = ctx.encode(&[10.0, 20.0, 30.0], s, l).unwrap();
    let sum = ctx.add_plain(&a, &p).unwrap();
    assert!(
        max_abs(
            &ctx.decrypt_decode(&sum, &keys.secret)[..3],
            &[11.0, 22.0, 33.0]
        ) < 1e-3
    );

    let ones = ctx.encode_for_product(&vec![1.0; n], &a, s).unwrap();
    let same = ctx.rescale(&ctx.mul_plain(&a, &ones).unwrap()).unwrap();
    assert!(
        max_abs(
            &ctx.decrypt_decode(&same, &keys.secret)[..3],
            &[1.0, 2.0, 3.0]
        ) < 1e-3
    );

    let b = enc(&[4.0, 5.0, 6.0], &mut r);
    let prod = ctx
        .rescale(&ctx.eval_mul(&a, &b, &keys.relin).unwrap())
        .unwrap();
    assert!(
        max_abs(
            &ctx.decrypt_decode(&prod, &keys.secret)[..3],
            &[4.0, 10.0, 18.0]
        ) < 1e-2
    );

    let r0 = ctx.rotate(&a, 0, &keys.galois).unwrap();
    assert!(
        max_abs(
            &ctx.decrypt_decode(&r0, &keys.secret)[..3],
            &[1.0, 2.0, 3.0]
        ) < 1e-3
    );
    let r1 = ctx.decrypt_decode(&ctx.rotate(&a, 1, &keys.galois).unwrap(), &keys.secret);
    assert!(max_abs(&r1[..3], &[2.0, 3.0, 0.0]) < 1e-3);
    assert!((r1[n - 1] - 1.0).abs() < 1e-3);
    let twice = ctx
        .rotate(&ctx.rotate(&a, 1, &keys.galois).unwrap(), 1, &keys.galois)
        .unwrap();
    let by2 = ctx.rotate(&a, 2, &keys.galois).unwrap();
    assert!(
        max_abs(
            &ctx.decrypt_decode(&twice, &keys.secret),
            &ctx.decrypt_decode(&by2, &keys.secret)
        ) < 1e-3
    );
}

#[test]
fn contract_violations() {
    let ctx = test_ctx();
    let mut r = rng(6);
    let keys = keygen(&ctx, &[1, 2], &mut r);
    let l = ctx.max_level();
    let a = ctx.encrypt(
        &ctx.encode(&[1.0], 2f64.powi(30), l).unwrap(),
        &keys.public,
        &mut r,
    );
    let b = ctx.encrypt(
        &ctx.encode(&[1.0], 2f64.powi(25), l).unwrap(),
        &keys.public,
        &mut r,
    );
    assert!(matches!(ctx.add(&a, &b), Err(CkksError::ScaleMismatch(..))));
    assert_eq!(
        ctx.rotate(&a, 3, &keys.galois).unwrap_err(),
        CkksError::MissingRotationStep(3)
    );
    let bottom = ctx.mod_drop_to(&a, 1).unwrap();
    assert_eq!(ctx.rescale(&bottom).unwrap_err(), CkksError::LevelExhausted);
    assert_eq!(
        ctx.multiply(&bottom, &bottom).unwrap_err(),
        CkksError::LevelExhausted
    );
}

#[test]
fn rescale_brings_a_squared_scale_back() {
    let ctx = test_ctx();
    let mut r = rng(7);
    let keys = keygen(&ctx, &[], &mut r);
    let s = 2f64.powi(30);
    let ct = ctx.encrypt(
        &ctx.encode(&[0.5], s, ctx.max_level()).unwrap(),
        &keys.public,
        &mut r,
    );
    let pt = ctx.encode(&[1.0], s, ctx.max_level()).unwrap();
    let wide = ctx.mul_plain(&ct, &pt).unwrap();
    assert_eq!(wide.scale(), 2f64.powi(60));
    let out = ctx.rescale(&wide).unwrap();
    assert!(out.scale() >= 2f64.powi(29) && out.scale() <= 2f64.powi(31));
    assert!((ctx.decrypt_decode(&out, &keys.secret)[0] - 0.5).abs() < 1e-3);
}

#[test]
fn ntt_roundtrip_is_exact() {
    let n = 1024;
    for bits in [30, 50, 60] {
        let q = ntt_primes_above(bits, n, 1, &[])[0];
        let t = NttTables::new(q, n).unwrap();
        let mut r = rng(bits as u64);
        let a: Vec<u64> = (0..n).map(|_| r.gen_range(0..q)).collect();
        let mut b = a.clone();
        t.forward(&mut b);
        assert_ne!(a, b);
        t.inverse(&mut b);
        assert_eq!(a, b);
    }
}

fn negacyclic_schoolbook(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let n = a.len();
    let mut out = vec![0u128; n];
    let q = q as u128;
    for i in 0..n {
        for j in 0..n {
            let p = a[i] as u128 * b[j] as u128 % q;
            let k = i + j;
            if k < n {
                out[k] = (out[k] + p) % q;
            } else {
                out[k - n] = (out[k - n] + q - p) % q;
            }
        }
    }
    out.into_iter().map(|x| x as u64).collect()
}

#[test]
fn ntt_product_is_negacyclic_convolution() {
    let n = 256;
    let q = ntt_primes_above(40, n, 1, &[])[0];
    let t = NttTables::new(q, n).unwrap();
    let mut r = rng(11);
    let a: Vec<u64> = (0..n).map(|_| r.gen_range(0..q)).collect();
    let b: Vec<u64> = (0..n).map(|_| r.gen_range(0..q)).collect();
    let (mut fa, mut fb) = (a.clone(), b.clone());
    t.forward(&mut fa);
    t.forward(&mut fb);
    let mut prod: Vec<u64> = fa
        .iter()
        .zip(&fb)
        .map(|(&x, &y)| (x as u128 * y as u128 % q as u128) as u64)
        .collect();
    t.inverse(&mut prod);
    assert_eq!(prod, negacyclic_schoolbook(&a, &b, q));
}

fn params(degree: usize, bits: &[u32]) -> CkksParams {
    CkksParams {
        degree,
        modulus_bits: bits.to_vec(),
        initial_scale: 2f64.powi(20),
    }
}

/// One chain per budget row that spends the whole budget within the prime
/// count limit, and the same chain with one more bit.
pub fn budget_rows() -> Vec<(usize, Vec<u32>, Vec<u32>)> {
    vec![
        (2048, vec![54], vec![55]),
        (4096, vec![49, 30, 30], vec![50, 30, 30]),
        (8192, vec![58, 40, 40, 40, 40], vec![59, 40, 40, 40, 40]),
        (
            16384,
            vec![60, 60, 60, 60, 50, 40, 40, 34, 34],
            vec![60, 60, 60, 60, 50, 40, 40, 34, 35],
        ),
        (
            32768,
            [vec![60; 14], vec![41]].concat(),
            [vec![60; 14], vec![42]].concat(),
        ),
    ]
}

#[test]
fn budget_table_rows() {
    for (degree, at_limit, over) in budget_rows() {
        assert_eq!(
            at_limit.iter().sum::<u32>(),
            secinfer::ckks::budget_for(degree).unwrap().0
        );
        validate_params(&params(degree, &at_limit)).unwrap_or_else(|e| panic!("{degree}: {e}"));
        assert!(matches!(
            validate_params(&params(degree, &over)),
            Err(CkksError::BudgetExceeded { .. })
        ));
    }
    assert_eq!(
        validate_params(&params(1024, &[27])).unwrap_err(),
        CkksError::DegreeUnusable(1024)
    );
    assert!(matches!(
        validate_params(&params(4096, &[25, 25, 25, 25])),
        Err(CkksError::ModulusCountExceeded { .. })
    ));
    assert!(validate_params(&CkksParams::preset(Preset::Paper)).is_ok());
    assert!(matches!(
        validate_params(&CkksParams {
            degree: 8192,
            ..CkksParams::preset(Preset::Paper)
        }),
        Err(CkksError::BudgetExceeded { limit: 218, .. })
    ));
}
