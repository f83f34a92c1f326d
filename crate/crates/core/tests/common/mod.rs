#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use secinfer::gc::circuit::{BooleanCircuit, Gate, GateKind};
use secinfer::gc::garble::decode_outputs;
use secinfer::gc::{evaluate_netlist, garble_netlist, GarblerState, WireLabel};
use secinfer::model::ModelParams;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn random_inputs(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<[f64; 3]> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            [
                r.gen_range(lo..=hi),
                r.gen_range(lo..=hi),
                r.gen_range(lo..=hi),
            ]
        })
        .collect()
}

fn hidden(m: &ModelParams, x: &[f64; 3]) -> Vec<f64> {
    let mut out = vec![0.0; m.h];
    for i in 0..m.h {
        let mut z = m.b1[i];
        for j in 0..3 {
            z += m.w1[i][j] * x[j];
        }
        out[i] = z;
    }
    out
}

fn output_pre(m: &ModelParams, h: &[f64]) -> f64 {
    let mut z = m.b2;
    for i in 0..m.h {
        z += m.w2[0][i] * h[i];
    }
    z
}

/// Float forward pass with exact ReLU and logistic sigmoid.
pub fn plain_forward(m: &ModelParams, x: &[f64; 3]) -> f64 {
    let h: Vec<f64> = hidden(m, x)
        .iter()
        .map(|&z| if z > 0.0 { z } else { 0.0 })
        .collect();
    let z = output_pre(m, &h);
    1.0 / (1.0 + f64::exp(-z))
}

/// Float forward pass with `x^2` for ReLU and `0.5 + 0.197 z - 0.004 z^2`.
pub fn approx_forward(m: &ModelParams, x: &[f64; 3]) -> f64 {
    let h: Vec<f64> = hidden(m, x).iter().map(|&z| z * z).collect();
    let z = output_pre(m, &h);
    0.5 + 0.197 * z - 0.004 * z * z
}

/// Scale-1000 encoding, rounding half away from zero.
pub fn enc1000(v: f64) -> i128 {
    let s = v * 1000.0;
    let r = s.abs().floor() + if s.abs().fract() >= 0.5 { 1.0 } else { 0.0 };
    (r * s.signum()) as i128
}

pub fn sigmoid1000(z: i128) -> i128 {
    500 + (197 * z) / 1000 - (4 * z * z) / 1_000_000
}

/// Integer pipeline of the garbled evaluation in wide arithmetic. Values in
/// the model range never approach 64 bits, so no wraparound is modelled.
pub fn fixed_forward(m: &ModelParams, x: &[f64; 3]) -> i128 {
    let xs: Vec<i128> = x.iter().map(|&v| enc1000(v)).collect();
    let mut h = Vec::with_capacity(m.h);
    for i in 0..m.h {
        let mut acc = 0i128;
        for j in 0..3 {
            acc += enc1000(m.w1[i][j]) * xs[j] / 1000;
        }
        acc += enc1000(m.b1[i]);
        h.push(acc.max(0));
    }
    let mut z = 0i128;
    for i in 0..m.h {
        z += enc1000(m.w2[0][i]) * h[i] / 1000;
    }
    z += enc1000(m.b2);
    sigmoid1000(z)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

pub fn percent_deviation(got: f64, plain: f64) -> f64 {
    100.0 * (got - plain).abs() / plain.abs()
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn random_circuit(r: &mut ChaCha20Rng, inputs: u32, gates: usize) -> BooleanCircuit {
    let mut gs = Vec::with_capacity(gates);
    let mut next = inputs;
    for _ in 0..gates {
        let kind = match r.gen_range(0..20) {
            0..=7 => GateKind::Xor,
            8..=15 => GateKind::And,
            16..=17 => GateKind::Not,
            18 => GateKind::Const0,
            _ => GateKind::Const1,
        };
        let a = r.gen_range(0..next);
        let b = r.gen_range(0..next);
        gs.push(Gate {
            kind,
            a,
            b,
            out: next,
        });
        next += 1;
    }
    let outputs = (0..8.min(next)).map(|_| r.gen_range(0..next)).collect();
    BooleanCircuit {
        wire_count: next,
        gates: gs,
        inputs: vec![(0..inputs).collect()],
        outputs,
    }
}

/// Garbles, evaluates on `bits` and returns the decoded outputs.
pub fn garble_and_eval(c: &BooleanCircuit, bits: &[bool], r: &mut ChaCha20Rng) -> Vec<bool> {
    let mut st = GarblerState::new(r);
    let zeros: Vec<WireLabel> = bits.iter().map(|_| st.fresh_label(r)).collect();
    let (gt, out_zero) = garble_netlist(c, &mut st, &zeros).unwrap();
    assert_eq!(gt.table_bytes(), c.stats().and_count * 32);
    let active: Vec<WireLabel> = zeros
        .iter()
        .zip(bits)
        .map(|(&z, &b)| st.encode(z, b))
        .collect();
    let labels = evaluate_netlist(c, &gt, &active, st.evaluator_consts(), None).unwrap();
    let decoded = decode_outputs(&labels, &gt.decode_bits);
    for ((l, z), d) in labels.iter().zip(&out_zero).zip(&decoded) {
        assert_eq!(*l, st.encode(*z, *d));
    }
    decoded
}
