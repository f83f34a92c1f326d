mod common;

use rand::Rng;
use secinfer::gc::circuit::{BooleanCircuit, Gate, GateKind};
use secinfer::gc::fixed as fx;
use secinfer::gc::{
    build_netlist, compose_layer, fixed_decode, fixed_encode, FixedPointSpec, NetlistCache,
    NetlistKind, Plan,
};
use secinfer::model::{canonical_model, ModelParams};

use common::{enc1000, fixed_forward, random_inputs, rng, sigmoid1000};

const S: FixedPointSpec = FixedPointSpec {
    width: 64,
    scale: 1000,
};

fn w64(v: i64) -> u128 {
    v as u64 as u128
}

fn run(kind: NetlistKind, ops: &[u128]) -> u128 {
    build_netlist(kind, S).unwrap().eval_words(ops).unwrap()
}

#[test]
fn encode_decode_examples() {
    assert_eq!(fixed_encode(1.234, S).unwrap(), 1234);
    assert_eq!(fixed_encode(-0.0005, S).unwrap(), -1);
    let mut r = rng(31);
    for _ in 0..1000 {
        let v: f64 = r.gen_range(-1e6..1e6);
        let back = fixed_decode(fixed_encode(v, S).unwrap(), S);
        assert!((back - v).abs() <= 0.5 / 1000.0 + 1e-9);
        assert_eq!(fixed_encode(v, S).unwrap() as i128, enc1000(v));
    }
    assert!(fixed_encode(1e17, S).is_err());
    assert!(FixedPointSpec::new(48, 1000).is_err());
}

#[test]
fn integer_semantics_examples() {
    assert_eq!(fx::add(S, 1234, -234), 1000);
    assert_eq!(fx::relu(S, -2000), 0);
    assert_eq!(fx::relu(S, 2000), 2000);
    assert_eq!(fx::sigmoid(S, 0), 500);
    assert_eq!(fx::sigmoid(S, 1000), 693);
    assert_eq!(run(NetlistKind::Add, &[w64(1234), w64(-234)]) as i64, 1000);
    assert_eq!(run(NetlistKind::Relu, &[w64(-2000)]) as i64, 0);
    assert_eq!(run(NetlistKind::Relu, &[w64(2000)]) as i64, 2000);
    assert_eq!(run(NetlistKind::Poly2Sigmoid, &[w64(0)]) as i64, 500);
    assert_eq!(run(NetlistKind::Poly2Sigmoid, &[w64(1000)]) as i64, 693);
}

#[test]
fn netlists_match_integer_oracle_on_random_operands() {
    let mut r = rng(32);
    let add = build_netlist(NetlistKind::Add, S).unwrap();
    let sub = build_netlist(NetlistKind::Sub, S).unwrap();
    let mul = build_netlist(NetlistKind::Mul, S).unwrap();
    let div = build_netlist(NetlistKind::DivScale, S).unwrap();
    let relu = build_netlist(NetlistKind::Relu, S).unwrap();
    let sig = build_netlist(NetlistKind::Poly2Sigmoid, S).unwrap();
    for _ in 0..200 {
        let a: i64 = r.gen();
        let b: i64 = r.gen();
        assert_eq!(
            add.eval_words(&[w64(a), w64(b)]).unwrap() as i64,
            a.wrapping_add(b)
        );
        assert_eq!(
            sub.eval_words(&[w64(a), w64(b)]).unwrap() as i64,
            a.wrapping_sub(b)
        );
        assert_eq!(
            mul.eval_words(&[w64(a), w64(b)]).unwrap() as i128,
            a as i128 * b as i128
        );
        let wide = a as i128 * b as i128;
        assert_eq!(
            div.eval_words(&[wide as u128]).unwrap() as i64,
            (wide / 1000) as i64
        );
        assert_eq!(relu.eval_words(&[w64(a)]).unwrap() as i64, a.max(0));
        let z: i64 = r.gen_range(-(1i64 << 31)..(1i64 << 31));
        assert_eq!(
            sig.eval_words(&[w64(z)]).unwrap() as i64 as i128,
            sigmoid1000(z as i128)
        );
        let small: i64 = r.gen_range(-50_000..50_000);
        assert_eq!(
            sig.eval_words(&[w64(small)]).unwrap() as i64 as i128,
            sigmoid1000(small as i128)
        );
    }
}

#[test]
fn width_32_wraps_at_32_bits() {
    let s32 = FixedPointSpec::new(32, 1000).unwrap();
    let add = build_netlist(NetlistKind::Add, s32).unwrap();
    let mut r = rng(33);
    for _ in 0..100 {
        let a: i32 = r.gen();
        let b: i32 = r.gen();
        let got = add
            .eval_words(&[a as u32 as u128, b as u32 as u128])
            .unwrap() as u32 as i32;
        assert_eq!(got, a.wrapping_add(b));
    }
}

#[test]
fn matvec_netlist() {
    let kind = NetlistKind::MatVec { rows: 2, cols: 3 };
    let c = build_netlist(kind, S).unwrap();
    let w = [[1500i64, -200, 0], [-1000, 3000, 250]];
    let x = [2000i64, -1500, 4000];
    let mut ops: Vec<u128> = w.iter().flatten().map(|&v| w64(v)).collect();
    ops.extend(x.iter().map(|&v| w64(v)));
    let out = c.eval_words(&ops).unwrap();
    for (i, row) in w.iter().enumerate() {
        let want: i128 = row
            .iter()
            .zip(&x)
            .map(|(&a, &b)| a as i128 * b as i128 / 1000)
            .sum();
        assert_eq!((out >> (64 * i)) as u64 as i64 as i128, want);
    }
}

#[test]
fn and_counts_are_stable() {
    let count = |k| build_netlist(k, S).unwrap().stats().and_count;
    assert_eq!(count(NetlistKind::Add), 63);
    assert_eq!(count(NetlistKind::Mul), 8382);
    assert_eq!(count(NetlistKind::DivScale), 2229);
    assert_eq!(count(NetlistKind::Relu), 64);
    assert_eq!(count(NetlistKind::Poly2Sigmoid), 14832);
    let a = build_netlist(NetlistKind::Mul, S).unwrap();
    let b = build_netlist(NetlistKind::Mul, S).unwrap();
    assert_eq!(a, b);
}

#[test]
fn constant_only_circuit_has_no_and_gates() {
    let c = BooleanCircuit {
        wire_count: 2,
        gates: vec![
            Gate {
                kind: GateKind::Const0,
                a: 0,
                b: 0,
                out: 0,
            },
            Gate {
                kind: GateKind::Const1,
                a: 0,
                b: 0,
                out: 1,
            },
        ],
        inputs: vec![],
        outputs: vec![0, 1],
    };
    c.validate().unwrap();
    assert_eq!(c.stats().and_count, 0);
    assert_eq!(c.eval(&[]).unwrap(), vec![false, true]);
}

#[test]
fn layer_plans_by_construction() {
    let p = compose_layer(1, 1, false, None);
    let kinds: Vec<NetlistKind> = p.steps.iter().map(|s| s.kind).collect();
    assert_eq!(kinds, vec![NetlistKind::Mul, NetlistKind::DivScale]);

    let p = compose_layer(4, 3, true, Some(NetlistKind::Relu));
    let counts = p.kind_counts();
    assert_eq!(counts[&NetlistKind::Mul], 12);
    assert_eq!(counts[&NetlistKind::DivScale], 12);
    assert_eq!(counts[&NetlistKind::Add], 8 + 4);
    assert_eq!(counts[&NetlistKind::Relu], 4);
    assert_eq!(p.steps.len(), 12 + 12 + 12 + 4);
    assert_eq!(p.garbler_inputs, 12 + 4);
    assert_eq!(p.evaluator_inputs, 3);
}

fn random_model(seed: u64) -> ModelParams {
    let mut r = rng(seed);
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| (r.gen_range(-1.0f64..1.0) * 1000.0).round() / 1000.0)
            .collect()
    };
    let w1 = (0..4).map(|_| draw(3)).collect();
    let b1 = draw(4);
    let w2 = draw(4);
    let b2 = draw(1)[0];
    ModelParams::new(w1, b1, w2, b2).unwrap()
}

#[test]
fn plain_plan_evaluation_matches_oracle() {
    let mut cache = NetlistCache::new();
    for (i, model) in [canonical_model(), random_model(34), random_model(35)]
        .iter()
        .enumerate()
    {
        let stack = model.as_stack();
        let plan = Plan::for_stack(&stack);
        let g = Plan::garbler_values(&stack, S).unwrap();
        for x in random_inputs(10, -3.0, 3.0, 40 + i as u64) {
            let e: Vec<i64> = x.iter().map(|&v| fixed_encode(v, S).unwrap()).collect();
            let out = plan.eval_plain(&g, &e, S, &mut cache);
            assert_eq!(out.len(), 1);
            assert_eq!(
                out[0] as u64 as i64 as i128,
                fixed_forward(model, &x),
                "{x:?}"
            );
        }
    }
}
