//! One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.

mod common;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use secinfer::ckks::math::{ntt_primes_above, NttTables};
use secinfer::ckks::{keygen, validate_params, CkksError, CkksParams, Preset};
use secinfer::gc::circuit::{BooleanCircuit, Gate, GateKind};
use secinfer::gc::{garble_netlist, GarblerState, WireLabel};
use secinfer::harness::{
    emit_report, run_experiment, run_scaling_sweep, ExperimentConfig, MetricsRecord, Mode,
    ReportFormat, TransportSpec,
};
use secinfer::model::canonical_model;

use common::{
    approx_forward, fixed_forward, garble_and_eval, max_abs, random_circuit, random_inputs, rng,
};

type Outcome = Result<String, String>;

const ROUNDTRIP_TOL: f64 = 1e-4;
const ROUNDTRIP_SECONDS: f64 = 5.0;
const HOMOMORPHIC_TOL: f64 = 1e-2;
const FHE_REL_TOL: f64 = 0.01;
const GC_RATIO_TOL: f64 = 0.01;
const EPS_OVER_S: f64 = 0.05;
const LAYER_R2: f64 = 0.99;
const CURVE_TOL: f64 = 0.0;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn write_inputs(dir: &Path, name: &str, xs: &[[f64; 3]]) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(xs).unwrap()).unwrap();
    p
}

fn config(mode: Mode, inputs: Option<PathBuf>) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        inputs_path: inputs,
        repetitions: 1,
        seed: 2024,
        ..Default::default()
    }
}

fn ckks_roundtrip() -> Outcome {
    let ctx = validate_params(&CkksParams::preset(Preset::Test)).map_err(|e| e.to_string())?;
    let mut r = rng(1001);
    let keys = keygen(&ctx, &[], &mut r);
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
    let secs = t0.elapsed().as_secs_f64();
    check(
        worst < ROUNDTRIP_TOL && secs < ROUNDTRIP_SECONDS,
        format!("100 full vectors, max error {worst:.2e} < {ROUNDTRIP_TOL:e}, {secs:.2}s < {ROUNDTRIP_SECONDS}s"),
    )
}

fn negacyclic(a: &[u64], b: &[u64], q: u64) -> Vec<u64> {
    let n = a.len();
    let mut out = vec![0u128; n];
    let q128 = q as u128;
    for i in 0..n {
        for j in 0..n {
            let p = a[i] as u128 * b[j] as u128 % q128;
            let k = (i + j) % n;
            if i + j < n {
                out[k] = (out[k] + p) % q128;
            } else {
                out[k] = (out[k] + q128 - p) % q128;
            }
        }
    }
    out.into_iter().map(|v| v as u64).collect()
}

fn homomorphism_and_ntt() -> Outcome {
    let ctx = validate_params(&CkksParams::preset(Preset::Test)).map_err(|e| e.to_string())?;
    let mut r = rng(1002);
    let keys = keygen(&ctx, &[1], &mut r);
    let n = ctx.slot_count();
    let a: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let (s, l) = (ctx.initial_scale(), ctx.max_level());
    let ca = ctx.encrypt(&ctx.encode(&a, s, l).unwrap(), &keys.public, &mut r);
    let cb = ctx.encrypt(&ctx.encode(&b, s, l).unwrap(), &keys.public, &mut r);
    let sum = ctx.add(&ca, &cb).unwrap();
    let prod = ctx
        .rescale(&ctx.eval_mul(&ca, &cb, &keys.relin).unwrap())
        .unwrap();
    let rot = ctx.rotate(&ca, 1, &keys.galois).unwrap();
    let want_sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let want_prod: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    let want_rot: Vec<f64> = (0..n).map(|i| a[(i + 1) % n]).collect();
    let e = [
        max_abs(&ctx.decrypt_decode(&sum, &keys.secret), &want_sum),
        max_abs(&ctx.decrypt_decode(&prod, &keys.secret), &want_prod),
        max_abs(&ctx.decrypt_decode(&rot, &keys.secret), &want_rot),
    ];
    let worst = e.iter().copied().fold(0.0, f64::max);

    let deg = 256;
    let q = ntt_primes_above(40, deg, 1, &[])[0];
    let t = NttTables::new(q, deg).ok_or("no NTT tables")?;
    let x: Vec<u64> = (0..deg).map(|_| r.gen_range(0..q)).collect();
    let y: Vec<u64> = (0..deg).map(|_| r.gen_range(0..q)).collect();
    let mut fx = x.clone();
    let mut fy = y.clone();
    t.forward(&mut fx);
    t.forward(&mut fy);
    let mut back = fx.clone();
    t.inverse(&mut back);
    let mut prod: Vec<u64> = fx
        .iter()
        .zip(&fy)
        .map(|(&u, &v)| (u as u128 * v as u128 % q as u128) as u64)
        .collect();
    t.inverse(&mut prod);
    let ntt_ok = back == x && prod == negacyclic(&x, &y, q);
    check(
        worst < HOMOMORPHIC_TOL && ntt_ok,
        format!(
            "add/mul/rotate max error {worst:.2e} < {HOMOMORPHIC_TOL:e}; NTT roundtrip and negacyclic product exact: {ntt_ok}"
        ),
    )
}

fn budget_rows() -> Outcome {
    let rows: [(usize, Vec<u32>); 5] = [
        (2048, vec![54]),
        (4096, vec![49, 30, 30]),
        (8192, vec![58, 40, 40, 40, 40]),
        (16384, vec![60, 60, 60, 60, 50, 40, 40, 34, 34]),
        (32768, [vec![60; 14], vec![41]].concat()),
    ];
    let params = |degree, bits: Vec<u32>| CkksParams {
        degree,
        modulus_bits: bits,
        initial_scale: 2f64.powi(20),
    };
    let mut bad = Vec::new();
    for (degree, bits) in rows {
        if validate_params(&params(degree, bits.clone())).is_err() {
            bad.push(format!("{degree} at limit rejected"));
        }
        let mut over = bits;
        *over.last_mut().unwrap() += 1;
        if !matches!(
            validate_params(&params(degree, over)),
            Err(CkksError::BudgetExceeded { .. })
        ) {
            bad.push(format!("{degree} over limit accepted"));
        }
    }
    if validate_params(&params(1024, vec![27])).unwrap_err() != CkksError::DegreeUnusable(1024) {
        bad.push("1024 not rejected as unusable".into());
    }
    if validate_params(&CkksParams::preset(Preset::Paper)).is_err() {
        bad.push("paper preset rejected".into());
    }
    check(
        bad.is_empty(),
        if bad.is_empty() {
            "5 degrees accept their limit and reject one bit more; 1024 unusable".into()
        } else {
            bad.join("; ")
        },
    )
}

fn fhe_accuracy(dir: &Path) -> Outcome {
    let xs = random_inputs(25, -2.0, 2.0, 1004);
    let mut cfg = config(Mode::Fhe, Some(write_inputs(dir, "fhe.json", &xs)));
    cfg.reuse_keys = 25;
    let recs = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let m = canonical_model();
    let worst = recs
        .iter()
        .map(|r| {
            let want = approx_forward(&m, &r.x);
            (r.y_output - want).abs() / want.abs()
        })
        .fold(0.0, f64::max);
    let shape = recs
        .iter()
        .all(|r| r.comm.flights == 2 && r.comm.round_trips == 1);
    check(
        recs.len() == 25 && worst < FHE_REL_TOL && shape,
        format!(
            "{} inputs, worst relative error {:.3}% < {}%, every inference 2 flights / 1 round trip: {shape}",
            recs.len(),
            worst * 100.0,
            FHE_REL_TOL * 100.0
        ),
    )
}

fn gc_exactness(dir: &Path) -> Outcome {
    let xs = random_inputs(100, -3.0, 3.0, 1005);
    let cfg = config(Mode::Gc, Some(write_inputs(dir, "gc.json", &xs)));
    let recs = run_experiment(&cfg).map_err(|e| e.to_string())?;
    let m = canonical_model();
    let exact = recs
        .iter()
        .filter(|r| r.y_output == fixed_forward(&m, &r.x) as f64 / 1000.0)
        .count();
    let shape = recs.iter().all(|r| r.comm.flights == 7);
    check(
        recs.len() == 100 && exact == 100 && shape,
        format!("{exact}/100 bit-exact against the fixed-point oracle, 7 flights each: {shape}"),
    )
}

fn garbling() -> Outcome {
    let mut r = rng(1006);
    let mut wrong = 0;
    for _ in 0..50 {
        let n_in = r.gen_range(2..16);
        let gates = r.gen_range(1..=500);
        let c = random_circuit(&mut r, n_in, gates);
        let bits: Vec<bool> = (0..n_in).map(|_| r.gen()).collect();
        if garble_and_eval(&c, &bits, &mut r) != c.eval(&bits).unwrap() {
            wrong += 1;
        }
    }
    let xor = BooleanCircuit {
        wire_count: 33,
        gates: (0..31u32)
            .map(|i| Gate {
                kind: GateKind::Xor,
                a: i,
                b: i + 1,
                out: i + 2,
            })
            .collect(),
        inputs: vec![vec![0, 1]],
        outputs: vec![32],
    };
    let mut st = GarblerState::new(&mut r);
    let zeros: Vec<WireLabel> = (0..2).map(|_| st.fresh_label(&mut r)).collect();
    let (gt, _) = garble_netlist(&xor, &mut st, &zeros).unwrap();
    let xor_bytes = gt.table_payload().len();
    check(
        wrong == 0 && xor_bytes == 0,
        format!("50 random circuits, {wrong} wrong, tables = 32 B per AND; XOR-only circuit {xor_bytes} table bytes"),
    )
}

fn scaling(dir: &Path) -> Outcome {
    let inputs = Some(write_inputs(
        dir,
        "scale.json",
        &random_inputs(3, -2.0, 2.0, 1007),
    ));
    let gc =
        run_scaling_sweep(&config(Mode::Gc, inputs.clone()), 0, 3).map_err(|e| e.to_string())?;
    let ratio = gc.gc_ratio.unwrap_or(f64::NAN);
    let fhe = run_scaling_sweep(&config(Mode::Fhe, inputs), 0, 3).map_err(|e| e.to_string())?;
    let s = fhe.fhe_setup_bytes.unwrap_or(0) as f64;
    let eps = fhe.fhe_marginal_bytes.unwrap_or(f64::NAN);
    check(
        (ratio - 1.0).abs() < GC_RATIO_TOL && eps < EPS_OVER_S * s,
        format!(
            "GC 3 inferences / (3 x single) = {ratio:.4} (within {GC_RATIO_TOL}); FHE eps/S = {:.2}% < {}%",
            100.0 * eps / s,
            EPS_OVER_S * 100.0
        ),
    )
}

fn layer_sweep() -> Outcome {
    let mut cfg = config(Mode::Gc, None);
    cfg.layer_sweep = Some(4);
    let rep = run_scaling_sweep(&cfg, 4, 1).map_err(|e| e.to_string())?;
    let fit = rep.layer_fit.ok_or("no fit")?;
    let growing = rep
        .layers
        .windows(2)
        .all(|w| w[1].garbler_to_evaluator_bytes > w[0].garbler_to_evaluator_bytes);
    check(
        fit.r_squared > LAYER_R2 && growing,
        format!(
            "1..=4 layers, R^2 = {:.4} > {LAYER_R2}, slope {:.0} B/layer, increasing: {growing}",
            fit.r_squared, fit.slope
        ),
    )
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn orderings(dir: &Path) -> Outcome {
    let inputs = write_inputs(dir, "order.json", &random_inputs(3, -2.0, 2.0, 1009));
    let mut all: Vec<(Mode, Vec<MetricsRecord>)> = Vec::new();
    for mode in Mode::ALL {
        let mut cfg = config(mode, Some(inputs.clone()));
        cfg.transport = TransportSpec::Tcp("127.0.0.1:0".into());
        cfg.party_exe = Some(env!("CARGO_BIN_EXE_bench").into());
        all.push((mode, run_experiment(&cfg).map_err(|e| e.to_string())?));
    }
    let rtt: Vec<f64> = all
        .iter()
        .map(|(_, r)| mean(r.iter().map(|x| x.rtt_seconds)))
        .collect();
    let bytes: Vec<f64> = all
        .iter()
        .map(|(_, r)| mean(r.iter().map(|x| x.comm.total_bytes() as f64)))
        .collect();
    let mem: Vec<u64> = all
        .iter()
        .map(|(_, r)| {
            r.iter()
                .filter_map(|x| x.peak_memory.max_bytes())
                .max()
                .unwrap_or(0)
        })
        .collect();
    // Mode::ALL is plain, gc, fhe.
    let ok = rtt[0] < rtt[1]
        && rtt[1] < rtt[2]
        && bytes[0] < bytes[1]
        && bytes[1] < bytes[2]
        && mem[1] > 0
        && mem[1] < mem[2];
    check(
        ok,
        format!(
            "tcp, per-party memory; rtt plain {:.2e}s < gc {:.3}s < fhe {:.3}s; bytes {} < {} < {}; peak memory gc {} MB < fhe {} MB",
            rtt[0],
            rtt[1],
            rtt[2],
            bytes[0],
            bytes[1],
            bytes[2],
            mem[1] >> 20,
            mem[2] >> 20
        ),
    )
}

fn stress_deviation() -> Outcome {
    let worst = |mode| -> Result<f64, String> {
        let mut cfg = config(mode, None);
        cfg.reuse_keys = 10;
        let recs = run_experiment(&cfg).map_err(|e| e.to_string())?;
        Ok(recs.iter().map(|r| r.deviation.value()).fold(0.0, f64::max))
    };
    let gc = worst(Mode::Gc)?;
    let fhe = worst(Mode::Fhe)?;
    check(
        gc < fhe,
        format!("stress set worst-case deviation: gc {gc:.2}% < fhe {fhe:.2}%"),
    )
}

fn curves(dir: &Path) -> Outcome {
    let inputs = write_inputs(dir, "curve.json", &[[0.0, 0.0, 0.0]]);
    let recs = run_experiment(&config(Mode::Plain, Some(inputs))).map_err(|e| e.to_string())?;
    let out = dir.join("curve_report.csv");
    emit_report(&recs, ReportFormat::Csv, true, &out).map_err(|e| e.to_string())?;
    let read = |name: &str| -> Vec<[f64; 3]> {
        let mut rd = csv::Reader::from_path(dir.join(name)).unwrap();
        rd.records()
            .map(|r| {
                let r = r.unwrap();
                [0, 1, 2].map(|i| r[i].parse::<f64>().unwrap())
            })
            .collect()
    };
    let relu = read("curve_report_relu_curve.csv");
    let sig = read("curve_report_sigmoid_curve.csv");
    let mut worst = 0.0f64;
    for [x, e, a] in &relu {
        worst = worst.max((e - x.max(0.0)).abs()).max((a - x * x).abs());
    }
    for [x, e, a] in &sig {
        let exact = 1.0 / (1.0 + (-x).exp());
        let poly = 0.5 + 0.197 * x - 0.004 * x * x;
        worst = worst.max((e - exact).abs()).max((a - poly).abs());
    }
    check(
        !relu.is_empty() && !sig.is_empty() && worst <= CURVE_TOL,
        format!(
            "{} relu and {} sigmoid samples, max difference from formulas {worst:.1e} <= {CURVE_TOL}",
            relu.len(),
            sig.len()
        ),
    )
}

fn run(name: &str, f: impl FnOnce() -> Outcome + std::panic::UnwindSafe) -> bool {
    let t0 = Instant::now();
    let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = t0.elapsed().as_secs_f64();
    match outcome {
        Ok(d) => {
            println!("PASS  {name}: {d} [{secs:.1}s]");
            true
        }
        Err(d) => {
            println!("FAIL  {name}: {d} [{secs:.1}s]");
            false
        }
    }
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let results = [
        run("ckks encode/encrypt roundtrip", ckks_roundtrip),
        run("ckks homomorphism and NTT", homomorphism_and_ntt),
        run("ckks security budget table", budget_rows),
        run("fhe inference accuracy and shape", || fhe_accuracy(d)),
        run("gc inference exactness and shape", || gc_exactness(d)),
        run("garbling correctness and table size", garbling),
        run("gc and fhe multi-inference cost", || scaling(d)),
        run("gc layer sweep linearity", layer_sweep),
        run("plain < gc < fhe orderings", || orderings(d)),
        run("stress set deviation gc < fhe", stress_deviation),
        run("approximation curve data", || curves(d)),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
