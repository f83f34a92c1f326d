mod common;

use secinfer::gc::{compose_layer, FixedPointSpec, NetlistCache};
use secinfer::model::{
    canonical_model, deviation, infer_fhe_approx, infer_gc_fixed, infer_plain, parse_inputs,
    stress_inputs, Deviation, ModelError, ModelParams,
};

use common::{approx_forward, fixed_forward, plain_forward, random_inputs};

const S: FixedPointSpec = FixedPointSpec {
    width: 64,
    scale: 1000,
};

fn unit_model(first: f64) -> ModelParams {
    ModelParams::new(vec![vec![first, 0.0, 0.0]], vec![0.0], vec![1.0], 0.0).unwrap()
}

#[test]
fn zero_model_outputs_one_half_everywhere() {
    let m = ModelParams::zeros(4);
    let x = [0.3, -2.0, 1.0];
    assert_eq!(infer_plain(&m, &x), 0.5);
    assert_eq!(infer_fhe_approx(&m, &x), 0.5);
    assert_eq!(infer_gc_fixed(&m, &x, S).unwrap(), 0.5);
}

#[test]
fn activations_on_a_negative_pre_activation() {
    let m = unit_model(1.0);
    assert_eq!(infer_plain(&m, &[-5.0, 1.0, 1.0]), 0.5);
    assert_eq!(
        infer_fhe_approx(&m, &[-2.0, 0.0, 0.0]),
        0.5 + 0.197 * 4.0 - 0.004 * 16.0
    );
}

#[test]
fn canonical_model_golden_values() {
    let m = canonical_model();
    let x = [1.0, -1.0, 0.5];
    // Hidden pre-activations -0.719, 0.2225, 0.3015, 1.163; output
    // pre-activation 1.393531 (exact ReLU) or 1.41965364 (squared).
    assert!((infer_plain(&m, &x) - 0.801155349).abs() < 1e-8);
    assert!((infer_fhe_approx(&m, &x) - 0.771610102).abs() < 1e-8);
    // Fixed point: hidden 0, 222, 302, 1163; output pre-activation 1392.
    assert_eq!(infer_gc_fixed(&m, &x, S).unwrap(), 0.767);
}

#[test]
fn references_match_independent_oracles() {
    let m = canonical_model();
    for x in random_inputs(200, -3.0, 3.0, 81) {
        assert!((infer_plain(&m, &x) - plain_forward(&m, &x)).abs() < 1e-12);
        assert!((infer_fhe_approx(&m, &x) - approx_forward(&m, &x)).abs() < 1e-12);
        assert_eq!(
            infer_gc_fixed(&m, &x, S).unwrap(),
            fixed_forward(&m, &x) as f64 / 1000.0
        );
    }
}

#[test]
fn fixed_point_pass_through() {
    let plan = compose_layer(1, 3, true, None);
    let out = plan.eval_plain(&[1000, 0, 0, 0], &[1234, 0, 0], S, &mut NetlistCache::new());
    assert_eq!(out[0] as i64, 1234);
}

#[test]
fn deviation_arithmetic() {
    assert_eq!(deviation(0.42, 0.42), Deviation::Percent(0.0));
    let d = deviation(0.6, 0.5);
    assert!((d.value() - 20.0).abs() < 1e-12);
    assert!(!d.is_sentinel());
    let z = deviation(0.25, 0.0);
    assert!(z.is_sentinel());
    assert_eq!(z.value(), 0.25);
}

#[test]
fn json_roundtrip_and_validation() {
    let m = canonical_model();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    m.save(&path).unwrap();
    let back = ModelParams::load(&path).unwrap();
    assert_eq!(back, m);
    for (a, b) in back.w1.iter().flatten().zip(m.w1.iter().flatten()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }

    let two_cols = r#"{"d":2,"h":1,"W1":[[1.0,2.0]],"b1":[0.0],"W2":[[1.0]],"b2":0.0}"#;
    assert!(matches!(
        ModelParams::from_json(two_cols),
        Err(ModelError::DimMismatch(_))
    ));
    let no_b2 = r#"{"d":3,"h":1,"W1":[[1.0,2.0,3.0]],"b1":[0.0],"W2":[[1.0]]}"#;
    assert!(matches!(
        ModelParams::from_json(no_b2),
        Err(ModelError::ParseError(_))
    ));
    assert!(matches!(
        ModelParams::new(vec![vec![f64::NAN, 0.0, 0.0]], vec![0.0], vec![1.0], 0.0),
        Err(ModelError::NonFinite)
    ));
}

#[test]
fn input_files() {
    assert_eq!(parse_inputs("[[1, 2, 3], [0.5, -1, 2]]").unwrap().len(), 2);
    assert!(matches!(
        parse_inputs("[[1, 2]]"),
        Err(ModelError::DimMismatch(_))
    ));
    assert!(matches!(
        parse_inputs("nope"),
        Err(ModelError::ParseError(_))
    ));
    let stress = stress_inputs();
    assert!(stress.len() >= 10);
    assert!(stress.iter().flatten().all(|v| v.abs() <= 3.0));
}
