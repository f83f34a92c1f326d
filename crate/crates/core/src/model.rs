//! The two-layer network `y = sigmoid(W2 * relu(W1 x + b1) + b2)` and its
//! three reference evaluations.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gc::fixed::{self, FixedError, FixedPointSpec};

pub const INPUT_DIM: usize = 3;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model parse error: {0}")]
    ParseError(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("non-finite parameter")]
    NonFinite,
    #[error(transparent)]
    Fixed(#[from] FixedError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReluMode {
    Exact,
    Square,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmoidMode {
    Exact,
    Poly2,
}

/// Which activation approximations a pipeline uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub relu: ReluMode,
    pub sigmoid: SigmoidMode,
}

impl ActivationSpec {
    pub const PLAIN: Self = Self {
        relu: ReluMode::Exact,
        sigmoid: SigmoidMode::Exact,
    };
    pub const FHE: Self = Self {
        relu: ReluMode::Square,
        sigmoid: SigmoidMode::Poly2,
    };
    pub const GC: Self = Self {
        relu: ReluMode::Exact,
        sigmoid: SigmoidMode::Poly2,
    };

    pub fn relu(&self, z: f64) -> f64 {
        match self.relu {
            ReluMode::Exact => z.max(0.0),
            ReluMode::Square => z * z,
        }
    }

    pub fn sigmoid(&self, z: f64) -> f64 {
        match self.sigmoid {
            SigmoidMode::Exact => sigmoid_exact(z),
            SigmoidMode::Poly2 => sigmoid_poly2(z),
        }
    }
}

pub fn sigmoid_exact(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn sigmoid_poly2(z: f64) -> f64 {
    0.5 + 0.197 * z - 0.004 * z * z
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub h: usize,
    #[serde(rename = "W1")]
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    #[serde(rename = "W2")]
    pub w2: Vec<Vec<f64>>,
    pub b2: f64,
}

impl ModelParams {
    pub fn new(w1: Vec<Vec<f64>>, b1: Vec<f64>, w2: Vec<f64>, b2: f64) -> Result<Self, ModelError> {
        let m = Self {
            d: w1.first().map_or(0, Vec::len),
            h: w1.len(),
            w1,
            b1,
            w2: vec![w2],
            b2,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn zeros(h: usize) -> Self {
        Self {
            d: INPUT_DIM,
            h,
            w1: vec![vec![0.0; INPUT_DIM]; h],
            b1: vec![0.0; h],
            w2: vec![vec![0.0; h]],
            b2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.d != INPUT_DIM {
            return Err(ModelError::DimMismatch(format!(
                "d = {}, expected {INPUT_DIM}",
                self.d
            )));
        }
        if self.h == 0 || self.w1.len() != self.h {
            return Err(ModelError::DimMismatch(format!(
                "W1 has {} rows, h = {}",
                self.w1.len(),
                self.h
            )));
        }
        if let Some(row) = self.w1.iter().find(|r| r.len() != self.d) {
            return Err(ModelError::DimMismatch(format!(
                "W1 row has {} columns, expected {}",
                row.len(),
                self.d
            )));
        }
        if self.b1.len() != self.h {
            return Err(ModelError::DimMismatch(format!(
                "b1 has {} entries",
                self.b1.len()
            )));
        }
        if self.w2.len() != 1 || self.w2[0].len() != self.h {
            return Err(ModelError::DimMismatch("W2 must be 1 x h".into()));
        }
        let all = self
            .w1
            .iter()
            .flatten()
            .chain(&self.b1)
            .chain(&self.w2[0])
            .chain(std::iter::once(&self.b2));
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        Ok(())
    }

    pub fn w2_row(&self) -> &[f64] {
        &self.w2[0]
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let m: Self = serde_json::from_str(s).map_err(|e| ModelError::ParseError(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Hidden pre-activations `W1 x + b1`.
    pub fn hidden_pre(&self, x: &[f64; 3]) -> Vec<f64> {
        self.w1
            .iter()
            .zip(&self.b1)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    pub fn infer_with(&self, x: &[f64; 3], act: ActivationSpec) -> f64 {
        let h: Vec<f64> = self
            .hidden_pre(x)
            .into_iter()
            .map(|z| act.relu(z))
            .collect();
        let z = self
            .w2_row()
            .iter()
            .zip(&h)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.b2;
        act.sigmoid(z)
    }

    pub fn as_stack(&self) -> LayerStack {
        LayerStack {
            layers: vec![
                Dense {
                    weights: self.w1.clone(),
                    bias: self.b1.clone(),
                },
                Dense {
                    weights: self.w2.clone(),
                    bias: vec![self.b2],
                },
            ],
        }
    }
}

pub fn infer_plain(model: &ModelParams, x: &[f64; 3]) -> f64 {
    model.infer_with(x, ActivationSpec::PLAIN)
}

pub fn infer_fhe_approx(model: &ModelParams, x: &[f64; 3]) -> f64 {
    model.infer_with(x, ActivationSpec::FHE)
}

/// Bit-exact reference for the garbled pipeline.
pub fn infer_gc_fixed(
    model: &ModelParams,
    x: &[f64; 3],
    spec: FixedPointSpec,
) -> Result<f64, ModelError> {
    let y = model.as_stack().infer_fixed(x, spec)?;
    Ok(fixed::fixed_decode(y, spec))
}

/// One fully connected layer: `rows x cols` weights plus `rows` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn rows(&self) -> usize {
        self.weights.len()
    }

    pub fn cols(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }
}

/// Dense layers with ReLU between them and the degree-2 sigmoid after the
/// last (single-output) layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub layers: Vec<Dense>,
}

impl LayerStack {
    /// Deterministic stack of `depth` layers: input 3, hidden width `h`,
    /// output 1, weights in `[-1, 1]` rounded to three decimals.
    pub fn seeded(depth: usize, h: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| (rng.gen_range(-1.0f64..=1.0) * 1000.0).round() / 1000.0)
                .collect()
        };
        let layers = (0..depth)
            .map(|i| {
                let cols = if i == 0 { INPUT_DIM } else { h };
                let rows = if i + 1 == depth { 1 } else { h };
                Dense {
                    weights: (0..rows).map(|_| draw(cols)).collect(),
                    bias: draw(rows),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn infer_fixed(&self, x: &[f64], spec: FixedPointSpec) -> Result<i64, ModelError> {
        spec.check()?;
        let mut cur = x
            .iter()
            .map(|&v| fixed::fixed_encode(v, spec))
            .collect::<Result<Vec<_>, _>>()?;
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.cols() != cur.len() {
                return Err(ModelError::DimMismatch(format!(
                    "layer {i} expects {} inputs, got {}",
                    layer.cols(),
                    cur.len()
                )));
            }
            let mut next = Vec::with_capacity(layer.rows());
            for (row, &b) in layer.weights.iter().zip(&layer.bias) {
                let mut acc: Option<i64> = None;
                for (&w, &v) in row.iter().zip(&cur) {
                    let p = fixed::mul(spec, fixed::fixed_encode(w, spec)?, v);
                    acc = Some(acc.map_or(p, |a| fixed::add(spec, a, p)));
                }
                let z = fixed::add(spec, acc.unwrap_or(0), fixed::fixed_encode(b, spec)?);
                next.push(if i == last {
                    fixed::sigmoid(spec, z)
                } else {
                    fixed::relu(spec, z)
                });
            }
            cur = next;
        }
        if cur.len() != 1 {
            return Err(ModelError::DimMismatch(
                "last layer must have one output".into(),
            ));
        }
        Ok(cur[0])
    }
}

/// Absolute percentage deviation, or the absolute difference when the
/// reference is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Deviation {
    Percent(f64),
    /// `y_plain == 0`: absolute difference reported instead of a percentage.
    Absolute(f64),
}

impl Deviation {
    pub fn value(&self) -> f64 {
        match *self {
            Deviation::Percent(v) | Deviation::Absolute(v) => v,
        }
    }

    pub fn is_sentinel(&self) -> bool {
        matches!(self, Deviation::Absolute(_))
    }
}

pub fn deviation(y_mode: f64, y_plain: f64) -> Deviation {
    if y_plain == 0.0 {
        Deviation::Absolute((y_mode - y_plain).abs())
    } else {
        Deviation::Percent(100.0 * (y_mode - y_plain).abs() / y_plain.abs())
    }
}

pub fn load_inputs(path: impl AsRef<Path>) -> Result<Vec<[f64; 3]>, ModelError> {
    parse_inputs(&std::fs::read_to_string(path)?)
}

pub fn parse_inputs(s: &str) -> Result<Vec<[f64; 3]>, ModelError> {
    let v: Vec<Vec<f64>> =
        serde_json::from_str(s).map_err(|e| ModelError::ParseError(e.to_string()))?;
    v.into_iter()
        .map(|row| {
            <[f64; 3]>::try_from(row.as_slice()).map_err(|_| {
                ModelError::DimMismatch(format!("input has {} entries, expected 3", row.len()))
            })
        })
        .collect()
}

pub const CANONICAL_MODEL_JSON: &str = include_str!("../data/canonical_model.json");
pub const STRESS_INPUTS_JSON: &str = include_str!("../data/stress_inputs.json");

/// The committed h=4 reference model.
pub fn canonical_model() -> ModelParams {
    ModelParams::from_json(CANONICAL_MODEL_JSON).expect("committed model is valid")
}

/// The committed stress-test input vectors.
pub fn stress_inputs() -> Vec<[f64; 3]> {
    parse_inputs(STRESS_INPUTS_JSON).expect("committed inputs are valid")
}
