//! Ordered netlist plans for dense layers.
//!
//! A plan is a straight-line program: each step runs one netlist on operands
//! that are garbler inputs, evaluator inputs or earlier step results. Labels
//! of step results stay with the evaluator and feed later steps directly.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::circuit::{from_bits, to_bits, BooleanCircuit};
use super::fixed::{self, FixedError, FixedPointSpec};
use super::netlists::{build_netlist, NetlistKind};
use crate::model::LayerStack;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operand {
    Garbler(usize),
    Evaluator(usize),
    Step(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub kind: NetlistKind,
    pub args: Vec<Operand>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
    pub garbler_inputs: usize,
    pub evaluator_inputs: usize,
    /// Operands holding the plan's results.
    pub outputs: Vec<Operand>,
    /// Index of the first step of each layer.
    pub layer_starts: Vec<usize>,
}

impl Plan {
    fn push(&mut self, kind: NetlistKind, args: Vec<Operand>) -> Operand {
        self.steps.push(PlanStep { kind, args });
        Operand::Step(self.steps.len() - 1)
    }

    /// Appends one dense layer. Weights (row-major) then biases are taken as
    /// the next garbler inputs.
    pub fn push_layer(
        &mut self,
        inputs: &[Operand],
        rows: usize,
        with_bias: bool,
        activation: Option<NetlistKind>,
    ) -> Vec<Operand> {
        self.layer_starts.push(self.steps.len());
        let cols = inputs.len();
        let w_base = self.garbler_inputs;
        self.garbler_inputs += rows * cols;
        let b_base = self.garbler_inputs;
        if with_bias {
            self.garbler_inputs += rows;
        }
        let mut sums = Vec::with_capacity(rows);
        for r in 0..rows {
            let mut acc: Option<Operand> = None;
            for (c, &x) in inputs.iter().enumerate() {
                let wide = self.push(
                    NetlistKind::Mul,
                    vec![Operand::Garbler(w_base + r * cols + c), x],
                );
                let p = self.push(NetlistKind::DivScale, vec![wide]);
                acc = Some(match acc {
                    None => p,
                    Some(a) => self.push(NetlistKind::Add, vec![a, p]),
                });
            }
            sums.push(acc.expect("layer has at least one column"));
        }
        let biased: Vec<Operand> = if with_bias {
            sums.into_iter()
                .enumerate()
                .map(|(r, s)| self.push(NetlistKind::Add, vec![s, Operand::Garbler(b_base + r)]))
                .collect()
        } else {
            sums
        };
        match activation {
            Some(kind) => biased
                .into_iter()
                .map(|v| self.push(kind, vec![v]))
                .collect(),
            None => biased,
        }
    }

    /// Plan for a whole stack: ReLU after hidden layers, sigmoid at the end.
    pub fn for_stack(stack: &LayerStack) -> Plan {
        Self::from_shape(&Self::stack_shape(stack))
    }

    /// Shapes `(rows, cols)` of the layers, enough to rebuild the plan.
    pub fn stack_shape(stack: &LayerStack) -> Vec<(usize, usize)> {
        stack.layers.iter().map(|l| (l.rows(), l.cols())).collect()
    }

    pub fn from_shape(shape: &[(usize, usize)]) -> Plan {
        let d = shape.first().map_or(0, |s| s.1);
        let mut plan = Plan {
            evaluator_inputs: d,
            ..Default::default()
        };
        let mut cur: Vec<Operand> = (0..d).map(Operand::Evaluator).collect();
        for (i, &(rows, _)) in shape.iter().enumerate() {
            let act = if i + 1 == shape.len() {
                NetlistKind::Poly2Sigmoid
            } else {
                NetlistKind::Relu
            };
            cur = plan.push_layer(&cur, rows, true, Some(act));
        }
        plan.outputs = cur;
        plan
    }

    /// Garbler input values in plan order for `stack`.
    pub fn garbler_values(
        stack: &LayerStack,
        spec: FixedPointSpec,
    ) -> Result<Vec<i64>, FixedError> {
        let mut out = Vec::new();
        for layer in &stack.layers {
            for row in &layer.weights {
                for &w in row {
                    out.push(fixed::fixed_encode(w, spec)?);
                }
            }
            for &b in &layer.bias {
                out.push(fixed::fixed_encode(b, spec)?);
            }
        }
        Ok(out)
    }

    pub fn kind_counts(&self) -> HashMap<NetlistKind, usize> {
        let mut m = HashMap::new();
        for s in &self.steps {
            *m.entry(s.kind).or_insert(0) += 1;
        }
        m
    }

    /// Evaluates every step gate by gate on plain bits and returns the
    /// output words as raw (unsigned) bit patterns.
    pub fn eval_plain(
        &self,
        garbler: &[i64],
        evaluator: &[i64],
        spec: FixedPointSpec,
        netlists: &mut NetlistCache,
    ) -> Vec<u128> {
        let w = spec.width as usize;
        let mut results: Vec<Vec<bool>> = Vec::with_capacity(self.steps.len());
        let fetch = |op: &Operand, results: &Vec<Vec<bool>>| -> Vec<bool> {
            match *op {
                Operand::Garbler(i) => to_bits(garbler[i] as u128, w),
                Operand::Evaluator(i) => to_bits(evaluator[i] as u128, w),
                Operand::Step(i) => results[i].clone(),
            }
        };
        for step in &self.steps {
            let c = netlists.get(step.kind, spec);
            let bits: Vec<bool> = step.args.iter().flat_map(|a| fetch(a, &results)).collect();
            results.push(c.eval(&bits).expect("plan operands match netlist widths"));
        }
        self.outputs
            .iter()
            .map(|o| from_bits(&fetch(o, &results)))
            .collect()
    }

    /// Total AND gates, hence garbled-table bytes / 32.
    pub fn and_count(&self, spec: FixedPointSpec, netlists: &mut NetlistCache) -> usize {
        self.steps
            .iter()
            .map(|s| netlists.get(s.kind, spec).stats().and_count)
            .sum()
    }
}

/// Layer plan with the layer inputs as evaluator inputs.
pub fn compose_layer(
    rows: usize,
    cols: usize,
    with_bias: bool,
    activation: Option<NetlistKind>,
) -> Plan {
    let mut plan = Plan {
        evaluator_inputs: cols,
        ..Default::default()
    };
    let inputs: Vec<Operand> = (0..cols).map(Operand::Evaluator).collect();
    plan.outputs = plan.push_layer(&inputs, rows, with_bias, activation);
    plan
}

/// Builds each netlist once per kind and spec.
#[derive(Default)]
pub struct NetlistCache {
    map: HashMap<(NetlistKind, FixedPointSpec), BooleanCircuit>,
}

impl NetlistCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&mut self, kind: NetlistKind, spec: FixedPointSpec) -> &BooleanCircuit {
        self.map
            .entry((kind, spec))
            .or_insert_with(|| build_netlist(kind, spec).expect("validated spec"))
    }
}
