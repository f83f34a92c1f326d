//! Sequential two-party execution of a plan.
//!
//! Message schedule for a plan with `E` evaluator inputs (`E >= 1`):
//!
//! ```text
//! for i in 0..E:
//!     E -> G  OT_REQ(i)
//!     G -> E  OT_RESP(i)   [+ INPUT_LABELS if i == 0]
//!                          [+ TABLES per step + OUTPUT_DECODE if i == E-1]
//! E -> G  REVEAL
//! ```
//!
//! giving `2E + 1` flights. Intermediate labels never cross the channel.

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use super::circuit::{from_bits, to_bits};
use super::fixed::{FixedError, FixedPointSpec};
use super::garble::{
    decode_outputs, evaluate_netlist, garble_netlist, ConstLabels, GarbleError, GarbledNetlist,
    GarblerState,
};
use super::label::WireLabel;
use super::plan::{NetlistCache, Operand, Plan};
use crate::ot::{self, Block, OtBackend, OtError};
use crate::transport::{Endpoint, TransportError};
use crate::wire::{kind, Reader, WireError, Writer};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Ot(#[from] OtError),
    #[error(transparent)]
    Garble(#[from] GarbleError),
    #[error(transparent)]
    Fixed(#[from] FixedError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("revealed label {index} matches neither output label")]
    LabelMismatch { index: usize },
    #[error("malformed session message: {0}")]
    Malformed(String),
    #[error("expected {expected} {what} values, got {got}")]
    InputCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

#[derive(Clone, Debug, Default)]
pub struct EvaluatorOptions {
    pub backend: OtBackend,
    /// Record every label the evaluator observes.
    pub record_labels: bool,
    /// Flip one bit of the first revealed label (integrity tests).
    #[doc(hidden)]
    pub tamper_reveal: bool,
}

#[derive(Clone, Debug)]
pub struct GarblerOutcome {
    pub outputs: Vec<i64>,
    pub delta: WireLabel,
    pub and_count: usize,
    pub table_bytes: usize,
    /// Garbled-table bytes of each layer, in plan order.
    pub layer_table_bytes: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct EvaluatorOutcome {
    pub outputs: Vec<i64>,
    pub observed_labels: Vec<WireLabel>,
}

fn word_labels<R: RngCore + CryptoRng>(width: usize, rng: &mut R) -> Vec<WireLabel> {
    (0..width).map(|_| WireLabel::random(rng)).collect()
}

fn signed(bits: &[bool], spec: FixedPointSpec) -> i64 {
    spec.wrap(from_bits(bits) as i128)
}

fn read_labels(r: &mut Reader<'_>, n: usize) -> Result<Vec<WireLabel>, WireError> {
    (0..n)
        .map(|_| r.array().map(WireLabel::from_bytes))
        .collect()
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= (b as u8) << (i % 8);
    }
    out
}

fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

fn output_width(plan: &Plan, op: &Operand, spec: FixedPointSpec) -> usize {
    match op {
        Operand::Step(i) => plan.steps[*i].kind.output_width(spec),
        _ => spec.width as usize,
    }
}

/// Model-owner side. `garbler_values` are the fixed-point garbler inputs in
/// plan order.
pub fn run_garbler<R: RngCore + CryptoRng>(
    ep: &mut Endpoint,
    plan: &Plan,
    garbler_values: &[i64],
    spec: FixedPointSpec,
    rng: &mut R,
) -> Result<GarblerOutcome, SessionError> {
    spec.check()?;
    if garbler_values.len() != plan.garbler_inputs {
        return Err(SessionError::InputCount {
            what: "garbler",
            expected: plan.garbler_inputs,
            got: garbler_values.len(),
        });
    }
    let w = spec.width as usize;
    // Nothing is generated before the evaluator's first request.
    let mut first_req = if plan.evaluator_inputs > 0 && !plan.steps.is_empty() {
        Some(ep.recv_kind(kind::OT_REQ)?)
    } else {
        None
    };
    let mut state = GarblerState::new(rng);
    let delta = state.delta();
    if plan.steps.is_empty() {
        return Ok(GarblerOutcome {
            outputs: Vec::new(),
            delta,
            and_count: 0,
            table_bytes: 0,
            layer_table_bytes: Vec::new(),
        });
    }

    let g_zero: Vec<Vec<WireLabel>> = (0..plan.garbler_inputs)
        .map(|_| word_labels(w, rng))
        .collect();
    let e_zero: Vec<Vec<WireLabel>> = (0..plan.evaluator_inputs)
        .map(|_| word_labels(w, rng))
        .collect();

    let mut cache = NetlistCache::new();
    let mut step_zero: Vec<Vec<WireLabel>> = Vec::with_capacity(plan.steps.len());
    let mut garbled: Vec<GarbledNetlist> = Vec::with_capacity(plan.steps.len());
    for step in &plan.steps {
        let inputs: Vec<WireLabel> = step
            .args
            .iter()
            .flat_map(|a| match *a {
                Operand::Garbler(i) => g_zero[i].clone(),
                Operand::Evaluator(i) => e_zero[i].clone(),
                Operand::Step(i) => step_zero[i].clone(),
            })
            .collect();
        let c = cache.get(step.kind, spec);
        let (gt, out) = garble_netlist(c, &mut state, &inputs)?;
        garbled.push(gt);
        step_zero.push(out);
    }
    let out_zero: Vec<Vec<WireLabel>> = plan
        .outputs
        .iter()
        .map(|o| match *o {
            Operand::Garbler(i) => g_zero[i].clone(),
            Operand::Evaluator(i) => e_zero[i].clone(),
            Operand::Step(i) => step_zero[i].clone(),
        })
        .collect();

    let mut input_msg = Writer::new();
    let consts = state.evaluator_consts();
    input_msg
        .bytes(&consts.zero.to_bytes())
        .bytes(&consts.one.to_bytes());
    for (zero, &v) in g_zero.iter().zip(garbler_values) {
        for (l, bit) in zero.iter().zip(to_bits(v as u128, w)) {
            input_msg.bytes(&state.encode(*l, bit).to_bytes());
        }
    }
    let mut input_msg = Some(input_msg.finish());

    let send_material = |ep: &mut Endpoint| -> Result<(), SessionError> {
        for (i, gt) in garbled.iter().enumerate() {
            let mut m = Writer::with_capacity(16 + gt.table_bytes());
            m.u32(i as u32)
                .u64(gt.gate_id_base)
                .u32(gt.and_count as u32);
            m.bytes(&gt.table_payload());
            ep.send(kind::TABLES, m.finish())?;
        }
        let bits: Vec<bool> = out_zero.iter().flatten().map(|l| l.permute_bit()).collect();
        ep.send(kind::OUTPUT_DECODE, pack_bits(&bits))?;
        Ok(())
    };

    let e = plan.evaluator_inputs;
    if e == 0 {
        ep.send(kind::INPUT_LABELS, input_msg.take().unwrap())?;
        send_material(ep)?;
    }
    for (i, zero) in e_zero.iter().enumerate() {
        let pairs: Vec<(Block, Block)> = zero
            .iter()
            .map(|l| (l.to_bytes(), (*l ^ delta).to_bytes()))
            .collect();
        let req = match first_req.take() {
            Some(r) => r,
            None => ep.recv_kind(kind::OT_REQ)?,
        };
        ep.send(kind::OT_RESP, ot::sender_respond(&pairs, &req, rng)?)?;
        if let Some(m) = input_msg.take() {
            ep.send(kind::INPUT_LABELS, m)?;
        }
        if i + 1 == e {
            send_material(ep)?;
        }
    }

    let reveal = ep.recv_kind(kind::REVEAL)?;
    let total_bits: usize = out_zero.iter().map(Vec::len).sum();
    let mut r = Reader::new(&reveal);
    let labels = read_labels(&mut r, total_bits)?;
    r.finish()?;
    let mut idx = 0;
    let mut outputs = Vec::with_capacity(out_zero.len());
    for zero in &out_zero {
        let mut bits = Vec::with_capacity(zero.len());
        for z in zero {
            bits.push(
                state
                    .decode(*z, labels[idx])
                    .ok_or(SessionError::LabelMismatch { index: idx })?,
            );
            idx += 1;
        }
        outputs.push(signed(&bits, spec));
    }

    let per_step: Vec<usize> = garbled.iter().map(GarbledNetlist::table_bytes).collect();
    let mut bounds = plan.layer_starts.clone();
    bounds.push(plan.steps.len());
    let layer_table_bytes = bounds
        .windows(2)
        .map(|b| per_step[b[0]..b[1]].iter().sum())
        .collect();
    Ok(GarblerOutcome {
        outputs,
        delta,
        and_count: garbled.iter().map(|g| g.and_count).sum(),
        table_bytes: per_step.iter().sum(),
        layer_table_bytes,
    })
}

/// Input-owner side. `evaluator_values` are the fixed-point inputs.
pub fn run_evaluator<R: RngCore + CryptoRng>(
    ep: &mut Endpoint,
    plan: &Plan,
    evaluator_values: &[i64],
    spec: FixedPointSpec,
    opts: &EvaluatorOptions,
    rng: &mut R,
) -> Result<EvaluatorOutcome, SessionError> {
    spec.check()?;
    if evaluator_values.len() != plan.evaluator_inputs {
        return Err(SessionError::InputCount {
            what: "evaluator",
            expected: plan.evaluator_inputs,
            got: evaluator_values.len(),
        });
    }
    if plan.steps.is_empty() {
        return Ok(EvaluatorOutcome {
            outputs: Vec::new(),
            observed_labels: Vec::new(),
        });
    }
    let w = spec.width as usize;
    let mut trace = Vec::new();

    let mut e_labels: Vec<Vec<WireLabel>> = Vec::with_capacity(evaluator_values.len());
    let mut input_msg = None;
    for &v in evaluator_values {
        let choices = to_bits(v as u128, w);
        let (req, st) = ot::receiver_request(&choices, opts.backend, rng);
        ep.send(kind::OT_REQ, req)?;
        let resp = ep.recv_kind(kind::OT_RESP)?;
        let got = ot::receiver_finish(st, &resp)?;
        e_labels.push(got.into_iter().map(WireLabel::from_bytes).collect());
        if input_msg.is_none() {
            input_msg = Some(ep.recv_kind(kind::INPUT_LABELS)?);
        }
    }
    let input_msg = match input_msg {
        Some(m) => m,
        None => ep.recv_kind(kind::INPUT_LABELS)?,
    };
    let mut r = Reader::new(&input_msg);
    let c = read_labels(&mut r, 2)?;
    let consts = ConstLabels {
        zero: c[0],
        one: c[1],
    };
    let g_labels: Vec<Vec<WireLabel>> = (0..plan.garbler_inputs)
        .map(|_| read_labels(&mut r, w))
        .collect::<Result<_, _>>()?;
    r.finish()?;

    let mut tables = Vec::with_capacity(plan.steps.len());
    for i in 0..plan.steps.len() {
        let msg = ep.recv_kind(kind::TABLES)?;
        let mut r = Reader::new(&msg);
        let idx = r.u32()? as usize;
        let base = r.u64()?;
        let and_count = r.u32()? as usize;
        if idx != i {
            return Err(SessionError::Malformed(format!("table {idx} out of order")));
        }
        let rows = r.take(and_count * 32)?;
        r.finish()?;
        let gt = GarbledNetlist::from_table_payload(base, rows)
            .ok_or_else(|| SessionError::Malformed("table length".into()))?;
        tables.push(gt);
    }
    let total_bits: usize = plan
        .outputs
        .iter()
        .map(|o| output_width(plan, o, spec))
        .sum();
    let decode_msg = ep.recv_kind(kind::OUTPUT_DECODE)?;
    if decode_msg.len() != total_bits.div_ceil(8) {
        return Err(SessionError::Malformed("decode bit count".into()));
    }
    let decode_bits = unpack_bits(&decode_msg, total_bits);

    if opts.record_labels {
        trace.extend(e_labels.iter().flatten());
        trace.extend(g_labels.iter().flatten());
        trace.push(consts.zero);
        trace.push(consts.one);
    }

    let mut cache = NetlistCache::new();
    let mut step_labels: Vec<Vec<WireLabel>> = Vec::with_capacity(plan.steps.len());
    for (step, gt) in plan.steps.iter().zip(&tables) {
        let inputs: Vec<WireLabel> = step
            .args
            .iter()
            .flat_map(|a| match *a {
                Operand::Garbler(i) => g_labels[i].clone(),
                Operand::Evaluator(i) => e_labels[i].clone(),
                Operand::Step(i) => step_labels[i].clone(),
            })
            .collect();
        let c = cache.get(step.kind, spec);
        let t = if opts.record_labels {
            Some(&mut trace)
        } else {
            None
        };
        step_labels.push(evaluate_netlist(c, gt, &inputs, consts, t)?);
    }
    let out_labels: Vec<WireLabel> = plan
        .outputs
        .iter()
        .flat_map(|o| match *o {
            Operand::Garbler(i) => g_labels[i].clone(),
            Operand::Evaluator(i) => e_labels[i].clone(),
            Operand::Step(i) => step_labels[i].clone(),
        })
        .collect();
    let bits = decode_outputs(&out_labels, &decode_bits);
    let mut outputs = Vec::new();
    let mut pos = 0;
    for o in &plan.outputs {
        let n = output_width(plan, o, spec);
        outputs.push(signed(&bits[pos..pos + n], spec));
        pos += n;
    }

    let mut reveal = Writer::with_capacity(out_labels.len() * 16);
    for (i, l) in out_labels.iter().enumerate() {
        let l = if opts.tamper_reveal && i == 0 {
            WireLabel(l.0 ^ (1 << 7))
        } else {
            *l
        };
        reveal.bytes(&l.to_bytes());
    }
    ep.send(kind::REVEAL, reveal.finish())?;

    Ok(EvaluatorOutcome {
        outputs,
        observed_labels: trace,
    })
}
