//! Free-XOR, half-gates garbling with point-and-permute.

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use super::circuit::{BooleanCircuit, GateKind};
use super::label::{GateHash, WireLabel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GarbleError {
    #[error("expected {expected} input labels, got {got}")]
    MissingInputLabel { expected: usize, got: usize },
    #[error("garbled table has {got} rows, circuit needs {expected}")]
    MalformedTable { expected: usize, got: usize },
}

/// Labels standing for constant wires. On the garbler side these are the
/// zero-labels; on the evaluator side the labels of the constant values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConstLabels {
    pub zero: WireLabel,
    pub one: WireLabel,
}

pub struct GarblerState {
    pub(crate) delta: WireLabel,
    gate_counter: u64,
    hash: GateHash,
    consts: ConstLabels,
}

impl GarblerState {
    pub fn new<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        Self {
            delta: WireLabel::random_delta(rng),
            gate_counter: 0,
            hash: GateHash::new(),
            consts: ConstLabels {
                zero: WireLabel::random(rng),
                one: WireLabel::random(rng),
            },
        }
    }

    pub fn delta(&self) -> WireLabel {
        self.delta
    }

    pub fn gate_counter(&self) -> u64 {
        self.gate_counter
    }

    /// Fresh zero-label for an input wire.
    pub fn fresh_label<R: RngCore + CryptoRng>(&self, rng: &mut R) -> WireLabel {
        WireLabel::random(rng)
    }

    /// Label encoding `bit` on a wire with zero-label `zero`.
    pub fn encode(&self, zero: WireLabel, bit: bool) -> WireLabel {
        zero ^ self.delta.select(bit)
    }

    /// What the evaluator must hold for the constant wires.
    pub fn evaluator_consts(&self) -> ConstLabels {
        ConstLabels {
            zero: self.consts.zero,
            one: self.consts.one ^ self.delta,
        }
    }

    /// `Some(bit)` when `label` is one of the two labels of `zero`.
    pub fn decode(&self, zero: WireLabel, label: WireLabel) -> Option<bool> {
        if label == zero {
            Some(false)
        } else if label == zero ^ self.delta {
            Some(true)
        } else {
            None
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GarbledNetlist {
    pub gate_id_base: u64,
    pub and_count: usize,
    /// Two rows per AND gate, in gate order.
    pub tables: Vec<[WireLabel; 2]>,
    /// Permute bits of the output zero-labels.
    pub decode_bits: Vec<bool>,
}

impl GarbledNetlist {
    pub fn table_bytes(&self) -> usize {
        self.tables.len() * 32
    }

    pub fn table_payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.table_bytes());
        for [a, b] in &self.tables {
            out.extend_from_slice(&a.to_bytes());
            out.extend_from_slice(&b.to_bytes());
        }
        out
    }

    pub fn from_table_payload(gate_id_base: u64, bytes: &[u8]) -> Option<Self> {
        if bytes.len() % 32 != 0 {
            return None;
        }
        let tables: Vec<[WireLabel; 2]> = bytes
            .chunks_exact(32)
            .map(|c| {
                [
                    WireLabel::from_bytes(c[..16].try_into().unwrap()),
                    WireLabel::from_bytes(c[16..].try_into().unwrap()),
                ]
            })
            .collect();
        Some(Self {
            gate_id_base,
            and_count: tables.len(),
            tables,
            decode_bits: Vec::new(),
        })
    }
}

/// Garbles `c` given the zero-labels of its input wires, returning the
/// tables and the output zero-labels.
pub fn garble_netlist(
    c: &BooleanCircuit,
    state: &mut GarblerState,
    input_zero: &[WireLabel],
) -> Result<(GarbledNetlist, Vec<WireLabel>), GarbleError> {
    let n_in: usize = c.inputs.iter().map(Vec::len).sum();
    if input_zero.len() != n_in {
        return Err(GarbleError::MissingInputLabel {
            expected: n_in,
            got: input_zero.len(),
        });
    }
    let delta = state.delta;
    let mut w = vec![WireLabel::ZERO; c.wire_count as usize];
    for (id, &l) in c.input_wires().zip(input_zero) {
        w[id as usize] = l;
    }
    let base = state.gate_counter;
    let mut tables = Vec::new();
    let mut and_index = base;
    for g in &c.gates {
        let out = match g.kind {
            GateKind::Xor => w[g.a as usize] ^ w[g.b as usize],
            GateKind::Not => w[g.a as usize] ^ delta,
            GateKind::Const0 => state.consts.zero,
            GateKind::Const1 => state.consts.one,
            GateKind::And => {
                let a0 = w[g.a as usize];
                let b0 = w[g.b as usize];
                let a1 = a0 ^ delta;
                let b1 = b0 ^ delta;
                let pa = a0.permute_bit();
                let pb = b0.permute_bit();
                let j = 2 * and_index;
                let k = j + 1;
                and_index += 1;
                let ha0 = state.hash.hash(a0, j);
                let ha1 = state.hash.hash(a1, j);
                let hb0 = state.hash.hash(b0, k);
                let hb1 = state.hash.hash(b1, k);
                let tg = ha0 ^ ha1 ^ delta.select(pb);
                let wg0 = ha0 ^ tg.select(pa);
                let te = hb0 ^ hb1 ^ a0;
                let we0 = hb0 ^ (te ^ a0).select(pb);
                tables.push([tg, te]);
                wg0 ^ we0
            }
        };
        w[g.out as usize] = out;
    }
    state.gate_counter = and_index;
    let out_zero: Vec<WireLabel> = c.outputs.iter().map(|&o| w[o as usize]).collect();
    let decode_bits = out_zero.iter().map(|l| l.permute_bit()).collect();
    Ok((
        GarbledNetlist {
            gate_id_base: base,
            and_count: tables.len(),
            tables,
            decode_bits,
        },
        out_zero,
    ))
}

/// Evaluates with one active label per input wire. When `trace` is given,
/// every label the evaluator sees is appended to it.
pub fn evaluate_netlist(
    c: &BooleanCircuit,
    gt: &GarbledNetlist,
    inputs: &[WireLabel],
    consts: ConstLabels,
    mut trace: Option<&mut Vec<WireLabel>>,
) -> Result<Vec<WireLabel>, GarbleError> {
    let n_in: usize = c.inputs.iter().map(Vec::len).sum();
    if inputs.len() != n_in {
        return Err(GarbleError::MissingInputLabel {
            expected: n_in,
            got: inputs.len(),
        });
    }
    let and_count = c.gates.iter().filter(|g| g.kind == GateKind::And).count();
    if gt.tables.len() != and_count {
        return Err(GarbleError::MalformedTable {
            expected: and_count,
            got: gt.tables.len(),
        });
    }
    let hash = GateHash::new();
    let mut w = vec![WireLabel::ZERO; c.wire_count as usize];
    for (id, &l) in c.input_wires().zip(inputs) {
        w[id as usize] = l;
    }
    if let Some(t) = trace.as_deref_mut() {
        t.extend_from_slice(inputs);
    }
    let mut rows = gt.tables.iter();
    let mut and_index = gt.gate_id_base;
    for g in &c.gates {
        let out = match g.kind {
            GateKind::Xor => w[g.a as usize] ^ w[g.b as usize],
            GateKind::Not => w[g.a as usize],
            GateKind::Const0 => consts.zero,
            GateKind::Const1 => consts.one,
            GateKind::And => {
                let a = w[g.a as usize];
                let b = w[g.b as usize];
                let [tg, te] = *rows.next().expect("row count checked");
                let j = 2 * and_index;
                and_index += 1;
                let wg = hash.hash(a, j) ^ tg.select(a.permute_bit());
                let we = hash.hash(b, j + 1) ^ (te ^ a).select(b.permute_bit());
                wg ^ we
            }
        };
        w[g.out as usize] = out;
        if let Some(t) = trace.as_deref_mut() {
            t.push(out);
        }
    }
    Ok(c.outputs.iter().map(|&o| w[o as usize]).collect())
}

/// Evaluator-side decoding with the garbler's decode bits.
pub fn decode_outputs(labels: &[WireLabel], decode_bits: &[bool]) -> Vec<bool> {
    labels
        .iter()
        .zip(decode_bits)
        .map(|(l, &d)| l.permute_bit() ^ d)
        .collect()
}
