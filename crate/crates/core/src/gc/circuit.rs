//! Gate-level IR and a constant-folding builder with word-level helpers.
//!
//! Words are little-endian bit vectors (`word[0]` is the least significant
//! bit). The builder folds constants and trivial identities, so building
//! with a constant operand only emits the gates that still depend on wires.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub type WireId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Xor,
    And,
    Not,
    Const0,
    Const1,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Xor => "XOR",
            GateKind::And => "AND",
            GateKind::Not => "NOT",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Xor | GateKind::And => 2,
            GateKind::Not => 1,
            GateKind::Const0 | GateKind::Const1 => 0,
        }
    }
}

/// Unused inputs are zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub a: WireId,
    pub b: WireId,
    pub out: WireId,
}

/// Topologically ordered netlist. Inputs are grouped into operand buses;
/// the caller decides which party supplies each bus.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BooleanCircuit {
    pub wire_count: u32,
    pub gates: Vec<Gate>,
    pub inputs: Vec<Vec<WireId>>,
    pub outputs: Vec<WireId>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub and_count: usize,
    pub xor_count: usize,
    pub not_count: usize,
    pub const_count: usize,
    pub total_gates: usize,
    pub input_bits: usize,
    pub output_bits: usize,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("gate {gate} reads undriven wire {wire}")]
    UndrivenInput { gate: usize, wire: WireId },
    #[error("wire {0} driven twice")]
    DoubleDriven(WireId),
    #[error("output wire {0} is not driven")]
    UndrivenOutput(WireId),
    #[error("wire {0} outside the circuit")]
    OutOfRange(WireId),
    #[error("expected {expected} input bits, got {got}")]
    InputWidth { expected: usize, got: usize },
}

impl BooleanCircuit {
    pub fn stats(&self) -> CircuitStats {
        let mut s = CircuitStats {
            total_gates: self.gates.len(),
            input_bits: self.inputs.iter().map(Vec::len).sum(),
            output_bits: self.outputs.len(),
            ..Default::default()
        };
        for g in &self.gates {
            match g.kind {
                GateKind::And => s.and_count += 1,
                GateKind::Xor => s.xor_count += 1,
                GateKind::Not => s.not_count += 1,
                GateKind::Const0 | GateKind::Const1 => s.const_count += 1,
            }
        }
        s
    }

    pub fn input_wires(&self) -> impl Iterator<Item = WireId> + '_ {
        self.inputs.iter().flatten().copied()
    }

    /// Checks topological order and single assignment.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut driven = vec![false; self.wire_count as usize];
        let mark = |w: WireId, driven: &mut Vec<bool>| -> Result<(), CircuitError> {
            let slot = driven
                .get_mut(w as usize)
                .ok_or(CircuitError::OutOfRange(w))?;
            if *slot {
                return Err(CircuitError::DoubleDriven(w));
            }
            *slot = true;
            Ok(())
        };
        for w in self.input_wires() {
            mark(w, &mut driven)?;
        }
        for (i, g) in self.gates.iter().enumerate() {
            for &w in [g.a, g.b].iter().take(g.kind.arity()) {
                if !driven.get(w as usize).copied().unwrap_or(false) {
                    return Err(CircuitError::UndrivenInput { gate: i, wire: w });
                }
            }
            mark(g.out, &mut driven)?;
        }
        for &w in &self.outputs {
            if !driven.get(w as usize).copied().unwrap_or(false) {
                return Err(CircuitError::UndrivenOutput(w));
            }
        }
        Ok(())
    }

    /// Plain gate-by-gate evaluation on the concatenated input bits.
    pub fn eval(&self, input_bits: &[bool]) -> Result<Vec<bool>, CircuitError> {
        let expected: usize = self.inputs.iter().map(Vec::len).sum();
        if input_bits.len() != expected {
            return Err(CircuitError::InputWidth {
                expected,
                got: input_bits.len(),
            });
        }
        let mut w = vec![false; self.wire_count as usize];
        for (id, &v) in self.input_wires().zip(input_bits) {
            w[id as usize] = v;
        }
        for g in &self.gates {
            let (a, b) = (w[g.a as usize], w[g.b as usize]);
            w[g.out as usize] = match g.kind {
                GateKind::Xor => a ^ b,
                GateKind::And => a & b,
                GateKind::Not => !a,
                GateKind::Const0 => false,
                GateKind::Const1 => true,
            };
        }
        Ok(self.outputs.iter().map(|&o| w[o as usize]).collect())
    }

    /// Evaluates with one integer per operand bus and returns the output
    /// word as an unsigned integer (at most 128 bits).
    pub fn eval_words(&self, operands: &[u128]) -> Result<u128, CircuitError> {
        let mut bits = Vec::new();
        for (bus, &v) in self.inputs.iter().zip(operands) {
            bits.extend(to_bits(v, bus.len()));
        }
        Ok(from_bits(&self.eval(&bits)?))
    }

    /// One gate per line, `<id> <KIND> <in1> [in2] <out>`, after header
    /// lines describing the input buses and output wires.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# wires {}", self.wire_count);
        for (i, bus) in self.inputs.iter().enumerate() {
            let _ = writeln!(s, "# input {i} {}", join(bus));
        }
        let _ = writeln!(s, "# output {}", join(&self.outputs));
        for (id, g) in self.gates.iter().enumerate() {
            let _ = match g.kind.arity() {
                2 => writeln!(s, "{id} {} {} {} {}", g.kind.name(), g.a, g.b, g.out),
                1 => writeln!(s, "{id} {} {} {}", g.kind.name(), g.a, g.out),
                _ => writeln!(s, "{id} {} {}", g.kind.name(), g.out),
            };
        }
        s
    }
}

fn join(ws: &[WireId]) -> String {
    ws.iter()
        .map(|w| w.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn to_bits(v: u128, width: usize) -> Vec<bool> {
    (0..width).map(|i| i < 128 && (v >> i) & 1 == 1).collect()
}

pub fn from_bits(bits: &[bool]) -> u128 {
    bits.iter()
        .take(128)
        .enumerate()
        .fold(0u128, |acc, (i, &b)| acc | ((b as u128) << i))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bit {
    Const(bool),
    Wire(WireId),
}

pub type Word = Vec<Bit>;

#[derive(Debug, Default)]
pub struct Builder {
    wire_count: u32,
    gates: Vec<Gate>,
    inputs: Vec<Vec<WireId>>,
    one: Option<WireId>,
    zero: Option<WireId>,
}

impl Builder {
    pub fn new() -> Self {
        Self::default()
    }

    fn fresh(&mut self) -> WireId {
        let w = self.wire_count;
        self.wire_count += 1;
        w
    }

    fn emit(&mut self, kind: GateKind, a: WireId, b: WireId) -> WireId {
        let out = self.fresh();
        self.gates.push(Gate { kind, a, b, out });
        out
    }

    fn const_wire(&mut self, v: bool) -> WireId {
        let slot = if v { self.one } else { self.zero };
        if let Some(w) = slot {
            return w;
        }
        let w = self.emit(
            if v {
                GateKind::Const1
            } else {
                GateKind::Const0
            },
            0,
            0,
        );
        if v {
            self.one = Some(w);
        } else {
            self.zero = Some(w);
        }
        w
    }

    /// Declares a new operand bus of `width` bits.
    pub fn input(&mut self, width: usize) -> Word {
        let bus: Vec<WireId> = (0..width).map(|_| self.fresh()).collect();
        let word = bus.iter().map(|&w| Bit::Wire(w)).collect();
        self.inputs.push(bus);
        word
    }

    pub fn constant(&self, v: u128, width: usize) -> Word {
        to_bits(v, width).into_iter().map(Bit::Const).collect()
    }

    pub fn xor(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(x), Bit::Const(y)) => Bit::Const(x ^ y),
            (Bit::Const(false), w) | (w, Bit::Const(false)) => w,
            (Bit::Const(true), w) | (w, Bit::Const(true)) => self.not(w),
            (Bit::Wire(x), Bit::Wire(y)) if x == y => Bit::Const(false),
            (Bit::Wire(x), Bit::Wire(y)) => Bit::Wire(self.emit(GateKind::Xor, x, y)),
        }
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        match (a, b) {
            (Bit::Const(x), Bit::Const(y)) => Bit::Const(x & y),
            (Bit::Const(false), _) | (_, Bit::Const(false)) => Bit::Const(false),
            (Bit::Const(true), w) | (w, Bit::Const(true)) => w,
            (Bit::Wire(x), Bit::Wire(y)) if x == y => Bit::Wire(x),
            (Bit::Wire(x), Bit::Wire(y)) => Bit::Wire(self.emit(GateKind::And, x, y)),
        }
    }

    /// Negation as XOR with the constant-one wire.
    pub fn not(&mut self, a: Bit) -> Bit {
        match a {
            Bit::Const(x) => Bit::Const(!x),
            Bit::Wire(x) => {
                let one = self.const_wire(true);
                Bit::Wire(self.emit(GateKind::Xor, x, one))
            }
        }
    }

    pub fn or(&mut self, a: Bit, b: Bit) -> Bit {
        let x = self.xor(a, b);
        let y = self.and(a, b);
        self.xor(x, y)
    }

    /// `s ? a : b`.
    pub fn mux(&mut self, s: Bit, a: Bit, b: Bit) -> Bit {
        let d = self.xor(a, b);
        let t = self.and(s, d);
        self.xor(b, t)
    }

    /// Sum and carry-out of a full adder, one AND gate.
    fn full_add(&mut self, a: Bit, b: Bit, c: Bit) -> (Bit, Bit) {
        let ac = self.xor(a, c);
        let bc = self.xor(b, c);
        let s = self.xor(ac, b);
        let t = self.and(ac, bc);
        (s, self.xor(c, t))
    }

    /// `a + b + cin` over `a.len()` bits (`b` zero-extended), plus carry-out.
    pub fn add_carry(&mut self, a: &[Bit], b: &[Bit], cin: Bit) -> (Word, Bit) {
        let mut c = cin;
        let mut out = Vec::with_capacity(a.len());
        for (i, &x) in a.iter().enumerate() {
            let y = b.get(i).copied().unwrap_or(Bit::Const(false));
            let (s, nc) = self.full_add(x, y, c);
            out.push(s);
            c = nc;
        }
        (out, c)
    }

    /// Wrapping `a + b + cin` over `a.len()` bits; the final carry is never
    /// built.
    pub fn add_cin(&mut self, a: &[Bit], b: &[Bit], cin: Bit) -> Word {
        let n = a.len();
        let mut c = cin;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let y = b.get(i).copied().unwrap_or(Bit::Const(false));
            if i + 1 == n {
                let t = self.xor(a[i], y);
                out.push(self.xor(t, c));
            } else {
                let (s, nc) = self.full_add(a[i], y, c);
                out.push(s);
                c = nc;
            }
        }
        out
    }

    pub fn add(&mut self, a: &[Bit], b: &[Bit]) -> Word {
        self.add_cin(a, b, Bit::Const(false))
    }

    pub fn not_word(&mut self, a: &[Bit]) -> Word {
        a.iter().map(|&x| self.not(x)).collect()
    }

    /// Wrapping difference `a - b`.
    pub fn sub(&mut self, a: &[Bit], b: &[Bit]) -> Word {
        let padded: Word = (0..a.len())
            .map(|i| b.get(i).copied().unwrap_or(Bit::Const(false)))
            .collect();
        let nb = self.not_word(&padded);
        self.add_cin(a, &nb, Bit::Const(true))
    }

    /// `s ? -a : a` (two's complement, wrapping).
    pub fn cond_neg(&mut self, a: &[Bit], s: Bit) -> Word {
        let flipped: Word = a.iter().map(|&x| self.xor(x, s)).collect();
        self.add_cin(&flipped, &[], s)
    }

    /// Unsigned product truncated to `out_width` bits.
    pub fn mul_unsigned(&mut self, a: &[Bit], b: &[Bit], out_width: usize) -> Word {
        let mut acc: Word = vec![Bit::Const(false); out_width];
        for (i, &bi) in b.iter().enumerate() {
            if i >= out_width {
                break;
            }
            let partial: Word = a
                .iter()
                .take(out_width - i)
                .map(|&aj| self.and(aj, bi))
                .collect();
            if partial.iter().all(|p| *p == Bit::Const(false)) {
                continue;
            }
            let upper = acc[i..].to_vec();
            let sum = self.add(&upper, &partial);
            acc.splice(i.., sum);
        }
        acc
    }

    /// Signed `w x w -> 2w` product of two's-complement words of equal width.
    pub fn mul_signed_wide(&mut self, a: &[Bit], b: &[Bit]) -> Word {
        let w = a.len();
        debug_assert_eq!(w, b.len());
        let mut p = self.mul_unsigned(a, b, 2 * w);
        let sa = a[w - 1];
        let sb = b[w - 1];
        let ca: Word = b.iter().map(|&x| self.and(sa, x)).collect();
        let cb: Word = a.iter().map(|&x| self.and(sb, x)).collect();
        let hi = p[w..].to_vec();
        let hi = self.sub(&hi, &ca);
        let hi = self.sub(&hi, &cb);
        p.splice(w.., hi);
        p
    }

    /// Unsigned floor division by a constant `d >= 1`; returns the full-width
    /// quotient.
    pub fn udiv_const(&mut self, x: &[Bit], d: u128) -> Word {
        assert!(d >= 1);
        if d == 1 {
            return x.to_vec();
        }
        let k = 128 - d.leading_zeros() as usize;
        let neg_d = self.constant(!d, k + 1);
        let mut rem: Word = vec![Bit::Const(false); k];
        let mut q = vec![Bit::Const(false); x.len()];
        for i in (0..x.len()).rev() {
            let mut shifted = Vec::with_capacity(k + 1);
            shifted.push(x[i]);
            shifted.extend_from_slice(&rem);
            // shifted - d over k+1 bits; carry-out set iff shifted >= d.
            let (diff, ge) = self.add_carry(&shifted, &neg_d, Bit::Const(true));
            q[i] = ge;
            rem = (0..k).map(|j| self.mux(ge, diff[j], shifted[j])).collect();
        }
        q
    }

    /// Truncating signed division of a two's-complement word by `d`,
    /// returning the low `out_width` bits.
    pub fn sdiv_const(&mut self, x: &[Bit], d: u128, out_width: usize) -> Word {
        if d == 1 {
            return x[..out_width].to_vec();
        }
        let sign = *x.last().expect("nonempty");
        let mag = self.cond_neg(x, sign);
        let q = self.udiv_const(&mag, d);
        let low = q[..out_width].to_vec();
        self.cond_neg(&low, sign)
    }

    /// Materializes `outputs`, turning constant bits into constant wires.
    pub fn finish(mut self, outputs: &[Bit]) -> BooleanCircuit {
        let outs = outputs
            .iter()
            .map(|&b| match b {
                Bit::Wire(w) => w,
                Bit::Const(v) => self.const_wire(v),
            })
            .collect();
        BooleanCircuit {
            wire_count: self.wire_count,
            gates: self.gates,
            inputs: self.inputs,
            outputs: outs,
        }
    }
}
