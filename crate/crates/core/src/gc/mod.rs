//! Garbled-circuit pipeline: fixed-point contract, netlists, layer plans,
//! half-gates garbling and the sequential two-party session.

pub mod circuit;
pub mod fixed;
pub mod garble;
pub mod label;
pub mod netlists;
pub mod plan;
pub mod session;

pub use circuit::{BooleanCircuit, CircuitStats, Gate, GateKind};
pub use fixed::{fixed_decode, fixed_encode, FixedPointSpec};
pub use garble::{evaluate_netlist, garble_netlist, GarbledNetlist, GarblerState};
pub use label::WireLabel;
pub use netlists::{build_netlist, NetlistKind};
pub use plan::{compose_layer, NetlistCache, Operand, Plan, PlanStep};
pub use session::{
    run_evaluator, run_garbler, EvaluatorOptions, EvaluatorOutcome, GarblerOutcome, SessionError,
};
