//! Two-party private inference workbench.
//!
//! One two-layer network, two secure evaluation strategies (leveled CKKS and
//! garbled circuits with oblivious transfer) and one instrumented transport.

pub mod ckks;
pub mod fhe;
pub mod gc;
pub mod harness;
pub mod model;
pub mod ot;
pub mod transport;
pub mod wire;
