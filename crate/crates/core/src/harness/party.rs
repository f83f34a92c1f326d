//! One party's side of a protocol session, usable from a thread or from a
//! separate `bench party` process.
//!
//! A session is one channel carrying `n` consecutive inferences. Servers act
//! only on receipt of a client message, so the client's clock brackets the
//! whole protocol for every inference.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use super::{memory, HarnessError, Mode, Party};
use crate::ckks::{CkksParams, Preset};
use crate::fhe::{self, FheClient};
use crate::gc::{self, fixed_decode, fixed_encode, EvaluatorOptions, FixedPointSpec, Plan};
use crate::model::{self, ModelParams};
use crate::transport::{self, CommStats, Endpoint, Side};
use crate::wire::kind;

/// Client-side measurements of one inference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceTrace {
    pub rtt_seconds: f64,
    pub comm: CommStats,
    pub y: f64,
}

/// Server-side facts about one inference.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ServerTrace {
    pub layer_bytes: Vec<u64>,
    pub and_count: Option<u64>,
}

/// Deterministic per-party, per-session generator.
pub fn session_rng(seed: u64, repetition: usize, session: usize, party: Party) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let tag = match party {
        Party::Runner => 0,
        Party::Server => 1,
        Party::Client => 2,
    };
    rng.set_stream(((repetition as u64) << 40) | ((session as u64) << 8) | tag);
    rng
}

fn protocol_err(party: Party, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Party {
        party,
        message: e.to_string(),
    }
}

/// Runs the client (input owner) side of one session.
pub fn client_session(
    ep: &mut Endpoint,
    mode: Mode,
    preset: Preset,
    model: &ModelParams,
    inputs: &[[f64; 3]],
    rng: &mut ChaCha20Rng,
) -> Result<Vec<InferenceTrace>, HarnessError> {
    let err = |e: &dyn std::fmt::Display| protocol_err(Party::Client, e);
    let mut out = Vec::with_capacity(inputs.len());
    match mode {
        Mode::Plain => {
            return Err(HarnessError::Config(
                "plain mode has no protocol session".into(),
            ))
        }
        Mode::Fhe => {
            let params = CkksParams::preset(preset);
            let mut client: Option<FheClient> = None;
            for (i, x) in inputs.iter().enumerate() {
                let before = ep.stats();
                let t0 = Instant::now();
                if client.is_none() {
                    client = Some(FheClient::new(&params, rng).map_err(|e| err(&e))?);
                }
                let c = client.as_mut().unwrap();
                let msg = c.setup(x, i == 0, rng).map_err(|e| err(&e))?;
                ep.send(kind::SETUP, fhe::encode_setup(c.context(), &msg))
                    .map_err(|e| err(&e))?;
                let payload = ep.recv_kind(kind::RESULT).map_err(|e| err(&e))?;
                let result = fhe::decode_result(c.context(), &payload).map_err(|e| err(&e))?;
                let y = c.finish(&result);
                out.push(InferenceTrace {
                    rtt_seconds: t0.elapsed().as_secs_f64(),
                    comm: ep.stats().since(&before),
                    y,
                });
            }
        }
        Mode::Gc => {
            let spec = FixedPointSpec::default();
            let plan = Plan::for_stack(&model.as_stack());
            let opts = EvaluatorOptions::default();
            for x in inputs {
                let before = ep.stats();
                let t0 = Instant::now();
                let values = x
                    .iter()
                    .map(|&v| fixed_encode(v, spec))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| err(&e))?;
                let outcome =
                    gc::run_evaluator(ep, &plan, &values, spec, &opts, rng).map_err(|e| err(&e))?;
                let y = fixed_decode(outcome.outputs[0], spec);
                out.push(InferenceTrace {
                    rtt_seconds: t0.elapsed().as_secs_f64(),
                    comm: ep.stats().since(&before),
                    y,
                });
            }
        }
    }
    Ok(out)
}

/// Runs the server (model owner) side of one session of `n` inferences.
pub fn server_session(
    ep: &mut Endpoint,
    mode: Mode,
    model: &ModelParams,
    n: usize,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<ServerTrace>, HarnessError> {
    let err = |e: &dyn std::fmt::Display| protocol_err(Party::Server, e);
    match mode {
        Mode::Plain => Err(HarnessError::Config(
            "plain mode has no protocol session".into(),
        )),
        Mode::Fhe => {
            fhe::run_server(ep, model, n).map_err(|e| err(&e))?;
            Ok(vec![ServerTrace::default(); n])
        }
        Mode::Gc => {
            let spec = FixedPointSpec::default();
            let stack = model.as_stack();
            let plan = Plan::for_stack(&stack);
            let values = Plan::garbler_values(&stack, spec).map_err(|e| err(&e))?;
            (0..n)
                .map(|_| {
                    let o = gc::run_garbler(ep, &plan, &values, spec, rng).map_err(|e| err(&e))?;
                    Ok(ServerTrace {
                        layer_bytes: o.layer_table_bytes.iter().map(|&b| b as u64).collect(),
                        and_count: Some(o.and_count as u64),
                    })
                })
                .collect()
        }
    }
}

/// Instructions for a `bench party` child process, passed as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartyArgs {
    pub role: Party,
    pub mode: Mode,
    pub preset: Preset,
    pub model_path: Option<PathBuf>,
    /// Client only.
    pub inputs_path: Option<PathBuf>,
    pub session_sizes: Vec<usize>,
    pub seed: u64,
    pub repetition: usize,
    /// Listen address (server) or connect address (client).
    pub addr: String,
}

/// One line of child output per session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartyReport {
    pub session: usize,
    pub peak_memory_bytes: Option<u64>,
    #[serde(default)]
    pub client: Vec<InferenceTrace>,
    #[serde(default)]
    pub server: Vec<ServerTrace>,
}

/// Entry point of a party process: one connection per session, one JSON
/// report line per session on `out`.
pub fn run_party(args: &PartyArgs, out: &mut dyn Write) -> Result<(), HarnessError> {
    let model = match &args.model_path {
        Some(p) => ModelParams::load(p)?,
        None => model::canonical_model(),
    };
    let err = |e: &dyn std::fmt::Display| protocol_err(args.role, e);
    match args.role {
        Party::Server => {
            let listener = transport::listen_tcp(&args.addr).map_err(|e| err(&e))?;
            for (s, &n) in args.session_sizes.iter().enumerate() {
                let mut ep = transport::accept_tcp(&listener, Side::A).map_err(|e| err(&e))?;
                memory::reset_peak();
                let mut rng = session_rng(args.seed, args.repetition, s, Party::Server);
                let server = server_session(&mut ep, args.mode, &model, n, &mut rng)?;
                let report = PartyReport {
                    session: s,
                    peak_memory_bytes: memory::peak_rss_bytes(),
                    client: Vec::new(),
                    server,
                };
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string(&report).expect("serializable")
                )?;
            }
        }
        Party::Client => {
            let inputs = match &args.inputs_path {
                Some(p) => model::load_inputs(p)?,
                None => model::stress_inputs(),
            };
            let total: usize = args.session_sizes.iter().sum();
            if total > inputs.len() {
                return Err(HarnessError::Config(format!(
                    "sessions cover {total} inputs but only {} were given",
                    inputs.len()
                )));
            }
            let mut start = 0;
            for (s, &n) in args.session_sizes.iter().enumerate() {
                let mut ep = transport::connect_tcp_retry(
                    &args.addr,
                    Side::B,
                    std::time::Duration::from_secs(30),
                )
                .map_err(|e| err(&e))?;
                memory::reset_peak();
                let mut rng = session_rng(args.seed, args.repetition, s, Party::Client);
                let client = client_session(
                    &mut ep,
                    args.mode,
                    args.preset,
                    &model,
                    &inputs[start..start + n],
                    &mut rng,
                )?;
                drop(ep);
                start += n;
                let report = PartyReport {
                    session: s,
                    peak_memory_bytes: memory::peak_rss_bytes(),
                    client,
                    server: Vec::new(),
                };
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string(&report).expect("serializable")
                )?;
            }
        }
        Party::Runner => {
            return Err(HarnessError::Config(
                "the runner is not a protocol party".into(),
            ))
        }
    }
    out.flush()?;
    Ok(())
}
