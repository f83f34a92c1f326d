use std::net::TcpListener;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::time::Instant;

use super::party::{
    client_session, server_session, session_rng, InferenceTrace, PartyArgs, PartyReport,
    ServerTrace,
};
use super::{
    memory, ExperimentConfig, HarnessError, MemoryScope, MetricsRecord, Mode, Party, PeakMemory,
    TransportSpec,
};
use crate::gc::FixedPointSpec;
use crate::model::{self, ModelParams};
use crate::transport::{make_inproc_pair, CommStats};

struct SessionResult {
    client: Vec<InferenceTrace>,
    server: Vec<ServerTrace>,
    scope: MemoryScope,
    peak: PeakMemory,
}

/// Runs `cfg.repetitions` passes over the configured inputs and returns one
/// record per inference.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsRecord>, HarnessError> {
    cfg.validate()?;
    let model = cfg.load_model()?;
    let inputs = cfg.load_inputs()?;
    let sizes = cfg.session_sizes(inputs.len());
    let mut records = Vec::new();
    for rep in 0..cfg.repetitions {
        let sessions = match (cfg.mode, &cfg.transport) {
            (Mode::Plain, _) => plain_sessions(&model, &inputs),
            (_, TransportSpec::InProc) => {
                let mut out = Vec::with_capacity(sizes.len());
                let mut start = 0;
                for (s, &n) in sizes.iter().enumerate() {
                    out.push(inproc_session(
                        cfg,
                        &model,
                        &inputs[start..start + n],
                        rep,
                        s,
                    )?);
                    start += n;
                }
                out
            }
            (_, TransportSpec::Tcp(addr)) => tcp_sessions(cfg, addr, &sizes, rep)?,
        };
        let transport = match (cfg.mode, &cfg.transport) {
            (Mode::Plain, _) => "local".to_string(),
            (_, TransportSpec::InProc) => "inproc".to_string(),
            (_, TransportSpec::Tcp(_)) => "tcp".to_string(),
        };
        let mut idx = 0;
        for (s, sess) in sessions.iter().enumerate() {
            let n = sess.client.len();
            let (setup_bytes, marginal_bytes) = if cfg.mode == Mode::Fhe && n > 1 {
                let later: u64 = sess.client[1..].iter().map(|t| t.comm.total_bytes()).sum();
                (
                    Some(sess.client[0].comm.total_bytes()),
                    Some(later as f64 / (n - 1) as f64),
                )
            } else {
                (None, None)
            };
            for (k, trace) in sess.client.iter().enumerate() {
                let x = inputs[idx];
                let y_plain = model::infer_plain(&model, &x);
                let y_reference = match cfg.mode {
                    Mode::Plain => y_plain,
                    Mode::Fhe => model::infer_fhe_approx(&model, &x),
                    Mode::Gc => model::infer_gc_fixed(&model, &x, FixedPointSpec::default())?,
                };
                let server = sess.server.get(k).cloned().unwrap_or_default();
                records.push(MetricsRecord {
                    mode: cfg.mode,
                    transport: transport.clone(),
                    preset: (cfg.mode == Mode::Fhe).then_some(cfg.preset),
                    repetition: rep,
                    session: s,
                    n,
                    input_index: idx,
                    x,
                    rtt_seconds: trace.rtt_seconds,
                    rtt_plain_seconds: time_plain(&model, &x),
                    memory_scope: sess.scope,
                    peak_memory: sess.peak,
                    comm: trace.comm,
                    y_output: trace.y,
                    y_reference,
                    y_plain,
                    deviation: model::deviation(trace.y, y_plain),
                    setup_bytes,
                    marginal_bytes,
                    layer_bytes: server.layer_bytes,
                    and_count: server.and_count,
                });
                idx += 1;
            }
        }
    }
    Ok(records)
}

fn time_plain(model: &ModelParams, x: &[f64; 3]) -> f64 {
    let t0 = Instant::now();
    std::hint::black_box(model::infer_plain(model, std::hint::black_box(x)));
    t0.elapsed().as_secs_f64()
}

fn plain_sessions(model: &ModelParams, inputs: &[[f64; 3]]) -> Vec<SessionResult> {
    inputs
        .iter()
        .map(|x| {
            memory::reset_peak();
            let t0 = Instant::now();
            let y = std::hint::black_box(model::infer_plain(model, std::hint::black_box(x)));
            let rtt_seconds = t0.elapsed().as_secs_f64();
            SessionResult {
                client: vec![InferenceTrace {
                    rtt_seconds,
                    comm: CommStats::default(),
                    y,
                }],
                server: Vec::new(),
                scope: MemoryScope::Combined,
                peak: PeakMemory {
                    combined_bytes: memory::peak_rss_bytes(),
                    ..Default::default()
                },
            }
        })
        .collect()
}

/// Picks the error that is not merely the echo of the peer's failure.
fn primary_error(server: HarnessError, client: HarnessError) -> HarnessError {
    if server.to_string().contains("closed by peer") {
        client
    } else {
        server
    }
}

fn inproc_session(
    cfg: &ExperimentConfig,
    model: &ModelParams,
    inputs: &[[f64; 3]],
    rep: usize,
    s: usize,
) -> Result<SessionResult, HarnessError> {
    memory::reset_peak();
    let (mut a, mut b) = make_inproc_pair();
    let n = inputs.len();
    let (server, client) = std::thread::scope(|scope| {
        let h = scope.spawn(|| {
            let mut rng = session_rng(cfg.seed, rep, s, Party::Server);
            let r = server_session(&mut a, cfg.mode, model, n, &mut rng);
            drop(a);
            r
        });
        let mut rng = session_rng(cfg.seed, rep, s, Party::Client);
        let client = client_session(&mut b, cfg.mode, cfg.preset, model, inputs, &mut rng);
        drop(b);
        let server = h.join().unwrap_or_else(|_| {
            Err(HarnessError::Party {
                party: Party::Server,
                message: "server thread panicked".into(),
            })
        });
        (server, client)
    });
    let (server, client) = match (server, client) {
        (Ok(s), Ok(c)) => (s, c),
        (Err(e), Ok(_)) | (Ok(_), Err(e)) => return Err(e),
        (Err(se), Err(ce)) => return Err(primary_error(se, ce)),
    };
    Ok(SessionResult {
        client,
        server,
        scope: MemoryScope::Combined,
        peak: PeakMemory {
            combined_bytes: memory::peak_rss_bytes(),
            ..Default::default()
        },
    })
}

fn resolve_addr(addr: &str) -> Result<String, HarnessError> {
    let (host, port) = addr
        .rsplit_once(':')
        .ok_or_else(|| HarnessError::Config(format!("bad tcp address `{addr}`")))?;
    if port != "0" {
        return Ok(addr.to_string());
    }
    let probe = TcpListener::bind((host, 0))?;
    Ok(format!("{host}:{}", probe.local_addr()?.port()))
}

fn spawn_party(exe: &PathBuf, args: &PartyArgs) -> Result<Child, HarnessError> {
    let json = serde_json::to_string(args).expect("serializable");
    Ok(Command::new(exe)
        .arg("party")
        .arg("--args")
        .arg(json)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?)
}

fn party_failure(party: Party, stderr: &[u8]) -> HarnessError {
    let text = String::from_utf8_lossy(stderr);
    let last = text
        .lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("exited with failure");
    let message = serde_json::from_str::<serde_json::Value>(last)
        .ok()
        .and_then(|v| {
            v.get("message")
                .and_then(|m| m.as_str())
                .map(str::to_string)
        })
        .unwrap_or_else(|| last.to_string());
    HarnessError::Party { party, message }
}

fn parse_reports(stdout: &[u8]) -> Result<Vec<PartyReport>, HarnessError> {
    String::from_utf8_lossy(stdout)
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| HarnessError::Report(e.to_string())))
        .collect()
}

fn tcp_sessions(
    cfg: &ExperimentConfig,
    addr: &str,
    sizes: &[usize],
    rep: usize,
) -> Result<Vec<SessionResult>, HarnessError> {
    let exe = match &cfg.party_exe {
        Some(p) => p.clone(),
        None => std::env::current_exe()?,
    };
    let server_args = PartyArgs {
        role: Party::Server,
        mode: cfg.mode,
        preset: cfg.preset,
        model_path: cfg.model_path.clone(),
        inputs_path: None,
        session_sizes: sizes.to_vec(),
        seed: cfg.seed,
        repetition: rep,
        addr: resolve_addr(addr)?,
    };
    let client_args = PartyArgs {
        role: Party::Client,
        inputs_path: cfg.inputs_path.clone(),
        ..server_args.clone()
    };
    let mut server = spawn_party(&exe, &server_args)?;
    let client = spawn_party(&exe, &client_args)?;
    let client_out = client.wait_with_output()?;
    if !client_out.status.success() {
        let server_failed = matches!(server.try_wait()?, Some(st) if !st.success());
        if !server_failed {
            let _ = server.kill();
        }
        let server_out = server.wait_with_output()?;
        return Err(if server_failed {
            party_failure(Party::Server, &server_out.stderr)
        } else {
            party_failure(Party::Client, &client_out.stderr)
        });
    }
    let server_out = server.wait_with_output()?;
    if !server_out.status.success() {
        return Err(party_failure(Party::Server, &server_out.stderr));
    }
    let clients = parse_reports(&client_out.stdout)?;
    let servers = parse_reports(&server_out.stdout)?;
    if clients.len() != sizes.len() || servers.len() != sizes.len() {
        return Err(HarnessError::Report(format!(
            "expected {} session reports, got {} client and {} server",
            sizes.len(),
            clients.len(),
            servers.len()
        )));
    }
    Ok(clients
        .into_iter()
        .zip(servers)
        .map(|(c, s)| SessionResult {
            client: c.client,
            server: s.server,
            scope: MemoryScope::PerParty,
            peak: PeakMemory {
                server_bytes: s.peak_memory_bytes,
                client_bytes: c.peak_memory_bytes,
                combined_bytes: None,
            },
        })
        .collect())
}
