//! Experiment runner: executes plain, FHE or GC inference over a chosen
//! transport, records time, memory, traffic and accuracy, runs scaling
//! sweeps and writes reports.

mod experiment;
pub mod memory;
pub mod party;
mod report;
mod sweep;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ckks::Preset;
use crate::model::{self, ModelError, ModelParams};
use crate::transport::CommStats;

pub use experiment::run_experiment;
pub use report::{
    approximation_curves, emit_report, report_rows, ReportFormat, ReportRow, CURVE_SAMPLES,
};
pub use sweep::{
    crossover_table, linear_fit, run_scaling_sweep, CrossoverRow, LayerPoint, LinearFit,
    ScalingReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Plain,
    Fhe,
    Gc,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Plain, Mode::Gc, Mode::Fhe];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Plain => "plain",
            Mode::Fhe => "fhe",
            Mode::Gc => "gc",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(Mode::Plain),
            "fhe" => Ok(Mode::Fhe),
            "gc" => Ok(Mode::Gc),
            other => Err(format!(
                "unknown mode `{other}` (expected plain, fhe or gc)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TransportSpec {
    #[default]
    InProc,
    /// `host:port`; port 0 picks a free loopback port.
    Tcp(String),
}

impl fmt::Display for TransportSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TransportSpec::InProc => f.write_str("inproc"),
            TransportSpec::Tcp(a) => write!(f, "tcp:{a}"),
        }
    }
}

impl FromStr for TransportSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "inproc" {
            return Ok(TransportSpec::InProc);
        }
        match s.strip_prefix("tcp:") {
            Some(addr) if addr.contains(':') => Ok(TransportSpec::Tcp(addr.to_string())),
            _ => Err(format!(
                "unknown transport `{s}` (expected inproc or tcp:<host:port>)"
            )),
        }
    }
}

/// Which process a failure came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Runner,
    Server,
    Client,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Runner => "runner",
            Party::Server => "server",
            Party::Client => "client",
        })
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{party} failed: {message}")]
    Party { party: Party, message: String },
    #[error("malformed party report: {0}")]
    Report(String),
}

impl HarnessError {
    pub fn party(&self) -> Party {
        match self {
            HarnessError::Party { party, .. } => *party,
            _ => Party::Runner,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Model(_) => "model",
            HarnessError::Io(_) => "io",
            HarnessError::Party { .. } => "protocol",
            HarnessError::Report(_) => "report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub transport: TransportSpec,
    pub preset: Preset,
    /// `None` selects the committed canonical model.
    pub model_path: Option<PathBuf>,
    /// `None` selects the committed stress inputs.
    pub inputs_path: Option<PathBuf>,
    pub repetitions: usize,
    /// FHE: consecutive inferences sharing one key set.
    pub reuse_keys: usize,
    /// Largest layer count of a scaling sweep.
    pub layer_sweep: Option<usize>,
    /// Inference count of a scaling sweep.
    pub inferences: usize,
    pub seed: u64,
    /// Executable providing the `party` subcommand for TCP runs; defaults
    /// to the current executable.
    pub party_exe: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Plain,
            transport: TransportSpec::InProc,
            preset: Preset::Paper,
            model_path: None,
            inputs_path: None,
            repetitions: 5,
            reuse_keys: 1,
            layer_sweep: None,
            inferences: 1,
            seed: 0,
            party_exe: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.repetitions == 0 {
            return Err(HarnessError::Config(
                "repetitions must be at least 1".into(),
            ));
        }
        if self.reuse_keys == 0 {
            return Err(HarnessError::Config("reuse_keys must be at least 1".into()));
        }
        if self.inferences == 0 {
            return Err(HarnessError::Config("inferences must be at least 1".into()));
        }
        if let Some(l) = self.layer_sweep {
            if l < 2 {
                return Err(HarnessError::Config(format!(
                    "a layer sweep needs at least 2 layers, got {l}"
                )));
            }
        }
        if self.mode == Mode::Fhe && self.preset != Preset::Paper {
            return Err(HarnessError::Config(
                "fhe inference needs preset `paper`; preset `test` has too few levels".into(),
            ));
        }
        Ok(())
    }

    pub fn load_model(&self) -> Result<ModelParams, HarnessError> {
        Ok(match &self.model_path {
            Some(p) => ModelParams::load(p)?,
            None => model::canonical_model(),
        })
    }

    pub fn load_inputs(&self) -> Result<Vec<[f64; 3]>, HarnessError> {
        let inputs = match &self.inputs_path {
            Some(p) => model::load_inputs(p)?,
            None => model::stress_inputs(),
        };
        if inputs.is_empty() {
            return Err(HarnessError::Config("input file holds no vectors".into()));
        }
        Ok(inputs)
    }

    /// Sizes of the protocol sessions covering `count` inputs.
    pub fn session_sizes(&self, count: usize) -> Vec<usize> {
        let per = if self.mode == Mode::Fhe {
            self.reuse_keys
        } else {
            1
        };
        let mut out = vec![per; count / per];
        if count % per != 0 {
            out.push(count % per);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryScope {
    /// Both parties shared one process; only a combined figure exists.
    Combined,
    PerParty,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakMemory {
    pub server_bytes: Option<u64>,
    pub client_bytes: Option<u64>,
    pub combined_bytes: Option<u64>,
}

impl PeakMemory {
    /// Largest single-party figure, or the combined one.
    pub fn max_bytes(&self) -> Option<u64> {
        match (self.server_bytes, self.client_bytes) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b).or(self.combined_bytes),
        }
    }
}

/// Measurements of one inference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub mode: Mode,
    pub transport: String,
    pub preset: Option<Preset>,
    pub repetition: usize,
    pub session: usize,
    /// Inferences in this record's session.
    pub n: usize,
    pub input_index: usize,
    pub x: [f64; 3],
    pub rtt_seconds: f64,
    /// Plaintext inference time for the same input, measured alongside.
    pub rtt_plain_seconds: f64,
    pub memory_scope: MemoryScope,
    pub peak_memory: PeakMemory,
    pub comm: CommStats,
    pub y_output: f64,
    /// The mode's exact-arithmetic oracle.
    pub y_reference: f64,
    pub y_plain: f64,
    pub deviation: model::Deviation,
    /// FHE sessions with reused keys: bytes of the first inference.
    pub setup_bytes: Option<u64>,
    /// FHE sessions with reused keys: mean bytes of each later inference.
    pub marginal_bytes: Option<f64>,
    /// GC: garbled-table bytes per layer.
    pub layer_bytes: Vec<u64>,
    pub and_count: Option<u64>,
}
