use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, MemoryScope, MetricsRecord, Mode};
use crate::model::{sigmoid_exact, sigmoid_poly2};

/// Sample points of the activation curves: `x_i = (i - 60) / 10`.
pub const CURVE_SAMPLES: usize = 121;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// `.json` selects JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ReportFormat::Json,
            _ => ReportFormat::Csv,
        }
    }
}

/// Flat view of a [`MetricsRecord`], one report line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: Mode,
    pub transport: String,
    pub preset: Option<String>,
    pub repetition: usize,
    pub session: usize,
    pub n: usize,
    pub input_index: usize,
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub rtt_seconds: f64,
    pub rtt_plain_seconds: f64,
    pub slowdown: f64,
    pub memory_scope: MemoryScope,
    pub peak_memory_server_bytes: Option<u64>,
    pub peak_memory_client_bytes: Option<u64>,
    pub peak_memory_combined_bytes: Option<u64>,
    pub bytes_server_to_client: u64,
    pub bytes_client_to_server: u64,
    pub total_bytes: u64,
    pub flights: u64,
    pub round_trips: u64,
    pub y_output: f64,
    pub y_reference: f64,
    pub y_plain: f64,
    pub deviation: f64,
    /// True when `y_plain` was zero and `deviation` is an absolute difference.
    pub deviation_is_absolute: bool,
    pub setup_bytes: Option<u64>,
    pub marginal_bytes: Option<f64>,
    /// Semicolon-separated per-layer byte counts.
    pub layer_bytes: String,
    pub and_count: Option<u64>,
}

fn mean(v: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = v
        .into_iter()
        .fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Rows with the slowdown column filled against the batch's plain runs, or
/// against each record's own plain timing when the batch has none.
pub fn report_rows(records: &[MetricsRecord]) -> Vec<ReportRow> {
    let plain = mean(
        records
            .iter()
            .filter(|r| r.mode == Mode::Plain)
            .map(|r| r.rtt_seconds),
    );
    records
        .iter()
        .map(|r| {
            let base = plain.unwrap_or(r.rtt_plain_seconds);
            ReportRow {
                mode: r.mode,
                transport: r.transport.clone(),
                preset: r.preset.map(|p| format!("{p:?}").to_lowercase()),
                repetition: r.repetition,
                session: r.session,
                n: r.n,
                input_index: r.input_index,
                x0: r.x[0],
                x1: r.x[1],
                x2: r.x[2],
                rtt_seconds: r.rtt_seconds,
                rtt_plain_seconds: r.rtt_plain_seconds,
                slowdown: if base > 0.0 {
                    r.rtt_seconds / base
                } else {
                    f64::NAN
                },
                memory_scope: r.memory_scope,
                peak_memory_server_bytes: r.peak_memory.server_bytes,
                peak_memory_client_bytes: r.peak_memory.client_bytes,
                peak_memory_combined_bytes: r.peak_memory.combined_bytes,
                bytes_server_to_client: r.comm.bytes_a_to_b,
                bytes_client_to_server: r.comm.bytes_b_to_a,
                total_bytes: r.comm.total_bytes(),
                flights: r.comm.flights,
                round_trips: r.comm.round_trips,
                y_output: r.y_output,
                y_reference: r.y_reference,
                y_plain: r.y_plain,
                deviation: r.deviation.value(),
                deviation_is_absolute: r.deviation.is_sentinel(),
                setup_bytes: r.setup_bytes,
                marginal_bytes: r.marginal_bytes,
                layer_bytes: r
                    .layer_bytes
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(";"),
                and_count: r.and_count,
            }
        })
        .collect()
}

/// `(x, relu(x), x^2)` and `(x, sigmoid(x), poly2(x))` at the curve samples.
pub fn approximation_curves() -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
    let xs: Vec<f64> = (0..CURVE_SAMPLES)
        .map(|i| (i as f64 - 60.0) / 10.0)
        .collect();
    let relu = xs.iter().map(|&x| [x, x.max(0.0), x * x]).collect();
    let sig = xs
        .iter()
        .map(|&x| [x, sigmoid_exact(x), sigmoid_poly2(x)])
        .collect();
    (relu, sig)
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => HarnessError::Io(io),
        other => HarnessError::Report(format!("{other:?}")),
    }
}

#[derive(Serialize)]
struct RttRow {
    mode: Mode,
    runs: usize,
    mean_rtt_seconds: f64,
    min_rtt_seconds: f64,
    max_rtt_seconds: f64,
    slowdown: f64,
}

#[derive(Serialize)]
struct MemRow {
    mode: Mode,
    memory_scope: MemoryScope,
    server_bytes: Option<u64>,
    client_bytes: Option<u64>,
    combined_bytes: Option<u64>,
}

#[derive(Serialize)]
struct CommRow {
    mode: Mode,
    server_to_client_bytes: f64,
    client_to_server_bytes: f64,
    total_bytes: f64,
    flights: f64,
    round_trips: f64,
}

#[derive(Serialize)]
struct DeviationRow {
    mode: Mode,
    repetition: usize,
    input_index: usize,
    x0: f64,
    x1: f64,
    x2: f64,
    y_plain: f64,
    y_output: f64,
    deviation: f64,
    deviation_is_absolute: bool,
}

#[derive(Serialize)]
struct CurveRow {
    x: f64,
    exact: f64,
    approx: f64,
}

/// Writes the tabular report to `out` and, with `plot_data`, one CSV series
/// per figure next to it. Returns every path written.
pub fn emit_report(
    records: &[MetricsRecord],
    format: ReportFormat,
    plot_data: bool,
    out: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Config("no records to report".into()));
    }
    let rows = report_rows(records);
    match format {
        ReportFormat::Csv => write_csv(out, &rows)?,
        ReportFormat::Json => {
            let text = serde_json::to_string_pretty(&rows)
                .map_err(|e| HarnessError::Report(e.to_string()))?;
            std::fs::write(out, text)?;
        }
    }
    let mut written = vec![out.to_path_buf()];
    if !plot_data {
        return Ok(written);
    }

    let mut by_mode: BTreeMap<Mode, Vec<&ReportRow>> = BTreeMap::new();
    for r in &rows {
        by_mode.entry(r.mode).or_default().push(r);
    }

    let rtt: Vec<RttRow> = by_mode
        .iter()
        .map(|(&mode, rs)| {
            let t: Vec<f64> = rs.iter().map(|r| r.rtt_seconds).collect();
            RttRow {
                mode,
                runs: t.len(),
                mean_rtt_seconds: mean(t.iter().copied()).unwrap_or(0.0),
                min_rtt_seconds: t.iter().copied().fold(f64::INFINITY, f64::min),
                max_rtt_seconds: t.iter().copied().fold(0.0, f64::max),
                slowdown: mean(rs.iter().map(|r| r.slowdown)).unwrap_or(f64::NAN),
            }
        })
        .collect();

    let mem: Vec<MemRow> = by_mode
        .iter()
        .map(|(&mode, rs)| MemRow {
            mode,
            memory_scope: rs[0].memory_scope,
            server_bytes: rs.iter().filter_map(|r| r.peak_memory_server_bytes).max(),
            client_bytes: rs.iter().filter_map(|r| r.peak_memory_client_bytes).max(),
            combined_bytes: rs.iter().filter_map(|r| r.peak_memory_combined_bytes).max(),
        })
        .collect();

    let comm: Vec<CommRow> = by_mode
        .iter()
        .map(|(&mode, rs)| CommRow {
            mode,
            server_to_client_bytes: mean(rs.iter().map(|r| r.bytes_server_to_client as f64))
                .unwrap_or(0.0),
            client_to_server_bytes: mean(rs.iter().map(|r| r.bytes_client_to_server as f64))
                .unwrap_or(0.0),
            total_bytes: mean(rs.iter().map(|r| r.total_bytes as f64)).unwrap_or(0.0),
            flights: mean(rs.iter().map(|r| r.flights as f64)).unwrap_or(0.0),
            round_trips: mean(rs.iter().map(|r| r.round_trips as f64)).unwrap_or(0.0),
        })
        .collect();

    let dev: Vec<DeviationRow> = rows
        .iter()
        .map(|r| DeviationRow {
            mode: r.mode,
            repetition: r.repetition,
            input_index: r.input_index,
            x0: r.x0,
            x1: r.x1,
            x2: r.x2,
            y_plain: r.y_plain,
            y_output: r.y_output,
            deviation: r.deviation,
            deviation_is_absolute: r.deviation_is_absolute,
        })
        .collect();

    let (relu, sig) = approximation_curves();
    let curve = |pts: Vec<[f64; 3]>| -> Vec<CurveRow> {
        pts.into_iter()
            .map(|[x, exact, approx]| CurveRow { x, exact, approx })
            .collect()
    };

    let series = [
        ("rtt_by_mode", write_csv(&sibling(out, "rtt_by_mode"), &rtt)),
        (
            "peakmem_by_mode",
            write_csv(&sibling(out, "peakmem_by_mode"), &mem),
        ),
        (
            "comm_breakdown",
            write_csv(&sibling(out, "comm_breakdown"), &comm),
        ),
        (
            "deviation_scatter",
            write_csv(&sibling(out, "deviation_scatter"), &dev),
        ),
        (
            "relu_curve",
            write_csv(&sibling(out, "relu_curve"), &curve(relu)),
        ),
        (
            "sigmoid_curve",
            write_csv(&sibling(out, "sigmoid_curve"), &curve(sig)),
        ),
    ];
    for (name, result) in series {
        result?;
        written.push(sibling(out, name));
    }
    Ok(written)
}
