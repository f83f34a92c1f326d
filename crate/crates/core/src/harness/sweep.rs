use serde::{Deserialize, Serialize};

use super::party::{client_session, server_session, session_rng, InferenceTrace};
use super::{ExperimentConfig, HarnessError, Mode, Party};
use crate::gc::{self, EvaluatorOptions, FixedPointSpec, GarblerOutcome, Plan};
use crate::model::{LayerStack, ModelParams};
use crate::transport::{make_inproc_pair, CommStats, Endpoint, Side};

/// GC traffic for a stack of `layers` dense layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerPoint {
    pub layers: usize,
    pub garbler_to_evaluator_bytes: u64,
    pub total_bytes: u64,
    pub and_count: u64,
    /// Change from the previous point.
    pub delta_bytes: Option<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub n: usize,
    pub gc_bytes: f64,
    pub fhe_bytes: f64,
    pub cheaper: Mode,
}

/// Projected bytes for `n` inferences: `n * c` for GC, `s + (n - 1) * eps`
/// for FHE with reused keys.
pub fn crossover_table(c: f64, s: f64, eps: f64, ns: &[usize]) -> (Vec<CrossoverRow>, Option<f64>) {
    let rows = ns
        .iter()
        .map(|&n| {
            let gc_bytes = n as f64 * c;
            let fhe_bytes = s + (n as f64 - 1.0) * eps;
            CrossoverRow {
                n,
                gc_bytes,
                fhe_bytes,
                cheaper: if fhe_bytes < gc_bytes {
                    Mode::Fhe
                } else {
                    Mode::Gc
                },
            }
        })
        .collect();
    let at = (c > eps).then(|| (s - eps) / (c - eps));
    (rows, at)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub mode: Option<Mode>,
    pub layers: Vec<LayerPoint>,
    pub layer_fit: Option<LinearFit>,
    pub inferences: usize,
    /// GC bytes of one inference.
    pub gc_single_bytes: Option<u64>,
    /// GC bytes of `inferences` fresh inferences on one channel.
    pub gc_total_bytes: Option<u64>,
    /// `gc_total_bytes / (inferences * gc_single_bytes)`.
    pub gc_ratio: Option<f64>,
    /// FHE bytes of the first inference, keys included.
    pub fhe_setup_bytes: Option<u64>,
    /// FHE mean bytes of each later inference with reused keys.
    pub fhe_marginal_bytes: Option<f64>,
    pub fhe_total_bytes: Option<u64>,
    pub crossover: Vec<CrossoverRow>,
    /// Inference count from which FHE with reused keys moves fewer bytes.
    pub crossover_n: Option<f64>,
}

const CROSSOVER_NS: [usize; 8] = [1, 2, 5, 10, 20, 50, 100, 1000];

fn on_pair<S: Send, C>(
    server: impl FnOnce(&mut Endpoint) -> Result<S, HarnessError> + Send,
    client: impl FnOnce(&mut Endpoint) -> Result<C, HarnessError>,
) -> Result<(S, C, CommStats), HarnessError> {
    let (mut a, mut b) = make_inproc_pair();
    let stats = a.stats_handle();
    let (s, c) = std::thread::scope(|scope| {
        let h = scope.spawn(move || server(&mut a));
        let c = client(&mut b);
        drop(b);
        let s = h.join().unwrap_or_else(|_| {
            Err(HarnessError::Party {
                party: Party::Server,
                message: "server thread panicked".into(),
            })
        });
        (s, c)
    });
    match (s, c) {
        (Ok(s), Ok(c)) => Ok((s, c, stats.snapshot())),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

fn gc_stack_once(
    stack: &LayerStack,
    x: &[f64; 3],
    seed: u64,
    session: usize,
) -> Result<(GarblerOutcome, CommStats), HarnessError> {
    let spec = FixedPointSpec::default();
    let plan = Plan::for_stack(stack);
    let gv = Plan::garbler_values(stack, spec).map_err(|e| HarnessError::Config(e.to_string()))?;
    let ev: Vec<i64> = x
        .iter()
        .map(|&v| gc::fixed_encode(v, spec))
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let fail = |party| {
        move |e: gc::SessionError| HarnessError::Party {
            party,
            message: e.to_string(),
        }
    };
    let (g, _, stats) = on_pair(
        |ep| {
            let mut rng = session_rng(seed, 0, session, Party::Server);
            gc::run_garbler(ep, &plan, &gv, spec, &mut rng).map_err(fail(Party::Server))
        },
        |ep| {
            let mut rng = session_rng(seed, 0, session, Party::Client);
            gc::run_evaluator(ep, &plan, &ev, spec, &EvaluatorOptions::default(), &mut rng)
                .map_err(fail(Party::Client))
        },
    )?;
    Ok((g, stats))
}

fn model_session(
    cfg: &ExperimentConfig,
    mode: Mode,
    model: &ModelParams,
    inputs: &[[f64; 3]],
    session: usize,
) -> Result<(Vec<InferenceTrace>, CommStats), HarnessError> {
    let n = inputs.len();
    let (_, traces, stats) = on_pair(
        |ep| {
            let mut rng = session_rng(cfg.seed, 0, session, Party::Server);
            server_session(ep, mode, model, n, &mut rng)
        },
        |ep| {
            let mut rng = session_rng(cfg.seed, 0, session, Party::Client);
            client_session(ep, mode, cfg.preset, model, inputs, &mut rng)
        },
    )?;
    Ok((traces, stats))
}

/// GC mode: per-layer traffic for stacks of 1..=`layers` layers with a
/// linear fit (none when `layers` is 0), and the fresh-garbling cost of
/// `inferences` inferences.
/// FHE mode: setup bytes `S` and marginal bytes `eps` over `inferences`
/// key-reusing inferences, plus the GC/FHE crossover table.
///
/// Sweeps run over in-process channels; byte and flight counts do not depend
/// on the transport.
pub fn run_scaling_sweep(
    cfg: &ExperimentConfig,
    layers: usize,
    inferences: usize,
) -> Result<ScalingReport, HarnessError> {
    cfg.validate()?;
    if inferences == 0 {
        return Err(HarnessError::Config("inferences must be at least 1".into()));
    }
    let model = cfg.load_model()?;
    let inputs = cfg.load_inputs()?;
    let batch: Vec<[f64; 3]> = (0..inferences).map(|i| inputs[i % inputs.len()]).collect();
    let mut report = ScalingReport {
        mode: Some(cfg.mode),
        inferences,
        ..Default::default()
    };
    match cfg.mode {
        Mode::Plain => {
            return Err(HarnessError::Config(
                "scaling sweeps need the gc or fhe mode".into(),
            ))
        }
        Mode::Gc => {
            if layers == 1 {
                return Err(HarnessError::Config(
                    "a layer sweep needs at least 2 layers".into(),
                ));
            }
            let mut prev: Option<u64> = None;
            for l in 1..=layers {
                let stack = LayerStack::seeded(l, model.h, cfg.seed);
                let (g, stats) = gc_stack_once(&stack, &inputs[0], cfg.seed, l)?;
                let bytes = stats.bytes_from(Side::A);
                report.layers.push(LayerPoint {
                    layers: l,
                    garbler_to_evaluator_bytes: bytes,
                    total_bytes: stats.total_bytes(),
                    and_count: g.and_count as u64,
                    delta_bytes: prev.map(|p| bytes as i64 - p as i64),
                });
                prev = Some(bytes);
            }
            let pts: Vec<(f64, f64)> = report
                .layers
                .iter()
                .map(|p| (p.layers as f64, p.garbler_to_evaluator_bytes as f64))
                .collect();
            report.layer_fit = linear_fit(&pts);

            let (_, single) = model_session(cfg, Mode::Gc, &model, &batch[..1], 0)?;
            let (_, total) = model_session(cfg, Mode::Gc, &model, &batch, 1)?;
            report.gc_single_bytes = Some(single.total_bytes());
            report.gc_total_bytes = Some(total.total_bytes());
            report.gc_ratio = Some(
                total.total_bytes() as f64 / (inferences as f64 * single.total_bytes() as f64),
            );
        }
        Mode::Fhe => {
            let (traces, total) = model_session(cfg, Mode::Fhe, &model, &batch, 0)?;
            let s = traces[0].comm.total_bytes();
            report.fhe_setup_bytes = Some(s);
            report.fhe_total_bytes = Some(total.total_bytes());
            if inferences > 1 {
                report.fhe_marginal_bytes =
                    Some((total.total_bytes() - s) as f64 / (inferences - 1) as f64);
            }
            let (_, single) = model_session(cfg, Mode::Gc, &model, &batch[..1], 1)?;
            report.gc_single_bytes = Some(single.total_bytes());
            if let Some(eps) = report.fhe_marginal_bytes {
                let (rows, at) =
                    crossover_table(single.total_bytes() as f64, s as f64, eps, &CROSSOVER_NS);
                report.crossover = rows;
                report.crossover_n = at;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_of_exact_line() {
        let f = linear_fit(&[(1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crossover_point() {
        let (rows, at) = crossover_table(10.0, 50.0, 1.0, &[1, 10]);
        assert_eq!(rows[0].cheaper, Mode::Gc);
        assert_eq!(rows[1].cheaper, Mode::Fhe);
        assert!((at.unwrap() - 49.0 / 9.0).abs() < 1e-12);
    }
}
