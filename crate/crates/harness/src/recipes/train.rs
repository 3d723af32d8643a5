//! A single SGD run on the configured network and data.

use super::{architecture, dataset, weight_scheme, INIT_STREAM};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result, StepContext};
use crate::output::OutputDir;
use gradconf::numkit::RngStream;
use gradconf::objective::NetworkObjective;
use gradconf::sgd::{self, ProbeSchedule, SgdConfig, StepDecay, TrainLog, TrainSummary};
use serde::Serialize;

pub fn sgd_config(cfg: &ExperimentConfig, learning_rate: f64, seed: u64, stream: u64) -> SgdConfig {
    let s = &cfg.sgd;
    SgdConfig {
        learning_rate,
        iterations: s.iterations,
        batch_size: s.batch_size,
        sampling: s.sampling,
        decay: (!s.decay_epochs.is_empty()).then(|| StepDecay { epochs: s.decay_epochs.clone(), factor: s.decay_factor }),
        probes: s.probe_every.map_or(ProbeSchedule::EveryEpoch, ProbeSchedule::Every),
        probe_confusion: s.probe_confusion,
        seed,
        stream,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub n: usize,
    pub d: usize,
    pub param_count: usize,
    pub learning_rate: f64,
    #[serde(flatten)]
    pub summary: TrainSummary,
}

/// Writes `train_log.csv` and `train_summary.json`. A diverged run still writes both,
/// with status `diverged`, before the error is returned.
pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<TrainReport> {
    let data = dataset(cfg)?;
    let d = data.dim();
    let arch = architecture(cfg, d, cfg.model.width, cfg.model.depth);
    let params = weight_scheme(cfg).draw(&arch, &mut RngStream::new(cfg.experiment.seed, INIT_STREAM)).step("initialization")?;
    let param_count = params.param_count();
    let n = data.len();
    let obj = NetworkObjective::new(params, data, cfg.model.loss).step("objective")?;
    let sgd_cfg = sgd_config(cfg, cfg.sgd.learning_rate, cfg.experiment.seed, 0);
    let (log, diverged_at) = match sgd::run_sgd(&obj, &obj.initial_point(), &sgd_cfg) {
        Ok((_, log)) => (log, None),
        Err(gradconf::Error::Divergence { iteration, log }) => (*log, Some(iteration)),
        Err(e) => return Err(HarnessError::Step { step: "training".into(), source: e }),
    };
    out.write_with("train_log.csv", |f| log.write_csv(std::io::BufWriter::new(f)))?;
    let report = report(&log, n, d, param_count, cfg.sgd.learning_rate)?;
    out.write_json("train_summary.json", &report)?;
    match diverged_at {
        Some(iteration) => Err(HarnessError::Divergence { step: "training".into(), iteration }),
        None => Ok(report),
    }
}

fn report(log: &TrainLog, n: usize, d: usize, param_count: usize, learning_rate: f64) -> Result<TrainReport> {
    // the initial probe is always finite, otherwise the objective itself was rejected
    let summary = log.summary().ok_or_else(|| HarnessError::Divergence { step: "training".into(), iteration: 0 })?;
    Ok(TrainReport { n, d, param_count, learning_rate, summary })
}
