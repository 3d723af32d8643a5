//! Depth and width sweeps with a per-architecture learning-rate grid search.

use super::train::sgd_config;
use super::{architecture, dataset, mean, weight_scheme, INIT_STREAM, PROBE_STREAM};
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result, StepContext};
use crate::output::cell;
use gradconf::confusion;
use gradconf::model::Dataset;
use gradconf::numkit::RngStream;
use gradconf::objective::{NetworkObjective, Objective};
use gradconf::sgd::{self, ProbeSchedule, RunStatus};
use gradconf::Execution;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Depth,
    Width,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Depth => "depth",
            Axis::Width => "width",
        }
    }
}

pub const RUN_COLUMNS: [&str; 8] = ["depth", "width", "learning_rate", "seed", "status", "initial_loss", "final_loss", "min_cosine"];
pub const CELL_COLUMNS: [&str; 7] = ["depth", "width", "learning_rate", "completed", "final_loss", "min_cosine", "status"];

/// One SGD run of the grid search.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRun {
    pub depth: usize,
    pub width: usize,
    pub learning_rate: f64,
    pub seed: usize,
    pub status: RunStatus,
    pub initial_loss: f64,
    pub final_loss: Option<f64>,
    /// Lowest minibatch-pair cosine at the end of training.
    pub min_cosine: Option<f64>,
}

impl SweepRun {
    /// Finished without diverging and lowered the loss.
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed && self.final_loss.is_some_and(|f| f < self.initial_loss)
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            self.depth.to_string(),
            self.width.to_string(),
            self.learning_rate.to_string(),
            self.seed.to_string(),
            if self.status == RunStatus::Completed && !self.completed() { "no-decrease" } else { self.status.as_str() }.into(),
            cell(Some(self.initial_loss)),
            cell(self.final_loss),
            cell(self.min_cosine),
        ]
    }
}

/// Selected learning rate of one architecture with its seed averages.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub depth: usize,
    pub width: usize,
    pub learning_rate: Option<f64>,
    pub completed: usize,
    pub final_loss: Option<f64>,
    pub min_cosine: Option<f64>,
}

impl SweepCell {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.depth.to_string(),
            self.width.to_string(),
            cell(self.learning_rate),
            self.completed.to_string(),
            cell(self.final_loss),
            cell(self.min_cosine),
            if self.learning_rate.is_some() { "ok" } else { "no-rate" }.into(),
        ]
    }
}

/// Picks the rate with the lowest mean final loss over completed seeds, ignoring
/// rates with fewer than `required` completed seeds. Ties keep the earlier rate.
pub fn select_learning_rate(runs: &[SweepRun], rates: &[f64], required: usize) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &lr in rates {
        let finals: Vec<f64> =
            runs.iter().filter(|r| r.learning_rate == lr && r.completed()).filter_map(|r| r.final_loss).collect();
        if finals.len() < required {
            continue;
        }
        let m = mean(&finals).unwrap();
        if best.is_none_or(|(_, b)| m < b) {
            best = Some((lr, m));
        }
    }
    best.map(|(lr, _)| lr)
}

fn one_run(cfg: &ExperimentConfig, data: &Dataset, depth: usize, width: usize, lr: f64, seed: usize) -> Result<SweepRun> {
    let step = format!("sweep run depth {depth}, width {width}, rate {lr}, seed {seed}");
    let arch = architecture(cfg, data.dim(), width, depth);
    let mut rng = RngStream::new(cfg.experiment.seed, INIT_STREAM).child(seed as u64);
    let params = weight_scheme(cfg).draw(&arch, &mut rng).step(&step)?;
    let obj = NetworkObjective::new(params, data.clone(), cfg.model.loss).step(&step)?;
    let w0 = obj.initial_point();
    let initial_loss = obj.value(&w0).step(&step)?;
    let mut sgd_cfg = sgd_config(cfg, lr, cfg.experiment.seed, seed as u64);
    sgd_cfg.probes = ProbeSchedule::Endpoints;
    sgd_cfg.probe_confusion = false;
    let mut run = SweepRun { depth, width, learning_rate: lr, seed, status: RunStatus::Diverged, initial_loss, final_loss: None, min_cosine: None };
    match sgd::run_sgd(&obj, &w0, &sgd_cfg) {
        Ok((w, log)) => {
            run.status = RunStatus::Completed;
            run.final_loss = log.final_objective();
            if run.completed() {
                let params = obj.params_at(&w).step(&step)?;
                let mut probe_rng = RngStream::new(cfg.experiment.seed, PROBE_STREAM).child(seed as u64);
                let batch = cfg.sweep.probe_batch.min(data.len());
                let probe = confusion::minibatch_probe(&params, data, cfg.model.loss, &mut probe_rng, cfg.sweep.probe_pairs, batch)
                    .step(&step)?;
                run.min_cosine = probe.stats.min_cosine;
            }
        }
        Err(gradconf::Error::Divergence { .. }) => {}
        Err(source) => return Err(HarnessError::Step { step, source }),
    }
    Ok(run)
}

/// `(depth, width)` grid of the sweep along `axis`.
pub fn grid(cfg: &ExperimentConfig, axis: Axis) -> Vec<(usize, usize)> {
    match axis {
        Axis::Depth => cfg.sweep.depths.iter().map(|&d| (d, cfg.sweep.fixed_width)).collect(),
        Axis::Width => cfg.sweep.widths.iter().map(|&w| (cfg.sweep.fixed_depth, w)).collect(),
    }
}

pub fn run(cfg: &ExperimentConfig, axis: Axis, exec: Execution) -> Result<(Vec<SweepRun>, Vec<SweepCell>)> {
    let data = dataset(cfg)?;
    let s = &cfg.sweep;
    let mut jobs = Vec::new();
    for (depth, width) in grid(cfg, axis) {
        for &lr in &s.learning_rates {
            for seed in 0..s.seeds {
                jobs.push((depth, width, lr, seed));
            }
        }
    }
    let runs = exec.try_map(jobs.len(), |j| {
        let (depth, width, lr, seed) = jobs[j];
        one_run(cfg, &data, depth, width, lr, seed)
    })?;
    let cells = grid(cfg, axis)
        .into_iter()
        .map(|(depth, width)| {
            let mine: Vec<SweepRun> = runs.iter().filter(|r| r.depth == depth && r.width == width).cloned().collect();
            let lr = select_learning_rate(&mine, &s.learning_rates, s.required_seeds);
            let chosen: Vec<&SweepRun> = mine.iter().filter(|r| Some(r.learning_rate) == lr && r.completed()).collect();
            SweepCell {
                depth,
                width,
                learning_rate: lr,
                completed: chosen.len(),
                final_loss: mean(&chosen.iter().filter_map(|r| r.final_loss).collect::<Vec<_>>()),
                min_cosine: mean(&chosen.iter().filter_map(|r| r.min_cosine).collect::<Vec<_>>()),
            }
        })
        .collect();
    Ok((runs, cells))
}
