//! Experiment recipes. Each writes its CSV/JSON files and returns a serializable summary.

pub mod fig1;
pub mod gradcheck;
pub mod mnist;
pub mod sweep;
pub mod theory;
pub mod train;

use crate::config::{DataSource, ExperimentConfig};
use crate::error::{Result, StepContext};
use crate::idx;
use gradconf::init::Architecture;
use gradconf::model::Dataset;
use gradconf::numkit::{sample_unit_sphere, RngStream};
use gradconf::theory::{draw_teacher, ConfusionExperiment, WeightScheme};
use gradconf::model;

/// Stream ids keep data, weights and probes independent under one seed.
pub const DATA_STREAM: u64 = 101;
pub const INIT_STREAM: u64 = 102;
pub const PROBE_STREAM: u64 = 103;
pub const GRADCHECK_STREAM: u64 = 104;
pub const FIG1_STREAM: u64 = 105;

/// Sphere data in `R^d` labelled by the unit teacher drawn from `teacher_seed`.
pub fn synthetic_dataset(seed: u64, teacher_seed: u64, d: usize, n: usize) -> gradconf::Result<Dataset> {
    let teacher = draw_teacher(teacher_seed, d)?;
    let mut rng = RngStream::new(seed, DATA_STREAM);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = sample_unit_sphere(&mut rng, d)?;
        ys.push(model::teacher_label(&teacher, &x)?);
        xs.push(x);
    }
    Dataset::new(xs, ys)
}

/// The configured training data; IDX inputs fix `d` to the image size.
pub fn dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match cfg.data.source {
        DataSource::Synthetic => {
            synthetic_dataset(cfg.experiment.seed, cfg.teacher_seed(), cfg.model.d, cfg.data.n).step("synthetic data")
        }
        DataSource::Idx => {
            let (images, labels) = (cfg.data.images.as_ref().unwrap(), cfg.data.labels.as_ref().unwrap());
            Ok(idx::load_idx(images, labels, cfg.data.limit)?.data)
        }
    }
}

/// Network shape for input dimension `d` at the given depth and width.
pub fn architecture(cfg: &ExperimentConfig, d: usize, width: usize, depth: usize) -> Architecture {
    let mut arch = experiment(cfg, d, width, depth).architecture();
    arch.biases = cfg.model.biases;
    arch
}

pub fn weight_scheme(cfg: &ExperimentConfig) -> WeightScheme {
    WeightScheme { init: cfg.init.scheme, project_small: cfg.init.project_small }
}

/// Monte Carlo experiment matching the config at one grid point.
pub fn experiment(cfg: &ExperimentConfig, d: usize, width: usize, depth: usize) -> ConfusionExperiment {
    ConfusionExperiment {
        family: cfg.model.family,
        scheme: weight_scheme(cfg),
        activation: cfg.model.activation,
        d,
        width,
        depth,
        n: cfg.data.n,
        eta: cfg.theory.eta,
        loss: cfg.model.loss,
        trials: cfg.theory.trials,
        seed: cfg.experiment.seed,
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}
