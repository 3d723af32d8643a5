//! Over- versus under-parameterized linear regression under minibatch-1 SGD.
//!
//! Inputs are standard Gaussian vectors rescaled to unit norm and targets are
//! independent standard Gaussians clamped to `[−1, 1]`, so the `d < N` model
//! cannot interpolate while the `d > N` one can.

use super::{mean, FIG1_STREAM};
use crate::config::ExperimentConfig;
use crate::error::{Result, StepContext};
use gradconf::init::Architecture;
use gradconf::model::{Dataset, Loss, NetworkParams};
use gradconf::numkit::{Matrix, RngStream};
use gradconf::objective::NetworkObjective;
use gradconf::sgd::{self, ProbeSchedule, SgdConfig};
use gradconf::Execution;
use serde::Serialize;

pub fn regression_data(d: usize, n: usize, rng: &mut RngStream) -> gradconf::Result<Dataset> {
    let mut xs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        xs.push(x);
    }
    let ys = (0..n).map(|_| rng.gaussian().clamp(-1.0, 1.0)).collect();
    Dataset::new(xs, ys)
}

/// Per-epoch series of one model size, averaged over seeds.
#[derive(Debug, Clone, Serialize)]
pub struct Fig1Series {
    pub d: usize,
    pub loss: Vec<f64>,
    /// Mean pairwise cosine of the per-example gradients; `None` once gradients vanish.
    pub mean_cosine: Vec<Option<f64>>,
    pub min_cosine: Vec<Option<f64>>,
}

impl Fig1Series {
    pub fn final_loss(&self) -> f64 {
        *self.loss.last().unwrap()
    }

    pub fn final_mean_cosine(&self) -> Option<f64> {
        *self.mean_cosine.last().unwrap()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig1Summary {
    pub d: usize,
    pub final_loss: f64,
    pub final_mean_cosine: Option<f64>,
    pub run_mean_cosine: Option<f64>,
}

/// Per-epoch loss, mean cosine and min cosine of one run.
type EpochTrace = Vec<(f64, Option<f64>, Option<f64>)>;

fn run_one(cfg: &ExperimentConfig, d: usize, seed_idx: usize) -> gradconf::Result<EpochTrace> {
    let f = &cfg.fig1;
    let mut rng = RngStream::new(cfg.experiment.seed, FIG1_STREAM).child((d * 1000 + seed_idx) as u64);
    let data = regression_data(d, f.n, &mut rng)?;
    let arch = Architecture::linear(d);
    let template = NetworkParams::new(vec![Matrix::zeros(1, d)], arch.activation, false, arch.output_scale)?;
    let obj = NetworkObjective::new(template, data, Loss::Square)?;
    let mut sgd_cfg = SgdConfig::new(f.learning_rate, f.epochs * f.n, cfg.experiment.seed);
    sgd_cfg.stream = (d * 1000 + seed_idx) as u64;
    sgd_cfg.probes = ProbeSchedule::EveryEpoch;
    sgd_cfg.probe_confusion = true;
    let (_, log) = sgd::run_sgd(&obj, &obj.initial_point(), &sgd_cfg)?;
    Ok(log
        .records
        .iter()
        .map(|r| {
            let c = r.confusion.as_ref();
            (r.objective, c.and_then(|c| c.mean_cosine), c.and_then(|c| c.min_cosine))
        })
        .collect())
}

fn average(col: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<Option<f64>> = col.collect();
    if vals.iter().any(Option::is_none) {
        return None;
    }
    mean(&vals.into_iter().flatten().collect::<Vec<_>>())
}

pub fn run(cfg: &ExperimentConfig, exec: Execution) -> Result<(Vec<Fig1Series>, Vec<Fig1Summary>)> {
    let f = &cfg.fig1;
    let jobs: Vec<(usize, usize)> = f.dims.iter().flat_map(|&d| (0..f.seeds).map(move |s| (d, s))).collect();
    let runs = exec.try_map(jobs.len(), |j| run_one(cfg, jobs[j].0, jobs[j].1)).step("fig1 training")?;
    let mut series = Vec::new();
    let mut summaries = Vec::new();
    for (k, &d) in f.dims.iter().enumerate() {
        let mine = &runs[k * f.seeds..(k + 1) * f.seeds];
        let epochs = mine[0].len();
        let s = Fig1Series {
            d,
            loss: (0..epochs).map(|e| mean(&mine.iter().map(|r| r[e].0).collect::<Vec<_>>()).unwrap()).collect(),
            mean_cosine: (0..epochs).map(|e| average(mine.iter().map(|r| r[e].1))).collect(),
            min_cosine: (0..epochs).map(|e| average(mine.iter().map(|r| r[e].2))).collect(),
        };
        summaries.push(Fig1Summary {
            d,
            final_loss: s.final_loss(),
            final_mean_cosine: s.final_mean_cosine(),
            run_mean_cosine: mean(&s.mean_cosine.iter().flatten().copied().collect::<Vec<_>>()),
        });
        series.push(s);
    }
    Ok((series, summaries))
}

/// Header and rows of `fig1.csv`: one row per epoch, three columns per model size.
pub fn table(series: &[Fig1Series]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["epoch".to_string()];
    for s in series {
        header.extend([format!("loss_d{}", s.d), format!("mean_cosine_d{}", s.d), format!("min_cosine_d{}", s.d)]);
    }
    let rows = (0..series[0].loss.len())
        .map(|e| {
            let mut row = vec![e.to_string()];
            for s in series {
                row.extend([
                    crate::output::cell(Some(s.loss[e])),
                    crate::output::cell(s.mean_cosine[e]),
                    crate::output::cell(s.min_cosine[e]),
                ]);
            }
            row
        })
        .collect();
    (header, rows)
}
