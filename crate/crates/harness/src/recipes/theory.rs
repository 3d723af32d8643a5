//! Monte Carlo confusion probabilities and the near-orthogonality check.

use super::experiment;
use crate::config::ExperimentConfig;
use crate::error::{Result, StepContext};
use gradconf::theory::{self, McEstimate};
use gradconf::Execution;
use serde::Serialize;

pub const CONC_COLUMNS: [&str; 12] = ["family", "scheme", "d", "width", "depth", "n", "eta", "trials", "successes", "point", "lo", "hi"];
pub const ORTHOVEC_COLUMNS: [&str; 9] = ["d", "n", "nu", "trials", "successes", "point", "lo", "hi", "bound"];

#[derive(Debug, Clone, Serialize)]
pub struct ConcRow {
    pub width: usize,
    pub depth: usize,
    pub estimate: McEstimate,
}

/// Violation probability over `theory.depths × theory.widths`.
pub fn conc(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<ConcRow>> {
    let mut rows = Vec::new();
    for &width in &cfg.theory.widths {
        for &depth in &cfg.theory.depths {
            let exp = experiment(cfg, cfg.model.d, width, depth);
            let estimate = theory::mc_confusion_probability(&exp, exec).step(&format!("conc at width {width}, depth {depth}"))?;
            log::info!("width {width} depth {depth}: {:.4} [{:.4}, {:.4}]", estimate.point, estimate.lo, estimate.hi);
            rows.push(ConcRow { width, depth, estimate });
        }
    }
    Ok(rows)
}

pub fn conc_records(cfg: &ExperimentConfig, rows: &[ConcRow]) -> Vec<Vec<String>> {
    let scheme = super::weight_scheme(cfg).label();
    rows.iter()
        .map(|r| {
            let e = &r.estimate;
            vec![
                cfg.model.family.to_string(),
                scheme.clone(),
                cfg.model.d.to_string(),
                r.width.to_string(),
                r.depth.to_string(),
                cfg.data.n.to_string(),
                cfg.theory.eta.to_string(),
                e.trials.to_string(),
                e.successes.to_string(),
                e.point.to_string(),
                e.lo.to_string(),
                e.hi.to_string(),
            ]
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthovecRow {
    pub d: usize,
    pub n: usize,
    pub nu: f64,
    pub estimate: McEstimate,
    pub bound: f64,
}

impl OrthovecRow {
    /// The Wilson interval reaches below `min(1, bound)`.
    pub fn consistent(&self) -> bool {
        self.estimate.lo <= self.bound.min(1.0)
    }

    pub fn record(&self) -> Vec<String> {
        let e = &self.estimate;
        vec![
            self.d.to_string(),
            self.n.to_string(),
            self.nu.to_string(),
            e.trials.to_string(),
            e.successes.to_string(),
            e.point.to_string(),
            e.lo.to_string(),
            e.hi.to_string(),
            self.bound.to_string(),
        ]
    }
}

pub fn orthovec(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<OrthovecRow>> {
    cfg.theory
        .orthovec
        .iter()
        .map(|&(d, n, nu)| {
            let r = theory::orthovec_check(d, n, nu, cfg.theory.trials, cfg.experiment.seed, exec)
                .step(&format!("orthovec at d = {d}, N = {n}, nu = {nu}"))?;
            Ok(OrthovecRow { d, n, nu, estimate: r.estimate, bound: r.bound })
        })
        .collect()
}
