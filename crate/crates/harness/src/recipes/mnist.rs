//! IDX import: validates an image/label pair and reports what the loader produced.

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::idx;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ImportSummary {
    pub records: usize,
    pub rows: usize,
    pub cols: usize,
    pub dim: usize,
    pub positives: usize,
    pub negatives: usize,
    pub min_norm: f64,
    pub max_norm: f64,
    pub label_rule: &'static str,
}

/// Summary plus one `(index, digit, label)` row per record.
pub fn run(cfg: &ExperimentConfig) -> Result<(ImportSummary, Vec<Vec<String>>)> {
    let (images, labels) = (cfg.data.images.as_ref().unwrap(), cfg.data.labels.as_ref().unwrap());
    let loaded = idx::load_idx(images, labels, cfg.data.limit)?;
    let norms: Vec<f64> = loaded.data.inputs().iter().map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let positives = loaded.data.labels().iter().filter(|&&y| y > 0.0).count();
    let summary = ImportSummary {
        records: loaded.data.len(),
        rows: loaded.rows,
        cols: loaded.cols,
        dim: loaded.rows * loaded.cols,
        positives,
        negatives: loaded.data.len() - positives,
        min_norm: norms.iter().copied().fold(f64::INFINITY, f64::min),
        max_norm: norms.iter().copied().fold(0.0, f64::max),
        label_rule: "even digit -> +1, odd digit -> -1",
    };
    let rows = loaded
        .digits
        .iter()
        .zip(loaded.data.labels())
        .enumerate()
        .map(|(i, (d, y))| vec![i.to_string(), d.to_string(), y.to_string()])
        .collect();
    Ok((summary, rows))
}
