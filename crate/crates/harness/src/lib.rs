//! Experiment runner for the gradconf library: configuration, IDX ingestion,
//! recipes and result files.

pub mod cli;
pub mod config;
pub mod error;
pub mod idx;
pub mod output;
pub mod recipes;

use config::{ExperimentConfig, Kind};
use error::{Result, EXIT_DIVERGENCE};
use gradconf::Execution;
use output::{Manifest, OutputDir};
use recipes::sweep::{self, Axis};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Runs the configured recipe below `experiment.out` and finishes with `manifest.json`.
pub fn execute(cfg: &ExperimentConfig, exec: Execution) -> Result<()> {
    let mut out = OutputDir::create(&cfg.experiment.out)?;
    let result = dispatch(cfg, exec, &mut out);
    let status = match &result {
        Ok(()) => "ok",
        Err(e) if e.exit_code() == EXIT_DIVERGENCE => "diverged",
        Err(_) => "failed",
    };
    let files = out.files().to_vec();
    let text = cfg.to_text();
    let manifest = Manifest {
        command: cfg.experiment.kind.name(),
        version: VERSION,
        seed: cfg.experiment.seed,
        status,
        files: &files,
        config: &text,
    };
    let written = out.write_json("manifest.json", &manifest);
    result?;
    written?;
    Ok(())
}

fn dispatch(cfg: &ExperimentConfig, exec: Execution, out: &mut OutputDir) -> Result<()> {
    match cfg.experiment.kind {
        Kind::Gradcheck => {
            let (rows, summary) = recipes::gradcheck::run(cfg, exec)?;
            out.write_csv("gradcheck.csv", &recipes::gradcheck::COLUMNS, &rows.iter().map(|r| r.record()).collect::<Vec<_>>())?;
            out.write_json("gradcheck_summary.json", &summary)?;
            if !summary.pass {
                log::warn!("gradient check above tolerance: worst relative error {}", summary.max_rel_error);
            }
        }
        Kind::Train => {
            recipes::train::run(cfg, out)?;
        }
        Kind::Fig1 => {
            let (series, summary) = recipes::fig1::run(cfg, exec)?;
            let (header, rows) = recipes::fig1::table(&series);
            out.write_csv("fig1.csv", &header.iter().map(String::as_str).collect::<Vec<_>>(), &rows)?;
            out.write_json("fig1_summary.json", &summary)?;
        }
        Kind::SweepDepth | Kind::SweepWidth => {
            let axis = if cfg.experiment.kind == Kind::SweepDepth { Axis::Depth } else { Axis::Width };
            let (runs, cells) = sweep::run(cfg, axis, exec)?;
            let name = axis.name();
            out.write_csv(&format!("sweep_{name}_runs.csv"), &sweep::RUN_COLUMNS, &runs.iter().map(|r| r.record()).collect::<Vec<_>>())?;
            out.write_csv(&format!("sweep_{name}.csv"), &sweep::CELL_COLUMNS, &cells.iter().map(|c| c.record()).collect::<Vec<_>>())?;
            out.write_json(&format!("sweep_{name}_summary.json"), &cells)?;
        }
        Kind::Conc => {
            let rows = recipes::theory::conc(cfg, exec)?;
            out.write_csv("conc.csv", &recipes::theory::CONC_COLUMNS, &recipes::theory::conc_records(cfg, &rows))?;
            out.write_json("conc_summary.json", &rows)?;
        }
        Kind::Orthovec => {
            let rows = recipes::theory::orthovec(cfg, exec)?;
            out.write_csv("orthovec.csv", &recipes::theory::ORTHOVEC_COLUMNS, &rows.iter().map(|r| r.record()).collect::<Vec<_>>())?;
            out.write_json("orthovec_summary.json", &rows)?;
        }
        Kind::MnistImport => {
            let (summary, rows) = recipes::mnist::run(cfg)?;
            out.write_csv("mnist_labels.csv", &["index", "digit", "label"], &rows)?;
            out.write_json("mnist_summary.json", &summary)?;
        }
    }
    Ok(())
}
