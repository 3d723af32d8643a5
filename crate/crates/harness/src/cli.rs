//! Command-line interface.

use crate::config::{ConfigError, ExperimentConfig, Kind};
use crate::error::{HarnessError, Result};
use clap::{Parser, Subcommand};
use gradconf::Execution;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "gradconf", version, about = "Gradient confusion experiments")]
pub struct Cli {
    /// Config file of `section.key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `experiment.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides `experiment.out`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Untrimmed sweep grids (10 seeds, depths and widths up to 1000).
    #[arg(long, global = true)]
    pub full_grid: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Backprop against finite differences over the architecture grid.
    Gradcheck,
    /// One SGD run with confusion probes.
    Train,
    /// Over- versus under-parameterized linear regression.
    Fig1,
    /// Depth sweep with learning-rate grid search.
    SweepDepth,
    /// Width sweep with learning-rate grid search.
    SweepWidth,
    /// Monte Carlo confusion probabilities over depths and widths.
    Conc,
    /// Near-orthogonality of random unit vectors.
    Orthovec,
    /// Validates and summarizes an IDX image/label pair.
    MnistImport {
        #[arg(long)]
        images: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
    },
}

impl Command {
    pub fn kind(&self) -> Kind {
        match self {
            Command::Gradcheck => Kind::Gradcheck,
            Command::Train => Kind::Train,
            Command::Fig1 => Kind::Fig1,
            Command::SweepDepth => Kind::SweepDepth,
            Command::SweepWidth => Kind::SweepWidth,
            Command::Conc => Kind::Conc,
            Command::Orthovec => Kind::Orthovec,
            Command::MnistImport { .. } => Kind::MnistImport,
        }
    }
}

impl Cli {
    /// The config file (or the defaults of the subcommand) with command-line overrides applied.
    pub fn resolve(&self) -> std::result::Result<ExperimentConfig, ConfigError> {
        let kind = self.command.kind();
        let mut cfg = match &self.config {
            Some(path) => {
                let cfg = ExperimentConfig::load(path)?;
                if cfg.experiment.kind != kind {
                    return Err(ConfigError::Range {
                        key: "experiment.kind",
                        msg: format!("config is for `{}` but `{kind}` was requested", cfg.experiment.kind),
                    });
                }
                cfg
            }
            None => ExperimentConfig::new(kind, 0),
        };
        if let Some(seed) = self.seed {
            cfg.experiment.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.experiment.out = out.clone();
        }
        if self.full_grid {
            cfg.use_full_grid();
        }
        if let Command::MnistImport { images, labels } = &self.command {
            if images.is_some() {
                cfg.data.images = images.clone();
            }
            if labels.is_some() {
                cfg.data.labels = labels.clone();
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn execution(&self) -> Execution {
        if self.threads == Some(1) {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn run(&self) -> Result<()> {
        let cfg = self.resolve().map_err(HarnessError::Config)?;
        #[cfg(feature = "parallel")]
        if let Some(n) = self.threads.filter(|&n| n > 1) {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("thread pool already configured: {e}");
            }
        }
        log::info!("{} with seed {}, writing to {}", cfg.experiment.kind, cfg.experiment.seed, cfg.experiment.out.display());
        crate::execute(&cfg, self.execution())
    }
}
