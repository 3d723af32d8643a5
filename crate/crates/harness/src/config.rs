//! Flat `section.key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are comma separated.
//! Every key has a default except `experiment.kind` and `experiment.seed`.

use gradconf::init::InitScheme;
use gradconf::model::{Activation, Loss};
use gradconf::sgd::Sampling;
use gradconf::theory::Family;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const REQUIRED_KEYS: [&str; 2] = ["experiment.kind", "experiment.seed"];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<&'static str>),
    #[error("{key}: {msg}")]
    Range { key: &'static str, msg: String },
    #[error("{key}: file `{}` does not exist", path.display())]
    MissingFile { key: &'static str, path: PathBuf },
    #[error("cannot read config `{}`: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Gradcheck,
    Train,
    Fig1,
    SweepDepth,
    SweepWidth,
    Conc,
    Orthovec,
    MnistImport,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Gradcheck,
        Kind::Train,
        Kind::Fig1,
        Kind::SweepDepth,
        Kind::SweepWidth,
        Kind::Conc,
        Kind::Orthovec,
        Kind::MnistImport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Gradcheck => "gradcheck",
            Kind::Train => "train",
            Kind::Fig1 => "fig1",
            Kind::SweepDepth => "sweep-depth",
            Kind::SweepWidth => "sweep-width",
            Kind::Conc => "conc",
            Kind::Orthovec => "orthovec",
            Kind::MnistImport => "mnist-import",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Kind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    /// Uniform points on the unit sphere labelled by a unit-norm linear teacher.
    Synthetic,
    /// MNIST-style IDX image and label files, digit parity as ±1 labels.
    Idx,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub kind: Kind,
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub family: Family,
    pub d: usize,
    pub width: usize,
    pub depth: usize,
    pub activation: Activation,
    pub loss: Loss,
    pub biases: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSection {
    pub scheme: InitScheme,
    pub project_small: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub source: DataSource,
    pub n: usize,
    /// Teacher seed; the experiment seed when absent.
    pub teacher_seed: Option<u64>,
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdSection {
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub sampling: Sampling,
    pub decay_epochs: Vec<usize>,
    pub decay_factor: f64,
    /// Probe interval in iterations; once per epoch when absent.
    pub probe_every: Option<usize>,
    pub probe_confusion: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheorySection {
    pub eta: f64,
    pub trials: usize,
    pub depths: Vec<usize>,
    pub widths: Vec<usize>,
    /// `(d, N, ν)` points of the near-orthogonality check.
    pub orthovec: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub depths: Vec<usize>,
    pub widths: Vec<usize>,
    pub fixed_width: usize,
    pub fixed_depth: usize,
    pub seeds: usize,
    /// Completed seeds a learning rate needs to be eligible.
    pub required_seeds: usize,
    pub learning_rates: Vec<f64>,
    pub probe_pairs: usize,
    pub probe_batch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckSection {
    /// Input dimension of the probed networks.
    pub d: usize,
    pub depths: Vec<usize>,
    pub widths: Vec<usize>,
    pub probes: usize,
    pub step: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Section {
    pub dims: Vec<usize>,
    pub n: usize,
    pub seeds: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub model: ModelSection,
    pub init: InitSection,
    pub data: DataSection,
    pub sgd: SgdSection,
    pub theory: TheorySection,
    pub sweep: SweepSection,
    pub gradcheck: GradcheckSection,
    pub fig1: Fig1Section,
}

impl ExperimentConfig {
    /// Defaults for `kind`: the trimmed desk-scale grids.
    pub fn new(kind: Kind, seed: u64) -> Self {
        ExperimentConfig {
            experiment: ExperimentSection { kind, seed, out: PathBuf::from("results") },
            model: ModelSection {
                family: Family::Mlp,
                d: 32,
                width: 16,
                depth: 2,
                activation: Activation::Tanh,
                loss: Loss::Square,
                biases: false,
            },
            init: InitSection { scheme: InitScheme::Strategy1 { kappa: 1.0 }, project_small: false },
            data: DataSection { source: DataSource::Synthetic, n: 64, teacher_seed: None, images: None, labels: None, limit: None },
            sgd: SgdSection {
                learning_rate: 0.05,
                iterations: 2000,
                batch_size: 1,
                sampling: Sampling::WithReplacement,
                decay_epochs: Vec::new(),
                decay_factor: 0.1,
                probe_every: None,
                probe_confusion: true,
            },
            theory: TheorySection {
                eta: 0.05,
                trials: 2000,
                depths: vec![2, 5, 10, 20],
                widths: vec![32],
                orthovec: vec![(100, 10, 0.5), (1000, 10, 0.2), (300, 30, 0.3)],
            },
            sweep: SweepSection {
                depths: vec![3, 10, 30, 100, 300],
                widths: vec![10, 30, 100, 300],
                fixed_width: 100,
                fixed_depth: 300,
                seeds: 3,
                required_seeds: 3,
                learning_rates: (0..=6).map(|e| 10f64.powi(-e)).collect(),
                probe_pairs: 100,
                probe_batch: 128,
            },
            gradcheck: GradcheckSection { d: 4, depths: vec![0, 1, 2, 5], widths: vec![1, 3, 8], probes: 20, step: 1e-5, tolerance: 1e-6 },
            fig1: Fig1Section { dims: vec![80, 120], n: 100, seeds: 3, epochs: 200, learning_rate: 0.1 },
        }
    }

    /// Switches the sweep grids to the untrimmed ones (10 seeds, at least 8 completed).
    pub fn use_full_grid(&mut self) {
        self.sweep.depths = vec![3, 10, 30, 100, 300, 1000];
        self.sweep.widths = vec![10, 30, 100, 300, 1000];
        self.sweep.seeds = 10;
        self.sweep.required_seeds = 8;
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs: Vec<(usize, &str, &str)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| ConfigError::Parse { line, msg: format!("expected `section.key = value`, got `{body}`") })?;
            let (key, value) = (key.trim(), value.trim());
            if !key.contains('.') {
                return Err(ConfigError::Parse { line, msg: format!("key `{key}` has no section") });
            }
            if pairs.iter().any(|(_, k, _)| *k == key) {
                return Err(ConfigError::Duplicate { line, key: key.to_string() });
            }
            pairs.push((line, key, value));
        }

        let find = |key: &str| pairs.iter().find(|(_, k, _)| *k == key);
        let missing: Vec<&'static str> = REQUIRED_KEYS.into_iter().filter(|k| find(k).is_none()).collect();
        if !missing.is_empty() {
            // unknown keys are still reported first, with their line
            let mut scratch = ExperimentConfig::new(Kind::Train, 0);
            if let Some((line, key, _)) = pairs.iter().find(|(_, k, v)| matches!(scratch.set(k, v), Err(SetError::Unknown))) {
                return Err(ConfigError::UnknownKey { line: *line, key: key.to_string() });
            }
            return Err(ConfigError::Missing(missing));
        }
        let (kline, _, kval) = find("experiment.kind").unwrap();
        let kind = kval.parse().map_err(|msg| ConfigError::Parse { line: *kline, msg })?;
        let mut cfg = ExperimentConfig::new(kind, 0);
        for &(line, key, value) in &pairs {
            cfg.set(key, value).map_err(|e| match e {
                SetError::Unknown => ConfigError::UnknownKey { line, key: key.to_string() },
                SetError::Value(msg) => ConfigError::Parse { line, msg: format!("{key}: {msg}") },
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), SetError> {
        match key {
            "experiment.kind" => self.experiment.kind = v.parse().map_err(SetError::Value)?,
            "experiment.seed" => self.experiment.seed = num(v)?,
            "experiment.out" => self.experiment.out = PathBuf::from(v),
            "model.family" => self.model.family = core(v)?,
            "model.d" => self.model.d = num(v)?,
            "model.width" => self.model.width = num(v)?,
            "model.depth" => self.model.depth = num(v)?,
            "model.activation" => self.model.activation = core(v)?,
            "model.loss" => self.model.loss = core(v)?,
            "model.biases" => self.model.biases = boolean(v)?,
            "init.scheme" => self.init.scheme = core(v)?,
            "init.project_small" => self.init.project_small = boolean(v)?,
            "data.source" => {
                self.data.source = match v {
                    "synthetic" => DataSource::Synthetic,
                    "idx" => DataSource::Idx,
                    _ => return Err(SetError::Value(format!("expected `synthetic` or `idx`, got `{v}`"))),
                }
            }
            "data.n" => self.data.n = num(v)?,
            "data.teacher_seed" => self.data.teacher_seed = Some(num(v)?),
            "data.images" => self.data.images = Some(PathBuf::from(v)),
            "data.labels" => self.data.labels = Some(PathBuf::from(v)),
            "data.limit" => self.data.limit = Some(num(v)?),
            "sgd.learning_rate" => self.sgd.learning_rate = num(v)?,
            "sgd.iterations" => self.sgd.iterations = num(v)?,
            "sgd.batch_size" => self.sgd.batch_size = num(v)?,
            "sgd.sampling" => {
                self.sgd.sampling = match v {
                    "with-replacement" => Sampling::WithReplacement,
                    "epoch-shuffle" => Sampling::EpochShuffle,
                    _ => return Err(SetError::Value(format!("expected `with-replacement` or `epoch-shuffle`, got `{v}`"))),
                }
            }
            "sgd.decay_epochs" => self.sgd.decay_epochs = list(v)?,
            "sgd.decay_factor" => self.sgd.decay_factor = num(v)?,
            "sgd.probe_every" => self.sgd.probe_every = Some(num(v)?),
            "sgd.probe_confusion" => self.sgd.probe_confusion = boolean(v)?,
            "theory.eta" => self.theory.eta = num(v)?,
            "theory.trials" => self.theory.trials = num(v)?,
            "theory.depths" => self.theory.depths = list(v)?,
            "theory.widths" => self.theory.widths = list(v)?,
            "theory.orthovec" => self.theory.orthovec = triples(v)?,
            "sweep.depths" => self.sweep.depths = list(v)?,
            "sweep.widths" => self.sweep.widths = list(v)?,
            "sweep.fixed_width" => self.sweep.fixed_width = num(v)?,
            "sweep.fixed_depth" => self.sweep.fixed_depth = num(v)?,
            "sweep.seeds" => self.sweep.seeds = num(v)?,
            "sweep.required_seeds" => self.sweep.required_seeds = num(v)?,
            "sweep.learning_rates" => self.sweep.learning_rates = list(v)?,
            "sweep.probe_pairs" => self.sweep.probe_pairs = num(v)?,
            "sweep.probe_batch" => self.sweep.probe_batch = num(v)?,
            "gradcheck.d" => self.gradcheck.d = num(v)?,
            "gradcheck.depths" => self.gradcheck.depths = list(v)?,
            "gradcheck.widths" => self.gradcheck.widths = list(v)?,
            "gradcheck.probes" => self.gradcheck.probes = num(v)?,
            "gradcheck.step" => self.gradcheck.step = num(v)?,
            "gradcheck.tolerance" => self.gradcheck.tolerance = num(v)?,
            "fig1.dims" => self.fig1.dims = list(v)?,
            "fig1.n" => self.fig1.n = num(v)?,
            "fig1.seeds" => self.fig1.seeds = num(v)?,
            "fig1.epochs" => self.fig1.epochs = num(v)?,
            "fig1.learning_rate" => self.fig1.learning_rate = num(v)?,
            _ => return Err(SetError::Unknown),
        }
        Ok(())
    }

    /// Range checks; errors name the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn check(ok: bool, key: &'static str, msg: &str) -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Range { key, msg: msg.to_string() })
            }
        }
        let pos_finite = |x: f64| x > 0.0 && x.is_finite();
        check(self.model.d >= 1, "model.d", "must be at least 1")?;
        check(self.model.width >= 1, "model.width", "must be at least 1")?;
        if let Err(e) = self.init.scheme.validate() {
            return Err(ConfigError::Range { key: "init.scheme", msg: e.to_string() });
        }
        check(self.data.n >= 1, "data.n", "must be at least 1")?;
        check(self.data.limit != Some(0), "data.limit", "must be at least 1")?;
        check(self.sgd.learning_rate >= 0.0 && self.sgd.learning_rate.is_finite(), "sgd.learning_rate", "must be finite and >= 0")?;
        check(self.sgd.iterations >= 1, "sgd.iterations", "must be at least 1")?;
        check(self.sgd.batch_size >= 1, "sgd.batch_size", "must be at least 1")?;
        check(pos_finite(self.sgd.decay_factor) && self.sgd.decay_factor <= 1.0, "sgd.decay_factor", "must lie in (0, 1]")?;
        check(self.sgd.probe_every != Some(0), "sgd.probe_every", "must be at least 1")?;
        check(self.theory.eta >= 0.0 && self.theory.eta.is_finite(), "theory.eta", "must be finite and >= 0")?;
        check(self.theory.trials >= 100, "theory.trials", "must be at least 100")?;
        check(!self.theory.depths.is_empty(), "theory.depths", "must not be empty")?;
        check(!self.theory.widths.is_empty() && !self.theory.widths.contains(&0), "theory.widths", "must be non-empty and positive")?;
        check(
            self.theory.orthovec.iter().all(|&(d, n, nu)| d >= 1 && n >= 1 && pos_finite(nu)),
            "theory.orthovec",
            "every point needs d >= 1, N >= 1 and nu > 0",
        )?;
        check(!self.sweep.depths.is_empty(), "sweep.depths", "must not be empty")?;
        check(!self.sweep.widths.is_empty() && !self.sweep.widths.contains(&0), "sweep.widths", "must be non-empty and positive")?;
        check(self.sweep.fixed_width >= 1, "sweep.fixed_width", "must be at least 1")?;
        check(self.sweep.seeds >= 1, "sweep.seeds", "must be at least 1")?;
        check(
            (1..=self.sweep.seeds).contains(&self.sweep.required_seeds),
            "sweep.required_seeds",
            "must lie between 1 and sweep.seeds",
        )?;
        check(
            !self.sweep.learning_rates.is_empty() && self.sweep.learning_rates.iter().all(|&a| pos_finite(a)),
            "sweep.learning_rates",
            "must be non-empty and positive",
        )?;
        check(self.sweep.probe_pairs >= 1, "sweep.probe_pairs", "must be at least 1")?;
        check(self.sweep.probe_batch >= 1, "sweep.probe_batch", "must be at least 1")?;
        check(self.gradcheck.d >= 1, "gradcheck.d", "must be at least 1")?;
        check(!self.gradcheck.widths.contains(&0), "gradcheck.widths", "must be positive")?;
        check(self.gradcheck.probes >= 1, "gradcheck.probes", "must be at least 1")?;
        check(pos_finite(self.gradcheck.step), "gradcheck.step", "must be positive")?;
        check(pos_finite(self.gradcheck.tolerance), "gradcheck.tolerance", "must be positive")?;
        check(!self.fig1.dims.is_empty() && !self.fig1.dims.contains(&0), "fig1.dims", "must be non-empty and positive")?;
        check(self.fig1.n >= 2, "fig1.n", "must be at least 2")?;
        check(self.fig1.seeds >= 1, "fig1.seeds", "must be at least 1")?;
        check(self.fig1.epochs >= 1, "fig1.epochs", "must be at least 1")?;
        check(pos_finite(self.fig1.learning_rate), "fig1.learning_rate", "must be positive")?;
        if self.data.source == DataSource::Idx || self.experiment.kind == Kind::MnistImport {
            for (key, path) in [("data.images", &self.data.images), ("data.labels", &self.data.labels)] {
                match path {
                    None => return Err(ConfigError::Range { key, msg: "required for IDX data".into() }),
                    Some(p) if !p.is_file() => return Err(ConfigError::MissingFile { key, path: p.clone() }),
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; [`ExperimentConfig::parse`] reads it back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for (key, value) in self.entries() {
            let sec = key.split('.').next().unwrap();
            if sec != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = sec;
            }
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        let mut e: Vec<(&'static str, String)> = vec![
            ("experiment.kind", self.experiment.kind.to_string()),
            ("experiment.seed", self.experiment.seed.to_string()),
            ("experiment.out", self.experiment.out.display().to_string()),
            ("model.family", self.model.family.to_string()),
            ("model.d", self.model.d.to_string()),
            ("model.width", self.model.width.to_string()),
            ("model.depth", self.model.depth.to_string()),
            ("model.activation", self.model.activation.name().into()),
            ("model.loss", self.model.loss.name().into()),
            ("model.biases", self.model.biases.to_string()),
            ("init.scheme", scheme_text(&self.init.scheme)),
            ("init.project_small", self.init.project_small.to_string()),
            ("data.source", if self.data.source == DataSource::Idx { "idx" } else { "synthetic" }.into()),
            ("data.n", self.data.n.to_string()),
        ];
        if let Some(s) = self.data.teacher_seed {
            e.push(("data.teacher_seed", s.to_string()));
        }
        if let Some(p) = &self.data.images {
            e.push(("data.images", p.display().to_string()));
        }
        if let Some(p) = &self.data.labels {
            e.push(("data.labels", p.display().to_string()));
        }
        if let Some(l) = self.data.limit {
            e.push(("data.limit", l.to_string()));
        }
        e.extend([
            ("sgd.learning_rate", self.sgd.learning_rate.to_string()),
            ("sgd.iterations", self.sgd.iterations.to_string()),
            ("sgd.batch_size", self.sgd.batch_size.to_string()),
            (
                "sgd.sampling",
                match self.sgd.sampling {
                    Sampling::WithReplacement => "with-replacement",
                    Sampling::EpochShuffle => "epoch-shuffle",
                }
                .into(),
            ),
            ("sgd.decay_epochs", join(&self.sgd.decay_epochs)),
            ("sgd.decay_factor", self.sgd.decay_factor.to_string()),
        ]);
        if let Some(p) = self.sgd.probe_every {
            e.push(("sgd.probe_every", p.to_string()));
        }
        e.extend([
            ("sgd.probe_confusion", self.sgd.probe_confusion.to_string()),
            ("theory.eta", self.theory.eta.to_string()),
            ("theory.trials", self.theory.trials.to_string()),
            ("theory.depths", join(&self.theory.depths)),
            ("theory.widths", join(&self.theory.widths)),
            (
                "theory.orthovec",
                self.theory.orthovec.iter().map(|(d, n, nu)| format!("{d}:{n}:{nu}")).collect::<Vec<_>>().join(", "),
            ),
            ("sweep.depths", join(&self.sweep.depths)),
            ("sweep.widths", join(&self.sweep.widths)),
            ("sweep.fixed_width", self.sweep.fixed_width.to_string()),
            ("sweep.fixed_depth", self.sweep.fixed_depth.to_string()),
            ("sweep.seeds", self.sweep.seeds.to_string()),
            ("sweep.required_seeds", self.sweep.required_seeds.to_string()),
            ("sweep.learning_rates", join(&self.sweep.learning_rates)),
            ("sweep.probe_pairs", self.sweep.probe_pairs.to_string()),
            ("sweep.probe_batch", self.sweep.probe_batch.to_string()),
            ("gradcheck.d", self.gradcheck.d.to_string()),
            ("gradcheck.depths", join(&self.gradcheck.depths)),
            ("gradcheck.widths", join(&self.gradcheck.widths)),
            ("gradcheck.probes", self.gradcheck.probes.to_string()),
            ("gradcheck.step", self.gradcheck.step.to_string()),
            ("gradcheck.tolerance", self.gradcheck.tolerance.to_string()),
            ("fig1.dims", join(&self.fig1.dims)),
            ("fig1.n", self.fig1.n.to_string()),
            ("fig1.seeds", self.fig1.seeds.to_string()),
            ("fig1.epochs", self.fig1.epochs.to_string()),
            ("fig1.learning_rate", self.fig1.learning_rate.to_string()),
        ]);
        e
    }

    /// Teacher seed in effect.
    pub fn teacher_seed(&self) -> u64 {
        self.data.teacher_seed.unwrap_or(self.experiment.seed)
    }
}

enum SetError {
    Unknown,
    Value(String),
}

fn num<T: FromStr>(v: &str) -> Result<T, SetError> {
    v.parse().map_err(|_| SetError::Value(format!("cannot parse `{v}`")))
}

fn core<T: FromStr<Err = gradconf::Error>>(v: &str) -> Result<T, SetError> {
    v.parse().map_err(|e: gradconf::Error| SetError::Value(e.to_string()))
}

fn boolean(v: &str) -> Result<bool, SetError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(SetError::Value(format!("expected `true` or `false`, got `{v}`"))),
    }
}

fn list<T: FromStr>(v: &str) -> Result<Vec<T>, SetError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| num(s.trim())).collect()
}

fn triples(v: &str) -> Result<Vec<(usize, usize, f64)>, SetError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|item| {
            let parts: Vec<&str> = item.trim().split(':').collect();
            match parts.as_slice() {
                [d, n, nu] => Ok((num(d)?, num(n)?, num(nu)?)),
                _ => Err(SetError::Value(format!("expected `d:N:nu`, got `{}`", item.trim()))),
            }
        })
        .collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn scheme_text(s: &InitScheme) -> String {
    match s {
        InitScheme::Strategy1 { kappa } => format!("strategy1:{kappa}"),
        other => other.name().to_string(),
    }
}
