//! Constant-step SGD `w_{k+1} = w_k − α ∇f̃_k(w_k)` with logged probes, the two
//! convergence bounds in terms of the confusion bound η, and separable
//! quadratic ensembles whose smoothness, PL and confusion constants are exact.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::confusion::{pairwise_stats, ConfusionStats};
use crate::exec::Execution;
use crate::numkit::{vector, RngStream};
use crate::objective::Objective;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    /// Each step draws its minibatch uniformly at random, independently of earlier steps.
    WithReplacement,
    /// Minibatches are consecutive chunks of a fresh permutation each epoch.
    /// Not covered by the convergence bounds.
    EpochShuffle,
}

/// Divide the learning rate by `factor` at the start of each listed epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDecay {
    pub epochs: Vec<usize>,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeSchedule {
    /// Every epoch-equivalent (`N / batch_size` steps).
    EveryEpoch,
    Every(usize),
    /// Only at the listed iterations.
    At(Vec<usize>),
    /// Only the initial and final points.
    Endpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub sampling: Sampling,
    pub decay: Option<StepDecay>,
    pub probes: ProbeSchedule,
    /// Also record pairwise confusion statistics of all term gradients at each probe.
    pub probe_confusion: bool,
    pub seed: u64,
    pub stream: u64,
}

impl SgdConfig {
    pub fn new(learning_rate: f64, iterations: usize, seed: u64) -> Self {
        SgdConfig {
            learning_rate,
            iterations,
            batch_size: 1,
            sampling: Sampling::WithReplacement,
            decay: None,
            probes: ProbeSchedule::EveryEpoch,
            probe_confusion: false,
            seed,
            stream: 0,
        }
    }

    pub fn validate(&self, num_terms: usize) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.batch_size == 0 || self.batch_size > num_terms {
            return Err(Error::InvalidConfig(format!(
                "batch size {} not in 1..={num_terms}",
                self.batch_size
            )));
        }
        if let Some(d) = &self.decay {
            if !(d.factor > 0.0) || !d.factor.is_finite() {
                return Err(Error::InvalidConfig(format!("decay factor must be positive, got {}", d.factor)));
            }
        }
        if self.probes == ProbeSchedule::Every(0) {
            return Err(Error::InvalidConfig("probe interval must be at least 1".into()));
        }
        Ok(())
    }

    fn steps_per_epoch(&self, num_terms: usize) -> usize {
        num_terms.div_ceil(self.batch_size).max(1)
    }

    fn is_probe(&self, k: usize, num_terms: usize) -> bool {
        if k == 0 || k == self.iterations {
            return true;
        }
        match &self.probes {
            ProbeSchedule::EveryEpoch => k.is_multiple_of(self.steps_per_epoch(num_terms)),
            ProbeSchedule::Every(m) => k.is_multiple_of(*m),
            ProbeSchedule::At(list) => list.contains(&k),
            ProbeSchedule::Endpoints => false,
        }
    }

    fn rate_at(&self, k: usize, num_terms: usize) -> f64 {
        let epoch = k / self.steps_per_epoch(num_terms);
        match &self.decay {
            Some(d) => {
                let n = d.epochs.iter().filter(|e| **e <= epoch).count();
                self.learning_rate / d.factor.powi(n as i32)
            }
            None => self.learning_rate,
        }
    }
}

/// Confusion statistics of all term gradients at a probe point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfusion {
    pub min_inner: f64,
    pub mean_inner: f64,
    pub min_cosine: Option<f64>,
    pub mean_cosine: Option<f64>,
    /// `min_i ‖∇f_i‖`
    pub min_grad_norm: f64,
}

impl ProbeConfusion {
    fn from_stats(stats: &ConfusionStats, min_grad_norm: f64) -> Self {
        ProbeConfusion {
            min_inner: stats.min_inner,
            mean_inner: stats.mean_inner,
            min_cosine: stats.min_cosine,
            mean_cosine: stats.mean_cosine,
            min_grad_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub iteration: usize,
    /// `F(w_k)`
    pub objective: f64,
    /// `‖∇F(w_k)‖`
    pub grad_norm: f64,
    pub confusion: Option<ProbeConfusion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    Diverged,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Completed => "ok",
            RunStatus::Diverged => "diverged",
        }
    }
}

/// Record of one SGD run: probes at strictly increasing iterations, all values finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<ProbeRecord>,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub status: RunStatus,
    pub iterations: usize,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    pub final_confusion: Option<ProbeConfusion>,
}

pub const TRAIN_LOG_COLUMNS: [&str; 7] =
    ["iter", "objective", "grad_norm", "min_inner", "min_cosine", "mean_cosine", "status"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrainLog {
    pub fn last(&self) -> Option<&ProbeRecord> {
        self.records.last()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.last().map(|r| r.objective)
    }

    /// Objective at iteration `k`, if it was probed.
    pub fn objective_at(&self, k: usize) -> Option<f64> {
        self.records.iter().find(|r| r.iteration == k).map(|r| r.objective)
    }

    pub fn summary(&self) -> Option<TrainSummary> {
        let first = self.records.first()?;
        let last = self.records.last()?;
        Some(TrainSummary {
            status: self.status,
            iterations: last.iteration,
            initial_objective: first.objective,
            final_objective: last.objective,
            final_grad_norm: last.grad_norm,
            final_confusion: last.confusion.clone(),
        })
    }

    /// CSV with the columns of [`TRAIN_LOG_COLUMNS`]; values absent from a probe are empty fields.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", TRAIN_LOG_COLUMNS.join(","))?;
        for r in &self.records {
            let c = r.confusion.as_ref();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.iteration,
                r.objective,
                r.grad_norm,
                opt(c.map(|c| c.min_inner)),
                opt(c.and_then(|c| c.min_cosine)),
                opt(c.and_then(|c| c.mean_cosine)),
                self.status.as_str()
            )?;
        }
        Ok(())
    }
}

fn probe<O: Objective + ?Sized>(obj: &O, w: &[f64], k: usize, confusion: bool) -> Result<ProbeRecord> {
    let objective = obj.value(w)?;
    let grad_norm = vector::norm(&obj.full_grad(w)?);
    let confusion = if confusion && obj.num_terms() >= 2 {
        let grads = obj.term_grads(w)?;
        let stats = pairwise_stats(&grads, None)?;
        let min_norm = grads.iter().map(|g| vector::norm(g)).fold(f64::INFINITY, f64::min);
        Some(ProbeConfusion::from_stats(&stats, min_norm))
    } else {
        None
    };
    Ok(ProbeRecord { iteration: k, objective, grad_norm, confusion })
}

fn record_is_finite(r: &ProbeRecord) -> bool {
    let c_ok = r.confusion.as_ref().is_none_or(|c| {
        c.min_inner.is_finite()
            && c.mean_inner.is_finite()
            && c.min_grad_norm.is_finite()
            && c.min_cosine.is_none_or(f64::is_finite)
            && c.mean_cosine.is_none_or(f64::is_finite)
    });
    r.objective.is_finite() && r.grad_norm.is_finite() && c_ok
}

/// Runs SGD from `w0`; `observer(k, w_k)` is called for `k = 0` and after every step.
///
/// Returns the final iterate and the probe log. A non-finite iterate or probe value
/// aborts the run with [`Error::Divergence`], carrying the log up to the last finite probe.
pub fn run_sgd_observed<O, F>(obj: &O, w0: &[f64], config: &SgdConfig, mut observer: F) -> Result<(Vec<f64>, TrainLog)>
where
    O: Objective + ?Sized,
    F: FnMut(usize, &[f64]),
{
    let n = obj.num_terms();
    config.validate(n)?;
    if w0.len() != obj.dim() {
        return Err(Error::Shape(format!("initial point has {} entries, objective {}", w0.len(), obj.dim())));
    }
    let mut rng = RngStream::new(config.seed, config.stream);
    let mut w = w0.to_vec();
    let mut log = TrainLog { records: Vec::new(), status: RunStatus::Completed };
    let diverged = |iteration: usize, mut log: TrainLog| {
        log.status = RunStatus::Diverged;
        Err(Error::Divergence { iteration, log: Box::new(log) })
    };

    let first = probe(obj, &w, 0, config.probe_confusion)?;
    if !record_is_finite(&first) {
        return diverged(0, log);
    }
    log.records.push(first);
    observer(0, &w);

    let mut order: Vec<usize> = (0..n).collect();
    let mut cursor = n;
    let mut batch = Vec::with_capacity(config.batch_size);
    for k in 1..=config.iterations {
        batch.clear();
        match config.sampling {
            Sampling::WithReplacement => {
                if config.batch_size == 1 {
                    batch.push(rng.index(n));
                } else {
                    batch.extend(rng.sample_without_replacement(n, config.batch_size));
                }
            }
            Sampling::EpochShuffle => {
                if cursor + config.batch_size > n {
                    rng.shuffle(&mut order);
                    cursor = 0;
                }
                batch.extend_from_slice(&order[cursor..cursor + config.batch_size]);
                cursor += config.batch_size;
            }
        }
        let g = obj.batch_grad(&w, &batch)?;
        vector::axpy(-config.rate_at(k - 1, n), &g, &mut w);
        if !vector::all_finite(&w) {
            return diverged(k, log);
        }
        observer(k, &w);
        if config.is_probe(k, n) {
            let r = probe(obj, &w, k, config.probe_confusion)?;
            if !record_is_finite(&r) {
                return diverged(k, log);
            }
            log.records.push(r);
        }
    }
    Ok((w, log))
}

pub fn run_sgd<O: Objective + ?Sized>(obj: &O, w0: &[f64], config: &SgdConfig) -> Result<(Vec<f64>, TrainLog)> {
    run_sgd_observed(obj, w0, config, |_, _| {})
}

/// Independent runs with streams `0..runs` of `config.seed`, collected in run order.
pub fn run_sgd_ensemble<O: Objective>(
    obj: &O,
    w0: &[f64],
    config: &SgdConfig,
    runs: usize,
    exec: Execution,
) -> Result<Vec<TrainLog>> {
    exec.try_map(runs, |r| {
        let cfg = SgdConfig { stream: r as u64, ..config.clone() };
        run_sgd(obj, w0, &cfg).map(|(_, log)| log)
    })
}

/// Constants entering the convergence bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBoundParams {
    /// PL constant μ.
    pub mu: f64,
    /// Smoothness constant L.
    pub l: f64,
    /// Number of terms N.
    pub n: usize,
    pub alpha: f64,
    pub eta: f64,
    /// `F(w_0) − F*`
    pub initial_gap: f64,
}

impl TheoremBoundParams {
    /// Largest admissible step, `2/(N L)` (exclusive).
    pub fn step_limit(&self) -> f64 {
        2.0 / (self.n as f64 * self.l)
    }

    fn validate(&self, need_mu: bool) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        if !(self.l > 0.0) || !self.l.is_finite() {
            return Err(Error::InvalidParameter(format!("L must be positive, got {}", self.l)));
        }
        if need_mu && (!(self.mu > 0.0) || self.mu > self.l) {
            return Err(Error::InvalidParameter(format!("need 0 < mu <= L, got mu = {}, L = {}", self.mu, self.l)));
        }
        if !(self.eta >= 0.0) || !(self.initial_gap >= 0.0) {
            return Err(Error::InvalidParameter("eta and the initial gap must be >= 0".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.alpha >= self.step_limit() {
            return Err(Error::ConditionViolated { alpha: self.alpha, limit: self.step_limit() });
        }
        Ok(())
    }

    /// `ρ = 1 − (2μ/N)(α − N L α²/2)` of the PL bound.
    pub fn pl_rate(&self) -> Result<f64> {
        self.validate(true)?;
        let n = self.n as f64;
        Ok(1.0 - (2.0 * self.mu / n) * (self.alpha - n * self.l * self.alpha * self.alpha / 2.0))
    }

    /// `αη/(1 − ρ)`
    pub fn noise_floor(&self) -> Result<f64> {
        let rho = self.pl_rate()?;
        Ok(self.alpha * self.eta / (1.0 - rho))
    }
}

/// `ρᵗ (F(w_0) − F*) + αη/(1 − ρ)` for `t = 0, …, T`.
pub fn theorem1_envelope(p: &TheoremBoundParams, t_max: usize) -> Result<Vec<f64>> {
    let rho = p.pl_rate()?;
    let floor = p.noise_floor()?;
    let mut out = Vec::with_capacity(t_max + 1);
    let mut decay = 1.0;
    for _ in 0..=t_max {
        out.push(decay * p.initial_gap + floor);
        decay *= rho;
    }
    Ok(out)
}

/// `ρ (F(w_1) − F*)/T + ρη` with `ρ = 2N/(2 − N L α)`, bounding `min_k E‖∇F(w_k)‖²`.
pub fn theorem2_bound(p: &TheoremBoundParams, gap1: f64, t: usize) -> Result<f64> {
    p.validate(false)?;
    if t == 0 {
        return Err(Error::InvalidParameter("T must be at least 1".into()));
    }
    let n = p.n as f64;
    let rho = 2.0 * n / (2.0 - n * p.l * p.alpha);
    Ok(rho * gap1 / t as f64 + rho * p.eta)
}

/// `f_i(w) = ½ (w − c_i)ᵀ A_i (w − c_i)` with diagonal `A_i ⪰ 0`.
///
/// Each term needs at least one positive curvature and every coordinate must be
/// curved by some term; zero entries allow terms with disjoint supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticEnsemble {
    centers: Vec<Vec<f64>>,
    curvatures: Vec<Vec<f64>>,
}

impl QuadraticEnsemble {
    pub fn new(centers: Vec<Vec<f64>>, curvatures: Vec<Vec<f64>>) -> Result<Self> {
        if centers.is_empty() || centers.len() != curvatures.len() {
            return Err(Error::InvalidSpec(format!(
                "{} centers and {} curvature vectors",
                centers.len(),
                curvatures.len()
            )));
        }
        let d = centers[0].len();
        if d == 0 {
            return Err(Error::InvalidSpec("zero-dimensional terms".into()));
        }
        for (i, (c, a)) in centers.iter().zip(&curvatures).enumerate() {
            if c.len() != d || a.len() != d {
                return Err(Error::InvalidSpec(format!("term {i} does not have dimension {d}")));
            }
            if !vector::all_finite(c) || !vector::all_finite(a) {
                return Err(Error::InvalidSpec(format!("term {i} has non-finite entries")));
            }
            if a.iter().any(|v| *v < 0.0) {
                return Err(Error::InvalidSpec(format!("term {i} has a negative curvature")));
            }
            if a.iter().all(|v| *v == 0.0) {
                return Err(Error::InvalidSpec(format!("term {i} has no positive curvature")));
            }
        }
        if let Some(k) = (0..d).find(|&k| curvatures.iter().all(|a| a[k] == 0.0)) {
            return Err(Error::InvalidSpec(format!("coordinate {k} is not curved by any term")));
        }
        Ok(QuadraticEnsemble { centers, curvatures })
    }

    /// Scalar terms `½ a_i (w − c_i)²`.
    pub fn one_dimensional(centers: &[f64], curvatures: &[f64]) -> Result<Self> {
        Self::new(centers.iter().map(|c| vec![*c]).collect(), curvatures.iter().map(|a| vec![*a]).collect())
    }

    /// Term `i` curves only coordinate block `i`: all pairwise gradient inner products vanish.
    pub fn disjoint(centers: &[Vec<f64>], curvature: f64) -> Result<Self> {
        let n = centers.len();
        let block = centers.first().map_or(0, Vec::len);
        let d = n * block;
        let mut cs = Vec::with_capacity(n);
        let mut as_ = Vec::with_capacity(n);
        for (i, c) in centers.iter().enumerate() {
            if c.len() != block {
                return Err(Error::InvalidSpec("blocks of unequal size".into()));
            }
            let mut full_c = vec![0.0; d];
            let mut full_a = vec![0.0; d];
            full_c[i * block..(i + 1) * block].copy_from_slice(c);
            full_a[i * block..(i + 1) * block].iter_mut().for_each(|a| *a = curvature);
            cs.push(full_c);
            as_.push(full_a);
        }
        Self::new(cs, as_)
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn curvatures(&self) -> &[Vec<f64>] {
        &self.curvatures
    }

    /// Smoothness constant: the largest curvature.
    pub fn smoothness(&self) -> f64 {
        self.curvatures.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// PL constant shared by all terms: the smallest positive curvature.
    pub fn pl_constant(&self) -> f64 {
        self.curvatures.iter().flatten().copied().filter(|a| *a > 0.0).fold(f64::INFINITY, f64::min)
    }

    /// Minimizer of `F`, coordinatewise `Σ_i a_ik c_ik / Σ_i a_ik`.
    pub fn minimizer(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|k| {
                let (num, den) = self
                    .centers
                    .iter()
                    .zip(&self.curvatures)
                    .fold((0.0, 0.0), |(n, d), (c, a)| (n + a[k] * c[k], d + a[k]));
                num / den
            })
            .collect()
    }

    /// `F* = F(w*)`.
    pub fn optimal_value(&self) -> f64 {
        self.value_unchecked(&self.minimizer())
    }

    fn value_unchecked(&self, w: &[f64]) -> f64 {
        (0..self.centers.len()).map(|i| self.term_unchecked(w, i)).sum::<f64>() / self.centers.len() as f64
    }

    fn term_unchecked(&self, w: &[f64], i: usize) -> f64 {
        0.5 * w
            .iter()
            .zip(&self.centers[i])
            .zip(&self.curvatures[i])
            .map(|((w, c), a)| a * (w - c).powi(2))
            .sum::<f64>()
    }

    /// Axis-aligned box spanned by all centers and `w0`. SGD never leaves it when `α L ≤ 1`,
    /// since each coordinate update is then a convex combination of the iterate and centers.
    pub fn invariant_box(&self, w0: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut lo = w0.to_vec();
        let mut hi = w0.to_vec();
        for c in &self.centers {
            for k in 0..c.len() {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        (lo, hi)
    }

    /// Exact `η = max(0, −min_{i≠j} min_{w ∈ box} ⟨∇f_i(w), ∇f_j(w)⟩)`.
    ///
    /// The pair inner product `Σ_k a_ik a_jk (w_k − c_ik)(w_k − c_jk)` is a sum of
    /// convex one-dimensional quadratics, so its box minimum is the sum of each
    /// coordinate's minimum, attained at the clamped vertex `(c_ik + c_jk)/2`.
    pub fn confusion_over_box(&self, lo: &[f64], hi: &[f64]) -> Result<f64> {
        if lo.len() != self.dim() || hi.len() != self.dim() || lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidParameter("box bounds must have the problem dimension and lo <= hi".into()));
        }
        let n = self.centers.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let mut s = 0.0;
                for k in 0..self.dim() {
                    let q = self.curvatures[i][k] * self.curvatures[j][k];
                    if q == 0.0 {
                        continue;
                    }
                    let (ci, cj) = (self.centers[i][k], self.centers[j][k]);
                    let t = (0.5 * (ci + cj)).clamp(lo[k], hi[k]);
                    s += q * (t - ci) * (t - cj);
                }
                worst = worst.min(s);
            }
        }
        Ok(-worst)
    }

    /// Bound parameters for step `alpha` from `w0`, with η certified on [`Self::invariant_box`].
    pub fn bound_params(&self, w0: &[f64], alpha: f64) -> Result<TheoremBoundParams> {
        let (lo, hi) = self.invariant_box(w0);
        Ok(TheoremBoundParams {
            mu: self.pl_constant(),
            l: self.smoothness(),
            n: self.centers.len(),
            alpha,
            eta: self.confusion_over_box(&lo, &hi)?,
            initial_gap: self.value(w0)? - self.optimal_value(),
        })
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::Shape(format!("point of dimension {} for a problem of dimension {}", w.len(), self.dim())));
        }
        Ok(())
    }
}

impl Objective for QuadraticEnsemble {
    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn num_terms(&self) -> usize {
        self.centers.len()
    }

    fn term_value(&self, w: &[f64], i: usize) -> Result<f64> {
        self.check(w)?;
        Ok(self.term_unchecked(w, i))
    }

    fn term_grad(&self, w: &[f64], i: usize) -> Result<Vec<f64>> {
        self.check(w)?;
        Ok(w.iter().zip(&self.centers[i]).zip(&self.curvatures[i]).map(|((w, c), a)| a * (w - c)).collect())
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        self.check(w)?;
        Ok(self.value_unchecked(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mu: f64, l: f64, n: usize, alpha: f64, eta: f64) -> TheoremBoundParams {
        TheoremBoundParams { mu, l, n, alpha, eta, initial_gap: 1.0 }
    }

    #[test]
    fn pl_rate_plug_in() {
        assert!((params(0.5, 1.0, 2, 0.5, 0.0).pl_rate().unwrap() - 0.875).abs() < 1e-15);
    }

    #[test]
    fn envelope_without_confusion_decays_to_zero() {
        let env = theorem1_envelope(&params(0.5, 1.0, 2, 0.5, 0.0), 400).unwrap();
        assert_eq!(env[0], 1.0);
        assert!(env.windows(2).all(|w| w[1] < w[0]));
        assert!(env[400] < 1e-20);
    }

    #[test]
    fn noise_floor_small_step_limit() {
        let p = params(0.5, 1.0, 4, 1e-6, 0.1);
        assert!(p.pl_rate().unwrap() < 1.0);
        let limit = 0.1 * 4.0 / (2.0 * 0.5);
        assert!((p.noise_floor().unwrap() - limit).abs() / limit < 1e-5);
    }

    #[test]
    fn step_condition() {
        let p = params(0.5, 1.0, 2, 1.0, 0.0);
        assert!(matches!(theorem1_envelope(&p, 3), Err(Error::ConditionViolated { .. })));
        assert!(matches!(theorem2_bound(&p, 1.0, 3), Err(Error::ConditionViolated { .. })));
    }

    #[test]
    fn theorem2_plug_in_and_scaling() {
        // N = 1, L = 1, α = 1 gives ρ = 2 (the step condition itself is α < 2)
        let p = params(0.5, 1.0, 1, 1.0, 0.0);
        assert!((theorem2_bound(&p, 1.0, 1).unwrap() - 2.0).abs() < 1e-15);
        let a = theorem2_bound(&p, 3.0, 10).unwrap();
        let b = theorem2_bound(&p, 3.0, 20).unwrap();
        assert!((a / b - 2.0).abs() < 1e-15);
        let with_eta = TheoremBoundParams { eta: 0.25, ..p };
        assert!((theorem2_bound(&with_eta, 0.0, 1000).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn opposed_pair_confusion() {
        let q = QuadraticEnsemble::one_dimensional(&[1.0, -1.0], &[1.0, 1.0]).unwrap();
        let eta = q.confusion_over_box(&[-1.0], &[1.0]).unwrap();
        assert_eq!(eta, 1.0);
        let g1 = q.term_grad(&[0.0], 0).unwrap()[0];
        let g2 = q.term_grad(&[0.0], 1).unwrap()[0];
        assert_eq!(g1 * g2, -1.0);
        assert_eq!(q.minimizer(), vec![0.0]);
        assert_eq!(q.optimal_value(), 0.5);
        // a box away from the vertex is confused less
        assert!((q.confusion_over_box(&[0.5], &[2.0]).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn shared_centers_have_no_confusion() {
        let c = vec![0.3, -0.2];
        let q = QuadraticEnsemble::new(vec![c.clone(); 3], vec![vec![1.0, 2.0], vec![0.5, 0.5], vec![3.0, 1.0]]).unwrap();
        let (lo, hi) = q.invariant_box(&[1.0, 1.0]);
        assert_eq!(q.confusion_over_box(&lo, &hi).unwrap(), 0.0);
        assert!(q.minimizer().iter().zip(&c).all(|(a, b)| (a - b).abs() < 1e-15));
        assert!(q.optimal_value() < 1e-30);
        assert_eq!(q.smoothness(), 3.0);
        assert_eq!(q.pl_constant(), 0.5);
    }

    #[test]
    fn disjoint_supports_are_orthogonal() {
        let q = QuadraticEnsemble::disjoint(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 3.0]], 1.0).unwrap();
        let w = vec![0.3, -2.0, 1.0, 4.0, -0.7, 0.2];
        let grads = q.term_grads(&w).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert_eq!(vector::dot(&grads[i], &grads[j]), 0.0);
            }
        }
        let (lo, hi) = q.invariant_box(&w);
        assert_eq!(q.confusion_over_box(&lo, &hi).unwrap(), 0.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(matches!(QuadraticEnsemble::one_dimensional(&[0.0], &[-1.0]), Err(Error::InvalidSpec(_))));
        assert!(QuadraticEnsemble::one_dimensional(&[0.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(QuadraticEnsemble::new(vec![vec![0.0, 0.0]], vec![vec![1.0, 0.0]]).is_err());
        assert!(QuadraticEnsemble::new(vec![vec![0.0]], vec![]).is_err());
    }

    #[test]
    fn single_quadratic_closed_form() {
        let q = QuadraticEnsemble::one_dimensional(&[0.0], &[1.0]).unwrap();
        let mut cfg = SgdConfig::new(0.5, 30, 0);
        cfg.probes = ProbeSchedule::Every(1);
        let mut seen = Vec::new();
        let (w, _) = run_sgd_observed(&q, &[1.0], &cfg, |k, w| seen.push((k, w[0]))).unwrap();
        for (k, v) in seen {
            assert_eq!(v, 0.5f64.powi(k as i32));
        }
        assert_eq!(w[0], 0.5f64.powi(30));
        // a non-dyadic step still follows (1 - αL)^k to rounding
        let q = QuadraticEnsemble::one_dimensional(&[0.0], &[1.7]).unwrap();
        let cfg = SgdConfig::new(0.3, 50, 0);
        let (w, _) = run_sgd(&q, &[0.9], &cfg).unwrap();
        let exact = 0.9 * (1.0f64 - 0.3 * 1.7).powi(50);
        assert!((w[0] - exact).abs() <= 1e-13 * exact.abs());
    }

    #[test]
    fn zero_step_keeps_parameters() {
        let q = QuadraticEnsemble::one_dimensional(&[1.0, -1.0], &[1.0, 2.0]).unwrap();
        let mut cfg = SgdConfig::new(0.0, 20, 3);
        cfg.probes = ProbeSchedule::Every(1);
        let (w, log) = run_sgd(&q, &[0.4], &cfg).unwrap();
        assert_eq!(w, vec![0.4]);
        let f0 = log.records[0].objective;
        assert!(log.records.iter().all(|r| r.objective == f0));
    }

    #[test]
    fn determinism_and_log_shape() {
        let q = QuadraticEnsemble::one_dimensional(&[1.0, -1.0, 0.3], &[1.0, 2.0, 0.5]).unwrap();
        let mut cfg = SgdConfig::new(0.1, 100, 7);
        cfg.probe_confusion = true;
        let (_, a) = run_sgd(&q, &[2.0], &cfg).unwrap();
        let (_, b) = run_sgd(&q, &[2.0], &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.records.windows(2).all(|w| w[0].iteration < w[1].iteration));
        assert_eq!(a.records.first().unwrap().iteration, 0);
        assert_eq!(a.records.last().unwrap().iteration, 100);
        assert_eq!(a.records.len(), 1 + 100 / 3 + 1);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("iter,objective,grad_norm,min_inner,min_cosine,mean_cosine,status\n"));
        assert!(!text.contains("NaN"));
        assert_eq!(text.lines().count(), a.records.len() + 1);
    }

    #[test]
    fn divergence_is_reported() {
        let q = QuadraticEnsemble::one_dimensional(&[0.0], &[1.0]).unwrap();
        let mut cfg = SgdConfig::new(1e200, 10, 0);
        cfg.probes = ProbeSchedule::Every(1);
        match run_sgd(&q, &[1.0], &cfg) {
            Err(Error::Divergence { iteration, log }) => {
                assert!(iteration >= 1);
                assert_eq!(log.status, RunStatus::Diverged);
                assert!(log.records.iter().all(|r| r.objective.is_finite()));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn decay_and_epoch_shuffle() {
        let q = QuadraticEnsemble::one_dimensional(&[1.0, -1.0], &[1.0, 1.0]).unwrap();
        let mut cfg = SgdConfig::new(0.4, 8, 1);
        cfg.decay = Some(StepDecay { epochs: vec![2], factor: 10.0 });
        assert_eq!(cfg.rate_at(3, 2), 0.4);
        assert!((cfg.rate_at(4, 2) - 0.04).abs() < 1e-15);
        cfg.sampling = Sampling::EpochShuffle;
        let mut picks = Vec::new();
        let mut prev = 0.0;
        run_sgd_observed(&q, &[0.0], &cfg, |k, w| {
            if k > 0 {
                picks.push(if w[0] > prev { 0 } else { 1 });
            }
            prev = w[0];
        })
        .unwrap();
        for epoch in picks.chunks(2) {
            assert_ne!(epoch[0], epoch[1], "each epoch visits both terms: {picks:?}");
        }
    }

    #[test]
    fn config_validation() {
        let q = QuadraticEnsemble::one_dimensional(&[1.0, -1.0], &[1.0, 1.0]).unwrap();
        assert!(run_sgd(&q, &[0.0], &SgdConfig::new(-0.1, 5, 0)).is_err());
        assert!(run_sgd(&q, &[0.0], &SgdConfig::new(0.1, 0, 0)).is_err());
        assert!(run_sgd(&q, &[0.0], &SgdConfig { batch_size: 3, ..SgdConfig::new(0.1, 5, 0) }).is_err());
        assert!(run_sgd(&q, &[0.0, 1.0], &SgdConfig::new(0.1, 5, 0)).is_err());
    }
}
