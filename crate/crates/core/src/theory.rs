//! Monte Carlo estimators for the concentration behaviour of gradient confusion:
//! violation probabilities over random data and weights, the near-orthogonality
//! of random unit vectors, and the sign of expected pairwise inner products.
//!
//! Trial `t` of an experiment with seed `s` draws everything from
//! `RngStream::new(s, TRIAL_STREAM).child(t)`, so estimates are identical under
//! sequential and parallel execution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::confusion::trace_form_inner;
use crate::exec::Execution;
use crate::init::{initialize, orthogonal_scale, project_small_weights, Architecture, InitScheme};
use crate::model::{self, Activation, Backprop, Loss, NetworkParams};
use crate::numkit::{sample_unit_sphere, vector, RngStream};
use crate::{Error, Result};

const TRIAL_STREAM: u64 = 0x7472_6961_6c73;
const TEACHER_STREAM: u64 = 0x7465_6163_6865;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Binomial proportion with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub trials: usize,
    pub successes: usize,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

impl McEstimate {
    pub fn new(successes: usize, trials: usize) -> Result<Self> {
        if trials == 0 || successes > trials {
            return Err(Error::InvalidParameter(format!("{successes} successes in {trials} trials")));
        }
        let (lo, hi) = wilson_interval(successes, trials, Z95);
        Ok(McEstimate { trials, successes, point: successes as f64 / trials as f64, lo, hi })
    }

    pub fn overlaps(&self, other: &McEstimate) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Binomial standard error of the point estimate.
    pub fn std_error(&self) -> f64 {
        (self.point * (1.0 - self.point) / self.trials as f64).sqrt()
    }
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson_interval(k: usize, n: usize, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    // the exact endpoints at k = 0 and k = n are 0 and 1
    let lo = if k == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let hi = if k == n { 1.0 } else { (center + half).clamp(p, 1.0) };
    (lo, hi)
}

/// Sample mean with a normal 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub samples: usize,
    pub mean: f64,
    pub std_error: f64,
    pub lo: f64,
    pub hi: f64,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::InvalidParameter("need at least two samples for a mean estimate".into()));
        }
        if !vector::all_finite(xs) {
            return Err(Error::NonFinite("Monte Carlo sample".into()));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std_error = (var / n).sqrt();
        Ok(MeanEstimate { samples: xs.len(), mean, std_error, lo: mean - Z95 * std_error, hi: mean + Z95 * std_error })
    }

    /// `mean ≥ threshold − k · SE`.
    pub fn at_least(&self, threshold: f64, k: f64) -> bool {
        self.mean >= threshold - k * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// `g(x) = ⟨w, x⟩`
    Linear,
    /// `γ W_β ⋯ W_1 x`, `γ = 1/√(2β)`
    DeepLinear,
    /// `σ(W_β σ(⋯ σ(W_0 x)))`, top activation applied
    Mlp,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Linear => "linear",
            Family::DeepLinear => "deep-linear",
            Family::Mlp => "mlp",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Family::Linear),
            "deep-linear" => Ok(Family::DeepLinear),
            "mlp" => Ok(Family::Mlp),
            other => Err(Error::InvalidConfig(format!("unknown model family `{other}`"))),
        }
    }
}

/// Weight distribution of a trial: a scheme, optionally projected onto `‖W_p‖ ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub init: InitScheme,
    pub project_small: bool,
}

impl WeightScheme {
    pub fn plain(init: InitScheme) -> Self {
        WeightScheme { init, project_small: false }
    }

    pub fn projected(init: InitScheme) -> Self {
        WeightScheme { init, project_small: true }
    }

    pub fn label(&self) -> String {
        if self.project_small {
            format!("{}+small", self.init.name())
        } else {
            self.init.name().to_string()
        }
    }

    pub fn draw(&self, arch: &Architecture, rng: &mut RngStream) -> Result<NetworkParams> {
        let p = initialize(&self.init, arch, rng)?;
        if self.project_small {
            project_small_weights(&p)
        } else {
            Ok(p)
        }
    }
}

/// One confusion-probability experiment: architecture, weight distribution and data size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionExperiment {
    pub family: Family,
    pub scheme: WeightScheme,
    pub activation: Activation,
    pub d: usize,
    /// Hidden width ℓ (ignored for the linear family).
    pub width: usize,
    /// β: hidden layers of the MLP, or factors of the deep linear net.
    pub depth: usize,
    pub n: usize,
    pub eta: f64,
    pub loss: Loss,
    pub trials: usize,
    pub seed: u64,
}

impl ConfusionExperiment {
    pub fn architecture(&self) -> Architecture {
        match self.family {
            Family::Linear => Architecture::linear(self.d),
            Family::DeepLinear => {
                let beta = self.depth.max(1);
                let mut dims = vec![self.d];
                dims.extend(std::iter::repeat_n(self.width, beta - 1));
                dims.push(1);
                Architecture {
                    dims,
                    activation: Activation::Identity,
                    final_activation: false,
                    output_scale: orthogonal_scale(beta),
                    biases: false,
                }
            }
            Family::Mlp => Architecture::mlp(self.d, self.width, self.depth, self.activation),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 100 {
            return Err(Error::InvalidConfig(format!("at least 100 trials required, got {}", self.trials)));
        }
        if self.d == 0 || self.n == 0 {
            return Err(Error::InvalidConfig("d and N must be at least 1".into()));
        }
        if self.family != Family::Linear && self.width == 0 {
            return Err(Error::InvalidConfig("width must be at least 1".into()));
        }
        if self.family == Family::DeepLinear && self.depth == 0 {
            return Err(Error::InvalidConfig("deep linear net needs at least one factor".into()));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidConfig(format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        self.scheme.init.validate()?;
        self.architecture().validate()
    }

    /// Unit-norm linear teacher `w*`, fixed for the whole experiment.
    pub fn teacher(&self) -> Result<Vec<f64>> {
        draw_teacher(self.seed, self.d)
    }

    /// Minimum pairwise gradient inner product of trial `t`.
    pub fn trial_min_inner(&self, teacher: &[f64], t: usize) -> Result<f64> {
        let mut rng = RngStream::new(self.seed, TRIAL_STREAM).child(t as u64);
        let params = self.scheme.draw(&self.architecture(), &mut rng)?;
        let mut records = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let x = sample_unit_sphere(&mut rng, self.d)?;
            let y = model::teacher_label(teacher, &x)?;
            records.push(model::backprop_full(&params, &x, self.loss, y)?);
        }
        min_trace_inner(&params, &records)
    }
}

pub fn draw_teacher(seed: u64, d: usize) -> Result<Vec<f64>> {
    sample_unit_sphere(&mut RngStream::new(seed, TEACHER_STREAM), d)
}

fn min_trace_inner(params: &NetworkParams, records: &[Backprop]) -> Result<f64> {
    let mut min = f64::INFINITY;
    for i in 0..records.len() {
        for j in (i + 1)..records.len() {
            min = min.min(trace_form_inner(params, &records[i], &records[j])?);
        }
    }
    Ok(min)
}

/// Estimate of `Pr[∃ i < j : ⟨∇f_i, ∇f_j⟩ < −η]` over random weights and sphere data.
pub fn mc_confusion_probability(exp: &ConfusionExperiment, exec: Execution) -> Result<McEstimate> {
    exp.validate()?;
    if exp.n < 2 {
        return McEstimate::new(0, exp.trials);
    }
    let teacher = exp.teacher()?;
    let mins = exec.try_map(exp.trials, |t| exp.trial_min_inner(&teacher, t))?;
    McEstimate::new(mins.iter().filter(|m| **m < -exp.eta).count(), exp.trials)
}

/// Violation estimates of the same experiment across depths.
pub fn depth_sweep(exp: &ConfusionExperiment, depths: &[usize], exec: Execution) -> Result<Vec<McEstimate>> {
    depths
        .iter()
        .map(|&depth| mc_confusion_probability(&ConfusionExperiment { depth, ..exp.clone() }, exec))
        .collect()
}

/// Violation estimates of the same experiment across widths.
pub fn width_sweep(exp: &ConfusionExperiment, widths: &[usize], exec: Execution) -> Result<Vec<McEstimate>> {
    widths
        .iter()
        .map(|&width| mc_confusion_probability(&ConfusionExperiment { width, ..exp.clone() }, exec))
        .collect()
}

/// Deep linear net with Haar-orthogonal factors and `γ = 1/√(2β)`, square loss, across depths.
#[allow(clippy::too_many_arguments)]
pub fn orth_depth_invariance(
    depths: &[usize],
    d: usize,
    width: usize,
    n: usize,
    eta: f64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<McEstimate>> {
    let exp = ConfusionExperiment {
        family: Family::DeepLinear,
        scheme: WeightScheme::plain(InitScheme::OrthogonalRescaled),
        activation: Activation::Identity,
        d,
        width,
        depth: 1,
        n,
        eta,
        loss: Loss::Square,
        trials,
        seed,
    };
    depth_sweep(&exp, depths, exec)
}

/// True when every consecutive pair is non-decreasing up to interval overlap.
pub fn non_decreasing_with_overlap(est: &[McEstimate]) -> bool {
    est.windows(2).all(|w| w[1].point >= w[0].point || w[0].overlaps(&w[1]))
}

/// True when every consecutive pair is non-increasing up to interval overlap.
pub fn non_increasing_with_overlap(est: &[McEstimate]) -> bool {
    est.windows(2).all(|w| w[1].point <= w[0].point || w[0].overlaps(&w[1]))
}

/// True when all pairs of intervals overlap.
pub fn pairwise_overlapping(est: &[McEstimate]) -> bool {
    est.iter().enumerate().all(|(i, a)| est[i + 1..].iter().all(|b| a.overlaps(b)))
}

/// `N² √(π/8) exp(−(d−1)ν²/2)`
pub fn orthovec_bound(d: usize, n: usize, nu: f64) -> f64 {
    (n * n) as f64 * (std::f64::consts::PI / 8.0).sqrt() * (-(d as f64 - 1.0) * nu * nu / 2.0).exp()
}

/// Exact `Pr[|⟨x, y⟩| > ν]` for independent uniform points on the unit circle.
pub fn planar_exceedance(nu: f64) -> f64 {
    if nu >= 1.0 {
        0.0
    } else {
        1.0 - 2.0 / std::f64::consts::PI * nu.max(0.0).asin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthovecResult {
    pub estimate: McEstimate,
    pub bound: f64,
}

/// Estimate of `Pr[max_{i<j} |⟨x_i, x_j⟩| > ν]` for N i.i.d. uniform unit vectors in `R^d`.
pub fn orthovec_check(d: usize, n: usize, nu: f64, trials: usize, seed: u64, exec: Execution) -> Result<OrthovecResult> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("nu must be positive, got {nu}")));
    }
    if trials < 100 {
        return Err(Error::InvalidConfig(format!("at least 100 trials required, got {trials}")));
    }
    if d == 0 {
        return Err(Error::InvalidDimension("d must be at least 1".into()));
    }
    let root = RngStream::new(seed, TRIAL_STREAM);
    let hits = exec.try_map(trials, |t| -> Result<bool> {
        let mut rng = root.child(t as u64);
        let xs = (0..n).map(|_| sample_unit_sphere(&mut rng, d)).collect::<Result<Vec<_>>>()?;
        let mut max = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max = max.max(vector::dot(&xs[i], &xs[j]).abs());
            }
        }
        Ok(max > nu)
    })?;
    Ok(OrthovecResult {
        estimate: McEstimate::new(hits.iter().filter(|h| **h).count(), trials)?,
        bound: orthovec_bound(d, n, nu),
    })
}

/// Mean over i.i.d. sphere pairs `(x_i, x_j)` of `⟨∇f_i, ∇f_j⟩` at fixed weights,
/// labels given by the linear teacher. Its expectation is `‖E ∇f‖² ≥ 0`.
pub fn expectation_nonneg_check(
    params: &NetworkParams,
    loss: Loss,
    teacher: &[f64],
    pairs: usize,
    seed: u64,
    exec: Execution,
) -> Result<MeanEstimate> {
    let d = params.input_dim();
    let root = RngStream::new(seed, TRIAL_STREAM);
    let hs = exec.try_map(pairs, |t| -> Result<f64> {
        let mut rng = root.child(t as u64);
        let mut rec = Vec::with_capacity(2);
        for _ in 0..2 {
            let x = sample_unit_sphere(&mut rng, d)?;
            let y = model::teacher_label(teacher, &x)?;
            rec.push(model::backprop_full(params, &x, loss, y)?);
        }
        trace_form_inner(params, &rec[0], &rec[1])
    })?;
    MeanEstimate::from_samples(&hs)
}

/// Mean over random weights of `⟨∇f_i, ∇f_j⟩` for a fixed labelled pair.
#[allow(clippy::too_many_arguments)]
pub fn weight_expectation_check(
    xi: &[f64],
    yi: f64,
    xj: &[f64],
    yj: f64,
    scheme: &WeightScheme,
    arch: &Architecture,
    loss: Loss,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<MeanEstimate> {
    if trials < 2 {
        return Err(Error::InvalidConfig("need at least two trials".into()));
    }
    let root = RngStream::new(seed, TRIAL_STREAM);
    let hs = exec.try_map(trials, |t| -> Result<f64> {
        let mut rng = root.child(t as u64);
        let params = scheme.draw(arch, &mut rng)?;
        let bi = model::backprop_full(&params, xi, loss, yi)?;
        let bj = model::backprop_full(&params, xj, loss, yj)?;
        trace_form_inner(&params, &bi, &bj)
    })?;
    MeanEstimate::from_samples(&hs)
}
