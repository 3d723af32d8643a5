//! Gradient-confusion measurements: pairwise inner products and cosines of
//! per-example (or per-minibatch) gradients, minibatch pair probes, and ball
//! sweeps around a parameter point.

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::model::{self, Backprop, Dataset, Loss, NetworkParams, PerExampleGradient};
use crate::numkit::{sample_in_ball, vector, RngStream};
use crate::{Error, Result};

/// Norms below this are treated as zero when forming cosines.
pub const ZERO_NORM: f64 = 1e-12;

/// Default number of minibatch pairs per probe.
pub const DEFAULT_PROBE_PAIRS: usize = 100;
/// Default minibatch size per probe.
pub const DEFAULT_PROBE_BATCH: usize = 128;

/// Anything with an inner product in the canonical flattening.
pub trait GradientVector: Sync {
    fn flat_len(&self) -> usize;
    fn inner(&self, other: &Self) -> f64;
}

impl GradientVector for PerExampleGradient {
    fn flat_len(&self) -> usize {
        self.len()
    }

    fn inner(&self, other: &Self) -> f64 {
        self.dot(other)
    }
}

impl GradientVector for Vec<f64> {
    fn flat_len(&self) -> usize {
        self.len()
    }

    fn inner(&self, other: &Self) -> f64 {
        vector::dot(self, other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaViolation {
    pub i: usize,
    pub j: usize,
    pub inner: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionStats {
    /// Pairs entering the cosine statistics: all unordered pairs minus `excluded_pairs`.
    pub pair_count: usize,
    /// Minimum inner product over all unordered pairs.
    pub min_inner: f64,
    pub mean_inner: f64,
    /// `None` when every pair was excluded.
    pub min_cosine: Option<f64>,
    pub mean_cosine: Option<f64>,
    /// Pairs with inner product below `-η` (only when an η was supplied).
    pub eta_violations: Vec<EtaViolation>,
    /// Pairs left out of the cosine statistics because a norm was below [`ZERO_NORM`].
    pub excluded_pairs: usize,
}

impl ConfusionStats {
    /// Smallest `η ≥ 0` for which the confusion bound holds.
    pub fn eta(&self) -> f64 {
        (-self.min_inner).max(0.0)
    }

    pub fn holds(&self, eta: f64) -> bool {
        self.min_inner >= -eta
    }

    fn from_pairs(pairs: &[(usize, usize, f64, Option<f64>)], eta: Option<f64>) -> Self {
        let mut min_inner = f64::INFINITY;
        let mut sum_inner = 0.0;
        let mut min_cos = f64::INFINITY;
        let mut sum_cos = 0.0;
        let mut n_cos = 0usize;
        let mut eta_violations = Vec::new();
        for &(i, j, inner, cos) in pairs {
            min_inner = min_inner.min(inner);
            sum_inner += inner;
            if let Some(c) = cos {
                min_cos = min_cos.min(c);
                sum_cos += c;
                n_cos += 1;
            }
            if let Some(e) = eta {
                if inner < -e {
                    eta_violations.push(EtaViolation { i, j, inner });
                }
            }
        }
        ConfusionStats {
            pair_count: n_cos,
            min_inner,
            mean_inner: sum_inner / pairs.len() as f64,
            min_cosine: (n_cos > 0).then_some(min_cos),
            mean_cosine: (n_cos > 0).then(|| sum_cos / n_cos as f64),
            eta_violations,
            excluded_pairs: pairs.len() - n_cos,
        }
    }
}

/// Per-pair record for verbose CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: usize,
    pub i: usize,
    pub j: usize,
    pub inner: f64,
    /// `None` for excluded pairs.
    pub cosine: Option<f64>,
}

fn check_grads<G: GradientVector>(grads: &[G]) -> Result<()> {
    if grads.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 gradients, got {}", grads.len())));
    }
    let n = grads[0].flat_len();
    if let Some((k, g)) = grads.iter().enumerate().find(|(_, g)| g.flat_len() != n) {
        return Err(Error::Shape(format!("gradient {k} has {} entries, gradient 0 has {n}", g.flat_len())));
    }
    Ok(())
}

#[inline]
fn cosine(inner: f64, ni: f64, nj: f64) -> Option<f64> {
    (ni >= ZERO_NORM && nj >= ZERO_NORM).then(|| (inner / (ni * nj)).clamp(-1.0, 1.0))
}

/// All unordered pairs `(i, j, ⟨g_i, g_j⟩, cosine)` with `i < j`, in lexicographic order.
fn all_pairs<G: GradientVector>(grads: &[G], exec: Execution) -> Vec<(usize, usize, f64, Option<f64>)> {
    let norms: Vec<f64> = grads.iter().map(|g| g.inner(g).sqrt()).collect();
    let m = grads.len();
    exec.map(m, |i| {
        ((i + 1)..m)
            .map(|j| {
                let inner = grads[i].inner(&grads[j]);
                (i, j, inner, cosine(inner, norms[i], norms[j]))
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Inner-product and cosine statistics over every unordered pair of gradients.
pub fn pairwise_stats<G: GradientVector>(grads: &[G], eta: Option<f64>) -> Result<ConfusionStats> {
    pairwise_stats_with(grads, eta, Execution::Sequential)
}

/// [`pairwise_stats`] with the rows of the pair table spread over `exec`.
pub fn pairwise_stats_with<G: GradientVector>(
    grads: &[G],
    eta: Option<f64>,
    exec: Execution,
) -> Result<ConfusionStats> {
    check_grads(grads)?;
    Ok(ConfusionStats::from_pairs(&all_pairs(grads, exec), eta))
}

/// Minimum pairwise inner product, skipping cosines (cheapest confusion check).
pub fn min_pairwise_inner<G: GradientVector>(grads: &[G]) -> Result<f64> {
    check_grads(grads)?;
    let mut min = f64::INFINITY;
    for i in 0..grads.len() {
        for j in (i + 1)..grads.len() {
            min = min.min(grads[i].inner(&grads[j]));
        }
    }
    Ok(min)
}

pub fn pair_records<G: GradientVector>(grads: &[G]) -> Result<Vec<PairRecord>> {
    check_grads(grads)?;
    Ok(all_pairs(grads, Execution::Sequential)
        .into_iter()
        .enumerate()
        .map(|(pair_id, (i, j, inner, cosine))| PairRecord { pair_id, i, j, inner, cosine })
        .collect())
}

/// Mean over pairs of `⟨g_i, g_j⟩` and of the cosine (zero-norm pairs left out of the latter).
pub fn normalized_average_stats<G: GradientVector>(grads: &[G]) -> Result<(f64, Option<f64>)> {
    let s = pairwise_stats(grads, None)?;
    Ok((s.mean_inner, s.mean_cosine))
}

/// `Σ_p Tr[(∇_{W_p} f_i)ᵀ ∇_{W_p} f_j]` evaluated through the rank-one layer factors:
/// each layer contributes `⟨δ^i_p, δ^j_p⟩ · ⟨H^i_{p-1}, H^j_{p-1}⟩` (plus `⟨δ^i_p, δ^j_p⟩`
/// for biases).
pub fn trace_form_inner(params: &NetworkParams, bi: &Backprop, bj: &Backprop) -> Result<f64> {
    let n = params.num_layers();
    for b in [bi, bj] {
        if b.deltas.len() != n || b.trace.inputs.len() != n {
            return Err(Error::Shape("backprop record does not match the network depth".into()));
        }
        for (p, w) in params.weights().iter().enumerate() {
            if b.deltas[p].len() != w.rows() || b.trace.inputs[p].len() != w.cols() {
                return Err(Error::Shape(format!("backprop record does not match layer {p}")));
            }
        }
    }
    let mut s = 0.0;
    for p in 0..n {
        let dd = vector::dot(&bi.deltas[p], &bj.deltas[p]);
        let hh = vector::dot(&bi.trace.inputs[p], &bj.trace.inputs[p]);
        s += dd * hh;
        if params.biases().is_some() {
            s += dd;
        }
    }
    Ok(s)
}

/// Per-example gradients `∇f_i` for the whole dataset, in example order.
pub fn dataset_gradients(
    params: &NetworkParams,
    data: &Dataset,
    loss: Loss,
    exec: Execution,
) -> Result<Vec<PerExampleGradient>> {
    exec.try_map(data.len(), |i| model::backprop(params, data.input(i), loss, data.label(i)))
}

fn batch_mean_gradient(params: &NetworkParams, data: &Dataset, loss: Loss, idx: &[usize]) -> Result<PerExampleGradient> {
    let mut g = PerExampleGradient::zeros_like(params);
    for &i in idx {
        g.add_scaled(1.0, &model::backprop(params, data.input(i), loss, data.label(i))?);
    }
    g.scale(1.0 / idx.len() as f64);
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinibatchProbe {
    /// Statistics over the probed minibatch pairs (each pair counted once).
    pub stats: ConfusionStats,
    /// Raw cosine per pair (`None` where a batch gradient vanished), for density estimates.
    pub cosines: Vec<Option<f64>>,
    pub inners: Vec<f64>,
}

impl MinibatchProbe {
    pub fn defined_cosines(&self) -> Vec<f64> {
        self.cosines.iter().flatten().copied().collect()
    }
}

/// Cosine similarity between mean gradients of independently drawn minibatch pairs.
///
/// Each batch is drawn uniformly without replacement; the two batches of a
/// pair are drawn independently and may overlap.
pub fn minibatch_probe(
    params: &NetworkParams,
    data: &Dataset,
    loss: Loss,
    rng: &mut RngStream,
    num_pairs: usize,
    batch_size: usize,
) -> Result<MinibatchProbe> {
    if num_pairs == 0 {
        return Err(Error::InvalidConfig("minibatch probe needs at least one pair".into()));
    }
    if batch_size == 0 || batch_size > data.len() {
        return Err(Error::InvalidConfig(format!(
            "batch size {batch_size} not in 1..={} (dataset size)",
            data.len()
        )));
    }
    let mut pairs = Vec::with_capacity(num_pairs);
    for k in 0..num_pairs {
        let a = rng.sample_without_replacement(data.len(), batch_size);
        let b = rng.sample_without_replacement(data.len(), batch_size);
        let ga = batch_mean_gradient(params, data, loss, &a)?;
        let gb = batch_mean_gradient(params, data, loss, &b)?;
        let inner = ga.dot(&gb);
        pairs.push((k, k, inner, cosine(inner, ga.norm(), gb.norm())));
    }
    Ok(MinibatchProbe {
        stats: ConfusionStats::from_pairs(&pairs, None),
        cosines: pairs.iter().map(|p| p.3).collect(),
        inners: pairs.iter().map(|p| p.2).collect(),
    })
}

/// Result of probing the confusion bound at random points of a parameter ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallSweep {
    pub radius: f64,
    /// Minimum pairwise inner product at each probe point.
    pub min_inners: Vec<f64>,
}

impl BallSweep {
    /// Fraction of probes where every pairwise inner product is `≥ -η`.
    pub fn fraction_at(&self, eta: f64) -> f64 {
        self.min_inners.iter().filter(|m| **m >= -eta).count() as f64 / self.min_inners.len() as f64
    }

    /// Probe index and value of the most confused probe.
    pub fn worst(&self) -> (usize, f64) {
        self.min_inners
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc })
    }
}

/// Evaluates the confusion bound at `num_probes` points drawn uniformly from the
/// Euclidean ball of radius `r` around `params` (in the canonical flattening).
///
/// Probe `k` uses the child stream `rng.child(k)`, so results do not depend on `exec`.
pub fn ball_sweep(
    params: &NetworkParams,
    radius: f64,
    num_probes: usize,
    rng: &RngStream,
    data: &Dataset,
    loss: Loss,
    exec: Execution,
) -> Result<BallSweep> {
    if num_probes == 0 {
        return Err(Error::InvalidConfig("ball sweep needs at least one probe".into()));
    }
    if data.len() < 2 {
        return Err(Error::InvalidConfig("ball sweep needs at least two examples".into()));
    }
    let center = params.flatten();
    let min_inners = exec.try_map(num_probes, |k| {
        let mut child = rng.child(k as u64);
        let delta = sample_in_ball(&mut child, center.len(), radius)?;
        let mut w = center.clone();
        vector::axpy(1.0, &delta, &mut w);
        let probe = params.with_flat(&w)?;
        let grads = dataset_gradients(&probe, data, loss, Execution::Sequential)?;
        min_pairwise_inner(&grads)
    })?;
    Ok(BallSweep { radius, min_inners })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::Matrix;

    fn linear(w: &[f64]) -> NetworkParams {
        NetworkParams::new(vec![Matrix::from_vec(1, w.len(), w.to_vec()).unwrap()], model::Activation::Identity, false, 1.0)
            .unwrap()
    }

    #[test]
    fn hand_computed_square_loss_pair() {
        let p = linear(&[0.6, 0.8]);
        let data = Dataset::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![0.0, 0.0]).unwrap();
        let grads = dataset_gradients(&p, &data, Loss::Square, Execution::Sequential).unwrap();
        let s = pairwise_stats(&grads, Some(0.1)).unwrap();
        assert!((s.min_inner - 0.36).abs() < 1e-15);
        assert!(s.eta_violations.is_empty());
    }

    #[test]
    fn identical_and_antipodal_gradients() {
        let g = vec![vec![0.3, -0.4], vec![0.3, -0.4], vec![0.3, -0.4]];
        let s = pairwise_stats(&g, None).unwrap();
        assert_eq!(s.min_cosine, Some(1.0));
        assert!((s.min_inner - 0.25).abs() < 1e-15);
        assert_eq!(normalized_average_stats(&g).unwrap(), (s.mean_inner, Some(1.0)));
        let anti = vec![vec![0.3, -0.4], vec![-0.3, 0.4]];
        assert_eq!(normalized_average_stats(&anti).unwrap().1, Some(-1.0));
    }

    #[test]
    fn zero_gradients_are_excluded_from_cosines() {
        let g = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]];
        let s = pairwise_stats(&g, Some(0.0)).unwrap();
        assert_eq!(s.excluded_pairs, 2);
        assert_eq!(s.pair_count, 1);
        assert_eq!(s.min_cosine, Some(0.0));
        assert_eq!(s.min_inner, 0.0);
        let z = vec![vec![0.0], vec![0.0]];
        let s = pairwise_stats(&z, None).unwrap();
        assert_eq!(s.min_cosine, None);
        assert_eq!(s.pair_count, 0);
    }

    #[test]
    fn eta_violations_are_listed() {
        let g = vec![vec![1.0, 0.0], vec![-0.5, 0.0], vec![0.0, 1.0]];
        let s = pairwise_stats(&g, Some(0.2)).unwrap();
        assert_eq!(s.eta_violations, vec![EtaViolation { i: 0, j: 1, inner: -0.5 }]);
        assert!(!s.holds(0.2));
        assert_eq!(s.eta(), 0.5);
    }

    #[test]
    fn shape_and_count_errors() {
        assert!(matches!(pairwise_stats(&[vec![1.0], vec![1.0, 2.0]], None), Err(Error::Shape(_))));
        assert!(pairwise_stats(&[vec![1.0]], None).is_err());
    }

    #[test]
    fn pair_records_enumerate_lexicographically() {
        let g = vec![vec![1.0], vec![2.0], vec![-1.0]];
        let r = pair_records(&g).unwrap();
        let ids: Vec<(usize, usize, usize)> = r.iter().map(|p| (p.pair_id, p.i, p.j)).collect();
        assert_eq!(ids, vec![(0, 0, 1), (1, 0, 2), (2, 1, 2)]);
        assert_eq!(r[1].inner, -1.0);
        assert_eq!(r[1].cosine, Some(-1.0));
    }

    #[test]
    fn full_batch_probe_has_unit_cosines() {
        let p = linear(&[0.1, -0.2, 0.3]);
        let data = Dataset::new(
            vec![vec![0.6, 0.8, 0.0], vec![0.0, 0.6, 0.8], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, -1.0]],
            vec![0.5, -0.5, 1.0, 0.2],
        )
        .unwrap();
        let mut rng = RngStream::new(1, 2);
        let probe = minibatch_probe(&p, &data, Loss::Square, &mut rng, 5, 4).unwrap();
        assert!(probe.defined_cosines().iter().all(|c| (c - 1.0).abs() < 1e-12));
        let a = minibatch_probe(&p, &data, Loss::Square, &mut RngStream::new(9, 9), 10, 2).unwrap();
        let b = minibatch_probe(&p, &data, Loss::Square, &mut RngStream::new(9, 9), 10, 2).unwrap();
        assert_eq!(a, b);
        assert!(minibatch_probe(&p, &data, Loss::Square, &mut rng, 5, 5).is_err());
        assert!(minibatch_probe(&p, &data, Loss::Square, &mut rng, 0, 2).is_err());
    }

    #[test]
    fn ball_sweep_at_zero_radius_matches_center() {
        let p = linear(&[0.1, -0.2]);
        let data = Dataset::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![0.5, 0.5]).unwrap();
        let grads = dataset_gradients(&p, &data, Loss::Square, Execution::Sequential).unwrap();
        let center = min_pairwise_inner(&grads).unwrap();
        let sweep = ball_sweep(&p, 0.0, 7, &RngStream::new(3, 3), &data, Loss::Square, Execution::Sequential).unwrap();
        assert!(sweep.min_inners.iter().all(|m| *m == center));
        assert_eq!(sweep.fraction_at(-center), 1.0);
        assert_eq!(sweep.fraction_at(-center - 1e-9), 0.0);
    }
}
