use gradconf::confusion::{self, pairwise_stats, trace_form_inner};
use gradconf::init::{initialize, Architecture, InitScheme};
use gradconf::model::{self, Activation, Dataset, Loss, NetworkParams};
use gradconf::numkit::{sample_unit_sphere, Matrix, RngStream};
use gradconf::Execution;
use proptest::prelude::*;

fn grads_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..7, 1usize..6).prop_flat_map(|(m, n)| prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n), m))
}

proptest! {
    #[test]
    fn scale_covariance(grads in grads_strategy(), lambda in 0.1f64..10.0) {
        let scaled: Vec<Vec<f64>> = grads.iter().map(|g| g.iter().map(|v| v * lambda).collect()).collect();
        let a = pairwise_stats(&grads, None).unwrap();
        let b = pairwise_stats(&scaled, None).unwrap();
        let l2 = lambda * lambda;
        prop_assert!((b.min_inner - l2 * a.min_inner).abs() <= 1e-12 * (1.0 + l2 * a.min_inner.abs()));
        prop_assert!((b.mean_inner - l2 * a.mean_inner).abs() <= 1e-12 * (1.0 + l2 * a.mean_inner.abs()));
        let ra = confusion::pair_records(&grads).unwrap();
        let rb = confusion::pair_records(&scaled).unwrap();
        for (x, y) in ra.iter().zip(&rb) {
            match (x.cosine, y.cosine) {
                (Some(c1), Some(c2)) => prop_assert!((c1 - c2).abs() <= 1e-12),
                (None, None) => {}
                _ => {}
            }
        }
    }

    #[test]
    fn cauchy_schwarz_and_cosine_range(grads in grads_strategy()) {
        let norms: Vec<f64> = grads.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        for r in confusion::pair_records(&grads).unwrap() {
            prop_assert!(r.inner.abs() <= norms[r.i] * norms[r.j] * (1.0 + 1e-12));
            if let Some(c) = r.cosine {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c));
            }
        }
        let s = pairwise_stats(&grads, None).unwrap();
        prop_assert!(s.min_inner <= s.mean_inner + 1e-12 * s.mean_inner.abs().max(1.0));
        let m = grads.len();
        prop_assert_eq!(s.pair_count + s.excluded_pairs, m * (m - 1) / 2);
    }

    #[test]
    fn pair_inner_is_symmetric(grads in grads_strategy()) {
        for r in confusion::pair_records(&grads).unwrap() {
            let rev: f64 = grads[r.j].iter().zip(&grads[r.i]).map(|(a, b)| a * b).sum();
            prop_assert_eq!(r.inner, rev);
        }
    }

    #[test]
    fn parallel_pair_table_matches_sequential(grads in grads_strategy(), eta in 0.0f64..2.0) {
        let a = pairwise_stats(&grads, Some(eta)).unwrap();
        let b = confusion::pairwise_stats_with(&grads, Some(eta), Execution::Parallel).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn trace_form_equals_flattened_dot_on_random_configurations() {
    let mut rng = RngStream::new(123, 0);
    let acts = [Activation::Identity, Activation::Tanh, Activation::Sigmoid, Activation::Relu];
    for k in 0..100 {
        let depth = 1 + k % 4;
        let width = 2 + rng.index(7);
        let act = acts[k % 4];
        let loss = if k % 2 == 0 { Loss::Square } else { Loss::Logistic };
        let mut arch = Architecture::mlp(5, width, depth - 1, act);
        arch.biases = k % 3 == 0;
        let p = initialize(&InitScheme::GlorotNormal, &arch, &mut rng).unwrap();
        let xi = sample_unit_sphere(&mut rng, 5).unwrap();
        let xj = sample_unit_sphere(&mut rng, 5).unwrap();
        let (yi, yj) = (rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0));
        let bi = model::backprop_full(&p, &xi, loss, yi).unwrap();
        let bj = model::backprop_full(&p, &xj, loss, yj).unwrap();
        let tf = trace_form_inner(&p, &bi, &bj).unwrap();
        let gi = bi.gradient(arch.biases).flatten();
        let gj = bj.gradient(arch.biases).flatten();
        let flat: f64 = gi.iter().zip(&gj).map(|(a, b)| a * b).sum();
        assert!((tf - flat).abs() <= 1e-10 * flat.abs().max(1e-300), "config {k}: {tf} vs {flat}");
        let self_tf = trace_form_inner(&p, &bi, &bi).unwrap();
        let nsq: f64 = gi.iter().map(|v| v * v).sum();
        assert!((self_tf - nsq).abs() <= 1e-10 * nsq.max(1e-300));
    }
}

#[test]
fn trace_form_with_a_zero_gradient_is_zero() {
    let p = NetworkParams::new(
        vec![Matrix::from_rows(&[vec![0.3, -0.2], vec![0.1, 0.5]]).unwrap(), Matrix::from_rows(&[vec![0.4, 0.4]]).unwrap()],
        Activation::Tanh,
        true,
        1.0,
    )
    .unwrap();
    let x = [0.6, 0.8];
    let g = model::forward(&p, &x).unwrap().0;
    let zero = model::backprop_full(&p, &x, Loss::Square, g).unwrap();
    let other = model::backprop_full(&p, &[0.0, 1.0], Loss::Square, -0.5).unwrap();
    assert_eq!(trace_form_inner(&p, &zero, &other).unwrap(), 0.0);
}

#[test]
fn trace_form_rejects_mismatched_records() {
    let small = NetworkParams::new(vec![Matrix::zeros(1, 2)], Activation::Tanh, true, 1.0).unwrap();
    let big = NetworkParams::new(vec![Matrix::zeros(3, 2), Matrix::zeros(1, 3)], Activation::Tanh, true, 1.0).unwrap();
    let b = model::backprop_full(&big, &[0.1, 0.1], Loss::Square, 0.0).unwrap();
    assert!(trace_form_inner(&small, &b, &b).is_err());
}

/// Orthonormal inputs `e_1 … e_N` with random ±1 labels.
fn orthonormal_dataset(n: usize, d: usize, rng: &mut RngStream) -> Dataset {
    let xs = (0..n).map(|i| (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect()).collect();
    let ys = (0..n).map(|_| if rng.uniform() < 0.5 { -1.0 } else { 1.0 }).collect();
    Dataset::new(xs, ys).unwrap()
}

#[test]
fn orthogonal_data_logistic_model_has_zero_confusion() {
    let mut rng = RngStream::new(5, 0);
    let data = orthonormal_dataset(6, 8, &mut rng);
    for _ in 0..10 {
        let w: Vec<f64> = (0..8).map(|_| rng.gaussian()).collect();
        let p = NetworkParams::new(vec![Matrix::from_vec(1, 8, w).unwrap()], Activation::Identity, false, 1.0).unwrap();
        let grads = confusion::dataset_gradients(&p, &data, Loss::Logistic, Execution::Sequential).unwrap();
        let s = pairwise_stats(&grads, Some(0.0)).unwrap();
        assert!(s.min_inner.abs() <= 1e-12 && s.mean_inner.abs() <= 1e-12);
        assert!(s.eta_violations.is_empty());
        let (avg, norm_avg) = confusion::normalized_average_stats(&grads).unwrap();
        assert!(avg.abs() <= 1e-12 && norm_avg.unwrap().abs() <= 1e-12);
    }
}

#[test]
fn ball_sweep_thresholds_are_monotone() {
    let mut rng = RngStream::new(8, 0);
    let arch = Architecture::mlp(6, 5, 2, Activation::Tanh);
    let p = initialize(&InitScheme::Strategy1 { kappa: 1.0 }, &arch, &mut rng).unwrap();
    let xs: Vec<Vec<f64>> = (0..6).map(|_| sample_unit_sphere(&mut rng, 6).unwrap()).collect();
    let ys: Vec<f64> = (0..6).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let data = Dataset::new(xs, ys).unwrap();
    let sweep = confusion::ball_sweep(&p, 0.5, 200, &RngStream::new(1, 1), &data, Loss::Square, Execution::Parallel).unwrap();
    let etas = [1.0, 0.1, 0.05, 0.01, 0.001, 0.0];
    for w in etas.windows(2) {
        assert!(sweep.fraction_at(w[1]) <= sweep.fraction_at(w[0]));
    }
    let seq = confusion::ball_sweep(&p, 0.5, 200, &RngStream::new(1, 1), &data, Loss::Square, Execution::Sequential).unwrap();
    assert_eq!(sweep, seq);
    let (k, v) = sweep.worst();
    assert_eq!(sweep.min_inners[k], v);
}
