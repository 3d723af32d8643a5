use gradconf::init::{initialize, Architecture, InitScheme};
use gradconf::model::{self, Activation, Loss, NetworkParams};
use gradconf::numkit::{sample_unit_sphere, vector, Matrix, RngStream};
use proptest::prelude::*;

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-6;

fn probe_point(rng: &mut RngStream, d: usize) -> Vec<f64> {
    let mut x = sample_unit_sphere(rng, d).unwrap();
    vector::scale(rng.uniform().max(0.05), &mut x);
    x
}

fn random_net(rng: &mut RngStream, d: usize, width: usize, depth: usize, act: Activation, biases: bool) -> NetworkParams {
    let mut arch = Architecture::mlp(d, width, depth, act);
    arch.final_activation = act != Activation::Identity;
    arch.biases = biases;
    let p = initialize(&InitScheme::GlorotNormal, &arch, rng).unwrap();
    if biases {
        // nonzero biases so that their gradients are exercised
        let mut flat = p.flatten();
        flat.iter_mut().for_each(|v| *v += 0.05 * rng.gaussian());
        p.with_flat(&flat).unwrap()
    } else {
        p
    }
}

#[test]
fn backprop_matches_finite_differences_on_the_grid() {
    let mut rng = RngStream::new(17, 0);
    let mut worst: f64 = 0.0;
    for act in [Activation::Identity, Activation::Tanh, Activation::Sigmoid] {
        for loss in [Loss::Square, Loss::Logistic] {
            for depth in [0usize, 1, 2, 5] {
                for width in [1usize, 3, 8] {
                    for probe in 0..20 {
                        let p = random_net(&mut rng, 4, width, depth, act, probe % 4 == 3);
                        let x = probe_point(&mut rng, 4);
                        let y = rng.uniform_range(-1.0, 1.0);
                        let err = model::gradient_check_error(&p, &x, loss, y, H).unwrap();
                        assert!(err < REL_TOL, "{act} {loss} depth {depth} width {width}: {err}");
                        worst = worst.max(err);
                    }
                }
            }
        }
    }
    assert!(worst > 0.0);
}

#[test]
fn relu_matches_finite_differences_away_from_the_kink() {
    let mut rng = RngStream::new(18, 0);
    let mut checked = 0;
    for loss in [Loss::Square, Loss::Logistic] {
        for depth in [0usize, 1, 2, 5] {
            for width in [1usize, 3, 8] {
                for _ in 0..20 {
                    let p = random_net(&mut rng, 4, width, depth, Activation::Relu, false);
                    let x = probe_point(&mut rng, 4);
                    if model::min_abs_preactivation(&p, &x).unwrap() < 1e-3 {
                        continue;
                    }
                    let y = rng.uniform_range(-1.0, 1.0);
                    let err = model::gradient_check_error(&p, &x, loss, y, H).unwrap();
                    assert!(err < REL_TOL, "relu {loss} depth {depth} width {width}: {err}");
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 300, "only {checked} probes away from the kink");
}

#[test]
fn linear_net_equals_explicit_matrix_product() {
    let mut rng = RngStream::new(4, 4);
    for beta in 1..=6 {
        let arch = Architecture::deep_linear(5, beta);
        let p = initialize(&InitScheme::Strategy1 { kappa: 1.0 }, &arch, &mut rng).unwrap();
        let x = probe_point(&mut rng, 5);
        let mut prod = p.weights()[0].clone();
        for w in &p.weights()[1..] {
            prod = w.matmul(&prod).unwrap();
        }
        let expected = p.output_scale() * prod.matvec(&x).unwrap()[0];
        let g = model::forward(&p, &x).unwrap().0;
        assert!((g - expected).abs() < 1e-12, "beta {beta}: {g} vs {expected}");
    }
}

#[test]
fn trace_records_every_layer() {
    let mut rng = RngStream::new(2, 2);
    let p = random_net(&mut rng, 3, 4, 3, Activation::Tanh, false);
    let x = probe_point(&mut rng, 3);
    let (g, t) = model::forward(&p, &x).unwrap();
    assert_eq!(t.inputs.len(), 4);
    assert_eq!(t.inputs[0], x);
    for (p_idx, w) in p.weights().iter().enumerate() {
        assert_eq!(t.pre[p_idx].len(), w.rows());
        assert_eq!(t.inputs[p_idx].len(), w.cols());
    }
    assert_eq!(g, t.output);
}

proptest! {
    #[test]
    fn linear_model_gradient_is_zeta_x(
        w in prop::collection::vec(-1.0f64..1.0, 5),
        dir in prop::collection::vec(-1.0f64..1.0, 5),
        y in -1.0f64..1.0,
        logistic in any::<bool>(),
    ) {
        let n = vector::norm(&dir);
        prop_assume!(n > 1e-3);
        let x: Vec<f64> = dir.iter().map(|v| v / n).collect();
        let loss = if logistic { Loss::Logistic } else { Loss::Square };
        let p = NetworkParams::new(vec![Matrix::from_vec(1, 5, w.clone()).unwrap()], Activation::Identity, false, 1.0).unwrap();
        let z = model::zeta(loss, y, vector::dot(&w, &x));
        let grad = model::backprop(&p, &x, loss, y).unwrap().flatten();
        for (gk, xk) in grad.iter().zip(&x) {
            prop_assert_eq!(*gk, z * xk);
        }
    }

    #[test]
    fn output_gradient_scales_with_zeta(seed in 0u64..1000, y in -1.0f64..1.0) {
        let mut rng = RngStream::new(seed, 9);
        let p = random_net(&mut rng, 3, 3, 2, Activation::Tanh, false);
        let x = probe_point(&mut rng, 3);
        let g = model::forward(&p, &x).unwrap().0;
        let z = model::zeta(Loss::Square, y, g);
        let full = model::backprop(&p, &x, Loss::Square, y).unwrap().flatten();
        let out = model::output_gradient(&p, &x).unwrap().flatten();
        for (a, b) in full.iter().zip(&out) {
            prop_assert!((a - z * b).abs() <= 1e-14 * (1.0 + b.abs()));
        }
    }
}
