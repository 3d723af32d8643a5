use gradconf::model::{Activation, Dataset, Loss, NetworkParams};
use gradconf::numkit::{Matrix, RngStream};
use gradconf::objective::{NetworkObjective, Objective};
use gradconf::sgd::{self, ProbeSchedule, QuadraticEnsemble, SgdConfig};
use gradconf::Execution;

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn three_term_ensemble() -> QuadraticEnsemble {
    QuadraticEnsemble::new(
        vec![vec![1.0, 0.0], vec![-0.5, 0.8], vec![0.2, -1.0]],
        vec![vec![1.0, 0.5], vec![0.6, 1.0], vec![0.8, 0.7]],
    )
    .unwrap()
}

#[test]
fn envelope_holds_for_the_seed_mean() {
    let q = three_term_ensemble();
    let w0 = [2.0, 2.0];
    let fstar = q.optimal_value();
    let checkpoints = [10usize, 100, 1000];
    for alpha in [0.05, 0.2, 0.5] {
        let p = q.bound_params(&w0, alpha).unwrap();
        assert!(alpha < p.step_limit());
        let env = sgd::theorem1_envelope(&p, 1000).unwrap();
        let mut cfg = SgdConfig::new(alpha, 1000, 77);
        cfg.probes = ProbeSchedule::At(checkpoints.to_vec());
        let logs = sgd::run_sgd_ensemble(&q, &w0, &cfg, 200, Execution::Parallel).unwrap();
        for &t in &checkpoints {
            let gaps: Vec<f64> = logs.iter().map(|l| l.objective_at(t).unwrap() - fstar).collect();
            let (mean, se) = mean_and_se(&gaps);
            assert!(mean <= env[t] + 3.0 * se, "alpha {alpha}, T {t}: {mean} > {}", env[t]);
        }
    }
}

/// Time-averaged gap over `[burn, burn + window)`, pooled across seeds.
fn long_run_gap(q: &QuadraticEnsemble, alpha: f64, burn: usize, window: usize, seeds: u64) -> f64 {
    let fstar = q.optimal_value();
    let mut total = 0.0;
    for s in 0..seeds {
        let mut cfg = SgdConfig::new(alpha, burn + window - 1, s);
        cfg.probes = ProbeSchedule::Endpoints;
        let mut acc = 0.0;
        sgd::run_sgd_observed(q, &[0.0], &cfg, |k, w| {
            if k >= burn {
                acc += q.value(w).unwrap() - fstar;
            }
        })
        .unwrap();
        total += acc / window as f64;
    }
    total / seeds as f64
}

#[test]
fn opposed_pair_noise_floor_grows_with_step() {
    let q = QuadraticEnsemble::one_dimensional(&[1.0, -1.0], &[1.0, 1.0]).unwrap();
    let (lo, hi) = q.invariant_box(&[0.0]);
    assert!(q.confusion_over_box(&lo, &hi).unwrap() >= 1.0);
    let mut measured = Vec::new();
    for alpha in [0.01, 0.05, 0.1, 0.2] {
        let gap = long_run_gap(&q, alpha, 3000, 40_000, 8);
        // stationary E[w²] = α/(2 − α) for w' = (1 − α) w ± α
        let exact = alpha / (2.0 * (2.0 - alpha));
        assert!((gap - exact).abs() < 0.1 * exact, "alpha {alpha}: {gap} vs {exact}");
        let floor = q.bound_params(&[0.0], alpha).unwrap().noise_floor().unwrap();
        assert!(gap <= floor);
        measured.push(gap);
    }
    assert!(measured[0] > 0.0);
    assert!(measured.windows(2).all(|w| w[1] > w[0]), "{measured:?}");
}

fn disjoint_ensemble() -> QuadraticEnsemble {
    QuadraticEnsemble::disjoint(&[vec![1.0], vec![-1.0], vec![2.0], vec![0.5]], 1.0).unwrap()
}

#[test]
fn disjoint_supports_have_zero_confusion_everywhere() {
    let q = disjoint_ensemble();
    let (lo, hi) = q.invariant_box(&[0.0; 4]);
    assert_eq!(q.confusion_over_box(&lo, &hi).unwrap(), 0.0);
    let p = q.bound_params(&[0.0; 4], 0.1).unwrap();
    assert_eq!(p.noise_floor().unwrap(), 0.0);
}

#[test]
fn disjoint_ensemble_converges_fast() {
    let q = disjoint_ensemble();
    let alpha = 1.0 / (4.0 * q.smoothness());
    let mut cfg = SgdConfig::new(alpha, 500, 3);
    cfg.probes = ProbeSchedule::Endpoints;
    let logs = sgd::run_sgd_ensemble(&q, &[0.0; 4], &cfg, 200, Execution::Parallel).unwrap();
    let gaps: Vec<f64> = logs.iter().map(|l| l.final_objective().unwrap() - q.optimal_value()).collect();
    assert!(mean_and_se(&gaps).0 < 1e-8);
}

#[test]
fn disjoint_ensemble_decay_rate() {
    // A coordinate shrinks by (1 − αL)² when its term is drawn, so the expected gap contracts by
    // q = 1 − 1/N + (1 − αL)²/N per step, which is never slower than the PL rate.
    let q = disjoint_ensemble();
    let n = 4.0;
    let l = q.smoothness();
    let fstar = q.optimal_value();
    for alpha in [1.0 / (n * l), 0.15] {
        let k_max = 20;
        let mut sums = vec![0.0; k_max + 1];
        let runs = 4000;
        for r in 0..runs {
            let mut cfg = SgdConfig::new(alpha, k_max, 11);
            cfg.stream = r;
            cfg.probes = ProbeSchedule::Endpoints;
            sgd::run_sgd_observed(&q, &[0.0; 4], &cfg, |k, w| sums[k] += q.value(w).unwrap() - fstar).unwrap();
        }
        let xs: Vec<f64> = (0..=k_max).map(|k| k as f64).collect();
        let ys: Vec<f64> = sums.iter().map(|s| (s / runs as f64).ln()).collect();
        let (xm, ym) = (xs.iter().sum::<f64>() / xs.len() as f64, ys.iter().sum::<f64>() / ys.len() as f64);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>()
            / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
        let expected = (1.0 - 1.0 / n + (1.0 - alpha * l).powi(2) / n).ln();
        let rho = q.bound_params(&[0.0; 4], alpha).unwrap().pl_rate().unwrap();
        assert!(slope <= rho.ln(), "alpha {alpha}: slope {slope} vs log rho {}", rho.ln());
        assert!((slope - expected).abs() <= 0.1 * expected.abs(), "alpha {alpha}: slope {slope} vs {expected}");
    }
}

#[test]
fn runs_are_bit_identical_per_seed() {
    let q = three_term_ensemble();
    let mut cfg = SgdConfig::new(0.3, 300, 42);
    cfg.probes = ProbeSchedule::Every(7);
    cfg.probe_confusion = true;
    let (wa, la) = sgd::run_sgd(&q, &[1.0, -2.0], &cfg).unwrap();
    let (wb, lb) = sgd::run_sgd(&q, &[1.0, -2.0], &cfg).unwrap();
    assert_eq!(wa, wb);
    assert_eq!(la, lb);
    let seq = sgd::run_sgd_ensemble(&q, &[1.0, -2.0], &cfg, 16, Execution::Sequential).unwrap();
    let par = sgd::run_sgd_ensemble(&q, &[1.0, -2.0], &cfg, 16, Execution::Parallel).unwrap();
    assert_eq!(seq, par);
    let mut other = cfg.clone();
    other.seed = 43;
    assert_ne!(sgd::run_sgd(&q, &[1.0, -2.0], &other).unwrap().1, la);
}

#[test]
fn orthogonal_data_sgd_decouples_per_term() {
    let d = 6;
    let mut rng = RngStream::new(9, 0);
    let xs: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|k| if k == i { 1.0 } else { 0.0 }).collect()).collect();
    let ys: Vec<f64> = (0..d).map(|_| if rng.uniform() < 0.5 { -1.0 } else { 1.0 }).collect();
    let template = NetworkParams::new(vec![Matrix::zeros(1, d)], Activation::Identity, false, 1.0).unwrap();
    let obj = NetworkObjective::new(template, Dataset::new(xs, ys).unwrap(), Loss::Logistic).unwrap();
    let w0: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
    let mut prev: Vec<f64> = (0..d).map(|i| obj.term_value(&w0, i).unwrap()).collect();
    let mut strict_drops = 0;
    let mut cfg = SgdConfig::new(0.5, 400, 1);
    cfg.probes = ProbeSchedule::Endpoints;
    sgd::run_sgd_observed(&obj, &w0, &cfg, |_, w| {
        for (i, p) in prev.iter_mut().enumerate() {
            let v = obj.term_value(w, i).unwrap();
            assert!(v <= *p, "term {i} rose from {p} to {v}");
            if v < *p {
                strict_drops += 1;
            }
            *p = v;
        }
    })
    .unwrap();
    assert!(strict_drops >= 300);
}
