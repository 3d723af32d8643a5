use crate::{Error, Result};

/// Central-difference gradient `(f(w + h e_k) − f(w − h e_k)) / 2h`.
pub fn finite_diff_grad<F>(f: F, w: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {h}")));
    }
    let mut probe = w.to_vec();
    let mut grad = Vec::with_capacity(w.len());
    for k in 0..w.len() {
        let orig = probe[k];
        probe[k] = orig + h;
        let plus = f(&probe);
        probe[k] = orig - h;
        let minus = f(&probe);
        probe[k] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("objective at coordinate {k} ± {h}")));
        }
        grad.push((plus - minus) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::vector;

    #[test]
    fn quadratic_recovers_point() {
        let w = [0.3, -1.2, 2.5];
        let g = finite_diff_grad(|v| 0.5 * vector::norm_sq(v), &w, 1e-4).unwrap();
        for (a, b) in g.iter().zip(&w) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_gives_zero() {
        let h = 1e-3;
        let g = finite_diff_grad(|_| 4.2, &[1.0, 2.0], h).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12 / h));
    }

    #[test]
    fn tanh_derivative() {
        let g = finite_diff_grad(|v| v[0].tanh(), &[0.3], 1e-5).unwrap();
        let exact = 1.0 - 0.3f64.tanh().powi(2);
        assert!((g[0] - exact).abs() < 1e-8);
    }

    #[test]
    fn non_finite_propagates() {
        let r = finite_diff_grad(|v| if v[0] > 0.0 { f64::NAN } else { 0.0 }, &[0.0], 1e-3);
        assert!(matches!(r, Err(Error::NonFinite(_))));
        assert!(finite_diff_grad(|_| 0.0, &[0.0], 0.0).is_err());
    }
}
