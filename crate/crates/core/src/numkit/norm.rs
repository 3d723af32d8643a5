use super::{vector, Matrix, RngStream};
use crate::{Error, Result};

/// Power iteration on `MᵀM` for the largest singular value.
#[derive(Debug, Clone, Copy)]
pub struct PowerIteration {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        PowerIteration { tol: 1e-10, max_iter: 10_000 }
    }
}

const START_STREAM_SEED: u64 = 0x6f70_6e6f_726d;

impl PowerIteration {
    pub fn with_tol(tol: f64) -> Self {
        PowerIteration { tol, ..Default::default() }
    }

    /// Largest singular value of `m`.
    ///
    /// Stops once the eigen-residual `‖MᵀMv − λv‖` drops below `tol · λ`;
    /// the Rayleigh quotient is then within `tol` of an eigenvalue.
    pub fn run(&self, m: &Matrix) -> Result<f64> {
        if m.is_empty() {
            return Err(Error::InvalidDimension("operator norm of an empty matrix".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if m.as_slice().iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let n = m.cols();
        // normalized all-ones start, perturbed by a fixed stream keyed on the shape
        let mut rng = RngStream::new(START_STREAM_SEED, ((m.rows() as u64) << 32) ^ n as u64);
        let mut v: Vec<f64> = (0..n).map(|_| 1.0 + 1e-2 * rng.gaussian()).collect();
        vector::scale(1.0 / vector::norm(&v), &mut v);

        let mut lambda = 0.0;
        for _ in 0..self.max_iter {
            let w = m.matvec_t(&m.matvec(&v)?)?;
            lambda = vector::dot(&v, &w);
            let residual = w
                .iter()
                .zip(&v)
                .map(|(wi, vi)| (wi - lambda * vi).powi(2))
                .sum::<f64>()
                .sqrt();
            let wn = vector::norm(&w);
            if residual <= self.tol * lambda || wn == 0.0 {
                return Ok(lambda.max(0.0).sqrt());
            }
            v = w;
            vector::scale(1.0 / wn, &mut v);
        }
        Err(Error::IterationLimit {
            iterations: self.max_iter,
            last_estimate: lambda.max(0.0).sqrt(),
        })
    }
}

/// Operator (spectral) norm with relative tolerance `tol` and the default iteration budget.
pub fn operator_norm(m: &Matrix, tol: f64) -> Result<f64> {
    PowerIteration::with_tol(tol).run(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        assert!((operator_norm(&Matrix::identity(5), 1e-10).unwrap() - 1.0).abs() < 1e-12);
        let d = Matrix::diag(&[3.0, 1.0]);
        assert!((operator_norm(&d, 1e-10).unwrap() - 3.0).abs() < 3e-10);
        assert_eq!(operator_norm(&Matrix::zeros(3, 2), 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(operator_norm(&Matrix::zeros(0, 0), 1e-10).is_err());
        assert!(operator_norm(&Matrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn budget_exhaustion_carries_last_iterate() {
        // nearly degenerate top pair: convergence needs far more than 3 steps
        let m = Matrix::diag(&[1.0, 0.999, 0.5]);
        let err = PowerIteration { tol: 1e-14, max_iter: 3 }.run(&m).unwrap_err();
        match err {
            Error::IterationLimit { iterations, last_estimate } => {
                assert_eq!(iterations, 3);
                assert!(last_estimate > 0.9 && last_estimate <= 1.0 + 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rank_one() {
        let m = Matrix::outer(&[3.0, 4.0], &[1.0, 0.0, 0.0]);
        assert!((operator_norm(&m, 1e-12).unwrap() - 5.0).abs() < 1e-10);
    }
}
