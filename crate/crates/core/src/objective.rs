//! Finite-sum objectives `F(w) = (1/N) Σ f_i(w)` over a flat parameter vector.

use crate::model::{self, Dataset, Loss, NetworkParams};
use crate::numkit::vector;
use crate::{Error, Result};

pub trait Objective: Sync {
    /// Number of parameters.
    fn dim(&self) -> usize;

    /// Number of terms `N`.
    fn num_terms(&self) -> usize;

    fn term_value(&self, w: &[f64], i: usize) -> Result<f64>;

    fn term_grad(&self, w: &[f64], i: usize) -> Result<Vec<f64>>;

    /// `F(w)`, summed in index order.
    fn value(&self, w: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for i in 0..self.num_terms() {
            s += self.term_value(w, i)?;
        }
        Ok(s / self.num_terms() as f64)
    }

    fn term_grads(&self, w: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..self.num_terms()).map(|i| self.term_grad(w, i)).collect()
    }

    /// Mean of the term gradients over `idx`.
    fn batch_grad(&self, w: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
        if idx.is_empty() {
            return Err(Error::InvalidParameter("empty batch".into()));
        }
        let mut g = vec![0.0; self.dim()];
        for &i in idx {
            vector::axpy(1.0, &self.term_grad(w, i)?, &mut g);
        }
        vector::scale(1.0 / idx.len() as f64, &mut g);
        Ok(g)
    }

    /// `∇F(w)`.
    fn full_grad(&self, w: &[f64]) -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..self.num_terms()).collect();
        self.batch_grad(w, &idx)
    }
}

/// Per-example losses of a network on a dataset, in the canonical parameter flattening.
#[derive(Debug, Clone)]
pub struct NetworkObjective {
    template: NetworkParams,
    data: Dataset,
    loss: Loss,
}

impl NetworkObjective {
    pub fn new(template: NetworkParams, data: Dataset, loss: Loss) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidConfig("empty dataset".into()));
        }
        if data.dim() != template.input_dim() {
            return Err(Error::Shape(format!(
                "data dimension {} but network input dimension {}",
                data.dim(),
                template.input_dim()
            )));
        }
        Ok(NetworkObjective { template, data, loss })
    }

    pub fn params_at(&self, w: &[f64]) -> Result<NetworkParams> {
        self.template.with_flat(w)
    }

    pub fn initial_point(&self) -> Vec<f64> {
        self.template.flatten()
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn template(&self) -> &NetworkParams {
        &self.template
    }
}

impl Objective for NetworkObjective {
    fn dim(&self) -> usize {
        self.template.param_count()
    }

    fn num_terms(&self) -> usize {
        self.data.len()
    }

    fn term_value(&self, w: &[f64], i: usize) -> Result<f64> {
        model::example_loss(&self.params_at(w)?, self.data.input(i), self.loss, self.data.label(i))
    }

    fn term_grad(&self, w: &[f64], i: usize) -> Result<Vec<f64>> {
        Ok(model::backprop(&self.params_at(w)?, self.data.input(i), self.loss, self.data.label(i))?.flatten())
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        let p = self.params_at(w)?;
        let mut s = 0.0;
        for i in 0..self.data.len() {
            s += model::example_loss(&p, self.data.input(i), self.loss, self.data.label(i))?;
        }
        Ok(s / self.data.len() as f64)
    }

    fn term_grads(&self, w: &[f64]) -> Result<Vec<Vec<f64>>> {
        let p = self.params_at(w)?;
        (0..self.data.len())
            .map(|i| Ok(model::backprop(&p, self.data.input(i), self.loss, self.data.label(i))?.flatten()))
            .collect()
    }

    fn batch_grad(&self, w: &[f64], idx: &[usize]) -> Result<Vec<f64>> {
        if idx.is_empty() {
            return Err(Error::InvalidParameter("empty batch".into()));
        }
        let p = self.params_at(w)?;
        let mut g = model::PerExampleGradient::zeros_like(&p);
        for &i in idx {
            g.add_scaled(1.0, &model::backprop(&p, self.data.input(i), self.loss, self.data.label(i))?);
        }
        g.scale(1.0 / idx.len() as f64);
        Ok(g.flatten())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Activation;
    use crate::numkit::Matrix;

    #[test]
    fn network_objective_matches_model() {
        let p = NetworkParams::new(
            vec![Matrix::from_rows(&[vec![0.2, -0.1], vec![0.4, 0.3]]).unwrap(), Matrix::from_rows(&[vec![0.5, -0.7]]).unwrap()],
            Activation::Tanh,
            true,
            1.0,
        )
        .unwrap();
        let data = Dataset::new(vec![vec![0.6, 0.8], vec![-1.0, 0.0], vec![0.0, 0.5]], vec![0.3, -0.2, 1.0]).unwrap();
        let obj = NetworkObjective::new(p.clone(), data.clone(), Loss::Square).unwrap();
        let w = obj.initial_point();
        let direct: f64 = (0..3)
            .map(|i| model::example_loss(&p, data.input(i), Loss::Square, data.label(i)).unwrap())
            .sum::<f64>()
            / 3.0;
        assert!((obj.value(&w).unwrap() - direct).abs() < 1e-15);
        let full = obj.full_grad(&w).unwrap();
        let manual: Vec<f64> = {
            let gs = obj.term_grads(&w).unwrap();
            (0..w.len()).map(|k| gs.iter().map(|g| g[k]).sum::<f64>() / 3.0).collect()
        };
        for (a, b) in full.iter().zip(&manual) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = NetworkParams::new(vec![Matrix::zeros(1, 3)], Activation::Identity, false, 1.0).unwrap();
        let data = Dataset::new(vec![vec![0.6, 0.8]], vec![0.0]).unwrap();
        assert!(NetworkObjective::new(p, data, Loss::Square).is_err());
    }
}
