//! Backprop against central differences over the activation × loss × depth × width grid.

use super::GRADCHECK_STREAM;
use crate::config::ExperimentConfig;
use crate::error::{Result, StepContext};
use gradconf::init::{initialize, Architecture, InitScheme};
use gradconf::model::{self, Activation, Loss};
use gradconf::numkit::{finite_diff_grad, sample_unit_sphere, vector, RngStream};
use gradconf::Execution;
use serde::Serialize;

/// ReLU probes with a pre-activation closer than this to the kink are skipped.
pub const KINK_MARGIN: f64 = 1e-3;

pub const COLUMNS: [&str; 10] =
    ["activation", "loss", "depth", "width", "checked", "skipped", "unresolved", "max_rel_error", "max_noise_ratio", "pass"];

/// Round-off of the central difference, `√P ε |f| / h`. A probe whose gradient norm is
/// below this divided by the tolerance cannot be certified at that relative error; it
/// must instead agree with the difference to within this absolute noise.
pub fn difference_noise(param_count: usize, loss_value: f64, h: f64) -> f64 {
    (param_count as f64).sqrt() * f64::EPSILON * loss_value.abs() / h
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckRow {
    pub activation: Activation,
    pub loss: Loss,
    pub depth: usize,
    pub width: usize,
    pub checked: usize,
    pub skipped: usize,
    /// Gradient too small for the difference oracle to resolve.
    pub unresolved: usize,
    pub max_rel_error: f64,
    /// Largest `‖∇_bp − ∇_fd‖ / noise` over unresolved probes; at most 1 to pass.
    pub max_noise_ratio: f64,
    pub pass: bool,
}

impl GradcheckRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.activation.name().into(),
            self.loss.name().into(),
            self.depth.to_string(),
            self.width.to_string(),
            self.checked.to_string(),
            self.skipped.to_string(),
            self.unresolved.to_string(),
            self.max_rel_error.to_string(),
            self.max_noise_ratio.to_string(),
            self.pass.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckSummary {
    pub cells: usize,
    pub checked: usize,
    pub skipped: usize,
    pub unresolved: usize,
    pub max_rel_error: f64,
    pub max_noise_ratio: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Every fourth probe carries nonzero biases; non-identity nets also squash the output.
pub fn run(cfg: &ExperimentConfig, exec: Execution) -> Result<(Vec<GradcheckRow>, GradcheckSummary)> {
    let g = &cfg.gradcheck;
    let mut cells = Vec::new();
    for act in Activation::ALL {
        for loss in [Loss::Square, Loss::Logistic] {
            for &depth in &g.depths {
                for &width in &g.widths {
                    cells.push((act, loss, depth, width));
                }
            }
        }
    }
    let root = RngStream::new(cfg.experiment.seed, GRADCHECK_STREAM);
    let rows = exec.try_map(cells.len(), |c| -> gradconf::Result<GradcheckRow> {
        let (act, loss, depth, width) = cells[c];
        let mut rng = root.child(c as u64);
        let (mut checked, mut skipped, mut unresolved, mut worst, mut worst_ratio) = (0, 0, 0, 0.0f64, 0.0f64);
        for probe in 0..g.probes {
            let mut arch = Architecture::mlp(g.d, width, depth, act);
            arch.final_activation = act != Activation::Identity;
            arch.biases = probe % 4 == 3;
            let mut params = initialize(&InitScheme::GlorotNormal, &arch, &mut rng)?;
            if arch.biases {
                let mut flat = params.flatten();
                flat.iter_mut().for_each(|v| *v += 0.05 * rng.gaussian());
                params = params.with_flat(&flat)?;
            }
            let mut x = sample_unit_sphere(&mut rng, g.d)?;
            vector::scale(rng.uniform().max(0.05), &mut x);
            let y = rng.uniform_range(-1.0, 1.0);
            if act == Activation::Relu && model::min_abs_preactivation(&params, &x)? < KINK_MARGIN {
                skipped += 1;
                continue;
            }
            let exact = model::backprop(&params, &x, loss, y)?.flatten();
            let numeric = finite_diff_grad(
                |w| params.with_flat(w).and_then(|p| model::example_loss(&p, &x, loss, y)).unwrap_or(f64::NAN),
                &params.flatten(),
                g.step,
            )?;
            let diff = exact.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm = vector::norm(&exact);
            let noise = difference_noise(exact.len(), model::example_loss(&params, &x, loss, y)?, g.step);
            if diff > 0.0 && norm * g.tolerance <= noise {
                unresolved += 1;
                worst_ratio = worst_ratio.max(diff / noise);
                continue;
            }
            worst = worst.max(diff / norm.max(vector::norm(&numeric)).max(1e-12));
            checked += 1;
        }
        Ok(GradcheckRow {
            activation: act,
            loss,
            depth,
            width,
            checked,
            skipped,
            unresolved,
            max_rel_error: worst,
            max_noise_ratio: worst_ratio,
            pass: worst < g.tolerance && worst_ratio <= 1.0,
        })
    })
    .step("gradient check")?;
    let summary = GradcheckSummary {
        cells: rows.len(),
        checked: rows.iter().map(|r| r.checked).sum(),
        skipped: rows.iter().map(|r| r.skipped).sum(),
        unresolved: rows.iter().map(|r| r.unresolved).sum(),
        max_rel_error: rows.iter().map(|r| r.max_rel_error).fold(0.0, f64::max),
        max_noise_ratio: rows.iter().map(|r| r.max_noise_ratio).fold(0.0, f64::max),
        tolerance: g.tolerance,
        pass: rows.iter().all(|r| r.pass),
    };
    Ok((rows, summary))
}
