//! Fully-connected scalar-output networks with exact per-example backpropagation.
//!
//! The network is `g(x) = γ · σ_top(W_β σ(W_{β-1} … σ(W_0 x)))`, where
//! `σ_top` is `σ` when `final_activation` is set and the identity
//! otherwise. Backpropagation uses the layer recurrence
//! `δ_β = ζ γ σ'(z_β)`, `δ_p = (W_{p+1}ᵀ δ_{p+1}) ⊙ σ'(z_p)` and
//! `∇_{W_p} f = δ_p H_{p-1}ᵀ`, where `ζ = ∂f/∂g`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numkit::{vector, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
    /// Subgradient at 0 is taken to be 0.
    Relu,
}

impl Activation {
    pub const ALL: [Activation; 4] =
        [Activation::Identity, Activation::Tanh, Activation::Sigmoid, Activation::Relu];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(0.0),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn second_derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity | Activation::Relu => 0.0,
            Activation::Tanh => {
                let t = x.tanh();
                -2.0 * t * (1.0 - t * t)
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "linear" => Ok(Activation::Identity),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::InvalidConfig(format!("unknown activation `{other}`"))),
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Loss {
    /// `½ (y − g)²`
    Square,
    /// `log(1 + exp(−y g))`
    Logistic,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::Square => "square",
            Loss::Logistic => "logistic",
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Loss::Square),
            "logistic" => Ok(Loss::Logistic),
            other => Err(Error::InvalidConfig(format!("unknown loss `{other}`"))),
        }
    }
}

/// `∂f/∂g` for a single example.
#[inline]
pub fn zeta(loss: Loss, label: f64, g: f64) -> f64 {
    match loss {
        Loss::Square => g - label,
        Loss::Logistic => -label * sigmoid(-label * g),
    }
}

#[inline]
pub fn loss_value(loss: Loss, label: f64, g: f64) -> f64 {
    match loss {
        Loss::Square => 0.5 * (label - g).powi(2),
        Loss::Logistic => softplus(-label * g),
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Linear teacher `C(x) = ⟨w*, x⟩` with `‖w*‖ ≤ 1` and `‖x‖ ≤ 1`.
pub fn teacher_label(w_star: &[f64], x: &[f64]) -> Result<f64> {
    if w_star.len() != x.len() {
        return Err(Error::Shape(format!(
            "teacher of dimension {} applied to input of dimension {}",
            w_star.len(),
            x.len()
        )));
    }
    let wn = vector::norm(w_star);
    if wn > 1.0 + 1e-12 {
        return Err(Error::InvalidTeacher(format!("‖w*‖ = {wn} exceeds 1")));
    }
    let xn = vector::norm(x);
    if xn > 1.0 + 1e-12 {
        return Err(Error::InvalidTeacher(format!("‖x‖ = {xn} exceeds 1")));
    }
    Ok(vector::dot(w_star, x).clamp(-1.0, 1.0))
}

/// Weights `W_0 … W_β` of a scalar-output network plus its activation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    weights: Vec<Matrix>,
    biases: Option<Vec<Vec<f64>>>,
    activation: Activation,
    final_activation: bool,
    output_scale: f64,
}

impl NetworkParams {
    pub fn new(
        weights: Vec<Matrix>,
        activation: Activation,
        final_activation: bool,
        output_scale: f64,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for (p, pair) in weights.windows(2).enumerate() {
            if pair[1].cols() != pair[0].rows() {
                return Err(Error::Shape(format!(
                    "layer {} is {}x{} but layer {} outputs {}",
                    p + 1,
                    pair[1].rows(),
                    pair[1].cols(),
                    p,
                    pair[0].rows()
                )));
            }
        }
        if weights.last().map(Matrix::rows) != Some(1) {
            return Err(Error::Shape("last layer must have exactly one output row".into()));
        }
        if weights.iter().any(|w| w.is_empty()) {
            return Err(Error::Shape("empty weight matrix".into()));
        }
        if !(output_scale > 0.0) || !output_scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "output rescale must be positive, got {output_scale}"
            )));
        }
        Ok(NetworkParams { weights, biases: None, activation, final_activation, output_scale })
    }

    /// Adds zero-initialised biases to every layer.
    pub fn with_zero_biases(mut self) -> Self {
        self.biases = Some(self.weights.iter().map(|w| vec![0.0; w.rows()]).collect());
        self
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases(&self) -> Option<&[Vec<f64>]> {
        self.biases.as_deref()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn final_activation(&self) -> bool {
        self.final_activation
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].cols()
    }

    /// β: index of the top layer (number of weight matrices minus one).
    pub fn depth(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    /// Layer dimension chain `[d, ℓ_1, …, 1]`.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim()).chain(self.weights.iter().map(Matrix::rows)).collect()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len() + if self.biases.is_some() { w.rows() } else { 0 }).sum()
    }

    /// Canonical flattening: layer by layer, each weight matrix row-major,
    /// followed by that layer's bias when biases are present.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (p, w) in self.weights.iter().enumerate() {
            out.extend_from_slice(w.as_slice());
            if let Some(b) = &self.biases {
                out.extend_from_slice(&b[p]);
            }
        }
        out
    }

    /// Overwrites the parameters from a canonical flattening.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut offset = 0;
        for (p, w) in self.weights.iter_mut().enumerate() {
            let n = w.len();
            w.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
            if let Some(b) = &mut self.biases {
                let m = b[p].len();
                b[p].copy_from_slice(&flat[offset..offset + m]);
                offset += m;
            }
        }
        Ok(())
    }

    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        out.assign_flat(flat)?;
        Ok(out)
    }

    #[inline]
    fn layer_activation(&self, p: usize) -> Option<Activation> {
        if p + 1 < self.weights.len() || self.final_activation {
            Some(self.activation)
        } else {
            None
        }
    }
}

/// Pre- and post-activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `inputs[p]` is `H_{p-1}`, the input of layer `p` (`inputs[0] = x`).
    pub inputs: Vec<Vec<f64>>,
    /// `pre[p] = W_p H_{p-1} (+ b_p)`.
    pub pre: Vec<Vec<f64>>,
    /// Top-layer activation before the `γ` rescale.
    pub top: f64,
    /// Network output `g`.
    pub output: f64,
}

pub fn forward(params: &NetworkParams, x: &[f64]) -> Result<(f64, ForwardTrace)> {
    if x.len() != params.input_dim() {
        return Err(Error::Shape(format!(
            "input of dimension {} for a network expecting {}",
            x.len(),
            params.input_dim()
        )));
    }
    let n = params.weights.len();
    let mut inputs = Vec::with_capacity(n);
    let mut pre = Vec::with_capacity(n);
    let mut h = x.to_vec();
    for (p, w) in params.weights.iter().enumerate() {
        let mut z = w.matvec(&h)?;
        if let Some(b) = &params.biases {
            vector::axpy(1.0, &b[p], &mut z);
        }
        let next = match params.layer_activation(p) {
            Some(act) => z.iter().map(|v| act.apply(*v)).collect(),
            None => z.clone(),
        };
        inputs.push(std::mem::replace(&mut h, next));
        pre.push(z);
    }
    let top = h[0];
    let output = params.output_scale * top;
    Ok((output, ForwardTrace { inputs, pre, top, output }))
}

/// Per-layer gradient matrices `∇_{W_p} f` (and bias gradients when present).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerExampleGradient {
    pub weights: Vec<Matrix>,
    pub biases: Option<Vec<Vec<f64>>>,
}

impl PerExampleGradient {
    pub fn zeros_like(params: &NetworkParams) -> Self {
        PerExampleGradient {
            weights: params.weights.iter().map(|w| Matrix::zeros(w.rows(), w.cols())).collect(),
            biases: params.biases.as_ref().map(|b| b.iter().map(|v| vec![0.0; v.len()]).collect()),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.iter().map(Matrix::len).sum::<usize>()
            + self.biases.as_ref().map_or(0, |b| b.iter().map(Vec::len).sum())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same layer-major, row-major order as [`NetworkParams::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for (p, w) in self.weights.iter().enumerate() {
            out.extend_from_slice(w.as_slice());
            if let Some(b) = &self.biases {
                out.extend_from_slice(&b[p]);
            }
        }
        out
    }

    pub fn dot(&self, other: &PerExampleGradient) -> f64 {
        let mut s: f64 = self.weights.iter().zip(&other.weights).map(|(a, b)| a.frobenius_dot(b)).sum();
        if let (Some(a), Some(b)) = (&self.biases, &other.biases) {
            s += a.iter().zip(b).map(|(x, y)| vector::dot(x, y)).sum::<f64>();
        }
        s
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &PerExampleGradient) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            vector::axpy(alpha, b.as_slice(), a.as_mut_slice());
        }
        if let (Some(a), Some(b)) = (&mut self.biases, &other.biases) {
            for (x, y) in a.iter_mut().zip(b) {
                vector::axpy(alpha, y, x);
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for w in &mut self.weights {
            w.scale_in_place(alpha);
        }
        if let Some(b) = &mut self.biases {
            for v in b {
                vector::scale(alpha, v);
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(Matrix::is_finite)
            && self.biases.as_ref().is_none_or(|b| b.iter().all(|v| vector::all_finite(v)))
    }
}

/// Forward trace, backpropagated vectors `δ_p` and the loss derivative `ζ` for one example.
#[derive(Debug, Clone)]
pub struct Backprop {
    pub trace: ForwardTrace,
    /// `deltas[p] = ∂f/∂z_p`, one entry per row of `W_p`.
    pub deltas: Vec<Vec<f64>>,
    pub zeta: f64,
}

impl Backprop {
    pub fn gradient(&self, with_biases: bool) -> PerExampleGradient {
        PerExampleGradient {
            weights: self
                .deltas
                .iter()
                .zip(&self.trace.inputs)
                .map(|(d, h)| Matrix::outer(d, h))
                .collect(),
            biases: with_biases.then(|| self.deltas.clone()),
        }
    }
}

/// Backpropagation with an explicit output seed `∂f/∂g`.
fn backprop_seeded(params: &NetworkParams, trace: ForwardTrace, seed: f64) -> Result<Backprop> {
    let n = params.weights.len();
    let mut deltas = vec![Vec::new(); n];
    let top_slope = match params.layer_activation(n - 1) {
        Some(act) => act.derivative(trace.pre[n - 1][0]),
        None => 1.0,
    };
    deltas[n - 1] = vec![seed * params.output_scale * top_slope];
    for p in (0..n - 1).rev() {
        let mut d = params.weights[p + 1].matvec_t(&deltas[p + 1])?;
        for (di, z) in d.iter_mut().zip(&trace.pre[p]) {
            *di *= params.activation.derivative(*z);
        }
        deltas[p] = d;
    }
    Ok(Backprop { trace, deltas, zeta: seed })
}

pub fn backprop_full(params: &NetworkParams, x: &[f64], loss: Loss, label: f64) -> Result<Backprop> {
    let (g, trace) = forward(params, x)?;
    backprop_seeded(params, trace, zeta(loss, label, g))
}

/// Exact gradient of `loss_value(loss, label, g(x))` with respect to every weight.
pub fn backprop(params: &NetworkParams, x: &[f64], loss: Loss, label: f64) -> Result<PerExampleGradient> {
    Ok(backprop_full(params, x, loss, label)?.gradient(params.biases.is_some()))
}

/// Gradient of the network output itself, `∇_W g(x)` (backprop with `ζ = 1`).
pub fn output_gradient(params: &NetworkParams, x: &[f64]) -> Result<PerExampleGradient> {
    let (_, trace) = forward(params, x)?;
    Ok(backprop_seeded(params, trace, 1.0)?.gradient(params.biases.is_some()))
}

pub fn example_loss(params: &NetworkParams, x: &[f64], loss: Loss, label: f64) -> Result<f64> {
    Ok(loss_value(loss, label, forward(params, x)?.0))
}

/// Relative error `‖∇_bp − ∇_fd‖ / max(‖∇_bp‖, ‖∇_fd‖, 1e-12)` between backprop and
/// central finite differences of the example loss with step `h`.
pub fn gradient_check_error(params: &NetworkParams, x: &[f64], loss: Loss, label: f64, h: f64) -> Result<f64> {
    let exact = backprop(params, x, loss, label)?.flatten();
    let numeric = crate::numkit::finite_diff_grad(
        |w| {
            params
                .with_flat(w)
                .and_then(|p| example_loss(&p, x, loss, label))
                .unwrap_or(f64::NAN)
        },
        &params.flatten(),
        h,
    )?;
    let diff: f64 = exact.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = vector::norm(&exact).max(vector::norm(&numeric)).max(1e-12);
    Ok(diff / scale)
}

/// Smallest `|z|` over all pre-activations of a forward pass (used to keep ReLU
/// gradient checks away from the kink).
pub fn min_abs_preactivation(params: &NetworkParams, x: &[f64]) -> Result<f64> {
    let (_, trace) = forward(params, x)?;
    Ok(trace.pre.iter().flatten().fold(f64::INFINITY, |m, z| m.min(z.abs())))
}

/// Labelled inputs with `‖x_i‖ ≤ 1` and `|y_i| ≤ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        Self::validate_inputs(&inputs, labels.len())?;
        if let Some((i, y)) = labels.iter().enumerate().find(|(_, y)| !(y.abs() <= 1.0)) {
            return Err(Error::InvalidParameter(format!("label {i} = {y} outside [-1, 1]")));
        }
        Ok(Dataset { inputs, labels })
    }

    /// Like [`Dataset::new`] but clips labels into `[-1, 1]`, logging a warning when it does.
    pub fn with_clipped_labels(inputs: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        Self::validate_inputs(&inputs, labels.len())?;
        if labels.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("label".into()));
        }
        let clipped = labels.iter().filter(|y| y.abs() > 1.0).count();
        if clipped > 0 {
            log::warn!("clipped {clipped} labels into [-1, 1]");
        }
        let labels = labels.into_iter().map(|y| y.clamp(-1.0, 1.0)).collect();
        Ok(Dataset { inputs, labels })
    }

    fn validate_inputs(inputs: &[Vec<f64>], n_labels: usize) -> Result<()> {
        if inputs.len() != n_labels {
            return Err(Error::Shape(format!("{} inputs but {} labels", inputs.len(), n_labels)));
        }
        let d = inputs.first().map_or(0, Vec::len);
        if d == 0 && !inputs.is_empty() {
            return Err(Error::InvalidDimension("zero-dimensional inputs".into()));
        }
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != d {
                return Err(Error::Shape(format!("input {i} has dimension {} instead of {d}", x.len())));
            }
            if !vector::all_finite(x) {
                return Err(Error::NonFinite(format!("input {i}")));
            }
            let n = vector::norm(x);
            if n > 1.0 + 1e-12 {
                return Err(Error::InvalidParameter(format!("input {i} has norm {n} > 1")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Subset by index, in the given order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}
