//! Initialization schemes and the small-weights (operator norm ≤ 1) regime.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{Activation, NetworkParams};
use crate::numkit::{operator_norm, sample_gaussian_matrix, sample_orthogonal, Matrix, RngStream};
use crate::{Error, Result};

/// Relative tolerance used for the operator norms computed here.
const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitScheme {
    /// First layer `N(0, 1/d)`, layer `p ≥ 1` `N(0, 1/(κ · fan_in))`.
    Strategy1 { kappa: f64 },
    /// `N(0, 2/(fan_in + fan_out))`
    GlorotNormal,
    /// `N(0, 1/fan_in)`
    LeCunNormal,
    /// `N(0, 2/fan_in)`
    MsraNormal,
    /// Haar semi-orthogonal layers and output rescale `γ = 1/√(2β)`, with β the
    /// number of weight matrices.
    OrthogonalRescaled,
}

impl InitScheme {
    pub fn name(&self) -> &'static str {
        match self {
            InitScheme::Strategy1 { .. } => "strategy1",
            InitScheme::GlorotNormal => "glorot",
            InitScheme::LeCunNormal => "lecun",
            InitScheme::MsraNormal => "msra",
            InitScheme::OrthogonalRescaled => "orthogonal",
        }
    }

    /// Parses a scheme name; `kappa` is only used by `strategy1`.
    pub fn parse(name: &str, kappa: f64) -> Result<Self> {
        let scheme = match name {
            "strategy1" => InitScheme::Strategy1 { kappa },
            "glorot" => InitScheme::GlorotNormal,
            "lecun" => InitScheme::LeCunNormal,
            "msra" => InitScheme::MsraNormal,
            "orthogonal" => InitScheme::OrthogonalRescaled,
            other => return Err(Error::InvalidConfig(format!("unknown init scheme `{other}`"))),
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitScheme::Strategy1 { kappa } if !(*kappa > 0.0) || !kappa.is_finite() => {
                Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")))
            }
            _ => Ok(()),
        }
    }

    /// Entry variance of layer `p` with the given shape (`None` for the orthogonal scheme).
    pub fn variance(&self, p: usize, rows: usize, cols: usize) -> Option<f64> {
        let (fan_in, fan_out) = (cols as f64, rows as f64);
        match *self {
            InitScheme::Strategy1 { kappa } => Some(if p == 0 { 1.0 / fan_in } else { 1.0 / (kappa * fan_in) }),
            InitScheme::GlorotNormal => Some(2.0 / (fan_in + fan_out)),
            InitScheme::LeCunNormal => Some(1.0 / fan_in),
            InitScheme::MsraNormal => Some(2.0 / fan_in),
            InitScheme::OrthogonalRescaled => None,
        }
    }
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitScheme::Strategy1 { kappa } => write!(f, "strategy1(kappa={kappa})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for InitScheme {
    type Err = Error;

    /// Accepts `glorot`, `lecun`, `msra`, `orthogonal`, `strategy1` (κ = 1) or `strategy1:<κ>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("strategy1", k)) => {
                let kappa = k
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("bad kappa `{k}`")))?;
                InitScheme::parse("strategy1", kappa)
            }
            Some(_) => Err(Error::InvalidConfig(format!("unknown init scheme `{s}`"))),
            None => InitScheme::parse(s, 1.0),
        }
    }
}

/// Layer dimension chain and activation setup of a network to be initialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// `[d, ℓ_1, …, ℓ_β, 1]`
    pub dims: Vec<usize>,
    pub activation: Activation,
    pub final_activation: bool,
    /// Output rescale γ; overridden by [`InitScheme::OrthogonalRescaled`].
    pub output_scale: f64,
    pub biases: bool,
}

impl Architecture {
    /// Nonlinear net `d → ℓ (β times) → 1`, i.e. β + 1 weight matrices, top activation on.
    pub fn mlp(d: usize, width: usize, depth: usize, activation: Activation) -> Self {
        let mut dims = vec![d];
        dims.extend(std::iter::repeat_n(width, depth));
        dims.push(1);
        Architecture { dims, activation, final_activation: true, output_scale: 1.0, biases: false }
    }

    /// Linear net `γ W_β ⋯ W_1 x` with β square `d × d` factors (the top one is `1 × d`)
    /// and `γ = 1/√(2β)`.
    pub fn deep_linear(d: usize, beta: usize) -> Self {
        let mut dims = vec![d; beta.max(1)];
        dims.push(1);
        Architecture {
            dims,
            activation: Activation::Identity,
            final_activation: false,
            output_scale: orthogonal_scale(beta.max(1)),
            biases: false,
        }
    }

    /// Single-layer linear model `g(x) = ⟨w, x⟩`.
    pub fn linear(d: usize) -> Self {
        Architecture {
            dims: vec![d, 1],
            activation: Activation::Identity,
            final_activation: false,
            output_scale: 1.0,
            biases: false,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.dims.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 {
            return Err(Error::Shape(format!("dimension chain {:?} needs at least two entries", self.dims)));
        }
        if self.dims.contains(&0) {
            return Err(Error::Shape(format!("dimension chain {:?} contains a zero", self.dims)));
        }
        if self.dims.last() != Some(&1) {
            return Err(Error::Shape(format!("dimension chain {:?} must end in 1", self.dims)));
        }
        Ok(())
    }
}

/// `γ = 1/√(2β)`.
pub fn orthogonal_scale(beta: usize) -> f64 {
    1.0 / (2.0 * beta as f64).sqrt()
}

/// Draws a network for `arch` using `scheme`.
pub fn initialize(scheme: &InitScheme, arch: &Architecture, rng: &mut RngStream) -> Result<NetworkParams> {
    scheme.validate()?;
    arch.validate()?;
    let mut weights = Vec::with_capacity(arch.num_layers());
    for (p, pair) in arch.dims.windows(2).enumerate() {
        let (cols, rows) = (pair[0], pair[1]);
        let w = match scheme.variance(p, rows, cols) {
            Some(var) => sample_gaussian_matrix(rng, rows, cols, var)?,
            None => sample_orthogonal(rng, rows, cols)?,
        };
        weights.push(w);
    }
    let gamma = match scheme {
        InitScheme::OrthogonalRescaled => orthogonal_scale(weights.len()),
        _ => arch.output_scale,
    };
    let params = NetworkParams::new(weights, arch.activation, arch.final_activation, gamma)?;
    Ok(if arch.biases { params.with_zero_biases() } else { params })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallWeightsReport {
    /// `‖W_p‖` per layer.
    pub norms: Vec<f64>,
    pub max_norm: f64,
    pub pass: bool,
    /// Layers whose norm exceeds `1 + tol`.
    pub offending: Vec<usize>,
}

fn layer_norm(w: &Matrix) -> Result<f64> {
    match operator_norm(w, NORM_TOL) {
        Ok(n) => Ok(n),
        Err(Error::IterationLimit { last_estimate, .. }) => {
            log::warn!("operator norm budget exhausted; using last estimate {last_estimate}");
            Ok(last_estimate)
        }
        Err(e) => Err(e),
    }
}

/// Checks `max_p ‖W_p‖ ≤ 1 + tol`.
pub fn check_small_weights(params: &NetworkParams, tol: f64) -> Result<SmallWeightsReport> {
    let norms = params.weights().iter().map(layer_norm).collect::<Result<Vec<_>>>()?;
    let offending: Vec<usize> = norms.iter().enumerate().filter(|(_, n)| **n > 1.0 + tol).map(|(p, _)| p).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    Ok(SmallWeightsReport { norms, max_norm, pass: offending.is_empty(), offending })
}

/// Rescales every layer with `‖W_p‖ > 1` to unit operator norm; other layers are untouched.
pub fn project_small_weights(params: &NetworkParams) -> Result<NetworkParams> {
    let mut out = params.clone();
    for w in out.weights_mut() {
        let n = layer_norm(w)?;
        if n > 1.0 {
            w.scale_in_place(1.0 / n);
        }
    }
    Ok(out)
}
