//! Approximate empirical-risk minimization over the weight-decay ball by
//! projected (mini-batch) subgradient descent with best-iterate tracking.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::losses::LossFunction;
use crate::network::{Architecture, ForwardCache, Matrix, NetworkParams};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchSize {
    #[default]
    Full,
    Mini(usize),
}

impl Serialize for BatchSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BatchSize::Full => s.serialize_str("full"),
            BatchSize::Mini(m) => s.serialize_u64(*m as u64),
        }
    }
}

impl<'de> Deserialize<'de> for BatchSize {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Size(usize),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Size(0) => Err(serde::de::Error::custom("batch size must be positive")),
            Raw::Size(m) => Ok(BatchSize::Mini(m)),
            Raw::Word(w) if w == "full" => Ok(BatchSize::Full),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("unknown batch size `{w}`"))),
        }
    }
}

fn default_step_size() -> f64 {
    0.05
}

fn default_iterations() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub batch_size: BatchSize,
    /// Half-width of the uniform initialization; `None` means
    /// `ball_radius / sqrt(width)`.
    #[serde(default)]
    pub init_scale: Option<f64>,
    /// Extra runs from fresh initializations; `restarts = 0` is a single run.
    #[serde(default)]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            step_size: default_step_size(),
            iterations: default_iterations(),
            batch_size: BatchSize::Full,
            init_scale: None,
            restarts: 0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidInput(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidInput("iterations must be at least 1".into()));
        }
        if let BatchSize::Mini(0) = self.batch_size {
            return Err(Error::InvalidInput("batch size must be positive".into()));
        }
        if let Some(s) = self.init_scale {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidInput(format!("init scale must be nonnegative, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub params: NetworkParams,
    pub best_empirical_risk: f64,
    /// Full-data empirical risk of every recorded iterate. Entry 0 is the
    /// all-zero network, then each run contributes its initialization and
    /// every post-step iterate.
    pub risk_trace: Vec<f64>,
}

/// A trained network as stored on disk, with the loss and settings that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub loss: LossFunction,
    pub empirical_risk: f64,
    pub train: TrainConfig,
    pub network: NetworkParams,
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `(1/n) Σ h(y_i - f_Θ(x_i))`.
pub fn empirical_risk(params: &NetworkParams, data: &Dataset, loss: &LossFunction) -> Result<f64> {
    data.ensure_nonempty()?;
    check_dims(params, data)?;
    let mut cache = ForwardCache::default();
    let total: f64 = data.rows().map(|(x, y)| loss.value(y - params.forward_cached(x, &mut cache))).sum();
    Ok(total / data.len() as f64)
}

fn check_dims(params: &NetworkParams, data: &Dataset) -> Result<()> {
    if params.input_dim() != data.dim() {
        return Err(Error::Shape(format!(
            "network takes {} inputs but the data has {} columns",
            params.input_dim(),
            data.dim()
        )));
    }
    Ok(())
}

/// Subgradient of the empirical risk over the rows in `batch`; returns the
/// batch risk as well.
pub(crate) fn risk_subgradient(
    params: &NetworkParams,
    data: &Dataset,
    loss: &LossFunction,
    batch: &[usize],
    cache: &mut ForwardCache,
    grads: &mut [Matrix],
) -> f64 {
    for g in grads.iter_mut() {
        g.data_mut().iter_mut().for_each(|v| *v = 0.0);
    }
    let inv = 1.0 / batch.len() as f64;
    let mut risk = 0.0;
    for &i in batch {
        let residual = data.y(i) - params.forward_cached(data.x(i), cache);
        risk += loss.value(residual);
        // d/dΘ h(y - f) = -h'(y - f) ∂f/∂Θ
        let upstream = -loss.derivative(residual) * inv;
        if upstream != 0.0 {
            params.backward_accumulate(cache, upstream, grads);
        }
    }
    risk * inv
}

/// Projected subgradient descent on the empirical risk over
/// `{Θ : max_j ‖Θ^j‖_F ≤ ball_radius}`.
///
/// Each of the `1 + restarts` runs draws its initialization from stream
/// `(seed, run)`. The returned parameters are the earliest iterate attaining
/// the smallest full-data empirical risk, with the all-zero network as the
/// baseline candidate.
pub fn train_erm(
    data: &Dataset,
    loss: &LossFunction,
    arch: &Architecture,
    ball_radius: f64,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    data.ensure_nonempty()?;
    let zero = NetworkParams::zeros(arch.clone(), ball_radius)?;
    check_dims(&zero, data)?;

    let mut best = zero.clone();
    let mut best_risk = empirical_risk(&zero, data, loss)?;
    if !best_risk.is_finite() {
        return Err(Error::Diverged { restart: 0, iteration: 0 });
    }
    let mut trace = vec![best_risk];
    let init_scale = cfg.init_scale.unwrap_or_else(|| ball_radius / (arch.width() as f64).sqrt());

    let n = data.len();
    let batch_len = match cfg.batch_size {
        BatchSize::Full => n,
        BatchSize::Mini(m) => m.min(n),
    };
    let mut order: Vec<usize> = (0..n).collect();
    let mut cache = ForwardCache::default();
    let mut grads = zero.zero_like();

    for run in 0..=cfg.restarts {
        let mut r = rng::stream(cfg.seed, run as u64);
        let mut params = NetworkParams::random_uniform(arch.clone(), ball_radius, init_scale, &mut r)?;
        let mut cursor = n;
        for iteration in 0..=cfg.iterations {
            let risk = if batch_len == n {
                // the full-batch pass yields both the risk and the step direction
                risk_subgradient(&params, data, loss, &order, &mut cache, &mut grads)
            } else {
                empirical_risk(&params, data, loss)?
            };
            if !risk.is_finite() {
                return Err(Error::Diverged { restart: run, iteration });
            }
            trace.push(risk);
            if risk < best_risk {
                best_risk = risk;
                best = params.clone();
            }
            if iteration == cfg.iterations {
                break;
            }
            if batch_len < n {
                if cursor + batch_len > n {
                    order.shuffle(&mut r);
                    cursor = 0;
                }
                let batch = &order[cursor..cursor + batch_len];
                cursor += batch_len;
                risk_subgradient(&params, data, loss, batch, &mut cache, &mut grads);
            }
            params.axpy(-cfg.step_size, &grads);
            params.project_in_place();
        }
        order.sort_unstable();
    }

    Ok(TrainResult { params: best, best_empirical_risk: best_risk, risk_trace: trace })
}
