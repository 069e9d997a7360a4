use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{bce_terms, sigmoid, Scorer};
use crate::data::TabularDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    /// Adam with β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    /// Multiplier of the fairness penalty, if one is given to [`train`].
    pub penalty_weight: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 80,
            batch_size: 64,
            optimizer: Optimizer::Adam,
            penalty_weight: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if !(self.penalty_weight.is_finite() && self.penalty_weight >= 0.0) {
            return Err(Error::Config(format!(
                "penalty_weight must be nonnegative, got {}",
                self.penalty_weight
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyOutput {
    pub value: f64,
    /// Derivative of `value` with respect to each batch score.
    pub gradient: Vec<f64>,
}

/// Differentiable penalty on a minibatch of soft scores.
pub trait Penalty: Sync {
    /// `rows` index the training dataset; `scores[k]` is the score of `rows[k]`.
    fn evaluate(&self, rows: &[usize], scores: &[f64]) -> PenaltyOutput;
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Minibatch training of mean weighted BCE plus `penalty_weight × penalty`.
/// Returns the parameters after the final epoch.
pub fn train(
    scorer: &Scorer,
    dataset: &TabularDataset,
    config: &TrainConfig,
    penalty: Option<&dyn Penalty>,
) -> Result<Scorer> {
    config.validate()?;
    if dataset.n_features() != scorer.input_dim {
        return Err(Error::Shape {
            expected: scorer.input_dim,
            actual: dataset.n_features(),
        });
    }
    let penalty = penalty.filter(|_| config.penalty_weight > 0.0);
    let features = dataset.features();
    let labels = dataset.labels_f64();
    let weights = dataset.weights();

    let mut model = scorer.clone();
    let mut params = model.parameters();
    let mut grad = vec![0.0; params.len()];
    let mut adam = AdamState {
        m: vec![0.0; params.len()],
        v: vec![0.0; params.len()],
        t: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for (batch, rows) in order.chunks(config.batch_size).enumerate() {
            let cache = model.forward_cached(features, rows);
            let logits = cache.logits();
            let b = rows.len() as f64;
            let mut loss = 0.0;
            let mut dlogit = Vec::with_capacity(rows.len());
            for (k, &i) in rows.iter().enumerate() {
                let (l, dz) = bce_terms(logits[k], labels[i]);
                loss += weights[i] * l / b;
                dlogit.push(weights[i] * dz / b);
            }
            if let Some(p) = penalty {
                let scores: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
                let out = p.evaluate(rows, &scores);
                loss += config.penalty_weight * out.value;
                for (k, s) in scores.iter().enumerate() {
                    dlogit[k] += config.penalty_weight * out.gradient[k] * s * (1.0 - s);
                }
            }
            if !loss.is_finite() || dlogit.iter().any(|d| !d.is_finite()) {
                return Err(Error::Divergence { epoch, batch });
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            model.backward(features, rows, &cache, &dlogit, &mut grad);
            step(config, &mut params, &grad, &mut adam);
            model.set_parameters(&params)?;
        }
    }
    Ok(model)
}

fn step(config: &TrainConfig, params: &mut [f64], grad: &[f64], adam: &mut AdamState) {
    let lr = config.learning_rate;
    match config.optimizer {
        Optimizer::Sgd => {
            for (p, g) in params.iter_mut().zip(grad) {
                *p -= lr * g;
            }
        }
        Optimizer::Adam => {
            adam.t += 1;
            let c1 = 1.0 - ADAM_BETA1.powi(adam.t);
            let c2 = 1.0 - ADAM_BETA2.powi(adam.t);
            for j in 0..params.len() {
                let g = grad[j];
                adam.m[j] = ADAM_BETA1 * adam.m[j] + (1.0 - ADAM_BETA1) * g;
                adam.v[j] = ADAM_BETA2 * adam.v[j] + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = adam.m[j] / c1;
                let v_hat = adam.v[j] / c2;
                params[j] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
    }
}
