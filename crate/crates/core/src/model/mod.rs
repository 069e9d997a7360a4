//! Fully connected scorer `h: X → (0, 1)` and its minibatch trainer.

mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};

pub use train::{train, Optimizer, Penalty, PenaltyOutput, TrainConfig};

/// Scores are kept this far away from 0 and 1.
pub const SCORE_EPS: f64 = 1e-15;

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    #[inline]
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, out_o) in out.iter_mut().enumerate() {
            let w = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            *out_o = self.bias[o] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// Multilayer perceptron with rectifier hidden layers and a logistic output.
/// An empty `layer_sizes` is logistic regression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scorer {
    pub input_dim: usize,
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Dense>,
}

impl Scorer {
    /// Uniform(±1/√fan_in) weights and zero biases, deterministic in `seed`.
    pub fn init(input_dim: usize, layer_sizes: &[usize], seed: u64) -> Result<Scorer> {
        if input_dim == 0 {
            return Err(Error::Config("scorer input dimension must be >= 1".into()));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::Config("hidden layer widths must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(layer_sizes.len() + 1);
        let mut fan_in = input_dim;
        for &width in layer_sizes.iter().chain(std::iter::once(&1)) {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weights = (0..width * fan_in)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            layers.push(Dense {
                inputs: fan_in,
                outputs: width,
                weights,
                bias: vec![0.0; width],
            });
            fan_in = width;
        }
        Ok(Scorer {
            input_dim,
            layer_sizes: layer_sizes.to_vec(),
            layers,
        })
    }

    pub fn logistic(weights: Vec<f64>, bias: f64) -> Scorer {
        let inputs = weights.len();
        Scorer {
            input_dim: inputs,
            layer_sizes: Vec::new(),
            layers: vec![Dense {
                inputs,
                outputs: 1,
                weights,
                bias: vec![bias],
            }],
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    /// Flat parameter vector: per layer, weights then biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::Shape {
                expected: self.parameter_count(),
                actual: params.len(),
            });
        }
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[k..k + nw]);
            k += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[k..k + nb]);
            k += nb;
        }
        Ok(())
    }

    fn max_width(&self) -> usize {
        self.layers.iter().map(|l| l.outputs).max().unwrap_or(1).max(self.input_dim)
    }

    /// Pre-sigmoid output for one row.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let w = self.max_width();
        let mut a = x.to_vec();
        let mut b = vec![0.0; w];
        for (li, layer) in self.layers.iter().enumerate() {
            layer.apply(&a, &mut b[..layer.outputs]);
            if li + 1 < self.layers.len() {
                b[..layer.outputs].iter_mut().for_each(|v| *v = v.max(0.0));
            }
            a.clear();
            a.extend_from_slice(&b[..layer.outputs]);
        }
        a[0]
    }

    pub fn score_row(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x)).clamp(SCORE_EPS, 1.0 - SCORE_EPS)
    }

    pub fn forward(&self, features: &Matrix) -> Result<Vec<f64>> {
        if features.cols() != self.input_dim {
            return Err(Error::Shape {
                expected: self.input_dim,
                actual: features.cols(),
            });
        }
        Ok((0..features.rows()).map(|i| self.score_row(features.row(i))).collect())
    }

    /// Forward pass over `rows`, keeping every layer's activations.
    pub(crate) fn forward_cached(&self, features: &Matrix, rows: &[usize]) -> Activations {
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for (li, layer) in self.layers.iter().enumerate() {
            let mut out = vec![0.0; rows.len() * layer.outputs];
            for (k, &i) in rows.iter().enumerate() {
                let input: &[f64] = if li == 0 {
                    features.row(i)
                } else {
                    let prev = &acts[li - 1];
                    &prev[k * layer.inputs..(k + 1) * layer.inputs]
                };
                let dst = &mut out[k * layer.outputs..(k + 1) * layer.outputs];
                layer.apply(input, dst);
                if li + 1 < self.layers.len() {
                    dst.iter_mut().for_each(|v| *v = v.max(0.0));
                }
            }
            acts.push(out);
        }
        Activations { acts }
    }

    /// Accumulates `∂L/∂θ` given `∂L/∂logit` for every row into `grad`.
    pub(crate) fn backward(
        &self,
        features: &Matrix,
        rows: &[usize],
        cache: &Activations,
        dlogit: &[f64],
        grad: &mut [f64],
    ) {
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |acc, l| {
                let start = *acc;
                *acc += l.n_params();
                Some(start)
            })
            .collect();
        let w = self.max_width();
        let mut delta = vec![0.0; w];
        let mut next = vec![0.0; w];
        for (k, &i) in rows.iter().enumerate() {
            delta[0] = dlogit[k];
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input: &[f64] = if li == 0 {
                    features.row(i)
                } else {
                    &cache.acts[li - 1][k * layer.inputs..(k + 1) * layer.inputs]
                };
                let off = offsets[li];
                let (gw, gb) = grad[off..off + layer.n_params()].split_at_mut(layer.weights.len());
                for o in 0..layer.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
                }
                if li > 0 {
                    let next = &mut next[..layer.inputs];
                    next.iter_mut().for_each(|v| *v = 0.0);
                    for o in 0..layer.outputs {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        let wrow = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        next.iter_mut().zip(wrow).for_each(|(n, w)| *n += d * w);
                    }
                    // rectifier derivative
                    for (n, a) in next.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *n = 0.0;
                        }
                    }
                    delta[..layer.inputs].copy_from_slice(next);
                }
            }
        }
    }

    /// Mean weighted binary cross-entropy `(1/n) Σ wᵢ·bce(yᵢ, h(xᵢ))` over all
    /// rows and its gradient with respect to the flat parameters.
    pub fn bce_loss_and_gradient(
        &self,
        features: &Matrix,
        labels: &[f64],
        weights: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        if features.cols() != self.input_dim {
            return Err(Error::Shape {
                expected: self.input_dim,
                actual: features.cols(),
            });
        }
        let rows: Vec<usize> = (0..features.rows()).collect();
        let cache = self.forward_cached(features, &rows);
        let logits = cache.logits();
        let n = rows.len() as f64;
        let mut loss = 0.0;
        let mut dlogit = Vec::with_capacity(rows.len());
        for (k, &z) in logits.iter().enumerate() {
            loss += weights[k] * (softplus(z) - labels[k] * z);
            dlogit.push(weights[k] * (sigmoid(z) - labels[k]) / n);
        }
        let mut grad = vec![0.0; self.parameter_count()];
        self.backward(features, &rows, &cache, &dlogit, &mut grad);
        Ok((loss / n, grad))
    }
}

pub(crate) struct Activations {
    acts: Vec<Vec<f64>>,
}

impl Activations {
    pub(crate) fn logits(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub(crate) fn bce_terms(logit: f64, label: f64) -> (f64, f64) {
    (softplus(logit) - label * logit, sigmoid(logit) - label)
}

pub fn init_scorer(input_dim: usize, layer_sizes: &[usize], seed: u64) -> Result<Scorer> {
    Scorer::init(input_dim, layer_sizes, seed)
}

pub fn forward(scorer: &Scorer, features: &Matrix) -> Result<Vec<f64>> {
    scorer.forward(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn shapes_and_determinism() {
        let s = init_scorer(3, &[], 1).unwrap();
        assert_eq!(s.parameter_count(), 4);
        assert_eq!(init_scorer(3, &[4], 1).unwrap(), init_scorer(3, &[4], 1).unwrap());
        assert_eq!(init_scorer(3, &[4, 2], 1).unwrap().parameter_count(), 29);
        assert!(init_scorer(0, &[], 1).is_err());
    }

    #[test]
    fn logistic_closed_forms() {
        let zero = Scorer::logistic(vec![0.0, 0.0], 0.0);
        let x = Matrix::from_rows(&[vec![3.0, -7.0]]).unwrap();
        assert_eq!(zero.forward(&x).unwrap(), vec![0.5]);

        let s = Scorer::logistic(vec![1.0], 0.0);
        let xs = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![5.0], vec![50.0], vec![1e6]]).unwrap();
        let out = s.forward(&xs).unwrap();
        assert_eq!(out[0], 0.5);
        assert!(out.windows(2).all(|w| w[1] >= w[0]));
        assert!(out.iter().all(|&v| v > 0.0 && v < 1.0));

        let s = Scorer::logistic(vec![2.0], -1.0);
        let v = s.forward(&Matrix::from_rows(&[vec![1.0]]).unwrap()).unwrap()[0];
        assert!((v - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let s = init_scorer(3, &[2], 0).unwrap();
        assert!(matches!(
            s.forward(&Matrix::zeros(1, 2)),
            Err(Error::Shape { expected: 3, actual: 2 })
        ));
    }

    #[test]
    fn row_scores_independent_of_batch() {
        let s = init_scorer(4, &[5, 3], 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let all = s.forward(&Matrix::from_rows(&rows).unwrap()).unwrap();
        let reversed: Vec<Vec<f64>> = rows.iter().rev().cloned().collect();
        let mut rev = s.forward(&Matrix::from_rows(&reversed).unwrap()).unwrap();
        rev.reverse();
        assert_eq!(all, rev);
    }

    #[test]
    fn bce_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let d = rng.random_range(1..5);
            let n = rng.random_range(1..8);
            let hidden: Vec<usize> = (0..trial % 3).map(|_| rng.random_range(1..5)).collect();
            let mut scorer = init_scorer(d, &hidden, trial as u64).unwrap();
            // random biases keep every rectifier away from its kink
            let random: Vec<f64> = (0..scorer.parameter_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            scorer.set_parameters(&random).unwrap();
            let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
            let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..2u8))).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let (_, grad) = scorer.bce_loss_and_gradient(&x, &y, &w).unwrap();
            let params = scorer.parameters();
            let h = 1e-5;
            for p in 0..params.len() {
                let mut s = scorer.clone();
                let mut plus = params.clone();
                plus[p] += h;
                s.set_parameters(&plus).unwrap();
                let (lp, _) = s.bce_loss_and_gradient(&x, &y, &w).unwrap();
                let mut minus = params.clone();
                minus[p] -= h;
                s.set_parameters(&minus).unwrap();
                let (lm, _) = s.bce_loss_and_gradient(&x, &y, &w).unwrap();
                let fd = (lp - lm) / (2.0 * h);
                let denom = fd.abs().max(grad[p].abs()).max(1e-6);
                assert!(
                    (fd - grad[p]).abs() / denom <= 1e-4,
                    "param {p}: analytic {} vs fd {fd}",
                    grad[p]
                );
            }
        }
    }

    #[test]
    fn serializes_to_json() {
        let s = init_scorer(2, &[3], 4).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: Scorer = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }
}
