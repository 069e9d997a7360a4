//! Inprocessing methods: differentiable fairness penalties for the trainer
//! and the exponentiated-gradient reduction.

use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};

use crate::data::{SensitiveEncoding, TabularDataset};
use crate::error::{Error, Result};
use crate::metrics::{accumulate, harden, FairnessNotion, DENOM_EPS};
use crate::model::{init_scorer, train, Penalty, PenaltyOutput, Scorer, TrainConfig};

fn check_batch(n: usize, labels: usize, encoding: &SensitiveEncoding) -> Result<()> {
    if labels != n {
        return Err(Error::Shape { expected: n, actual: labels });
    }
    if encoding.len() != n {
        return Err(Error::Shape {
            expected: n,
            actual: encoding.len(),
        });
    }
    Ok(())
}

/// Core of the relative-gap penalty. `rows` map batch positions into
/// `labels`/`weights`/`encoding`; `None` means the identity.
/// Returns `None` when the mean statistic is below the guard.
fn fairret_norm_rows(
    notion: FairnessNotion,
    scores: &[f64],
    labels: &[f64],
    weights: Option<&[f64]>,
    encoding: &SensitiveEncoding,
    rows: Option<&[usize]>,
) -> Option<PenaltyOutput> {
    let s = accumulate(notion, scores, labels, weights, encoding, rows);
    if s.den_all <= DENOM_EPS {
        return None;
    }
    let mean = s.num_all / s.den_all;
    if mean.abs() <= DENOM_EPS {
        return None;
    }
    let g = encoding.n_groups();
    let mut value = 0.0;
    let mut sign = vec![0.0; g];
    // Σ_q sign_q γ_q / γ̄², the coefficient of ∂γ̄/∂h
    let mut mean_coef = 0.0;
    for q in 0..g {
        if s.den[q] <= DENOM_EPS {
            continue;
        }
        let gamma = s.num[q] / s.den[q];
        let r = gamma / mean - 1.0;
        value += r.abs();
        sign[q] = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        };
        mean_coef += sign[q] * gamma / (mean * mean);
    }
    let mut gradient = Vec::with_capacity(scores.len());
    for k in 0..scores.len() {
        let i = rows.map_or(k, |r| r[k]);
        let w = weights.map_or(1.0, |w| w[i]);
        let t = notion.terms(labels[i]);
        let d_mean = w * (t.b * s.den_all - s.num_all * t.d) / (s.den_all * s.den_all);
        let mut grad = -mean_coef * d_mean;
        for (q, &ind) in encoding.indicators.row(i).iter().enumerate() {
            if ind == 0.0 || sign[q] == 0.0 {
                continue;
            }
            let dq = s.den[q];
            let d_gamma = ind * w * (t.b * dq - s.num[q] * t.d) / (dq * dq);
            grad += sign[q] * d_gamma / mean;
        }
        gradient.push(grad);
    }
    Some(PenaltyOutput { value, gradient })
}

/// Σ_q |γ(q)/γ̄ − 1| over groups with a defined statistic, computed on soft
/// scores, with its exact gradient. Returns a zero penalty when γ̄ vanishes.
pub fn fairret_norm_penalty(
    scores: &[f64],
    labels: &[u8],
    weights: Option<&[f64]>,
    encoding: &SensitiveEncoding,
    notion: FairnessNotion,
) -> Result<PenaltyOutput> {
    check_batch(scores.len(), labels.len(), encoding)?;
    let labels: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
    Ok(
        fairret_norm_rows(notion, scores, &labels, weights, encoding, None).unwrap_or_else(|| PenaltyOutput {
            value: 0.0,
            gradient: vec![0.0; scores.len()],
        }),
    )
}

#[inline]
fn xlogy_ratio(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

#[inline]
fn clamped_logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

fn prejudice_remover_rows(
    scores: &[f64],
    groups: &[usize],
    n_groups: usize,
    weights: Option<&[f64]>,
    rows: Option<&[usize]>,
) -> PenaltyOutput {
    let mut wsum = vec![0.0; n_groups];
    let mut ssum = vec![0.0; n_groups];
    for (k, &s) in scores.iter().enumerate() {
        let i = rows.map_or(k, |r| r[k]);
        let w = weights.map_or(1.0, |w| w[i]);
        wsum[groups[i]] += w;
        ssum[groups[i]] += w * s;
    }
    let total: f64 = wsum.iter().sum();
    if total <= 0.0 {
        return PenaltyOutput {
            value: 0.0,
            gradient: vec![0.0; scores.len()],
        };
    }
    let p_bar = ssum.iter().sum::<f64>() / total;
    let mut value = 0.0;
    let mut dlogit = vec![0.0; n_groups];
    for q in 0..n_groups {
        if wsum[q] <= 0.0 {
            continue;
        }
        let p = ssum[q] / wsum[q];
        let frac = wsum[q] / total;
        value += frac * (xlogy_ratio(p, p_bar) + xlogy_ratio(1.0 - p, 1.0 - p_bar));
        dlogit[q] = clamped_logit(p) - clamped_logit(p_bar);
    }
    // ∂V/∂p̄ vanishes, so ∂V/∂sᵢ = (wᵢ/W)(logit p_q − logit p̄).
    let gradient = (0..scores.len())
        .map(|k| {
            let i = rows.map_or(k, |r| r[k]);
            let w = weights.map_or(1.0, |w| w[i]);
            w / total * dlogit[groups[i]]
        })
        .collect();
    PenaltyOutput { value, gradient }
}

/// Plug-in mutual information between the soft prediction and the group.
pub fn prejudice_remover_penalty(
    scores: &[f64],
    weights: Option<&[f64]>,
    encoding: &SensitiveEncoding,
) -> Result<PenaltyOutput> {
    check_batch(scores.len(), scores.len(), encoding)?;
    if scores.is_empty() {
        return Err(Error::EmptyData("prejudice remover on an empty batch".into()));
    }
    let groups = partition("prejudice_remover", encoding)?;
    Ok(prejudice_remover_rows(scores, &groups, encoding.n_groups(), weights, None))
}

fn partition(method: &str, encoding: &SensitiveEncoding) -> Result<Vec<usize>> {
    if !encoding.is_partition() {
        return Err(Error::UnsupportedFormat {
            method: method.into(),
            format: encoding.format.to_string(),
        });
    }
    encoding.group_index()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    FairretNorm,
    PrejudiceRemover,
}

/// A penalty bound to a training set, evaluated on minibatch rows.
pub struct BoundPenalty {
    kind: PenaltyKind,
    notion: FairnessNotion,
    labels: Vec<f64>,
    weights: Vec<f64>,
    encoding: SensitiveEncoding,
    groups: Vec<usize>,
    skipped: AtomicUsize,
}

impl BoundPenalty {
    pub fn new(
        kind: PenaltyKind,
        notion: FairnessNotion,
        train: &TabularDataset,
        encoding: &SensitiveEncoding,
    ) -> Result<BoundPenalty> {
        if encoding.len() != train.len() {
            return Err(Error::Shape {
                expected: train.len(),
                actual: encoding.len(),
            });
        }
        let groups = match kind {
            PenaltyKind::PrejudiceRemover => partition("prejudice_remover", encoding)?,
            PenaltyKind::FairretNorm => Vec::new(),
        };
        Ok(BoundPenalty {
            kind,
            notion,
            labels: train.labels_f64(),
            weights: train.weights().to_vec(),
            encoding: encoding.clone(),
            groups,
            skipped: AtomicUsize::new(0),
        })
    }

    /// Batches on which the penalty was skipped because γ̄ vanished.
    pub fn skipped_batches(&self) -> usize {
        self.skipped.load(Ordering::Relaxed)
    }
}

impl Penalty for BoundPenalty {
    fn evaluate(&self, rows: &[usize], scores: &[f64]) -> PenaltyOutput {
        match self.kind {
            PenaltyKind::FairretNorm => fairret_norm_rows(
                self.notion,
                scores,
                &self.labels,
                Some(&self.weights),
                &self.encoding,
                Some(rows),
            )
            .unwrap_or_else(|| {
                self.skipped.fetch_add(1, Ordering::Relaxed);
                PenaltyOutput {
                    value: 0.0,
                    gradient: vec![0.0; scores.len()],
                }
            }),
            PenaltyKind::PrejudiceRemover => prejudice_remover_rows(
                scores,
                &self.groups,
                self.encoding.n_groups(),
                Some(&self.weights),
                Some(rows),
            ),
        }
    }
}

/// Exponentiated-gradient reduction settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgConfig {
    /// One of dem_par, eq_opp, pred_eq, acc_eq.
    pub notion: FairnessNotion,
    /// Allowed absolute gap |γ(q) − γ̄|.
    pub slack: f64,
    pub iterations: usize,
    pub multiplier_bound: f64,
    pub eta: f64,
    pub initial_multiplier: f64,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for EgConfig {
    fn default() -> Self {
        EgConfig {
            notion: FairnessNotion::DemPar,
            slack: 0.02,
            iterations: 20,
            multiplier_bound: 100.0,
            eta: 2.0,
            initial_multiplier: 1.0,
            hidden: Vec::new(),
            train: TrainConfig::default(),
        }
    }
}

impl EgConfig {
    fn validate(&self) -> Result<()> {
        if !self.notion.has_fixed_denominator() {
            return Err(Error::Config(format!(
                "exponentiated gradient supports dem_par, eq_opp, pred_eq and acc_eq, not `{}`",
                self.notion
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("exponentiated gradient needs at least one iteration".into()));
        }
        if !(self.multiplier_bound > 0.0 && self.eta > 0.0 && self.slack >= 0.0 && self.initial_multiplier >= 0.0) {
            return Err(Error::Config(
                "multiplier bound and rate must be positive, slack and initial multiplier nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Per-iteration record of the reduction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EgTrace {
    /// Multipliers (λ⁺_q then λ⁻_q for each group) after each update.
    pub multipliers: Vec<Vec<f64>>,
    /// max_q |γ(q) − γ̄| of each iterate's hard predictions.
    pub iterate_gaps: Vec<f64>,
    /// Same quantity for the final averaged ensemble on the training set.
    pub ensemble_gap: f64,
    /// Whether `ensemble_gap ≤ slack`.
    pub satisfied: bool,
}

/// Uniform mixture of the iterates' hard classifiers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgEnsemble {
    pub members: Vec<Scorer>,
    pub trace: EgTrace,
}

impl EgEnsemble {
    /// Fraction of members predicting 1; lies in {0, 1/T, …, 1}.
    pub fn predict_scores(&self, features: &crate::data::Matrix) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; features.rows()];
        for m in &self.members {
            for (a, h) in acc.iter_mut().zip(harden(&m.forward(features)?)) {
                *a += h;
            }
        }
        let t = self.members.len() as f64;
        Ok(acc.into_iter().map(|a| a / t).collect())
    }

    pub fn predict_hard(&self, features: &crate::data::Matrix) -> Result<Vec<f64>> {
        Ok(harden(&self.predict_scores(features)?))
    }
}

/// Largest absolute gap max_q |γ(q) − γ̄| over groups with positive denominator.
pub fn absolute_gap(
    notion: FairnessNotion,
    predictions: &[f64],
    labels: &[u8],
    weights: Option<&[f64]>,
    encoding: &SensitiveEncoding,
) -> Result<f64> {
    let labels: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
    let s = accumulate(notion, predictions, &labels, weights, encoding, None);
    if s.den_all <= DENOM_EPS {
        return Err(Error::UndefinedStatistic {
            notion: notion.to_string(),
        });
    }
    let mean = s.num_all / s.den_all;
    Ok((0..encoding.n_groups())
        .filter(|&q| s.den[q] > DENOM_EPS)
        .map(|q| (s.num[q] / s.den[q] - mean).abs())
        .fold(0.0, f64::max))
}

/// Constrained classification by repeated weighted retraining with
/// multiplicatively updated multipliers on the constraints
/// `γ(q) − γ̄ ≤ ε` and `γ̄ − γ(q) ≤ ε`.
pub fn exponentiated_gradient(
    train_data: &TabularDataset,
    encoding: &SensitiveEncoding,
    config: &EgConfig,
) -> Result<EgEnsemble> {
    config.validate()?;
    let groups = partition("exponentiated_gradient", encoding)?;
    let n = train_data.len();
    let g = encoding.n_groups();
    let labels = train_data.labels();
    let weights = train_data.weights();
    let notion = config.notion;

    let mut den = vec![0.0; g];
    let mut den_all = 0.0;
    for i in 0..n {
        let t = notion.terms(f64::from(labels[i]));
        den[groups[i]] += weights[i] * t.c;
        den_all += weights[i] * t.c;
    }
    if den_all <= DENOM_EPS {
        return Err(Error::UndefinedStatistic {
            notion: notion.to_string(),
        });
    }
    if let Some(q) = (0..g).find(|&q| den[q] <= DENOM_EPS) {
        return Err(Error::UndefinedStatistic {
            notion: format!("{notion} (group `{}`)", encoding.group_names[q]),
        });
    }
    let total_w: f64 = weights.iter().sum();

    // λ⁺ at [0, g), λ⁻ at [g, 2g)
    let mut lambda = vec![config.initial_multiplier; 2 * g];
    let mut members = Vec::with_capacity(config.iterations);
    let mut trace = EgTrace::default();
    let mut mixture = vec![0.0; n];

    for _ in 0..config.iterations {
        // cost(1) − cost(0) for every sample
        let mut new_labels = Vec::with_capacity(n);
        let mut costs = Vec::with_capacity(n);
        for i in 0..n {
            let y = f64::from(labels[i]);
            let t = notion.terms(y);
            let q = groups[i];
            let net = lambda[q] - lambda[g + q];
            let delta = weights[i] * (1.0 - 2.0 * y) / total_w
                + net * weights[i] * t.b * (1.0 / den[q] - 1.0 / den_all);
            new_labels.push(u8::from(delta < 0.0));
            costs.push(delta.abs());
        }
        let mean_cost = costs.iter().sum::<f64>() / n as f64;
        let sample_weights: Vec<f64> = if mean_cost > 0.0 {
            costs.iter().map(|c| (c / mean_cost).max(1e-9)).collect()
        } else {
            vec![1.0; n]
        };
        let reweighted = train_data.with_labels(new_labels)?.with_weights(sample_weights)?;
        let init = init_scorer(train_data.n_features(), &config.hidden, config.train.seed)?;
        let cfg = TrainConfig {
            penalty_weight: 0.0,
            ..config.train.clone()
        };
        let member = train(&init, &reweighted, &cfg, None)?;
        let hard = harden(&member.forward(train_data.features())?);

        let ylab: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
        let s = accumulate(notion, &hard, &ylab, Some(weights), encoding, None);
        let mean = s.num_all / s.den_all;
        let mut worst: f64 = 0.0;
        for q in 0..g {
            let diff = s.num[q] / s.den[q] - mean;
            worst = worst.max(diff.abs());
            lambda[q] *= (config.eta * (diff - config.slack)).exp();
            lambda[g + q] *= (config.eta * (-diff - config.slack)).exp();
        }
        let sum: f64 = lambda.iter().sum();
        if sum > config.multiplier_bound {
            let scale = config.multiplier_bound / sum;
            lambda.iter_mut().for_each(|l| *l *= scale);
        }
        for (m, h) in mixture.iter_mut().zip(&hard) {
            *m += h;
        }
        trace.multipliers.push(lambda.clone());
        trace.iterate_gaps.push(worst);
        members.push(member);
    }
    let t = members.len() as f64;
    mixture.iter_mut().for_each(|m| *m /= t);
    trace.ensemble_gap = absolute_gap(notion, &mixture, labels, Some(weights), encoding)?;
    trace.satisfied = trace.ensemble_gap <= config.slack;
    Ok(EgEnsemble { members, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn groups2(groups: &[usize]) -> SensitiveEncoding {
        SensitiveEncoding::from_groups(groups, vec!["A".into(), "B".into()]).unwrap()
    }

    #[test]
    fn fairret_zero_at_parity() {
        let enc = groups2(&[0, 0, 1, 1]);
        let out = fairret_norm_penalty(&[0.2, 0.8, 0.8, 0.2], &[0, 1, 0, 1], None, &enc, FairnessNotion::DemPar).unwrap();
        assert!(out.value.abs() < 1e-15);
    }

    #[test]
    fn fairret_hand_example() {
        let enc = groups2(&[0, 1]);
        let out = fairret_norm_penalty(&[1.0, 0.0], &[0, 0], None, &enc, FairnessNotion::DemPar).unwrap();
        assert!((out.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fairret_guard_skips() {
        let enc = groups2(&[0, 1]);
        let out = fairret_norm_penalty(&[0.0, 0.0], &[0, 0], None, &enc, FairnessNotion::DemPar).unwrap();
        assert_eq!(out.value, 0.0);
        assert_eq!(out.gradient, vec![0.0, 0.0]);
    }

    #[test]
    fn fairret_invariant_to_duplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10;
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
        let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let groups: Vec<usize> = (0..n).map(|i| (i / 3) % 2).collect();
        let enc = groups2(&groups);
        for notion in FairnessNotion::ALL {
            let a = fairret_norm_penalty(&scores, &labels, None, &enc, notion).unwrap();
            let b = fairret_norm_penalty(&scores, &labels, Some(&vec![2.0; n]), &enc, notion).unwrap();
            assert!((a.value - b.value).abs() < 1e-12);
        }
    }

    #[test]
    fn prejudice_remover_values() {
        let enc = groups2(&[0, 0, 1, 1]);
        let same = prejudice_remover_penalty(&[0.3, 0.5, 0.5, 0.3], None, &enc).unwrap();
        assert!(same.value.abs() < 1e-15);
        let split = prejudice_remover_penalty(&[1.0, 1.0, 0.0, 0.0], None, &enc).unwrap();
        assert!((split.value - std::f64::consts::LN_2).abs() < 1e-12);
    }

    fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize) -> f64 {
        let h = 1e-5;
        let mut p = x.to_vec();
        p[k] += h;
        let mut m = x.to_vec();
        m[k] -= h;
        (f(&p) - f(&m)) / (2.0 * h)
    }

    #[test]
    fn penalty_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.random_range(4..16);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let groups: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { rng.random_range(0..2) }).collect();
            let enc = groups2(&groups);
            let pr = prejudice_remover_penalty(&scores, Some(&weights), &enc).unwrap();
            for k in 0..n {
                let fd = finite_difference(
                    |s| prejudice_remover_penalty(s, Some(&weights), &enc).unwrap().value,
                    &scores,
                    k,
                );
                let denom = fd.abs().max(pr.gradient[k].abs()).max(1e-8);
                assert!((fd - pr.gradient[k]).abs() / denom < 1e-4);
            }
            for notion in FairnessNotion::ALL {
                let out = fairret_norm_penalty(&scores, &labels, Some(&weights), &enc, notion).unwrap();
                for k in 0..n {
                    let fd = finite_difference(
                        |s| fairret_norm_penalty(s, &labels, Some(&weights), &enc, notion).unwrap().value,
                        &scores,
                        k,
                    );
                    let denom = fd.abs().max(out.gradient[k].abs()).max(1e-8);
                    assert!((fd - out.gradient[k]).abs() / denom < 1e-4, "{notion} sample {k}");
                }
            }
        }
    }

    #[test]
    fn bound_penalty_matches_free_function() {
        let ds = crate::data::generate_dual_label(&crate::data::DualLabelConfig {
            n_samples: 40,
            ..Default::default()
        })
        .unwrap();
        let enc = crate::data::encode_sensitive(&ds, crate::data::SensitiveFormat::Binary, 0).unwrap();
        let rows: Vec<usize> = (5..25).collect();
        let scores: Vec<f64> = rows.iter().map(|&i| 0.1 + 0.8 * (i as f64 / 40.0)).collect();
        let bound = BoundPenalty::new(PenaltyKind::FairretNorm, FairnessNotion::EqOpp, &ds, &enc).unwrap();
        let a = bound.evaluate(&rows, &scores);
        let sub = ds.select_rows(&rows);
        let b = fairret_norm_penalty(&scores, sub.labels(), Some(sub.weights()), &enc.select_rows(&rows), FairnessNotion::EqOpp)
            .unwrap();
        assert!((a.value - b.value).abs() < 1e-12);
        for (x, y) in a.gradient.iter().zip(&b.gradient) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn eg_rejects_unsupported_notion() {
        let ds = crate::data::generate_dual_label(&crate::data::DualLabelConfig {
            n_samples: 40,
            ..Default::default()
        })
        .unwrap();
        let enc = crate::data::encode_sensitive(&ds, crate::data::SensitiveFormat::Binary, 0).unwrap();
        let cfg = EgConfig {
            notion: FairnessNotion::PredPar,
            ..Default::default()
        };
        assert!(matches!(exponentiated_gradient(&ds, &enc, &cfg), Err(Error::Config(_))));
    }
}
