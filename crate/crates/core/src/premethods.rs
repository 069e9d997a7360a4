//! Preprocessing methods: transform the training data before the scorer is
//! tuned.
//!
//! All three methods accept binary or intersectional encodings only. Strengths
//! above 1 are clamped to 1.

use std::cmp::Ordering;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{SensitiveEncoding, TabularDataset};
use crate::error::{Error, Result};
use crate::model::{init_scorer, train, Optimizer, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreMethod {
    DataRepairer,
    LabelFlipping,
    PrevalenceSampling,
}

impl fmt::Display for PreMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreMethod::DataRepairer => "data_repairer",
            PreMethod::LabelFlipping => "label_flipping",
            PreMethod::PrevalenceSampling => "prevalence_sampling",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreMethodSpec {
    pub method: PreMethod,
    pub strength: f64,
    pub seed: u64,
}

impl PreMethodSpec {
    pub fn apply(&self, train: &TabularDataset, encoding: &SensitiveEncoding) -> Result<TabularDataset> {
        match self.method {
            PreMethod::DataRepairer => data_repairer(train, encoding, self.strength),
            PreMethod::LabelFlipping => label_flipping(train, encoding, self.strength, self.seed),
            PreMethod::PrevalenceSampling => prevalence_sampling(train, encoding, self.strength, self.seed),
        }
    }
}

/// Clamps a strength into [0, 1], returning a warning when it had to.
pub fn clamp_strength(strength: f64) -> Result<(f64, Option<String>)> {
    if !(strength.is_finite() && strength >= 0.0) {
        return Err(Error::Config(format!("strength must be nonnegative, got {strength}")));
    }
    if strength > 1.0 {
        let msg = format!("strength {strength} clamped to 1");
        log::warn!("{msg}");
        Ok((1.0, Some(msg)))
    } else {
        Ok((strength, None))
    }
}

fn partition(method: &str, encoding: &SensitiveEncoding, n: usize) -> Result<Vec<usize>> {
    if !encoding.is_partition() {
        return Err(Error::UnsupportedFormat {
            method: method.into(),
            format: encoding.format.to_string(),
        });
    }
    if encoding.len() != n {
        return Err(Error::Shape {
            expected: n,
            actual: encoding.len(),
        });
    }
    encoding.group_index()
}

fn members_by_group(groups: &[usize], n_groups: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); n_groups];
    for (i, &q) in groups.iter().enumerate() {
        members[q].push(i);
    }
    members
}

/// Empirical quantile of each value within `values`: sorted position over
/// (m − 1), ties sharing their average position. A single value maps to 0.5.
fn within_group_quantiles(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    if m == 1 {
        return vec![0.5];
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut q = vec![0.0; m];
    let mut k = 0;
    while k < m {
        let mut end = k;
        while end + 1 < m && values[order[end + 1]] == values[order[k]] {
            end += 1;
        }
        let pos = (k + end) as f64 / 2.0 / (m - 1) as f64;
        for &i in &order[k..=end] {
            q[i] = pos;
        }
        k = end + 1;
    }
    q
}

/// Linear-interpolation quantile function of a sorted sample.
fn quantile_sorted(sorted: &[f64], u: f64) -> f64 {
    let pos = u.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Moves each numeric feature value toward the pooled quantile at its
/// within-group rank: `v ↦ (1 − t)·v + t·Q_pooled(rank_q(v))`.
pub fn data_repairer(train: &TabularDataset, encoding: &SensitiveEncoding, strength: f64) -> Result<TabularDataset> {
    let groups = partition("data_repairer", encoding, train.len())?;
    let (t, _) = clamp_strength(strength)?;
    if t == 0.0 {
        return Ok(train.clone());
    }
    let members = members_by_group(&groups, encoding.n_groups());
    let mut features = train.features().clone();
    for j in train.numeric_columns() {
        let column = train.features().column(j);
        let mut pooled = column.clone();
        pooled.sort_by(f64::total_cmp);
        for rows in members.iter().filter(|r| !r.is_empty()) {
            let values: Vec<f64> = rows.iter().map(|&i| column[i]).collect();
            let ranks = within_group_quantiles(&values);
            for (k, &i) in rows.iter().enumerate() {
                let target = quantile_sorted(&pooled, ranks[k]);
                features.set(i, j, (1.0 - t) * column[i] + t * target);
            }
        }
    }
    train.with_features(features)
}

fn naive_margin_scores(train: &TabularDataset, seed: u64) -> Result<Vec<f64>> {
    let scorer = init_scorer(train.n_features().max(1), &[], seed)?;
    if train.n_features() == 0 {
        return Ok(vec![0.5; train.len()]);
    }
    let cfg = TrainConfig {
        learning_rate: 0.05,
        epochs: 20,
        batch_size: 128,
        optimizer: Optimizer::Adam,
        penalty_weight: 0.0,
        seed,
    };
    train_scores(&scorer, train, &cfg)
}

fn train_scores(scorer: &crate::model::Scorer, data: &TabularDataset, cfg: &TrainConfig) -> Result<Vec<f64>> {
    train(scorer, data, cfg, None)?.forward(data.features())
}

/// Number of label flips moving each group's positive count toward
/// `global_rate · |q|`, scaled by `t` and rounded to nearest. Positive entries
/// flip 0 → 1, negative entries 1 → 0.
fn flips_per_group(labels: &[u8], members: &[Vec<usize>], t: f64) -> Vec<i64> {
    let global = labels.iter().map(|&y| f64::from(y)).sum::<f64>() / labels.len() as f64;
    members
        .iter()
        .map(|rows| {
            let pos = rows.iter().map(|&i| f64::from(labels[i])).sum::<f64>();
            let needed = global * rows.len() as f64 - pos;
            (t * needed.abs()).round() as i64 * needed.signum() as i64
        })
        .collect()
}

/// Flips labels of samples nearest the decision boundary of a naive scorer so
/// that each group's base rate moves toward the global base rate.
pub fn label_flipping(
    train: &TabularDataset,
    encoding: &SensitiveEncoding,
    strength: f64,
    seed: u64,
) -> Result<TabularDataset> {
    let groups = partition("label_flipping", encoding, train.len())?;
    let (t, _) = clamp_strength(strength)?;
    if t == 0.0 {
        return Ok(train.clone());
    }
    let members = members_by_group(&groups, encoding.n_groups());
    let flips = flips_per_group(train.labels(), &members, t);
    if flips.iter().all(|&f| f == 0) {
        return Ok(train.clone());
    }
    let scores = naive_margin_scores(train, seed)?;
    let mut labels = train.labels().to_vec();
    for (rows, &f) in members.iter().zip(&flips) {
        if f == 0 {
            continue;
        }
        // f > 0: too few positives, flip negatives; f < 0: flip positives
        let from = u8::from(f < 0);
        let mut candidates: Vec<usize> = rows.iter().copied().filter(|&i| labels[i] == from).collect();
        candidates.sort_by(|&a, &b| {
            let da = (scores[a] - 0.5).abs();
            let db = (scores[b] - 0.5).abs();
            da.partial_cmp(&db).unwrap_or(Ordering::Equal).then(a.cmp(&b))
        });
        for &i in candidates.iter().take(f.unsigned_abs() as usize) {
            labels[i] = 1 - from;
        }
    }
    train.with_labels(labels)
}

/// Under- or oversamples every (group, label) cell so that each group's
/// prevalence moves toward the global prevalence, with group sizes fixed.
pub fn prevalence_sampling(
    train: &TabularDataset,
    encoding: &SensitiveEncoding,
    strength: f64,
    seed: u64,
) -> Result<TabularDataset> {
    let groups = partition("prevalence_sampling", encoding, train.len())?;
    let (t, _) = clamp_strength(strength)?;
    if t == 0.0 {
        return Ok(train.clone());
    }
    let labels = train.labels();
    let global = labels.iter().map(|&y| f64::from(y)).sum::<f64>() / labels.len() as f64;
    let members = members_by_group(&groups, encoding.n_groups());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut keep: Vec<usize> = Vec::with_capacity(train.len());
    let mut extra: Vec<usize> = Vec::new();
    for (q, rows) in members.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let size = rows.len();
        let cells: [Vec<usize>; 2] = [
            rows.iter().copied().filter(|&i| labels[i] == 0).collect(),
            rows.iter().copied().filter(|&i| labels[i] == 1).collect(),
        ];
        let pos_now = cells[1].len() as f64;
        let pos_target = ((1.0 - t) * pos_now + t * global * size as f64).round() as usize;
        let targets = [size - pos_target.min(size), pos_target.min(size)];
        for label in 0..2 {
            let cell = &cells[label];
            let target = targets[label];
            if target > cell.len() && cell.is_empty() {
                return Err(Error::InfeasibleSampling {
                    group: encoding.group_names[q].clone(),
                    label: label as u8,
                });
            }
            if target <= cell.len() {
                let mut chosen: Vec<usize> = cell.choose_multiple(&mut rng, target).copied().collect();
                chosen.sort_unstable();
                keep.extend(chosen);
            } else {
                keep.extend_from_slice(cell);
                for _ in 0..target - cell.len() {
                    extra.push(*cell.choose(&mut rng).expect("nonempty cell"));
                }
            }
        }
    }
    keep.sort_unstable();
    keep.extend(extra);
    Ok(train.select_rows(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{encode_sensitive, ColumnKind, FeatureColumn, Matrix, SensitiveFormat};

    fn grouped(values: &[f64], labels: &[u8], groups: &[usize]) -> (TabularDataset, SensitiveEncoding) {
        let n = values.len();
        let x = Matrix::from_vec(n, 1, values.to_vec()).unwrap();
        let cols = vec![FeatureColumn {
            name: "x".into(),
            kind: ColumnKind::Numeric { mean: 0.0, std: 1.0 },
        }];
        let ds = TabularDataset::new(x, cols, labels.to_vec(), None, vec![], None).unwrap();
        let enc = SensitiveEncoding::from_groups(groups, vec!["A".into(), "B".into()]).unwrap();
        (ds, enc)
    }

    #[test]
    fn repairer_identity_at_zero() {
        let (ds, enc) = grouped(&[0.0, 1.0, 10.0, 11.0], &[0, 1, 0, 1], &[0, 0, 1, 1]);
        assert_eq!(data_repairer(&ds, &enc, 0.0).unwrap(), ds);
    }

    #[test]
    fn repairer_full_aligns_groups() {
        let (ds, enc) = grouped(&[0.0, 1.0, 10.0, 11.0], &[0, 1, 0, 1], &[0, 0, 1, 1]);
        let full = data_repairer(&ds, &enc, 1.0).unwrap();
        let x = full.features().column(0);
        assert!((x[0] - x[2]).abs() < 1e-9);
        assert!((x[1] - x[3]).abs() < 1e-9);
        // pooled quantiles at 0 and 1 are the pooled extremes
        assert_eq!(x, vec![0.0, 11.0, 0.0, 11.0]);

        let half = data_repairer(&ds, &enc, 0.5).unwrap();
        let h = half.features().column(0);
        let orig = ds.features().column(0);
        for i in 0..4 {
            assert!((h[i] - 0.5 * (orig[i] + x[i])).abs() < 1e-12);
        }
        assert_eq!(half.labels(), ds.labels());
    }

    #[test]
    fn quantile_interpolation() {
        let s = [0.0, 1.0, 10.0, 11.0];
        assert_eq!(quantile_sorted(&s, 0.0), 0.0);
        assert_eq!(quantile_sorted(&s, 1.0), 11.0);
        assert!((quantile_sorted(&s, 0.5) - 5.5).abs() < 1e-12);
        assert_eq!(within_group_quantiles(&[3.0, 1.0, 3.0]), vec![0.75, 0.0, 0.75]);
    }

    #[test]
    fn parallel_is_unsupported() {
        let x = Matrix::zeros(2, 0);
        let attrs = vec![
            crate::data::SensitiveAttribute {
                name: "a".into(),
                kind: crate::data::AttributeKind::Categorical,
                categories: vec!["0".into(), "1".into()],
                codes: vec![0, 1],
            },
            crate::data::SensitiveAttribute {
                name: "b".into(),
                kind: crate::data::AttributeKind::Categorical,
                categories: vec!["0".into(), "1".into()],
                codes: vec![1, 0],
            },
        ];
        let ds = TabularDataset::new(x, vec![], vec![0, 1], None, attrs, None).unwrap();
        let par = encode_sensitive(&ds, SensitiveFormat::Parallel, 0).unwrap();
        for result in [
            data_repairer(&ds, &par, 1.0),
            label_flipping(&ds, &par, 1.0, 0),
            prevalence_sampling(&ds, &par, 1.0, 0),
        ] {
            assert!(matches!(result, Err(Error::UnsupportedFormat { .. })));
        }
    }

    #[test]
    fn label_flipping_counting_example() {
        let values = [0.1, 0.4, 0.7, 0.9, 0.2, 0.5, 0.6, 0.8];
        let labels = [1, 1, 1, 0, 1, 0, 0, 0];
        let groups = [0, 0, 0, 0, 1, 1, 1, 1];
        let (ds, enc) = grouped(&values, &labels, &groups);
        assert_eq!(label_flipping(&ds, &enc, 0.0, 1).unwrap().labels(), &labels);
        let out = label_flipping(&ds, &enc, 1.0, 1).unwrap();
        let changed: Vec<usize> = (0..8).filter(|&i| out.labels()[i] != labels[i]).collect();
        assert_eq!(changed.len(), 2);
        assert_eq!(labels[changed[0]], 1);
        assert!(changed[0] < 4);
        assert_eq!(labels[changed[1]], 0);
        assert!(changed[1] >= 4);
        let rate = |g: usize| (0..8).filter(|&i| groups[i] == g).map(|i| f64::from(out.labels()[i])).sum::<f64>() / 4.0;
        assert_eq!(rate(0), 0.5);
        assert_eq!(rate(1), 0.5);
    }

    #[test]
    fn label_flipping_monotone_in_strength() {
        let values: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let labels: Vec<u8> = (0..40).map(|i| u8::from(i < 18 || i % 7 == 0)).collect();
        let groups: Vec<usize> = (0..40).map(|i| usize::from(i >= 20)).collect();
        let (ds, enc) = grouped(&values, &labels, &groups);
        let mut last = 0;
        for s in [0.0, 0.1, 0.3, 0.5, 0.8, 1.0, 2.0] {
            let out = label_flipping(&ds, &enc, s, 4).unwrap();
            let changed = (0..40).filter(|&i| out.labels()[i] != labels[i]).count();
            assert!(changed >= last);
            last = changed;
        }
    }

    #[test]
    fn prevalence_sampling_counting_example() {
        let labels = [1, 1, 1, 1, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0];
        let groups = [0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1];
        let values: Vec<f64> = (0..16).map(f64::from).collect();
        let (ds, enc) = grouped(&values, &labels, &groups);
        assert_eq!(prevalence_sampling(&ds, &enc, 0.0, 3).unwrap(), ds);
        let out = prevalence_sampling(&ds, &enc, 1.0, 3).unwrap();
        assert_eq!(out.len(), 16);
        for g in 0..2 {
            let (mut pos, mut size) = (0, 0);
            for i in 0..out.len() {
                let original = out.features().get(i, 0) as usize;
                if groups[original] == g {
                    size += 1;
                    pos += usize::from(out.labels()[i]);
                }
                // every output row is a copy of an input row
                assert_eq!(out.labels()[i], labels[original]);
            }
            assert_eq!((pos, size), (4, 8));
        }
        assert_eq!(out, prevalence_sampling(&ds, &enc, 1.0, 3).unwrap());
    }

    #[test]
    fn prevalence_sampling_infeasible_cell() {
        // group A has no negatives but needs one
        let (ds, enc) = grouped(&[0.0, 1.0, 2.0, 3.0], &[1, 1, 0, 0], &[0, 0, 1, 1]);
        match prevalence_sampling(&ds, &enc, 1.0, 0) {
            Err(Error::InfeasibleSampling { group, label }) => {
                assert_eq!(group, "A");
                assert_eq!(label, 0);
            }
            other => panic!("expected infeasible sampling, got {other:?}"),
        }
    }

    #[test]
    fn clamp_warns_above_one() {
        assert_eq!(clamp_strength(0.3).unwrap(), (0.3, None));
        let (t, w) = clamp_strength(2.5).unwrap();
        assert_eq!(t, 1.0);
        assert!(w.is_some());
        assert!(clamp_strength(-1.0).is_err());
    }
}
