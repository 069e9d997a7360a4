//! Group-parity statistics, the relative violation measure and performance
//! metrics for hard and soft outputs.

mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SensitiveEncoding;
use crate::error::{Error, Result};

pub use report::{evaluate, EvaluationReport, LabelSection, LabelTarget, ReportCell};

/// Denominators at or below this value are treated as zero.
pub const DENOM_EPS: f64 = 1e-12;

/// Decision threshold for hardening soft scores.
pub const THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessNotion {
    DemPar,
    EqOpp,
    PredEq,
    PredPar,
    Forp,
    AccEq,
    F1ScoreEq,
}

/// Per-sample contributions `N = a + b·h` and `D = c + d·h` of a statistic
/// `γ = ΣN / ΣD`, for a sample with label `y` and prediction `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct LinearTerms {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl FairnessNotion {
    pub const ALL: [FairnessNotion; 7] = [
        FairnessNotion::DemPar,
        FairnessNotion::EqOpp,
        FairnessNotion::Forp,
        FairnessNotion::PredPar,
        FairnessNotion::AccEq,
        FairnessNotion::F1ScoreEq,
        FairnessNotion::PredEq,
    ];

    pub const TOKENS: [&'static str; 7] = [
        "dem_par",
        "eq_opp",
        "forp",
        "pred_par",
        "acc_eq",
        "f1_score_eq",
        "pred_eq",
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FairnessNotion::DemPar => "dem_par",
            FairnessNotion::EqOpp => "eq_opp",
            FairnessNotion::PredEq => "pred_eq",
            FairnessNotion::PredPar => "pred_par",
            FairnessNotion::Forp => "forp",
            FairnessNotion::AccEq => "acc_eq",
            FairnessNotion::F1ScoreEq => "f1_score_eq",
        }
    }

    #[inline]
    pub(crate) fn terms(self, y: f64) -> LinearTerms {
        let t = |a, b, c, d| LinearTerms { a, b, c, d };
        match self {
            FairnessNotion::DemPar => t(0.0, 1.0, 1.0, 0.0),
            FairnessNotion::EqOpp => t(0.0, y, y, 0.0),
            FairnessNotion::PredEq => t(0.0, 1.0 - y, 1.0 - y, 0.0),
            FairnessNotion::PredPar => t(0.0, y, 0.0, 1.0),
            FairnessNotion::Forp => t(y, -y, 1.0, -1.0),
            FairnessNotion::AccEq => t(1.0 - y, 2.0 * y - 1.0, 1.0, 0.0),
            FairnessNotion::F1ScoreEq => t(0.0, 2.0 * y, y, 1.0),
        }
    }

    /// Whether the denominator does not depend on the predictions.
    pub fn has_fixed_denominator(self) -> bool {
        matches!(
            self,
            FairnessNotion::DemPar | FairnessNotion::EqOpp | FairnessNotion::PredEq | FairnessNotion::AccEq
        )
    }
}

impl fmt::Display for FairnessNotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FairnessNotion {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown notion `{s}`; valid options are {:?}", Self::TOKENS))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputType {
    Hard,
    Soft,
}

impl OutputType {
    pub const ALL: [OutputType; 2] = [OutputType::Hard, OutputType::Soft];
    pub const TOKENS: [&'static str; 2] = ["hard", "soft"];

    pub fn as_str(self) -> &'static str {
        match self {
            OutputType::Hard => "hard",
            OutputType::Soft => "soft",
        }
    }
}

impl fmt::Display for OutputType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OutputType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| format!("unknown output type `{s}`; valid options are {:?}", Self::TOKENS))
    }
}

/// Per-group values γ(q) of a statistic and the population value γ̄.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupStatistics {
    pub notion: FairnessNotion,
    /// γ(q); 0 where `defined[q]` is false.
    pub gamma: Vec<f64>,
    pub gamma_mean: f64,
    pub defined: Vec<bool>,
    pub group_names: Vec<String>,
}

/// Accumulated numerators and denominators, per group and overall.
pub(crate) struct Sums {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    pub num_all: f64,
    pub den_all: f64,
}

pub(crate) fn accumulate(
    notion: FairnessNotion,
    predictions: &[f64],
    labels: &[f64],
    weights: Option<&[f64]>,
    encoding: &SensitiveEncoding,
    rows: Option<&[usize]>,
) -> Sums {
    let g = encoding.n_groups();
    let mut s = Sums {
        num: vec![0.0; g],
        den: vec![0.0; g],
        num_all: 0.0,
        den_all: 0.0,
    };
    let n = rows.map_or(predictions.len(), <[usize]>::len);
    for k in 0..n {
        let i = rows.map_or(k, |r| r[k]);
        let h = predictions[k];
        let w = weights.map_or(1.0, |w| w[i]);
        let t = notion.terms(labels[i]);
        let num = w * (t.a + t.b * h);
        let den = w * (t.c + t.d * h);
        s.num_all += num;
        s.den_all += den;
        for (q, &ind) in encoding.indicators.row(i).iter().enumerate() {
            if ind != 0.0 {
                s.num[q] += ind * num;
                s.den[q] += ind * den;
            }
        }
    }
    s
}

fn check_lengths(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Shape { expected, actual });
    }
    Ok(())
}

/// Computes γ(q) = N(q)/D(q) for every group of `encoding` and γ̄ over all
/// samples. Predictions may be hard (0/1) or soft scores.
pub fn statistic(
    notion: FairnessNotion,
    predictions: &[f64],
    labels: &[u8],
    weights: Option<&[f64]>,
    encoding: &SensitiveEncoding,
) -> Result<GroupStatistics> {
    let n = predictions.len();
    check_lengths(n, labels.len())?;
    check_lengths(n, encoding.len())?;
    if let Some(w) = weights {
        check_lengths(n, w.len())?;
    }
    let labels: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
    let sums = accumulate(notion, predictions, &labels, weights, encoding, None);
    if sums.den_all <= DENOM_EPS {
        return Err(Error::UndefinedStatistic {
            notion: notion.to_string(),
        });
    }
    let defined: Vec<bool> = sums.den.iter().map(|&d| d > DENOM_EPS).collect();
    let gamma = sums
        .num
        .iter()
        .zip(&sums.den)
        .zip(&defined)
        .map(|((n, d), &ok)| if ok { n / d } else { 0.0 })
        .collect();
    Ok(GroupStatistics {
        notion,
        gamma,
        gamma_mean: sums.num_all / sums.den_all,
        defined,
        group_names: encoding.group_names.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub value: f64,
    /// Groups left out of the maximum because their statistic is undefined.
    pub skipped_groups: usize,
}

/// max over defined groups of |γ(q)/γ̄ − 1|.
///
/// For the parallel format this single maximum over the concatenated axis
/// blocks equals the maximum of the per-axis violations, since γ̄ is global.
pub fn violation(stats: &GroupStatistics) -> Result<Violation> {
    if stats.gamma_mean.abs() <= DENOM_EPS {
        return Err(Error::UndefinedViolation(format!(
            "mean statistic of `{}` is zero",
            stats.notion
        )));
    }
    let mut value: Option<f64> = None;
    let mut skipped = 0;
    for (g, &ok) in stats.gamma.iter().zip(&stats.defined) {
        if ok {
            let v = (g / stats.gamma_mean - 1.0).abs();
            value = Some(value.map_or(v, |m: f64| m.max(v)));
        } else {
            skipped += 1;
        }
    }
    match value {
        Some(value) => {
            if skipped > 0 {
                log::warn!("{skipped} group(s) skipped in `{}` violation", stats.notion);
            }
            Ok(Violation {
                value,
                skipped_groups: skipped,
            })
        }
        None => Err(Error::UndefinedViolation(format!(
            "every group of `{}` is undefined",
            stats.notion
        ))),
    }
}

/// Hard predictions: 1 iff score ≥ 0.5.
pub fn harden(scores: &[f64]) -> Vec<f64> {
    scores.iter().map(|&s| if s >= THRESHOLD { 1.0 } else { 0.0 }).collect()
}

/// Weighted fraction of hard predictions matching the labels.
pub fn accuracy(hard: &[f64], labels: &[u8], weights: Option<&[f64]>) -> Result<f64> {
    check_lengths(hard.len(), labels.len())?;
    if hard.is_empty() {
        return Err(Error::EmptyData("accuracy of an empty prediction vector".into()));
    }
    let (mut hit, mut total) = (0.0, 0.0);
    for (i, (&h, &y)) in hard.iter().zip(labels).enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        total += w;
        if (h >= THRESHOLD) == (y == 1) {
            hit += w;
        }
    }
    Ok(hit / total)
}

/// Weighted Mann–Whitney AUROC: P(score_pos > score_neg) + ½ P(tie) over
/// weighted positive/negative pairs.
pub fn auroc(scores: &[f64], labels: &[u8], weights: Option<&[f64]>) -> Result<f64> {
    check_lengths(scores.len(), labels.len())?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);

    let (mut neg_below, mut area) = (0.0, 0.0);
    let (mut total_pos, mut total_neg) = (0.0, 0.0);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        let (mut pos_here, mut neg_here) = (0.0, 0.0);
        while k < order.len() && scores[order[k]] == s {
            let i = order[k];
            if labels[i] == 1 {
                pos_here += w(i);
            } else {
                neg_here += w(i);
            }
            k += 1;
        }
        area += pos_here * (neg_below + 0.5 * neg_here);
        neg_below += neg_here;
        total_pos += pos_here;
        total_neg += neg_here;
    }
    if total_pos <= 0.0 || total_neg <= 0.0 {
        return Err(Error::UndefinedAuroc);
    }
    Ok(area / (total_pos * total_neg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(groups: &[usize]) -> SensitiveEncoding {
        SensitiveEncoding::from_groups(groups, vec!["A".into(), "B".into()]).unwrap()
    }

    #[test]
    fn dem_par_hand_example() {
        let enc = binary(&[0, 0, 1, 1]);
        let s = statistic(FairnessNotion::DemPar, &[1.0, 0.0, 1.0, 1.0], &[0, 0, 0, 0], None, &enc).unwrap();
        assert_eq!(s.gamma, vec![0.5, 1.0]);
        assert!((s.gamma_mean - 0.75).abs() < 1e-15);
        let v = violation(&s).unwrap();
        assert!((v.value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn eq_opp_hand_example() {
        let enc = binary(&[0, 0, 1, 1]);
        let s = statistic(FairnessNotion::EqOpp, &[1.0, 0.0, 1.0, 0.0], &[1, 0, 1, 1], None, &enc).unwrap();
        assert_eq!(s.gamma, vec![1.0, 0.5]);
        assert!((s.gamma_mean - 2.0 / 3.0).abs() < 1e-15);
        assert!((violation(&s).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_predictions_give_equal_group_rates() {
        let enc = binary(&[0, 0, 1, 1]);
        let labels = [1, 0, 1, 0];
        for notion in FairnessNotion::ALL {
            let s = statistic(notion, &[0.3; 4], &labels, None, &enc).unwrap();
            for (g, ok) in s.gamma.iter().zip(&s.defined) {
                assert!(*ok);
                assert!((g - s.gamma_mean).abs() < 1e-12, "{notion}");
            }
            assert!(violation(&s).unwrap().value < 1e-12);
        }
    }

    #[test]
    fn undefined_groups_are_skipped() {
        // group B has no positives, so eq_opp is undefined there
        let enc = binary(&[0, 0, 1, 1]);
        let s = statistic(FairnessNotion::EqOpp, &[0.9, 0.2, 0.5, 0.5], &[1, 1, 0, 0], None, &enc).unwrap();
        assert_eq!(s.defined, vec![true, false]);
        let v = violation(&s).unwrap();
        assert_eq!(v.skipped_groups, 1);
        assert!(v.value.abs() < 1e-12);
    }

    #[test]
    fn undefined_global_statistic_is_error() {
        let enc = binary(&[0, 1]);
        assert!(matches!(
            statistic(FairnessNotion::EqOpp, &[0.5, 0.5], &[0, 0], None, &enc),
            Err(Error::UndefinedStatistic { .. })
        ));
    }

    #[test]
    fn violation_of_all_undefined_is_error() {
        let s = GroupStatistics {
            notion: FairnessNotion::DemPar,
            gamma: vec![0.0, 0.0],
            gamma_mean: 0.5,
            defined: vec![false, false],
            group_names: vec!["a".into(), "b".into()],
        };
        assert!(matches!(violation(&s), Err(Error::UndefinedViolation(_))));
    }

    #[test]
    fn harden_boundary() {
        assert_eq!(harden(&[0.4, 0.6]), vec![0.0, 1.0]);
        assert_eq!(harden(&[0.5]), vec![1.0]);
        let h = harden(&[0.1, 0.9, 0.5]);
        assert_eq!(harden(&h), h);
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1.0, 0.0], &[1, 0], None).unwrap(), 1.0);
        assert_eq!(accuracy(&[0.0, 1.0], &[1, 0], None).unwrap(), 0.0);
        assert!((accuracy(&[1.0, 0.0, 1.0], &[1, 1, 1], None).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(accuracy(&[], &[], None).is_err());
    }

    #[test]
    fn auroc_cases() {
        assert_eq!(auroc(&[0.2, 0.8], &[0, 1], None).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5, 0.5], &[0, 1], None).unwrap(), 0.5);
        assert_eq!(auroc(&[0.9, 0.6, 0.4], &[1, 0, 1], None).unwrap(), 0.5);
        assert!(matches!(auroc(&[0.1, 0.2], &[1, 1], None), Err(Error::UndefinedAuroc)));
    }

    #[test]
    fn auroc_weighted_pairs() {
        // weight 3 on the correctly ranked positive: (3·1 + 1·0) / 4
        let a = auroc(&[0.9, 0.6, 0.4], &[1, 0, 1], Some(&[3.0, 1.0, 1.0])).unwrap();
        assert!((a - 0.75).abs() < 1e-15);
    }

    #[test]
    fn notion_tokens_round_trip() {
        for (n, t) in FairnessNotion::ALL.iter().zip(FairnessNotion::TOKENS) {
            assert_eq!(n.as_str(), t);
            assert_eq!(t.parse::<FairnessNotion>().unwrap(), *n);
        }
        let err = "banana".parse::<FairnessNotion>().unwrap_err();
        assert!(err.contains("f1_score_eq"));
    }
}
