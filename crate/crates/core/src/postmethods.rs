//! Postprocessing: per-group decision thresholds that equalize a statistic
//! up to a tolerance while maximizing accuracy on the fit set.

use serde::{Deserialize, Serialize};

use crate::data::SensitiveEncoding;
use crate::error::{Error, Result};
use crate::metrics::{FairnessNotion, DENOM_EPS};

/// Per-group thresholds; a sample is predicted 1 iff its score ≥ its group's threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPolicy {
    pub thresholds: Vec<f64>,
    pub group_names: Vec<String>,
    pub notion: FairnessNotion,
    pub tolerance: f64,
    /// Violation on the fit set.
    pub achieved_violation: f64,
    /// Weighted accuracy on the fit set.
    pub fit_accuracy: f64,
    /// No threshold combination met the tolerance; the least-violating one was kept.
    pub infeasible: bool,
}

/// Above this many threshold combinations the search switches from
/// enumeration to a target-rate grid with coordinate refinement.
pub const EXHAUSTIVE_LIMIT: usize = 250_000;

const UNIFORM_GRID: usize = 51;

/// Candidate thresholds of one group with the statistic numerator and the
/// number of correct predictions each one yields.
struct GroupCandidates {
    thresholds: Vec<f64>,
    num: Vec<f64>,
    correct: Vec<f64>,
    den: f64,
}

impl GroupCandidates {
    fn build(members: &[(f64, f64, f64)], notion: FairnessNotion) -> GroupCandidates {
        // members: (score, label, weight), sorted by descending score
        let mut thresholds = Vec::new();
        let mut num = Vec::new();
        let mut correct = Vec::new();
        let den: f64 = members.iter().map(|&(_, y, w)| w * notion.terms(y).c).sum();
        let negatives: f64 = members.iter().map(|&(_, y, w)| w * (1.0 - y)).sum();
        // threshold above every score: nothing predicted positive
        let top = members.first().map_or(0.5, |m| m.0);
        thresholds.push(top.next_up().max(0.5));
        num.push(0.0);
        correct.push(negatives);
        let (mut n_acc, mut c_acc) = (0.0, negatives);
        let mut k = 0;
        while k < members.len() {
            let s = members[k].0;
            while k < members.len() && members[k].0 == s {
                let (_, y, w) = members[k];
                n_acc += w * notion.terms(y).b;
                c_acc += w * (2.0 * y - 1.0);
                k += 1;
            }
            thresholds.push(s);
            num.push(n_acc);
            correct.push(c_acc);
        }
        GroupCandidates {
            thresholds,
            num,
            correct,
            den,
        }
    }

    fn len(&self) -> usize {
        self.thresholds.len()
    }

    fn rate(&self, j: usize) -> f64 {
        self.num[j] / self.den
    }

    /// Index of the largest candidate threshold ≤ t.
    fn index_of(&self, t: f64) -> usize {
        // thresholds are strictly decreasing
        self.thresholds.iter().position(|&c| c <= t).unwrap_or(self.len() - 1)
    }
}

#[derive(Clone, Copy, Debug)]
struct Outcome {
    violation: f64,
    accuracy: f64,
    feasible: bool,
}

impl Outcome {
    fn better_than(&self, other: &Outcome) -> bool {
        match (self.feasible, other.feasible) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => {
                self.accuracy > other.accuracy || (self.accuracy == other.accuracy && self.violation < other.violation)
            }
            (false, false) => {
                self.violation < other.violation || (self.violation == other.violation && self.accuracy > other.accuracy)
            }
        }
    }
}

struct Search<'a> {
    groups: &'a [GroupCandidates],
    total_weight: f64,
    den_all: f64,
    tolerance: f64,
}

impl Search<'_> {
    fn evaluate(&self, choice: &[usize]) -> Outcome {
        let num_all: f64 = choice.iter().zip(self.groups).map(|(&j, g)| g.num[j]).sum();
        let correct: f64 = choice.iter().zip(self.groups).map(|(&j, g)| g.correct[j]).sum();
        let mean = num_all / self.den_all;
        // every group statistic is zero when the mean is: parity holds
        let violation = if mean.abs() <= DENOM_EPS {
            0.0
        } else {
            choice
                .iter()
                .zip(self.groups)
                .map(|(&j, g)| (g.rate(j) / mean - 1.0).abs())
                .fold(0.0, f64::max)
        };
        Outcome {
            violation,
            accuracy: correct / self.total_weight,
            feasible: violation <= self.tolerance,
        }
    }

    fn exhaustive(&self) -> (Vec<usize>, Outcome) {
        let mut choice = vec![0; self.groups.len()];
        let mut best = (choice.clone(), self.evaluate(&choice));
        loop {
            let mut q = 0;
            loop {
                if q == choice.len() {
                    return best;
                }
                choice[q] += 1;
                if choice[q] < self.groups[q].len() {
                    break;
                }
                choice[q] = 0;
                q += 1;
            }
            let out = self.evaluate(&choice);
            if out.better_than(&best.1) {
                best = (choice.clone(), out);
            }
        }
    }

    fn closest_rate(g: &GroupCandidates, r: f64) -> usize {
        let mut best = 0;
        for j in 1..g.len() {
            if (g.rate(j) - r).abs() < (g.rate(best) - r).abs() {
                best = j;
            }
        }
        best
    }

    fn rate_grid(&self) -> (Vec<usize>, Outcome) {
        let mut targets: Vec<f64> = (0..UNIFORM_GRID).map(|i| i as f64 / (UNIFORM_GRID - 1) as f64).collect();
        for g in self.groups {
            targets.extend((0..g.len()).map(|j| g.rate(j)));
        }
        targets.sort_by(f64::total_cmp);
        targets.dedup();

        let uniform: Vec<usize> = self.groups.iter().map(|g| g.index_of(0.5)).collect();
        let mut best = (uniform.clone(), self.evaluate(&uniform));
        for r in targets {
            let choice: Vec<usize> = self.groups.iter().map(|g| Self::closest_rate(g, r)).collect();
            let out = self.evaluate(&choice);
            if out.better_than(&best.1) {
                best = (choice, out);
            }
        }
        // coordinate refinement
        for _ in 0..20 {
            let mut improved = false;
            for q in 0..self.groups.len() {
                let mut choice = best.0.clone();
                for j in 0..self.groups[q].len() {
                    choice[q] = j;
                    let out = self.evaluate(&choice);
                    if out.better_than(&best.1) {
                        best = (choice.clone(), out);
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        best
    }
}

/// Fits per-group thresholds for dem_par, eq_opp or pred_eq. Maximizes fit
/// accuracy subject to violation ≤ `tolerance`; when no combination is
/// feasible, minimizes the violation and marks the policy infeasible.
pub fn fit_error_parity(
    scores: &[f64],
    labels: &[u8],
    weights: Option<&[f64]>,
    encoding: &SensitiveEncoding,
    notion: FairnessNotion,
    tolerance: f64,
) -> Result<ThresholdPolicy> {
    if !matches!(notion, FairnessNotion::DemPar | FairnessNotion::EqOpp | FairnessNotion::PredEq) {
        return Err(Error::Fit(format!(
            "error parity supports dem_par, eq_opp and pred_eq, not `{notion}`"
        )));
    }
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::Fit(format!("tolerance must be nonnegative, got {tolerance}")));
    }
    let n = scores.len();
    if labels.len() != n {
        return Err(Error::Shape { expected: n, actual: labels.len() });
    }
    if encoding.len() != n {
        return Err(Error::Shape { expected: n, actual: encoding.len() });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::Shape { expected: n, actual: w.len() });
        }
    }
    if !encoding.is_partition() {
        return Err(Error::UnsupportedFormat {
            method: "error_parity".into(),
            format: encoding.format.to_string(),
        });
    }
    let index = encoding.group_index()?;
    let g = encoding.n_groups();
    let mut members: Vec<Vec<(f64, f64, f64)>> = vec![Vec::new(); g];
    for i in 0..n {
        let w = weights.map_or(1.0, |w| w[i]);
        members[index[i]].push((scores[i], f64::from(labels[i]), w));
    }
    let mut groups = Vec::with_capacity(g);
    for (q, m) in members.iter_mut().enumerate() {
        m.sort_by(|a, b| b.0.total_cmp(&a.0));
        let cand = GroupCandidates::build(m, notion);
        if m.is_empty() || cand.den <= DENOM_EPS {
            let need = match notion {
                FairnessNotion::EqOpp => "a positive sample",
                FairnessNotion::PredEq => "a negative sample",
                _ => "a sample",
            };
            return Err(Error::Fit(format!(
                "group `{}` has no {need} for {notion}",
                encoding.group_names[q]
            )));
        }
        groups.push(cand);
    }
    let search = Search {
        den_all: groups.iter().map(|c| c.den).sum(),
        total_weight: members.iter().flatten().map(|m| m.2).sum(),
        groups: &groups,
        tolerance,
    };
    let combinations = groups
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .unwrap_or(usize::MAX);
    let (choice, outcome) = if combinations <= EXHAUSTIVE_LIMIT {
        search.exhaustive()
    } else {
        search.rate_grid()
    };
    Ok(ThresholdPolicy {
        thresholds: choice.iter().zip(&groups).map(|(&j, c)| c.thresholds[j]).collect(),
        group_names: encoding.group_names.clone(),
        notion,
        tolerance,
        achieved_violation: outcome.violation,
        fit_accuracy: outcome.accuracy,
        infeasible: !outcome.feasible,
    })
}

/// Hard predictions under a fitted policy.
pub fn apply_thresholds(scores: &[f64], encoding: &SensitiveEncoding, policy: &ThresholdPolicy) -> Result<Vec<f64>> {
    if encoding.len() != scores.len() {
        return Err(Error::Shape {
            expected: scores.len(),
            actual: encoding.len(),
        });
    }
    if !encoding.is_partition() {
        return Err(Error::UnsupportedFormat {
            method: "error_parity".into(),
            format: encoding.format.to_string(),
        });
    }
    let mut lookup = Vec::with_capacity(encoding.n_groups());
    for name in &encoding.group_names {
        let t = policy
            .group_names
            .iter()
            .position(|p| p == name)
            .map(|j| policy.thresholds[j])
            .ok_or_else(|| Error::Apply(format!("group `{name}` has no threshold in the policy")))?;
        lookup.push(t);
    }
    let index = encoding.group_index()?;
    Ok(scores
        .iter()
        .zip(index)
        .map(|(&s, q)| if s >= lookup[q] { 1.0 } else { 0.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{harden, statistic, violation};

    fn enc(groups: &[usize], g: usize) -> SensitiveEncoding {
        let names = (0..g).map(|q| ((b'A' + q as u8) as char).to_string()).collect();
        SensitiveEncoding::from_groups(groups, names).unwrap()
    }

    #[test]
    fn top_score_per_group() {
        let scores = [0.9, 0.7, 0.2, 0.8, 0.3, 0.1];
        let labels = [1, 0, 0, 1, 0, 0];
        let e = enc(&[0, 0, 0, 1, 1, 1], 2);
        let p = fit_error_parity(&scores, &labels, None, &e, FairnessNotion::DemPar, 0.0).unwrap();
        assert!(!p.infeasible);
        assert_eq!(p.achieved_violation, 0.0);
        let hard = apply_thresholds(&scores, &e, &p).unwrap();
        assert_eq!(hard, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let stats = statistic(FairnessNotion::DemPar, &hard, &labels, None, &e).unwrap();
        assert_eq!(violation(&stats).unwrap().value, 0.0);
    }

    #[test]
    fn uniform_half_threshold_equals_harden() {
        let scores = [0.1, 0.5, 0.49, 0.9, 0.51];
        let e = enc(&[0, 1, 0, 1, 1], 2);
        let policy = ThresholdPolicy {
            thresholds: vec![0.5, 0.5],
            group_names: e.group_names.clone(),
            notion: FairnessNotion::DemPar,
            tolerance: 0.0,
            achieved_violation: 0.0,
            fit_accuracy: 0.0,
            infeasible: false,
        };
        assert_eq!(apply_thresholds(&scores, &e, &policy).unwrap(), harden(&scores));
        let mut saturated = policy.clone();
        saturated.thresholds[0] = 1.1;
        let hard = apply_thresholds(&scores, &e, &saturated).unwrap();
        assert_eq!(hard[0] + hard[2], 0.0);
    }

    #[test]
    fn loose_tolerance_keeps_naive_accuracy() {
        let scores = [0.9, 0.6, 0.4, 0.2, 0.7, 0.3, 0.55, 0.1];
        let labels = [1, 1, 0, 0, 1, 0, 0, 0];
        let e = enc(&[0, 0, 0, 0, 1, 1, 1, 1], 2);
        let p = fit_error_parity(&scores, &labels, None, &e, FairnessNotion::DemPar, f64::INFINITY).unwrap();
        let naive = crate::metrics::accuracy(&harden(&scores), &labels, None).unwrap();
        assert!(p.fit_accuracy >= naive);
    }

    #[test]
    fn single_group_maximizes_accuracy() {
        let scores = [0.9, 0.2, 0.6, 0.4];
        let labels = [1, 0, 1, 0];
        let e = enc(&[0, 0, 0, 0], 1);
        let p = fit_error_parity(&scores, &labels, None, &e, FairnessNotion::DemPar, 0.0).unwrap();
        assert_eq!(p.achieved_violation, 0.0);
        assert_eq!(p.fit_accuracy, 1.0);
    }

    #[test]
    fn missing_positive_names_group() {
        let e = enc(&[0, 0, 1, 1], 2);
        let err = fit_error_parity(&[0.1, 0.2, 0.3, 0.4], &[1, 0, 0, 0], None, &e, FairnessNotion::EqOpp, 0.1)
            .unwrap_err();
        assert!(err.to_string().contains("`B`"), "{err}");
    }

    #[test]
    fn unknown_group_is_apply_error() {
        let e = enc(&[0, 1], 2);
        let policy = ThresholdPolicy {
            thresholds: vec![0.5],
            group_names: vec!["A".into()],
            notion: FairnessNotion::DemPar,
            tolerance: 0.0,
            achieved_violation: 0.0,
            fit_accuracy: 0.0,
            infeasible: false,
        };
        assert!(matches!(apply_thresholds(&[0.1, 0.9], &e, &policy), Err(Error::Apply(_))));
    }

    #[test]
    fn rate_grid_respects_tolerance_on_large_input() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = 3000;
        let groups: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let scores: Vec<f64> = groups.iter().map(|&q| (rng.random::<f64>() + 0.2 * q as f64).min(1.0)).collect();
        let labels: Vec<u8> = scores.iter().map(|&s| u8::from(rng.random::<f64>() < s)).collect();
        let e = enc(&groups, 3);
        let p = fit_error_parity(&scores, &labels, None, &e, FairnessNotion::DemPar, 0.02).unwrap();
        assert!(!p.infeasible);
        let hard = apply_thresholds(&scores, &e, &p).unwrap();
        let v = violation(&statistic(FairnessNotion::DemPar, &hard, &labels, None, &e).unwrap()).unwrap();
        assert!((v.value - p.achieved_violation).abs() < 1e-12);
        assert!(v.value <= 0.02);
    }
}
