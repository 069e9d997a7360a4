use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::csv_io::append_sensitive_columns;
use super::{mean_std, AttributeKind, ColumnKind, FeatureColumn, Matrix, SensitiveAttribute, TabularDataset};
use crate::error::{Error, Result};

fn default_true() -> bool {
    true
}

/// Synthetic dataset with a group-independent ground truth and group-asymmetric
/// label corruption. Group code 0 is "advantaged", code 1 "disadvantaged".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualLabelConfig {
    pub n_samples: usize,
    pub d_features: usize,
    /// Fractions of the (advantaged, disadvantaged) groups.
    pub group_fractions: [f64; 2],
    /// Probability that a positive in the disadvantaged group is recorded as negative.
    pub flip_rate_disadvantaged: f64,
    /// Probability that a negative in the advantaged group is recorded as positive.
    pub flip_rate_advantaged: f64,
    /// Scale of the ground-truth logit; larger means more separable classes.
    pub signal_strength: f64,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub include_sensitive: bool,
}

impl Default for DualLabelConfig {
    fn default() -> Self {
        DualLabelConfig {
            n_samples: 2000,
            d_features: 5,
            group_fractions: [0.5, 0.5],
            flip_rate_disadvantaged: 0.3,
            flip_rate_advantaged: 0.0,
            signal_strength: 2.0,
            seed: 0,
            include_sensitive: true,
        }
    }
}

impl DualLabelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_samples < 10 {
            return bad(format!("n_samples must be >= 10, got {}", self.n_samples));
        }
        if self.d_features == 0 {
            return bad("d_features must be >= 1".into());
        }
        if self.group_fractions.iter().any(|f| !(0.0..=1.0).contains(f))
            || (self.group_fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad(format!("group fractions {:?} must lie in [0,1] and sum to 1", self.group_fractions));
        }
        for (name, r) in [
            ("flip_rate_disadvantaged", self.flip_rate_disadvantaged),
            ("flip_rate_advantaged", self.flip_rate_advantaged),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return bad(format!("{name} must lie in [0,1], got {r}"));
            }
        }
        if !self.signal_strength.is_finite() {
            return bad("signal_strength must be finite".into());
        }
        Ok(())
    }
}

pub fn generate_dual_label(config: &DualLabelConfig) -> Result<TabularDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d = config.d_features;
    let n = config.n_samples;

    let mut direction: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    direction.iter_mut().for_each(|v| *v /= norm);

    let mut raw = vec![0.0; n * d];
    let mut groups = Vec::with_capacity(n);
    let mut unbiased = Vec::with_capacity(n);
    let mut biased = Vec::with_capacity(n);
    for i in 0..n {
        let x = &mut raw[i * d..(i + 1) * d];
        for v in x.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let group = usize::from(rng.random::<f64>() >= config.group_fractions[0]);
        let logit = config.signal_strength * x.iter().zip(&direction).map(|(a, b)| a * b).sum::<f64>();
        let y = u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-logit).exp()));
        let flip = rng.random::<f64>();
        let recorded = match (group, y) {
            (1, 1) if flip < config.flip_rate_disadvantaged => 0,
            (0, 0) if flip < config.flip_rate_advantaged => 1,
            _ => y,
        };
        groups.push(group);
        unbiased.push(y);
        biased.push(recorded);
    }

    let mut columns = Vec::with_capacity(d);
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(d);
    for j in 0..d {
        let col: Vec<f64> = (0..n).map(|i| raw[i * d + j]).collect();
        let (mean, std) = mean_std(&col);
        values.push(col.iter().map(|v| (v - mean) / std).collect());
        columns.push(FeatureColumn {
            name: format!("x{j}"),
            kind: ColumnKind::Numeric { mean, std },
        });
    }
    let sensitive = vec![SensitiveAttribute {
        name: "group".into(),
        kind: AttributeKind::Categorical,
        categories: vec!["advantaged".into(), "disadvantaged".into()],
        codes: groups,
    }];
    if config.include_sensitive {
        append_sensitive_columns(&sensitive, &mut columns, &mut values);
    }
    let mut data = Vec::with_capacity(n * values.len());
    for i in 0..n {
        data.extend(values.iter().map(|c| c[i]));
    }
    let features = Matrix::from_vec(n, values.len(), data)?;
    TabularDataset::new(features, columns, biased, Some(unbiased), sensitive, None)
}
