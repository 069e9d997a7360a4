use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TabularDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitFractions {
    pub fn new(train: f64, val: f64, test: f64) -> Self {
        SplitFractions { train, val, test }
    }

    fn sizes(&self, n: usize) -> Result<[usize; 3]> {
        let fr = [self.train, self.val, self.test];
        if fr.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::Split(format!("fractions must be nonnegative, got {fr:?}")));
        }
        if (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Split(format!("fractions must sum to 1, got {fr:?}")));
        }
        let train = (n as f64 * self.train).round() as usize;
        let val = ((n as f64 * self.val).round() as usize).min(n.saturating_sub(train));
        let test = n - train - val;
        let sizes = [train, val, test];
        for (name, size) in ["train", "val", "test"].iter().zip(sizes) {
            if size == 0 {
                return Err(Error::Split(format!("{name} split is empty for n = {n}")));
            }
        }
        Ok(sizes)
    }
}

/// Deterministic shuffled split into (train, val, test). Numeric features of
/// all three parts are re-standardized with train-split statistics.
pub fn split(
    dataset: &TabularDataset,
    fractions: SplitFractions,
    seed: u64,
) -> Result<(TabularDataset, TabularDataset, TabularDataset)> {
    let [n_train, n_val, _] = fractions.sizes(dataset.len())?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let train = dataset.select_rows(&order[..n_train]);
    let val = dataset.select_rows(&order[n_train..n_train + n_val]);
    let test = dataset.select_rows(&order[n_train + n_val..]);

    let stats = train.raw_numeric_stats();
    Ok((
        train.restandardize_with(&stats),
        val.restandardize_with(&stats),
        test.restandardize_with(&stats),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnKind, FeatureColumn, Matrix};

    fn dataset(n: usize) -> TabularDataset {
        let x = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let cols = vec![FeatureColumn {
            name: "id".into(),
            kind: ColumnKind::Numeric { mean: 0.0, std: 1.0 },
        }];
        TabularDataset::new(x, cols, vec![0; n], None, vec![], None).unwrap()
    }

    fn ids(ds: &TabularDataset) -> Vec<usize> {
        let ColumnKind::Numeric { mean, std } = ds.columns()[0].kind else {
            unreachable!()
        };
        ds.features()
            .column(0)
            .iter()
            .map(|v| (v * std + mean).round() as usize)
            .collect()
    }

    #[test]
    fn sizes_and_determinism() {
        let ds = dataset(10);
        let (a, b, c) = split(&ds, SplitFractions::new(0.6, 0.2, 0.2), 7).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (6, 2, 2));
        let (a2, b2, c2) = split(&ds, SplitFractions::new(0.6, 0.2, 0.2), 7).unwrap();
        assert_eq!((ids(&a), ids(&b), ids(&c)), (ids(&a2), ids(&b2), ids(&c2)));

        let mut all: Vec<usize> = [ids(&a), ids(&b), ids(&c)].concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn different_seeds_differ() {
        let ds = dataset(50);
        let (a, _, _) = split(&ds, SplitFractions::default(), 7).unwrap();
        let (b, _, _) = split(&ds, SplitFractions::default(), 8).unwrap();
        assert_ne!(ids(&a), ids(&b));
    }

    #[test]
    fn empty_split_rejected() {
        let ds = dataset(10);
        assert!(matches!(
            split(&ds, SplitFractions::new(0.5, 0.5, 0.0), 1),
            Err(Error::Split(_))
        ));
        assert!(matches!(
            split(&ds, SplitFractions::new(0.5, 0.4, 0.0), 1),
            Err(Error::Split(_))
        ));
    }

    #[test]
    fn train_split_is_standardized() {
        let ds = dataset(40);
        let (train, _, test) = split(&ds, SplitFractions::default(), 3).unwrap();
        let x = train.features().column(0);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 1e-12);
        // test uses train statistics, so its mean is generally not zero
        let ColumnKind::Numeric { mean: m_train, .. } = train.columns()[0].kind else {
            unreachable!()
        };
        let ColumnKind::Numeric { mean: m_test, .. } = test.columns()[0].kind else {
            unreachable!()
        };
        assert_eq!(m_train, m_test);
    }
}
