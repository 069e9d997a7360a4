use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Matrix, TabularDataset};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensitiveFormat {
    Binary,
    Intersectional,
    Parallel,
}

impl SensitiveFormat {
    pub const ALL: [SensitiveFormat; 3] = [
        SensitiveFormat::Binary,
        SensitiveFormat::Intersectional,
        SensitiveFormat::Parallel,
    ];

    pub const TOKENS: [&'static str; 3] = ["binary", "intersectional", "parallel"];

    pub fn as_str(self) -> &'static str {
        match self {
            SensitiveFormat::Binary => "binary",
            SensitiveFormat::Intersectional => "intersectional",
            SensitiveFormat::Parallel => "parallel",
        }
    }
}

impl fmt::Display for SensitiveFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensitiveFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown sensitive format `{s}`; valid options are {:?}", Self::TOKENS))
    }
}

/// Group-indicator matrix for one sensitive-feature format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitiveEncoding {
    pub format: SensitiveFormat,
    /// n×G indicators in {0, 1}.
    pub indicators: Matrix,
    pub group_names: Vec<String>,
    /// Contiguous column ranges, one per sensitive axis.
    pub axes: Vec<Range<usize>>,
    /// For each column, the (attribute, category) pairs that define it.
    pub group_keys: Vec<Vec<(usize, usize)>>,
}

impl SensitiveEncoding {
    pub fn n_groups(&self) -> usize {
        self.indicators.cols()
    }

    pub fn len(&self) -> usize {
        self.indicators.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when every row belongs to exactly one group.
    pub fn is_partition(&self) -> bool {
        self.axes.len() == 1
    }

    /// Group index of every row, for binary and intersectional encodings.
    pub fn group_index(&self) -> Result<Vec<usize>> {
        if !self.is_partition() {
            return Err(Error::Format(format!(
                "`{}` encoding does not assign a unique group per sample",
                self.format
            )));
        }
        (0..self.len())
            .map(|i| {
                self.indicators
                    .row(i)
                    .iter()
                    .position(|&v| v > 0.5)
                    .ok_or_else(|| Error::Format(format!("row {i} belongs to no group")))
            })
            .collect()
    }

    /// Restricts the encoding to a subset of rows (groups kept as is).
    pub fn select_rows(&self, indices: &[usize]) -> SensitiveEncoding {
        SensitiveEncoding {
            indicators: self.indicators.select_rows(indices),
            ..self.clone()
        }
    }

    /// Builds a partition encoding directly from group assignments.
    pub fn from_groups(groups: &[usize], group_names: Vec<String>) -> Result<SensitiveEncoding> {
        let g = group_names.len();
        let mut indicators = Matrix::zeros(groups.len(), g);
        for (i, &q) in groups.iter().enumerate() {
            if q >= g {
                return Err(Error::Format(format!("group {q} out of range for {g} groups")));
            }
            indicators.set(i, q, 1.0);
        }
        Ok(SensitiveEncoding {
            format: if g == 2 {
                SensitiveFormat::Binary
            } else {
                SensitiveFormat::Intersectional
            },
            indicators,
            group_names,
            axes: vec![0..g],
            group_keys: (0..g).map(|q| vec![(0, q)]).collect(),
        })
    }
}

fn group_name(dataset: &TabularDataset, key: &[(usize, usize)]) -> String {
    key.iter()
        .map(|&(a, c)| {
            let attr = &dataset.sensitive()[a];
            format!("{}={}", attr.name, attr.categories[c])
        })
        .collect::<Vec<_>>()
        .join("&")
}

/// Encodes the dataset's sensitive attributes in `format`.
///
/// Binary uses attribute `binary_attr`, which must have exactly two observed
/// categories. Intersectional one-hot encodes the observed category tuples
/// (unobserved intersections are dropped). Parallel concatenates one block
/// per attribute over the attribute's full domain.
pub fn encode_sensitive(
    dataset: &TabularDataset,
    format: SensitiveFormat,
    binary_attr: usize,
) -> Result<SensitiveEncoding> {
    let n = dataset.len();
    let attrs = dataset.sensitive();
    if attrs.is_empty() {
        return Err(Error::Format("dataset has no sensitive attributes".into()));
    }
    let (keys, axes): (Vec<Vec<(usize, usize)>>, Vec<Range<usize>>) = match format {
        SensitiveFormat::Binary => {
            let attr = attrs.get(binary_attr).ok_or_else(|| {
                Error::Format(format!("binary attribute index {binary_attr} out of range"))
            })?;
            let observed = attr.observed();
            if observed.len() != 2 {
                return Err(Error::Format(format!(
                    "binary format needs exactly 2 observed categories of `{}`, found {}",
                    attr.name,
                    observed.len()
                )));
            }
            (observed.iter().map(|&c| vec![(binary_attr, c)]).collect(), vec![0..2])
        }
        SensitiveFormat::Intersectional => {
            let mut tuples: BTreeMap<Vec<usize>, ()> = BTreeMap::new();
            for i in 0..n {
                tuples.insert(attrs.iter().map(|a| a.codes[i]).collect(), ());
            }
            let keys: Vec<Vec<(usize, usize)>> = tuples
                .into_keys()
                .map(|t| t.into_iter().enumerate().collect())
                .collect();
            let g = keys.len();
            (keys, vec![0..g])
        }
        SensitiveFormat::Parallel => {
            let mut keys = Vec::new();
            let mut axes = Vec::new();
            for (a, attr) in attrs.iter().enumerate() {
                let start = keys.len();
                keys.extend((0..attr.domain_size()).map(|c| vec![(a, c)]));
                axes.push(start..keys.len());
            }
            (keys, axes)
        }
    };

    let mut indicators = Matrix::zeros(n, keys.len());
    for (q, key) in keys.iter().enumerate() {
        for i in 0..n {
            if key.iter().all(|&(a, c)| attrs[a].codes[i] == c) {
                indicators.set(i, q, 1.0);
            }
        }
    }
    Ok(SensitiveEncoding {
        format,
        indicators,
        group_names: keys.iter().map(|k| group_name(dataset, k)).collect(),
        axes,
        group_keys: keys,
    })
}
