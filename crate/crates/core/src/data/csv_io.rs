use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    bin_numeric_attribute, mean_std, AttributeKind, ColumnKind, FeatureColumn, Matrix,
    SensitiveAttribute, TabularDataset,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Feature,
    Sensitive,
    Label,
    UnbiasedLabel,
    Ignore,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    #[default]
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub role: ColumnRole,
    #[serde(rename = "type", default)]
    pub kind: ValueKind,
}

impl ColumnSpec {
    pub fn new(role: ColumnRole, kind: ValueKind) -> Self {
        ColumnSpec { role, kind }
    }
}

fn default_true() -> bool {
    true
}

/// Column-role map for CSV ingestion. Columns absent from the map are ignored.
///
/// ```json
/// {"columns": {"x1": {"role": "feature"},
///              "sex": {"role": "sensitive", "type": "categorical"},
///              "y": {"role": "label"}},
///  "include_sensitive": true}
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: BTreeMap<String, ColumnSpec>,
    /// Whether sensitive attributes are also one-hot encoded into the model input.
    #[serde(default = "default_true")]
    pub include_sensitive: bool,
}

impl Schema {
    pub fn new(columns: impl IntoIterator<Item = (String, ColumnSpec)>) -> Self {
        Schema {
            columns: columns.into_iter().collect(),
            include_sensitive: true,
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    fn with_role(&self, role: ColumnRole) -> impl Iterator<Item = (&String, &ColumnSpec)> {
        self.columns.iter().filter(move |(_, s)| s.role == role)
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<TabularDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_reader(file, schema)
}

fn parse_real(cell: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
        row,
        column: column.to_string(),
        message: format!("`{cell}` is not a real number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("`{cell}` is not finite"),
        });
    }
    Ok(v)
}

fn parse_label(cell: &str, row: usize, column: &str) -> Result<u8> {
    match parse_real(cell, row, column)? {
        v if v == 0.0 => Ok(0),
        v if v == 1.0 => Ok(1),
        _ => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("label `{cell}` is not 0 or 1"),
        }),
    }
}

fn categorical_codes(cells: &[String]) -> (Vec<String>, Vec<usize>) {
    let categories: Vec<String> = cells
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let codes = cells
        .iter()
        .map(|c| categories.binary_search(c).expect("category present"))
        .collect();
    (categories, codes)
}

pub fn load_csv_reader<R: Read>(reader: R, schema: &Schema) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    for name in schema.columns.keys() {
        if !headers.contains(name) {
            return Err(Error::Schema(format!("declared column `{name}` is missing from the CSV")));
        }
    }
    let label_cols: Vec<&String> = schema.with_role(ColumnRole::Label).map(|(n, _)| n).collect();
    let label_col = match label_cols.as_slice() {
        [one] => (*one).clone(),
        [] => return Err(Error::Schema("schema declares no label column".into())),
        _ => return Err(Error::Schema("schema declares more than one label column".into())),
    };
    let unbiased_col = schema
        .with_role(ColumnRole::UnbiasedLabel)
        .map(|(n, _)| n.clone())
        .next();

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            if j < cells.len() {
                cells[j].push(cell.to_string());
            }
        }
    }
    let n = cells.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::EmptyData("CSV contains no data rows".into()));
    }
    let col = |name: &str| -> &Vec<String> {
        let j = headers.iter().position(|h| h == name).expect("validated header");
        &cells[j]
    };
    for (name, spec) in &schema.columns {
        if spec.role != ColumnRole::Ignore {
            if let Some(row) = col(name).iter().position(|c| c.trim().is_empty()) {
                return Err(Error::Parse {
                    row,
                    column: name.clone(),
                    message: "missing value".into(),
                });
            }
        }
    }

    let labels = col(&label_col)
        .iter()
        .enumerate()
        .map(|(i, c)| parse_label(c, i, &label_col))
        .collect::<Result<Vec<_>>>()?;
    let unbiased_labels = unbiased_col
        .map(|name| {
            col(&name)
                .iter()
                .enumerate()
                .map(|(i, c)| parse_label(c, i, &name))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;

    // Feature and sensitive columns follow CSV header order.
    let mut columns_out: Vec<FeatureColumn> = Vec::new();
    let mut feature_values: Vec<Vec<f64>> = Vec::new();
    let mut sensitive = Vec::new();
    for name in &headers {
        let Some(spec) = schema.columns.get(name) else {
            continue;
        };
        match (spec.role, spec.kind) {
            (ColumnRole::Feature, ValueKind::Numeric) => {
                let raw = col(name)
                    .iter()
                    .enumerate()
                    .map(|(i, c)| parse_real(c, i, name))
                    .collect::<Result<Vec<_>>>()?;
                let (mean, std) = mean_std(&raw);
                feature_values.push(raw.iter().map(|v| (v - mean) / std).collect());
                columns_out.push(FeatureColumn {
                    name: name.clone(),
                    kind: ColumnKind::Numeric { mean, std },
                });
            }
            (ColumnRole::Feature, ValueKind::Categorical) => {
                let trimmed: Vec<String> = col(name).iter().map(|c| c.trim().to_string()).collect();
                let (categories, codes) = categorical_codes(&trimmed);
                for (k, category) in categories.iter().enumerate() {
                    feature_values.push(codes.iter().map(|&c| f64::from(u8::from(c == k))).collect());
                    columns_out.push(FeatureColumn {
                        name: format!("{name}={category}"),
                        kind: ColumnKind::Category {
                            source: name.clone(),
                            category: category.clone(),
                        },
                    });
                }
            }
            (ColumnRole::Sensitive, ValueKind::Categorical) => {
                let trimmed: Vec<String> = col(name).iter().map(|c| c.trim().to_string()).collect();
                let (categories, codes) = categorical_codes(&trimmed);
                sensitive.push(SensitiveAttribute {
                    name: name.clone(),
                    kind: AttributeKind::Categorical,
                    categories,
                    codes,
                });
            }
            (ColumnRole::Sensitive, ValueKind::Numeric) => {
                let raw = col(name)
                    .iter()
                    .enumerate()
                    .map(|(i, c)| parse_real(c, i, name))
                    .collect::<Result<Vec<_>>>()?;
                sensitive.push(SensitiveAttribute {
                    name: name.clone(),
                    kind: AttributeKind::Numeric,
                    categories: vec!["0".into(), "1".into()],
                    codes: bin_numeric_attribute(&raw),
                });
            }
            _ => {}
        }
    }

    if schema.include_sensitive {
        append_sensitive_columns(&sensitive, &mut columns_out, &mut feature_values);
    }

    let mut data = Vec::with_capacity(n * feature_values.len());
    for i in 0..n {
        data.extend(feature_values.iter().map(|c| c[i]));
    }
    let features = Matrix::from_vec(n, feature_values.len(), data)?;
    TabularDataset::new(features, columns_out, labels, unbiased_labels, sensitive, None)
}

pub(crate) fn append_sensitive_columns(
    sensitive: &[SensitiveAttribute],
    columns: &mut Vec<FeatureColumn>,
    values: &mut Vec<Vec<f64>>,
) {
    for (a, attr) in sensitive.iter().enumerate() {
        for (k, category) in attr.categories.iter().enumerate() {
            values.push(attr.codes.iter().map(|&c| f64::from(u8::from(c == k))).collect());
            columns.push(FeatureColumn {
                name: format!("{}={}", attr.name, category),
                kind: ColumnKind::Sensitive {
                    attribute: a,
                    category: k,
                },
            });
        }
    }
}

/// Writes `dataset` as a CSV in raw units and returns the schema that
/// reloads it. Numeric features are de-standardized, one-hot groups collapse
/// back to their category, and binned numeric sensitive attributes are
/// written as their 0/1 code. Sample weights are not written.
pub fn write_csv(dataset: &TabularDataset, path: impl AsRef<Path>) -> Result<Schema> {
    let path = path.as_ref();
    let mut header: Vec<String> = Vec::new();
    let mut specs: Vec<(String, ColumnSpec)> = Vec::new();
    let mut writers: Vec<Box<dyn Fn(usize) -> String + '_>> = Vec::new();

    let mut seen_sources = BTreeSet::new();
    for (j, column) in dataset.columns().iter().enumerate() {
        match &column.kind {
            ColumnKind::Numeric { mean, std } => {
                let (mean, std) = (*mean, *std);
                header.push(column.name.clone());
                specs.push((column.name.clone(), ColumnSpec::new(ColumnRole::Feature, ValueKind::Numeric)));
                writers.push(Box::new(move |i| {
                    format!("{:e}", dataset.features().get(i, j) * std + mean)
                }));
            }
            ColumnKind::Category { source, .. } => {
                if !seen_sources.insert(source.clone()) {
                    continue;
                }
                let members: Vec<(usize, String)> = dataset
                    .columns()
                    .iter()
                    .enumerate()
                    .filter_map(|(k, c)| match &c.kind {
                        ColumnKind::Category { source: s, category } if s == source => {
                            Some((k, category.clone()))
                        }
                        _ => None,
                    })
                    .collect();
                header.push(source.clone());
                specs.push((source.clone(), ColumnSpec::new(ColumnRole::Feature, ValueKind::Categorical)));
                writers.push(Box::new(move |i| {
                    members
                        .iter()
                        .find(|(k, _)| dataset.features().get(i, *k) > 0.5)
                        .map(|(_, c)| c.clone())
                        .unwrap_or_default()
                }));
            }
            ColumnKind::Sensitive { .. } => {}
        }
    }
    for attr in dataset.sensitive() {
        header.push(attr.name.clone());
        let kind = match attr.kind {
            AttributeKind::Categorical => ValueKind::Categorical,
            AttributeKind::Numeric => ValueKind::Numeric,
        };
        specs.push((attr.name.clone(), ColumnSpec::new(ColumnRole::Sensitive, kind)));
        writers.push(Box::new(move |i| match attr.kind {
            AttributeKind::Categorical => attr.categories[attr.codes[i]].clone(),
            AttributeKind::Numeric => attr.codes[i].to_string(),
        }));
    }
    let label_name = unique_name("label", &header);
    header.push(label_name.clone());
    specs.push((label_name, ColumnSpec::new(ColumnRole::Label, ValueKind::Numeric)));
    writers.push(Box::new(|i| dataset.labels()[i].to_string()));
    if let Some(unbiased) = dataset.unbiased_labels() {
        let name = unique_name("unbiased_label", &header);
        header.push(name.clone());
        specs.push((name, ColumnSpec::new(ColumnRole::UnbiasedLabel, ValueKind::Numeric)));
        writers.push(Box::new(move |i| unbiased[i].to_string()));
    }

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&header)?;
        for i in 0..dataset.len() {
            w.write_record(writers.iter().map(|f| f(i)))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;

    let include_sensitive = dataset
        .columns()
        .iter()
        .any(|c| matches!(c.kind, ColumnKind::Sensitive { .. }));
    Ok(Schema {
        columns: specs.into_iter().collect(),
        include_sensitive,
    })
}

fn unique_name(base: &str, taken: &[String]) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(cols: &[(&str, ColumnRole, ValueKind)]) -> Schema {
        Schema::new(
            cols.iter()
                .map(|(n, r, k)| (n.to_string(), ColumnSpec::new(*r, *k))),
        )
    }

    #[test]
    fn loads_and_standardizes() {
        let csv = "x1,sex,y\n1,M,0\n2,F,1\n3,M,1\n4,F,0\n";
        let s = schema(&[
            ("x1", ColumnRole::Feature, ValueKind::Numeric),
            ("sex", ColumnRole::Sensitive, ValueKind::Categorical),
            ("y", ColumnRole::Label, ValueKind::Numeric),
        ]);
        let ds = load_csv_reader(csv.as_bytes(), &s).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.sensitive().len(), 1);
        assert_eq!(ds.sensitive()[0].categories, vec!["F", "M"]);
        assert_eq!(ds.sensitive()[0].codes, vec![1, 0, 1, 0]);
        let x1 = ds.features().column(0);
        let mean: f64 = x1.iter().sum::<f64>() / 4.0;
        let var: f64 = x1.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        // x1 + sex=F + sex=M
        assert_eq!(ds.n_features(), 3);
    }

    #[test]
    fn numeric_sensitive_binned_at_mean() {
        let csv = "x,age,y\n0,20,0\n0,30,1\n0,40,0\n0,50,1\n";
        let s = schema(&[
            ("x", ColumnRole::Feature, ValueKind::Numeric),
            ("age", ColumnRole::Sensitive, ValueKind::Numeric),
            ("y", ColumnRole::Label, ValueKind::Numeric),
        ]);
        let ds = load_csv_reader(csv.as_bytes(), &s).unwrap();
        assert_eq!(ds.sensitive()[0].codes, vec![0, 0, 1, 1]);
    }

    #[test]
    fn missing_label_column_is_schema_error() {
        let csv = "x,sex\n1,M\n";
        let s = schema(&[
            ("x", ColumnRole::Feature, ValueKind::Numeric),
            ("sex", ColumnRole::Sensitive, ValueKind::Categorical),
            ("y", ColumnRole::Label, ValueKind::Numeric),
        ]);
        match load_csv_reader(csv.as_bytes(), &s) {
            Err(Error::Schema(msg)) => assert!(msg.contains("`y`")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn unparseable_cell_reports_row() {
        let csv = "x,y\n1,0\nfoo,1\n";
        let s = schema(&[
            ("x", ColumnRole::Feature, ValueKind::Numeric),
            ("y", ColumnRole::Label, ValueKind::Numeric),
        ]);
        match load_csv_reader(csv.as_bytes(), &s) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "x");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_data() {
        let s = schema(&[("y", ColumnRole::Label, ValueKind::Numeric)]);
        assert!(matches!(
            load_csv_reader("y\n".as_bytes(), &s),
            Err(Error::EmptyData(_))
        ));
    }

    #[test]
    fn categorical_feature_one_hot() {
        let csv = "c,y\nb,0\na,1\nb,1\n";
        let s = schema(&[
            ("c", ColumnRole::Feature, ValueKind::Categorical),
            ("y", ColumnRole::Label, ValueKind::Numeric),
        ]);
        let ds = load_csv_reader(csv.as_bytes(), &s).unwrap();
        assert_eq!(ds.feature_names(), vec!["c=a", "c=b"]);
        assert_eq!(ds.features().column(0), vec![0.0, 1.0, 0.0]);
    }
}
