use serde::{Deserialize, Serialize};

use super::{accuracy, auroc, harden, statistic, violation, FairnessNotion, OutputType};
use crate::data::{SensitiveEncoding, SensitiveFormat, TabularDataset};
use crate::error::{Error, Result};

/// Which labels a report section is measured against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelTarget {
    Biased,
    Unbiased,
}

impl LabelTarget {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelTarget::Biased => "biased",
            LabelTarget::Unbiased => "unbiased",
        }
    }
}

impl std::str::FromStr for LabelTarget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "biased" => Ok(LabelTarget::Biased),
            "unbiased" => Ok(LabelTarget::Unbiased),
            _ => Err(format!("unknown label target `{s}`; valid options are [\"biased\", \"unbiased\"]")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub format: SensitiveFormat,
    pub notion: FairnessNotion,
    pub output_type: OutputType,
    pub violation: Option<f64>,
    /// Accuracy for hard output, AUROC for soft output.
    pub performance: Option<f64>,
    pub group_names: Vec<String>,
    pub gamma: Vec<Option<f64>>,
    pub gamma_mean: Option<f64>,
    pub skipped_groups: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelSection {
    pub target: LabelTarget,
    pub accuracy: Option<f64>,
    pub auroc: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
    pub cells: Vec<ReportCell>,
}

impl LabelSection {
    pub fn performance(&self, output_type: OutputType) -> Option<f64> {
        match output_type {
            OutputType::Hard => self.accuracy,
            OutputType::Soft => self.auroc,
        }
    }
}

/// Violations and performance for every (format, notion, output type),
/// against the biased labels and, when available, the unbiased labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub sections: Vec<LabelSection>,
}

impl EvaluationReport {
    pub fn section(&self, target: LabelTarget) -> Option<&LabelSection> {
        self.sections.iter().find(|s| s.target == target)
    }

    pub fn cell(
        &self,
        target: LabelTarget,
        format: SensitiveFormat,
        notion: FairnessNotion,
        output_type: OutputType,
    ) -> Option<&ReportCell> {
        self.section(target)?
            .cells
            .iter()
            .find(|c| c.format == format && c.notion == notion && c.output_type == output_type)
    }
}

fn section(
    target: LabelTarget,
    scores: &[f64],
    labels: &[u8],
    weights: &[f64],
    encodings: &[SensitiveEncoding],
    notions: &[FairnessNotion],
) -> LabelSection {
    let hard = harden(scores);
    let mut errors = Vec::new();
    let acc = accuracy(&hard, labels, Some(weights))
        .map_err(|e| errors.push(format!("accuracy: {e}")))
        .ok();
    let auc = auroc(scores, labels, Some(weights))
        .map_err(|e| errors.push(format!("auroc: {e}")))
        .ok();

    let mut cells = Vec::with_capacity(encodings.len() * notions.len() * 2);
    for enc in encodings {
        for &notion in notions {
            for output_type in OutputType::ALL {
                let preds = match output_type {
                    OutputType::Hard => &hard,
                    OutputType::Soft => scores,
                };
                let performance = match output_type {
                    OutputType::Hard => acc,
                    OutputType::Soft => auc,
                };
                let mut cell = ReportCell {
                    format: enc.format,
                    notion,
                    output_type,
                    violation: None,
                    performance,
                    group_names: enc.group_names.clone(),
                    gamma: Vec::new(),
                    gamma_mean: None,
                    skipped_groups: 0,
                    error: None,
                };
                match statistic(notion, preds, labels, Some(weights), enc) {
                    Ok(stats) => {
                        cell.gamma = stats
                            .gamma
                            .iter()
                            .zip(&stats.defined)
                            .map(|(&g, &ok)| ok.then_some(g))
                            .collect();
                        cell.gamma_mean = Some(stats.gamma_mean);
                        match violation(&stats) {
                            Ok(v) => {
                                cell.violation = Some(v.value);
                                cell.skipped_groups = v.skipped_groups;
                            }
                            Err(e) => cell.error = Some(e.to_string()),
                        }
                    }
                    Err(e) => cell.error = Some(e.to_string()),
                }
                cells.push(cell);
            }
        }
    }
    LabelSection {
        target,
        accuracy: acc,
        auroc: auc,
        errors,
        cells,
    }
}

/// Evaluates `scores` on `dataset` for every encoding and notion. Failures of
/// individual cells are recorded in the cell rather than aborting.
pub fn evaluate(
    scores: &[f64],
    dataset: &TabularDataset,
    encodings: &[SensitiveEncoding],
    notions: &[FairnessNotion],
) -> Result<EvaluationReport> {
    if scores.len() != dataset.len() {
        return Err(Error::Shape {
            expected: dataset.len(),
            actual: scores.len(),
        });
    }
    if encodings.is_empty() {
        return Err(Error::Config("evaluate needs at least one encoding".into()));
    }
    if let Some(enc) = encodings.iter().find(|e| e.len() != dataset.len()) {
        return Err(Error::Shape {
            expected: dataset.len(),
            actual: enc.len(),
        });
    }
    let mut sections = vec![section(
        LabelTarget::Biased,
        scores,
        dataset.labels(),
        dataset.weights(),
        encodings,
        notions,
    )];
    if let Some(unbiased) = dataset.unbiased_labels() {
        sections.push(section(
            LabelTarget::Unbiased,
            scores,
            unbiased,
            dataset.weights(),
            encodings,
            notions,
        ));
    }
    Ok(EvaluationReport { sections })
}
