use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{RunRecord, RunStatus};
use crate::data::SensitiveFormat;
use crate::error::{Error, Result};
use crate::metrics::{FairnessNotion, LabelTarget, OutputType};

/// Violation bounds `[k'/4, k'/2, k']` from the naive violation `k'`.
pub fn infer_k(naive_violation: f64) -> Result<Vec<f64>> {
    if !(naive_violation.is_finite() && naive_violation > 0.0) {
        return Err(Error::InferK(naive_violation));
    }
    Ok(vec![naive_violation / 4.0, naive_violation / 2.0, naive_violation])
}

/// Seed-level outcomes of one (method, strength) for one table slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrengthSummary {
    pub strength: f64,
    pub violations: Vec<f64>,
    pub performances: Vec<f64>,
}

impl StrengthSummary {
    pub fn n(&self) -> usize {
        self.violations.len()
    }

    pub fn mean_violation(&self) -> f64 {
        mean(&self.violations)
    }

    pub fn mean_performance(&self) -> f64 {
        mean(&self.performances)
    }

    /// Sample standard deviation over √n; `None` for a single seed.
    pub fn performance_se(&self) -> Option<f64> {
        let n = self.performances.len();
        if n < 2 {
            return None;
        }
        let m = self.mean_performance();
        let var = self.performances.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        Some((var / n as f64).sqrt())
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Groups successful records by method (in first-appearance order) and
/// strength (ascending), keeping seeds where both violation and performance
/// are defined.
pub fn aggregate(
    records: &[RunRecord],
    notion: FairnessNotion,
    output_type: OutputType,
    format: SensitiveFormat,
    target: LabelTarget,
) -> Vec<(String, Vec<StrengthSummary>)> {
    let mut out: Vec<(String, Vec<StrengthSummary>)> = Vec::new();
    for r in records.iter().filter(|r| r.status == RunStatus::Ok) {
        let Some(cell) = r.report.as_ref().and_then(|rep| rep.cell(target, format, notion, output_type)) else {
            continue;
        };
        let (Some(v), Some(p)) = (cell.violation, cell.performance) else {
            continue;
        };
        let idx = match out.iter().position(|(m, _)| *m == r.method) {
            Some(i) => i,
            None => {
                out.push((r.method.clone(), Vec::new()));
                out.len() - 1
            }
        };
        let strengths = &mut out[idx].1;
        match strengths.iter_mut().find(|s| s.strength == r.strength) {
            Some(s) => {
                s.violations.push(v);
                s.performances.push(p);
            }
            None => strengths.push(StrengthSummary {
                strength: r.strength,
                violations: vec![v],
                performances: vec![p],
            }),
        }
    }
    for (_, s) in &mut out {
        s.sort_by(|a, b| a.strength.total_cmp(&b.strength));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    pub notion: FairnessNotion,
    pub output_type: OutputType,
    pub target: LabelTarget,
    /// Each format with its bounds; `None` infers them from the naive violation.
    pub formats: Vec<(SensitiveFormat, Option<Vec<f64>>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub strength: f64,
    pub mean_violation: f64,
    pub mean_performance: f64,
    pub se: Option<f64>,
    pub n_seeds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: String,
    /// One entry per k; `None` when no strength tried stays under k.
    pub cells: Vec<Option<TableCell>>,
    /// Smallest mean violation reached by any strength.
    pub min_violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormatBlock {
    pub format: SensitiveFormat,
    pub naive_violation: Option<f64>,
    pub ks: Vec<f64>,
    pub rows: Vec<TableRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceTable {
    pub notion: FairnessNotion,
    pub output_type: OutputType,
    pub target: LabelTarget,
    pub blocks: Vec<FormatBlock>,
}

/// Best mean performance among strengths whose mean violation is ≤ k.
fn best_under(strengths: &[StrengthSummary], k: f64) -> Option<TableCell> {
    let mut best: Option<&StrengthSummary> = None;
    for s in strengths.iter().filter(|s| s.mean_violation() <= k) {
        if best.is_none_or(|b| s.mean_performance() > b.mean_performance()) {
            best = Some(s);
        }
    }
    best.map(|s| TableCell {
        strength: s.strength,
        mean_violation: s.mean_violation(),
        mean_performance: s.mean_performance(),
        se: s.performance_se(),
        n_seeds: s.n(),
    })
}

/// Maximal mean performance per (format, k, method) under a mean-violation bound.
pub fn performance_table(records: &[RunRecord], spec: &TableSpec) -> Result<PerformanceTable> {
    if spec.formats.is_empty() {
        return Err(Error::Table("no formats requested".into()));
    }
    let mut gaps = Vec::new();
    let mut blocks = Vec::new();
    for (format, ks) in &spec.formats {
        let groups = aggregate(records, spec.notion, spec.output_type, *format, spec.target);
        if groups.is_empty() {
            gaps.push(format!(
                "no records for {} labels, format {format}, notion {}, output {}",
                spec.target.as_str(),
                spec.notion,
                spec.output_type.as_str()
            ));
            continue;
        }
        let naive_violation = groups
            .iter()
            .find(|(m, _)| m == "naive")
            .and_then(|(_, s)| s.first())
            .map(StrengthSummary::mean_violation);
        let ks = match ks {
            Some(ks) => {
                if ks.is_empty() || ks.iter().any(|k| !(k.is_finite() && *k > 0.0)) || ks.windows(2).any(|w| w[0] > w[1]) {
                    return Err(Error::Table(format!("k values must be positive and ascending, got {ks:?}")));
                }
                ks.clone()
            }
            None => match naive_violation {
                Some(v) => infer_k(v)?,
                None => {
                    gaps.push(format!("no naive records to infer k for format {format}"));
                    continue;
                }
            },
        };
        let rows = groups
            .iter()
            .map(|(method, strengths)| TableRow {
                method: method.clone(),
                cells: ks.iter().map(|&k| best_under(strengths, k)).collect(),
                min_violation: strengths.iter().map(StrengthSummary::mean_violation).fold(f64::INFINITY, f64::min),
            })
            .collect();
        blocks.push(FormatBlock {
            format: *format,
            naive_violation,
            ks,
            rows,
        });
    }
    if !gaps.is_empty() {
        return Err(Error::Table(gaps.join("; ")));
    }
    Ok(PerformanceTable {
        notion: spec.notion,
        output_type: spec.output_type,
        target: spec.target,
        blocks,
    })
}

/// Formats with 4 significant digits.
pub fn format_sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.3}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

impl PerformanceTable {
    /// Flat CSV with full precision; `-` marks cells without a qualifying strength.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "format,naive_violation,k,method,strength,mean_violation,mean_performance,se,n_seeds,min_violation\n",
        );
        for b in &self.blocks {
            let naive = b.naive_violation.map_or(String::new(), |v| v.to_string());
            for (j, k) in b.ks.iter().enumerate() {
                for row in &b.rows {
                    let _ = write!(out, "{},{naive},{k},{},", b.format, row.method);
                    match &row.cells[j] {
                        Some(c) => {
                            let se = c.se.map_or(String::new(), |s| s.to_string());
                            let _ = write!(
                                out,
                                "{},{},{},{se},{}",
                                c.strength, c.mean_violation, c.mean_performance, c.n_seeds
                            );
                        }
                        None => out.push_str("-,-,-,-,-"),
                    }
                    let _ = writeln!(out, ",{}", row.min_violation);
                }
            }
        }
        out
    }

    /// Aligned plain-text rendering, numbers to 4 significant digits.
    pub fn to_text(&self) -> String {
        let metric = match self.output_type {
            OutputType::Hard => "accuracy",
            OutputType::Soft => "AUROC",
        };
        let mut out = format!(
            "max {metric} with mean {} violation <= k ({} labels, {} output)\n",
            self.notion,
            self.target.as_str(),
            self.output_type.as_str()
        );
        for b in &self.blocks {
            let naive = b.naive_violation.map_or("n/a".to_string(), format_sig4);
            let _ = writeln!(out, "\n{} (naive violation {naive})", b.format);
            let mut grid: Vec<Vec<String>> = Vec::new();
            let mut header = vec!["method".to_string()];
            header.extend(b.ks.iter().map(|k| format!("k={}", format_sig4(*k))));
            grid.push(header);
            for row in &b.rows {
                let mut line = vec![row.method.clone()];
                line.extend(row.cells.iter().map(|c| match c {
                    Some(c) => match c.se {
                        Some(se) => format!("{} ± {}", format_sig4(c.mean_performance), format_sig4(se)),
                        None => format_sig4(c.mean_performance),
                    },
                    None => "-".to_string(),
                }));
                grid.push(line);
            }
            let widths: Vec<usize> = (0..grid[0].len())
                .map(|j| grid.iter().map(|l| l[j].chars().count()).max().unwrap_or(0))
                .collect();
            for line in grid {
                let cells: Vec<String> = line
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                    .collect();
                let _ = writeln!(out, "{}", cells.join("  ").trim_end());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(strength: f64, v: f64, p: f64) -> StrengthSummary {
        StrengthSummary {
            strength,
            violations: vec![v],
            performances: vec![p],
        }
    }

    #[test]
    fn infer_k_values() {
        assert_eq!(infer_k(0.048).unwrap(), vec![0.012, 0.024, 0.048]);
        assert_eq!(infer_k(1.0).unwrap(), vec![0.25, 0.5, 1.0]);
        assert!(matches!(infer_k(0.0), Err(Error::InferK(_))));
    }

    #[test]
    fn filter_then_max() {
        let s = [summary(0.1, 0.05, 0.80), summary(1.0, 0.01, 0.70)];
        assert_eq!(best_under(&s, 0.03).unwrap().mean_performance, 0.70);
        assert_eq!(best_under(&s, 0.06).unwrap().mean_performance, 0.80);
        assert!(best_under(&s, 0.005).is_none());
    }

    #[test]
    fn standard_error() {
        let s = StrengthSummary {
            strength: 0.0,
            violations: vec![0.0; 4],
            performances: vec![1.0, 2.0, 3.0, 4.0],
        };
        // sample sd = sqrt(5/3)
        assert!((s.performance_se().unwrap() - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn sig4_formatting() {
        assert_eq!(format_sig4(0.048), "0.04800");
        assert_eq!(format_sig4(0.81234), "0.8123");
        assert_eq!(format_sig4(12.3456), "12.35");
        assert_eq!(format_sig4(0.0), "0.000");
    }
}
