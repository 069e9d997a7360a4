use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::table::aggregate;
use super::RunRecord;
use crate::data::SensitiveFormat;
use crate::error::{Error, Result};
use crate::metrics::{FairnessNotion, LabelTarget, OutputType};

/// Mean (violation, performance) of one (method, strength) with its
/// standard-error ellipse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub method: String,
    pub strength: f64,
    pub n_seeds: usize,
    pub mean_violation: f64,
    pub mean_performance: f64,
    /// Sample covariance of the seed-level pairs divided by the seed count,
    /// as `[var_v, cov_vp, var_p]`; `None` with a single seed.
    pub covariance: Option<[f64; 3]>,
    /// Eigenvalues, larger first.
    pub eigenvalues: Option<[f64; 2]>,
    /// Orientation of the major axis in degrees, in (−90, 90].
    pub angle_deg: Option<f64>,
    /// Square roots of the eigenvalues.
    pub radii: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub notion: FairnessNotion,
    pub output_type: OutputType,
    pub format: SensitiveFormat,
    pub target: LabelTarget,
    pub points: Vec<TradeoffPoint>,
    pub warnings: Vec<String>,
}

/// Eigen-decomposition of the symmetric matrix [[a, b], [b, c]].
fn ellipse(a: f64, b: f64, c: f64) -> ([f64; 2], f64) {
    let mid = (a + c) / 2.0;
    let r = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let angle = if b == 0.0 && a >= c {
        0.0
    } else if b == 0.0 {
        90.0
    } else {
        0.5 * (2.0 * b).atan2(a - c).to_degrees()
    };
    ([mid + r, (mid - r).max(0.0)], angle)
}

/// One point per (method, strength), with covariance ellipses for plotting.
pub fn tradeoff_export(
    records: &[RunRecord],
    notion: FairnessNotion,
    output_type: OutputType,
    format: SensitiveFormat,
    target: LabelTarget,
) -> Result<TradeoffCurve> {
    let groups = aggregate(records, notion, output_type, format, target);
    if groups.is_empty() {
        return Err(Error::Table(format!(
            "no records for {} labels, format {format}, notion {notion}, output {}",
            target.as_str(),
            output_type.as_str()
        )));
    }
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for (method, strengths) in groups {
        for s in strengths {
            let n = s.n();
            let (mv, mp) = (s.mean_violation(), s.mean_performance());
            let mut point = TradeoffPoint {
                method: method.clone(),
                strength: s.strength,
                n_seeds: n,
                mean_violation: mv,
                mean_performance: mp,
                covariance: None,
                eigenvalues: None,
                angle_deg: None,
                radii: None,
            };
            if n < 2 {
                warnings.push(format!(
                    "{method} strength {}: single seed, covariance omitted",
                    s.strength
                ));
            } else {
                let scale = ((n - 1) * n) as f64;
                let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
                for (v, p) in s.violations.iter().zip(&s.performances) {
                    a += (v - mv) * (v - mv);
                    b += (v - mv) * (p - mp);
                    c += (p - mp) * (p - mp);
                }
                let (a, b, c) = (a / scale, b / scale, c / scale);
                let (eig, angle) = ellipse(a, b, c);
                point.covariance = Some([a, b, c]);
                point.eigenvalues = Some(eig);
                point.angle_deg = Some(angle);
                point.radii = Some([eig[0].sqrt(), eig[1].sqrt()]);
            }
            points.push(point);
        }
    }
    Ok(TradeoffCurve {
        notion,
        output_type,
        format,
        target,
        points,
        warnings,
    })
}

impl TradeoffCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,strength,n_seeds,mean_violation,mean_performance,cov_vv,cov_vp,cov_pp,\
             eig_major,eig_minor,angle_deg,radius_major,radius_minor\n",
        );
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                p.method,
                p.strength,
                p.n_seeds,
                p.mean_violation,
                p.mean_performance,
                opt(p.covariance.map(|c| c[0])),
                opt(p.covariance.map(|c| c[1])),
                opt(p.covariance.map(|c| c[2])),
                opt(p.eigenvalues.map(|e| e[0])),
                opt(p.eigenvalues.map(|e| e[1])),
                opt(p.angle_deg),
                opt(p.radii.map(|r| r[0])),
                opt(p.radii.map(|r| r[1])),
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pair_is_45_degrees() {
        // pairs (0,0), (2,2): sample covariance [[2,2],[2,2]], over n = 2
        let (eig, angle) = ellipse(1.0, 1.0, 1.0);
        assert!((angle - 45.0).abs() < 1e-12);
        assert!((eig[0] - 2.0).abs() < 1e-12 && eig[1].abs() < 1e-12);
    }

    #[test]
    fn axis_aligned() {
        assert_eq!(ellipse(2.0, 0.0, 1.0), ([2.0, 1.0], 0.0));
        assert_eq!(ellipse(1.0, 0.0, 2.0), ([2.0, 1.0], 90.0));
        assert_eq!(ellipse(0.0, 0.0, 0.0), ([0.0, 0.0], 0.0));
    }
}
