//! Group statistics, violations and the full evaluation report for a
//! hand-written set of scores.
//!
//! `cargo run --example evaluate_metrics`

use fairbench::data::{load_csv_reader, ColumnRole, ColumnSpec, Schema, ValueKind};
use fairbench::metrics::{accuracy, auroc, evaluate, harden, statistic, violation};
use fairbench::{FairnessNotion, SensitiveFormat};

const CSV: &str = "\
score,sex,label
0.91,f,1
0.35,f,1
0.62,f,0
0.15,f,0
0.88,m,1
0.77,m,1
0.71,m,0
0.45,m,0
0.52,m,1
0.08,f,0
";

fn main() -> fairbench::Result<()> {
    let schema = Schema::new([
        ("score".to_string(), ColumnSpec::new(ColumnRole::Feature, ValueKind::Numeric)),
        ("sex".to_string(), ColumnSpec::new(ColumnRole::Sensitive, ValueKind::Categorical)),
        ("label".to_string(), ColumnSpec::new(ColumnRole::Label, ValueKind::Numeric)),
    ]);
    let data = load_csv_reader(CSV.as_bytes(), &schema)?;
    let scores: Vec<f64> = CSV.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    let enc = fairbench::data::encode_sensitive(&data, SensitiveFormat::Binary, 0)?;

    println!("accuracy {:.3}", accuracy(&harden(&scores), data.labels(), None)?);
    println!("AUROC    {:.3}\n", auroc(&scores, data.labels(), None)?);

    println!("{:<12} {:>8} {:>8} {:>8} {:>10}", "notion", enc.group_names[0], enc.group_names[1], "overall", "violation");
    for notion in FairnessNotion::ALL {
        let stats = statistic(notion, &scores, data.labels(), None, &enc)?;
        let v = violation(&stats).map_or("undefined".to_string(), |v| format!("{:.4}", v.value));
        println!(
            "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>10}",
            notion.as_str(),
            stats.gamma[0],
            stats.gamma[1],
            stats.gamma_mean,
            v
        );
    }

    let report = evaluate(&scores, &data, &[enc], &[FairnessNotion::DemPar, FairnessNotion::EqOpp])?;
    println!("\nreport as JSON:\n{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(())
}
