//! Fairness constraints measured against labels that were never biased.
//!
//! The training labels of the disadvantaged group have some positives
//! flipped to negative. A fairness penalty costs AUROC on those biased labels
//! yet raises accuracy on the clean labels.
//!
//! `cargo run --release --example dual_label_synergy`

use fairbench::bench::{aggregate, run_benchmark, DatasetSource, MethodName, MethodSpec, RunConfig};
use fairbench::data::DualLabelConfig;
use fairbench::metrics::LabelTarget;
use fairbench::{FairnessNotion, OutputType, SensitiveFormat};

fn main() -> fairbench::Result<()> {
    let mut cfg = RunConfig::new(
        DatasetSource::Synthetic(DualLabelConfig {
            n_samples: 20000,
            flip_rate_disadvantaged: 0.3,
            ..Default::default()
        }),
        vec![MethodSpec::new(MethodName::FairretNorm)],
    );
    cfg.model.train.learning_rate = 0.01;
    cfg.model.train.epochs = 20;
    cfg.model.train.batch_size = 256;
    cfg.formats = vec![SensitiveFormat::Binary];
    cfg.notions = vec![FairnessNotion::DemPar];
    let records = run_benchmark(&cfg)?;

    let slice = |output, target| aggregate(&records, FairnessNotion::DemPar, output, SensitiveFormat::Binary, target);
    let biased = slice(OutputType::Soft, LabelTarget::Biased);
    let clean = slice(OutputType::Hard, LabelTarget::Unbiased);
    println!("{:<14} {:>8} {:>14} {:>10} {:>14}", "method", "strength", "soft violation", "AUROC", "clean accuracy");
    for ((method, b), (_, c)) in biased.iter().zip(&clean) {
        for (sb, sc) in b.iter().zip(c) {
            println!(
                "{method:<14} {:>8} {:>14.4} {:>10.4} {:>14.4}",
                sb.strength,
                sb.mean_violation(),
                sb.mean_performance(),
                sc.mean_performance()
            );
        }
    }
    Ok(())
}
