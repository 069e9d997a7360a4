//! Reductions training: an ensemble of reweighted classifiers whose
//! randomized prediction keeps the demographic parity gap within a slack.
//!
//! `cargo run --release --example exponentiated_gradient`

use fairbench::data::{encode_sensitive, generate_dual_label, DualLabelConfig};
use fairbench::inmethods::{absolute_gap, exponentiated_gradient, EgConfig};
use fairbench::metrics::harden;
use fairbench::model::{init_scorer, train};
use fairbench::{FairnessNotion, SensitiveFormat, TrainConfig};

fn main() -> fairbench::Result<()> {
    let data = generate_dual_label(&DualLabelConfig {
        n_samples: 2000,
        flip_rate_disadvantaged: 0.8,
        ..Default::default()
    })?;
    let enc = encode_sensitive(&data, SensitiveFormat::Binary, 0)?;
    let tc = TrainConfig {
        learning_rate: 0.01,
        epochs: 20,
        ..Default::default()
    };

    let naive = train(&init_scorer(data.n_features(), &[], 0)?, &data, &tc, None)?;
    let gap = absolute_gap(FairnessNotion::DemPar, &harden(&naive.forward(data.features())?), data.labels(), None, &enc)?;
    println!("naive classifier gap {gap:.4}");

    for slack in [0.1, 0.05, 0.02] {
        let cfg = EgConfig {
            notion: FairnessNotion::DemPar,
            slack,
            train: tc.clone(),
            ..Default::default()
        };
        let ens = exponentiated_gradient(&data, &enc, &cfg)?;
        let p = ens.predict_scores(data.features())?;
        println!(
            "slack {slack:<5} ensemble gap {:.4}  members {}  final multipliers {:.3?}",
            absolute_gap(FairnessNotion::DemPar, &p, data.labels(), None, &enc)?,
            ens.members.len(),
            ens.trace.multipliers.last().unwrap()
        );
    }
    Ok(())
}
