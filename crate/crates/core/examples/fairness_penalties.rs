//! Training with the fairret norm and prejudice remover penalties.
//!
//! `cargo run --release --example fairness_penalties`

use fairbench::data::{encode_sensitive, generate_dual_label, split, DualLabelConfig, SplitFractions};
use fairbench::inmethods::{BoundPenalty, PenaltyKind};
use fairbench::metrics::{accuracy, harden, statistic, violation};
use fairbench::model::{init_scorer, train};
use fairbench::{FairnessNotion, SensitiveFormat, TrainConfig};

fn main() -> fairbench::Result<()> {
    let data = generate_dual_label(&DualLabelConfig {
        n_samples: 6000,
        ..Default::default()
    })?;
    let (tr, _, te) = split(&data, SplitFractions::default(), 0)?;
    let enc_tr = encode_sensitive(&tr, SensitiveFormat::Binary, 0)?;
    let enc_te = encode_sensitive(&te, SensitiveFormat::Binary, 0)?;
    let init = init_scorer(tr.n_features(), &[16], 0)?;

    for (kind, weights) in [
        (PenaltyKind::FairretNorm, [0.0, 0.1, 1.0]),
        (PenaltyKind::PrejudiceRemover, [0.0, 0.1, 1.0]),
    ] {
        let penalty = BoundPenalty::new(kind, FairnessNotion::DemPar, &tr, &enc_tr)?;
        for w in weights {
            let cfg = TrainConfig {
                learning_rate: 0.01,
                epochs: 20,
                batch_size: 128,
                penalty_weight: w,
                ..Default::default()
            };
            let model = train(&init, &tr, &cfg, Some(&penalty))?;
            let hard = harden(&model.forward(te.features())?);
            let v = violation(&statistic(FairnessNotion::DemPar, &hard, te.labels(), None, &enc_te)?)?;
            println!(
                "{kind:?} weight {w:<4} test accuracy {:.4} (unbiased {:.4}) dem_par violation {:.4}",
                accuracy(&hard, te.labels(), None)?,
                accuracy(&hard, te.unbiased_labels().unwrap(), None)?,
                v.value
            );
        }
    }
    Ok(())
}
