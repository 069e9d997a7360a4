//! Group-specific thresholds fitted on a validation split, applied to test.
//!
//! `cargo run --release --example error_parity`

use fairbench::data::{encode_sensitive, generate_dual_label, split, DualLabelConfig, SplitFractions};
use fairbench::metrics::{accuracy, harden, statistic, violation};
use fairbench::model::{init_scorer, train};
use fairbench::postmethods::{apply_thresholds, fit_error_parity};
use fairbench::{FairnessNotion, SensitiveFormat, TrainConfig};

fn main() -> fairbench::Result<()> {
    let data = generate_dual_label(&DualLabelConfig {
        n_samples: 6000,
        flip_rate_disadvantaged: 0.5,
        ..Default::default()
    })?;
    let (tr, va, te) = split(&data, SplitFractions::default(), 0)?;
    let cfg = TrainConfig {
        learning_rate: 0.01,
        epochs: 20,
        ..Default::default()
    };
    let model = train(&init_scorer(tr.n_features(), &[16], 0)?, &tr, &cfg, None)?;
    let (s_va, s_te) = (model.forward(va.features())?, model.forward(te.features())?);
    let enc_va = encode_sensitive(&va, SensitiveFormat::Binary, 0)?;
    let enc_te = encode_sensitive(&te, SensitiveFormat::Binary, 0)?;

    let report = |name: &str, hard: &[f64]| -> fairbench::Result<()> {
        print!("{name:<26}");
        for notion in [FairnessNotion::DemPar, FairnessNotion::EqOpp] {
            let v = violation(&statistic(notion, hard, te.labels(), None, &enc_te)?)?.value;
            print!(" {notion} violation {v:.4} ");
        }
        println!("accuracy {:.4}", accuracy(hard, te.labels(), None)?);
        Ok(())
    };
    report("threshold 0.5", &harden(&s_te))?;

    for tolerance in [0.1, 0.01] {
        let policy = fit_error_parity(&s_va, va.labels(), None, &enc_va, FairnessNotion::DemPar, tolerance)?;
        println!("thresholds {:.3?} (validation violation {:.4})", policy.thresholds, policy.achieved_violation);
        report(&format!("dem_par tolerance {tolerance}"), &apply_thresholds(&s_te, &enc_te, &policy)?)?;
    }
    Ok(())
}
