//! Binary, intersectional and parallel encodings of two sensitive attributes,
//! and how the violation grows as the groups get finer.
//!
//! `cargo run --example sensitive_encodings`

use fairbench::data::{encode_sensitive, generate_dual_label, DualLabelConfig, SensitiveAttribute, TabularDataset};
use fairbench::metrics::{statistic, violation};
use fairbench::{FairnessNotion, SensitiveFormat};
use rand::{Rng, SeedableRng};

fn main() -> fairbench::Result<()> {
    let base = generate_dual_label(&DualLabelConfig {
        n_samples: 3000,
        ..Default::default()
    })?;

    // add an age band attribute alongside the generated group
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut attrs = base.sensitive().to_vec();
    attrs.push(SensitiveAttribute {
        name: "age".into(),
        kind: fairbench::data::AttributeKind::Categorical,
        categories: vec!["young".into(), "middle".into(), "old".into()],
        codes: (0..base.len()).map(|_| rng.random_range(0..3)).collect(),
    });
    let data = TabularDataset::new(
        base.features().clone(),
        base.columns().to_vec(),
        base.labels().to_vec(),
        base.unbiased_labels().map(<[u8]>::to_vec),
        attrs,
        None,
    )?;

    // a score driven by the first feature with group and age effects
    let scores: Vec<f64> = (0..data.len())
        .map(|i| {
            let s = data.sensitive();
            let z = data.features().get(i, 0) - 0.4 * s[0].codes[i] as f64 + 0.3 * s[1].codes[i] as f64;
            1.0 / (1.0 + (-z).exp())
        })
        .collect();

    for format in SensitiveFormat::ALL {
        let enc = encode_sensitive(&data, format, 0)?;
        let stats = statistic(FairnessNotion::DemPar, &scores, data.labels(), None, &enc)?;
        println!(
            "{:<15} {} groups, partition: {:<5} dem_par violation {:.4}",
            format.as_str(),
            enc.n_groups(),
            enc.is_partition(),
            violation(&stats)?.value
        );
        println!("    {}", enc.group_names.join(", "));
    }
    Ok(())
}
