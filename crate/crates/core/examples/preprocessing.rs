//! The three pre-processing methods at increasing strength: how far each
//! moves the per-group positive rate towards the global one.
//!
//! `cargo run --example preprocessing`

use fairbench::data::{encode_sensitive, generate_dual_label, DualLabelConfig};
use fairbench::premethods::{PreMethod, PreMethodSpec};
use fairbench::{SensitiveEncoding, SensitiveFormat, TabularDataset};

fn positive_rates(data: &TabularDataset, enc: &SensitiveEncoding) -> Vec<f64> {
    (0..enc.n_groups())
        .map(|q| {
            let (mut pos, mut all) = (0.0, 0.0);
            for i in 0..data.len() {
                let m = enc.indicators.get(i, q) * data.weights()[i];
                pos += m * f64::from(data.labels()[i]);
                all += m;
            }
            pos / all
        })
        .collect()
}

fn feature_means(data: &TabularDataset, enc: &SensitiveEncoding) -> Vec<f64> {
    (0..enc.n_groups())
        .map(|q| {
            let members: Vec<usize> = (0..data.len()).filter(|&i| enc.indicators.get(i, q) > 0.0).collect();
            members.iter().map(|&i| data.features().get(i, 0)).sum::<f64>() / members.len() as f64
        })
        .collect()
}

fn main() -> fairbench::Result<()> {
    let data = generate_dual_label(&DualLabelConfig {
        n_samples: 4000,
        flip_rate_disadvantaged: 0.5,
        ..Default::default()
    })?;
    let enc = encode_sensitive(&data, SensitiveFormat::Binary, 0)?;
    println!("original positive rates {:.3?}", positive_rates(&data, &enc));
    println!("original feature-0 means {:.3?}\n", feature_means(&data, &enc));

    for method in [PreMethod::LabelFlipping, PreMethod::PrevalenceSampling, PreMethod::DataRepairer] {
        for strength in [0.5, 1.0] {
            let spec = PreMethodSpec {
                method,
                strength,
                seed: 0,
            };
            let out = spec.apply(&data, &enc)?;
            let out_enc = encode_sensitive(&out, SensitiveFormat::Binary, 0)?;
            println!(
                "{method:<20} s={strength:<4} n={:<5} rates {:.3?} feature-0 means {:.3?}",
                out.len(),
                positive_rates(&out, &out_enc),
                feature_means(&out, &out_enc)
            );
        }
    }
    Ok(())
}
