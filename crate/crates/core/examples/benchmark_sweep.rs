//! Full sweep from a JSON config, then the performance table and a
//! trade-off export.
//!
//! `cargo run --release --example benchmark_sweep [config.json]`
//!
//! Defaults to `examples/configs/sweep.json`. The same config runs through the
//! CLI with `fairbench run --config <path>`.

use std::path::PathBuf;

use fairbench::bench::{performance_table, run_benchmark, tradeoff_export, RunConfig, TableSpec};
use fairbench::metrics::LabelTarget;
use fairbench::{FairnessNotion, OutputType, SensitiveFormat};

fn main() -> fairbench::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/sweep.json"));
    let mut cfg = RunConfig::from_path(&path)?;
    // keep the records in memory here
    cfg.output_dir = None;
    let records = run_benchmark(&cfg)?;
    println!("{} runs\n", records.len());

    for output_type in [OutputType::Soft, OutputType::Hard] {
        let spec = TableSpec {
            notion: FairnessNotion::DemPar,
            output_type,
            target: LabelTarget::Biased,
            formats: cfg.formats.iter().map(|&f| (f, None)).collect(),
        };
        println!("{}", performance_table(&records, &spec)?.to_text());
    }

    let curve = tradeoff_export(
        &records,
        FairnessNotion::DemPar,
        OutputType::Hard,
        SensitiveFormat::Binary,
        LabelTarget::Biased,
    )?;
    print!("{}", curve.to_csv());
    Ok(())
}
