//! `run`, `table` and `tradeoff` subcommands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bench::{
    performance_table, read_records, run_benchmark, tradeoff_export, RunConfig, RunStatus, TableSpec, RECORDS_FILE,
};
use crate::data::SensitiveFormat;
use crate::error::{Error, Result};
use crate::metrics::{FairnessNotion, LabelTarget, OutputType};

#[derive(Debug, Parser)]
#[command(name = "fairbench", about = "Fair classification benchmark sweeps, tables and trade-off curves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a benchmark sweep from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Max performance under violation bounds k.
    Table {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        notion: FairnessNotion,
        #[arg(long = "output_type")]
        output_type: OutputType,
        /// Comma-separated bounds; inferred from the naive violation when absent.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<f64>>,
        /// Restrict to one format; all formats in the records otherwise.
        #[arg(long = "sens_attr")]
        sens_attr: Option<SensitiveFormat>,
        #[arg(long, default_value = "biased")]
        labels: LabelTarget,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trade-off curve points with covariance ellipses, as CSV.
    Tradeoff {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        notion: FairnessNotion,
        #[arg(long = "output_type")]
        output_type: OutputType,
        #[arg(long = "sens_attr")]
        sens_attr: SensitiveFormat,
        #[arg(long, default_value = "biased")]
        labels: LabelTarget,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Writes through a temporary sibling so a failure never leaves a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, contents: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => stdout.write_all(contents.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn formats_in(records: &[crate::bench::RunRecord]) -> Vec<SensitiveFormat> {
    SensitiveFormat::ALL
        .into_iter()
        .filter(|f| {
            records
                .iter()
                .filter_map(|r| r.report.as_ref())
                .flat_map(|rep| &rep.sections)
                .any(|s| s.cells.iter().any(|c| c.format == *f))
        })
        .collect()
}

/// Executes a parsed command, writing human-readable output to `stdout`.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let records = run_benchmark(&cfg)?;
            let failed = records.iter().filter(|r| r.status == RunStatus::Failed).count();
            let dest = cfg
                .output_dir
                .as_ref()
                .map_or("memory only".to_string(), |d| d.join(RECORDS_FILE).display().to_string());
            writeln!(stdout, "{} runs ({failed} failed), records: {dest}", records.len())
                .map_err(|e| Error::io("<stdout>", e))
        }
        Command::Table {
            records,
            notion,
            output_type,
            k,
            sens_attr,
            labels,
            out,
        } => {
            let recs = read_records(&records)?;
            let formats = match sens_attr {
                Some(f) => vec![f],
                None => formats_in(&recs),
            };
            let spec = TableSpec {
                notion,
                output_type,
                target: labels,
                formats: formats.into_iter().map(|f| (f, k.clone())).collect(),
            };
            let table = performance_table(&recs, &spec)?;
            if let Some(path) = out {
                write_atomic(&path, &table.to_csv())?;
            }
            stdout
                .write_all(table.to_text().as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
        Command::Tradeoff {
            records,
            notion,
            output_type,
            sens_attr,
            labels,
            out,
        } => {
            let recs = read_records(&records)?;
            let curve = tradeoff_export(&recs, notion, output_type, sens_attr, labels)?;
            for w in &curve.warnings {
                log::warn!("{w}");
            }
            emit(out.as_deref(), &curve.to_csv(), stdout)
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the exit status.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            let msg = e.to_string();
            eprintln!("{}", msg.lines().next().unwrap_or("usage error"));
            return 2;
        }
    };
    match execute(cli, &mut std::io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}
