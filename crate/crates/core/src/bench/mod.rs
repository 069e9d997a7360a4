//! Sweeps over methods × strengths × seeds, persisted as line-delimited JSON,
//! plus the aggregation into performance tables and trade-off curves.

mod table;
mod tradeoff;

use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    encode_sensitive, generate_dual_label, load_csv, split, DualLabelConfig, Schema, SensitiveFormat, SplitFractions,
    TabularDataset,
};
use crate::error::{Error, Result};
use crate::inmethods::{absolute_gap, exponentiated_gradient, BoundPenalty, EgConfig, PenaltyKind};
use crate::metrics::{evaluate, harden, EvaluationReport, FairnessNotion};
use crate::model::{init_scorer, train, Penalty, Scorer, TrainConfig};
use crate::postmethods::{apply_thresholds, fit_error_parity};
use crate::premethods::{clamp_strength, PreMethod, PreMethodSpec};

pub use table::{
    aggregate, format_sig4, infer_k, performance_table, FormatBlock, PerformanceTable, StrengthSummary, TableCell,
    TableRow, TableSpec,
};
pub use tradeoff::{tradeoff_export, TradeoffCurve, TradeoffPoint};

/// Name of the records file inside the output directory.
pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    None,
    Pre,
    In,
    Post,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MethodName {
    Naive,
    DataRepairer,
    LabelFlipping,
    PrevalenceSampling,
    FairretNorm,
    PrejudiceRemover,
    ExponentiatedGradient,
    ErrorParity,
}

impl MethodName {
    pub const ALL: [MethodName; 8] = [
        MethodName::Naive,
        MethodName::DataRepairer,
        MethodName::LabelFlipping,
        MethodName::PrevalenceSampling,
        MethodName::FairretNorm,
        MethodName::PrejudiceRemover,
        MethodName::ExponentiatedGradient,
        MethodName::ErrorParity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Naive => "naive",
            MethodName::DataRepairer => "data_repairer",
            MethodName::LabelFlipping => "label_flipping",
            MethodName::PrevalenceSampling => "prevalence_sampling",
            MethodName::FairretNorm => "fairret_norm",
            MethodName::PrejudiceRemover => "prejudice_remover",
            MethodName::ExponentiatedGradient => "exponentiated_gradient",
            MethodName::ErrorParity => "error_parity",
        }
    }

    pub fn stage(self) -> Stage {
        match self {
            MethodName::Naive => Stage::None,
            MethodName::DataRepairer | MethodName::LabelFlipping | MethodName::PrevalenceSampling => Stage::Pre,
            MethodName::FairretNorm | MethodName::PrejudiceRemover | MethodName::ExponentiatedGradient => Stage::In,
            MethodName::ErrorParity => Stage::Post,
        }
    }

    /// The standard strength grid of each method.
    pub fn default_strengths(self) -> Vec<f64> {
        match self {
            MethodName::Naive => vec![0.0],
            MethodName::DataRepairer | MethodName::PrevalenceSampling => vec![0.1, 0.5, 0.8, 0.9, 1.0],
            MethodName::LabelFlipping => vec![0.001, 0.01, 0.03, 0.1, 0.3],
            MethodName::FairretNorm => vec![0.001, 0.01, 0.1, 1.0, 3.0],
            MethodName::PrejudiceRemover => vec![0.001, 0.01, 0.1, 0.3, 1.0],
            MethodName::ExponentiatedGradient => vec![0.8, 0.9, 0.95, 0.99, 1.0],
            MethodName::ErrorParity => vec![0.005, 0.01, 0.05, 0.1, 0.3],
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "fairret_kl_proj" {
            return Err("fairret_kl_proj is not supported: its projection objective is not implemented; \
                        use fairret_norm instead"
                .into());
        }
        MethodName::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = MethodName::ALL.iter().map(|m| m.as_str()).collect();
            format!("unknown method `{s}`; valid options are {names:?}")
        })
    }
}

impl TryFrom<String> for MethodName {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MethodName> for String {
    fn from(m: MethodName) -> String {
        m.as_str().to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: MethodName,
    /// Identifier used in records and tables; defaults to the method name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Defaults to the method's standard grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strengths: Option<Vec<f64>>,
    /// Notion the method targets; defaults to dem_par.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notion: Option<FairnessNotion>,
    /// Encoding the method sees during fitting; defaults to binary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<SensitiveFormat>,
}

impl MethodSpec {
    pub fn new(name: MethodName) -> Self {
        MethodSpec {
            name,
            label: None,
            strengths: None,
            notion: None,
            format: None,
        }
    }

    pub fn with_strengths(mut self, strengths: Vec<f64>) -> Self {
        self.strengths = Some(strengths);
        self
    }

    pub fn id(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.name.to_string())
    }

    pub fn strengths(&self) -> Vec<f64> {
        if self.name == MethodName::Naive {
            return vec![0.0];
        }
        self.strengths.clone().unwrap_or_else(|| self.name.default_strengths())
    }

    fn notion(&self) -> FairnessNotion {
        self.notion.unwrap_or(FairnessNotion::DemPar)
    }

    fn format(&self) -> SensitiveFormat {
        self.format.unwrap_or(SensitiveFormat::Binary)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemaSource {
    Inline(Schema),
    Path(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Csv { path: PathBuf, schema: SchemaSource },
    Synthetic(DualLabelConfig),
}

impl DatasetSource {
    /// Loads the dataset and returns it with a content fingerprint.
    pub fn load(&self) -> Result<(TabularDataset, String)> {
        match self {
            DatasetSource::Synthetic(cfg) => {
                let ds = generate_dual_label(cfg)?;
                Ok((ds, sha256_hex(serde_json::to_string(cfg)?.as_bytes())))
            }
            DatasetSource::Csv { path, schema } => {
                let schema = match schema {
                    SchemaSource::Inline(s) => s.clone(),
                    SchemaSource::Path(p) => Schema::from_path(p)?,
                };
                let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
                let ds = load_csv(path, &schema)?;
                let mut hasher = Sha256::new();
                hasher.update(&bytes);
                hasher.update(serde_json::to_string(&schema)?.as_bytes());
                Ok((ds, hex::encode(hasher.finalize())))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: vec![64],
            train: TrainConfig::default(),
        }
    }
}

/// Settings of the exponentiated-gradient reduction other than its slack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgSettings {
    pub iterations: usize,
    pub eta: f64,
    pub multiplier_bound: f64,
    pub initial_multiplier: f64,
}

impl Default for EgSettings {
    fn default() -> Self {
        let d = EgConfig::default();
        EgSettings {
            iterations: d.iterations,
            eta: d.eta,
            multiplier_bound: d.multiplier_bound,
            initial_multiplier: d.initial_multiplier,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_formats() -> Vec<SensitiveFormat> {
    SensitiveFormat::ALL.to_vec()
}

fn default_notions() -> Vec<FairnessNotion> {
    FairnessNotion::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub split: SplitFractions,
    #[serde(default)]
    pub model: ModelConfig,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Formats every run is evaluated in.
    #[serde(default = "default_formats")]
    pub formats: Vec<SensitiveFormat>,
    #[serde(default = "default_notions")]
    pub notions: Vec<FairnessNotion>,
    /// Sensitive attribute used by the binary format.
    #[serde(default)]
    pub binary_attr: usize,
    #[serde(default)]
    pub exponentiated_gradient: EgSettings,
    /// Where `records.jsonl` is written; in-memory only when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(dataset: DatasetSource, methods: Vec<MethodSpec>) -> Self {
        RunConfig {
            dataset,
            split: SplitFractions::default(),
            model: ModelConfig::default(),
            methods,
            seeds: default_seeds(),
            formats: default_formats(),
            notions: default_notions(),
            binary_attr: 0,
            exponentiated_gradient: EgSettings::default(),
            output_dir: None,
        }
    }

    /// Reads a JSON config; relative paths inside it resolve against its directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DatasetSource::Csv { path, schema } = &mut cfg.dataset {
            resolve(path);
            if let SchemaSource::Path(p) = schema {
                resolve(p);
            }
        }
        if let Some(out) = &mut cfg.output_dir {
            resolve(out);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() || self.formats.is_empty() || self.notions.is_empty() {
            return Err(Error::Config("seeds, formats and notions must be nonempty".into()));
        }
        self.model.train.validate()?;
        let mut ids = Vec::new();
        for m in &self.methods {
            let id = m.id();
            if ids.contains(&id) {
                return Err(Error::Config(format!("method id `{id}` appears twice; set distinct labels")));
            }
            ids.push(id);
            if m.strengths().is_empty() {
                return Err(Error::Config(format!("method `{}` has an empty strength list", m.id())));
            }
            if let Some(s) = m.strengths().iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
                return Err(Error::Config(format!("method `{}` has invalid strength {s}", m.id())));
            }
            match m.name {
                MethodName::ExponentiatedGradient if !m.notion().has_fixed_denominator() => {
                    return Err(Error::Config(format!(
                        "exponentiated_gradient supports dem_par, eq_opp, pred_eq and acc_eq, not `{}`",
                        m.notion()
                    )));
                }
                MethodName::ErrorParity
                    if !matches!(
                        m.notion(),
                        FairnessNotion::DemPar | FairnessNotion::EqOpp | FairnessNotion::PredEq
                    ) =>
                {
                    return Err(Error::Config(format!(
                        "error_parity supports dem_par, eq_opp and pred_eq, not `{}`",
                        m.notion()
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn hash(&self, fingerprint: &str) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_string(&canonical)?.as_bytes());
        hasher.update(b"\n");
        hasher.update(fingerprint.as_bytes());
        Ok(hex::encode(hasher.finalize()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// Outcome of one (method, strength, seed) run, evaluated on the test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub method: String,
    pub stage: Stage,
    pub strength: f64,
    pub seed: u64,
    pub status: RunStatus,
    pub report: Option<EvaluationReport>,
    pub wall_time_s: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl RunRecord {
    fn key(&self) -> (String, u64, u64) {
        (self.method.clone(), self.strength.to_bits(), self.seed)
    }
}

/// Reads every record of a records file.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Random stream of a method, independent of run scheduling.
fn derived_seed(seed: u64, method: &str, strength: f64) -> u64 {
    let digest = Sha256::digest(format!("{seed}/{method}/{:016x}", strength.to_bits()).as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

struct Job<'a> {
    spec: &'a MethodSpec,
    strength: f64,
    seed: u64,
}

struct Context<'a> {
    config: &'a RunConfig,
    dataset: &'a TabularDataset,
    hash: &'a str,
}

#[derive(Default)]
struct RunOutput {
    warnings: Vec<String>,
    metadata: serde_json::Map<String, serde_json::Value>,
}

impl Context<'_> {
    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            penalty_weight: 0.0,
            ..self.config.model.train.clone()
        }
    }

    fn fit(&self, data: &TabularDataset, seed: u64, penalty: Option<(&dyn Penalty, f64)>) -> Result<Scorer> {
        let init = init_scorer(data.n_features(), &self.config.model.hidden, seed)?;
        let mut tc = self.train_config(seed);
        if let Some((_, w)) = penalty {
            tc.penalty_weight = w;
        }
        train(&init, data, &tc, penalty.map(|p| p.0))
    }

    fn test_scores(&self, job: &Job, out: &mut RunOutput) -> Result<(Vec<f64>, TabularDataset)> {
        let cfg = self.config;
        let seed = job.seed;
        let (train_ds, val_ds, test_ds) = split(self.dataset, cfg.split, seed)?;
        let format = job.spec.format();
        let notion = job.spec.notion();
        let encode = |ds: &TabularDataset| encode_sensitive(ds, format, cfg.binary_attr);

        let scores = match job.spec.name {
            MethodName::Naive => self.fit(&train_ds, seed, None)?.forward(test_ds.features())?,
            MethodName::DataRepairer | MethodName::LabelFlipping | MethodName::PrevalenceSampling => {
                let method = match job.spec.name {
                    MethodName::DataRepairer => PreMethod::DataRepairer,
                    MethodName::LabelFlipping => PreMethod::LabelFlipping,
                    _ => PreMethod::PrevalenceSampling,
                };
                let (strength, warning) = clamp_strength(job.strength)?;
                out.warnings.extend(warning);
                let pre = PreMethodSpec {
                    method,
                    strength,
                    seed: derived_seed(seed, &job.spec.id(), job.strength),
                };
                let repaired = pre.apply(&train_ds, &encode(&train_ds)?)?;
                out.metadata.insert("train_size".into(), repaired.len().into());
                self.fit(&repaired, seed, None)?.forward(test_ds.features())?
            }
            MethodName::FairretNorm | MethodName::PrejudiceRemover => {
                let kind = if job.spec.name == MethodName::FairretNorm {
                    PenaltyKind::FairretNorm
                } else {
                    PenaltyKind::PrejudiceRemover
                };
                let penalty = BoundPenalty::new(kind, notion, &train_ds, &encode(&train_ds)?)?;
                let scorer = self.fit(&train_ds, seed, Some((&penalty, job.strength)))?;
                if penalty.skipped_batches() > 0 {
                    out.warnings.push(format!(
                        "penalty skipped on {} batches with a vanishing mean statistic",
                        penalty.skipped_batches()
                    ));
                }
                scorer.forward(test_ds.features())?
            }
            MethodName::ExponentiatedGradient => {
                let enc = encode(&train_ds)?;
                let naive = self.fit(&train_ds, seed, None)?;
                let hard = harden(&naive.forward(train_ds.features())?);
                let naive_gap = absolute_gap(notion, &hard, train_ds.labels(), Some(train_ds.weights()), &enc)?;
                let slack = ((1.0 - job.strength.min(1.0)) * naive_gap).max(1e-4);
                let eg = &cfg.exponentiated_gradient;
                let eg_cfg = EgConfig {
                    notion,
                    slack,
                    iterations: eg.iterations,
                    multiplier_bound: eg.multiplier_bound,
                    eta: eg.eta,
                    initial_multiplier: eg.initial_multiplier,
                    hidden: cfg.model.hidden.clone(),
                    train: self.train_config(seed),
                };
                let ensemble = exponentiated_gradient(&train_ds, &enc, &eg_cfg)?;
                if !ensemble.trace.satisfied {
                    out.warnings.push(format!(
                        "exponentiated gradient ended with gap {:.4} above slack {slack:.4}",
                        ensemble.trace.ensemble_gap
                    ));
                }
                out.metadata.insert("naive_train_gap".into(), naive_gap.into());
                out.metadata.insert("slack".into(), slack.into());
                out.metadata.insert("eg_settings".into(), serde_json::to_value(eg)?);
                out.metadata.insert("trace".into(), serde_json::to_value(&ensemble.trace)?);
                ensemble.predict_scores(test_ds.features())?
            }
            MethodName::ErrorParity => {
                let naive = self.fit(&train_ds, seed, None)?;
                let val_scores = naive.forward(val_ds.features())?;
                let policy = fit_error_parity(
                    &val_scores,
                    val_ds.labels(),
                    Some(val_ds.weights()),
                    &encode(&val_ds)?,
                    notion,
                    job.strength,
                )?;
                if policy.infeasible {
                    out.warnings.push(format!(
                        "no thresholds reach tolerance {}; kept violation {:.4}",
                        job.strength, policy.achieved_violation
                    ));
                }
                out.metadata.insert("policy".into(), serde_json::to_value(&policy)?);
                apply_thresholds(&naive.forward(test_ds.features())?, &encode(&test_ds)?, &policy)?
            }
        };
        Ok((scores, test_ds))
    }

    fn run(&self, job: &Job) -> RunRecord {
        let start = Instant::now();
        let mut out = RunOutput::default();
        let result = self.test_scores(job, &mut out).and_then(|(scores, test_ds)| {
            let encodings = self
                .config
                .formats
                .iter()
                .map(|&f| encode_sensitive(&test_ds, f, self.config.binary_attr))
                .collect::<Result<Vec<_>>>()?;
            evaluate(&scores, &test_ds, &encodings, &self.config.notions)
        });
        let (status, report) = match result {
            Ok(report) => {
                for section in &report.sections {
                    for cell in section.cells.iter().filter(|c| c.skipped_groups > 0) {
                        out.warnings.push(format!(
                            "{} {} {} {}: {} groups with undefined statistic skipped",
                            section.target.as_str(),
                            cell.format,
                            cell.notion,
                            cell.output_type.as_str(),
                            cell.skipped_groups
                        ));
                    }
                }
                (RunStatus::Ok, Some(report))
            }
            Err(e) => {
                log::warn!("run {} strength {} seed {} failed: {e}", job.spec.id(), job.strength, job.seed);
                out.warnings.push(e.to_string());
                (RunStatus::Failed, None)
            }
        };
        RunRecord {
            config_hash: self.hash.to_string(),
            method: job.spec.id(),
            stage: job.spec.name.stage(),
            strength: job.strength,
            seed: job.seed,
            status,
            report,
            wall_time_s: start.elapsed().as_secs_f64(),
            warnings: out.warnings,
            metadata: serde_json::Value::Object(out.metadata),
        }
    }
}

/// Runs every (method, strength, seed) of `config`, plus the naive baseline.
/// With an output directory, records are appended as they finish and runs
/// already recorded under the same config hash are reused.
pub fn run_benchmark(config: &RunConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let (dataset, fingerprint) = config.dataset.load()?;
    let hash = config.hash(&fingerprint)?;

    let naive = MethodSpec::new(MethodName::Naive);
    let mut specs: Vec<&MethodSpec> = Vec::new();
    if !config.methods.iter().any(|m| m.name == MethodName::Naive) {
        specs.push(&naive);
    }
    specs.extend(&config.methods);
    let mut jobs = Vec::new();
    for spec in specs {
        for strength in spec.strengths() {
            for &seed in &config.seeds {
                jobs.push(Job { spec, strength, seed });
            }
        }
    }

    let mut done: HashMap<(String, u64, u64), RunRecord> = HashMap::new();
    let sink = match &config.output_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(RECORDS_FILE);
            if path.exists() {
                for r in read_records(&path)? {
                    if r.config_hash == hash {
                        done.insert(r.key(), r);
                    }
                }
            }
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            Some(Mutex::new((file, path)))
        }
        None => None,
    };

    let ctx = Context {
        config,
        dataset: &dataset,
        hash: &hash,
    };
    let records = jobs
        .par_iter()
        .map(|job| {
            let key = (job.spec.id(), job.strength.to_bits(), job.seed);
            if let Some(r) = done.get(&key) {
                return Ok(r.clone());
            }
            let record = ctx.run(job);
            log::info!(
                "{} strength {} seed {}: {:?} in {:.2}s",
                record.method,
                record.strength,
                record.seed,
                record.status,
                record.wall_time_s
            );
            if let Some(sink) = &sink {
                let line = serde_json::to_string(&record)?;
                let mut guard = sink.lock().unwrap_or_else(|e| e.into_inner());
                let (file, path) = &mut *guard;
                writeln!(file, "{line}")
                    .and_then(|_| file.flush())
                    .map_err(|e| Error::io(path.as_path(), e))?;
            }
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(records)
}
