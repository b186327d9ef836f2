//! On-disk layout of a run:
//!
//! ```text
//! <dir>/records.csv     one row per cell, deterministic
//! <dir>/timings.csv     training seconds per cell
//! <dir>/metadata.json   config snapshot, seed, environment, failures
//! <dir>/traces/*.csv    per-round training trace of every cell
//! ```
//!
//! Wall-clock times live apart from the records so that two runs of the same
//! config produce byte-identical `records.csv` files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boosting::{CostPair, RoundRecord, StrongClassifier, TrainingTrace};
use crate::error::{Error, Result};
use crate::metrics::{ConfusionRates, FoldId, Method, ResultRecord};

use super::config::ExperimentConfig;

pub const RECORDS_FILE: &str = "records.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const TRACES_DIR: &str = "traces";

const RECORD_COLUMNS: [&str; 11] = [
    "dataset",
    "algorithm",
    "c_pos",
    "c_neg",
    "fold",
    "fnr",
    "fpr",
    "ce",
    "nec",
    "effective_rounds",
    "trained_rounds",
];

/// Canonical ordering key of a record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset: String,
    pub algorithm: Method,
    pub cost: CostPair,
    pub fold: FoldId,
}

impl CellKey {
    pub fn of(r: &ResultRecord) -> Self {
        Self {
            dataset: r.dataset.clone(),
            algorithm: r.algorithm,
            cost: r.cost,
            fold: r.fold,
        }
    }

    pub fn trace_file_name(&self) -> String {
        format!(
            "{}__{}__{}_{}__fold{}.csv",
            self.dataset, self.algorithm, self.cost.c_pos, self.cost.c_neg, self.fold
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    /// Worker threads requested; timings depend on it.
    pub jobs: usize,
    pub available_parallelism: usize,
}

impl Fingerprint {
    pub fn current(jobs: usize) -> Self {
        Self {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            jobs,
            available_parallelism: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub dataset: String,
    pub algorithm: Method,
    pub cost: CostPair,
    pub fold: FoldId,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub fingerprint: Fingerprint,
    pub record_count: usize,
    pub failures: Vec<Failure>,
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStore {
    pub config: ExperimentConfig,
    /// Sorted by [`CellKey`].
    pub records: Vec<ResultRecord>,
    pub traces: BTreeMap<CellKey, TrainingTrace>,
    /// Trained classifiers, when the config asks to keep them.
    pub models: BTreeMap<CellKey, StrongClassifier>,
    pub fingerprint: Fingerprint,
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn parse<T: std::str::FromStr>(path: &Path, field: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| csv_error(path, format!("bad {field} `{value}`")))
}

impl RunStore {
    pub fn failures(&self) -> Vec<Failure> {
        self.records
            .iter()
            .filter_map(|r| {
                r.error.as_ref().map(|e| Failure {
                    dataset: r.dataset.clone(),
                    algorithm: r.algorithm,
                    cost: r.cost,
                    fold: r.fold,
                    error: e.clone(),
                })
            })
            .collect()
    }

    /// Writes the store into `dir`, creating it if needed.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        self.write_records(&dir.join(RECORDS_FILE))?;
        self.write_timings(&dir.join(TIMINGS_FILE))?;
        let meta = Metadata {
            config: self.config.clone(),
            seed: self.config.seed,
            fingerprint: self.fingerprint.clone(),
            record_count: self.records.len(),
            failures: self.failures(),
        };
        fs::write(dir.join(METADATA_FILE), serde_json::to_string_pretty(&meta)? + "\n")?;
        if !self.traces.is_empty() {
            let traces = dir.join(TRACES_DIR);
            fs::create_dir_all(&traces)?;
            for (key, trace) in &self.traces {
                write_trace(&traces.join(key.trace_file_name()), trace)?;
            }
        }
        Ok(())
    }

    fn write_records(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(RECORD_COLUMNS)?;
        for r in &self.records {
            w.write_record([
                r.dataset.clone(),
                r.algorithm.to_string(),
                r.cost.c_pos.to_string(),
                r.cost.c_neg.to_string(),
                r.fold.to_string(),
                r.rates.fnr.to_string(),
                r.rates.fpr.to_string(),
                r.rates.ce.to_string(),
                r.nec.to_string(),
                r.effective_rounds.to_string(),
                r.trained_rounds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_timings(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["dataset", "algorithm", "c_pos", "c_neg", "fold", "train_seconds"])?;
        for r in &self.records {
            w.write_record([
                r.dataset.clone(),
                r.algorithm.to_string(),
                r.cost.c_pos.to_string(),
                r.cost.c_neg.to_string(),
                r.fold.to_string(),
                r.train_seconds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a store written by [`RunStore::write`]. Traces are loaded when
    /// the trace directory exists; models are never persisted.
    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join(METADATA_FILE);
        let meta: Metadata = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
        let errors: BTreeMap<CellKey, String> = meta
            .failures
            .iter()
            .map(|f| {
                (
                    CellKey {
                        dataset: f.dataset.clone(),
                        algorithm: f.algorithm,
                        cost: f.cost,
                        fold: f.fold,
                    },
                    f.error.clone(),
                )
            })
            .collect();

        let path = dir.join(RECORDS_FILE);
        let mut reader = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
        let headers = reader.headers()?.clone();
        if headers.iter().ne(RECORD_COLUMNS) {
            return Err(csv_error(&path, "unexpected header"));
        }
        let mut records = Vec::new();
        for row in reader.records() {
            let row = row?;
            let algorithm = Method::parse(&row[1])
                .ok_or_else(|| csv_error(&path, format!("bad algorithm `{}`", &row[1])))?;
            let cost = CostPair::new(parse(&path, "c_pos", &row[2])?, parse(&path, "c_neg", &row[3])?)?;
            let fold: FoldId = parse(&path, "fold", &row[4])?;
            let mut rec = ResultRecord {
                algorithm,
                dataset: row[0].to_string(),
                cost,
                fold,
                rates: ConfusionRates {
                    fnr: parse(&path, "fnr", &row[5])?,
                    fpr: parse(&path, "fpr", &row[6])?,
                    ce: parse(&path, "ce", &row[7])?,
                    n_pos: 0,
                    n_neg: 0,
                },
                nec: parse(&path, "nec", &row[8])?,
                train_seconds: 0.0,
                effective_rounds: parse(&path, "effective_rounds", &row[9])?,
                trained_rounds: parse(&path, "trained_rounds", &row[10])?,
                error: None,
            };
            rec.error = errors.get(&CellKey::of(&rec)).cloned();
            records.push(rec);
        }

        let path = dir.join(TIMINGS_FILE);
        if path.exists() {
            let mut seconds = BTreeMap::new();
            let mut reader = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
            for row in reader.records() {
                let row = row?;
                let key = CellKey {
                    dataset: row[0].to_string(),
                    algorithm: Method::parse(&row[1])
                        .ok_or_else(|| csv_error(&path, format!("bad algorithm `{}`", &row[1])))?,
                    cost: CostPair::new(parse(&path, "c_pos", &row[2])?, parse(&path, "c_neg", &row[3])?)?,
                    fold: parse(&path, "fold", &row[4])?,
                };
                seconds.insert(key, parse::<f64>(&path, "train_seconds", &row[5])?);
            }
            for r in &mut records {
                if let Some(&s) = seconds.get(&CellKey::of(r)) {
                    r.train_seconds = s;
                }
            }
        }

        let mut traces = BTreeMap::new();
        let trace_dir = dir.join(TRACES_DIR);
        if trace_dir.is_dir() {
            for r in records.iter().filter(|r| r.fold != FoldId::Avg) {
                let key = CellKey::of(r);
                let p = trace_dir.join(key.trace_file_name());
                if p.exists() {
                    traces.insert(key, read_trace(&p)?);
                }
            }
        }

        Ok(Self {
            config: meta.config,
            records,
            traces,
            models: BTreeMap::new(),
            fingerprint: meta.fingerprint,
        })
    }
}

pub fn write_trace(path: &Path, trace: &TrainingTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["round", "alpha", "z", "train_nec", "train_ca", "degenerate"])?;
    for (t, r) in trace.rounds.iter().enumerate() {
        w.write_record([
            (t + 1).to_string(),
            r.alpha.to_string(),
            r.z.to_string(),
            r.train_nec.to_string(),
            r.train_ca.map_or_else(|| "NA".to_string(), |v| v.to_string()),
            u8::from(r.degenerate).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace CSV. Wall times are not stored and come back as zero.
pub fn read_trace(path: &Path) -> Result<TrainingTrace> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut rounds = Vec::new();
    for row in reader.records() {
        let row = row?;
        rounds.push(RoundRecord {
            alpha: parse(path, "alpha", &row[1])?,
            z: parse(path, "z", &row[2])?,
            train_nec: parse(path, "train_nec", &row[3])?,
            train_ca: match &row[4] {
                "NA" => None,
                v => Some(parse(path, "train_ca", v)?),
            },
            wall_seconds: 0.0,
            degenerate: &row[5] == "1",
        });
    }
    Ok(TrainingTrace { rounds })
}

/// Paths of the files a store directory is expected to hold.
pub fn store_files(dir: &Path) -> [PathBuf; 3] {
    [
        dir.join(RECORDS_FILE),
        dir.join(TIMINGS_FILE),
        dir.join(METADATA_FILE),
    ]
}
