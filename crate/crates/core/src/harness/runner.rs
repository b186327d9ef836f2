use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::{predict_ensemble, train_on, AlgorithmId, CostPair, StrongClassifier, TrainingTrace};
use crate::datasets::{bayes_optimal_predict, stratified_kfold, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{nec, ConfusionRates, FoldId, Method, ResultRecord};

use super::config::ExperimentConfig;
use super::convergence::detect_convergence_with;
use super::store::{CellKey, Fingerprint, RunStore};

/// Execution knobs that do not change any result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1 }
    }
}

struct PreparedDataset {
    full: Dataset,
    /// `(train, test)` per fold.
    folds: Vec<(Dataset, Dataset)>,
    rounds: usize,
}

struct Job {
    dataset: usize,
    algorithm: AlgorithmId,
    cost: CostPair,
    fold: usize,
}

struct CellOutput {
    record: ResultRecord,
    trace: Option<TrainingTrace>,
    model: Option<StrongClassifier>,
}

fn failed_record(
    dataset: &str,
    algorithm: Method,
    cost: CostPair,
    fold: FoldId,
    message: String,
) -> ResultRecord {
    ResultRecord {
        algorithm,
        dataset: dataset.to_string(),
        cost,
        fold,
        rates: ConfusionRates::from_rates(f64::NAN, f64::NAN),
        nec: f64::NAN,
        train_seconds: 0.0,
        effective_rounds: 0,
        trained_rounds: 0,
        error: Some(message),
    }
}

fn prepare(config: &ExperimentConfig, index: usize) -> Result<PreparedDataset> {
    let spec = &config.datasets[index];
    let full = spec.build(config.dataset_seed(index))?;
    let assignment = stratified_kfold(&full.labels, config.folds, config.fold_seed(index))?;
    let folds = (0..config.folds)
        .map(|f| {
            let (train, test) = assignment.split(f);
            (full.subset(&train), full.subset(&test))
        })
        .collect();
    let rounds = spec.rounds.unwrap_or(config.rounds).resolve(full.len());
    Ok(PreparedDataset {
        full,
        folds,
        rounds,
    })
}

/// Trains one cell, applies the convergence cutoff and scores the test fold.
fn run_cell(config: &ExperimentConfig, data: &PreparedDataset, job: &Job) -> Result<CellOutput> {
    let (train, test) = &data.folds[job.fold];
    let start = Instant::now();
    let (mut clf, trace) = train_on(
        job.algorithm,
        &train.features,
        &train.labels,
        job.cost,
        data.rounds,
        config.seed,
    )?;
    let train_seconds = start.elapsed().as_secs_f64();

    let conv = &config.convergence;
    if conv.enabled_for(job.algorithm) {
        if let Some(k) =
            detect_convergence_with(&trace.train_nec(), conv.tol, conv.tail_fraction, conv.statistic)
        {
            clf.apply_cutoff(k)?;
        }
    }
    let rates = ConfusionRates::from_predictions(
        &test.labels,
        (0..test.len()).map(|i| predict_ensemble(&clf, test.features.row(i), None)),
    );
    let record = ResultRecord {
        algorithm: Method::Boost(job.algorithm),
        dataset: data.full.name.clone(),
        cost: job.cost,
        fold: FoldId::Index(job.fold),
        nec: nec(&rates, job.cost, 0.5),
        rates,
        train_seconds,
        effective_rounds: clf.effective_rounds,
        trained_rounds: clf.trained_rounds,
        error: None,
    };
    Ok(CellOutput {
        record,
        trace: config.save_traces.then_some(trace),
        model: config.keep_models.then_some(clf),
    })
}

/// Fold average of one (dataset, algorithm, cost) group.
fn average(folds: &[&ResultRecord], expected: usize) -> ResultRecord {
    let first = folds[0];
    let failed = folds.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 || folds.len() != expected {
        let mut rec = failed_record(
            &first.dataset,
            first.algorithm,
            first.cost,
            FoldId::Avg,
            format!("{failed} of {expected} folds failed"),
        );
        rec.trained_rounds = first.trained_rounds;
        return rec;
    }
    let n = folds.len() as f64;
    let mean = |f: &dyn Fn(&ResultRecord) -> f64| folds.iter().map(|r| f(r)).sum::<f64>() / n;
    let rates = ConfusionRates {
        fnr: mean(&|r| r.rates.fnr),
        fpr: mean(&|r| r.rates.fpr),
        ce: mean(&|r| r.rates.ce),
        n_pos: folds.iter().map(|r| r.rates.n_pos).sum(),
        n_neg: folds.iter().map(|r| r.rates.n_neg).sum(),
    };
    ResultRecord {
        algorithm: first.algorithm,
        dataset: first.dataset.clone(),
        cost: first.cost,
        fold: FoldId::Avg,
        rates,
        nec: mean(&|r| r.nec),
        train_seconds: mean(&|r| r.train_seconds),
        effective_rounds: mean(&|r| r.effective_rounds as f64).round() as usize,
        trained_rounds: first.trained_rounds,
        error: None,
    }
}

/// Bayes rule of the generating Gaussians applied to every sample.
fn bayes_reference(data: &Dataset, cost: CostPair) -> Option<ResultRecord> {
    let params = data.gauss.as_ref()?;
    let points = data.points.as_ref()?;
    let rates = ConfusionRates::from_predictions(
        &data.labels,
        points.iter().map(|&p| bayes_optimal_predict(params, cost, p)),
    );
    Some(ResultRecord {
        algorithm: Method::Bayes,
        dataset: data.name.clone(),
        cost,
        fold: FoldId::Avg,
        nec: nec(&rates, cost, 0.5),
        rates,
        train_seconds: 0.0,
        effective_rounds: 0,
        trained_rounds: 0,
        error: None,
    })
}

/// Runs every (dataset, algorithm, cost, fold) cell of `config`.
///
/// Cell failures become records carrying a diagnostic; the sweep goes on.
/// The returned store is independent of `options.jobs` except for timings.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<RunStore> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| Error::InvalidParams(format!("worker pool: {e}")))?;

    let names: Vec<String> = config.datasets.iter().map(|d| d.display_name()).collect();
    let prepared: Vec<Result<PreparedDataset>> =
        pool.install(|| (0..config.datasets.len()).into_par_iter().map(|i| prepare(config, i)).collect());

    let mut jobs = Vec::new();
    let mut records = Vec::new();
    for (d, data) in prepared.iter().enumerate() {
        for &algorithm in &config.algorithms {
            for &cost in &config.costs {
                for fold in 0..config.folds {
                    match data {
                        Ok(_) => jobs.push(Job {
                            dataset: d,
                            algorithm,
                            cost,
                            fold,
                        }),
                        Err(e) => records.push(failed_record(
                            &names[d],
                            Method::Boost(algorithm),
                            cost,
                            FoldId::Index(fold),
                            format!("dataset: {e}"),
                        )),
                    }
                }
            }
        }
    }

    let outputs: Vec<(CellKey, std::result::Result<CellOutput, String>)> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let data = prepared[job.dataset].as_ref().expect("only prepared datasets are queued");
                let key = CellKey {
                    dataset: data.full.name.clone(),
                    algorithm: Method::Boost(job.algorithm),
                    cost: job.cost,
                    fold: FoldId::Index(job.fold),
                };
                let out = match catch_unwind(AssertUnwindSafe(|| run_cell(config, data, job))) {
                    Ok(Ok(out)) => Ok(out),
                    Ok(Err(e)) => Err(e.to_string()),
                    Err(panic) => Err(panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "training panicked".into())),
                };
                (key, out)
            })
            .collect()
    });

    let mut traces = BTreeMap::new();
    let mut models = BTreeMap::new();
    for (key, out) in outputs {
        match out {
            Ok(cell) => {
                if let Some(t) = cell.trace {
                    traces.insert(key.clone(), t);
                }
                if let Some(m) = cell.model {
                    models.insert(key, m);
                }
                records.push(cell.record);
            }
            Err(message) => {
                records.push(failed_record(&key.dataset, key.algorithm, key.cost, key.fold, message))
            }
        }
    }

    let mut groups: BTreeMap<(String, Method, CostPair), Vec<&ResultRecord>> = BTreeMap::new();
    for r in &records {
        groups
            .entry((r.dataset.clone(), r.algorithm, r.cost))
            .or_default()
            .push(r);
    }
    let mut averages: Vec<ResultRecord> = groups
        .values()
        .map(|folds| average(folds, config.folds))
        .collect();
    if config.include_bayes_reference {
        for data in prepared.iter().flatten() {
            averages.extend(config.costs.iter().filter_map(|&c| bayes_reference(&data.full, c)));
        }
    }
    records.extend(averages);
    records.sort_by(|a, b| CellKey::of(a).cmp(&CellKey::of(b)));

    Ok(RunStore {
        config: config.clone(),
        records,
        traces,
        models,
        fingerprint: Fingerprint::current(options.jobs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(algorithms: &str, costs: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"datasets": [{{"kind": "bayes", "n_pos": 30, "n_neg": 30}}],
                "algorithms": {algorithms}, "costs": {costs}, "rounds": 10, "seed": 5}}"#
        ))
        .unwrap()
    }

    #[test]
    fn one_cell_gives_three_folds_and_an_average() {
        let mut cfg = tiny_config(r#"["CGA"]"#, "[[1, 1]]");
        cfg.include_bayes_reference = false;
        let store = run_experiment(&cfg, RunOptions::default()).unwrap();
        assert_eq!(store.records.len(), 4);
        let folds: Vec<FoldId> = store.records.iter().map(|r| r.fold).collect();
        assert_eq!(
            folds,
            vec![FoldId::Index(0), FoldId::Index(1), FoldId::Index(2), FoldId::Avg]
        );
        let avg = &store.records[3];
        let mean_nec = store.records[..3].iter().map(|r| r.nec).sum::<f64>() / 3.0;
        assert!((avg.nec - mean_nec).abs() < 1e-15);
        assert_eq!(store.traces.len(), 3);
    }

    #[test]
    fn record_count_and_nec_consistency() {
        let cfg = tiny_config(r#"["ADA", "ASB", "CSA"]"#, "[[1, 5], [2, 1]]");
        let store = run_experiment(&cfg, RunOptions { jobs: 2 }).unwrap();
        // 3 algorithms x 2 costs x (3 folds + average) plus one Bayes row per cost.
        assert_eq!(store.records.len(), 3 * 2 * 4 + 2);
        for r in &store.records {
            assert!(r.error.is_none());
            assert!((r.nec - nec(&r.rates, r.cost, 0.5)).abs() <= 1e-12);
            assert!(r.effective_rounds <= r.trained_rounds);
            if r.algorithm == Method::Boost(AlgorithmId::Asb) {
                assert_eq!(r.effective_rounds, r.trained_rounds);
            }
        }
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let cfg = ExperimentConfig::from_json(
            r#"{"datasets": [{"kind": "csv", "path": "/nonexistent.csv",
                              "label_column": "y", "positive_label": "1"},
                             {"kind": "bayes", "n_pos": 20, "n_neg": 20}],
                "algorithms": ["ADA"], "costs": [[1, 1]], "rounds": 3}"#,
        )
        .unwrap();
        let store = run_experiment(&cfg, RunOptions::default()).unwrap();
        let failed = store.records.iter().filter(|r| r.error.is_some()).count();
        assert_eq!(failed, 4);
        assert_eq!(store.records.len(), 4 + 4 + 1);
    }

    #[test]
    fn kept_models_replay_reported_rates() {
        let mut cfg = tiny_config(r#"["ABT", "AC1"]"#, "[[1, 3]]");
        cfg.keep_models = true;
        let store = run_experiment(&cfg, RunOptions::default()).unwrap();
        let names: Vec<String> = cfg.datasets.iter().map(|d| d.display_name()).collect();
        let data = prepare(&cfg, 0).unwrap();
        assert_eq!(data.full.name, names[0]);
        for r in store.records.iter().filter(|r| r.fold != FoldId::Avg) {
            let FoldId::Index(f) = r.fold else { unreachable!() };
            let clf = &store.models[&CellKey::of(r)];
            let test = &data.folds[f].1;
            let rates = ConfusionRates::from_predictions(
                &test.labels,
                (0..test.len()).map(|i| {
                    predict_ensemble(clf, test.features.row(i), Some(r.effective_rounds))
                }),
            );
            assert_eq!(rates, r.rates);
        }
    }
}
