use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::boosting::{AlgorithmId, CostPair};
use crate::error::{Error, Result};
use crate::metrics::{conditional_moments, DeltaObservation, FoldId, Method, Moments, ResultRecord};

use super::store::RunStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    AppendixTables,
    DeltaGlobal,
    DeltaByCost,
    CaSurface,
    Timing,
}

impl ReportKind {
    pub const ALL: [ReportKind; 5] = [
        ReportKind::AppendixTables,
        ReportKind::DeltaGlobal,
        ReportKind::DeltaByCost,
        ReportKind::CaSurface,
        ReportKind::Timing,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ReportKind::AppendixTables => "appendix_tables",
            ReportKind::DeltaGlobal => "delta_global",
            ReportKind::DeltaByCost => "delta_by_cost",
            ReportKind::CaSurface => "ca_surface",
            ReportKind::Timing => "timing",
        }
    }
}

impl fmt::Display for ReportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownReportKind(s.to_string()))
    }
}

/// Three significant figures in the appendix style: `6.14e-3`, with exact
/// zero and one written as `0.000` and `1.000`.
pub fn format_sig3(v: f64) -> String {
    if v == 0.0 {
        "0.000".into()
    } else if v == 1.0 {
        "1.000".into()
    } else if v.is_nan() {
        "NA".into()
    } else {
        format!("{v:.2e}")
    }
}

/// Methods excluded from the delta rankings: the untrained Bayes reference
/// and cost-blind AdaBoost.
fn is_ranked(m: Method) -> bool {
    !matches!(m, Method::Bayes | Method::Boost(AlgorithmId::Ada))
}

fn averages(store: &RunStore) -> impl Iterator<Item = &ResultRecord> {
    store
        .records
        .iter()
        .filter(|r| r.fold == FoldId::Avg && r.error.is_none())
}

/// Per-scenario deltas of `value` for every ranked algorithm.
pub fn delta_observations(
    store: &RunStore,
    value: impl Fn(&ResultRecord) -> f64,
) -> Vec<DeltaObservation> {
    let mut scenarios: BTreeMap<(String, CostPair), BTreeMap<AlgorithmId, f64>> = BTreeMap::new();
    for r in averages(store) {
        if let (true, Method::Boost(alg)) = (is_ranked(r.algorithm), r.algorithm) {
            scenarios
                .entry((r.dataset.clone(), r.cost))
                .or_default()
                .insert(alg, value(r));
        }
    }
    let mut out = Vec::new();
    for ((dataset, cost), values) in scenarios {
        for (alg, delta) in crate::metrics::delta_table(&values) {
            out.push(DeltaObservation {
                algorithm: alg,
                cost,
                dataset: dataset.clone(),
                delta,
            });
        }
    }
    out
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn moments_row(m: Option<Moments>) -> [String; 3] {
    match m {
        Some(m) => [m.mean.to_string(), m.variance.to_string(), m.count.to_string()],
        None => ["NA".into(), "NA".into(), "0".into()],
    }
}

/// Writes report `kind` for `store` into `out_dir`; returns the files written.
pub fn emit_report(store: &RunStore, kind: ReportKind, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if store.records.is_empty() {
        return Err(Error::InvalidParams("empty store".into()));
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    match kind {
        ReportKind::AppendixTables => appendix_tables(store, out_dir),
        ReportKind::DeltaGlobal => delta_report(store, out_dir, false),
        ReportKind::DeltaByCost => delta_report(store, out_dir, true),
        ReportKind::CaSurface => ca_surface(store, out_dir),
        ReportKind::Timing => timing(store, out_dir),
    }
}

fn appendix_tables(store: &RunStore, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut by_dataset: BTreeMap<&str, Vec<&ResultRecord>> = BTreeMap::new();
    for r in averages(store) {
        by_dataset.entry(&r.dataset).or_default().push(r);
    }
    let mut files = Vec::new();
    for (dataset, mut rows) in by_dataset {
        rows.sort_by(|a, b| a.cost.cmp(&b.cost).then(a.algorithm.cmp(&b.algorithm)));
        let path = out_dir.join(format!("appendix_{dataset}.csv"));
        let mut w = writer(&path)?;
        w.write_record(["Cost", "Alg", "FNR", "FPR", "CE", "NEC"])?;
        for r in rows {
            w.write_record([
                r.cost.to_string(),
                r.algorithm.to_string(),
                format_sig3(r.rates.fnr),
                format_sig3(r.rates.fpr),
                format_sig3(r.rates.ce),
                format_sig3(r.nec),
            ])?;
        }
        w.flush()?;
        files.push(path);
    }
    Ok(files)
}

fn delta_report(store: &RunStore, out_dir: &Path, by_cost: bool) -> Result<Vec<PathBuf>> {
    let name = if by_cost { "delta_by_cost.csv" } else { "delta_global.csv" };
    let path = out_dir.join(name);
    let mut w = writer(&path)?;
    if by_cost {
        w.write_record(["measure", "algorithm", "c_pos", "c_neg", "mean", "variance", "count"])?;
    } else {
        w.write_record(["measure", "algorithm", "mean", "variance", "count"])?;
    }
    let measures: [(&str, fn(&ResultRecord) -> f64); 2] =
        [("NEC", |r| r.nec), ("CE", |r| r.rates.ce)];
    for (measure, value) in measures {
        let obs = delta_observations(store, value);
        let moments = conditional_moments(&obs);
        if by_cost {
            for (&(alg, cost), &m) in &moments.by_algorithm_cost {
                let [mean, var, count] = moments_row(Some(m));
                w.write_record([
                    measure.to_string(),
                    alg.to_string(),
                    cost.c_pos.to_string(),
                    cost.c_neg.to_string(),
                    mean,
                    var,
                    count,
                ])?;
            }
        } else {
            for (&alg, &m) in &moments.by_algorithm {
                let [mean, var, count] = moments_row(Some(m));
                w.write_record([measure.to_string(), alg.to_string(), mean, var, count])?;
            }
        }
    }
    w.flush()?;
    Ok(vec![path])
}

fn ca_surface(store: &RunStore, out_dir: &Path) -> Result<Vec<PathBuf>> {
    // Fold-averaged training CA per (dataset, algorithm, cost, round).
    let mut cells: BTreeMap<(String, Method, CostPair), Vec<(f64, usize)>> = BTreeMap::new();
    for (key, trace) in &store.traces {
        let acc = cells
            .entry((key.dataset.clone(), key.algorithm, key.cost))
            .or_default();
        if acc.len() < trace.len() {
            acc.resize(trace.len(), (0.0, 0));
        }
        for (slot, r) in acc.iter_mut().zip(&trace.rounds) {
            if let Some(ca) = r.train_ca {
                slot.0 += ca;
                slot.1 += 1;
            }
        }
    }
    let path = out_dir.join("ca_surface.csv");
    let mut w = writer(&path)?;
    w.write_record(["dataset", "algorithm", "c_pos", "c_neg", "round", "ca"])?;
    for ((dataset, alg, cost), rounds) in cells {
        for (t, (sum, n)) in rounds.into_iter().enumerate() {
            let ca = if n == 0 {
                "NA".to_string()
            } else {
                (sum / n as f64).to_string()
            };
            w.write_record([
                dataset.clone(),
                alg.to_string(),
                cost.c_pos.to_string(),
                cost.c_neg.to_string(),
                (t + 1).to_string(),
                ca,
            ])?;
        }
    }
    w.flush()?;
    Ok(vec![path])
}

/// Mean training seconds per (dataset, algorithm, cost) over folds.
pub fn timing_by_cost(store: &RunStore) -> BTreeMap<(String, AlgorithmId, CostPair), f64> {
    let mut acc: BTreeMap<(String, AlgorithmId, CostPair), (f64, usize)> = BTreeMap::new();
    for r in &store.records {
        if let (FoldId::Index(_), Method::Boost(alg), None) = (r.fold, r.algorithm, &r.error) {
            let e = acc.entry((r.dataset.clone(), alg, r.cost)).or_default();
            e.0 += r.train_seconds;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Grand mean of [`timing_by_cost`] over costs, per (dataset, algorithm).
pub fn timing_grand_mean(by_cost: &BTreeMap<(String, AlgorithmId, CostPair), f64>) -> BTreeMap<(String, AlgorithmId), f64> {
    let mut acc: BTreeMap<(String, AlgorithmId), (f64, usize)> = BTreeMap::new();
    for ((dataset, alg, _), &s) in by_cost {
        let e = acc.entry((dataset.clone(), *alg)).or_default();
        e.0 += s;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn ratio(value: f64, reference: Option<&f64>) -> String {
    match reference {
        Some(&r) if r > 0.0 => (value / r).to_string(),
        _ => "NA".into(),
    }
}

fn timing(store: &RunStore, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let by_cost = timing_by_cost(store);
    let grand = timing_grand_mean(&by_cost);

    let path_cost = out_dir.join("timing_by_cost.csv");
    let mut w = writer(&path_cost)?;
    w.write_record(["dataset", "algorithm", "c_pos", "c_neg", "mean_seconds", "ratio_to_cga"])?;
    for ((dataset, alg, cost), &s) in &by_cost {
        let reference = by_cost.get(&(dataset.clone(), AlgorithmId::Cga, *cost));
        w.write_record([
            dataset.clone(),
            alg.to_string(),
            cost.c_pos.to_string(),
            cost.c_neg.to_string(),
            s.to_string(),
            ratio(s, reference),
        ])?;
    }
    w.flush()?;

    let path = out_dir.join("timing.csv");
    let mut w = writer(&path)?;
    w.write_record(["dataset", "algorithm", "mean_seconds", "ratio_to_cga", "jobs"])?;
    let jobs = store.fingerprint.jobs.to_string();
    for ((dataset, alg), &s) in &grand {
        let reference = grand.get(&(dataset.clone(), AlgorithmId::Cga));
        w.write_record([
            dataset.clone(),
            alg.to_string(),
            s.to_string(),
            ratio(s, reference),
            jobs.clone(),
        ])?;
    }
    w.flush()?;
    Ok(vec![path, path_cost])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::store::Fingerprint;
    use crate::harness::ExperimentConfig;
    use crate::metrics::{nec, ConfusionRates};

    fn record(alg: Method, dataset: &str, cost: CostPair, fold: FoldId, fnr: f64, fpr: f64, secs: f64) -> ResultRecord {
        let rates = ConfusionRates::from_rates(fnr, fpr);
        ResultRecord {
            algorithm: alg,
            dataset: dataset.into(),
            cost,
            fold,
            nec: nec(&rates, cost, 0.5),
            rates,
            train_seconds: secs,
            effective_rounds: 1,
            trained_rounds: 1,
            error: None,
        }
    }

    fn store(records: Vec<ResultRecord>) -> RunStore {
        RunStore {
            config: ExperimentConfig::from_json(r#"{"datasets": [{"kind": "bayes"}]}"#).unwrap(),
            records,
            traces: BTreeMap::new(),
            models: BTreeMap::new(),
            fingerprint: Fingerprint::current(1),
        }
    }

    fn read_rows(path: &Path) -> Vec<Vec<String>> {
        let mut r = csv::Reader::from_path(path).unwrap();
        r.records()
            .map(|row| row.unwrap().iter().map(String::from).collect())
            .collect()
    }

    #[test]
    fn format_examples() {
        assert_eq!(format_sig3(0.620 / 101.0), "6.14e-3");
        assert_eq!(format_sig3(0.0), "0.000");
        assert_eq!(format_sig3(1.0), "1.000");
        assert_eq!(format_sig3(0.5), "5.00e-1");
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!(matches!("tables".parse::<ReportKind>(), Err(Error::UnknownReportKind(_))));
        for k in ReportKind::ALL {
            assert_eq!(k.as_str().parse::<ReportKind>().unwrap(), k);
        }
    }

    #[test]
    fn single_average_gives_single_row() {
        let c = CostPair::new(1.0, 100.0).unwrap();
        let s = store(vec![record(Method::Bayes, "bayes", c, FoldId::Avg, 0.62, 0.0, 0.0)]);
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&s, ReportKind::AppendixTables, dir.path()).unwrap();
        let rows = read_rows(&files[0]);
        assert_eq!(
            rows,
            vec![vec!["[1, 100]", "BAY", "6.20e-1", "0.000", "3.10e-1", "6.14e-3"]]
        );
    }

    #[test]
    fn dominating_algorithm_has_zero_delta() {
        let mut records = Vec::new();
        for (i, c) in CostPair::grid().into_iter().take(4).enumerate() {
            for ds in ["a", "b"] {
                let shift = 0.01 * i as f64;
                records.push(record(Method::Boost(AlgorithmId::Cga), ds, c, FoldId::Avg, 0.05, 0.05, 0.0));
                records.push(record(Method::Boost(AlgorithmId::Csa), ds, c, FoldId::Avg, 0.1 + shift, 0.2, 0.0));
                records.push(record(Method::Boost(AlgorithmId::Ac1), ds, c, FoldId::Avg, 0.3, 0.1 + shift, 0.0));
                // Unranked methods never count, however good.
                records.push(record(Method::Boost(AlgorithmId::Ada), ds, c, FoldId::Avg, 0.0, 0.0, 0.0));
            }
        }
        let s = store(records);
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&s, ReportKind::DeltaGlobal, dir.path()).unwrap();
        let rows = read_rows(&files[0]);
        let cga: Vec<&Vec<String>> = rows.iter().filter(|r| r[1] == "CGA").collect();
        assert_eq!(cga.len(), 2);
        for r in cga {
            assert_eq!((r[2].as_str(), r[3].as_str(), r[4].as_str()), ("0", "0", "8"));
        }
        assert!(rows.iter().all(|r| r[1] != "ADA"));

        let files = emit_report(&s, ReportKind::DeltaByCost, dir.path()).unwrap();
        let rows = read_rows(&files[0]);
        assert_eq!(rows.len(), 2 * 3 * 4);
    }

    #[test]
    fn timing_ratios_match_hand_computation() {
        let c1 = CostPair::new(1.0, 5.0).unwrap();
        let c2 = CostPair::new(5.0, 1.0).unwrap();
        let mut records = Vec::new();
        let secs = [
            (AlgorithmId::Cga, c1, [1.0, 2.0, 3.0]),
            (AlgorithmId::Cga, c2, [2.0, 2.0, 2.0]),
            (AlgorithmId::Csa, c1, [10.0, 20.0, 30.0]),
            (AlgorithmId::Csa, c2, [30.0, 30.0, 60.0]),
        ];
        for (alg, c, s) in secs {
            for (f, &v) in s.iter().enumerate() {
                records.push(record(Method::Boost(alg), "d", c, FoldId::Index(f), 0.1, 0.1, v));
            }
        }
        let s = store(records);
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&s, ReportKind::Timing, dir.path()).unwrap();
        let grand = read_rows(&files[0]);
        // CGA: (2 + 2) / 2 = 2; CSA: (20 + 40) / 2 = 30.
        let csa = grand.iter().find(|r| r[1] == "CSA").unwrap();
        assert_eq!(csa[2].parse::<f64>().unwrap(), 30.0);
        assert_eq!(csa[3].parse::<f64>().unwrap(), 15.0);
        let cga = grand.iter().find(|r| r[1] == "CGA").unwrap();
        assert_eq!(cga[3].parse::<f64>().unwrap(), 1.0);
        let per_cost = read_rows(&files[1]);
        let csa_c2 = per_cost
            .iter()
            .find(|r| r[1] == "CSA" && r[2] == "5")
            .unwrap();
        assert_eq!(csa_c2[5].parse::<f64>().unwrap(), 20.0);
    }

    #[test]
    fn empty_store_rejected() {
        let s = store(Vec::new());
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_report(&s, ReportKind::Timing, dir.path()).is_err());
    }
}
