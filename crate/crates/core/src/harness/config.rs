use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boosting::{AlgorithmId, CostPair};
use crate::datasets::{
    default_angles, gen_bayes, gen_two_clouds, load_csv_balanced, Dataset, GaussParams,
    TwoCloudsGeometry,
};
use crate::error::{Error, Result};

use super::convergence::DeviationStatistic;

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    Bayes {
        #[serde(default = "default_bayes_count")]
        n_pos: usize,
        #[serde(default = "default_bayes_count")]
        n_neg: usize,
        #[serde(default)]
        params: Option<GaussParams>,
        /// Number of projection angles; ignored when `params` is given.
        #[serde(default)]
        n_angles: Option<usize>,
    },
    TwoClouds {
        #[serde(default = "default_clouds_count")]
        n_pos: usize,
        #[serde(default = "default_clouds_count")]
        n_neg: usize,
        #[serde(default)]
        geometry: Option<TwoCloudsGeometry>,
    },
    Csv {
        path: PathBuf,
        label_column: String,
        positive_label: String,
    },
}

fn default_bayes_count() -> usize {
    250
}

fn default_clouds_count() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    /// Name used in records; defaults to the generator name or file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub source: DatasetSource,
    /// Overrides the experiment-wide round count for this dataset.
    #[serde(default)]
    pub rounds: Option<Rounds>,
}

/// Number of boosting rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rounds {
    Fixed(usize),
    Named(RoundsKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundsKeyword {
    /// As many rounds as samples in the full dataset.
    #[serde(rename = "dataset-size")]
    DatasetSize,
}

impl Default for Rounds {
    fn default() -> Self {
        Rounds::Named(RoundsKeyword::DatasetSize)
    }
}

impl Rounds {
    pub fn resolve(&self, dataset_size: usize) -> usize {
        match self {
            Rounds::Fixed(t) => *t,
            Rounds::Named(RoundsKeyword::DatasetSize) => dataset_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub tol: f64,
    pub tail_fraction: f64,
    pub statistic: DeviationStatistic,
    /// Per-algorithm switch; algorithms not listed use the cutoff.
    /// AsymBoost never does, whatever this says.
    pub enabled_per_algorithm: BTreeMap<AlgorithmId, bool>,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            tail_fraction: 0.1,
            statistic: DeviationStatistic::MaxAbs,
            enabled_per_algorithm: BTreeMap::new(),
        }
    }
}

impl ConvergenceConfig {
    pub fn enabled_for(&self, alg: AlgorithmId) -> bool {
        alg != AlgorithmId::Asb && self.enabled_per_algorithm.get(&alg).copied().unwrap_or(true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<AlgorithmId>,
    #[serde(default = "CostPair::grid")]
    pub costs: Vec<CostPair>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub rounds: Rounds,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    /// Adds the analytic Bayes rule as a reference method on datasets that
    /// carry their generating Gaussians.
    #[serde(default = "default_true")]
    pub include_bayes_reference: bool,
    /// Writes a per-cell training trace.
    #[serde(default = "default_true")]
    pub save_traces: bool,
    /// Keeps trained classifiers in the in-memory store.
    #[serde(default)]
    pub keep_models: bool,
}

fn default_algorithms() -> Vec<AlgorithmId> {
    AlgorithmId::ALL.to_vec()
}

fn default_folds() -> usize {
    3
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        // Relative CSV paths are resolved against the config file.
        if let Some(dir) = path.parent() {
            for spec in &mut cfg.datasets {
                if let DatasetSource::Csv { path: p, .. } = &mut spec.source {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.datasets.is_empty() {
            return fail("no datasets");
        }
        if self.algorithms.is_empty() {
            return fail("no algorithms");
        }
        if self.costs.is_empty() {
            return fail("no costs");
        }
        if self.folds < 2 {
            return fail("folds must be at least 2");
        }
        if !(self.convergence.tol > 0.0) {
            return fail("convergence tol must be positive");
        }
        let tf = self.convergence.tail_fraction;
        if !(tf > 0.0 && tf < 1.0) {
            return fail("tail_fraction must lie in (0, 1)");
        }
        let mut names = std::collections::BTreeSet::new();
        for spec in &self.datasets {
            if matches!(spec.rounds.or(Some(self.rounds)), Some(Rounds::Fixed(0))) {
                return fail("rounds must be positive");
            }
            if !names.insert(spec.display_name()) {
                return Err(Error::Config(format!(
                    "duplicate dataset name `{}`",
                    spec.display_name()
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.algorithms.iter().all(|a| seen.insert(*a)) {
            return fail("duplicate algorithm");
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.costs.iter().all(|c| seen.insert(*c)) {
            return fail("duplicate cost pair");
        }
        Ok(())
    }

    /// Seed used to generate or subsample dataset `index`.
    pub fn dataset_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(1000 * index as u64)
    }

    /// Seed of the fold assignment of dataset `index`.
    pub fn fold_seed(&self, index: usize) -> u64 {
        self.dataset_seed(index).wrapping_add(1)
    }
}

impl DatasetSpec {
    pub fn display_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match &self.source {
            DatasetSource::Bayes { .. } => "bayes".into(),
            DatasetSource::TwoClouds { .. } => "two_clouds".into(),
            DatasetSource::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
        }
    }

    pub fn build(&self, seed: u64) -> Result<Dataset> {
        let mut ds = match &self.source {
            DatasetSource::Bayes {
                n_pos,
                n_neg,
                params,
                n_angles,
            } => {
                let params = match (params, n_angles) {
                    (Some(p), _) => p.clone(),
                    (None, Some(k)) => GaussParams {
                        angles: default_angles(*k),
                        ..GaussParams::default()
                    },
                    (None, None) => GaussParams::default(),
                };
                gen_bayes(*n_pos, *n_neg, &params, seed)?
            }
            DatasetSource::TwoClouds {
                n_pos,
                n_neg,
                geometry,
            } => gen_two_clouds(*n_pos, *n_neg, &geometry.clone().unwrap_or_default(), seed)?,
            DatasetSource::Csv {
                path,
                label_column,
                positive_label,
            } => load_csv_balanced(path, label_column, positive_label, seed)?,
        };
        ds.name = self.display_name();
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"datasets": [{"kind": "bayes"}]}"#).unwrap();
        assert_eq!(cfg.algorithms.len(), 12);
        assert_eq!(cfg.costs, CostPair::grid());
        assert_eq!(cfg.folds, 3);
        assert_eq!(cfg.rounds, Rounds::Named(RoundsKeyword::DatasetSize));
        assert_eq!(cfg.convergence.tol, 1e-3);
        assert_eq!(cfg.convergence.tail_fraction, 0.1);
        assert!(!cfg.convergence.enabled_for(AlgorithmId::Asb));
        assert!(cfg.convergence.enabled_for(AlgorithmId::Csa));
        let ds = cfg.datasets[0].build(1).unwrap();
        assert_eq!((ds.len(), ds.n_features()), (500, 31));
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"{
            "datasets": [
                {"kind": "bayes", "n_pos": 20, "n_neg": 30, "rounds": 7},
                {"kind": "two_clouds", "name": "clouds", "n_pos": 10, "n_neg": 10}
            ],
            "algorithms": ["ADA", "CSA"],
            "costs": [[1, 5], {"c_pos": 2, "c_neg": 1}],
            "folds": 2,
            "rounds": 12,
            "seed": 9,
            "convergence": {"tol": 0.01, "statistic": "std",
                            "enabled_per_algorithm": {"CSA": false}}
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.datasets[0].rounds, Some(Rounds::Fixed(7)));
        assert_eq!(cfg.rounds.resolve(100), 12);
        assert!(!cfg.convergence.enabled_for(AlgorithmId::Csa));
        assert_eq!(cfg.datasets[1].display_name(), "clouds");
        let again = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn invalid_configs_rejected() {
        for text in [
            r#"{"datasets": []}"#,
            r#"{"datasets": [{"kind": "bayes"}], "algorithms": []}"#,
            r#"{"datasets": [{"kind": "bayes"}], "costs": [[0, 1]]}"#,
            r#"{"datasets": [{"kind": "bayes"}], "folds": 1}"#,
            r#"{"datasets": [{"kind": "bayes"}], "convergence": {"tol": 0}}"#,
            r#"{"datasets": [{"kind": "bayes"}], "convergence": {"tail_fraction": 1.0}}"#,
            r#"{"datasets": [{"kind": "bayes"}], "algorithms": ["FOO"]}"#,
            r#"{"datasets": [{"kind": "bayes"}, {"kind": "bayes"}]}"#,
            r#"{"datasets": [{"kind": "bayes"}], "rounds": 0}"#,
            r#"{"datasets": [{"kind": "moons"}]}"#,
        ] {
            assert!(ExperimentConfig::from_json(text).is_err(), "{text}");
        }
    }
}
