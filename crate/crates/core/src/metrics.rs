//! Confusion rates, cost-curve coordinates and ranking statistics.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::boosting::{AlgorithmId, CostPair};

/// Error rates of a binary classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRates {
    pub fnr: f64,
    pub fpr: f64,
    /// Overall misclassification ratio.
    pub ce: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl ConfusionRates {
    pub fn from_counts(false_neg: usize, false_pos: usize, n_pos: usize, n_neg: usize) -> Self {
        let rate = |errors: usize, total: usize| {
            if total == 0 {
                0.0
            } else {
                errors as f64 / total as f64
            }
        };
        Self {
            fnr: rate(false_neg, n_pos),
            fpr: rate(false_pos, n_neg),
            ce: rate(false_neg + false_pos, n_pos + n_neg),
            n_pos,
            n_neg,
        }
    }

    /// Rates not backed by sample counts (analytic or averaged), balanced priors.
    pub fn from_rates(fnr: f64, fpr: f64) -> Self {
        Self {
            fnr,
            fpr,
            ce: 0.5 * (fnr + fpr),
            n_pos: 0,
            n_neg: 0,
        }
    }

    pub fn from_predictions(labels: &[i8], predictions: impl IntoIterator<Item = i8>) -> Self {
        let (mut fneg, mut fpos, mut n_pos, mut n_neg) = (0, 0, 0, 0);
        for (&y, h) in labels.iter().zip(predictions) {
            if y == 1 {
                n_pos += 1;
                if h != 1 {
                    fneg += 1;
                }
            } else {
                n_neg += 1;
                if h == 1 {
                    fpos += 1;
                }
            }
        }
        Self::from_counts(fneg, fpos, n_pos, n_neg)
    }

    pub fn tpr(&self) -> f64 {
        1.0 - self.fnr
    }

    pub fn tnr(&self) -> f64 {
        1.0 - self.fpr
    }

    pub fn is_balanced(&self) -> bool {
        self.n_pos == self.n_neg
    }
}

/// Probability cost function `P(+) C_P / (P(+) C_P + P(-) C_N)`.
pub fn pcf(costs: CostPair, prior_pos: f64) -> f64 {
    let weighted_pos = prior_pos * costs.c_pos;
    weighted_pos / (weighted_pos + (1.0 - prior_pos) * costs.c_neg)
}

/// Normalized expected cost `FNR * PCF + FPR * (1 - PCF)`.
pub fn nec(rates: &ConfusionRates, costs: CostPair, prior_pos: f64) -> f64 {
    let p = pcf(costs, prior_pos);
    rates.fnr * p + rates.fpr * (1.0 - p)
}

/// Distance of every entry to the smallest one.
pub fn delta_table<K: Ord + Clone>(values: &BTreeMap<K, f64>) -> BTreeMap<K, f64> {
    let min = values.values().copied().fold(f64::INFINITY, f64::min);
    values.iter().map(|(k, &v)| (k.clone(), v - min)).collect()
}

/// Mean and population variance of a conditioning cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

impl Moments {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = crate::sum::sum(values.iter().copied()) / n;
        let variance = crate::sum::sum(values.iter().map(|v| (v - mean) * (v - mean))) / n;
        Some(Self {
            mean,
            variance,
            count: values.len(),
        })
    }
}

/// One delta observation: algorithm, cost and dataset of a fold-averaged result.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaObservation {
    pub algorithm: AlgorithmId,
    pub cost: CostPair,
    pub dataset: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditionalMoments {
    pub by_algorithm: BTreeMap<AlgorithmId, Moments>,
    pub by_algorithm_cost: BTreeMap<(AlgorithmId, CostPair), Moments>,
}

impl ConditionalMoments {
    /// `None` when the cell holds no observations.
    pub fn algorithm(&self, alg: AlgorithmId) -> Option<Moments> {
        self.by_algorithm.get(&alg).copied()
    }

    pub fn algorithm_cost(&self, alg: AlgorithmId, cost: CostPair) -> Option<Moments> {
        self.by_algorithm_cost.get(&(alg, cost)).copied()
    }
}

/// Expectation and variance of the deltas conditioned on the algorithm, and
/// on the (algorithm, cost) pair.
pub fn conditional_moments(records: &[DeltaObservation]) -> ConditionalMoments {
    let mut by_alg: BTreeMap<AlgorithmId, Vec<f64>> = BTreeMap::new();
    let mut by_alg_cost: BTreeMap<(AlgorithmId, CostPair), Vec<f64>> = BTreeMap::new();
    for r in records {
        by_alg.entry(r.algorithm).or_default().push(r.delta);
        by_alg_cost.entry((r.algorithm, r.cost)).or_default().push(r.delta);
    }
    ConditionalMoments {
        by_algorithm: by_alg
            .into_iter()
            .filter_map(|(k, v)| Moments::of(&v).map(|m| (k, m)))
            .collect(),
        by_algorithm_cost: by_alg_cost
            .into_iter()
            .filter_map(|(k, v)| Moments::of(&v).map(|m| (k, m)))
            .collect(),
    }
}

/// `TPR / (TPR + TNR)`; `None` when the classifier gets nothing right.
///
/// Only meaningful on balanced sets.
pub fn classification_asymmetry(rates: &ConfusionRates) -> Option<f64> {
    let tpr = rates.tpr();
    let correct = tpr + rates.tnr();
    if correct <= 0.0 {
        None
    } else {
        Some(tpr / correct)
    }
}

/// Source of a result row: a boosting algorithm or the analytic Bayes rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    Bayes,
    Boost(AlgorithmId),
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Bayes => "BAY",
            Method::Boost(a) => a.as_str(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        if s == "BAY" {
            Some(Method::Bayes)
        } else {
            s.parse().ok().map(Method::Boost)
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fold index, or the fold average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FoldId {
    Index(usize),
    Avg,
}

impl fmt::Display for FoldId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoldId::Index(i) => write!(f, "{i}"),
            FoldId::Avg => f.write_str("AVG"),
        }
    }
}

impl std::str::FromStr for FoldId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "AVG" {
            Ok(FoldId::Avg)
        } else {
            s.parse().map(FoldId::Index).map_err(|_| format!("bad fold `{s}`"))
        }
    }
}

/// Test performance of one (method, dataset, cost, fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub algorithm: Method,
    pub dataset: String,
    pub cost: CostPair,
    pub fold: FoldId,
    pub rates: ConfusionRates,
    pub nec: f64,
    pub train_seconds: f64,
    pub effective_rounds: usize,
    pub trained_rounds: usize,
    /// Diagnostic for a failed cell; rates are NaN when set.
    pub error: Option<String>,
}
