//! AdaBoost and its cost-sensitive variants over decision stumps.
//!
//! Every algorithm shares one training loop ([`train_ensemble`]); they differ
//! only in weight initialization and in the per-round rule implemented by
//! [`Booster::round`].

mod csa;
mod rules;
mod threshold;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datasets::{Dataset, FeatureMatrix};
use crate::error::{Error, Result};
use crate::metrics::{classification_asymmetry, nec, ConfusionRates};
use crate::weaklearn::{validate_labels, Stump, WeightVector};

pub use csa::{csa_log_loss, csa_loss, floor_masses, solve_csa_alpha, MASS_FLOOR};
pub use rules::{Booster, RoundOutcome};
pub use threshold::{adjust_threshold, adjust_threshold_with_nec};

/// Clamp applied to error rates and edge terms before taking logarithms.
pub const ERROR_CLAMP: f64 = 1e-10;

/// Misclassification costs: `c_pos` for a false negative, `c_neg` for a
/// false positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostRepr", into = "[f64; 2]")]
pub struct CostPair {
    pub c_pos: f64,
    pub c_neg: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CostRepr {
    Pair([f64; 2]),
    Named { c_pos: f64, c_neg: f64 },
}

impl TryFrom<CostRepr> for CostPair {
    type Error = Error;

    fn try_from(r: CostRepr) -> Result<Self> {
        match r {
            CostRepr::Pair([p, n]) | CostRepr::Named { c_pos: p, c_neg: n } => CostPair::new(p, n),
        }
    }
}

impl From<CostPair> for [f64; 2] {
    fn from(c: CostPair) -> Self {
        [c.c_pos, c.c_neg]
    }
}

impl CostPair {
    pub fn new(c_pos: f64, c_neg: f64) -> Result<Self> {
        let ok = |c: f64| c.is_finite() && c > 0.0;
        if ok(c_pos) && ok(c_neg) {
            Ok(Self { c_pos, c_neg })
        } else {
            Err(Error::InvalidCost { c_pos, c_neg })
        }
    }

    pub const UNIT: CostPair = CostPair {
        c_pos: 1.0,
        c_neg: 1.0,
    };

    pub fn per_sample_cost(&self, label: i8) -> f64 {
        if label == 1 {
            self.c_pos
        } else {
            self.c_neg
        }
    }

    /// Both costs divided by the larger one.
    pub fn normalized(&self) -> CostPair {
        let m = self.c_pos.max(self.c_neg);
        CostPair {
            c_pos: self.c_pos / m,
            c_neg: self.c_neg / m,
        }
    }

    pub fn scaled(&self, lambda: f64) -> Result<CostPair> {
        CostPair::new(self.c_pos * lambda, self.c_neg * lambda)
    }

    /// The nineteen cost combinations of the benchmark, from strongly
    /// negative-favouring to strongly positive-favouring.
    pub fn grid() -> Vec<CostPair> {
        const GRID: [(f64, f64); 19] = [
            (1.0, 100.0),
            (1.0, 50.0),
            (1.0, 25.0),
            (1.0, 10.0),
            (1.0, 7.0),
            (1.0, 5.0),
            (1.0, 3.0),
            (1.0, 2.0),
            (2.0, 3.0),
            (1.0, 1.0),
            (3.0, 2.0),
            (2.0, 1.0),
            (3.0, 1.0),
            (5.0, 1.0),
            (7.0, 1.0),
            (10.0, 1.0),
            (25.0, 1.0),
            (50.0, 1.0),
            (100.0, 1.0),
        ];
        GRID.iter()
            .map(|&(c_pos, c_neg)| CostPair { c_pos, c_neg })
            .collect()
    }
}

impl Eq for CostPair {}

impl Ord for CostPair {
    /// Orders by `c_pos / c_neg`, then by magnitude.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.c_pos / self.c_neg)
            .total_cmp(&(other.c_pos / other.c_neg))
            .then(self.c_pos.total_cmp(&other.c_pos))
            .then(self.c_neg.total_cmp(&other.c_neg))
    }
}

impl PartialOrd for CostPair {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for CostPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.c_pos, self.c_neg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AlgorithmId {
    /// Plain AdaBoost.
    Ada,
    /// AdaBoost with a cost-aware decision threshold.
    Abt,
    /// AsymBoost.
    Asb,
    /// AdaCost.
    Adc,
    /// Cost-sensitive boosting, variants 0 to 2.
    Cb0,
    Cb1,
    Cb2,
    /// AdaC1 to AdaC3.
    Ac1,
    Ac2,
    Ac3,
    /// Cost-sensitive AdaBoost.
    Csa,
    /// Cost-generalized AdaBoost.
    Cga,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 12] = [
        AlgorithmId::Ada,
        AlgorithmId::Abt,
        AlgorithmId::Asb,
        AlgorithmId::Adc,
        AlgorithmId::Cb0,
        AlgorithmId::Cb1,
        AlgorithmId::Cb2,
        AlgorithmId::Ac1,
        AlgorithmId::Ac2,
        AlgorithmId::Ac3,
        AlgorithmId::Csa,
        AlgorithmId::Cga,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmId::Ada => "ADA",
            AlgorithmId::Abt => "ABT",
            AlgorithmId::Asb => "ASB",
            AlgorithmId::Adc => "ADC",
            AlgorithmId::Cb0 => "CB0",
            AlgorithmId::Cb1 => "CB1",
            AlgorithmId::Cb2 => "CB2",
            AlgorithmId::Ac1 => "AC1",
            AlgorithmId::Ac2 => "AC2",
            AlgorithmId::Ac3 => "AC3",
            AlgorithmId::Csa => "CSA",
            AlgorithmId::Cga => "CGA",
        }
    }

    /// Whether the algorithm looks at the costs at all.
    pub fn is_cost_sensitive(&self) -> bool {
        *self != AlgorithmId::Ada
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.as_str() == upper)
            .ok_or_else(|| Error::InvalidParams(format!("unknown algorithm `{s}`")))
    }
}

impl TryFrom<String> for AlgorithmId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AlgorithmId> for String {
    fn from(a: AlgorithmId) -> Self {
        a.as_str().to_string()
    }
}

/// Weighted vote of stumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongClassifier {
    pub stumps: Vec<Stump>,
    pub alphas: Vec<f64>,
    /// Threshold subtracted from the vote at `effective_rounds`.
    pub decision_threshold: f64,
    pub trained_rounds: usize,
    pub effective_rounds: usize,
    /// Threshold chosen after each round, for algorithms that adjust one.
    /// Empty otherwise.
    pub round_thresholds: Vec<f64>,
}

impl StrongClassifier {
    /// Vote of the first `rounds` stumps.
    pub fn score(&self, row: &[f64], rounds: usize) -> f64 {
        self.stumps[..rounds]
            .iter()
            .zip(&self.alphas)
            .map(|(s, &a)| a * f64::from(s.predict(row)))
            .sum()
    }

    /// Threshold in force when the vote is truncated after `rounds`.
    pub fn threshold_at(&self, rounds: usize) -> f64 {
        if rounds == self.effective_rounds || self.round_thresholds.is_empty() || rounds == 0 {
            self.decision_threshold
        } else {
            self.round_thresholds[rounds - 1]
        }
    }

    pub fn predict(&self, row: &[f64]) -> i8 {
        predict_ensemble(self, row, None)
    }

    /// Truncates the vote after `cutoff` rounds, switching to that round's
    /// threshold when per-round thresholds exist.
    pub fn apply_cutoff(&mut self, cutoff: usize) -> Result<()> {
        if cutoff == 0 || cutoff > self.trained_rounds {
            return Err(Error::InvalidParams(format!(
                "cutoff {cutoff} outside 1..={}",
                self.trained_rounds
            )));
        }
        if let Some(&theta) = self.round_thresholds.get(cutoff - 1) {
            self.decision_threshold = theta;
        }
        self.effective_rounds = cutoff;
        Ok(())
    }
}

/// `sign(vote - threshold)` with `sign(0) = +1`. Without a cutoff the
/// classifier's effective rounds are used.
pub fn predict_ensemble(clf: &StrongClassifier, row: &[f64], round_cutoff: Option<usize>) -> i8 {
    let rounds = round_cutoff
        .unwrap_or(clf.effective_rounds)
        .min(clf.trained_rounds);
    if clf.score(row, rounds) - clf.threshold_at(rounds) >= 0.0 {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub alpha: f64,
    /// Sum of the updated weights before normalization.
    pub z: f64,
    /// Training-set NEC of the ensemble truncated after this round.
    pub train_nec: f64,
    /// Training-set classification asymmetry; `None` when undefined.
    pub train_ca: Option<f64>,
    pub wall_seconds: f64,
    /// An error term hit its clamp.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub rounds: Vec<RoundRecord>,
}

impl TrainingTrace {
    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn train_nec(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.train_nec).collect()
    }

    pub fn train_seconds(&self) -> f64 {
        self.rounds.iter().map(|r| r.wall_seconds).sum()
    }
}

/// Starting weights: proportional to the per-sample cost for CGA, uniform
/// for every other algorithm.
pub fn init_weights(algorithm: AlgorithmId, labels: &[i8], costs: CostPair) -> Result<WeightVector> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    validate_labels(labels)?;
    match algorithm {
        AlgorithmId::Cga => {
            WeightVector::normalized(labels.iter().map(|&y| costs.per_sample_cost(y)).collect())
        }
        _ => Ok(WeightVector::uniform(labels.len())),
    }
}

/// One round of `algorithm` from `weights`, round `t` of `total_rounds`.
///
/// Builds a fresh stump index; loops should hold a [`Booster`] instead.
pub fn boost_round(
    algorithm: AlgorithmId,
    weights: &WeightVector,
    t: usize,
    total_rounds: usize,
    features: &FeatureMatrix,
    labels: &[i8],
    costs: CostPair,
) -> Result<RoundOutcome> {
    let booster = Booster::new(algorithm, features, labels, costs)?;
    booster.round(weights, t, total_rounds)
}

/// Trains `rounds` rounds on a whole dataset.
pub fn train_ensemble(
    algorithm: AlgorithmId,
    train: &Dataset,
    costs: CostPair,
    rounds: usize,
    seed: u64,
) -> Result<(StrongClassifier, TrainingTrace)> {
    train_on(algorithm, &train.features, &train.labels, costs, rounds, seed)
}

/// [`train_ensemble`] over a bare feature matrix.
///
/// Training is deterministic; `seed` exists so callers can record it and is
/// not consumed by any current algorithm.
pub fn train_on(
    algorithm: AlgorithmId,
    features: &FeatureMatrix,
    labels: &[i8],
    costs: CostPair,
    rounds: usize,
    _seed: u64,
) -> Result<(StrongClassifier, TrainingTrace)> {
    if rounds == 0 {
        return Err(Error::InvalidParams("at least one round is required".into()));
    }
    let booster = Booster::new(algorithm, features, labels, costs)?;
    let mut weights = init_weights(algorithm, labels, costs)?;
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;
    let adjusts_threshold = algorithm == AlgorithmId::Abt;

    let mut clf = StrongClassifier {
        stumps: Vec::with_capacity(rounds),
        alphas: Vec::with_capacity(rounds),
        decision_threshold: 0.0,
        trained_rounds: 0,
        effective_rounds: 0,
        round_thresholds: Vec::new(),
    };
    let mut trace = TrainingTrace::default();
    let mut scores = vec![0.0; labels.len()];

    for t in 1..=rounds {
        let start = Instant::now();
        let outcome = booster.round(&weights, t, rounds)?;
        let wall_seconds = start.elapsed().as_secs_f64();

        for (i, s) in scores.iter_mut().enumerate() {
            *s += outcome.alpha * f64::from(outcome.stump.predict(features.row(i)));
        }
        let theta = if adjusts_threshold {
            let theta = adjust_threshold(&scores, labels, costs);
            clf.round_thresholds.push(theta);
            theta
        } else {
            0.0
        };
        let (mut fneg, mut fpos) = (0usize, 0usize);
        for (&s, &y) in scores.iter().zip(labels) {
            let h = if s - theta >= 0.0 { 1 } else { -1 };
            if h != y {
                if y == 1 {
                    fneg += 1;
                } else {
                    fpos += 1;
                }
            }
        }
        let rates = ConfusionRates::from_counts(fneg, fpos, n_pos, n_neg);

        clf.stumps.push(outcome.stump);
        clf.alphas.push(outcome.alpha);
        clf.decision_threshold = theta;
        trace.rounds.push(RoundRecord {
            alpha: outcome.alpha,
            z: outcome.z,
            train_nec: nec(&rates, costs, 0.5),
            train_ca: classification_asymmetry(&rates),
            wall_seconds,
            degenerate: outcome.degenerate,
        });
        weights = outcome.weights;
    }
    clf.trained_rounds = rounds;
    clf.effective_rounds = rounds;
    Ok((clf, trace))
}
