//! Decision stumps trained over weighted samples.
//!
//! A stump looks at a single feature and predicts `polarity` when the value
//! lies strictly above its threshold, `-polarity` otherwise. Training is an
//! exhaustive sweep over every feature, every candidate threshold and both
//! polarities. Candidate thresholds for a feature are the midpoints between
//! consecutive distinct sorted values plus `min - 1`, which gives the
//! constant classifier on that feature.
//!
//! Ties are resolved in a fixed total order so that training is reproducible:
//! lowest objective, then lowest feature index, then lowest threshold, then
//! polarity `+1`. Two objectives closer than [`TIE_RELATIVE_TOLERANCE`] times
//! the total mass are treated as tied, so summation rounding never decides
//! between candidates that misclassify equal mass.

use serde::{Deserialize, Serialize};

use crate::datasets::FeatureMatrix;
use crate::error::{Error, Result};
use crate::sum::{self, NeumaierSum};

/// Objectives within this fraction of the total mass are considered equal.
pub const TIE_RELATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature_index: usize,
    pub threshold: f64,
    /// Prediction for values above the threshold; `-polarity` otherwise.
    pub polarity: i8,
}

impl Stump {
    pub fn new(feature_index: usize, threshold: f64, polarity: i8) -> Self {
        debug_assert!(polarity == 1 || polarity == -1);
        Self {
            feature_index,
            threshold,
            polarity,
        }
    }

    #[inline]
    pub fn predict(&self, row: &[f64]) -> i8 {
        if row[self.feature_index] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

/// Free-function form of [`Stump::predict`].
#[inline]
pub fn stump_predict(stump: &Stump, row: &[f64]) -> i8 {
    stump.predict(row)
}

/// Per-sample weight distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Normalizes `raw` to unit sum. Fails on negative, non-finite or all-zero input.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        validate_weights(&raw)?;
        let total = sum::sum(raw.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidParams("weights sum to zero".into()));
        }
        Ok(Self(raw.into_iter().map(|w| w / total).collect()))
    }

    /// Wraps weights that are already normalized.
    pub fn from_normalized(weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        sum::sum(self.0.iter().copied())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidWeight { index, value });
        }
    }
    Ok(())
}

pub(crate) fn validate_labels(labels: &[i8]) -> Result<()> {
    for (index, &y) in labels.iter().enumerate() {
        if y != 1 && y != -1 {
            return Err(Error::InvalidLabel {
                index,
                value: y as i64,
            });
        }
    }
    Ok(())
}

/// Weight mass split by class and correctness.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMasses {
    /// Correctly classified positives.
    pub b_p: f64,
    /// Misclassified positives.
    pub d_p: f64,
    /// Correctly classified negatives.
    pub b_n: f64,
    /// Misclassified negatives.
    pub d_n: f64,
}

impl ClassMasses {
    pub fn total(&self) -> f64 {
        self.b_p + self.d_p + self.b_n + self.d_n
    }

    /// Masses of the same stump with its polarity reversed.
    pub fn flipped(&self) -> Self {
        Self {
            b_p: self.d_p,
            d_p: self.b_p,
            b_n: self.d_n,
            d_n: self.b_n,
        }
    }
}

pub fn class_masses(
    stump: &Stump,
    features: &FeatureMatrix,
    labels: &[i8],
    weights: &WeightVector,
) -> Result<ClassMasses> {
    check_inputs(features, labels, weights.as_slice())?;
    if stump.feature_index >= features.n_features() {
        return Err(Error::Shape(format!(
            "stump feature {} out of range for {} features",
            stump.feature_index,
            features.n_features()
        )));
    }
    let (mut b_p, mut d_p, mut b_n, mut d_n) = (
        NeumaierSum::new(),
        NeumaierSum::new(),
        NeumaierSum::new(),
        NeumaierSum::new(),
    );
    for (i, (&y, &w)) in labels.iter().zip(weights.as_slice()).enumerate() {
        let correct = stump.predict(features.row(i)) == y;
        match (y == 1, correct) {
            (true, true) => b_p.add(w),
            (true, false) => d_p.add(w),
            (false, true) => b_n.add(w),
            (false, false) => d_n.add(w),
        }
    }
    Ok(ClassMasses {
        b_p: b_p.value(),
        d_p: d_p.value(),
        b_n: b_n.value(),
        d_n: d_n.value(),
    })
}

fn check_inputs(features: &FeatureMatrix, labels: &[i8], weights: &[f64]) -> Result<()> {
    if features.n_rows() == 0 || features.n_features() == 0 {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != features.n_rows() || weights.len() != features.n_rows() {
        return Err(Error::Shape(format!(
            "{} rows, {} labels, {} weights",
            features.n_rows(),
            labels.len(),
            weights.len()
        )));
    }
    validate_labels(labels)?;
    validate_weights(weights)
}

/// Best stump and the objective it attains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StumpFit {
    pub stump: Stump,
    /// `sum_i m_i * w_i * [h(x_i) != y_i]`.
    pub objective: f64,
}

/// One distinct-value boundary in a sorted feature column.
#[derive(Debug, Clone, Copy)]
struct Cut {
    /// Number of sorted samples at or below the threshold.
    below: usize,
    threshold: f64,
}

/// Per-feature sort orders and candidate thresholds, computed once per
/// training set and reused across boosting rounds.
#[derive(Debug, Clone)]
pub struct StumpSearch {
    n_rows: usize,
    n_features: usize,
    /// `order[f]` lists sample indices by ascending value of feature `f`.
    order: Vec<Vec<u32>>,
    /// `cuts[f]` lists candidate thresholds ascending, starting with `min - 1`.
    cuts: Vec<Vec<Cut>>,
}

impl StumpSearch {
    pub fn new(features: &FeatureMatrix) -> Result<Self> {
        let n_rows = features.n_rows();
        let n_features = features.n_features();
        if n_rows == 0 || n_features == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut order = Vec::with_capacity(n_features);
        let mut cuts = Vec::with_capacity(n_features);
        for f in 0..n_features {
            let mut idx: Vec<u32> = (0..n_rows as u32).collect();
            idx.sort_by(|&a, &b| {
                features
                    .get(a as usize, f)
                    .total_cmp(&features.get(b as usize, f))
                    .then(a.cmp(&b))
            });
            let values: Vec<f64> = idx.iter().map(|&i| features.get(i as usize, f)).collect();
            let mut feature_cuts = vec![Cut {
                below: 0,
                threshold: values[0] - 1.0,
            }];
            for k in 1..n_rows {
                if values[k] != values[k - 1] {
                    feature_cuts.push(Cut {
                        below: k,
                        threshold: 0.5 * (values[k - 1] + values[k]),
                    });
                }
            }
            order.push(idx);
            cuts.push(feature_cuts);
        }
        Ok(Self {
            n_rows,
            n_features,
            order,
            cuts,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Minimizes `sum_i effective_i * [h(x_i) != y_i]` over all candidates.
    ///
    /// `effective` holds the per-sample products `m_i * w_i`.
    pub fn best_weighted(&self, labels: &[i8], effective: &[f64]) -> StumpFit {
        debug_assert_eq!(labels.len(), self.n_rows);
        debug_assert_eq!(effective.len(), self.n_rows);
        let (mut pos_total, mut neg_total) = (NeumaierSum::new(), NeumaierSum::new());
        for (&y, &e) in labels.iter().zip(effective) {
            if y == 1 {
                pos_total.add(e);
            } else {
                neg_total.add(e);
            }
        }
        let pos_total = pos_total.value();
        let neg_total = neg_total.value();
        let tolerance = TIE_RELATIVE_TOLERANCE * (pos_total + neg_total);

        let mut best = StumpFit {
            stump: Stump::new(0, f64::NEG_INFINITY, 1),
            objective: f64::INFINITY,
        };
        for f in 0..self.n_features {
            let order = &self.order[f];
            let mut below_pos = NeumaierSum::new();
            let mut below_neg = NeumaierSum::new();
            let mut consumed = 0usize;
            for cut in &self.cuts[f] {
                while consumed < cut.below {
                    let i = order[consumed] as usize;
                    if labels[i] == 1 {
                        below_pos.add(effective[i]);
                    } else {
                        below_neg.add(effective[i]);
                    }
                    consumed += 1;
                }
                let bp = below_pos.value();
                let bn = below_neg.value();
                // Polarity +1 errs on positives at or below and negatives above.
                let err_plus = bp + (neg_total - bn);
                let err_minus = (pos_total - bp) + bn;
                if err_plus < best.objective - tolerance {
                    best = StumpFit {
                        stump: Stump::new(f, cut.threshold, 1),
                        objective: err_plus,
                    };
                }
                if err_minus < best.objective - tolerance {
                    best = StumpFit {
                        stump: Stump::new(f, cut.threshold, -1),
                        objective: err_minus,
                    };
                }
            }
        }
        best
    }

    /// Visits every (feature, threshold) candidate with the polarity `+1`
    /// class masses of `weights`. Used by joint stump/step searches.
    pub fn for_each_cut<F>(&self, labels: &[i8], weights: &[f64], mut visit: F)
    where
        F: FnMut(usize, f64, ClassMasses),
    {
        let (mut pos_total, mut neg_total) = (NeumaierSum::new(), NeumaierSum::new());
        for (&y, &w) in labels.iter().zip(weights) {
            if y == 1 {
                pos_total.add(w);
            } else {
                neg_total.add(w);
            }
        }
        let pos_total = pos_total.value();
        let neg_total = neg_total.value();
        for f in 0..self.n_features {
            let order = &self.order[f];
            let mut below_pos = NeumaierSum::new();
            let mut below_neg = NeumaierSum::new();
            let mut consumed = 0usize;
            for cut in &self.cuts[f] {
                while consumed < cut.below {
                    let i = order[consumed] as usize;
                    if labels[i] == 1 {
                        below_pos.add(weights[i]);
                    } else {
                        below_neg.add(weights[i]);
                    }
                    consumed += 1;
                }
                let bp = below_pos.value();
                let bn = below_neg.value();
                let masses = ClassMasses {
                    b_p: pos_total - bp,
                    d_p: bp,
                    b_n: bn,
                    d_n: neg_total - bn,
                };
                visit(f, cut.threshold, masses);
            }
        }
    }
}

/// Trains the stump minimizing `sum_i m_i * w_i * [h(x_i) != y_i]`, with
/// `m_i = 1` when no multiplier is given.
pub fn train_stump(
    features: &FeatureMatrix,
    labels: &[i8],
    weights: &WeightVector,
    multiplier: Option<&[f64]>,
) -> Result<StumpFit> {
    check_inputs(features, labels, weights.as_slice())?;
    let search = StumpSearch::new(features)?;
    let effective = effective_weights(weights.as_slice(), multiplier)?;
    Ok(search.best_weighted(labels, &effective))
}

pub(crate) fn effective_weights(weights: &[f64], multiplier: Option<&[f64]>) -> Result<Vec<f64>> {
    match multiplier {
        None => Ok(weights.to_vec()),
        Some(m) => {
            if m.len() != weights.len() {
                return Err(Error::Shape(format!(
                    "multiplier has {} entries for {} samples",
                    m.len(),
                    weights.len()
                )));
            }
            for (index, &value) in m.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "multiplier entry {index} is {value}"
                    )));
                }
            }
            Ok(weights.iter().zip(m).map(|(w, m)| w * m).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    /// Direct objective of one stump.
    fn objective(stump: &Stump, x: &FeatureMatrix, y: &[i8], e: &[f64]) -> f64 {
        (0..x.n_rows())
            .filter(|&i| stump.predict(x.row(i)) != y[i])
            .map(|i| e[i])
            .sum()
    }

    /// Every (feature, midpoint-or-below-min, polarity) candidate.
    fn brute_force_candidates(x: &FeatureMatrix) -> Vec<Stump> {
        let mut out = Vec::new();
        for f in 0..x.n_features() {
            let mut vals: Vec<f64> = (0..x.n_rows()).map(|i| x.get(i, f)).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let mut thresholds = vec![vals[0] - 1.0];
            thresholds.extend(vals.windows(2).map(|w| (w[0] + w[1]) / 2.0));
            for t in thresholds {
                out.push(Stump::new(f, t, 1));
                out.push(Stump::new(f, t, -1));
            }
        }
        out
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize, f: usize) -> (FeatureMatrix, Vec<i8>, WeightVector) {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..f).map(|_| (rng.gen_range(0..6) as f64) * 0.5).collect())
            .collect();
        let labels: Vec<i8> = (0..n).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        (
            FeatureMatrix::from_rows(rows).unwrap(),
            labels,
            WeightVector::normalized(raw).unwrap(),
        )
    }

    #[test]
    fn separable_pair() {
        let x = matrix(&[&[0.0], &[1.0]]);
        let fit = train_stump(&x, &[-1, 1], &WeightVector::uniform(2), None).unwrap();
        assert_eq!(fit.stump, Stump::new(0, 0.5, 1));
        assert_eq!(fit.objective, 0.0);
    }

    #[test]
    fn mirrored_pair() {
        let x = matrix(&[&[0.0], &[1.0]]);
        let fit = train_stump(&x, &[1, -1], &WeightVector::uniform(2), None).unwrap();
        assert_eq!(fit.stump, Stump::new(0, 0.5, -1));
        assert_eq!(fit.objective, 0.0);
    }

    #[test]
    fn predict_examples() {
        let s = Stump::new(0, 0.5, 1);
        assert_eq!(stump_predict(&s, &[1.0]), 1);
        assert_eq!(stump_predict(&s, &[0.0]), -1);
        assert_eq!(stump_predict(&Stump::new(0, 0.5, -1), &[1.0]), -1);
    }

    #[test]
    fn brute_force_eight_by_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (x, y, w) = random_instance(&mut rng, 8, 3);
        let fit = train_stump(&x, &y, &w, None).unwrap();
        let best = brute_force_candidates(&x)
            .iter()
            .map(|s| objective(s, &x, &y, w.as_slice()))
            .fold(f64::INFINITY, f64::min);
        assert!((fit.objective - best).abs() < 1e-12);
        assert!((objective(&fit.stump, &x, &y, w.as_slice()) - best).abs() < 1e-12);
    }

    #[test]
    fn tie_break_prefers_low_feature_then_threshold_then_positive() {
        // Both features separate perfectly; feature 0 must win.
        let x = matrix(&[&[0.0, 0.0], &[1.0, 1.0]]);
        let fit = train_stump(&x, &[-1, 1], &WeightVector::uniform(2), None).unwrap();
        assert_eq!(fit.stump.feature_index, 0);
        // Constant labels: the below-minimum cut with polarity +1 wins.
        let x = matrix(&[&[0.0], &[1.0], &[2.0]]);
        let fit = train_stump(&x, &[1, 1, 1], &WeightVector::uniform(3), None).unwrap();
        assert_eq!(fit.stump, Stump::new(0, -1.0, 1));
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = matrix(&[&[0.0], &[1.0]]);
        let bad = WeightVector(vec![0.5, -0.5]);
        assert!(matches!(
            train_stump(&x, &[1, -1], &bad, None),
            Err(Error::InvalidWeight { index: 1, .. })
        ));
        let nan = WeightVector(vec![f64::NAN, 0.5]);
        assert!(train_stump(&x, &[1, -1], &nan, None).is_err());
        let empty = FeatureMatrix::from_rows(vec![]).unwrap();
        assert!(matches!(
            train_stump(&empty, &[], &WeightVector(vec![]), None),
            Err(Error::EmptyDataset)
        ));
        assert!(train_stump(&x, &[1, -1], &WeightVector::uniform(2), Some(&[1.0])).is_err());
    }

    #[test]
    fn masses_examples() {
        let x = matrix(&[&[1.0], &[2.0], &[3.0]]);
        let w = WeightVector::uniform(3);
        let m = class_masses(&Stump::new(0, 0.0, 1), &x, &[1, 1, 1], &w).unwrap();
        assert!((m.b_p - 1.0).abs() < 1e-15);
        assert_eq!((m.d_p, m.b_n, m.d_n), (0.0, 0.0, 0.0));

        let x = matrix(&[&[0.0], &[1.0]]);
        let m = class_masses(&Stump::new(0, 0.5, -1), &x, &[-1, 1], &WeightVector::uniform(2)).unwrap();
        assert_eq!((m.d_p, m.d_n, m.b_p, m.b_n), (0.5, 0.5, 0.0, 0.0));
    }

    #[test]
    fn masses_match_per_sample_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (x, y, w) = random_instance(&mut rng, 10, 2);
        let stump = Stump::new(1, 1.25, -1);
        let m = class_masses(&stump, &x, &y, &w).unwrap();
        let mut expect = [0.0f64; 4];
        for i in 0..10 {
            let h = stump.predict(x.row(i));
            let slot = match (y[i], h == y[i]) {
                (1, true) => 0,
                (1, false) => 1,
                (_, true) => 2,
                (_, false) => 3,
            };
            expect[slot] += w.as_slice()[i];
        }
        assert!((m.b_p - expect[0]).abs() < 1e-15);
        assert!((m.d_p - expect[1]).abs() < 1e-15);
        assert!((m.b_n - expect[2]).abs() < 1e-15);
        assert!((m.d_n - expect[3]).abs() < 1e-15);
        assert!((m.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sweep_masses_agree_with_direct_masses() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (x, y, w) = random_instance(&mut rng, 12, 3);
        let search = StumpSearch::new(&x).unwrap();
        search.for_each_cut(&y, w.as_slice(), |f, t, m| {
            let direct = class_masses(&Stump::new(f, t, 1), &x, &y, &w).unwrap();
            assert!((m.b_p - direct.b_p).abs() < 1e-14);
            assert!((m.d_p - direct.d_p).abs() < 1e-14);
            assert!((m.b_n - direct.b_n).abs() < 1e-14);
            assert!((m.d_n - direct.d_n).abs() < 1e-14);
        });
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<i8>, Vec<f64>, Vec<f64>)> {
            (1usize..=16, 1usize..=4).prop_flat_map(|(n, f)| {
                (
                    proptest::collection::vec(proptest::collection::vec(-3i32..3, f), n)
                        .prop_map(|rows| {
                            rows.into_iter()
                                .map(|r| r.into_iter().map(|v| v as f64 * 0.75).collect())
                                .collect()
                        }),
                    proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], n),
                    proptest::collection::vec(0.001f64..1.0, n),
                    proptest::collection::vec(0.0f64..5.0, n),
                )
            })
        }

        proptest! {
            #[test]
            fn never_worse_than_any_candidate((rows, y, raw, m) in instance()) {
                let x = FeatureMatrix::from_rows(rows).unwrap();
                let w = WeightVector::normalized(raw).unwrap();
                let e: Vec<f64> = w.as_slice().iter().zip(&m).map(|(a, b)| a * b).collect();
                let fit = train_stump(&x, &y, &w, Some(&m)).unwrap();
                let direct = objective(&fit.stump, &x, &y, &e);
                prop_assert!((direct - fit.objective).abs() < 1e-12);
                for s in brute_force_candidates(&x) {
                    prop_assert!(fit.objective <= objective(&s, &x, &y, &e) + 1e-12);
                }
            }

            #[test]
            fn deterministic((rows, y, raw, _m) in instance()) {
                let x = FeatureMatrix::from_rows(rows).unwrap();
                let w = WeightVector::normalized(raw).unwrap();
                let a = train_stump(&x, &y, &w, None).unwrap();
                let b = train_stump(&x, &y, &w, None).unwrap();
                prop_assert_eq!(a.stump.feature_index, b.stump.feature_index);
                prop_assert_eq!(a.stump.threshold.to_bits(), b.stump.threshold.to_bits());
                prop_assert_eq!(a.stump.polarity, b.stump.polarity);
                prop_assert_eq!(a.objective.to_bits(), b.objective.to_bits());
            }

            #[test]
            fn uniform_multiplier_keeps_selection((rows, y, raw, _m) in instance(), c in 0.01f64..50.0) {
                let x = FeatureMatrix::from_rows(rows).unwrap();
                let w = WeightVector::normalized(raw).unwrap();
                let plain = train_stump(&x, &y, &w, None).unwrap();
                let scaled = train_stump(&x, &y, &w, Some(&vec![c; y.len()])).unwrap();
                prop_assert_eq!(plain.stump, scaled.stump);
            }
        }
    }
}
