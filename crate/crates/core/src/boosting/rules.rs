//! Per-algorithm round rules.
//!
//! Notation: `y` is the label, `h` the stump output, `c` the per-sample cost
//! and `c'` that cost divided by `max(C_P, C_N)`. A sample is correct when
//! `y h = +1`.

use super::csa::{floor_masses, solve_csa_alpha, solve_floored};
use super::{AlgorithmId, CostPair, ERROR_CLAMP};
use crate::datasets::FeatureMatrix;
use crate::error::{Error, Result};
use crate::sum::NeumaierSum;
use crate::weaklearn::{
    validate_labels, ClassMasses, Stump, StumpSearch, WeightVector, TIE_RELATIVE_TOLERANCE,
};

/// Result of a single boosting round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub stump: Stump,
    pub alpha: f64,
    /// Updated and normalized weights.
    pub weights: WeightVector,
    /// Sum of the updated weights before normalization.
    pub z: f64,
    /// The error or edge term was clamped.
    pub degenerate: bool,
}

/// Round rule of one algorithm bound to a training set and a cost pair.
///
/// Construction sorts every feature column once; each round then costs one
/// linear sweep per feature.
#[derive(Debug, Clone)]
pub struct Booster<'a> {
    algorithm: AlgorithmId,
    features: &'a FeatureMatrix,
    labels: &'a [i8],
    costs: CostPair,
    search: StumpSearch,
    /// Raw per-sample cost.
    cost: Vec<f64>,
    /// Per-sample cost normalized by the larger of the two costs.
    cost_norm: Vec<f64>,
}

/// `(1/2) ln((1 - eps) / eps)` with `eps` clamped; flags the clamp.
fn half_log_odds(eps: f64) -> (f64, bool) {
    let clamped = eps.clamp(ERROR_CLAMP, 1.0 - ERROR_CLAMP);
    let degenerate = eps <= ERROR_CLAMP || eps >= 1.0 - ERROR_CLAMP;
    (0.5 * ((1.0 - clamped) / clamped).ln(), degenerate)
}

/// `(1/2) ln((1 + r) / (1 - r))` with `r` clamped to `±(1 - 1e-10)`.
fn half_log_edge(r: f64) -> (f64, bool) {
    let bound = 1.0 - ERROR_CLAMP;
    let clamped = r.clamp(-bound, bound);
    let degenerate = r.abs() >= bound;
    (0.5 * ((1.0 + clamped) / (1.0 - clamped)).ln(), degenerate)
}

impl<'a> Booster<'a> {
    pub fn new(
        algorithm: AlgorithmId,
        features: &'a FeatureMatrix,
        labels: &'a [i8],
        costs: CostPair,
    ) -> Result<Self> {
        if labels.len() != features.n_rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                features.n_rows()
            )));
        }
        validate_labels(labels)?;
        let search = StumpSearch::new(features)?;
        let norm = costs.normalized();
        Ok(Self {
            algorithm,
            features,
            labels,
            costs,
            search,
            cost: labels.iter().map(|&y| costs.per_sample_cost(y)).collect(),
            cost_norm: labels.iter().map(|&y| norm.per_sample_cost(y)).collect(),
        })
    }

    pub fn algorithm(&self) -> AlgorithmId {
        self.algorithm
    }

    fn predictions(&self, stump: &Stump) -> Vec<i8> {
        (0..self.labels.len())
            .map(|i| stump.predict(self.features.row(i)))
            .collect()
    }

    /// Round `t` of `total_rounds` starting from normalized `weights`.
    pub fn round(&self, weights: &WeightVector, t: usize, total_rounds: usize) -> Result<RoundOutcome> {
        if weights.len() != self.labels.len() {
            return Err(Error::Shape(format!(
                "{} weights for {} samples",
                weights.len(),
                self.labels.len()
            )));
        }
        if t == 0 || t > total_rounds {
            return Err(Error::InvalidParams(format!(
                "round {t} outside 1..={total_rounds}"
            )));
        }
        let w = weights.as_slice();
        match self.algorithm {
            AlgorithmId::Ada | AlgorithmId::Abt | AlgorithmId::Cga => Ok(self.ada_round(w)),
            AlgorithmId::Asb => {
                let k = self.costs.c_pos / self.costs.c_neg;
                let step = k.sqrt().ln() / total_rounds as f64;
                let skewed: Vec<f64> = w
                    .iter()
                    .zip(self.labels)
                    .map(|(&wi, &y)| wi * (f64::from(y) * step).exp())
                    .collect();
                let skewed = WeightVector::normalized(skewed)?;
                Ok(self.ada_round(skewed.as_slice()))
            }
            AlgorithmId::Adc => Ok(self.adacost_round(w)),
            AlgorithmId::Cb0 | AlgorithmId::Cb1 | AlgorithmId::Cb2 => Ok(self.csb_round(w)),
            AlgorithmId::Ac1 => Ok(self.adac1_round(w)),
            AlgorithmId::Ac2 => Ok(self.adac2_round(w)),
            AlgorithmId::Ac3 => Ok(self.adac3_round(w)),
            AlgorithmId::Csa => Ok(self.csa_round(w)),
        }
    }

    /// Applies per-sample factors and normalizes.
    fn finish(
        &self,
        stump: Stump,
        alpha: f64,
        degenerate: bool,
        w: &[f64],
        factor: impl Fn(usize, f64) -> f64,
    ) -> RoundOutcome {
        let h = self.predictions(&stump);
        let mut updated: Vec<f64> = (0..w.len())
            .map(|i| w[i] * factor(i, f64::from(self.labels[i] * h[i])))
            .collect();
        let mut z = NeumaierSum::new();
        for &v in &updated {
            z.add(v);
        }
        let z = z.value();
        for v in &mut updated {
            *v /= z;
        }
        RoundOutcome {
            stump,
            alpha,
            weights: WeightVector::from_normalized(updated)
                .expect("updated weights are finite and non-negative"),
            z,
            degenerate,
        }
    }

    /// Weighted error of `stump` under `w` times an optional multiplier,
    /// together with the total mass.
    fn weighted_error(&self, stump: &Stump, w: &[f64], multiplier: Option<&[f64]>) -> (f64, f64) {
        let h = self.predictions(stump);
        let (mut wrong, mut total) = (NeumaierSum::new(), NeumaierSum::new());
        for i in 0..w.len() {
            let m = multiplier.map_or(w[i], |m| m[i] * w[i]);
            total.add(m);
            if h[i] != self.labels[i] {
                wrong.add(m);
            }
        }
        (wrong.value(), total.value())
    }

    fn effective(&self, w: &[f64], m: &[f64]) -> Vec<f64> {
        w.iter().zip(m).map(|(a, b)| a * b).collect()
    }

    /// `eps = wrong mass`, `alpha = (1/2) ln((1 - eps) / eps)`,
    /// `w <- w exp(-alpha y h)`.
    fn ada_round(&self, w: &[f64]) -> RoundOutcome {
        let stump = self.search.best_weighted(self.labels, w).stump;
        let (wrong, total) = self.weighted_error(&stump, w, None);
        let (alpha, degenerate) = half_log_odds(wrong / total);
        self.finish(stump, alpha, degenerate, w, |_, margin| (-alpha * margin).exp())
    }

    /// Cost adjustment `beta = (1 -+ c') / 2` for correct / wrong samples,
    /// `r = sum w y h beta`, `w <- w exp(-alpha y h beta)`.
    ///
    /// As the two beta values sum to one, maximizing `r` is the same as
    /// minimizing the plain weighted error.
    fn adacost_round(&self, w: &[f64]) -> RoundOutcome {
        let stump = self.search.best_weighted(self.labels, w).stump;
        let h = self.predictions(&stump);
        let beta = |i: usize, margin: f64| 0.5 * (1.0 - margin * self.cost_norm[i]);
        let mut r = NeumaierSum::new();
        for i in 0..w.len() {
            let margin = f64::from(self.labels[i] * h[i]);
            r.add(w[i] * margin * beta(i, margin));
        }
        let (alpha, degenerate) = half_log_edge(r.value());
        self.finish(stump, alpha, degenerate, w, |i, margin| {
            (-alpha * margin * beta(i, margin)).exp()
        })
    }

    /// Plain selection and ADA step; wrong samples are multiplied by `c`.
    fn csb_round(&self, w: &[f64]) -> RoundOutcome {
        let stump = self.search.best_weighted(self.labels, w).stump;
        let (wrong, total) = self.weighted_error(&stump, w, None);
        let (alpha, degenerate) = half_log_odds(wrong / total);
        let algorithm = self.algorithm;
        self.finish(stump, alpha, degenerate, w, |i, margin| {
            let c = if margin > 0.0 { 1.0 } else { self.cost[i] };
            match algorithm {
                AlgorithmId::Cb0 => c,
                AlgorithmId::Cb1 => c * (-margin).exp(),
                _ => c * (-alpha * margin).exp(),
            }
        })
    }

    /// `u = sum c' w y h`, `w <- w exp(-alpha c' y h)`.
    fn adac1_round(&self, w: &[f64]) -> RoundOutcome {
        let effective = self.effective(w, &self.cost_norm);
        let stump = self.search.best_weighted(self.labels, &effective).stump;
        let (wrong, total) = self.weighted_error(&stump, w, Some(&self.cost_norm));
        let (alpha, degenerate) = half_log_edge(total - 2.0 * wrong);
        self.finish(stump, alpha, degenerate, w, |i, margin| {
            (-alpha * self.cost_norm[i] * margin).exp()
        })
    }

    /// `alpha = (1/2) ln(correct c' w / wrong c' w)`, `w <- c' w exp(-alpha y h)`.
    fn adac2_round(&self, w: &[f64]) -> RoundOutcome {
        let effective = self.effective(w, &self.cost_norm);
        let stump = self.search.best_weighted(self.labels, &effective).stump;
        let (wrong, total) = self.weighted_error(&stump, w, Some(&self.cost_norm));
        let (alpha, degenerate) = half_log_odds(wrong / total);
        self.finish(stump, alpha, degenerate, w, |i, margin| {
            self.cost_norm[i] * (-alpha * margin).exp()
        })
    }

    /// `r = sum c'^2 w y h / sum c' w`, `w <- c' w exp(-alpha c' y h)`.
    fn adac3_round(&self, w: &[f64]) -> RoundOutcome {
        let squared: Vec<f64> = self.cost_norm.iter().map(|c| c * c).collect();
        let effective = self.effective(w, &squared);
        let stump = self.search.best_weighted(self.labels, &effective).stump;
        let (wrong, total_sq) = self.weighted_error(&stump, w, Some(&squared));
        let mut linear = NeumaierSum::new();
        for (wi, c) in w.iter().zip(&self.cost_norm) {
            linear.add(wi * c);
        }
        let (alpha, degenerate) = half_log_edge((total_sq - 2.0 * wrong) / linear.value());
        self.finish(stump, alpha, degenerate, w, |i, margin| {
            let c = self.cost_norm[i];
            c * (-alpha * c * margin).exp()
        })
    }

    /// Joint search over stumps of the minimized cost-sensitive loss,
    /// `w <- w exp(-alpha C_y y h)`.
    fn csa_round(&self, w: &[f64]) -> RoundOutcome {
        let (stump, _) = self.best_csa_stump(w);
        let masses = self.masses(&stump, w);
        let alpha = solve_csa_alpha(masses, self.costs);
        let floored = masses.b_p + masses.b_n < super::MASS_FLOOR
            || masses.d_p + masses.d_n < super::MASS_FLOOR;
        self.finish(stump, alpha, floored, w, |i, margin| {
            (-alpha * self.cost[i] * margin).exp()
        })
    }

    fn masses(&self, stump: &Stump, w: &[f64]) -> ClassMasses {
        let h = self.predictions(stump);
        let mut s = [NeumaierSum::new(); 4];
        for i in 0..w.len() {
            let k = match (self.labels[i] == 1, h[i] == self.labels[i]) {
                (true, true) => 0,
                (true, false) => 1,
                (false, true) => 2,
                (false, false) => 3,
            };
            s[k].add(w[i]);
        }
        ClassMasses {
            b_p: s[0].value(),
            d_p: s[1].value(),
            b_n: s[2].value(),
            d_n: s[3].value(),
        }
    }

    /// Stump minimizing `min_alpha L(alpha)`, with its loss.
    ///
    /// Reversing the polarity maps `L(alpha)` to `L(-alpha)`, so both
    /// polarities share the same minimum; the polarity with `alpha >= 0` is
    /// kept. A candidate is skipped without solving when the lower bound
    /// `2 sqrt(b_p d_p) + 2 sqrt(b_n d_n)` already rules it out, and the solve
    /// itself stops once its running bound does.
    pub fn best_csa_stump(&self, w: &[f64]) -> (Stump, f64) {
        let costs = self.costs;
        let tolerance = TIE_RELATIVE_TOLERANCE * w.iter().sum::<f64>();
        let mut best = (Stump::new(0, f64::NEG_INFINITY, 1), f64::INFINITY);
        self.search.for_each_cut(self.labels, w, |f, threshold, plus| {
            let bound = 2.0 * (plus.b_p * plus.d_p).sqrt() + 2.0 * (plus.b_n * plus.d_n).sqrt();
            if bound >= best.1 - tolerance {
                return;
            }
            let gain = costs.c_pos * (plus.b_p - plus.d_p) + costs.c_neg * (plus.b_n - plus.d_n);
            let (polarity, masses) = if gain >= 0.0 {
                (1, plus)
            } else {
                (-1, plus.flipped())
            };
            let Some((_, loss)) = solve_floored(&floor_masses(masses), costs, best.1 - tolerance)
            else {
                return;
            };
            if loss < best.1 - tolerance {
                best = (Stump::new(f, threshold, polarity), loss);
            }
        });
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boosting::{init_weights, train_on};
    use crate::datasets::{gen_bayes, GaussParams};
    use crate::weaklearn::train_stump;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cp(p: f64, n: f64) -> CostPair {
        CostPair::new(p, n).unwrap()
    }

    fn six_samples() -> (FeatureMatrix, Vec<i8>) {
        let x = FeatureMatrix::from_rows(vec![
            vec![0.1, 5.0],
            vec![0.4, 3.0],
            vec![0.35, 1.0],
            vec![0.8, 2.0],
            vec![0.9, 4.0],
            vec![0.2, 6.0],
        ])
        .unwrap();
        (x, vec![-1, -1, 1, 1, 1, -1])
    }

    #[test]
    fn ada_round_matches_hand_computation() {
        let (x, y) = six_samples();
        let w = WeightVector::normalized(vec![1.0, 2.0, 1.0, 1.0, 3.0, 2.0]).unwrap();
        let b = Booster::new(AlgorithmId::Ada, &x, &y, CostPair::UNIT).unwrap();
        let out = b.round(&w, 1, 5).unwrap();

        let fit = train_stump(&x, &y, &w, None).unwrap();
        assert_eq!(out.stump, fit.stump);
        let h: Vec<i8> = (0..6).map(|i| fit.stump.predict(x.row(i))).collect();
        let eps: f64 = (0..6).filter(|&i| h[i] != y[i]).map(|i| w.as_slice()[i]).sum();
        let alpha = 0.5 * ((1.0 - eps) / eps).ln();
        assert!((out.alpha - alpha).abs() < 1e-15);
        let raw: Vec<f64> = (0..6)
            .map(|i| w.as_slice()[i] * (-alpha * f64::from(y[i] * h[i])).exp())
            .collect();
        let z: f64 = raw.iter().sum();
        assert!((out.z - z).abs() < 1e-15);
        for i in 0..6 {
            assert!((out.weights.as_slice()[i] - raw[i] / z).abs() < 1e-15);
        }
        // After the update the chosen stump has weighted error exactly 1/2.
        let e2: f64 = (0..6)
            .filter(|&i| h[i] != y[i])
            .map(|i| out.weights.as_slice()[i])
            .sum();
        assert!((e2 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn separable_pair_clamps() {
        let x = FeatureMatrix::from_rows(vec![vec![0.0], vec![1.0]]).unwrap();
        let y = [-1, 1];
        let b = Booster::new(AlgorithmId::Ada, &x, &y, CostPair::UNIT).unwrap();
        let out = b.round(&WeightVector::uniform(2), 1, 1).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.alpha, 0.5 * ((1.0 - 1e-10) / 1e-10f64).ln());
    }

    #[test]
    fn weights_stay_normalized() {
        let ds = gen_bayes(30, 30, &GaussParams::default(), 8).unwrap();
        for alg in AlgorithmId::ALL {
            for costs in [cp(1.0, 100.0), cp(3.0, 2.0), cp(25.0, 1.0)] {
                let b = Booster::new(alg, &ds.features, &ds.labels, costs).unwrap();
                let mut w = init_weights(alg, &ds.labels, costs).unwrap();
                for t in 1..=10 {
                    let out = b.round(&w, t, 10).unwrap();
                    assert!((out.weights.total() - 1.0).abs() < 1e-9, "{alg} {costs}");
                    assert!(out.weights.as_slice().iter().all(|&v| v >= 0.0));
                    w = out.weights;
                }
            }
        }
    }

    #[test]
    fn unit_costs_reduce_to_ada() {
        let ds = gen_bayes(50, 50, &GaussParams::default(), 9).unwrap();
        let (ada, _) = train_on(AlgorithmId::Ada, &ds.features, &ds.labels, CostPair::UNIT, 12, 0)
            .unwrap();
        for alg in [
            AlgorithmId::Ac1,
            AlgorithmId::Ac2,
            AlgorithmId::Ac3,
            AlgorithmId::Cb2,
            AlgorithmId::Csa,
            AlgorithmId::Cga,
            AlgorithmId::Asb,
            AlgorithmId::Abt,
        ] {
            let (clf, _) =
                train_on(alg, &ds.features, &ds.labels, CostPair::UNIT, 12, 0).unwrap();
            assert_eq!(clf.stumps, ada.stumps, "{alg}");
            for (a, b) in clf.alphas.iter().zip(&ada.alphas) {
                assert!((a - b).abs() <= 1e-12 * b.abs(), "{alg}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn csa_search_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..14)
                .map(|_| (0..3).map(|_| rng.gen_range(0..6) as f64).collect())
                .collect();
            let y: Vec<i8> = (0..14).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
            let x = FeatureMatrix::from_rows(rows).unwrap();
            let w = WeightVector::normalized((0..14).map(|_| rng.gen_range(0.1..1.0)).collect())
                .unwrap();
            let costs = cp(rng.gen_range(1.0..20.0), rng.gen_range(1.0..20.0));
            let b = Booster::new(AlgorithmId::Csa, &x, &y, costs).unwrap();
            let (_, loss) = b.best_csa_stump(w.as_slice());

            let mut brute = f64::INFINITY;
            for f in 0..3 {
                let mut values: Vec<f64> = (0..14).map(|i| x.get(i, f)).collect();
                values.sort_by(f64::total_cmp);
                values.dedup();
                let mut thresholds = vec![values[0] - 1.0];
                thresholds.extend(values.windows(2).map(|p| 0.5 * (p[0] + p[1])));
                for th in thresholds {
                    for pol in [1, -1] {
                        let m = b.masses(&Stump::new(f, th, pol), w.as_slice());
                        let a = solve_csa_alpha(m, costs);
                        brute = brute.min(crate::boosting::csa_loss(&floor_masses(m), costs, a));
                    }
                }
            }
            assert!((loss - brute).abs() <= 1e-12, "{loss} vs {brute}");
        }
    }

    #[test]
    fn csa_alpha_is_non_negative() {
        let ds = gen_bayes(40, 40, &GaussParams::default(), 10).unwrap();
        let (clf, _) =
            train_on(AlgorithmId::Csa, &ds.features, &ds.labels, cp(1.0, 25.0), 20, 0).unwrap();
        assert!(clf.alphas.iter().all(|&a| a >= 0.0));
    }

    #[test]
    fn adacost_may_produce_negative_alpha() {
        // Correct negatives carry beta = 0 at (1, 100), so a stump better than
        // chance can still have a negative edge.
        let x = FeatureMatrix::from_rows((0..10).map(|i| vec![i as f64]).collect()).unwrap();
        let y: Vec<i8> = vec![-1, -1, -1, -1, -1, -1, 1, -1, 1, -1];
        let b = Booster::new(AlgorithmId::Adc, &x, &y, cp(1.0, 100.0)).unwrap();
        let w = WeightVector::uniform(10);
        let out = b.round(&w, 1, 1).unwrap();
        let h: Vec<i8> = (0..10).map(|i| out.stump.predict(x.row(i))).collect();
        let wrong = (0..10).filter(|&i| h[i] != y[i]).count();
        assert!(wrong < 5);
        assert!(out.alpha < 0.0, "alpha {}", out.alpha);
    }

    #[test]
    fn cga_invariant_to_cost_scaling() {
        let ds = gen_bayes(30, 30, &GaussParams::default(), 11).unwrap();
        let base = cp(1.0, 7.0);
        let (a, _) = train_on(AlgorithmId::Cga, &ds.features, &ds.labels, base, 15, 0).unwrap();
        for lambda in [0.01, 3.0, 250.0] {
            let (b, _) = train_on(
                AlgorithmId::Cga,
                &ds.features,
                &ds.labels,
                base.scaled(lambda).unwrap(),
                15,
                0,
            )
            .unwrap();
            assert_eq!(a.stumps, b.stumps);
            for (x, y) in a.alphas.iter().zip(&b.alphas) {
                assert!((x - y).abs() <= 1e-12 * y.abs());
            }
        }
    }

    #[test]
    fn csb_variants_reweight_only_mistakes() {
        let (x, y) = six_samples();
        let costs = cp(1.0, 4.0);
        let w = WeightVector::uniform(6);
        for alg in [AlgorithmId::Cb0, AlgorithmId::Cb1, AlgorithmId::Cb2] {
            let b = Booster::new(alg, &x, &y, costs).unwrap();
            let out = b.round(&w, 1, 3).unwrap();
            let h: Vec<i8> = (0..6).map(|i| out.stump.predict(x.row(i))).collect();
            let raw: Vec<f64> = (0..6)
                .map(|i| {
                    let margin = f64::from(y[i] * h[i]);
                    let c = if margin > 0.0 { 1.0 } else { costs.per_sample_cost(y[i]) };
                    let step = match alg {
                        AlgorithmId::Cb0 => 1.0,
                        AlgorithmId::Cb1 => (-margin).exp(),
                        _ => (-out.alpha * margin).exp(),
                    };
                    w.as_slice()[i] * c * step
                })
                .collect();
            let z: f64 = raw.iter().sum();
            for i in 0..6 {
                assert!((out.weights.as_slice()[i] - raw[i] / z).abs() < 1e-15, "{alg}");
            }
        }
    }

    #[test]
    fn asymboost_skews_toward_costly_class() {
        let (x, y) = six_samples();
        let b = Booster::new(AlgorithmId::Asb, &x, &y, cp(4.0, 1.0)).unwrap();
        let ada = Booster::new(AlgorithmId::Ada, &x, &y, cp(4.0, 1.0)).unwrap();
        // With a total of one round the skew is exp(+-ln 2): positives weigh 4x.
        let skewed = WeightVector::normalized(
            y.iter().map(|&l| if l == 1 { 2.0 } else { 0.5 }).collect(),
        )
        .unwrap();
        let out = b.round(&WeightVector::uniform(6), 1, 1).unwrap();
        let expected = ada.round(&skewed, 1, 1).unwrap();
        assert_eq!(out.stump, expected.stump);
        assert!((out.alpha - expected.alpha).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_round_index() {
        let (x, y) = six_samples();
        let b = Booster::new(AlgorithmId::Ada, &x, &y, CostPair::UNIT).unwrap();
        assert!(b.round(&WeightVector::uniform(6), 0, 3).is_err());
        assert!(b.round(&WeightVector::uniform(6), 4, 3).is_err());
        assert!(b.round(&WeightVector::uniform(5), 1, 3).is_err());
    }
}
