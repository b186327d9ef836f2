use crate::boosting::CostPair;
use crate::metrics::{nec, ConfusionRates};

const NEC_TIE_TOLERANCE: f64 = 1e-12;

/// Decision threshold minimizing training NEC of `sign(score - theta)`.
///
/// Candidates are the midpoints between consecutive distinct scores plus
/// `min - 1` (everything positive) and `max + 1` (everything negative).
/// Ties go to the smallest `|theta|`, then the smallest `theta`.
pub fn adjust_threshold(scores: &[f64], labels: &[i8], costs: CostPair) -> f64 {
    adjust_threshold_with_nec(scores, labels, costs).0
}

/// [`adjust_threshold`] together with the NEC it attains.
pub fn adjust_threshold_with_nec(scores: &[f64], labels: &[i8], costs: CostPair) -> (f64, f64) {
    debug_assert_eq!(scores.len(), labels.len());
    if scores.is_empty() {
        return (0.0, 0.0);
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = labels.len() - n_pos;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));

    let eval = |fneg: usize, tneg: usize| {
        nec(
            &ConfusionRates::from_counts(fneg, n_neg - tneg, n_pos, n_neg),
            costs,
            0.5,
        )
    };
    let better = |cand: (f64, f64), best: (f64, f64)| {
        if cand.1 < best.1 - NEC_TIE_TOLERANCE {
            return true;
        }
        if cand.1 > best.1 + NEC_TIE_TOLERANCE {
            return false;
        }
        (cand.0.abs(), cand.0) < (best.0.abs(), best.0)
    };

    let lowest = scores[order[0]];
    let highest = scores[order[order.len() - 1]];
    // Below the minimum every sample is predicted positive.
    let mut best = (lowest - 1.0, eval(0, 0));
    let (mut fneg, mut tneg) = (0usize, 0usize);
    for k in 0..order.len() {
        let i = order[k];
        if labels[i] == 1 {
            fneg += 1;
        } else {
            tneg += 1;
        }
        let theta = match order.get(k + 1) {
            Some(&next) if scores[next] != scores[i] => 0.5 * (scores[i] + scores[next]),
            Some(_) => continue,
            None => highest + 1.0,
        };
        let cand = (theta, eval(fneg, tneg));
        if better(cand, best) {
            best = cand;
        }
    }
    best
}
