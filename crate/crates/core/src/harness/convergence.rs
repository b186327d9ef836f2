use serde::{Deserialize, Serialize};

/// Spread of the tail of a NEC trace around its mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationStatistic {
    /// Largest absolute deviation.
    #[default]
    MaxAbs,
    /// Mean absolute deviation.
    MeanAbs,
    /// Population standard deviation.
    Std,
}

/// Earliest round `k < K` after which the trace has settled, using the
/// max-abs deviation. See [`detect_convergence_with`].
pub fn detect_convergence(trace: &[f64], tol: f64, tail_fraction: f64) -> Option<usize> {
    detect_convergence_with(trace, tol, tail_fraction, DeviationStatistic::MaxAbs)
}

/// Earliest `k` in `1..K` such that rounds `k+1..=K` deviate from their mean
/// by less than `tol` and span at least `tail_fraction * K` rounds.
///
/// Rounds are 1-based: `trace[t - 1]` is the value after round `t`.
pub fn detect_convergence_with(
    trace: &[f64],
    tol: f64,
    tail_fraction: f64,
    statistic: DeviationStatistic,
) -> Option<usize> {
    let big_k = trace.len();
    if big_k < 2 {
        return None;
    }
    let min_tail = tail_fraction * big_k as f64;

    // suffix[i] summarizes trace[i..].
    let mut suf_sum = vec![0.0; big_k + 1];
    let mut suf_sq = vec![0.0; big_k + 1];
    let mut suf_max = vec![f64::NEG_INFINITY; big_k + 1];
    let mut suf_min = vec![f64::INFINITY; big_k + 1];
    for i in (0..big_k).rev() {
        suf_sum[i] = suf_sum[i + 1] + trace[i];
        suf_sq[i] = suf_sq[i + 1] + trace[i] * trace[i];
        suf_max[i] = suf_max[i + 1].max(trace[i]);
        suf_min[i] = suf_min[i + 1].min(trace[i]);
    }

    (1..big_k).find(|&k| {
        let len = big_k - k;
        if (len as f64) < min_tail {
            return false;
        }
        let n = len as f64;
        let mean = suf_sum[k] / n;
        let deviation = match statistic {
            DeviationStatistic::MaxAbs => (suf_max[k] - mean).abs().max((mean - suf_min[k]).abs()),
            DeviationStatistic::MeanAbs => {
                trace[k..].iter().map(|v| (v - mean).abs()).sum::<f64>() / n
            }
            DeviationStatistic::Std => (suf_sq[k] / n - mean * mean).max(0.0).sqrt(),
        };
        deviation < tol
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_trace_converges_at_first_round() {
        assert_eq!(detect_convergence(&[0.3; 100], 1e-3, 0.1), Some(1));
    }

    #[test]
    fn oscillating_trace_never_converges() {
        let trace: Vec<f64> = (0..100).map(|t| if t % 2 == 0 { 0.1 } else { -0.1 }).collect();
        assert_eq!(detect_convergence(&trace, 1e-3, 0.1), None);
    }

    #[test]
    fn step_trace_converges_at_step() {
        let trace: Vec<f64> = (1..=100).map(|t| if t <= 80 { 0.5 } else { 0.2 }).collect();
        assert_eq!(detect_convergence(&trace, 1e-3, 0.1), Some(80));
    }

    #[test]
    fn late_step_violates_tail_length() {
        // Settles only for the last five of 100 rounds.
        let trace: Vec<f64> = (1..=100).map(|t| if t <= 95 { 0.5 - 0.01 * t as f64 } else { 0.2 }).collect();
        assert_eq!(detect_convergence(&trace, 1e-3, 0.1), None);
    }

    #[test]
    fn short_traces() {
        assert_eq!(detect_convergence(&[], 1e-3, 0.1), None);
        assert_eq!(detect_convergence(&[0.4], 1e-3, 0.1), None);
        assert_eq!(detect_convergence(&[0.4, 0.4], 1e-3, 0.1), Some(1));
    }

    #[test]
    fn statistics_differ_on_single_outlier() {
        // One spike of 0.005 in a tail of 100: max-abs rejects, the others accept.
        let mut trace = vec![0.9; 10];
        trace.extend(std::iter::repeat(0.1).take(100));
        trace[60] = 0.105;
        let at = |s| detect_convergence_with(&trace, 1e-3, 0.1, s);
        assert_eq!(at(DeviationStatistic::MaxAbs), Some(61));
        assert_eq!(at(DeviationStatistic::MeanAbs), Some(10));
        assert_eq!(at(DeviationStatistic::Std), Some(10));
    }
}
