//! Step size of the cost-sensitive exponential loss.
//!
//! For a stump with class masses `(b_p, d_p, b_n, d_n)` the round loss is
//!
//! ```text
//! L(a) = b_p e^{-a C_P} + d_p e^{a C_P} + b_n e^{-a C_N} + d_n e^{a C_N}
//! ```
//!
//! which is strictly convex once both the correct and the wrong mass are
//! positive. The minimizer is found by a safeguarded Newton iteration.
//! Evaluations far from the origin are done relative to the largest exponent
//! so no intermediate value overflows.

use crate::boosting::CostPair;
use crate::weaklearn::ClassMasses;

/// Lower bound applied to the total correct and total wrong mass.
pub const MASS_FLOOR: f64 = 1e-10;

const MAX_ITERATIONS: usize = 200;
/// Stop once `|L'| <= STATIONARITY * max(c) * L`, about the rounding noise
/// of `L'`.
const STATIONARITY: f64 = 1e-14;

/// Raises the correct (or wrong) mass to [`MASS_FLOOR`] when it falls below,
/// splitting the deficit evenly between the classes.
pub fn floor_masses(m: ClassMasses) -> ClassMasses {
    let mut out = m;
    let correct = m.b_p + m.b_n;
    if correct < MASS_FLOOR {
        let add = 0.5 * (MASS_FLOOR - correct);
        out.b_p += add;
        out.b_n += add;
    }
    let wrong = m.d_p + m.d_n;
    if wrong < MASS_FLOOR {
        let add = 0.5 * (MASS_FLOOR - wrong);
        out.d_p += add;
        out.d_n += add;
    }
    out
}

/// `L(alpha)` evaluated directly.
pub fn csa_loss(m: &ClassMasses, costs: CostPair, alpha: f64) -> f64 {
    let (cp, cn) = (costs.c_pos, costs.c_neg);
    m.b_p * (-alpha * cp).exp()
        + m.d_p * (alpha * cp).exp()
        + m.b_n * (-alpha * cn).exp()
        + m.d_n * (alpha * cn).exp()
}

/// `ln L(alpha)`, safe for any `alpha`.
pub fn csa_log_loss(m: &ClassMasses, costs: CostPair, alpha: f64) -> f64 {
    let terms = Terms::new(m, costs);
    let (exps, max) = terms.exponents(alpha);
    max + exps.iter().map(|e| (e - max).exp()).sum::<f64>().ln()
}

/// The four loss terms as `ln(mass) + sign * alpha * cost`.
struct Terms {
    log_mass: [f64; 4],
    slope: [f64; 4],
}

impl Terms {
    fn new(m: &ClassMasses, costs: CostPair) -> Self {
        let (cp, cn) = (costs.c_pos, costs.c_neg);
        Self {
            log_mass: [m.b_p.ln(), m.d_p.ln(), m.b_n.ln(), m.d_n.ln()],
            slope: [-cp, cp, -cn, cn],
        }
    }

    fn exponents(&self, alpha: f64) -> ([f64; 4], f64) {
        let mut e = [0.0; 4];
        let mut max = f64::NEG_INFINITY;
        for k in 0..4 {
            e[k] = self.log_mass[k] + self.slope[k] * alpha;
            max = max.max(e[k]);
        }
        (e, max)
    }
}

/// `L` and its derivative split as `L' = up - down`, where `up` collects the
/// increasing terms and `down` the decreasing ones. Everything is divided by
/// `exp(shift)`; the shift is zero unless the direct evaluation would
/// overflow.
struct Eval {
    up: f64,
    down: f64,
    /// `d(up)/d(alpha)` and `-d(down)/d(alpha)`.
    up_slope: f64,
    down_slope: f64,
    loss: f64,
    shift: f64,
}

impl Eval {
    fn at(m: &ClassMasses, costs: CostPair, alpha: f64) -> Self {
        let (cp, cn) = (costs.c_pos, costs.c_neg);
        let (t, shift) = if alpha.abs() * cp.max(cn) < 600.0 {
            let ep = (alpha * cp).exp();
            let en = (alpha * cn).exp();
            ([m.b_p / ep, m.d_p * ep, m.b_n / en, m.d_n * en], 0.0)
        } else {
            let terms = Terms::new(m, costs);
            let (e, max) = terms.exponents(alpha);
            (e.map(|x| (x - max).exp()), max)
        };
        Self {
            up: cp * t[1] + cn * t[3],
            down: cp * t[0] + cn * t[2],
            up_slope: cp * cp * t[1] + cn * cn * t[3],
            down_slope: cp * cp * t[0] + cn * cn * t[2],
            loss: t.iter().sum(),
            shift,
        }
    }

    fn slope(&self) -> f64 {
        self.up - self.down
    }
}

/// Starting point for the search.
///
/// Near its own minimizer `a_k = ln(b_k / d_k) / (2 c_k)` each half of `L` is
/// close to `min_k + mu_k (alpha - a_k)^2 / 2` with `mu_k = 2 c_k^2 sqrt(b_k d_k)`;
/// the guess minimizes the sum of the two parabolas. When either half has no
/// finite minimizer the equal-cost formula at the mean cost is used instead.
fn initial_guess(m: &ClassMasses, costs: CostPair) -> f64 {
    let (cp, cn) = (costs.c_pos, costs.c_neg);
    let mu_p = cp * cp * (m.b_p * m.d_p).sqrt();
    let mu_n = cn * cn * (m.b_n * m.d_n).sqrt();
    if mu_p > 0.0 && mu_n > 0.0 {
        let a_p = 0.5 * (m.b_p / m.d_p).ln() / cp;
        let a_n = 0.5 * (m.b_n / m.d_n).ln() / cn;
        return (mu_p * a_p + mu_n * a_n) / (mu_p + mu_n);
    }
    let mean_cost = (cp * (m.b_p + m.d_p) + cn * (m.b_n + m.d_n)) / m.total();
    0.5 * ((m.b_p + m.b_n) / (m.d_p + m.d_n)).ln() / mean_cost
}

/// Minimizer of `L(alpha)` after flooring the masses.
///
/// With equal costs `C` the minimizer has the closed form
/// `ln((b_p + b_n) / (d_p + d_n)) / (2 C)`.
pub fn solve_csa_alpha(masses: ClassMasses, costs: CostPair) -> f64 {
    solve_floored(&floor_masses(masses), costs, f64::INFINITY)
        .expect("no cutoff")
        .0
}

/// `(alpha*, L(alpha*))` for already floored masses, or `None` as soon as
/// `min L` is known to be at least `cutoff`.
///
/// Each half of `L` satisfies `f'' = c^2 f >= c^2 min f`, so `L` is strongly
/// convex with modulus `mu = sum 2 c^2 sqrt(b d)`, and every iterate gives
/// `min L >= L(alpha) - L'(alpha)^2 / (2 mu)`.
pub(crate) fn solve_floored(m: &ClassMasses, costs: CostPair, cutoff: f64) -> Option<(f64, f64)> {
    let correct = m.b_p + m.b_n;
    let wrong = m.d_p + m.d_n;
    let (cp, cn) = (costs.c_pos, costs.c_neg);
    if cp == cn {
        let loss = 2.0 * (correct * wrong).sqrt();
        return (loss < cutoff).then(|| (0.5 * (correct / wrong).ln() / cp, loss));
    }
    let mu = 2.0 * (cp * cp * (m.b_p * m.d_p).sqrt() + cn * cn * (m.b_n * m.d_n).sqrt());
    let c_max = cp.max(cn);

    // Newton on ln(up) - ln(down), which is increasing with slope between
    // the two costs, so steps stay well scaled even when one exponential
    // dominates. The bracket closes as iterates land on either side.
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut alpha = initial_guess(m, costs);
    let mut eval = Eval::at(m, costs, alpha);
    for _ in 0..MAX_ITERATIONS {
        let d1 = eval.slope();
        if eval.shift == 0.0 && mu > 0.0 && eval.loss - d1 * d1 / (2.0 * mu) >= cutoff {
            return None;
        }
        if d1.abs() <= STATIONARITY * c_max * eval.loss {
            break;
        }
        if d1 < 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        let phi = (eval.up / eval.down).ln();
        let dphi = eval.up_slope / eval.up + eval.down_slope / eval.down;
        let mut next = alpha - phi / dphi;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - alpha).abs() <= 4.0 * f64::EPSILON * alpha.abs() {
            break;
        }
        alpha = next;
        eval = Eval::at(m, costs, alpha);
    }
    let loss = eval.loss * eval.shift.exp();
    (loss < cutoff).then_some((alpha, loss))
}
