//! Synthetic two-class datasets built from 2-D point clouds.
//!
//! Every sample is drawn as a 2-D point and turned into features by
//! projecting it onto a fixed set of angles. Random draws come from
//! `ChaCha8Rng` seeded with the caller's seed; normal variates use the
//! Box–Muller transform, one pair per point.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{project, Dataset, FeatureMatrix, Provenance};
use crate::boosting::CostPair;
use crate::error::{Error, Result};
use crate::metrics::ConfusionRates;

/// `count` equally spaced angles `j * pi / count`, `j = 0..count`.
pub fn default_angles(count: usize) -> Vec<f64> {
    (0..count).map(|j| j as f64 * PI / count as f64).collect()
}

fn validate_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::InvalidParams("no projection angles".into()));
    }
    if angles.iter().any(|a| !(0.0..PI).contains(a)) {
        return Err(Error::InvalidParams("angles must lie in [0, pi)".into()));
    }
    if angles.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(
            "angles must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Two Gaussian classes with a shared covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussParams {
    pub mean_pos: [f64; 2],
    pub mean_neg: [f64; 2],
    /// Row-major symmetric 2x2 covariance.
    pub covariance: [[f64; 2]; 2],
    pub angles: Vec<f64>,
}

impl Default for GaussParams {
    fn default() -> Self {
        Self {
            mean_pos: [1.0, 0.0],
            mean_neg: [-1.0, 0.0],
            covariance: [[1.0, 0.0], [0.0, 1.0]],
            angles: default_angles(31),
        }
    }
}

impl GaussParams {
    pub fn validate(&self) -> Result<()> {
        let [[a, b], [c, d]] = self.covariance;
        let finite = [a, b, c, d]
            .iter()
            .chain(&self.mean_pos)
            .chain(&self.mean_neg)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite Gaussian parameter".into()));
        }
        if b != c {
            return Err(Error::InvalidParams("covariance is not symmetric".into()));
        }
        // A symmetric 2x2 matrix is positive definite iff a > 0 and det > 0.
        if a <= 0.0 || a * d - b * c <= 0.0 {
            return Err(Error::InvalidParams(
                "covariance is not positive definite".into(),
            ));
        }
        validate_angles(&self.angles)
    }

    /// Lower Cholesky factor `[l11, l21, l22]`.
    fn cholesky(&self) -> [f64; 3] {
        let [[a, b], [_, d]] = self.covariance;
        let l11 = a.sqrt();
        let l21 = b / l11;
        let l22 = (d - l21 * l21).sqrt();
        [l11, l21, l22]
    }

    /// `Sigma^-1 (mu_+ - mu_-)`.
    fn discriminant_direction(&self) -> [f64; 2] {
        let [[a, b], [c, d]] = self.covariance;
        let det = a * d - b * c;
        let dx = self.mean_pos[0] - self.mean_neg[0];
        let dy = self.mean_pos[1] - self.mean_neg[1];
        [(d * dx - b * dy) / det, (-c * dx + a * dy) / det]
    }

    /// Mahalanobis distance between the class means.
    pub fn mahalanobis(&self) -> f64 {
        let w = self.discriminant_direction();
        let dx = self.mean_pos[0] - self.mean_neg[0];
        let dy = self.mean_pos[1] - self.mean_neg[1];
        (w[0] * dx + w[1] * dy).sqrt()
    }

    /// Log-likelihood ratio `ln p(x|+) - ln p(x|-)`.
    pub fn log_likelihood_ratio(&self, point: [f64; 2]) -> f64 {
        let w = self.discriminant_direction();
        let mx = 0.5 * (self.mean_pos[0] + self.mean_neg[0]);
        let my = 0.5 * (self.mean_pos[1] + self.mean_neg[1]);
        w[0] * (point[0] - mx) + w[1] * (point[1] - my)
    }
}

/// Disc-shaped positives overlapping annulus-shaped negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoCloudsGeometry {
    pub disc_center: [f64; 2],
    pub disc_radius: f64,
    pub annulus_center: [f64; 2],
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub angles: Vec<f64>,
}

impl Default for TwoCloudsGeometry {
    fn default() -> Self {
        Self {
            disc_center: [0.5, 0.0],
            disc_radius: 1.2,
            annulus_center: [-0.5, 0.0],
            inner_radius: 0.8,
            outer_radius: 1.8,
            angles: default_angles(31),
        }
    }
}

impl TwoCloudsGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.disc_radius > 0.0) || !(self.inner_radius >= 0.0) {
            return Err(Error::InvalidParams("radii must be positive".into()));
        }
        if self.inner_radius >= self.outer_radius {
            return Err(Error::InvalidParams(format!(
                "annulus inner radius {} must be below outer radius {}",
                self.inner_radius, self.outer_radius
            )));
        }
        let dist = (self.disc_center[0] - self.annulus_center[0])
            .hypot(self.disc_center[1] - self.annulus_center[1]);
        let overlaps = dist - self.disc_radius < self.outer_radius
            && dist + self.disc_radius > self.inner_radius;
        if !overlaps {
            return Err(Error::InvalidParams(
                "disc and annulus do not overlap".into(),
            ));
        }
        validate_angles(&self.angles)
    }
}

/// Uniform in `(0, 1]`, safe for `ln`.
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// One Box–Muller pair of independent standard normals.
fn box_muller(rng: &mut ChaCha8Rng) -> [f64; 2] {
    let u1 = open_unit(rng);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * PI * u2;
    [r * theta.cos(), r * theta.sin()]
}

fn assemble(
    name: &str,
    generator: &str,
    seed: u64,
    points: Vec<[f64; 2]>,
    labels: Vec<i8>,
    angles: &[f64],
) -> Result<Dataset> {
    let n = points.len();
    let data: Vec<f64> = points.iter().flat_map(|&p| project(p, angles)).collect();
    let features = FeatureMatrix::new(data, n, angles.len())?;
    let mut ds = Dataset::new(name, features, labels)?;
    ds.provenance = Provenance::Generated {
        generator: generator.into(),
        seed,
    };
    ds.feature_names = Some(
        angles
            .iter()
            .enumerate()
            .map(|(j, _)| format!("angle_{j}"))
            .collect(),
    );
    ds.points = Some(points);
    ds.angles = Some(angles.to_vec());
    Ok(ds)
}

/// Draws `n_pos` points from `N(mean_pos, Sigma)` and `n_neg` from
/// `N(mean_neg, Sigma)`, positives first.
pub fn gen_bayes(n_pos: usize, n_neg: usize, params: &GaussParams, seed: u64) -> Result<Dataset> {
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidParams("class counts must be positive".into()));
    }
    params.validate()?;
    let [l11, l21, l22] = params.cholesky();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_pos + n_neg);
    let mut labels = Vec::with_capacity(n_pos + n_neg);
    for (count, mean, label) in [(n_pos, params.mean_pos, 1i8), (n_neg, params.mean_neg, -1i8)] {
        for _ in 0..count {
            let [z0, z1] = box_muller(&mut rng);
            points.push([mean[0] + l11 * z0, mean[1] + l21 * z0 + l22 * z1]);
            labels.push(label);
        }
    }
    let mut ds = assemble("bayes", "bayes", seed, points, labels, &params.angles)?;
    ds.gauss = Some(params.clone());
    Ok(ds)
}

/// Positives uniform on the disc, negatives uniform on the annulus.
pub fn gen_two_clouds(
    n_pos: usize,
    n_neg: usize,
    geometry: &TwoCloudsGeometry,
    seed: u64,
) -> Result<Dataset> {
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InvalidParams("class counts must be positive".into()));
    }
    geometry.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_pos + n_neg);
    let mut labels = Vec::with_capacity(n_pos + n_neg);
    let polar = |rng: &mut ChaCha8Rng, center: [f64; 2], r_in: f64, r_out: f64| {
        let u: f64 = rng.gen();
        let r = (r_in * r_in + u * (r_out * r_out - r_in * r_in)).sqrt();
        let phi = 2.0 * PI * rng.gen::<f64>();
        [center[0] + r * phi.cos(), center[1] + r * phi.sin()]
    };
    for _ in 0..n_pos {
        points.push(polar(&mut rng, geometry.disc_center, 0.0, geometry.disc_radius));
        labels.push(1);
    }
    for _ in 0..n_neg {
        points.push(polar(
            &mut rng,
            geometry.annulus_center,
            geometry.inner_radius,
            geometry.outer_radius,
        ));
        labels.push(-1);
    }
    assemble("two_clouds", "two_clouds", seed, points, labels, &geometry.angles)
}

/// Standard normal CDF.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Bayes-risk decision for equal priors: positive iff the log-likelihood
/// ratio exceeds `ln(C_N / C_P)`.
pub fn bayes_optimal_predict(params: &GaussParams, costs: CostPair, point: [f64; 2]) -> i8 {
    let tau = (costs.c_neg / costs.c_pos).ln();
    if params.log_likelihood_ratio(point) > tau {
        1
    } else {
        -1
    }
}

/// Exact error rates of [`bayes_optimal_predict`] under the generating
/// distribution. Under either class the log-likelihood ratio is normal with
/// variance `d^2` and mean `+-d^2/2`, `d` the Mahalanobis distance.
pub fn bayes_optimal_rates(params: &GaussParams, costs: CostPair) -> Result<ConfusionRates> {
    params.validate()?;
    let d = params.mahalanobis();
    let tau = (costs.c_neg / costs.c_pos).ln();
    let fnr = standard_normal_cdf((tau - 0.5 * d * d) / d);
    let fpr = standard_normal_cdf((-tau - 0.5 * d * d) / d);
    Ok(ConfusionRates::from_rates(fnr, fpr))
}
