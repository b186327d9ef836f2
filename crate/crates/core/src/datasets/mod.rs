//! Datasets: the feature matrix container, synthetic generators, CSV
//! ingestion with class balancing and stratified fold assignment.

mod csv_load;
mod folds;
mod synthetic;

pub use csv_load::load_csv_balanced;
pub use folds::{stratified_kfold, FoldAssignment};
pub use synthetic::{
    bayes_optimal_predict, bayes_optimal_rates, default_angles, gen_bayes, gen_two_clouds,
    standard_normal_cdf, GaussParams, TwoCloudsGeometry,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weaklearn::validate_labels;

/// Dense row-major `n_rows x n_features` matrix of finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n_rows: usize,
    n_features: usize,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, n_rows: usize, n_features: usize) -> Result<Self> {
        if data.len() != n_rows * n_features {
            return Err(Error::Shape(format!(
                "{} values for a {n_rows}x{n_features} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature {
                row: pos / n_features.max(1),
                column: pos % n_features.max(1),
            });
        }
        Ok(Self {
            data,
            n_rows,
            n_features,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_features = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n_features) {
            return Err(Error::Shape(format!(
                "row {bad} has {} columns, expected {n_features}",
                rows[bad].len()
            )));
        }
        Self::new(rows.into_iter().flatten().collect(), n_rows, n_features)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_features..(i + 1) * self.n_features]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_features + j]
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            data,
            n_rows: indices.len(),
            n_features: self.n_features,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Generated { generator: String, seed: u64 },
    Loaded { path: String, seed: u64 },
    Subset { parent: String },
}

/// Labelled samples. Labels are `+1` / `-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub features: FeatureMatrix,
    pub labels: Vec<i8>,
    pub feature_names: Option<Vec<String>>,
    pub provenance: Provenance,
    /// Source 2-D coordinates of synthetic samples.
    pub points: Option<Vec<[f64; 2]>>,
    /// Projection angles used to build features from `points`.
    pub angles: Option<Vec<f64>>,
    /// Generating distribution, kept for the Bayes-optimal reference.
    pub gauss: Option<GaussParams>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: FeatureMatrix, labels: Vec<i8>) -> Result<Self> {
        if features.n_rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if labels.len() != features.n_rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} rows",
                labels.len(),
                features.n_rows()
            )));
        }
        validate_labels(&labels)?;
        let name = name.into();
        Ok(Self {
            provenance: Provenance::Subset {
                parent: name.clone(),
            },
            name,
            features,
            labels,
            feature_names: None,
            points: None,
            angles: None,
            gauss: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_features()
    }

    pub fn n_pos(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn n_neg(&self) -> usize {
        self.len() - self.n_pos()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            provenance: Provenance::Subset {
                parent: self.name.clone(),
            },
            points: self
                .points
                .as_ref()
                .map(|p| indices.iter().map(|&i| p[i]).collect()),
            angles: self.angles.clone(),
            gauss: self.gauss.clone(),
        }
    }
}

/// Projects a 2-D point onto each angle: `x cos(theta) + y sin(theta)`.
pub fn project(point: [f64; 2], angles: &[f64]) -> impl Iterator<Item = f64> + '_ {
    angles
        .iter()
        .map(move |&a| point[0] * a.cos() + point[1] * a.sin())
}
