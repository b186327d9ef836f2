use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, FeatureMatrix, Provenance};
use crate::error::{Error, Result};

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "?" | "NA" | "na" | "N/A")
}

/// Loads a headed, comma-separated file and balances the classes.
///
/// The label column is matched by header name; rows whose label equals
/// `positive_label` become `+1`, all others `-1`. Every other column is a
/// numeric feature. Rows with a missing cell are dropped. The larger class is
/// then subsampled uniformly (seeded) down to the size of the smaller one;
/// kept rows retain their file order.
pub fn load_csv_balanced(
    path: impl AsRef<Path>,
    label_column: &str,
    positive_label: &str,
    seed: u64,
) -> Result<Dataset> {
    let path = path.as_ref();
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| csv_err(format!("no column named `{label_column}`")))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    if feature_names.is_empty() {
        return Err(csv_err("no feature columns".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<i8> = Vec::new();
    'records: for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(csv_err(format!(
                "data row {} has {} cells, expected {}",
                line + 1,
                record.len(),
                headers.len()
            )));
        }
        if record.iter().any(is_missing) {
            continue 'records;
        }
        let mut row = Vec::with_capacity(feature_names.len());
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| {
                csv_err(format!(
                    "non-numeric value `{cell}` in column `{}` of data row {}",
                    &headers[col],
                    line + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(csv_err(format!(
                    "non-finite value in column `{}` of data row {}",
                    &headers[col],
                    line + 1
                )));
            }
            row.push(value);
        }
        rows.push(row);
        labels.push(if &record[label_idx] == positive_label { 1 } else { -1 });
    }

    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let negatives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == -1).collect();
    for (label, members) in [(1i8, &positives), (-1i8, &negatives)] {
        if members.is_empty() {
            return Err(Error::ClassTooSmall {
                label,
                count: 0,
                required: 1,
            });
        }
    }
    let target = positives.len().min(negatives.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = Vec::with_capacity(2 * target);
    for mut members in [positives, negatives] {
        if members.len() > target {
            members.shuffle(&mut rng);
            members.truncate(target);
        }
        keep.extend(members);
    }
    keep.sort_unstable();

    let features = FeatureMatrix::from_rows(keep.iter().map(|&i| rows[i].clone()).collect())?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    let mut ds = Dataset::new(name, features, keep.iter().map(|&i| labels[i]).collect())?;
    ds.feature_names = Some(feature_names);
    ds.provenance = Provenance::Loaded {
        path: path.display().to_string(),
        seed,
    };
    Ok(ds)
}
