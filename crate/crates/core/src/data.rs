//! Datasets: synthetic generation, CSV loading, `[0, pi]` scaling and
//! seeded train/validation splits.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Upper end of the scaled feature range.
pub const SCALE_MAX: f64 = PI;

pub const SYNTHETIC_ROWS: usize = 350;
pub const SYNTHETIC_FEATURES: [&str; 3] = ["informative_0", "informative_1", "noise"];

/// Per-feature `(min, max)` of the fitting partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub ranges: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    targets: Vec<u8>,
    names: Vec<String>,
    scaling: Option<Scaling>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<u8>, names: Vec<String>) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::Shape(format!(
                "{} feature rows but {} targets",
                features.len(),
                targets.len()
            )));
        }
        if let Some((r, row)) = features.iter().enumerate().find(|(_, r)| r.len() != names.len()) {
            return Err(Error::Shape(format!(
                "row {r} has {} values, expected {}",
                row.len(),
                names.len()
            )));
        }
        if let Some(t) = targets.iter().find(|t| **t > 1) {
            return Err(Error::Schema(format!("target {t} is not binary")));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Schema("non-finite feature value".into()));
        }
        Ok(Self {
            features,
            targets,
            names,
            scaling: None,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn targets(&self) -> &[u8] {
        &self.targets
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn scaling(&self) -> Option<&Scaling> {
        self.scaling.as_ref()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.features.iter().map(|r| r[j]).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.targets.iter().filter(|t| **t == 1).count();
        (self.len() - ones, ones)
    }

    fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            names: self.names.clone(),
            scaling: self.scaling.clone(),
        }
    }
}

/// Which of the three benchmark datasets a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetId {
    Synthetic,
    Diabetes,
    Banknote,
}

impl DatasetId {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetId::Synthetic => "synthetic",
            DatasetId::Diabetes => "diabetes",
            DatasetId::Banknote => "banknote",
        }
    }

    /// Default feature subset for the CSV datasets.
    pub fn default_features(self) -> &'static [&'static str] {
        match self {
            DatasetId::Synthetic => &SYNTHETIC_FEATURES,
            DatasetId::Diabetes => &["Glucose", "BMI", "Age"],
            DatasetId::Banknote => &["variance", "skewness"],
        }
    }

    pub fn target_column(self) -> &'static str {
        match self {
            DatasetId::Synthetic => "target",
            DatasetId::Diabetes => "Outcome",
            DatasetId::Banknote => "class",
        }
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(DatasetId::Synthetic),
            "diabetes" => Ok(DatasetId::Diabetes),
            "banknote" => Ok(DatasetId::Banknote),
            _ => Err(Error::Argument(format!("unknown dataset '{s}'"))),
        }
    }
}

/// 350 rows, balanced classes. Features 0 and 1 are unit-variance Gaussian
/// clusters centred on opposite vertices `(-1, -1)` and `(1, 1)` of the
/// square; feature 2 is class-independent standard normal noise. Rows are
/// shuffled.
pub fn generate_synthetic(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_class = SYNTHETIC_ROWS / 2;
    let mut rows = Vec::with_capacity(SYNTHETIC_ROWS);
    for class in [0u8, 1] {
        let centre = if class == 0 { -1.0 } else { 1.0 };
        for _ in 0..per_class {
            let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
            let row = vec![centre + z(), centre + z(), z()];
            rows.push((row, class));
        }
    }
    rows.shuffle(&mut rng);
    let (features, targets) = rows.into_iter().unzip();
    Dataset::new(
        features,
        targets,
        SYNTHETIC_FEATURES.iter().map(|s| s.to_string()).collect(),
    )
    .expect("generator produces a consistent dataset")
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads the named columns of a headed, comma-separated file.
pub fn load_csv(path: impl AsRef<Path>, feature_columns: &[&str], target_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| Error::Schema(format!("{}: unreadable header: {e}", path.display())))?
        .clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column '{name}' not in header of {}", path.display())))
    };
    if feature_columns.is_empty() {
        return Err(Error::Argument("no feature columns selected".into()));
    }
    let cols = feature_columns.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    let target = find(target_column)?;

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        // header is row 1
        let row = r + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            col: 0,
            msg: e.to_string(),
        })?;
        let cell = |c: usize| -> Result<f64> {
            let s = rec.get(c).unwrap_or("");
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    col: c + 1,
                    msg: format!("'{s}' is not a number"),
                })
        };
        features.push(cols.iter().map(|&c| cell(c)).collect::<Result<Vec<_>>>()?);
        let t = cell(target)?;
        if t != 0.0 && t != 1.0 {
            return Err(Error::Schema(format!("row {row}: target {t} is not 0 or 1")));
        }
        targets.push(t as u8);
    }
    if targets.is_empty() {
        return Err(Error::Schema(format!("{} has no data rows", path.display())));
    }
    Dataset::new(features, targets, feature_columns.iter().map(|s| s.to_string()).collect())
}

/// Affine map of each feature onto `[0, pi]`, fitted on one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    scaling: Scaling,
}

impl MinMaxScaler {
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Argument("cannot fit a scaler on an empty dataset".into()));
        }
        let ranges = (0..data.n_features())
            .map(|j| {
                let col = data.column(j);
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi <= lo {
                    Err(Error::DegenerateFeature(data.names[j].clone()))
                } else {
                    Ok((lo, hi))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            scaling: Scaling { ranges },
        })
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    /// Values outside the fitted range are clipped to `[0, pi]`.
    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        if data.n_features() != self.scaling.ranges.len() {
            return Err(Error::Shape(format!(
                "scaler fitted on {} features, dataset has {}",
                self.scaling.ranges.len(),
                data.n_features()
            )));
        }
        let features = data
            .features
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.scaling.ranges)
                    .map(|(&v, &(lo, hi))| ((v - lo) / (hi - lo) * SCALE_MAX).clamp(0.0, SCALE_MAX))
                    .collect()
            })
            .collect();
        Ok(Dataset {
            features,
            targets: data.targets.clone(),
            names: data.names.clone(),
            scaling: Some(self.scaling.clone()),
        })
    }
}

/// Fits on `data` and maps it onto `[0, pi]`.
pub fn scale_minmax(data: &Dataset) -> Result<Dataset> {
    MinMaxScaler::fit(data)?.transform(data)
}

/// Shuffles rows and splits off `floor(m (1 - train_fraction))` validation
/// rows.
pub fn split(data: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let m = data.len();
    // the epsilon keeps 350 * (1 - 0.8) from flooring to 69
    let n_val = ((m as f64) * (1.0 - train_fraction) + 1e-9).floor() as usize;
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (val, train) = idx.split_at(n_val);
    Ok((data.subset(train), data.subset(val)))
}

/// Scaled train/validation pair with the scaler fitted on the training rows.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub validation: Dataset,
    pub scaler: MinMaxScaler,
}

pub fn prepare(data: &Dataset, train_fraction: f64, seed: u64) -> Result<Prepared> {
    let (train, validation) = split(data, train_fraction, seed)?;
    let scaler = MinMaxScaler::fit(&train)?;
    Ok(Prepared {
        train: scaler.transform(&train)?,
        validation: scaler.transform(&validation)?,
        scaler,
    })
}
