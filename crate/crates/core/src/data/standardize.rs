use std::fmt::Write as _;

use ndarray::{Array1, Axis};

use super::dataset::{DataKind, Dataset};
use crate::error::DataError;

/// Per-dimension training-set mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct Stats {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Stats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// One line per dimension: `mean std`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# mean std\n");
        for (m, s) in self.mean.iter().zip(&self.std) {
            writeln!(out, "{m:.16e} {s:.16e}").expect("write to string");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, DataError> {
        let m = super::io::parse_matrix(text)?;
        if m.ncols() != 2 {
            return Err(DataError::Dimension { expected: 2, found: m.ncols() });
        }
        if let Some(column) = m.column(1).iter().position(|&s| s.is_nan() || s <= 0.0) {
            return Err(DataError::ZeroVariance { column });
        }
        Ok(Stats {
            mean: m.column(0).to_owned(),
            std: m.column(1).to_owned(),
        })
    }
}

/// Standardizes every column of `train` and returns the statistics used.
pub fn standardize(train: &Dataset) -> Result<(Dataset, Stats), DataError> {
    if train.kind != DataKind::Real {
        return Err(DataError::Kind("real"));
    }
    if train.is_empty() {
        return Err(DataError::Empty);
    }
    let mean = train.values.mean_axis(Axis(0)).expect("non-empty");
    let std = train.values.std_axis(Axis(0), 0.0);
    if let Some(column) = std.iter().position(|&s| s.is_nan() || s <= 0.0) {
        return Err(DataError::ZeroVariance { column });
    }
    let stats = Stats { mean, std };
    Ok((apply_stats(train, &stats)?, stats))
}

/// Standardizes `data` with statistics computed elsewhere.
pub fn apply_stats(data: &Dataset, stats: &Stats) -> Result<Dataset, DataError> {
    if data.dim() != stats.dim() {
        return Err(DataError::Dimension { expected: stats.dim(), found: data.dim() });
    }
    Ok(Dataset {
        values: (&data.values - &stats.mean) / &stats.std,
        kind: DataKind::Real,
        stats: Some(stats.clone()),
        provenance: data.provenance.clone(),
    })
}

/// Maps standardized values back to the original scale.
pub fn destandardize(data: &Dataset, stats: &Stats) -> Result<Dataset, DataError> {
    if data.dim() != stats.dim() {
        return Err(DataError::Dimension { expected: stats.dim(), found: data.dim() });
    }
    Ok(Dataset {
        values: &data.values * &stats.std + &stats.mean,
        kind: DataKind::Real,
        stats: None,
        provenance: data.provenance.clone(),
    })
}
