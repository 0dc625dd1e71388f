use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use super::standardize::Stats;
use crate::error::DataError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataKind {
    Binary,
    Real,
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DataKind::Binary => "binary",
            DataKind::Real => "real",
        })
    }
}

impl FromStr for DataKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "binary" => Ok(DataKind::Binary),
            "real" => Ok(DataKind::Real),
            _ => Err(format!("unknown data kind `{s}` (expected binary or real)")),
        }
    }
}

/// An `N x D` matrix with its kind, optional standardization statistics and
/// a free-text note on where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub values: Array2<f64>,
    pub kind: DataKind,
    pub stats: Option<Stats>,
    pub provenance: String,
}

impl Dataset {
    /// Checks that binary data holds only 0 and 1.
    pub fn new(values: Array2<f64>, kind: DataKind, provenance: impl Into<String>) -> Result<Self, DataError> {
        if kind == DataKind::Binary {
            if let Some(((row, column), &value)) = values.indexed_iter().find(|(_, &v)| v != 0.0 && v != 1.0) {
                return Err(DataError::NotBinary { row, column, value });
            }
        }
        Ok(Dataset {
            values,
            kind,
            stats: None,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Rows `idx` as a new dataset with the same kind, stats and provenance.
    pub fn select(&self, idx: &[usize]) -> Self {
        Dataset {
            values: self.values.select(ndarray::Axis(0), idx),
            kind: self.kind,
            stats: self.stats.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// `1` where the value is at least `threshold`, else `0`.
pub fn binarize(data: &Dataset, threshold: f64) -> Dataset {
    Dataset {
        values: data.values.mapv(|v| if v >= threshold { 1.0 } else { 0.0 }),
        kind: DataKind::Binary,
        stats: None,
        provenance: format!("{} | binarized at {threshold}", data.provenance),
    }
}
