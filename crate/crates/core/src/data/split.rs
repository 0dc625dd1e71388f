use super::dataset::Dataset;
use crate::error::DataError;
use crate::numerics::Rng;

/// Shuffles the rows with `rng` and cuts them into consecutive parts of the
/// given fractions. Part sizes are rounded down, the last part takes the rest.
pub fn split(data: &Dataset, fractions: &[f64], rng: &mut Rng) -> Result<Vec<Dataset>, DataError> {
    if fractions.is_empty() || fractions.iter().any(|&f| f.is_nan() || f <= 0.0) {
        return Err(DataError::Split(format!("fractions must be positive, got {fractions:?}")));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(DataError::Split(format!("fractions sum to {total}, not 1")));
    }
    let n = data.len();
    let mut idx: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut idx);
    let mut parts = Vec::with_capacity(fractions.len());
    let mut start = 0;
    for (k, &f) in fractions.iter().enumerate() {
        let end = if k + 1 == fractions.len() {
            n
        } else {
            start + ((f * n as f64 + 1e-9).floor() as usize).min(n - start)
        };
        if end == start {
            return Err(DataError::Split(format!("part {k} of {n} rows would be empty")));
        }
        parts.push(data.select(&idx[start..end]));
        start = end;
    }
    Ok(parts)
}
