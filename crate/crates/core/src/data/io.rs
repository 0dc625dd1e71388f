use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use super::dataset::{DataKind, Dataset};
use crate::error::DataError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> DataError {
    DataError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Parses whitespace- or comma-delimited numbers, one row per line.
///
/// Blank lines and lines starting with `#` are skipped. Row and column
/// numbers in errors are 1-based line and field positions.
pub fn parse_matrix(text: &str) -> Result<Array2<f64>, DataError> {
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        let expected = *width.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(DataError::Ragged {
                row: line_no + 1,
                expected,
                found: fields.len(),
            });
        }
        for (col, tok) in fields.iter().enumerate() {
            let v: f64 = tok.parse().map_err(|_| DataError::Parse {
                row: line_no + 1,
                column: col + 1,
                token: tok.to_string(),
            })?;
            values.push(v);
        }
        rows += 1;
    }
    let width = width.ok_or(DataError::Empty)?;
    Ok(Array2::from_shape_vec((rows, width), values).expect("row-major fill"))
}

pub fn load_matrix(path: impl AsRef<Path>, kind: DataKind) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let values = parse_matrix(&text)?;
    Dataset::new(values, kind, path.display().to_string())
}

/// Space-separated rows with 17 significant digits, enough to read back bit-exactly.
pub fn format_matrix(values: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in values.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(' ');
            }
            first = false;
            write!(out, "{v:.16e}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn save_matrix(path: impl AsRef<Path>, values: &Array2<f64>) -> Result<(), DataError> {
    write_atomic(path.as_ref(), format_matrix(values).as_bytes())
}

/// Writes to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let name = path.file_name().ok_or_else(|| io_err(path, "not a file path"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(path, e));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn parses_both_delimiters() {
        assert_eq!(parse_matrix("0 1\n1 0\n").unwrap(), array![[0.0, 1.0], [1.0, 0.0]]);
        assert_eq!(parse_matrix("# h\n1.5,2\n\n-3, 4e1\n").unwrap(), array![[1.5, 2.0], [-3.0, 40.0]]);
    }

    #[test]
    fn ragged_row_names_the_line() {
        let err = parse_matrix("1 2\n3 4\n5\n").unwrap_err();
        assert_eq!(err, DataError::Ragged { row: 3, expected: 2, found: 1 });
    }

    #[test]
    fn bad_token_names_row_and_column() {
        let err = parse_matrix("1 2\n3 x\n").unwrap_err();
        assert_eq!(err, DataError::Parse { row: 2, column: 2, token: "x".into() });
    }

    #[test]
    fn empty_input_is_rejected() {
        assert_eq!(parse_matrix("\n# nothing\n").unwrap_err(), DataError::Empty);
    }

    #[test]
    fn save_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let m = array![[0.1, 1.0 / 3.0, -2.5e-300], [f64::MAX, std::f64::consts::PI, 1e-17]];
        save_matrix(&path, &m).unwrap();
        let back = load_matrix(&path, DataKind::Real).unwrap();
        assert!(back.values.iter().zip(m.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn binary_load_rejects_twos() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.txt");
        std::fs::write(&path, "0 1\n2 0\n").unwrap();
        assert!(matches!(
            load_matrix(&path, DataKind::Binary),
            Err(DataError::NotBinary { row: 1, column: 0, .. })
        ));
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_matrix("/nonexistent/x.txt", DataKind::Real).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.txt"));
    }
}
