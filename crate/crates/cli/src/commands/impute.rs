use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use ndarray::{Array1, Array2};
use oanade::data::DataKind;
use oanade::inference::impute;
use oanade::numerics::Rng;

use super::{emit, fmt_row, to_data_space};
use crate::error::{data, CliResult};
use crate::model_file::ModelFile;

/// Token marking a missing entry.
pub const MISSING: &str = "?";

#[derive(Debug, Args)]
pub struct ImputeArgs {
    pub model: PathBuf,
    /// Matrix file with `?` for missing entries.
    pub data: PathBuf,
    /// Completions per row.
    #[arg(long, short = 'n', default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Rows of numbers or `?`, whitespace- or comma-separated; `#` lines skipped.
pub fn parse_partial(text: &str) -> CliResult<Vec<Vec<Option<f64>>>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .enumerate()
            .map(|(c, t)| match t {
                MISSING => Ok(None),
                _ => t
                    .parse()
                    .map(Some)
                    .map_err(|_| data(format!("row {}, column {}: cannot parse `{t}`", n + 1, c + 1))),
            })
            .collect::<CliResult<Vec<_>>>()?;
        let w = *width.get_or_insert(row.len());
        if row.len() != w {
            return Err(data(format!("row {} has {} columns, expected {w}", n + 1, row.len())));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(data("empty input"));
    }
    Ok(rows)
}

/// One output line per input row: row number, marginal log-density of the
/// observed entries (model space), then one column per completion with the
/// full vector comma-separated in the data's original scale. Fully observed
/// rows get no completion columns.
pub fn run(args: ImputeArgs) -> CliResult<()> {
    let model = ModelFile::load(&args.model)?;
    let text = std::fs::read_to_string(&args.data).map_err(|e| data(format!("{}: {e}", args.data.display())))?;
    let rows = parse_partial(&text)?;
    let dim = model.params.dim();
    if rows[0].len() != dim {
        return Err(data(format!("{} columns, model expects {dim}", rows[0].len())));
    }
    let mut rng = Rng::new(args.seed);
    let mut out = String::from("# row\tmarginal_logdensity\tcompletions\n");
    for (r, row) in rows.iter().enumerate() {
        let mut x = Array1::zeros(dim);
        let mut observed = Vec::new();
        for (i, v) in row.iter().enumerate() {
            if let Some(v) = *v {
                if model.data_kind == DataKind::Binary && v != 0.0 && v != 1.0 {
                    return Err(data(format!("row {}, column {}: value {v} is not binary", r + 1, i + 1)));
                }
                x[i] = match &model.stats {
                    Some(s) => (v - s.mean[i]) / s.std[i],
                    None => v,
                };
                observed.push(i);
            }
        }
        let n = if observed.len() == dim { 0 } else { args.n };
        let imp = impute(&model.params, x.view(), &observed, &mut rng, n)?;
        write!(out, "{}\t{}", r + 1, imp.marginal.0).unwrap();
        let completions: Array2<f64> = to_data_space(&model, imp.completions);
        for c in completions.rows() {
            write!(out, "\t{}", fmt_row(c.iter().copied(), ",")).unwrap();
        }
        out.push('\n');
    }
    emit(args.out.as_deref(), &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_missing_markers() {
        let rows = parse_partial("1 ? 0\n?,?,1\n").unwrap();
        assert_eq!(rows, vec![vec![Some(1.0), None, Some(0.0)], vec![None, None, Some(1.0)]]);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(parse_partial("1 2\n3\n").is_err());
        assert!(parse_partial("1 x\n").is_err());
        assert!(parse_partial("").is_err());
    }
}
