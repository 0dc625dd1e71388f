mod eval;
mod export_rf;
mod gradcheck;
mod impute;
mod prep_data;
mod sample;
mod train;

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use ndarray::Array2;
use oanade::data::{apply_stats, load_matrix, write_atomic};

use crate::error::{data, CliResult};
use crate::model_file::ModelFile;

pub use eval::EvalArgs;
pub use export_rf::ExportRfArgs;
pub use gradcheck::GradcheckArgs;
pub use impute::ImputeArgs;
pub use prep_data::PrepDataArgs;
pub use sample::SampleArgs;
pub use train::TrainArgs;

#[derive(Debug, Parser)]
#[command(name = "oanade", version, about = "Order-agnostic NADE density estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from a key=value run config.
    Train(TrainArgs),
    /// Test log-likelihood under random orderings and their ensemble.
    Eval(EvalArgs),
    /// Draw ancestral samples.
    Sample(SampleArgs),
    /// Marginal density of observed entries and completions of the missing ones.
    Impute(ImputeArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
    /// Export first-layer receptive fields as PGM images.
    ExportRf(ExportRfArgs),
    /// Split, binarize or cut image patches from data files.
    PrepData(PrepDataArgs),
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Train(a) => train::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Sample(a) => sample::run(a),
        Command::Impute(a) => impute::run(a),
        Command::Gradcheck(a) => gradcheck::run(a),
        Command::ExportRf(a) => export_rf::run(a),
        Command::PrepData(a) => prep_data::run(a),
    }
}

/// Writes `text` atomically to `path`, or to stdout when there is no path.
fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => Ok(write_atomic(p, text.as_bytes())?),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| data(format!("stdout: {e}")))
        }
    }
}

/// Loads a data file in the model's space: kind checked, standardized with the embedded stats.
fn load_for_model(model: &ModelFile, path: &Path) -> CliResult<Array2<f64>> {
    let raw = load_matrix(path, model.data_kind)?;
    let dim = model.params.dim();
    if raw.dim() != dim {
        return Err(data(format!("{}: {} columns, model expects {dim}", path.display(), raw.dim())));
    }
    Ok(match &model.stats {
        Some(s) => apply_stats(&raw, s)?.values,
        None => raw.values,
    })
}

/// Maps model-space rows back to the data's original scale.
fn to_data_space(model: &ModelFile, xs: Array2<f64>) -> Array2<f64> {
    match &model.stats {
        Some(s) => &xs * &s.std + &s.mean,
        None => xs,
    }
}

/// Side length when `dim` is a square image, or a square image missing its last pixel.
fn image_side(dim: usize) -> Option<usize> {
    let s = (dim as f64).sqrt().round() as usize;
    [s, s + 1].into_iter().find(|&s| s * s == dim || s * s == dim + 1)
}

/// Pixels of one tile: `values` padded to `side^2`, the absent pixel set to `fill`.
fn tile(values: &[f64], side: usize, fill: f64) -> Vec<f64> {
    let mut px = values.to_vec();
    px.resize(side * side, fill);
    px
}

/// Linear map of `min..max` onto `0..255`; constant input maps to mid-grey.
fn to_gray(values: &[f64], min: f64, max: f64) -> Vec<f64> {
    if max > min {
        values.iter().map(|v| 255.0 * (v - min) / (max - min)).collect()
    } else {
        vec![128.0; values.len()]
    }
}

fn history_path(model_out: &Path) -> PathBuf {
    let mut s = model_out.as_os_str().to_owned();
    s.push(".history.tsv");
    PathBuf::from(s)
}

fn fmt_row(values: impl IntoIterator<Item = f64>, sep: &str) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(sep)
}
