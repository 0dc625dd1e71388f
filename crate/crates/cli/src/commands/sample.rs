use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use ndarray::Array2;
use oanade::data::{write_pgm, DataKind};
use oanade::inference::{ensemble_logdensities, logdensities, sample_ensemble, sample_n, EnsembleSpec};
use oanade::numerics::{sample_permutation, Rng};

use super::{emit, fmt_row, image_side, tile, to_data_space, to_gray};
use crate::error::{usage, CliResult};
use crate::model_file::ModelFile;

#[derive(Debug, Args)]
pub struct SampleArgs {
    pub model: PathBuf,
    /// Number of samples.
    #[arg(long, short = 'n', default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed for the ordering(s) [default: --seed].
    #[arg(long)]
    pub ordering_seed: Option<u64>,
    /// Sample from an ensemble of this many orderings, one picked per sample.
    #[arg(long)]
    pub ensemble: Option<usize>,
    /// Order rows by decreasing log-density.
    #[arg(long)]
    pub sort_by_likelihood: bool,
    /// Output matrix file.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the samples as a PGM contact sheet (image-shaped data only).
    #[arg(long)]
    pub pgm: Option<PathBuf>,
}

/// Rows are `logdensity  ordering  x_1 .. x_D`; values are in the data's
/// original scale, log-densities in the model's space.
pub fn run(args: SampleArgs) -> CliResult<()> {
    let model = ModelFile::load(&args.model)?;
    let params = &model.params;
    let dim = params.dim();
    let mut rng = Rng::new(args.seed);
    let mut ord_rng = Rng::new(args.ordering_seed.unwrap_or(args.seed)).substream("orderings", 0);
    let (xs, picks, ll) = match args.ensemble {
        Some(0) => return Err(usage("--ensemble needs at least one ordering")),
        Some(k) => {
            let spec = EnsembleSpec::sample(dim, k, &mut ord_rng)?;
            let (xs, picks) = sample_ensemble(params, &spec.orderings, args.n, &mut rng)?;
            let ll = ensemble_logdensities(params, xs.view(), &spec)?;
            (xs, picks, ll)
        }
        None => {
            let order = sample_permutation(&mut ord_rng, dim);
            let xs = sample_n(params, &order, args.n, &mut rng)?;
            let ll = logdensities(params, xs.view(), &order)?;
            (xs, vec![0; args.n], ll)
        }
    };
    let mut rows: Vec<usize> = (0..args.n).collect();
    if args.sort_by_likelihood {
        rows.sort_by(|&a, &b| ll[b].total_cmp(&ll[a]));
    }
    let values = to_data_space(&model, xs);
    let mut out = String::from("# logdensity\tordering");
    for i in 1..=dim {
        write!(out, "\tx{i}").unwrap();
    }
    out.push('\n');
    for &r in &rows {
        writeln!(out, "{}\t{}\t{}", ll[r], picks[r], fmt_row(values.row(r).iter().copied(), "\t")).unwrap();
    }
    emit(Some(&args.out), &out)?;

    if let Some(path) = &args.pgm {
        let side = image_side(dim).ok_or_else(|| usage(format!("dimension {dim} is not image-shaped")))?;
        let ordered = values.select(ndarray::Axis(0), &rows);
        write_sheet(path, &ordered, side, model.data_kind)?;
    }
    Ok(())
}

/// Tiles rows as `side x side` images on a near-square grid with 1-pixel gaps.
fn write_sheet(path: &std::path::Path, xs: &Array2<f64>, side: usize, kind: DataKind) -> CliResult<()> {
    let n = xs.nrows().max(1);
    let cols = (n as f64).sqrt().ceil() as usize;
    let grid_rows = n.div_ceil(cols);
    let (w, h) = (cols * (side + 1) + 1, grid_rows * (side + 1) + 1);
    let (min, max) = match kind {
        DataKind::Binary => (0.0, 1.0),
        DataKind::Real => xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v))),
    };
    let mut sheet = vec![255.0; w * h];
    for (k, row) in xs.rows().into_iter().enumerate() {
        let vals = row.to_vec();
        let fill = vals.iter().sum::<f64>() / vals.len() as f64;
        let px = to_gray(&tile(&vals, side, fill), min, max);
        let (gr, gc) = (k / cols, k % cols);
        for i in 0..side {
            for j in 0..side {
                sheet[(gr * (side + 1) + 1 + i) * w + gc * (side + 1) + 1 + j] = px[i * side + j];
            }
        }
    }
    Ok(write_pgm(path, w, h, &sheet)?)
}
