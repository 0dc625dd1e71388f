use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use oanade::data::write_pgm;

use super::{emit, image_side, tile, to_gray};
use crate::error::{usage, CliResult};
use crate::model_file::ModelFile;

#[derive(Debug, Args)]
pub struct ExportRfArgs {
    pub model: PathBuf,
    /// Number of hidden units to export, largest data-weight norm first.
    #[arg(long, default_value_t = 50)]
    pub top_k: usize,
    /// Output path prefix; files are `<prefix>data-NNN.pgm` and `<prefix>mask-NNN.pgm`.
    #[arg(long)]
    pub out_prefix: String,
}

/// Each image is rescaled to 0..255 on its own; a missing last pixel is drawn mid-range.
pub fn run(args: ExportRfArgs) -> CliResult<()> {
    let model = ModelFile::load(&args.model)?;
    let params = &model.params;
    let dim = params.dim();
    let side = image_side(dim).ok_or_else(|| usage(format!("dimension {dim} is not image-shaped")))?;
    let w = &params.input.weight;
    let masks = params.config().input_masks;
    let norms: Vec<f64> = w.rows().into_iter().map(|r| r.slice(ndarray::s![..dim]).dot(&r.slice(ndarray::s![..dim])).sqrt()).collect();
    let mut units: Vec<usize> = (0..w.nrows()).collect();
    units.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    units.truncate(args.top_k);

    let mut out = String::from("# rank\tunit\tnorm\tfiles\n");
    for (rank, &u) in units.iter().enumerate() {
        let row = w.row(u);
        let mut files = Vec::new();
        let halves: &[(&str, usize)] = if masks { &[("data", 0), ("mask", dim)] } else { &[("data", 0)] };
        for &(half, offset) in halves {
            let vals = row.slice(ndarray::s![offset..offset + dim]).to_vec();
            let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            let px = to_gray(&tile(&vals, side, 0.5 * (lo + hi)), lo, hi);
            let path = format!("{}{half}-{:03}.pgm", args.out_prefix, rank + 1);
            write_pgm(&path, side, side, &px)?;
            files.push(path);
        }
        writeln!(out, "{}\t{u}\t{}\t{}", rank + 1, norms[u], files.join(",")).unwrap();
    }
    emit(None, &out)
}
