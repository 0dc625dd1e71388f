use std::path::PathBuf;

use clap::{Args, Subcommand};
use oanade::data::{binarize, load_matrix, prepare_patches, read_pgm, save_matrix, split, DataKind, PatchSampling};
use oanade::numerics::Rng;

use crate::error::{usage, CliResult};

#[derive(Debug, Args)]
pub struct PrepDataArgs {
    #[command(subcommand)]
    pub action: PrepAction,
}

#[derive(Debug, Subcommand)]
pub enum PrepAction {
    /// Shuffle rows and cut them into parts.
    Split {
        input: PathBuf,
        /// Comma-separated fractions summing to 1.
        #[arg(long, value_delimiter = ',', default_values_t = [0.9, 0.1])]
        fractions: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// One output path per fraction.
        #[arg(long, value_delimiter = ',', required = true)]
        out: Vec<PathBuf>,
    },
    /// Threshold every entry: 1 when at least --threshold, else 0.
    Binarize {
        input: PathBuf,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean-subtracted square patches from PGM images, bottom-right pixel dropped.
    Patches {
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long, default_value_t = 8)]
        patch: usize,
        /// Random patch locations; conflicts with --stride.
        #[arg(long, conflicts_with = "stride")]
        count: Option<usize>,
        /// Every corner on a grid with this step.
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(args: PrepDataArgs) -> CliResult<()> {
    match args.action {
        PrepAction::Split { input, fractions, seed, out } => {
            if out.len() != fractions.len() {
                return Err(usage(format!("{} fractions but {} output paths", fractions.len(), out.len())));
            }
            let data = load_matrix(&input, DataKind::Real)?;
            let parts = split(&data, &fractions, &mut Rng::new(seed))?;
            for (part, path) in parts.iter().zip(&out) {
                save_matrix(path, &part.values)?;
                println!("{}\t{}", path.display(), part.len());
            }
        }
        PrepAction::Binarize { input, threshold, out } => {
            let data = load_matrix(&input, DataKind::Real)?;
            save_matrix(&out, &binarize(&data, threshold).values)?;
        }
        PrepAction::Patches { images, patch, count, stride, seed, out } => {
            let imgs = images.iter().map(read_pgm).collect::<Result<Vec<_>, _>>()?;
            let sampling = match (count, stride) {
                (Some(count), None) => PatchSampling::Random { count, seed },
                (None, Some(stride)) => PatchSampling::Grid { stride },
                (None, None) => PatchSampling::Random { count: 10_000, seed },
                (Some(_), Some(_)) => unreachable!("clap rejects both"),
            };
            let d = prepare_patches(&imgs, patch, sampling)?;
            save_matrix(&out, &d.values)?;
            println!("{}\t{}\t{}", out.display(), d.len(), d.dim());
        }
    }
    Ok(())
}
