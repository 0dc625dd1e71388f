use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use oanade::inference::avg_test_loglik;
use oanade::numerics::Rng;

use super::{emit, load_for_model};
use crate::error::{usage, CliResult};
use crate::model_file::ModelFile;

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub model: PathBuf,
    pub data: PathBuf,
    /// Number of random orderings.
    #[arg(long, default_value_t = 10)]
    pub orderings: usize,
    /// Seed for the orderings.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also report ensembles of the first 1, 2, 4, ... and all orderings.
    #[arg(long)]
    pub ensemble: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Average log-likelihoods in nats per example, in the model's (standardized) space.
pub fn run(args: EvalArgs) -> CliResult<()> {
    if args.orderings == 0 {
        return Err(usage("--orderings must be at least 1"));
    }
    let model = ModelFile::load(&args.model)?;
    let xs = load_for_model(&model, &args.data)?;
    let report = avg_test_loglik(&model.params, xs.view(), args.orderings, &mut Rng::new(args.seed))?;
    let k = report.per_ordering.len();
    let mut out = String::from("# statistic\tk\tvalue\n");
    writeln!(out, "examples\t{k}\t{}", xs.nrows()).unwrap();
    for (i, v) in report.per_ordering.iter().enumerate() {
        writeln!(out, "ordering\t{}\t{v}", i + 1).unwrap();
    }
    writeln!(out, "mean\t{k}\t{}", report.mean).unwrap();
    writeln!(out, "ordering_sd\t{k}\t{}", report.ordering_sd).unwrap();
    writeln!(out, "example_stderr\t{k}\t{}", report.example_stderr).unwrap();
    if args.ensemble {
        let mut sizes: Vec<usize> = std::iter::successors(Some(1usize), |s| Some(s * 2)).take_while(|&s| s < k).collect();
        sizes.push(k);
        for s in sizes {
            writeln!(out, "ensemble\t{s}\t{}", report.ensemble_of(s)).unwrap();
        }
    }
    emit(args.out.as_deref(), &out)
}
