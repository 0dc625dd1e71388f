use std::path::PathBuf;

use clap::Args;
use oanade::data::{apply_stats, load_matrix, split, standardize, DataKind};
use oanade::model::{HeadKind, Parameters};
use oanade::numerics::Rng;
use oanade::training::{pretrain_deep_observed, train_observed, HistoryRow};

use super::{emit, history_path};
use crate::error::{usage, CliResult};
use crate::model_file::ModelFile;
use crate::run_config::RunConfig;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Run config (key=value lines).
    #[arg(required_unless_present = "list_keys")]
    pub config: Option<PathBuf>,
    /// Where to write the trained model.
    #[arg(required_unless_present = "list_keys")]
    pub out: Option<PathBuf>,
    /// History log path [default: <out>.history.tsv].
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// No per-iteration progress on stderr.
    #[arg(long)]
    pub quiet: bool,
    /// Print every config key with its default and exit.
    #[arg(long)]
    pub list_keys: bool,
}

pub fn run(args: TrainArgs) -> CliResult<()> {
    if args.list_keys {
        return emit(None, &RunConfig::describe_keys());
    }
    let (config_path, out) = (args.config.expect("required"), args.out.expect("required"));
    let cfg = RunConfig::load(&config_path)?;
    let train_path = cfg
        .train_data
        .clone()
        .ok_or_else(|| usage("config needs train_data for training"))?;
    if (cfg.model.head == HeadKind::Binary) != (cfg.data_kind == DataKind::Binary) {
        return Err(usage(format!(
            "head={} cannot model data_kind={}",
            cfg.model.head.name(),
            cfg.data_kind
        )));
    }

    let full = load_matrix(&train_path, cfg.data_kind)?;
    let (train_set, valid_set) = match &cfg.valid_data {
        Some(p) => (full, load_matrix(p, cfg.data_kind)?),
        None => {
            let mut rng = Rng::new(cfg.train.seed).substream("split", 0);
            let mut parts = split(&full, &[1.0 - cfg.valid_fraction, cfg.valid_fraction], &mut rng)?;
            let valid = parts.pop().expect("two parts");
            (parts.pop().expect("two parts"), valid)
        }
    };
    let model = cfg.model_for(train_set.dim())?;
    if valid_set.dim() != model.dim {
        return Err(crate::error::data(format!(
            "validation data has {} columns, training data {}",
            valid_set.dim(),
            model.dim
        )));
    }
    let (train_x, valid_x, stats) = if cfg.data_kind == DataKind::Real && cfg.standardize {
        let (t, stats) = standardize(&train_set)?;
        let v = apply_stats(&valid_set, &stats)?;
        (t.values, v.values, Some(stats))
    } else {
        (train_set.values, valid_set.values, None)
    };

    let quiet = args.quiet;
    let mut report = |depth: usize, row: &HistoryRow| {
        if !quiet {
            let stage = if depth == 0 { "train".to_string() } else { format!("pretrain-{depth}") };
            eprintln!(
                "{stage}\titer {}\ttrain {:.4}\tvalid {:.4}\tlr {:.3e}",
                row.iteration, row.train, row.valid, row.lr
            );
        }
    };
    let outcome = if cfg.pretrain {
        pretrain_deep_observed(&model, train_x.view(), valid_x.view(), &cfg.train, &mut report)?
    } else {
        let params = Parameters::init(&model, &mut Rng::new(cfg.train.seed).substream("init", 0))?;
        train_observed(params, train_x.view(), valid_x.view(), &cfg.train, &mut |row| report(0, row))?
    };

    let file = ModelFile::new(outcome.params, cfg.data_kind, stats, cfg.train.seed)
        .note("train_data", train_path.display().to_string())
        .note("train_rows", train_x.nrows().to_string())
        .note("valid_rows", valid_x.nrows().to_string())
        .note("train_config", cfg.train.to_string())
        .note("pretrain", cfg.pretrain.to_string())
        .note("best_iteration", outcome.best_iteration.to_string());
    file.save(&out)?;

    let history = args.history.unwrap_or_else(|| history_path(&out));
    emit(Some(&history), &outcome.history.to_text())?;
    for (k, h) in outcome.pretraining.iter().enumerate() {
        let mut p = history.clone().into_os_string();
        p.push(format!(".pretrain-{}", k + 2));
        emit(Some(&PathBuf::from(p)), &h.to_text())?;
    }
    let best = &outcome.history.rows[outcome.best_iteration - 1];
    println!("best_iteration\t{}\tvalid_nll\t{}", best.iteration, best.valid);
    Ok(())
}
