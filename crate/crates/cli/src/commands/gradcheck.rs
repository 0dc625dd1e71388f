use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use ndarray::Array1;
use oanade::data::load_matrix;
use oanade::model::{loss_of_flat, masked_loss_and_gradient, HeadKind, ModelConfig, Parameters};
use oanade::numerics::{finite_diff_gradient, Rng};
use oanade::training::sample_context;

use super::emit;
use crate::error::{usage, CliError, CliResult};
use crate::run_config::RunConfig;

/// Failure threshold on the maximum relative error.
pub const TOLERANCE: f64 = 1e-5;
const EPS: f64 = 1e-6;
/// Relative errors are measured against `max(|analytic|, |numeric|, FLOOR)`.
const FLOOR: f64 = 1e-2;
/// Names a tensor whose analytic gradient is deliberately perturbed.
const CORRUPT_ENV: &str = "OANADE_GRADCHECK_CORRUPT";

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Run config; its architecture is checked with both output heads.
    pub config: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random (example, context) pairs per head.
    #[arg(long, default_value_t = 5)]
    pub contexts: usize,
}

pub fn run(args: GradcheckArgs) -> CliResult<()> {
    let cfg = RunConfig::load(&args.config)?;
    let dim = match (cfg.dim, &cfg.train_data) {
        (Some(d), _) => d,
        (None, Some(p)) => load_matrix(p, cfg.data_kind)?.dim(),
        (None, None) => return Err(usage("gradcheck needs `dim` or `train_data` in the config")),
    };
    let components = match cfg.model.head {
        HeadKind::Mog { components } => components,
        HeadKind::Binary => 10,
    };
    let corrupt = std::env::var(CORRUPT_ENV).ok();
    let mut out = String::from("# head\ttensor\tmax_rel_error\n");
    let mut worst = (0.0f64, String::new());
    for (h, head) in [HeadKind::Binary, HeadKind::Mog { components }].into_iter().enumerate() {
        let mut model = cfg.model.clone();
        model.dim = dim;
        model.head = head;
        let errors = check(&model, args.seed.wrapping_add(h as u64), args.contexts, corrupt.as_deref())?;
        for (name, err) in errors {
            writeln!(out, "{}\t{name}\t{err:e}", head.name()).unwrap();
            if err > worst.0 || worst.1.is_empty() {
                worst = (err, format!("{name} ({} head)", head.name()));
            }
        }
    }
    writeln!(out, "max\t{}\t{:e}", worst.1, worst.0).unwrap();
    emit(None, &out)?;
    if worst.0 > TOLERANCE {
        return Err(CliError::Numeric(format!(
            "gradient check failed: relative error {:e} in {} exceeds {TOLERANCE:e}",
            worst.0, worst.1
        )));
    }
    Ok(())
}

/// Largest relative error per tensor over `contexts` random examples.
fn check(model: &ModelConfig, seed: u64, contexts: usize, corrupt: Option<&str>) -> CliResult<Vec<(String, f64)>> {
    let mut rng = Rng::new(seed);
    let mut params = Parameters::<f64>::init(model, &mut rng.substream("init", 0))?;
    let flat: Vec<f64> = params.to_flat().iter().map(|v| v + 0.1 * rng.normal()).collect();
    params.set_flat(&flat)?;
    let spans: Vec<(String, usize)> = params.tensors().into_iter().map(|t| (t.0, t.2.len())).collect();
    let mut worst = vec![0.0f64; spans.len()];
    for _ in 0..contexts.max(1) {
        let x = Array1::from_shape_fn(model.dim, |_| match model.head {
            HeadKind::Binary => f64::from(u8::from(rng.bernoulli(0.5))),
            HeadKind::Mog { .. } => rng.normal(),
        });
        let ctx = sample_context(&mut rng, model.dim);
        let (_, grad) = masked_loss_and_gradient(&params, x.view(), &ctx)?;
        let mut analytic = grad.to_flat();
        let numeric = finite_diff_gradient(|theta| loss_of_flat(&params, theta, x.view(), &ctx), &flat, EPS)?;
        let mut start = 0;
        for (t, (name, len)) in spans.iter().enumerate() {
            if corrupt == Some(name.as_str()) {
                analytic[start] += 1.0;
            }
            for j in start..start + len {
                let (a, n) = (analytic[j], numeric[j]);
                let rel = (a - n).abs() / a.abs().max(n.abs()).max(FLOOR);
                worst[t] = worst[t].max(rel);
            }
            start += len;
        }
    }
    Ok(spans.into_iter().map(|s| s.0).zip(worst).collect())
}
