//! `key=value` run configuration for `train` and `gradcheck`.
//!
//! One setting per line; blank lines and lines starting with `#` are ignored.
//! Unknown keys are an error. Relative paths are resolved against the
//! directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use oanade::data::DataKind;
use oanade::model::{Activation, HeadKind, ModelConfig};
use oanade::training::TrainConfig;

use crate::error::{usage, CliResult};

/// Every accepted key with its default and meaning.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("train_data", "(required for train)", "training matrix file"),
    ("valid_data", "(none)", "validation matrix file; when absent a part of train_data is held out"),
    ("valid_fraction", "0.1", "share of train_data held out when valid_data is absent"),
    ("data_kind", "binary for head=binary, real for head=mog", "binary or real"),
    ("standardize", "true", "standardize real data with training-set mean and std"),
    ("dim", "(from data)", "input dimension; required by gradcheck when train_data is absent"),
    ("hidden_sizes", "500", "comma-separated hidden layer widths"),
    ("activation", "relu", "relu or sigmoid"),
    ("head", "binary", "binary or mog"),
    ("components", "10", "mixture components per dimension for head=mog"),
    ("input_masks", "true", "feed the observed-dimension mask alongside the inputs"),
    ("iterations", "100", "training iterations"),
    ("updates_per_iteration", "1000", "minibatch updates per iteration"),
    ("minibatch_size", "100", "examples per update"),
    ("initial_lr", "0.001", "learning rate at the first update, decays linearly to zero"),
    ("momentum", "0.9", "Nesterov momentum"),
    ("weight_decay", "0", "L2 penalty on weights, biases excluded"),
    ("pretrain", "true", "layerwise pretraining when there is more than one hidden layer"),
    ("pretrain_iterations", "20", "iterations per pretraining level"),
    ("seed", "0", "seed for initialization, minibatches, contexts and splits"),
    ("early_stop", "true", "return the parameters with the best validation score"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub train_data: Option<PathBuf>,
    pub valid_data: Option<PathBuf>,
    pub valid_fraction: f64,
    pub data_kind: DataKind,
    pub standardize: bool,
    /// Set when `dim` was given explicitly.
    pub dim: Option<usize>,
    pub pretrain: bool,
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(usage(format!("{key}: expected true or false, got `{v}`"))),
    }
}

fn parse_num<N: std::str::FromStr>(key: &str, v: &str) -> CliResult<N> {
    v.parse().map_err(|_| usage(format!("{key}: cannot parse `{v}`")))
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> CliResult<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| crate::error::data(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut kv = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key=value", n + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.iter().any(|(name, _, _)| *name == k) {
                return Err(usage(format!("unknown config key `{k}`")));
            }
            if kv.insert(k.to_string(), v.to_string()).is_some() {
                return Err(usage(format!("config key `{k}` given twice")));
            }
        }
        let get = |k: &str| kv.get(k).map(String::as_str);
        let path = |k: &str| get(k).map(|p| base.join(p));

        let hidden = match get("hidden_sizes") {
            Some(v) => v.split(',').map(|h| parse_num("hidden_sizes", h.trim())).collect::<CliResult<Vec<usize>>>()?,
            None => vec![500],
        };
        let activation: Activation = match get("activation") {
            Some(v) => v.parse().map_err(|e: oanade::Error| usage(e.to_string()))?,
            None => Activation::Relu,
        };
        let components = get("components").map(|v| parse_num("components", v)).transpose()?.unwrap_or(10);
        let head = match get("head").unwrap_or("binary") {
            "binary" => HeadKind::Binary,
            "mog" => HeadKind::Mog { components },
            other => return Err(usage(format!("head: expected binary or mog, got `{other}`"))),
        };
        let input_masks = get("input_masks").map(|v| parse_bool("input_masks", v)).transpose()?.unwrap_or(true);
        let dim = get("dim").map(|v| parse_num("dim", v)).transpose()?;
        let model = ModelConfig::new(dim.unwrap_or(1), hidden, activation, head).with_input_masks(input_masks);

        let defaults = TrainConfig::default();
        let train = TrainConfig {
            iterations: get("iterations").map(|v| parse_num("iterations", v)).transpose()?.unwrap_or(defaults.iterations),
            updates_per_iteration: get("updates_per_iteration")
                .map(|v| parse_num("updates_per_iteration", v))
                .transpose()?
                .unwrap_or(defaults.updates_per_iteration),
            minibatch_size: get("minibatch_size")
                .map(|v| parse_num("minibatch_size", v))
                .transpose()?
                .unwrap_or(defaults.minibatch_size),
            initial_lr: get("initial_lr").map(|v| parse_num("initial_lr", v)).transpose()?.unwrap_or(defaults.initial_lr),
            momentum: get("momentum").map(|v| parse_num("momentum", v)).transpose()?.unwrap_or(defaults.momentum),
            weight_decay: get("weight_decay")
                .map(|v| parse_num("weight_decay", v))
                .transpose()?
                .unwrap_or(defaults.weight_decay),
            pretrain_iterations: get("pretrain_iterations")
                .map(|v| parse_num("pretrain_iterations", v))
                .transpose()?
                .unwrap_or(defaults.pretrain_iterations),
            seed: get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(defaults.seed),
            early_stop: get("early_stop").map(|v| parse_bool("early_stop", v)).transpose()?.unwrap_or(defaults.early_stop),
        };
        train.validate().map_err(|e| usage(e.to_string()))?;

        let data_kind = match get("data_kind") {
            Some(v) => v.parse().map_err(usage)?,
            None if head == HeadKind::Binary => DataKind::Binary,
            None => DataKind::Real,
        };
        let valid_fraction: f64 = get("valid_fraction").map(|v| parse_num("valid_fraction", v)).transpose()?.unwrap_or(0.1);
        if !(valid_fraction > 0.0 && valid_fraction < 1.0) {
            return Err(usage(format!("valid_fraction must lie in (0, 1), got {valid_fraction}")));
        }
        Ok(RunConfig {
            model,
            train,
            train_data: path("train_data"),
            valid_data: path("valid_data"),
            valid_fraction,
            data_kind,
            standardize: get("standardize").map(|v| parse_bool("standardize", v)).transpose()?.unwrap_or(true),
            dim,
            pretrain: get("pretrain").map(|v| parse_bool("pretrain", v)).transpose()?.unwrap_or(true),
        })
    }

    /// The model architecture for data with `dim` columns.
    pub fn model_for(&self, dim: usize) -> CliResult<ModelConfig> {
        if let Some(d) = self.dim {
            if d != dim {
                return Err(crate::error::data(format!("config says dim={d} but the data has {dim} columns")));
            }
        }
        let mut m = self.model.clone();
        m.dim = dim;
        m.validate().map_err(|e| usage(e.to_string()))?;
        Ok(m)
    }

    /// `key<TAB>default<TAB>meaning` for every key.
    pub fn describe_keys() -> String {
        let mut out = String::from("# key\tdefault\tmeaning\n");
        for (k, d, m) in KEYS {
            out.push_str(&format!("{k}\t{d}\t{m}\n"));
        }
        out
    }
}
