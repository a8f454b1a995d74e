//! Flat `key = value` training configuration files with CLI-flag overrides.
//! Precedence: CLI flag > file entry > built-in default.

use std::fs;
use std::path::Path;

use scope_extract::tagger::TrainingConfig;
use scope_extract::{Error, Result};

/// Optional overrides for every tunable training field. Used both for the
/// parsed config file and for the command-line flags.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr_decay_factor: Option<f64>,
    #[arg(long)]
    pub lr_floor: Option<f64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub min_count: Option<usize>,
    #[arg(long)]
    pub dedup_threshold: Option<f64>,
    #[arg(long)]
    pub word_dim: Option<usize>,
    #[arg(long)]
    pub char_dim: Option<usize>,
    #[arg(long)]
    pub char_hidden: Option<usize>,
    #[arg(long)]
    pub dict_hidden: Option<usize>,
    #[arg(long)]
    pub sent_hidden: Option<usize>,
}

impl TrainOverrides {
    /// Applies these overrides on top of `base`, in place.
    pub fn apply(&self, base: &mut TrainingConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { base.$field = v; })*
            };
        }
        set!(
            learning_rate,
            batch_size,
            epochs,
            lr_decay_factor,
            lr_floor,
            lambda1,
            lambda2,
            beta1,
            beta2,
            epsilon,
            min_count,
            dedup_threshold
        );
        if let Some(v) = self.word_dim {
            base.dims.encoder.word_dim = v;
        }
        if let Some(v) = self.char_dim {
            base.dims.encoder.char_dim = v;
        }
        if let Some(v) = self.char_hidden {
            base.dims.encoder.char_hidden = v;
        }
        if let Some(v) = self.dict_hidden {
            base.dims.encoder.dict_hidden = v;
        }
        if let Some(v) = self.sent_hidden {
            base.dims.sent_hidden = v;
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| {
        Error::Config(format!("config line {line}: invalid value {value:?} for key {key:?}"))
    })
}

/// Parses a flat `key = value` file; `#` starts a comment, blank lines are
/// ignored, unknown keys are rejected.
pub fn parse_config_file(path: impl AsRef<Path>) -> Result<TrainOverrides> {
    let text = fs::read_to_string(path)?;
    let mut out = TrainOverrides::default();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "config line {line_no}: expected `key = value`, got {raw_line:?}"
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "learning_rate" => out.learning_rate = Some(parse_value(key, value, line_no)?),
            "batch_size" => out.batch_size = Some(parse_value(key, value, line_no)?),
            "epochs" => out.epochs = Some(parse_value(key, value, line_no)?),
            "lr_decay_factor" => out.lr_decay_factor = Some(parse_value(key, value, line_no)?),
            "lr_floor" => out.lr_floor = Some(parse_value(key, value, line_no)?),
            "lambda1" => out.lambda1 = Some(parse_value(key, value, line_no)?),
            "lambda2" => out.lambda2 = Some(parse_value(key, value, line_no)?),
            "beta1" => out.beta1 = Some(parse_value(key, value, line_no)?),
            "beta2" => out.beta2 = Some(parse_value(key, value, line_no)?),
            "epsilon" => out.epsilon = Some(parse_value(key, value, line_no)?),
            "min_count" => out.min_count = Some(parse_value(key, value, line_no)?),
            "dedup_threshold" => out.dedup_threshold = Some(parse_value(key, value, line_no)?),
            "word_dim" => out.word_dim = Some(parse_value(key, value, line_no)?),
            "char_dim" => out.char_dim = Some(parse_value(key, value, line_no)?),
            "char_hidden" => out.char_hidden = Some(parse_value(key, value, line_no)?),
            "dict_hidden" => out.dict_hidden = Some(parse_value(key, value, line_no)?),
            "sent_hidden" => out.sent_hidden = Some(parse_value(key, value, line_no)?),
            other => {
                return Err(Error::Config(format!(
                    "config line {line_no}: unknown key {other:?}"
                )))
            }
        }
    }
    Ok(out)
}

/// Resolves the effective training configuration from an optional file and
/// the command-line overrides.
pub fn resolve_training_config(
    file: Option<&Path>,
    cli: &TrainOverrides,
    seed: u64,
) -> Result<TrainingConfig> {
    let mut config = TrainingConfig::default();
    if let Some(path) = file {
        parse_config_file(path)?.apply(&mut config);
    }
    cli.apply(&mut config);
    config.seed = seed;
    Ok(config)
}
