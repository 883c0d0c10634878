//! Flat `key = value` run configuration: optional file values overridden by
//! command-line flags, with the fully-resolved result written next to every
//! run's outputs.

use crate::CliError;
use drn::train::TrainConfig;
use std::collections::BTreeMap;
use std::path::Path;

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected `key = value`, got {raw:?}", i + 1))
        })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn load_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read config {}: {e}", path.display())))?;
    parse_kv(&text)
}

/// Command-line overrides for the trainer; `None` falls back to the config
/// file and then to the defaults.
#[derive(Debug, Clone, Default)]
pub struct TrainOverrides {
    pub learning_rate: Option<f64>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub seed: Option<u64>,
    pub batch: Option<usize>,
    pub val_every: Option<usize>,
}

fn parsed<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("config key {key}: bad value {v:?}"))),
    }
}

/// Resolution order: flag > config file > default.
pub fn resolve_train_config(
    file: &BTreeMap<String, String>,
    flags: &TrainOverrides,
) -> Result<TrainConfig, CliError> {
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        learning_rate: flags
            .learning_rate
            .or(parsed(file, "learning_rate")?)
            .unwrap_or(defaults.learning_rate),
        max_epochs: flags
            .max_epochs
            .or(parsed(file, "max_epochs")?)
            .unwrap_or(defaults.max_epochs),
        patience: flags.patience.or(parsed(file, "patience")?).unwrap_or(defaults.patience),
        seed: flags.seed.or(parsed(file, "seed")?).unwrap_or(defaults.seed),
        batch: match flags.batch.or(parsed(file, "batch")?) {
            Some(0) | None => None, // 0 selects full-batch
            some => some,
        },
        val_every: flags
            .val_every
            .or(parsed(file, "val_every")?)
            .unwrap_or(defaults.val_every)
            .max(1),
        ..defaults
    };
    if config.learning_rate <= 0.0 {
        return Err(CliError::Usage("learning_rate must be positive".into()));
    }
    if config.patience == 0 {
        return Err(CliError::Usage("patience must be at least 1".into()));
    }
    Ok(config)
}

/// Serializes the fully-resolved run configuration, one `key = value` line
/// per setting plus any extra command-specific entries.
pub fn render_resolved(config: &TrainConfig, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in extra {
        out.push_str(&format!("{k} = {v}\n"));
    }
    out.push_str(&format!("learning_rate = {}\n", config.learning_rate));
    out.push_str(&format!("max_epochs = {}\n", config.max_epochs));
    out.push_str(&format!("patience = {}\n", config.patience));
    out.push_str(&format!("seed = {}\n", config.seed));
    out.push_str(&format!("batch = {}\n", config.batch.unwrap_or(0)));
    out.push_str(&format!("val_every = {}\n", config.val_every));
    out
}
