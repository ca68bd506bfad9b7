use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelHyper;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    Baseline,
    BiasLoss,
    Reg,
    /// Corpus was augmented before training; the bias loss may be combined
    /// with it through `lambda`.
    CdaPreAugmented,
}

impl FromStr for TrainMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "baseline" => Ok(TrainMode::Baseline),
            "bias_loss" => Ok(TrainMode::BiasLoss),
            "reg" => Ok(TrainMode::Reg),
            "cda_pre_augmented" => Ok(TrainMode::CdaPreAugmented),
            other => Err(format!(
                "unknown mode {other:?} (expected baseline, bias_loss, reg or cda_pre_augmented)"
            )),
        }
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainMode::Baseline => "baseline",
            TrainMode::BiasLoss => "bias_loss",
            TrainMode::Reg => "reg",
            TrainMode::CdaPreAugmented => "cda_pre_augmented",
        })
    }
}

/// Which words the embedding projection penalty applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegTargets {
    Occupations,
    Neutral,
}

impl FromStr for RegTargets {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "occupations" => Ok(RegTargets::Occupations),
            "neutral" => Ok(RegTargets::Neutral),
            other => Err(format!(
                "unknown reg_targets {other:?} (expected occupations or neutral)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda: f64,
    pub lr: f64,
    pub anneal_lo: f64,
    pub anneal_hi: f64,
    /// Ceiling on the global gradient norm.
    pub clip: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub reg_coeff: f64,
    pub reg_targets: RegTargets,
    pub mode: TrainMode,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            lr: 20.0,
            anneal_lo: 0.25,
            anneal_hi: 0.95,
            clip: 0.25,
            batch_size: 48,
            max_epochs: 150,
            patience: 5,
            reg_coeff: 0.0,
            reg_targets: RegTargets::Occupations,
            mode: TrainMode::Baseline,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Weight of the bias loss actually applied in this mode.
    pub fn effective_lambda(&self) -> f64 {
        match self.mode {
            TrainMode::BiasLoss | TrainMode::CdaPreAugmented => self.lambda,
            TrainMode::Baseline | TrainMode::Reg => 0.0,
        }
    }

    pub fn effective_reg_coeff(&self) -> f64 {
        match self.mode {
            TrainMode::Reg => self.reg_coeff,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            errs.push(format!("lambda: {} must be a nonnegative number", self.lambda));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            errs.push(format!("lr: {} must be positive", self.lr));
        }
        for (name, v) in [("anneal_lo", self.anneal_lo), ("anneal_hi", self.anneal_hi)] {
            if !(v > 0.0 && v <= 1.0) {
                errs.push(format!("{name}: {v} not in (0, 1]"));
            }
        }
        if self.anneal_lo > self.anneal_hi {
            errs.push(format!(
                "anneal_lo: {} exceeds anneal_hi {}",
                self.anneal_lo, self.anneal_hi
            ));
        }
        if self.clip.is_nan() || self.clip <= 0.0 {
            errs.push(format!("clip: {} must be positive", self.clip));
        }
        if self.batch_size == 0 {
            errs.push("batch_size: must be at least 1".into());
        }
        if self.max_epochs == 0 {
            errs.push("max_epochs: must be at least 1".into());
        }
        if self.patience == 0 {
            errs.push("patience: must be at least 1".into());
        }
        if !(self.reg_coeff >= 0.0 && self.reg_coeff.is_finite()) {
            errs.push(format!("reg_coeff: {} must be nonnegative", self.reg_coeff));
        }
        if matches!(self.mode, TrainMode::Baseline | TrainMode::Reg) && self.lambda != 0.0 {
            errs.push(format!(
                "lambda: {} has no effect in mode {}; use bias_loss or cda_pre_augmented",
                self.lambda, self.mode
            ));
        }
        if self.mode != TrainMode::Reg && self.reg_coeff != 0.0 {
            errs.push(format!(
                "reg_coeff: {} has no effect in mode {}",
                self.reg_coeff, self.mode
            ));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// `key = value` lines with `#` comments. Later duplicates are errors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut errs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errs.push(format!("line {}: expected `key = value`", idx + 1));
                continue;
            };
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if k.is_empty() {
                errs.push(format!("line {}: empty key", idx + 1));
            } else if let Some((prev, _)) = entries.get(&k) {
                errs.push(format!("line {}: {k} already set on line {prev}", idx + 1));
            } else {
                entries.insert(k, (idx + 1, v));
            }
        }
        if errs.is_empty() {
            Ok(Self { entries })
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (0, value.into()));
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|(k, (_, v))| (k.clone(), v.clone()))
            .collect()
    }
}

const HYPER_KEYS: &[&str] = &["embed_dim", "hidden_units", "num_layers", "seq_len", "dropout"];
const TRAIN_KEYS: &[&str] = &[
    "lambda",
    "lr",
    "anneal_lo",
    "anneal_hi",
    "clip",
    "batch_size",
    "max_epochs",
    "patience",
    "reg_coeff",
    "reg_targets",
    "mode",
    "seed",
];

fn read<T: FromStr>(cfg: &ConfigFile, key: &str, slot: &mut T, errs: &mut Vec<String>)
where
    T::Err: fmt::Display,
{
    if let Some(raw) = cfg.get(key) {
        match raw.parse::<T>() {
            Ok(v) => *slot = v,
            Err(e) => errs.push(format!("{key}: {raw:?}: {e}")),
        }
    }
}

/// Reads model and training settings, starting from defaults. Keys outside
/// the two structs must be listed in `extra_keys`. All problems are reported
/// together.
pub fn settings_from_config(
    cfg: &ConfigFile,
    extra_keys: &[&str],
) -> Result<(ModelHyper, TrainConfig)> {
    let mut errs = Vec::new();
    for key in cfg.keys() {
        if !HYPER_KEYS.contains(&key) && !TRAIN_KEYS.contains(&key) && !extra_keys.contains(&key) {
            errs.push(format!("{key}: unknown setting"));
        }
    }
    let mut hyper = ModelHyper::default();
    read(cfg, "embed_dim", &mut hyper.embed_dim, &mut errs);
    read(cfg, "hidden_units", &mut hyper.hidden_units, &mut errs);
    read(cfg, "num_layers", &mut hyper.num_layers, &mut errs);
    read(cfg, "seq_len", &mut hyper.seq_len, &mut errs);
    read(cfg, "dropout", &mut hyper.dropout, &mut errs);

    let mut train = TrainConfig::default();
    read(cfg, "lambda", &mut train.lambda, &mut errs);
    read(cfg, "lr", &mut train.lr, &mut errs);
    read(cfg, "anneal_lo", &mut train.anneal_lo, &mut errs);
    read(cfg, "anneal_hi", &mut train.anneal_hi, &mut errs);
    read(cfg, "clip", &mut train.clip, &mut errs);
    read(cfg, "batch_size", &mut train.batch_size, &mut errs);
    read(cfg, "max_epochs", &mut train.max_epochs, &mut errs);
    read(cfg, "patience", &mut train.patience, &mut errs);
    read(cfg, "reg_coeff", &mut train.reg_coeff, &mut errs);
    read(cfg, "reg_targets", &mut train.reg_targets, &mut errs);
    read(cfg, "mode", &mut train.mode, &mut errs);
    read(cfg, "seed", &mut train.seed, &mut errs);

    if let Err(e) = hyper.validate() {
        errs.extend(e);
    }
    if let Err(e) = train.validate() {
        errs.extend(e);
    }
    if errs.is_empty() {
        Ok((hyper, train))
    } else {
        Err(Error::Config(errs))
    }
}
