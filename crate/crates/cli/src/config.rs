//! Experiment files: TOML with `--set key=value` overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use genpu::baselines::ClassifierConfig;
use genpu::genpu::GenPuConfig;
use serde::{Deserialize, Serialize};

/// A configuration problem; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    TwoMoons,
    Circles,
    GaussianMixture,
    Digits,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    pub n_per_class: usize,
    pub noise_std: f64,
    /// Positives moved into the labeled set.
    pub n_labeled: usize,
    /// Negatives moved into the labeled set; semi-supervised mode only.
    pub n_labeled_negative: usize,
    pub test_per_class: usize,
    pub seed: u64,
    pub radii: (f64, f64),
    pub centers_p: Vec<Vec<f64>>,
    pub centers_n: Vec<Vec<f64>>,
    /// IDX files; relative paths resolve against the config file's directory.
    pub images: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Held-out IDX files. Without them the test set is cut from the end of
    /// each digit's examples in the training files.
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub pos_digit: u8,
    pub neg_digit: u8,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            kind: DatasetKind::TwoMoons,
            n_per_class: 5000,
            noise_std: 0.1414,
            n_labeled: 500,
            n_labeled_negative: 0,
            test_per_class: 1000,
            seed: 1,
            radii: (0.5, 1.0),
            centers_p: vec![vec![2.0, 0.0], vec![-2.0, 0.0]],
            centers_n: vec![vec![0.0, 2.0], vec![0.0, -2.0]],
            images: None,
            labels: None,
            test_images: None,
            test_labels: None,
            pos_digit: 3,
            neg_digit: 5,
        }
    }
}

/// Which comparison classifiers to train after the game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Classifier trained on generated samples.
    pub genpu_pn: bool,
    pub upu: bool,
    pub nnpu: bool,
    /// Classifier trained on the fully labeled training data.
    pub oracle_pn: bool,
    pub generated_per_class: usize,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            genpu_pn: true,
            upu: true,
            nnpu: true,
            oracle_pn: true,
            generated_per_class: 2000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoggingConfig {
    /// A metrics row every this many iterations.
    pub metrics_every: u64,
    /// Generated point clouds every this many iterations (and at 0).
    pub snapshot_every: u64,
    pub snapshot_samples: usize,
}

impl Default for LoggingConfig {
    fn default() -> Self {
        Self {
            metrics_every: 1,
            snapshot_every: 1000,
            snapshot_samples: 500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Artifact directory below the output root; defaults to `name`.
    pub output_dir: Option<PathBuf>,
    /// Prior given to the game and the PU baselines. When absent, the
    /// fraction of positives left in the unlabeled set is used.
    pub class_prior: Option<f64>,
    pub dataset: DatasetConfig,
    pub genpu: GenPuConfig,
    pub classifier: ClassifierConfig,
    pub baselines: BaselineConfig,
    pub logging: LoggingConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            output_dir: None,
            class_prior: None,
            dataset: DatasetConfig::default(),
            genpu: GenPuConfig::synthetic(0.5),
            classifier: ClassifierConfig::default(),
            baselines: BaselineConfig::default(),
            logging: LoggingConfig::default(),
        }
    }
}

/// Parses a `--set` value as a TOML literal, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `key.path=value` to a TOML tree, creating tables as needed.
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        bail!(config_error(format!("override `{assignment}` is not of the form key=value")));
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!(config_error(format!("override key `{key}` is malformed")));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut table = root;
    for p in parents {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => bail!(config_error(format!("override `{key}`: `{p}` is not a table"))),
        };
    }
    table.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut tree: toml::Table = toml::from_str(text).map_err(|e| config_error(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        let cfg: Self = toml::Value::Table(tree)
            .try_into()
            .map_err(|e: toml::de::Error| config_error(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative dataset paths are resolved against its
    /// directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text, overrides)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let d = &mut cfg.dataset;
        for p in [&mut d.images, &mut d.labels, &mut d.test_images, &mut d.test_labels]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing config")
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(config_error(m));
        let d = &self.dataset;
        if d.n_per_class == 0 {
            return err("dataset.n_per_class must be >= 1".into());
        }
        if d.n_labeled == 0 || d.n_labeled > d.n_per_class {
            return err(format!("dataset.n_labeled = {} must lie in 1..={}", d.n_labeled, d.n_per_class));
        }
        if d.test_per_class == 0 {
            return err("dataset.test_per_class must be >= 1".into());
        }
        if d.kind == DatasetKind::Digits && (d.images.is_none() || d.labels.is_none()) {
            return err("dataset.images and dataset.labels are required for digits".into());
        }
        if d.test_images.is_some() != d.test_labels.is_some() {
            return err("dataset.test_images and dataset.test_labels go together".into());
        }
        if let Some(p) = self.class_prior {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("class_prior = {p} outside [0, 1]"));
            }
        }
        if self.logging.metrics_every == 0 || self.logging.snapshot_every == 0 {
            return err("logging.metrics_every and logging.snapshot_every must be >= 1".into());
        }
        if self.baselines.genpu_pn && self.baselines.generated_per_class == 0 {
            return err("baselines.generated_per_class must be >= 1".into());
        }
        if self.classifier.batch_size == 0 || self.classifier.log_every == 0 {
            return err("classifier.batch_size and classifier.log_every must be >= 1".into());
        }
        // the prior is filled in after the split, so check the rest with a placeholder
        let mut g = self.genpu.clone();
        g.pi_p = self.class_prior.unwrap_or(0.5);
        g.validate().map_err(|e| config_error(format!("genpu: {e}")))?;
        Ok(())
    }
}
