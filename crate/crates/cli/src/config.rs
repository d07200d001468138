//! Run configuration: a TOML file with `[model]`, `[data]`, `[synthetic]`
//! and `[run]` sections, plus `section.key=value` overrides.

use std::path::{Path, PathBuf};

use psdmf::data::{NormalizeMode, SyntheticSpec};
use psdmf::psdmf::{PsdmfConfig, VRule};
use psdmf::seminmf::SemiNmfInit;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("`{key}`: {message}")]
    Key { key: String, message: String },
}

fn key_error(key: impl Into<String>, message: impl ToString) -> ConfigError {
    ConfigError::Key {
        key: key.into(),
        message: message.to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub total_dim: usize,
    pub layers: Vec<usize>,
    pub knn_k: usize,
    pub label_fraction: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub pretrain_max_iter: usize,
    pub pretrain_tol: f64,
    pub init: String,
    pub v_rule: String,
    pub debug_checks: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let c = PsdmfConfig::default();
        Self {
            mu: c.mu,
            beta: c.beta,
            gamma: c.gamma,
            lambda: c.lambda_ratio,
            total_dim: c.total_dim,
            layers: c.layer_sizes,
            knn_k: c.knn_k,
            label_fraction: c.label_fraction,
            max_iter: c.max_iter,
            tol: c.tol,
            pretrain_max_iter: c.pretrain_max_iter,
            pretrain_tol: c.pretrain_tol,
            init: c.init.to_string(),
            v_rule: c.v_rule.to_string(),
            debug_checks: c.debug_checks,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Dataset manifest; relative paths resolve against the config file.
    pub manifest: Option<PathBuf>,
    pub normalize: String,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            manifest: None,
            normalize: NormalizeMode::default().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub n_views: usize,
    pub n_samples: usize,
    pub n_classes: usize,
    pub specific_dim: usize,
    pub shared_dim: usize,
    pub view_dims: Vec<usize>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let s = SyntheticSpec::default();
        Self {
            n_views: s.n_views,
            n_samples: s.n_samples,
            n_classes: s.n_classes,
            specific_dim: s.specific_dim,
            shared_dim: s.shared_dim,
            view_dims: s.view_dims,
            noise_sigma: s.noise_sigma,
            seed: s.seed,
        }
    }
}

impl SyntheticSection {
    pub fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            n_views: self.n_views,
            n_samples: self.n_samples,
            n_classes: self.n_classes,
            specific_dim: self.specific_dim,
            shared_dim: self.shared_dim,
            view_dims: self.view_dims.clone(),
            noise_sigma: self.noise_sigma,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub trials: usize,
    /// Trial `i` uses seed `seed + i`.
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            trials: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub data: DataSection,
    pub synthetic: Option<SyntheticSection>,
    pub run: RunSection,
}

/// Where a run gets its samples from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Manifest(PathBuf),
    Synthetic(SyntheticSpec),
}

impl RunConfig {
    /// Solver settings for one trial.
    pub fn solver(&self, seed: u64) -> Result<PsdmfConfig, ConfigError> {
        let m = &self.model;
        let cfg = PsdmfConfig {
            mu: m.mu,
            beta: m.beta,
            gamma: m.gamma,
            lambda_ratio: m.lambda,
            total_dim: m.total_dim,
            layer_sizes: m.layers.clone(),
            knn_k: m.knn_k,
            label_fraction: m.label_fraction,
            max_iter: m.max_iter,
            tol: m.tol,
            seed,
            pretrain_max_iter: m.pretrain_max_iter,
            pretrain_tol: m.pretrain_tol,
            init: m
                .init
                .parse::<SemiNmfInit>()
                .map_err(|e| key_error("model.init", e))?,
            v_rule: m
                .v_rule
                .parse::<VRule>()
                .map_err(|e| key_error("model.v_rule", e))?,
            debug_checks: m.debug_checks,
        };
        cfg.validate().map_err(|e| key_error("model", e))?;
        Ok(cfg)
    }

    pub fn normalize_mode(&self) -> Result<NormalizeMode, ConfigError> {
        self.data
            .normalize
            .parse()
            .map_err(|e| key_error("data.normalize", e))
    }

    pub fn source(&self) -> Result<DataSource, ConfigError> {
        match (&self.data.manifest, &self.synthetic) {
            (Some(path), None) => Ok(DataSource::Manifest(path.clone())),
            (None, Some(s)) => Ok(DataSource::Synthetic(s.spec())),
            (Some(_), Some(_)) => Err(key_error(
                "data.manifest",
                "set either data.manifest or a [synthetic] section, not both",
            )),
            (None, None) => Err(key_error(
                "data.manifest",
                "no dataset: set data.manifest or add a [synthetic] section",
            )),
        }
    }

    /// Checks every field that is parsed lazily.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.solver(self.run.seed)?;
        self.normalize_mode()?;
        self.source()?;
        if self.run.trials == 0 {
            return Err(key_error("run.trials", "must be at least 1"));
        }
        Ok(())
    }

    /// Pretty TOML, parseable back into the same configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Reads a config file and applies `overrides` (`section.key=value`).
/// A relative `data.manifest` is resolved against the file's directory and
/// made absolute, so the echoed config can be run from anywhere.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_config(&text, overrides).map_err(|e| match e {
        ConfigError::Syntax { message, .. } => ConfigError::Syntax {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })?;
    if let Some(m) = cfg.data.manifest.as_mut() {
        if m.is_relative() {
            let joined = path.parent().unwrap_or(Path::new(".")).join(&*m);
            *m = std::path::absolute(&joined).unwrap_or(joined);
        }
    }
    Ok(cfg)
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut table: toml::Table =
        text.parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax {
                path: PathBuf::new(),
                message: e.message().to_string(),
            })?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    from_table(table)
}

pub fn from_table(table: toml::Table) -> Result<RunConfig, ConfigError> {
    serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
        let key = e.path().to_string();
        key_error(key, e.into_inner())
    })
}

/// Sets a dotted key. The value is read as a TOML literal when it parses as
/// one and as a bare string otherwise, so `data.normalize=none` works.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| key_error(assignment, "override must look like section.key=value"))?;
    let key = key.trim();
    let value = parse_literal(raw.trim());
    set_path(table, key, value)
}

pub fn parse_literal(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

pub fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(key_error(key, "empty key segment"));
    }
    let (last, sections) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for s in sections {
        let entry = cur
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| key_error(key, format!("`{s}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
