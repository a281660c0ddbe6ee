//! Experiment configuration: a TOML file, `--set path=value` overrides and
//! flag overrides, merged into one table and then deserialized with unknown
//! keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use varshot_core::model::{Activation, Loss, Mlp};
use varshot_core::online::{Method, OnlineConfig};
use varshot_core::tasks::{TaskDistribution, TaskFamily};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Online,
    OfflineMeta,
    Verify,
    Summarize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TasksConfig {
    pub distribution: TaskDistribution,
    pub n_tasks: usize,
    pub stream_seed: u64,
}

impl Default for TasksConfig {
    fn default() -> Self {
        Self {
            distribution: TaskDistribution::sinusoid(),
            n_tasks: 30,
            stream_seed: 0,
        }
    }
}

/// Hidden widths; input and output widths follow the task family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    /// Defaults to tanh for regression and relu for classification.
    pub activation: Option<Activation>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: vec![40, 40],
            activation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparatorConfig {
    pub enabled: bool,
    /// Offline meta-steps used to fit the hindsight model.
    pub meta_steps: usize,
}

impl Default for ComparatorConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            meta_steps: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfflineConfig {
    pub meta_steps: usize,
    /// Training tasks, each with `points_per_task` points.
    pub n_tasks: usize,
    pub points_per_task: usize,
    /// Held-out tasks for the shot-count evaluation.
    pub eval_tasks: usize,
    pub eval_shots: Vec<usize>,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        Self {
            meta_steps: 1000,
            n_tasks: 200,
            points_per_task: 20,
            eval_tasks: 50,
            eval_shots: vec![0, 1, 2, 5, 10, 20],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub s: Vec<usize>,
    pub n_mc: usize,
    pub grid_points: usize,
    pub beta_star: f64,
    /// Linear family: weight mean, weight spread and observation noise.
    pub mean: Vec<f64>,
    pub tau: f64,
    pub noise: f64,
    pub theta: Vec<f64>,
    pub variance_s: Vec<usize>,
    pub variance_reps: usize,
    pub variance_hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            s: vec![1, 2, 5, 10],
            n_mc: 20_000,
            grid_points: 1001,
            beta_star: 0.5,
            mean: vec![0.5, -0.5],
            tau: 1.0,
            noise: 1.0,
            theta: vec![0.0, 0.0],
            variance_s: vec![2, 4, 8, 16],
            variance_reps: 100_000,
            variance_hidden: vec![20, 20],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Run cells one at a time. Outputs are identical either way; this
    /// removes scheduling from the picture entirely.
    pub deterministic: bool,
    pub tasks: TasksConfig,
    pub model: ModelConfig,
    pub online: OnlineConfig,
    pub comparator: ComparatorConfig,
    pub offline: OfflineConfig,
    pub verify: VerifyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Online,
            methods: vec![Method::FtmlVs],
            seeds: vec![0],
            out: PathBuf::from("runs"),
            deterministic: false,
            tasks: TasksConfig::default(),
            model: ModelConfig::default(),
            online: OnlineConfig::default(),
            comparator: ComparatorConfig::default(),
            offline: OfflineConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

/// The part of a configuration that defines an experiment's results.
#[derive(Serialize)]
struct Hashed<'a> {
    tasks: &'a TasksConfig,
    model: &'a ModelConfig,
    online: &'a OnlineConfig,
    comparator: &'a ComparatorConfig,
    offline: &'a OfflineConfig,
}

fn invalid(field: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {why}"))
}

impl ExperimentConfig {
    pub fn family(&self) -> TaskFamily {
        self.tasks.distribution.family()
    }

    pub fn loss(&self) -> Loss {
        match self.family() {
            TaskFamily::Sinusoid => Loss::Mse,
            TaskFamily::TransformedClassification => Loss::SoftmaxXent,
        }
    }

    fn activation(&self) -> Activation {
        self.model.activation.unwrap_or(match self.family() {
            TaskFamily::Sinusoid => Activation::Tanh,
            TaskFamily::TransformedClassification => Activation::Relu,
        })
    }

    pub fn mlp_with_hidden(&self, hidden: &[usize]) -> Result<Mlp, CliError> {
        let family = self.family();
        let mut sizes = vec![family.input_dim()];
        sizes.extend_from_slice(hidden);
        sizes.push(family.output_dim());
        Mlp::new(sizes, self.activation()).map_err(|e| invalid("model.hidden", e))
    }

    pub fn mlp(&self) -> Result<Mlp, CliError> {
        self.mlp_with_hidden(&self.model.hidden)
    }

    /// Hex SHA-256 of the result-defining sections. Seeds, methods, output
    /// location, scheduling and verification settings are excluded, so
    /// ledgers of one experiment share a hash.
    pub fn hash(&self) -> String {
        let view = Hashed {
            tasks: &self.tasks,
            model: &self.model,
            online: &self.online,
            comparator: &self.comparator,
            offline: &self.offline,
        };
        let text = toml::to_string(&view).expect("configuration serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.methods.is_empty() {
            return Err(invalid("methods", "at least one method is required"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        self.tasks
            .distribution
            .validate()
            .map_err(|e| invalid("tasks.distribution", e))?;
        if self.tasks.n_tasks == 0 {
            return Err(invalid("tasks.n_tasks", "must be at least 1"));
        }
        self.mlp()?;
        self.online.validate().map_err(|e| match e {
            varshot_core::Error::Config(msg) => CliError::Config(format!("online.{msg}")),
            other => invalid("online", other),
        })?;
        if self.comparator.enabled && self.comparator.meta_steps == 0 {
            return Err(invalid("comparator.meta_steps", "must be at least 1"));
        }
        let o = &self.offline;
        if o.n_tasks == 0 || o.points_per_task == 0 || o.eval_tasks == 0 {
            return Err(invalid(
                "offline",
                "n_tasks, points_per_task and eval_tasks must be at least 1",
            ));
        }
        let too_many = o
            .eval_shots
            .iter()
            .find(|&&k| k > self.online.meta.max_shots);
        if let (Mode::OfflineMeta, Some(&k)) = (self.mode, too_many) {
            return Err(invalid(
                "offline.eval_shots",
                format!(
                    "{k} exceeds online.meta.max_shots = {}",
                    self.online.meta.max_shots
                ),
            ));
        }
        let v = &self.verify;
        if v.s.is_empty() || v.s.contains(&0) {
            return Err(invalid("verify.s", "needs positive shot counts"));
        }
        if v.mean.len() != v.theta.len() {
            return Err(invalid(
                "verify.theta",
                format!(
                    "has {} entries, verify.mean has {}",
                    v.theta.len(),
                    v.mean.len()
                ),
            ));
        }
        if !(v.beta_star.is_finite() && v.beta_star > 0.0) {
            return Err(invalid("verify.beta_star", "must be positive"));
        }
        if v.variance_s.contains(&0) || v.variance_reps < 2 {
            return Err(invalid(
                "verify.variance_s",
                "needs positive shot counts and variance_reps >= 2",
            ));
        }
        Ok(())
    }
}

/// A scalar or array written after `=` in an override. Anything that does
/// not parse as a TOML value is taken as a bare string.
pub fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets the dotted `path` in `table`, creating intermediate tables.
pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "malformed override path `{path}`"
        )));
    }
    let (last, parents) = parts.split_last().expect("split yields one part");
    let mut node = table;
    for (i, part) in parents.iter().enumerate() {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| {
            CliError::Config(format!("{}: is not a table", parts[..=i].join(".")))
        })?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

/// Splits `path=value`.
pub fn parse_override(raw: &str) -> Result<(String, toml::Value), CliError> {
    let (path, value) = raw.split_once('=').ok_or_else(|| {
        CliError::Config(format!("override `{raw}` is not of the form path=value"))
    })?;
    Ok((path.trim().to_string(), parse_value(value.trim())))
}

/// Reads `path` (if any), applies `overrides` in order, deserializes and
/// validates.
pub fn load(
    path: Option<&Path>,
    overrides: &[(String, toml::Value)],
) -> Result<ExperimentConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for (key, value) in overrides {
        set_path(&mut table, key, value.clone())?;
    }
    let config: ExperimentConfig = serde_path_to_error::deserialize(toml::Value::Table(table))
        .map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner().message()))
        })?;
    config.validate()?;
    Ok(config)
}
