//! Experiment configuration files (JSON) and their validation.

use std::fmt;
use std::path::{Path, PathBuf};

use fedlab::harness::{Budget, Target};
use fedlab::methods::{LocalSolverSpec, MethodConfig, MethodKind, ParameterRule};
use fedlab::problems::{DeltaMethod, QuadraticParams};
use serde::Deserialize;

/// A configuration problem, reported with the JSON path and, for syntax and
/// type errors, the source position.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " at line {l}, column {c}")?;
        }
        if !self.path.is_empty() && self.path != "." {
            write!(f, " in `{}`", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn default_repeats() -> usize {
    1
}

fn default_record_every() -> usize {
    fedlab::harness::DEFAULT_RECORD_EVERY
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("fedlab-out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub problem: ProblemConfig,
    pub methods: Vec<MethodEntry>,
    pub budget: Budget,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Number of seeds per method, starting at `seed`.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Dissimilarity estimate fed to `auto` methods.
    #[serde(default)]
    pub delta: Option<DeltaMethod>,
    /// Point pairs for the sampled dissimilarity estimator.
    #[serde(default)]
    pub delta_pairs: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    /// Randomly generated quadratics (with optional sigmoid term).
    Quadratic {
        generator: QuadraticParams,
        #[serde(default)]
        seed: u64,
    },
    /// Quadratics given entry by entry: client `i` averages
    /// `½(x − b_ij)ᵀA_ij(x − b_ij)` over its matrices.
    Matrices { clients: Vec<ClientMatrices> },
    /// Logistic regression on a LIBSVM file split across clients.
    Logistic {
        dataset: PathBuf,
        clients: usize,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        regularization: Option<f64>,
        #[serde(default)]
        batch_size: Option<usize>,
    },
}

fn default_alpha() -> f64 {
    0.5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientMatrices {
    /// Row-major square matrices.
    pub matrices: Vec<Vec<Vec<f64>>>,
    /// One center per matrix; zeros when omitted.
    #[serde(default)]
    pub centers: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodEntry {
    /// Parameters chosen by `suggest_parameters`.
    Auto(AutoMethod),
    /// Fully specified parameters.
    Explicit(ExplicitMethod),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutoMethod {
    pub method: MethodKind,
    #[serde(default)]
    pub rule: ParameterRule,
    #[serde(default)]
    pub label: Option<String>,
    /// Override the suggested output averaging.
    #[serde(default)]
    pub q_weighting: Option<bool>,
    /// Override the suggested local solver.
    #[serde(default)]
    pub local: Option<LocalSolverSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitMethod {
    #[serde(default)]
    pub label: Option<String>,
    pub config: MethodConfig,
}

impl MethodEntry {
    pub fn kind(&self) -> MethodKind {
        match self {
            MethodEntry::Auto(a) => a.method,
            MethodEntry::Explicit(e) => e.config.method,
        }
    }

    fn label(&self) -> Option<&str> {
        match self {
            MethodEntry::Auto(a) => a.label.as_deref(),
            MethodEntry::Explicit(e) => e.label.as_deref(),
        }
    }
}

impl ExperimentConfig {
    /// Parse and validate `text`. Relative dataset paths are resolved
    /// against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError {
                path,
                line: Some(inner.line()),
                column: Some(inner.column()),
                message: strip_position(&inner.to_string()),
            }
        })?;
        if let ProblemConfig::Logistic { dataset, .. } = &mut cfg.problem {
            if dataset.is_relative() {
                *dataset = base_dir.join(&*dataset);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::at("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.methods.is_empty() {
            return Err(ConfigError::at(
                "methods",
                "at least one method is required",
            ));
        }
        if self.repeats == 0 {
            return Err(ConfigError::at("repeats", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(ConfigError::at("record_every", "must be at least 1"));
        }
        let b = &self.budget;
        if b.max_rounds.is_none() && b.max_grad_evals.is_none() && b.max_iterations.is_none() {
            return Err(ConfigError::at(
                "budget",
                "needs at least one of max_rounds, max_grad_evals, max_iterations",
            ));
        }
        if let Some(Target::Absolute(e) | Target::Relative(e)) = b.target {
            if !(e > 0.0) {
                return Err(ConfigError::at(
                    "budget.target",
                    format!("must be positive, got {e}"),
                ));
            }
        }
        if self.delta_pairs == Some(0) {
            return Err(ConfigError::at("delta_pairs", "must be at least 1"));
        }
        match &self.problem {
            ProblemConfig::Quadratic { .. } => {}
            ProblemConfig::Matrices { clients } => {
                if clients.is_empty() {
                    return Err(ConfigError::at(
                        "problem.clients",
                        "at least one client is required",
                    ));
                }
                for (i, c) in clients.iter().enumerate() {
                    if c.matrices.is_empty() {
                        return Err(ConfigError::at(
                            format!("problem.clients[{i}].matrices"),
                            "at least one matrix is required",
                        ));
                    }
                    if let Some(centers) = &c.centers {
                        if centers.len() != c.matrices.len() {
                            return Err(ConfigError::at(
                                format!("problem.clients[{i}].centers"),
                                format!(
                                    "expected {} centers, found {}",
                                    c.matrices.len(),
                                    centers.len()
                                ),
                            ));
                        }
                    }
                }
            }
            ProblemConfig::Logistic {
                dataset,
                clients,
                alpha,
                ..
            } => {
                if !dataset.is_file() {
                    return Err(ConfigError::at(
                        "problem.dataset",
                        format!("dataset file {} does not exist", dataset.display()),
                    ));
                }
                if *clients == 0 {
                    return Err(ConfigError::at("problem.clients", "must be at least 1"));
                }
                if !(*alpha > 0.0) {
                    return Err(ConfigError::at(
                        "problem.alpha",
                        format!("must be positive, got {alpha}"),
                    ));
                }
                if self.delta.is_some_and(|d| d != DeltaMethod::Sampled) {
                    return Err(ConfigError::at(
                        "delta",
                        "closed-form dissimilarity needs a quadratic problem; use \"sampled\"",
                    ));
                }
            }
        }
        for (i, m) in self.methods.iter().enumerate() {
            if let MethodEntry::Explicit(e) = m {
                e.config.validate().map_err(|err| {
                    ConfigError::at(format!("methods[{i}].explicit.config"), err.to_string())
                })?;
            }
        }
        Ok(())
    }

    /// File-safe labels, one per method entry, made unique by suffixing.
    pub fn method_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = Vec::with_capacity(self.methods.len());
        for m in &self.methods {
            let base: String = m
                .label()
                .unwrap_or(m.kind().name())
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            let mut label = base.clone();
            let mut k = 2;
            while labels.contains(&label) {
                label = format!("{base}_{k}");
                k += 1;
            }
            labels.push(label);
        }
        labels
    }
}

/// serde_json appends " at line L column C"; the position is reported
/// separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(i) => message[..i].to_string(),
        None => message.to_string(),
    }
}
