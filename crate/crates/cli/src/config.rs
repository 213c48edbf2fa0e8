//! Experiment definitions read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};

use disc_source_core::inversion::{DescentConfig, ObjectiveKind, ObjectiveSpec};
use disc_source_core::mesh::{build_mesh, Mesh};
use disc_source_core::{wrap_angle, SourcePoint};
use serde::Deserialize;

use crate::noise::NoiseSpec;

/// Invalid or unreadable configuration. The CLI maps this to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl ConfigError {
    fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Fem,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct MeshSpec {
    pub m_r: usize,
    pub n_theta: usize,
}

impl MeshSpec {
    pub fn build(&self) -> Result<Mesh, ConfigError> {
        build_mesh(self.m_r, self.n_theta).map_err(|e| ConfigError::new(format!("mesh {}x{}: {e}", self.m_r, self.n_theta)))
    }
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.m_r, self.n_theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct PointSpec {
    pub r: f64,
    pub theta: f64,
}

impl PointSpec {
    pub fn source(&self) -> Result<SourcePoint, ConfigError> {
        SourcePoint::new(self.r, self.theta).map_err(|e| ConfigError::new(format!("point ({}, {}): {e}", self.r, self.theta)))
    }
}

/// One misfit to minimise. `angles` must be a subset of the experiment's
/// observation angles and defaults to its leading entries.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub kind: String,
    pub label: Option<String>,
    pub angles: Option<Vec<f64>>,
    pub times: Option<Vec<f64>>,
}

impl ObjectiveConfig {
    pub fn kind(&self) -> Result<ObjectiveKind, ConfigError> {
        match self.kind.as_str() {
            "J" => Ok(ObjectiveKind::J),
            "J1" => Ok(ObjectiveKind::J1),
            "J2" => Ok(ObjectiveKind::J2),
            "J3" => Ok(ObjectiveKind::J3),
            other => Err(ConfigError::new(format!("unknown objective kind {other:?} (expected J, J1, J2 or J3)"))),
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescentSpec {
    pub init: PointSpec,
    pub epsilon: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub alpha0: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub max_backtracks: usize,
}

impl Default for DescentSpec {
    fn default() -> Self {
        let d = DescentConfig::default();
        Self {
            init: PointSpec {
                r: d.init.r,
                theta: d.init.theta,
            },
            epsilon: d.epsilon,
            max_iters: d.max_iters,
            armijo_c: d.armijo_c,
            backtrack: d.backtrack,
            alpha0: d.alpha0,
            r_lo: d.r_lo,
            r_hi: d.r_hi,
            max_backtracks: d.max_backtracks,
        }
    }
}

impl DescentSpec {
    pub fn to_config(&self) -> Result<DescentConfig, ConfigError> {
        let cfg = DescentConfig {
            init: self.init.source()?,
            epsilon: self.epsilon,
            max_iters: self.max_iters,
            armijo_c: self.armijo_c,
            backtrack: self.backtrack,
            alpha0: self.alpha0,
            r_lo: self.r_lo,
            r_hi: self.r_hi,
            max_backtracks: self.max_backtracks,
        };
        cfg.validate().map_err(|e| ConfigError::new(format!("descent: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TableSpec {
    pub deltas: Vec<f64>,
    /// Seeds used are `noise.seed, noise.seed + 1, …`.
    pub seeds: u64,
}

impl Default for TableSpec {
    fn default() -> Self {
        Self {
            deltas: vec![0.03, 0.05, 0.10],
            seeds: 5,
        }
    }
}

/// Settings of the `verify` suite.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub mesh: MeshSpec,
    pub conservation_mesh: MeshSpec,
    pub source: PointSpec,
    pub steps: usize,
    /// Multiplies the stiffness matrix; anything but 1 is a fault injection.
    pub stiffness_scale: f64,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            mesh: MeshSpec { m_r: 70, n_theta: 70 },
            conservation_mesh: MeshSpec { m_r: 40, n_theta: 40 },
            source: PointSpec { r: 0.4, theta: 2.0 },
            steps: 500,
            stiffness_scale: 1.0,
            pairs: 20,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub engine: Engine,
    pub truth: PointSpec,
    pub obs_angles: Vec<f64>,
    #[serde(default = "default_generation_mesh")]
    pub generation_mesh: MeshSpec,
    #[serde(default = "default_inversion_mesh")]
    pub inversion_mesh: MeshSpec,
    #[serde(default)]
    pub objectives: Vec<ObjectiveConfig>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub descent: DescentSpec,
    #[serde(default)]
    pub table: TableSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Write the final FEM field of `forward` as (r, theta, u) triples.
    #[serde(default = "default_true")]
    pub field_snapshot: bool,
}

fn default_horizon() -> f64 {
    1.0
}
fn default_steps() -> usize {
    500
}
fn default_generation_mesh() -> MeshSpec {
    MeshSpec { m_r: 70, n_theta: 70 }
}
fn default_inversion_mesh() -> MeshSpec {
    MeshSpec { m_r: 60, n_theta: 60 }
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

/// An objective with its angles resolved to indices into the data set.
#[derive(Debug, Clone)]
pub struct ResolvedObjective {
    pub label: String,
    pub spec: ObjectiveSpec,
    pub data_indices: Vec<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::new(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(format!("reading {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError::new(format!("{}: {}", path.display(), e.0)))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(ConfigError::new("horizon must be positive"));
        }
        if self.steps == 0 {
            return Err(ConfigError::new("steps must be at least 1"));
        }
        self.truth.source()?;
        if self.obs_angles.is_empty() || self.obs_angles.iter().any(|a| !a.is_finite()) {
            return Err(ConfigError::new("obs_angles must list at least one finite angle"));
        }
        self.generation_mesh.build()?;
        self.inversion_mesh.build()?;
        self.noise.validate()?;
        self.descent.to_config()?;
        if self.table.seeds == 0 || self.table.deltas.iter().any(|d| d.is_nan() || *d < 0.0) {
            return Err(ConfigError::new("table needs at least one seed and nonnegative deltas"));
        }
        self.resolved_objectives()?;
        Ok(())
    }

    pub fn truth(&self) -> SourcePoint {
        SourcePoint::new(self.truth.r, self.truth.theta).expect("validated")
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `t_1..t_d`.
    pub fn times(&self) -> Vec<f64> {
        (1..=self.steps).map(|i| i as f64 * self.dt()).collect()
    }

    pub fn resolved_objectives(&self) -> Result<Vec<ResolvedObjective>, ConfigError> {
        self.objectives
            .iter()
            .map(|o| {
                let kind = o.kind()?;
                let angles = match &o.angles {
                    Some(a) => a.clone(),
                    None => self.obs_angles.iter().copied().take(kind.angle_count()).collect(),
                };
                let data_indices = angles
                    .iter()
                    .map(|&a| {
                        self.obs_angles
                            .iter()
                            .position(|&b| (wrap_angle(a) - wrap_angle(b)).abs() < 1e-12)
                            .ok_or_else(|| ConfigError::new(format!("objective {}: angle {a} is not an observation angle", o.label())))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let spec = ObjectiveSpec::new(kind, &angles, o.times.as_deref(), self.horizon, self.steps)
                    .map_err(|e| ConfigError::new(format!("objective {}: {e}", o.label())))?;
                Ok(ResolvedObjective {
                    label: o.label(),
                    spec,
                    data_indices,
                })
            })
            .collect()
    }
}

/// Settings used when a command runs without `--config`.
pub const DEFAULT_CONFIG: &str = r#"
name = "default"
truth = { r = 0.4, theta = 2.0 }
obs_angles = [1.0, 3.0]

[[objectives]]
kind = "J"
"#;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("built-in config is valid")
    }
}
