//! JSON run configuration and the paper-experiment presets.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::flow_models::{self, FlowModel};
use crate::geometry::{generate, init_from_points, DiscreteCurve, GeometryError, ShapeKind, ShapeSpec};
use crate::io::snapshot::read_curve_csv;
use crate::linsolve;
use crate::registry::{RegistryError, StrategySpec};
use crate::stepper::{redistribution, PhiStencil, SnapshotSchedule, StepParams, WarmStart};

pub const PRESET_NAMES: [&str; 5] = [
    "ellipse-sd",
    "ellipse-sd-noredist",
    "flower-sd",
    "astroid-willmore",
    "willmore-circle",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid '{field}': {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("invalid '{field}': {source}")]
    Strategy {
        field: &'static str,
        #[source]
        source: RegistryError,
    },
    #[error("invalid initial curve: {0}")]
    Curve(#[from] GeometryError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

fn default_n() -> Option<usize> {
    None
}
fn default_model() -> StrategySpec {
    StrategySpec::named("surface_diffusion")
}
fn default_tau() -> f64 {
    1e-3
}
fn default_omega() -> f64 {
    1.0
}
fn default_redistribution() -> StrategySpec {
    StrategySpec::named("asymptotically_uniform")
}
fn default_solver() -> StrategySpec {
    StrategySpec::named("gauss_seidel")
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// One run, as read from a flat JSON document.
///
/// Exactly one of `shape` and `input` must be given. `n` is the sample count
/// for `shape`; with `input` it is optional and, if present, must match the
/// number of points in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default = "default_n", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default = "default_model")]
    pub model: StrategySpec,
    #[serde(default = "default_tau")]
    pub tau: f64,
    pub t_end: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_redistribution")]
    pub redistribution: StrategySpec,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_solver")]
    pub solver: StrategySpec,
    #[serde(default)]
    pub phi_stencil: PhiStencil,
    #[serde(default)]
    pub warm_start: WarmStart,
}

/// Everything `evolve` needs, built from a validated config.
#[derive(Debug)]
pub struct PreparedRun {
    pub initial: DiscreteCurve,
    pub model: Box<dyn FlowModel>,
    pub params: StepParams,
    pub t_end: f64,
    pub schedule: SnapshotSchedule,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every field that can be checked without touching the disk.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match (&self.shape, &self.input) {
            (Some(_), Some(_)) => return Err(invalid("shape", "give either 'shape' or 'input', not both")),
            (None, None) => return Err(invalid("shape", "one of 'shape' or 'input' is required")),
            (Some(kind), None) => {
                let n = self.n.ok_or_else(|| invalid("n", "required with 'shape'"))?;
                if n < linsolve::MIN_SIZE {
                    return Err(invalid(
                        "n",
                        format!("need at least {} points, got {n}", linsolve::MIN_SIZE),
                    ));
                }
                ShapeSpec::new(*kind, n)
                    .validate()
                    .map_err(|e| invalid("shape", e.to_string()))?;
            }
            (None, Some(_)) => {
                if let Some(n) = self.n {
                    if n < linsolve::MIN_SIZE {
                        return Err(invalid(
                            "n",
                            format!("need at least {} points, got {n}", linsolve::MIN_SIZE),
                        ));
                    }
                }
            }
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid("tau", format!("must be positive, got {}", self.tau)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if (self.t_end / self.tau).round() < 1.0 {
            return Err(invalid("t_end", format!("shorter than one step of tau = {}", self.tau)));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(invalid("omega", format!("must be nonnegative, got {}", self.omega)));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.t_end)) {
            return Err(invalid("snapshot_times", format!("{t} is outside [0, t_end]")));
        }
        flow_models::create(&self.model).map_err(|source| ConfigError::Strategy { field: "model", source })?;
        redistribution::create(&self.redistribution).map_err(|source| ConfigError::Strategy {
            field: "redistribution",
            source,
        })?;
        linsolve::create(&self.solver).map_err(|source| ConfigError::Strategy {
            field: "solver",
            source,
        })?;
        Ok(())
    }

    /// Resolves strategies and builds the initial curve. A relative `input`
    /// path is taken relative to `base_dir`.
    pub fn prepare(&self, base_dir: &Path) -> Result<PreparedRun, ConfigError> {
        self.validate()?;
        let points = match (&self.shape, &self.input) {
            (Some(kind), _) => generate(&ShapeSpec::new(*kind, self.n.expect("validated")))?,
            (None, Some(path)) => {
                let path = base_dir.join(path);
                let points = read_curve_csv(&path).map_err(|source| ConfigError::Io { path, source })?;
                if let Some(n) = self.n {
                    if n != points.len() {
                        return Err(invalid(
                            "n",
                            format!("input file has {} points, config says {n}", points.len()),
                        ));
                    }
                }
                points
            }
            (None, None) => unreachable!("validated"),
        };
        let initial = init_from_points(&points)?;

        let strategy = |field, e| ConfigError::Strategy { field, source: e };
        let model = flow_models::create(&self.model).map_err(|e| strategy("model", e))?;
        let redistribution = redistribution::create(&self.redistribution).map_err(|e| strategy("redistribution", e))?;
        let solver = linsolve::create(&self.solver).map_err(|e| strategy("solver", e))?;
        let params = StepParams::new(self.tau, self.omega, Arc::from(redistribution), Arc::from(solver))
            .map_err(|e| invalid("tau", e.to_string()))?
            .with_phi_stencil(self.phi_stencil)
            .with_warm_start(self.warm_start);

        Ok(PreparedRun {
            initial,
            model,
            params,
            t_end: self.t_end,
            schedule: SnapshotSchedule {
                every: self.snapshot_every,
                times: self.snapshot_times.clone(),
            },
        })
    }
}

/// Ready-made configs for the paper's experiments, plus the base level of
/// the Willmore circle refinement study.
pub fn preset(name: &str) -> Option<RunConfig> {
    let base = RunConfig {
        shape: Some(ShapeKind::Ellipse { a: 2.0, b: 1.0 }),
        input: None,
        n: Some(100),
        model: default_model(),
        tau: 1e-3,
        t_end: 2.0,
        omega: 1.0,
        redistribution: default_redistribution(),
        snapshot_every: 500,
        snapshot_times: Vec::new(),
        out_dir: PathBuf::from("out").join(name),
        solver: default_solver(),
        phi_stencil: PhiStencil::default(),
        warm_start: WarmStart::default(),
    };
    let config = match name {
        "ellipse-sd" => base,
        "ellipse-sd-noredist" => RunConfig {
            redistribution: StrategySpec::named("none"),
            solver: StrategySpec::named("dense"),
            ..base
        },
        "flower-sd" => RunConfig {
            shape: Some(ShapeKind::Flower {
                radius: 1.0,
                amplitude: 0.3,
                petals: 5,
            }),
            tau: 1e-6,
            t_end: 0.17,
            snapshot_every: 0,
            snapshot_times: vec![0.001, 0.01, 0.05],
            ..base
        },
        "astroid-willmore" => RunConfig {
            shape: Some(ShapeKind::Astroid { scale: 1.0 }),
            model: StrategySpec::named("willmore"),
            tau: 1e-8,
            t_end: 0.005,
            snapshot_every: 0,
            snapshot_times: vec![0.0005],
            ..base
        },
        "willmore-circle" => RunConfig {
            shape: Some(ShapeKind::Circle { radius: 1.0 }),
            n: Some(200),
            model: StrategySpec::named("willmore"),
            tau: 1e-5,
            t_end: 0.005,
            snapshot_every: 0,
            solver: StrategySpec::with_params("gauss_seidel", json!({"rel_tol": 1e-12, "max_iters": 100_000})),
            warm_start: WarmStart::Extrapolate,
            ..base
        },
        _ => return None,
    };
    Some(config)
}
