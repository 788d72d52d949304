//! Tangential redistribution strategies.
//!
//! A strategy decides the tangential velocity `α` of every vertex and how the
//! local lengths `η = ln r` advance over one step.

use std::fmt;
use std::sync::OnceLock;

use serde_json::Value;

use crate::registry::{no_params, Registry, RegistryError, StrategySpec};

/// Length statistics of the pre-step curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthStats {
    /// `L = Σ r_i`.
    pub length: f64,
    /// `M = L / n`.
    pub mean_length: f64,
    /// `B = Σ r_i k_i β_i / L`.
    pub mean_kbeta: f64,
}

impl LengthStats {
    pub fn new(r: &[f64], kbeta: &[f64]) -> Self {
        let length: f64 = r.iter().sum();
        let weighted: f64 = r.iter().zip(kbeta).map(|(r, kb)| r * kb).sum();
        Self {
            length,
            mean_length: length / r.len() as f64,
            mean_kbeta: weighted / length,
        }
    }
}

/// Vertex tangential velocities together with the telescoping residual.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentialVelocity {
    /// `alpha[i]` moves vertex `x[i]` along the curve. The last vertex is the
    /// anchor and always has zero tangential velocity.
    pub alpha: Vec<f64>,
    /// Value the recurrence reaches at the anchor after a full loop; zero in
    /// exact arithmetic.
    pub closure: f64,
    /// Magnitude scale of the recurrence increments, for judging `closure`.
    pub scale: f64,
}

pub trait Redistribution: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn tangential_velocity(&self, r: &[f64], kbeta: &[f64], stats: &LengthStats, omega: f64) -> TangentialVelocity;

    /// New `η` before the curvature and position solves.
    fn advance_eta(&self, eta: &[f64], r: &[f64], stats: &LengthStats, tau: f64, omega: f64) -> Vec<f64>;

    /// Whether `r` is reset to the actual chord lengths after each step.
    fn resync_lengths(&self) -> bool {
        false
    }

    fn spec(&self) -> StrategySpec {
        StrategySpec::named(self.name())
    }
}

/// `∂ₛα = kβ − ⟨kβ⟩ + ω(L/g − 1)`: drives every `r_i` toward `L/n`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AsymptoticallyUniform;

impl Redistribution for AsymptoticallyUniform {
    fn name(&self) -> &'static str {
        "asymptotically_uniform"
    }

    fn tangential_velocity(&self, r: &[f64], kbeta: &[f64], stats: &LengthStats, omega: f64) -> TangentialVelocity {
        let n = r.len();
        let mut alpha = Vec::with_capacity(n);
        let mut running = 0.0;
        let mut scale = omega * stats.length;
        for (&ri, &kb) in r.iter().zip(kbeta) {
            running += ri * kb - ri * stats.mean_kbeta + omega * (stats.mean_length - ri);
            scale += (ri * kb).abs();
            alpha.push(running);
        }
        let closure = running;
        alpha[n - 1] = 0.0;
        TangentialVelocity {
            alpha,
            closure,
            scale: scale.max(1.0),
        }
    }

    fn advance_eta(&self, eta: &[f64], r: &[f64], stats: &LengthStats, tau: f64, omega: f64) -> Vec<f64> {
        eta.iter()
            .zip(r)
            .map(|(&e, &ri)| e + tau * (-stats.mean_kbeta + omega * (stats.mean_length / ri - 1.0)))
            .collect()
    }
}

/// Purely normal motion: `α ≡ 0`, lengths taken from the chords each step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoRedistribution;

impl Redistribution for NoRedistribution {
    fn name(&self) -> &'static str {
        "none"
    }

    fn tangential_velocity(&self, r: &[f64], _: &[f64], _: &LengthStats, _: f64) -> TangentialVelocity {
        TangentialVelocity {
            alpha: vec![0.0; r.len()],
            closure: 0.0,
            scale: 1.0,
        }
    }

    fn advance_eta(&self, eta: &[f64], _: &[f64], _: &LengthStats, _: f64, _: f64) -> Vec<f64> {
        eta.to_vec()
    }

    fn resync_lengths(&self) -> bool {
        true
    }
}

pub fn registry() -> &'static Registry<dyn Redistribution> {
    static REGISTRY: OnceLock<Registry<dyn Redistribution>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut reg: Registry<dyn Redistribution> = Registry::new("redistribution");
        reg.register("asymptotically_uniform", |p: &Value| {
            no_params(p)?;
            Ok(Box::new(AsymptoticallyUniform) as Box<dyn Redistribution>)
        })
        .register("none", |p: &Value| {
            no_params(p)?;
            Ok(Box::new(NoRedistribution) as Box<dyn Redistribution>)
        });
        reg
    })
}

pub fn create(spec: &StrategySpec) -> Result<Box<dyn Redistribution>, RegistryError> {
    registry().create(spec)
}
