//! Lower-order terms `b(k)` of the normal velocity law `β = −∂²ₛk + b(k)`.
//!
//! Each model also supplies `φ(k) = k² − b(k)/k`, which enters the position
//! equation. The quotient `b(k)/k` is evaluated in closed form so that `φ`
//! is total, including at `k = 0`.

use std::fmt;
use std::sync::OnceLock;

use serde_json::Value;

use crate::registry::{no_params, Registry, RegistryError, StrategySpec};

/// A lower-order term `b` with `b(0) = 0`, odd and C² in `k`.
pub trait FlowModel: fmt::Debug + Send + Sync {
    /// Registry name of the model.
    fn name(&self) -> &'static str;

    fn b(&self, k: f64) -> f64;

    /// `k² − b(k)/k`, evaluated without dividing by `k`.
    fn phi(&self, k: f64) -> f64;

    /// The config selection that recreates this model.
    fn spec(&self) -> StrategySpec;
}

/// `b ≡ 0`: surface diffusion, `β = −∂²ₛk`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SurfaceDiffusion;

impl FlowModel for SurfaceDiffusion {
    fn name(&self) -> &'static str {
        "surface_diffusion"
    }

    fn b(&self, _k: f64) -> f64 {
        0.0
    }

    fn phi(&self, k: f64) -> f64 {
        k * k
    }

    fn spec(&self) -> StrategySpec {
        StrategySpec::named(self.name())
    }
}

/// `b(k) = −k³/2`: Willmore flow of elastic curves.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Willmore;

impl FlowModel for Willmore {
    fn name(&self) -> &'static str {
        "willmore"
    }

    fn b(&self, k: f64) -> f64 {
        -0.5 * k * k * k
    }

    fn phi(&self, k: f64) -> f64 {
        1.5 * k * k
    }

    fn spec(&self) -> StrategySpec {
        StrategySpec::named(self.name())
    }
}

/// `b(k) = c₁k + c₃k³ + c₅k⁵`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OddPolynomial {
    pub c1: f64,
    pub c3: f64,
    pub c5: f64,
}

impl OddPolynomial {
    pub fn new(c1: f64, c3: f64, c5: f64) -> Self {
        Self { c1, c3, c5 }
    }

    fn from_params(params: &Value) -> Result<Self, String> {
        let coeffs: Vec<f64> =
            serde_json::from_value(params.clone()).map_err(|e| format!("expected [c1, c3, c5]: {e}"))?;
        match coeffs.as_slice() {
            [c1, c3, c5] if coeffs.iter().all(|c| c.is_finite()) => Ok(Self::new(*c1, *c3, *c5)),
            [_, _, _] => Err("coefficients must be finite".into()),
            _ => Err(format!("expected 3 coefficients, got {}", coeffs.len())),
        }
    }
}

impl FlowModel for OddPolynomial {
    fn name(&self) -> &'static str {
        "odd_polynomial"
    }

    fn b(&self, k: f64) -> f64 {
        let k2 = k * k;
        k * (self.c1 + k2 * (self.c3 + k2 * self.c5))
    }

    fn phi(&self, k: f64) -> f64 {
        let k2 = k * k;
        k2 - self.c1 - k2 * (self.c3 + k2 * self.c5)
    }

    fn spec(&self) -> StrategySpec {
        StrategySpec::with_params(self.name(), serde_json::json!([self.c1, self.c3, self.c5]))
    }
}

/// Registry holding the built-in models.
pub fn registry() -> &'static Registry<dyn FlowModel> {
    static REGISTRY: OnceLock<Registry<dyn FlowModel>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut reg: Registry<dyn FlowModel> = Registry::new("flow model");
        reg.register("surface_diffusion", |p: &Value| {
            no_params(p)?;
            Ok(Box::new(SurfaceDiffusion) as Box<dyn FlowModel>)
        })
        .register("willmore", |p: &Value| {
            no_params(p)?;
            Ok(Box::new(Willmore) as Box<dyn FlowModel>)
        })
        .register("odd_polynomial", |p: &Value| {
            Ok(Box::new(OddPolynomial::from_params(p)?) as Box<dyn FlowModel>)
        });
        reg
    })
}

pub fn create(spec: &StrategySpec) -> Result<Box<dyn FlowModel>, RegistryError> {
    registry().create(spec)
}
