//! Semi-implicit flowing finite-volume time stepping.
//!
//! One step runs, in order: normal velocity `β` from the old state,
//! tangential velocity `α`, the `η`/`r` length update, the curvature solve,
//! then the two position solves.

mod assemble;
mod evolve;
pub mod redistribution;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assemble::{assemble_curvature_system, assemble_position_system, PhiStencil};
pub use evolve::{evolve, EvolveError, Snapshot, SnapshotMetrics, SnapshotSchedule};
pub use redistribution::{AsymptoticallyUniform, LengthStats, NoRedistribution, Redistribution, TangentialVelocity};

use crate::flow_models::FlowModel;
use crate::geometry::{chord_lengths, dual_lengths, next, prev, DiscreteCurve, GeometryError, Point};
use crate::linsolve::{BandedSolver, GaussSeidel, SolveError};

/// A lengths below this fraction of the mean aborts the run.
pub const COLLAPSE_FRACTION: f64 = 1e-14;

/// Which linear system failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Curvature,
    PositionX,
    PositionY,
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subsystem::Curvature => "curvature",
            Subsystem::PositionX => "position (x)",
            Subsystem::PositionY => "position (y)",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("{subsystem} solve failed: {source}")]
    Solve {
        subsystem: Subsystem,
        #[source]
        source: SolveError,
    },
    #[error("mesh collapse: segment {index} shrank to {length:e}")]
    MeshCollapse { index: usize, length: f64 },
    #[error("invalid step parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Initial guess handed to the linear solver.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStart {
    /// Values of the previous time level.
    #[default]
    Previous,
    /// Linear extrapolation `2·uⁿ − uⁿ⁻¹` from the last two levels; falls
    /// back to `Previous` on the first step.
    Extrapolate,
}

/// Solver starting values for one step, indexed like the curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Guess {
    pub k: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Guess {
    /// `2·current − previous`, or `None` if the vertex counts differ.
    pub fn extrapolate(previous: &DiscreteCurve, current: &DiscreteCurve) -> Option<Self> {
        if previous.len() != current.len() {
            return None;
        }
        let lin = |a: f64, b: f64| 2.0 * b - a;
        let (p, c) = (previous.points(), current.points());
        Some(Self {
            k: previous.k().iter().zip(current.k()).map(|(&a, &b)| lin(a, b)).collect(),
            x: p.iter().zip(c).map(|(a, b)| lin(a.x, b.x)).collect(),
            y: p.iter().zip(c).map(|(a, b)| lin(a.y, b.y)).collect(),
        })
    }
}

#[derive(Clone)]
pub struct StepParams {
    pub tau: f64,
    pub omega: f64,
    pub redistribution: Arc<dyn Redistribution>,
    pub solver: Arc<dyn BandedSolver>,
    pub phi_stencil: PhiStencil,
    pub warm_start: WarmStart,
}

impl fmt::Debug for StepParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StepParams")
            .field("tau", &self.tau)
            .field("omega", &self.omega)
            .field("redistribution", &self.redistribution.name())
            .field("solver", &self.solver.spec().to_string())
            .field("phi_stencil", &self.phi_stencil)
            .field("warm_start", &self.warm_start)
            .finish()
    }
}

impl StepParams {
    pub fn new(
        tau: f64,
        omega: f64,
        redistribution: Arc<dyn Redistribution>,
        solver: Arc<dyn BandedSolver>,
    ) -> Result<Self, StepError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(StepError::InvalidParams(format!("tau must be positive, got {tau}")));
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(StepError::InvalidParams(format!(
                "omega must be nonnegative, got {omega}"
            )));
        }
        Ok(Self {
            tau,
            omega,
            redistribution,
            solver,
            phi_stencil: PhiStencil::default(),
            warm_start: WarmStart::default(),
        })
    }

    /// Asymptotically uniform redistribution with default Gauss–Seidel.
    pub fn uniform(tau: f64, omega: f64) -> Result<Self, StepError> {
        Self::new(
            tau,
            omega,
            Arc::new(AsymptoticallyUniform),
            Arc::new(GaussSeidel::default()),
        )
    }

    /// Purely normal motion with default Gauss–Seidel.
    pub fn without_redistribution(tau: f64) -> Result<Self, StepError> {
        Self::new(tau, 0.0, Arc::new(NoRedistribution), Arc::new(GaussSeidel::default()))
    }

    pub fn with_solver(mut self, solver: Arc<dyn BandedSolver>) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_phi_stencil(mut self, stencil: PhiStencil) -> Self {
        self.phi_stencil = stencil;
        self
    }

    pub fn with_warm_start(mut self, warm_start: WarmStart) -> Self {
        self.warm_start = warm_start;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// `L = Σ r_i` before the step.
    pub length: f64,
    /// `M = L / n`.
    pub mean_length: f64,
    /// `B`, the length-weighted mean of `kβ`.
    pub mean_kbeta: f64,
    pub alpha_closure: f64,
    pub alpha_scale: f64,
    pub gs_iters_curvature: usize,
    /// Larger of the two coordinate solves.
    pub gs_iters_position: usize,
    pub max_abs_beta: f64,
}

/// Discrete normal velocity on every segment.
pub fn compute_beta(curve: &DiscreteCurve, model: &dyn FlowModel) -> Vec<f64> {
    let n = curve.len();
    let (r, k) = (curve.r(), curve.k());
    let q = dual_lengths(r);
    (0..n)
        .map(|i| {
            let (im1, ip1) = (prev(i, n), next(i, n));
            let second = (k[ip1] - k[i]) / q[i] - (k[i] - k[im1]) / q[im1];
            -second / r[i] + model.b(k[i])
        })
        .collect()
}

/// Tangential velocity from the pre-step state, plus the `L`, `M`, `B` statistics.
pub fn compute_alpha(curve: &DiscreteCurve, beta: &[f64], params: &StepParams) -> (Vec<f64>, StepDiagnostics) {
    let kbeta: Vec<f64> = curve.k().iter().zip(beta).map(|(k, b)| k * b).collect();
    let stats = LengthStats::new(curve.r(), &kbeta);
    let tv = params
        .redistribution
        .tangential_velocity(curve.r(), &kbeta, &stats, params.omega);
    let diag = StepDiagnostics {
        length: stats.length,
        mean_length: stats.mean_length,
        mean_kbeta: stats.mean_kbeta,
        alpha_closure: tv.closure,
        alpha_scale: tv.scale,
        gs_iters_curvature: 0,
        gs_iters_position: 0,
        max_abs_beta: beta.iter().fold(0.0, |m, b| m.max(b.abs())),
    };
    (tv.alpha, diag)
}

/// Advances `η` and returns `(η', r' = exp η')`.
pub fn update_eta_r(curve: &DiscreteCurve, diag: &StepDiagnostics, params: &StepParams) -> (Vec<f64>, Vec<f64>) {
    let stats = LengthStats {
        length: diag.length,
        mean_length: diag.mean_length,
        mean_kbeta: diag.mean_kbeta,
    };
    let eta = params
        .redistribution
        .advance_eta(curve.eta(), curve.r(), &stats, params.tau, params.omega);
    let r = eta.iter().map(|e| e.exp()).collect();
    (eta, r)
}

fn check_collapse(r: &[f64], mean: f64) -> Result<(), StepError> {
    let floor = COLLAPSE_FRACTION * mean;
    match r.iter().position(|&ri| !(ri >= floor && ri.is_finite())) {
        Some(index) => Err(StepError::MeshCollapse {
            index,
            length: r[index],
        }),
        None => Ok(()),
    }
}

/// Advances `curve` by one time step `τ`, starting the solves from the
/// current values.
pub fn step(
    curve: &DiscreteCurve,
    model: &dyn FlowModel,
    params: &StepParams,
) -> Result<(DiscreteCurve, StepDiagnostics), StepError> {
    step_with_guess(curve, model, params, None)
}

/// Like [`step`], with explicit solver starting values. The result does not
/// depend on the guess beyond solver tolerance.
pub fn step_with_guess(
    curve: &DiscreteCurve,
    model: &dyn FlowModel,
    params: &StepParams,
    guess: Option<&Guess>,
) -> Result<(DiscreteCurve, StepDiagnostics), StepError> {
    let n = curve.len();
    if let Some(g) = guess {
        if g.k.len() != n || g.x.len() != n || g.y.len() != n {
            return Err(StepError::InvalidParams(format!("guess does not match {n} vertices")));
        }
    }
    let beta = compute_beta(curve, model);
    let (alpha, mut diag) = compute_alpha(curve, &beta, params);
    let (eta_new, r_new) = update_eta_r(curve, &diag, params);
    check_collapse(&r_new, diag.mean_length)?;

    let k_sys = assemble_curvature_system(curve.r(), curve.k(), &beta, &r_new, &alpha, model, params.tau);
    let k_sol = params
        .solver
        .solve(&k_sys, guess.map_or(curve.k(), |g| &g.k))
        .map_err(|source| StepError::Solve {
            subsystem: Subsystem::Curvature,
            source,
        })?;
    diag.gs_iters_curvature = k_sol.iterations;

    let (sys_x, sys_y) = assemble_position_system(
        curve.points(),
        &r_new,
        &alpha,
        &k_sol.values,
        model,
        params.tau,
        params.phi_stencil,
    );
    let (start_x, start_y) = match guess {
        Some(g) => (g.x.clone(), g.y.clone()),
        None => (
            curve.points().iter().map(|p| p.x).collect(),
            curve.points().iter().map(|p| p.y).collect(),
        ),
    };
    let sol_x = params
        .solver
        .solve(&sys_x, &start_x)
        .map_err(|source| StepError::Solve {
            subsystem: Subsystem::PositionX,
            source,
        })?;
    let sol_y = params
        .solver
        .solve(&sys_y, &start_y)
        .map_err(|source| StepError::Solve {
            subsystem: Subsystem::PositionY,
            source,
        })?;
    diag.gs_iters_position = sol_x.iterations.max(sol_y.iterations);

    let points: Vec<Point> = (0..n).map(|i| Point::new(sol_x.values[i], sol_y.values[i])).collect();
    let eta = if params.redistribution.resync_lengths() {
        let chords = chord_lengths(&points);
        check_collapse(&chords, diag.mean_length)?;
        chords.iter().map(|c| c.ln()).collect()
    } else {
        eta_new
    };
    let next = DiscreteCurve::from_parts(points, eta, k_sol.values, curve.t() + params.tau)?;
    Ok((next, diag))
}
