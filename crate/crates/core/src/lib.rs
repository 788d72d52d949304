//! Lagrangian evolution of closed plane curves under `β = −∂²ₛk + b(k)`.
//!
//! Surface diffusion (`b ≡ 0`) and Willmore flow (`b = −k³/2`) are the two
//! built-in laws. Grid points follow a semi-implicit flowing finite-volume
//! scheme with optional asymptotically uniform tangential redistribution.
//!
//! Interchangeable pieces (flow laws, banded solvers, redistribution modes)
//! sit behind traits and are picked by name through [`registry::Registry`].

pub mod cli;
pub mod flow_models;
pub mod geometry;
pub mod io;
pub mod linsolve;
pub mod registry;
pub mod stepper;

pub use flow_models::{FlowModel, OddPolynomial, SurfaceDiffusion, Willmore};
pub use geometry::{DiscreteCurve, Point, ShapeKind, ShapeSpec};
pub use linsolve::{BandedSolver, CyclicBandedSystem, DenseLu, GaussSeidel};
pub use registry::{Registry, StrategySpec};
pub use stepper::{evolve, step, Snapshot, SnapshotSchedule, StepDiagnostics, StepParams, WarmStart};
