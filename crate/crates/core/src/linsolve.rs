//! Cyclic pentadiagonal systems.
//!
//! Row `i` couples unknowns `i−2, i−1, i, i+1, i+2`, indices taken modulo `n`:
//!
//! ```text
//! a[i]·u[i−2] + b[i]·u[i−1] + c[i]·u[i] + d[i]·u[i+1] + e[i]·u[i+2] = f[i]
//! ```
//!
//! The time stepper solves these by Gauss–Seidel sweeps; a dense LU solve of
//! the materialized matrix is kept as a fallback and as a test oracle.

use std::fmt;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::registry::{no_params, Registry, RegistryError, StrategySpec};

pub const MIN_SIZE: usize = 5;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("Gauss-Seidel did not converge in {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("system of size {n} is too small (need at least {MIN_SIZE})")]
    TooSmall { n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[inline]
fn wrap_indices(i: usize, n: usize) -> (usize, usize, usize, usize) {
    let im2 = if i >= 2 { i - 2 } else { i + n - 2 };
    let im1 = if i >= 1 { i - 1 } else { n - 1 };
    let ip1 = if i + 1 < n { i + 1 } else { i + 1 - n };
    let ip2 = if i + 2 < n { i + 2 } else { i + 2 - n };
    (im2, im1, ip1, ip2)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Five periodic bands plus right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicBandedSystem {
    /// Coefficient of `u[i−2]`.
    pub a: Vec<f64>,
    /// Coefficient of `u[i−1]`.
    pub b: Vec<f64>,
    /// Diagonal.
    pub c: Vec<f64>,
    /// Coefficient of `u[i+1]`.
    pub d: Vec<f64>,
    /// Coefficient of `u[i+2]`.
    pub e: Vec<f64>,
    pub f: Vec<f64>,
}

impl CyclicBandedSystem {
    /// All-zero system of size `n`.
    ///
    /// # Panics
    /// If `n < 5`: the wrapped stencil would alias columns.
    pub fn zeros(n: usize) -> Self {
        assert!(
            n >= MIN_SIZE,
            "cyclic pentadiagonal system needs n >= {MIN_SIZE}, got {n}"
        );
        Self {
            a: vec![0.0; n],
            b: vec![0.0; n],
            c: vec![0.0; n],
            d: vec![0.0; n],
            e: vec![0.0; n],
            f: vec![0.0; n],
        }
    }

    pub fn from_bands(
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
        d: Vec<f64>,
        e: Vec<f64>,
        f: Vec<f64>,
    ) -> Result<Self, SolveError> {
        let n = c.len();
        if n < MIN_SIZE {
            return Err(SolveError::TooSmall { n });
        }
        for band in [&a, &b, &d, &e, &f] {
            if band.len() != n {
                return Err(SolveError::DimensionMismatch {
                    expected: n,
                    got: band.len(),
                });
            }
        }
        Ok(Self { a, b, c, d, e, f })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Same bands, different right-hand side.
    pub fn with_rhs(&self, f: Vec<f64>) -> Self {
        assert_eq!(f.len(), self.len());
        Self { f, ..self.clone() }
    }

    /// `A·u` with the wrapped stencil.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(u.len(), n);
        (0..n)
            .map(|i| {
                let (im2, im1, ip1, ip2) = wrap_indices(i, n);
                self.a[i] * u[im2] + self.b[i] * u[im1] + self.c[i] * u[i] + self.d[i] * u[ip1] + self.e[i] * u[ip2]
            })
            .collect()
    }

    /// ∞-norm of `f − A·u`.
    pub fn residual_norm(&self, u: &[f64]) -> f64 {
        let n = self.len();
        assert_eq!(u.len(), n);
        let mut worst = 0.0f64;
        for i in 0..n {
            let (im2, im1, ip1, ip2) = wrap_indices(i, n);
            let r = self.f[i]
                - (self.a[i] * u[im2]
                    + self.b[i] * u[im1]
                    + self.c[i] * u[i]
                    + self.d[i] * u[ip1]
                    + self.e[i] * u[ip2]);
            // NaN must not be swallowed by max().
            if r.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(r.abs());
        }
        worst
    }

    /// Materializes the n×n matrix. Entries landing on the same column add up.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let (im2, im1, ip1, ip2) = wrap_indices(i, n);
            m[(i, im2)] += self.a[i];
            m[(i, im1)] += self.b[i];
            m[(i, i)] += self.c[i];
            m[(i, ip1)] += self.d[i];
            m[(i, ip2)] += self.e[i];
        }
        m
    }

    /// Largest `|a|+|b|+|c|+|d|+|e|` over rows.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.len())
            .map(|i| self.a[i].abs() + self.b[i].abs() + self.c[i].abs() + self.d[i].abs() + self.e[i].abs())
            .fold(0.0, f64::max)
    }
}

/// One Gauss–Seidel sweep in index order; returns the ∞-norm of the
/// residual after the sweep.
///
/// Row `i` is exactly satisfied when `u[i]` is updated, so afterwards its
/// residual only comes from neighbours `j > i` that moved later in the same
/// sweep: `res_i = −Σ_{j>i} A_ij·δ_j`. This avoids a second pass over the
/// matrix.
fn sweep(sys: &CyclicBandedSystem, u: &mut [f64], delta: &mut [f64]) -> f64 {
    let n = u.len();
    let (a, b, c, d, e, f) = (&sys.a, &sys.b, &sys.c, &sys.d, &sys.e, &sys.f);

    let mut update = |i: usize, u: &mut [f64], im2: usize, im1: usize, ip1: usize, ip2: usize| {
        let off = a[i] * u[im2] + b[i] * u[im1] + d[i] * u[ip1] + e[i] * u[ip2];
        let new = (f[i] - off) / c[i];
        delta[i] = new - u[i];
        u[i] = new;
    };
    update(0, u, n - 2, n - 1, 1, 2);
    update(1, u, n - 1, 0, 2, 3);
    for i in 2..n - 2 {
        update(i, u, i - 2, i - 1, i + 1, i + 2);
    }
    update(n - 2, u, n - 4, n - 3, n - 1, 0);
    update(n - 1, u, n - 3, n - 2, 0, 1);

    let mut worst: f64 = 0.0;
    let mut track = |r: f64| {
        worst = if r.is_nan() { f64::NAN } else { worst.max(r.abs()) };
    };
    track(a[0] * delta[n - 2] + b[0] * delta[n - 1] + d[0] * delta[1] + e[0] * delta[2]);
    track(a[1] * delta[n - 1] + d[1] * delta[2] + e[1] * delta[3]);
    for i in 2..n - 2 {
        track(d[i] * delta[i + 1] + e[i] * delta[i + 2]);
    }
    track(d[n - 2] * delta[n - 1]);
    worst
}

/// Gauss–Seidel sweeps in index order, starting from `guess`.
///
/// Stops once `residual_norm ≤ rel_tol·max(1, ‖f‖∞)`; the guess itself is
/// checked first, so an exact warm start costs zero sweeps.
pub fn solve_gauss_seidel(
    sys: &CyclicBandedSystem,
    guess: &[f64],
    rel_tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, usize), SolveError> {
    let n = sys.len();
    if guess.len() != n {
        return Err(SolveError::DimensionMismatch {
            expected: n,
            got: guess.len(),
        });
    }
    if let Some(row) = sys.c.iter().position(|&c| c == 0.0) {
        return Err(SolveError::ZeroDiagonal { row });
    }

    let threshold = rel_tol * inf_norm(&sys.f).max(1.0);
    let mut u = guess.to_vec();
    let mut residual = sys.residual_norm(&u);
    if residual <= threshold {
        return Ok((u, 0));
    }

    let mut delta = vec![0.0; n];
    for iteration in 1..=max_iters {
        residual = sweep(sys, &mut u, &mut delta);
        if !residual.is_finite() {
            return Err(SolveError::NotConverged {
                iterations: iteration,
                residual,
            });
        }
        if residual <= threshold {
            // The in-sweep estimate drops rounding; confirm on the real residual.
            residual = sys.residual_norm(&u);
            if residual <= threshold {
                return Ok((u, iteration));
            }
        }
    }
    Err(SolveError::NotConverged {
        iterations: max_iters,
        residual,
    })
}

/// Dense LU with partial pivoting on the materialized cyclic matrix.
pub fn solve_dense(sys: &CyclicBandedSystem) -> Result<Vec<f64>, SolveError> {
    let m = sys.to_dense();
    let lu = m.lu();
    let pivots_ok = {
        let u = lu.u();
        let scale = u.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        scale > 0.0 && (0..sys.len()).all(|i| u[(i, i)].abs() > scale * f64::EPSILON * sys.len() as f64)
    };
    if !pivots_ok {
        return Err(SolveError::SingularMatrix);
    }
    let rhs = DVector::from_column_slice(&sys.f);
    let x = lu.solve(&rhs).ok_or(SolveError::SingularMatrix)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::SingularMatrix);
    }
    Ok(x.iter().copied().collect())
}

/// Result of one banded solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<f64>,
    /// Sweeps performed; zero for direct solvers.
    pub iterations: usize,
}

/// A strategy for solving [`CyclicBandedSystem`]s.
pub trait BandedSolver: fmt::Debug + Send + Sync {
    fn name(&self) -> &'static str;

    /// Solves `sys`; iterative solvers start from `guess`.
    fn solve(&self, sys: &CyclicBandedSystem, guess: &[f64]) -> Result<Solution, SolveError>;

    fn spec(&self) -> StrategySpec;
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussSeidel {
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_rel_tol() -> f64 {
    DEFAULT_REL_TOL
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

impl Default for GaussSeidel {
    fn default() -> Self {
        Self {
            rel_tol: DEFAULT_REL_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

impl GaussSeidel {
    pub fn new(rel_tol: f64, max_iters: usize) -> Self {
        Self { rel_tol, max_iters }
    }
}

impl BandedSolver for GaussSeidel {
    fn name(&self) -> &'static str {
        "gauss_seidel"
    }

    fn solve(&self, sys: &CyclicBandedSystem, guess: &[f64]) -> Result<Solution, SolveError> {
        let (values, iterations) = solve_gauss_seidel(sys, guess, self.rel_tol, self.max_iters)?;
        Ok(Solution { values, iterations })
    }

    fn spec(&self) -> StrategySpec {
        if *self == Self::default() {
            StrategySpec::named(self.name())
        } else {
            StrategySpec::with_params(
                self.name(),
                serde_json::json!({"rel_tol": self.rel_tol, "max_iters": self.max_iters}),
            )
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DenseLu;

impl BandedSolver for DenseLu {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn solve(&self, sys: &CyclicBandedSystem, _guess: &[f64]) -> Result<Solution, SolveError> {
        Ok(Solution {
            values: solve_dense(sys)?,
            iterations: 0,
        })
    }

    fn spec(&self) -> StrategySpec {
        StrategySpec::named(self.name())
    }
}

pub fn registry() -> &'static Registry<dyn BandedSolver> {
    static REGISTRY: OnceLock<Registry<dyn BandedSolver>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut reg: Registry<dyn BandedSolver> = Registry::new("solver");
        reg.register("gauss_seidel", |p: &Value| {
            let gs = if p.is_null() {
                GaussSeidel::default()
            } else {
                serde_json::from_value::<GaussSeidel>(p.clone()).map_err(|e| e.to_string())?
            };
            if gs.rel_tol.is_nan() || gs.rel_tol <= 0.0 || gs.max_iters == 0 {
                return Err("rel_tol must be > 0 and max_iters >= 1".into());
            }
            Ok(Box::new(gs) as Box<dyn BandedSolver>)
        })
        .register("dense", |p: &Value| {
            no_params(p)?;
            Ok(Box::new(DenseLu) as Box<dyn BandedSolver>)
        });
        reg
    })
}

pub fn create(spec: &StrategySpec) -> Result<Box<dyn BandedSolver>, RegistryError> {
    registry().create(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity(f: Vec<f64>) -> CyclicBandedSystem {
        let n = f.len();
        let mut s = CyclicBandedSystem::zeros(n);
        s.c.iter_mut().for_each(|c| *c = 1.0);
        s.f = f;
        s
    }

    /// Random system whose diagonal exceeds the off-diagonal row sum by `ratio`.
    fn dominant(rng: &mut ChaCha8Rng, n: usize, ratio: f64) -> CyclicBandedSystem {
        let mut s = CyclicBandedSystem::zeros(n);
        for i in 0..n {
            s.a[i] = rng.random_range(-1.0..1.0);
            s.b[i] = rng.random_range(-1.0..1.0);
            s.d[i] = rng.random_range(-1.0..1.0);
            s.e[i] = rng.random_range(-1.0..1.0);
            let off = s.a[i].abs() + s.b[i].abs() + s.d[i].abs() + s.e[i].abs();
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            s.c[i] = sign * ratio * off.max(0.1);
            s.f[i] = rng.random_range(-10.0..10.0);
        }
        s
    }

    #[test]
    fn identity_converges_in_one_sweep() {
        let f = vec![1.0, -2.0, 3.5, 0.25, 7.0, -1.0];
        let sys = identity(f.clone());
        let (u, iters) = solve_gauss_seidel(&sys, &[0.0; 6], 1e-12, 10).unwrap();
        assert_eq!(u, f);
        assert_eq!(iters, 1);
        assert_eq!(solve_dense(&sys).unwrap(), f);
    }

    #[test]
    fn sweep_residual_matches_direct_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [5, 6, 7, 20] {
            let sys = dominant(&mut rng, n, 1.3);
            let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut delta = vec![0.0; n];
            for _ in 0..3 {
                let estimate = sweep(&sys, &mut u, &mut delta);
                let direct = sys.residual_norm(&u);
                assert!(
                    (estimate - direct).abs() <= 1e-12 * direct.max(1.0),
                    "n={n}: {estimate} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn exact_guess_needs_no_sweep() {
        let f = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let (_, iters) = solve_gauss_seidel(&identity(f.clone()), &f, 1e-12, 10).unwrap();
        assert_eq!(iters, 0);
    }

    #[test]
    fn gauss_seidel_matches_dense_on_dominant_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sys = dominant(&mut rng, 10, 1.5);
        let (gs, _) = solve_gauss_seidel(&sys, &[0.0; 10], 1e-13, 10_000).unwrap();
        let lu = solve_dense(&sys).unwrap();
        let diff = gs.iter().zip(&lu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "diff {diff}");
    }

    #[test]
    fn zero_diagonal_is_rejected() {
        let mut sys = identity(vec![1.0; 6]);
        sys.c[3] = 0.0;
        assert_eq!(
            solve_gauss_seidel(&sys, &[0.0; 6], 1e-10, 10),
            Err(SolveError::ZeroDiagonal { row: 3 })
        );
    }

    #[test]
    fn all_ones_bands_recover_ones_vector() {
        // n = 5: every row couples every column once, so A = ones(5,5) is
        // singular. Perturb the diagonal to make the oracle meaningful.
        let n = 5;
        let mut sys = CyclicBandedSystem::zeros(n);
        for band in [&mut sys.a, &mut sys.b, &mut sys.c, &mut sys.d, &mut sys.e] {
            band.iter_mut().for_each(|v| *v = 1.0);
        }
        assert!(matches!(solve_dense(&sys), Err(SolveError::SingularMatrix)));

        sys.c.iter_mut().for_each(|v| *v = 2.0);
        let ones = vec![1.0; n];
        sys.f = sys.apply(&ones);
        assert_eq!(sys.f, vec![6.0; n]);
        let u = solve_dense(&sys).unwrap();
        for v in u {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn dense_detects_singular() {
        let sys = CyclicBandedSystem::zeros(7);
        assert_eq!(solve_dense(&sys), Err(SolveError::SingularMatrix));
    }

    #[test]
    fn residual_of_zero_vector_is_rhs_norm() {
        let sys = identity(vec![1.0, -4.0, 2.0, 0.0, 3.0]);
        assert_eq!(sys.residual_norm(&[0.0; 5]), 4.0);
        assert_eq!(sys.residual_norm(&sys.f.clone()), 0.0);
    }

    #[test]
    fn residual_perturbation_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(5..30);
            let sys = dominant(&mut rng, n, 2.0);
            let mut u = solve_dense(&sys).unwrap();
            let base = sys.residual_norm(&u);
            let j = rng.random_range(0..n);
            let delta = rng.random_range(-1.0..1.0);
            u[j] += delta;
            let perturbed = sys.residual_norm(&u);
            assert!(perturbed - base <= sys.max_abs_row_sum() * delta.abs() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn iteration_count_monotone_in_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = dominant(&mut rng, 32, 1.0);
        let mut last = usize::MAX;
        for ratio in [1.1, 1.5, 2.0, 4.0, 8.0, 16.0] {
            let mut sys = base.clone();
            for i in 0..32 {
                let off = sys.a[i].abs() + sys.b[i].abs() + sys.d[i].abs() + sys.e[i].abs();
                sys.c[i] = ratio * off.max(0.1);
            }
            let (_, iters) = solve_gauss_seidel(&sys, &vec![0.0; 32], 1e-12, 100_000).unwrap();
            assert!(iters <= last, "ratio {ratio}: {iters} > {last}");
            last = iters;
        }
    }

    #[test]
    fn divergent_instance_reports_not_converged() {
        let n = 8;
        let mut sys = CyclicBandedSystem::zeros(n);
        for i in 0..n {
            sys.b[i] = 3.0;
            sys.c[i] = 1.0;
            sys.d[i] = 3.0;
            sys.f[i] = 1.0;
        }
        match solve_gauss_seidel(&sys, &vec![0.0; n], 1e-10, 200) {
            Err(SolveError::NotConverged { .. }) => {}
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn from_bands_validates_shape() {
        let v = |n| vec![0.0; n];
        assert_eq!(
            CyclicBandedSystem::from_bands(v(4), v(4), v(4), v(4), v(4), v(4)),
            Err(SolveError::TooSmall { n: 4 })
        );
        assert!(matches!(
            CyclicBandedSystem::from_bands(v(6), v(6), v(6), v(5), v(6), v(6)),
            Err(SolveError::DimensionMismatch { expected: 6, got: 5 })
        ));
    }

    #[test]
    fn solver_registry() {
        let gs = create(&StrategySpec::named("gauss_seidel")).unwrap();
        assert_eq!(gs.name(), "gauss_seidel");
        assert_eq!(gs.spec(), StrategySpec::named("gauss_seidel"));
        let custom = create(&StrategySpec::with_params(
            "gauss_seidel",
            serde_json::json!({"rel_tol": 1e-8, "max_iters": 50}),
        ))
        .unwrap();
        assert_eq!(create(&custom.spec()).unwrap().spec(), custom.spec());
        assert!(create(&StrategySpec::with_params(
            "gauss_seidel",
            serde_json::json!({"rel_tol": -1.0})
        ))
        .is_err());
        assert_eq!(create(&StrategySpec::named("dense")).unwrap().name(), "dense");
    }

    proptest! {
        #[test]
        fn dense_solution_has_small_residual(seed in any::<u64>(), n in 5usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sys = dominant(&mut rng, n, 1.2);
            let u = solve_dense(&sys).unwrap();
            let scale = inf_norm(&sys.f).max(1.0);
            prop_assert!(sys.residual_norm(&u) <= 1e-10 * scale);
        }
    }
}
