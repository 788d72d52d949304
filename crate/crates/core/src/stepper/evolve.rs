use std::collections::BTreeSet;
use std::io;

use thiserror::Error;

use super::{step_with_guess, Guess, StepDiagnostics, StepError, StepParams, WarmStart};
use crate::flow_models::FlowModel;
use crate::geometry::{area_and_length, uniformity_ratio, DiscreteCurve, Point};

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: StepError,
    },
    #[error("snapshot at step {step} could not be written: {source}")]
    Sink {
        step: usize,
        #[source]
        source: io::Error,
    },
    #[error("t_end must be positive and at least one step long, got {0}")]
    InvalidEndTime(f64),
}

/// When to emit snapshots besides the first and last step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnapshotSchedule {
    /// Every this many steps; zero disables periodic snapshots.
    pub every: usize,
    /// Extra snapshot times, rounded to the nearest step.
    pub times: Vec<f64>,
}

impl SnapshotSchedule {
    pub fn every(every: usize) -> Self {
        Self {
            every,
            times: Vec::new(),
        }
    }

    pub fn steps(&self, tau: f64, total: usize) -> BTreeSet<usize> {
        let mut steps: BTreeSet<usize> = [0, total].into();
        if self.every > 0 {
            steps.extend((0..=total).step_by(self.every));
        }
        steps.extend(
            self.times
                .iter()
                .map(|t| (t / tau).round())
                .filter(|s| *s >= 0.0 && *s <= total as f64)
                .map(|s| s as usize),
        );
        steps
    }
}

/// Scalar diagnostics recorded with each snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotMetrics {
    /// Σ r_i.
    pub length: f64,
    pub polygon_length: f64,
    pub area: f64,
    pub uniformity: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub gs_iters_k: usize,
    pub gs_iters_x: usize,
}

impl SnapshotMetrics {
    pub fn isoperimetric_ratio(&self) -> f64 {
        self.polygon_length * self.polygon_length / (4.0 * std::f64::consts::PI * self.area)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub points: Vec<Point>,
    pub curvature: Vec<f64>,
    pub metrics: SnapshotMetrics,
}

impl Snapshot {
    pub fn capture(step: usize, curve: &DiscreteCurve, diag: Option<&StepDiagnostics>) -> Self {
        let m = area_and_length(curve);
        let (k_min, k_max) = curve.k_range();
        Snapshot {
            step,
            t: curve.t(),
            points: curve.points().to_vec(),
            curvature: curve.k().to_vec(),
            metrics: SnapshotMetrics {
                length: m.r_length,
                polygon_length: m.polygon_length,
                area: m.area,
                uniformity: uniformity_ratio(curve),
                k_min,
                k_max,
                gs_iters_k: diag.map_or(0, |d| d.gs_iters_curvature),
                gs_iters_x: diag.map_or(0, |d| d.gs_iters_position),
            },
        }
    }
}

/// Runs `round(t_end / τ)` steps, handing scheduled snapshots to `sink` in
/// time order. Snapshots emitted before a failure stay valid.
pub fn evolve<F>(
    initial: DiscreteCurve,
    model: &dyn FlowModel,
    params: &StepParams,
    t_end: f64,
    schedule: &SnapshotSchedule,
    mut sink: F,
) -> Result<DiscreteCurve, EvolveError>
where
    F: FnMut(&Snapshot) -> io::Result<()>,
{
    let total = (t_end / params.tau).round();
    if t_end.is_nan() || t_end <= 0.0 || total.is_nan() || total < 1.0 || !total.is_finite() {
        return Err(EvolveError::InvalidEndTime(t_end));
    }
    let total = total as usize;
    let wanted = schedule.steps(params.tau, total);

    let t0 = initial.t();
    let mut curve = initial;
    let mut previous: Option<DiscreteCurve> = None;
    sink(&Snapshot::capture(0, &curve, None)).map_err(|source| EvolveError::Sink { step: 0, source })?;
    for index in 1..=total {
        let guess = match (params.warm_start, &previous) {
            (WarmStart::Extrapolate, Some(p)) => Guess::extrapolate(p, &curve),
            _ => None,
        };
        let (next, diag) = step_with_guess(&curve, model, params, guess.as_ref())
            .map_err(|source| EvolveError::Step { step: index, source })?;
        // Avoid accumulating rounding in t over many steps.
        let next = next.with_time(t0 + index as f64 * params.tau);
        if params.warm_start == WarmStart::Extrapolate {
            previous = Some(std::mem::replace(&mut curve, next));
        } else {
            curve = next;
        }
        if wanted.contains(&index) {
            sink(&Snapshot::capture(index, &curve, Some(&diag)))
                .map_err(|source| EvolveError::Sink { step: index, source })?;
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow_models::SurfaceDiffusion;
    use crate::geometry::{generate, init_from_points, ShapeKind, ShapeSpec};
    use std::sync::Arc;

    #[test]
    fn schedule_includes_endpoints() {
        let s = SnapshotSchedule {
            every: 0,
            times: vec![0.0005],
        };
        assert_eq!(s.steps(1e-6, 5000).into_iter().collect::<Vec<_>>(), vec![0, 500, 5000]);
        let s = SnapshotSchedule::every(3);
        assert_eq!(s.steps(0.1, 7).into_iter().collect::<Vec<_>>(), vec![0, 3, 6, 7]);
    }

    #[test]
    fn evolve_emits_snapshots_in_order() {
        let pts = generate(&ShapeSpec::new(ShapeKind::Ellipse { a: 2.0, b: 1.0 }, 40)).unwrap();
        let curve = init_from_points(&pts).unwrap();
        let params = StepParams::uniform(1e-3, 1.0).unwrap();
        let mut seen = Vec::new();
        let last = evolve(
            curve,
            &SurfaceDiffusion,
            &params,
            0.01,
            &SnapshotSchedule::every(4),
            |s| {
                seen.push((s.step, s.t));
                Ok(())
            },
        )
        .unwrap();
        let steps: Vec<usize> = seen.iter().map(|s| s.0).collect();
        assert_eq!(steps, vec![0, 4, 8, 10]);
        assert_eq!(last.t(), 10.0 * 1e-3);
        assert_eq!(seen[1].1, 4.0 * 1e-3);
    }

    #[test]
    fn evolve_reports_failing_step() {
        let pts = generate(&ShapeSpec::new(ShapeKind::Ellipse { a: 2.0, b: 1.0 }, 40)).unwrap();
        let curve = init_from_points(&pts).unwrap();
        let params = StepParams::uniform(1e-3, 1.0)
            .unwrap()
            .with_solver(Arc::new(crate::linsolve::GaussSeidel::new(1e-15, 1)));
        let mut count = 0;
        let err = evolve(
            curve,
            &SurfaceDiffusion,
            &params,
            0.01,
            &SnapshotSchedule::every(1),
            |_| {
                count += 1;
                Ok(())
            },
        )
        .unwrap_err();
        assert!(matches!(err, EvolveError::Step { step: 1, .. }));
        assert_eq!(count, 1);
    }

    #[test]
    fn evolve_rejects_bad_end_time() {
        let pts = generate(&ShapeSpec::new(ShapeKind::Circle { radius: 1.0 }, 20)).unwrap();
        let curve = init_from_points(&pts).unwrap();
        let params = StepParams::uniform(1e-3, 1.0).unwrap();
        for t_end in [0.0, -1.0, 1e-5] {
            let res = evolve(
                curve.clone(),
                &SurfaceDiffusion,
                &params,
                t_end,
                &SnapshotSchedule::default(),
                |_| Ok(()),
            );
            assert!(matches!(res, Err(EvolveError::InvalidEndTime(_))));
        }
    }
}
