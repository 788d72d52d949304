//! Discrete closed curves, initial shapes and geometric diagnostics.
//!
//! Vertices are stored 0-based. Segment `i` (the flowing finite volume) joins
//! `x[i−1]` to `x[i]`, indices modulo `n`, and carries the local length
//! `r[i]`, its logarithm `eta[i]` and the curvature `k[i]`.

use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = Vector2<f64>;

pub const MIN_POINTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("curve needs at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("segment {index} has zero length")]
    DegenerateSegment { index: usize },
    #[error("three-point curvature needs pairwise distinct points")]
    DegeneratePoints,
    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("inconsistent curve state: {0}")]
    Inconsistent(String),
}

#[inline]
pub(crate) fn prev(i: usize, n: usize) -> usize {
    if i == 0 {
        n - 1
    } else {
        i - 1
    }
}

#[inline]
pub(crate) fn next(i: usize, n: usize) -> usize {
    if i + 1 == n {
        0
    } else {
        i + 1
    }
}

#[inline]
fn cross(u: &Point, v: &Point) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Signed reciprocal circumradius of three points (Menger curvature).
///
/// Positive for a counterclockwise (left) turn at `p`.
pub fn signed_curvature_three_point(p_prev: &Point, p: &Point, p_next: &Point) -> Result<f64, GeometryError> {
    let u = p - p_prev;
    let v = p_next - p;
    let w = p_next - p_prev;
    let (lu, lv, lw) = (u.norm(), v.norm(), w.norm());
    if lu == 0.0 || lv == 0.0 || lw == 0.0 {
        return Err(GeometryError::DegeneratePoints);
    }
    Ok(2.0 * cross(&u, &v) / (lu * lv * lw))
}

/// Shoelace signed area; positive for counterclockwise polygons.
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    0.5 * (0..n).map(|i| cross(&points[prev(i, n)], &points[i])).sum::<f64>()
}

/// Perimeter of the closed polygon.
pub fn polygon_length(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n).map(|i| (points[i] - points[prev(i, n)]).norm()).sum()
}

/// `|x[i] − x[i−1]|` for every segment.
pub fn chord_lengths(points: &[Point]) -> Vec<f64> {
    let n = points.len();
    (0..n).map(|i| (points[i] - points[prev(i, n)]).norm()).collect()
}

/// Dual lengths `q[i] = (r[i] + r[i+1]) / 2`, the distance between the
/// midpoints of segments `i` and `i+1` (centred on vertex `x[i]`).
pub fn dual_lengths(r: &[f64]) -> Vec<f64> {
    let n = r.len();
    (0..n).map(|i| 0.5 * (r[i] + r[next(i, n)])).collect()
}

/// Evolving state of the scheme. `r = exp(eta)` is maintained by every
/// constructor; fields are read through accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    x: Vec<Point>,
    eta: Vec<f64>,
    r: Vec<f64>,
    k: Vec<f64>,
    t: f64,
}

impl DiscreteCurve {
    /// Assembles a curve from already-evolved state.
    pub fn from_parts(x: Vec<Point>, eta: Vec<f64>, k: Vec<f64>, t: f64) -> Result<Self, GeometryError> {
        let n = x.len();
        if n < MIN_POINTS {
            return Err(GeometryError::TooFewPoints(n));
        }
        if eta.len() != n || k.len() != n {
            return Err(GeometryError::Inconsistent(format!(
                "lengths differ: x {n}, eta {}, k {}",
                eta.len(),
                k.len()
            )));
        }
        let r: Vec<f64> = eta.iter().map(|e| e.exp()).collect();
        if let Some(index) = r.iter().position(|&ri| !(ri > 0.0 && ri.is_finite())) {
            return Err(GeometryError::DegenerateSegment { index });
        }
        Ok(Self { x, eta, r, k, t })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.x
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn q(&self) -> Vec<f64> {
        dual_lengths(&self.r)
    }

    /// Σ r_i, the scheme's internal length.
    pub fn r_length(&self) -> f64 {
        self.r.iter().sum()
    }

    /// Largest relative mismatch between `r[i]` and the actual chord.
    pub fn length_consistency(&self) -> f64 {
        chord_lengths(&self.x)
            .iter()
            .zip(&self.r)
            .map(|(c, r)| (r - c).abs() / r)
            .fold(0.0, f64::max)
    }

    pub fn k_range(&self) -> (f64, f64) {
        self.k.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| {
            (lo.min(k), hi.max(k))
        })
    }

    /// Copy of this curve moved by `offset`.
    pub fn translated(&self, offset: Point) -> Self {
        Self {
            x: self.x.iter().map(|p| p + offset).collect(),
            ..self.clone()
        }
    }

    /// Same state stamped with time `t`.
    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }
}

/// Builds the initial state from point samples.
///
/// Orientation is normalized to counterclockwise. Lengths are chords,
/// `eta = ln r`. The curvature of segment `i` is the mean of the Menger
/// curvatures at its end vertices `x[i−1]` and `x[i]`, which is the
/// curvature the position stencil itself sees on a regular polygon.
pub fn init_from_points(points: &[Point]) -> Result<DiscreteCurve, GeometryError> {
    let n = points.len();
    if n < MIN_POINTS {
        return Err(GeometryError::TooFewPoints(n));
    }
    if let Some(index) = points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(GeometryError::NonFinite { index });
    }
    let mut x = points.to_vec();
    if signed_area(&x) < 0.0 {
        x.reverse();
    }

    let chords = chord_lengths(&x);
    if let Some(index) = chords.iter().position(|&c| c == 0.0) {
        return Err(GeometryError::DegenerateSegment { index });
    }

    let vertex_k = (0..n)
        .map(|i| signed_curvature_three_point(&x[prev(i, n)], &x[i], &x[next(i, n)]))
        .collect::<Result<Vec<_>, _>>()?;
    let k = (0..n).map(|i| 0.5 * (vertex_k[prev(i, n)] + vertex_k[i])).collect();
    let eta = chords.iter().map(|c| c.ln()).collect();

    DiscreteCurve::from_parts(x, eta, k, 0.0)
}

/// Analytic initial shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeKind {
    Circle {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    Astroid {
        scale: f64,
    },
    /// Polar curve `radius + amplitude·cos(petals·θ)`.
    Flower {
        radius: f64,
        amplitude: f64,
        petals: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub n: usize,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, n: usize) -> Self {
        Self { kind, n }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(GeometryError::InvalidShape(format!("{name} must be positive, got {v}")))
            }
        };
        match self.kind {
            ShapeKind::Circle { radius } => positive("radius", radius)?,
            ShapeKind::Ellipse { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
            }
            ShapeKind::Astroid { scale } => positive("scale", scale)?,
            ShapeKind::Flower {
                radius,
                amplitude,
                petals,
            } => {
                positive("radius", radius)?;
                positive("amplitude", amplitude)?;
                if amplitude >= radius {
                    return Err(GeometryError::InvalidShape(format!(
                        "flower amplitude {amplitude} must be below radius {radius}"
                    )));
                }
                if petals == 0 {
                    return Err(GeometryError::InvalidShape("flower needs at least one petal".into()));
                }
            }
        }
        if self.n == 0 {
            return Err(GeometryError::InvalidShape("n must be positive".into()));
        }
        Ok(())
    }
}

/// Samples `spec.n` points at `u = i/n`, `i = 1..=n`, counterclockwise.
pub fn generate(spec: &ShapeSpec) -> Result<Vec<Point>, GeometryError> {
    spec.validate()?;
    let n = spec.n;
    let points = (1..=n)
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / n as f64;
            let (s, c) = theta.sin_cos();
            match spec.kind {
                ShapeKind::Circle { radius } => Point::new(radius * c, radius * s),
                ShapeKind::Ellipse { a, b } => Point::new(a * c, b * s),
                ShapeKind::Astroid { scale } => Point::new(scale * c.powi(3), scale * s.powi(3)),
                ShapeKind::Flower {
                    radius,
                    amplitude,
                    petals,
                } => {
                    let rho = radius + amplitude * (petals as f64 * theta).cos();
                    Point::new(rho * c, rho * s)
                }
            }
        })
        .collect();
    Ok(points)
}

/// Area and the two length measures of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measures {
    pub area: f64,
    pub polygon_length: f64,
    pub r_length: f64,
}

impl Measures {
    /// `L²/(4πA)` from the polygon length; 1 for a circle.
    pub fn isoperimetric_ratio(&self) -> f64 {
        self.polygon_length * self.polygon_length / (4.0 * PI * self.area)
    }
}

pub fn area_and_length(curve: &DiscreteCurve) -> Measures {
    Measures {
        area: signed_area(curve.points()),
        polygon_length: polygon_length(curve.points()),
        r_length: curve.r_length(),
    }
}

/// `max r / min r`; 1 for a uniformly distributed grid.
pub fn uniformity_ratio(curve: &DiscreteCurve) -> f64 {
    let (lo, hi) = curve
        .r()
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    hi / lo
}
