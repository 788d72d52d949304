//! SVG overlays of curve snapshots.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::stepper::Snapshot;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Debug, Error)]
pub enum SvgError {
    #[error("nothing to render: no snapshots given")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    /// Draw a dot at every vertex, to show the grid distribution.
    pub markers: bool,
    /// Rendered width in pixels; the height follows from the aspect ratio.
    pub width_px: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            markers: false,
            width_px: 600.0,
        }
    }
}

/// Renders all snapshots into one document.
///
/// World coordinates are used directly with `y` negated, so the picture has
/// the usual orientation and equal scale on both axes.
pub fn render_svg(snapshots: &[Snapshot], options: &SvgOptions) -> Result<String, SvgError> {
    if snapshots.is_empty() {
        return Err(SvgError::Empty);
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in snapshots.iter().flat_map(|s| &s.points) {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(-p.y);
        ymax = ymax.max(-p.y);
    }
    let extent = (xmax - xmin).max(ymax - ymin);
    let extent = if extent > 0.0 && extent.is_finite() {
        extent
    } else {
        1.0
    };
    let pad = 0.05 * extent;
    let (vx, vy) = (xmin - pad, ymin - pad);
    let (vw, vh) = (xmax - xmin + 2.0 * pad, ymax - ymin + 2.0 * pad);
    let height_px = options.width_px * vh / vw;
    let font = 0.035 * extent;
    let dot = 0.006 * extent;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="{vx} {vy} {vw} {vh}">"#,
        options.width_px, height_px
    );
    for (index, snap) in snapshots.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        let _ = writeln!(svg, r#"<g class="snapshot" data-step="{}">"#, snap.step);
        let mut d = String::new();
        for (i, p) in snap.points.iter().enumerate() {
            let _ = write!(d, "{}{} {} ", if i == 0 { "M" } else { "L" }, p.x, -p.y);
        }
        d.push('Z');
        let _ = writeln!(
            svg,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5" vector-effect="non-scaling-stroke"/>"#
        );
        if options.markers {
            for p in &snap.points {
                let _ = writeln!(svg, r#"<circle cx="{}" cy="{}" r="{dot}" fill="{color}"/>"#, p.x, -p.y);
            }
        }
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, r#"<g class="legend" font-family="sans-serif" font-size="{font}">"#);
    for (index, snap) in snapshots.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        let y = vy + font * (1.3 * index as f64 + 1.2);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}" fill="{color}">t = {}</text>"#,
            vx + 0.5 * font,
            snap.t
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

/// Renders and writes to `path`. Nothing is written on error.
pub fn write_svg(path: &Path, snapshots: &[Snapshot], options: &SvgOptions) -> Result<(), SvgError> {
    let svg = render_svg(snapshots, options)?;
    fs::write(path, svg).map_err(|source| SvgError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Up to `max` snapshots spread evenly over the list, always keeping the
/// first and the last when `max ≥ 2`.
pub fn select_evenly(snapshots: &[Snapshot], max: usize) -> Vec<Snapshot> {
    let n = snapshots.len();
    if n <= max {
        return snapshots.to_vec();
    }
    match max {
        0 => Vec::new(),
        1 => vec![snapshots[n - 1].clone()],
        _ => {
            let mut picked: Vec<usize> = (0..max)
                .map(|j| ((j * (n - 1)) as f64 / (max - 1) as f64).round() as usize)
                .collect();
            picked.dedup();
            picked.into_iter().map(|i| snapshots[i].clone()).collect()
        }
    }
}
