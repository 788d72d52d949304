//! Curve CSV files and the per-run metrics table.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! value parses back to the identical `f64`.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::geometry::Point;
use crate::stepper::Snapshot;

pub const METRICS_FILE: &str = "metrics.csv";
pub const METRICS_HEADER: &str = "step,t,L,area,uniformity,k_min,k_max,gs_iters_k,gs_iters_x";

fn with_path(path: &Path, e: io::Error) -> io::Error {
    io::Error::new(e.kind(), format!("{}: {e}", path.display()))
}

pub fn curve_file_name(step: usize) -> String {
    format!("curve_{step:06}.csv")
}

pub fn format_curve_csv(points: &[Point]) -> String {
    let mut out = String::with_capacity(points.len() * 40);
    for p in points {
        out.push_str(&format!("{},{}\n", p.x, p.y));
    }
    out
}

/// Parses `x,y` lines; blank lines are skipped.
pub fn parse_curve_csv(text: &str) -> io::Result<Vec<Point>> {
    let bad = |line: usize, msg: String| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
    let mut points = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut coord = |name: &str| -> io::Result<f64> {
            let field = fields
                .next()
                .ok_or_else(|| bad(index + 1, format!("missing {name}")))?
                .trim();
            field
                .parse::<f64>()
                .map_err(|e| bad(index + 1, format!("bad {name} '{field}': {e}")))
        };
        let (x, y) = (coord("x")?, coord("y")?);
        if fields.next().is_some() {
            return Err(bad(index + 1, "expected exactly two fields".into()));
        }
        points.push(Point::new(x, y));
    }
    Ok(points)
}

pub fn write_curve_csv(path: &Path, points: &[Point]) -> io::Result<()> {
    fs::write(path, format_curve_csv(points)).map_err(|e| with_path(path, e))
}

pub fn read_curve_csv(path: &Path) -> io::Result<Vec<Point>> {
    let text = fs::read_to_string(path).map_err(|e| with_path(path, e))?;
    parse_curve_csv(&text).map_err(|e| with_path(path, e))
}

pub fn metrics_row(s: &Snapshot) -> String {
    let m = &s.metrics;
    format!(
        "{},{},{},{},{},{},{},{},{}",
        s.step, s.t, m.length, m.area, m.uniformity, m.k_min, m.k_max, m.gs_iters_k, m.gs_iters_x
    )
}

/// Writes `curve_<step>.csv` per snapshot and one `metrics.csv` row each.
pub struct SnapshotWriter {
    dir: PathBuf,
    metrics_path: PathBuf,
    metrics: BufWriter<File>,
}

impl SnapshotWriter {
    /// Creates `dir` if needed and starts a fresh `metrics.csv`.
    pub fn create(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir).map_err(|e| with_path(dir, e))?;
        let metrics_path = dir.join(METRICS_FILE);
        let file = File::create(&metrics_path).map_err(|e| with_path(&metrics_path, e))?;
        let mut metrics = BufWriter::new(file);
        writeln!(metrics, "{METRICS_HEADER}").map_err(|e| with_path(&metrics_path, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            metrics_path,
            metrics,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, snapshot: &Snapshot) -> io::Result<()> {
        write_curve_csv(&self.dir.join(curve_file_name(snapshot.step)), &snapshot.points)?;
        writeln!(self.metrics, "{}", metrics_row(snapshot)).map_err(|e| with_path(&self.metrics_path, e))?;
        // Keep the table complete even if a later step fails.
        self.metrics.flush().map_err(|e| with_path(&self.metrics_path, e))
    }
}
