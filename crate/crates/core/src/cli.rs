//! Command-line entry points.
//!
//! Exit codes: 0 on success, 1 for configuration, usage and file errors,
//! 2 when the time stepper fails (a linear solve or a collapsing mesh).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Parser, Subcommand};

use crate::geometry::ShapeKind;
use crate::io::config::{preset, ConfigError, RunConfig, PRESET_NAMES};
use crate::io::snapshot::{write_curve_csv, SnapshotWriter};
use crate::io::svg::{select_evenly, write_svg, SvgOptions};
use crate::registry::StrategySpec;
use crate::stepper::{evolve, EvolveError, Snapshot};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

const SVG_FILE: &str = "overlay.svg";
const SVG_MAX_CURVES: usize = 8;

#[derive(Debug, Parser)]
#[command(
    name = "curveflow",
    version,
    about = "Fourth-order geometric flows of closed plane curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve a curve as described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG overlay of the snapshots.
        #[arg(long)]
        svg: bool,
        /// Replace the configured solver by dense LU.
        #[arg(long, value_parser = ["dense"])]
        solver: Option<String>,
    },
    /// Print a ready-made config.
    Presets {
        /// One of ellipse-sd, ellipse-sd-noredist, flower-sd, astroid-willmore, willmore-circle.
        name: String,
    },
    /// Refinement study: halve τ and double n per level, compare with the exact radius.
    Convergence {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 2)]
        levels: usize,
        /// Write each level's final curve and metrics under DIR/level_<j>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match cli.command {
        Command::Run {
            config,
            out: out_dir,
            svg,
            solver,
        } => cmd_run(&config, out_dir, svg, solver.is_some(), out, err),
        Command::Presets { name } => match preset(&name) {
            Some(config) => {
                let _ = writeln!(out, "{}", config.to_json());
                0
            }
            None => {
                let _ = writeln!(
                    err,
                    "error: unknown preset '{name}' (known: {})",
                    PRESET_NAMES.join(", ")
                );
                EXIT_CONFIG
            }
        },
        Command::Convergence {
            preset,
            levels,
            out: dir,
        } => cmd_convergence(&preset, levels, dir.as_deref(), out, err),
    }
}

fn config_failure(err: &mut dyn Write, e: &ConfigError) -> i32 {
    let _ = writeln!(err, "error: {e}");
    EXIT_CONFIG
}

fn evolve_failure(err: &mut dyn Write, e: &EvolveError) -> i32 {
    let _ = writeln!(err, "error: {e}");
    match e {
        EvolveError::Step { .. } => EXIT_SOLVER,
        EvolveError::Sink { .. } | EvolveError::InvalidEndTime(_) => EXIT_CONFIG,
    }
}

fn cmd_run(
    config_path: &Path,
    out_dir: Option<PathBuf>,
    svg: bool,
    dense: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let mut config = match RunConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => return config_failure(err, &e),
    };
    if let Some(dir) = out_dir {
        config.out_dir = dir;
    }
    if dense {
        config.solver = StrategySpec::named("dense");
    }
    let base = config_path.parent().unwrap_or(Path::new("."));
    let run = match config.prepare(base) {
        Ok(r) => r,
        Err(e) => return config_failure(err, &e),
    };
    let mut writer = match SnapshotWriter::create(&config.out_dir) {
        Ok(w) => w,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = std::fs::write(config.out_dir.join("config.json"), config.to_json() + "\n") {
        let _ = writeln!(err, "error: {}: {e}", config.out_dir.display());
        return EXIT_CONFIG;
    }

    let mut kept: Vec<Snapshot> = Vec::new();
    let mut last: Option<Snapshot> = None;
    let result = evolve(
        run.initial,
        run.model.as_ref(),
        &run.params,
        run.t_end,
        &run.schedule,
        |s| {
            writer.write(s)?;
            if svg {
                kept.push(s.clone());
            }
            last = Some(s.clone());
            Ok(())
        },
    );
    if svg && !kept.is_empty() {
        let options = SvgOptions {
            markers: true,
            ..SvgOptions::default()
        };
        if let Err(e) = write_svg(
            &config.out_dir.join(SVG_FILE),
            &select_evenly(&kept, SVG_MAX_CURVES),
            &options,
        ) {
            let _ = writeln!(err, "error: {e}");
            if result.is_ok() {
                return EXIT_CONFIG;
            }
        }
    }
    if let Err(e) = result {
        return evolve_failure(err, &e);
    }
    if let Some(s) = last {
        let m = &s.metrics;
        let _ = writeln!(
            out,
            "t={} steps={} L={} area={} uniformity={} k=[{}, {}] -> {}",
            s.t,
            s.step,
            m.length,
            m.area,
            m.uniformity,
            m.k_min,
            m.k_max,
            writer.dir().display()
        );
    }
    0
}

/// One refinement level of the Willmore circle study.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub level: usize,
    pub n: usize,
    pub tau: f64,
    pub mean_radius: f64,
    pub exact_radius: f64,
}

impl LevelResult {
    pub fn error(&self) -> f64 {
        (self.mean_radius - self.exact_radius).abs()
    }
}

/// Level `j` config: `n·2^j` points and `τ/2^j`.
pub fn refine(base: &RunConfig, level: usize) -> RunConfig {
    let factor = 1usize << level;
    RunConfig {
        n: base.n.map(|n| n * factor),
        tau: base.tau / factor as f64,
        ..base.clone()
    }
}

/// Runs one level and measures the mean distance of the vertices from the
/// origin. Writes the final curve and metrics if `dir` is given.
pub fn run_level(base: &RunConfig, level: usize, dir: Option<&Path>) -> Result<LevelResult, String> {
    let config = refine(base, level);
    let run = config.prepare(Path::new(".")).map_err(|e| e.to_string())?;
    let radius0 = match config.shape {
        Some(ShapeKind::Circle { radius }) => radius,
        _ => return Err("the convergence study needs a circle preset".into()),
    };
    let mut writer = match dir {
        Some(d) => Some(SnapshotWriter::create(d).map_err(|e| e.to_string())?),
        None => None,
    };
    let last = evolve(
        run.initial,
        run.model.as_ref(),
        &run.params,
        run.t_end,
        &run.schedule,
        |s| match &mut writer {
            Some(w) => w.write(s),
            None => Ok(()),
        },
    )
    .map_err(|e| e.to_string())?;
    if let Some(d) = dir {
        write_curve_csv(&d.join("final.csv"), last.points()).map_err(|e| e.to_string())?;
    }
    let n = last.len();
    let mean_radius = last.points().iter().map(|p| p.norm()).sum::<f64>() / n as f64;
    // dR/dt = 1/(2R³) for a circle under Willmore flow.
    let exact_radius = (radius0.powi(4) + 2.0 * last.t()).powf(0.25);
    Ok(LevelResult {
        level,
        n,
        tau: config.tau,
        mean_radius,
        exact_radius,
    })
}

fn cmd_convergence(name: &str, levels: usize, dir: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if name != "willmore-circle" {
        let _ = writeln!(
            err,
            "error: invalid 'preset': convergence supports only willmore-circle, got '{name}'"
        );
        return EXIT_CONFIG;
    }
    if levels == 0 {
        let _ = writeln!(err, "error: invalid 'levels': need at least 1");
        return EXIT_CONFIG;
    }
    let base = preset(name).expect("known preset");
    let results: Vec<Result<LevelResult, String>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..levels)
            .map(|level| {
                let base = &base;
                let sub = dir.map(|d| d.join(format!("level_{level}")));
                scope.spawn(move || run_level(base, level, sub.as_deref()))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("level thread panicked"))
            .collect()
    });

    let _ = writeln!(
        out,
        "level  n      tau         mean_radius         exact_radius        error       ratio"
    );
    let mut previous: Option<f64> = None;
    let mut failed = false;
    for (level, result) in results.into_iter().enumerate() {
        match result {
            Ok(r) => {
                let ratio = previous.map_or("-".to_string(), |p| format!("{:.3}", p / r.error()));
                let _ = writeln!(
                    out,
                    "{:<6} {:<6} {:<11e} {:<19.15} {:<19.15} {:<11.4e} {ratio}",
                    r.level,
                    r.n,
                    r.tau,
                    r.mean_radius,
                    r.exact_radius,
                    r.error()
                );
                previous = Some(r.error());
            }
            Err(e) => {
                let _ = writeln!(err, "error: level {level}: {e}");
                failed = true;
            }
        }
    }
    if failed {
        EXIT_SOLVER
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;
    use crate::geometry::init_from_points;
    use crate::io::snapshot::{read_curve_csv, METRICS_HEADER};

    fn cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["curveflow"];
        argv.extend_from_slice(args);
        let code = run_cli(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn write_config(dir: &Path, body: &str) -> String {
        let path = dir.join("cfg.json");
        fs::write(&path, body).unwrap();
        path.to_str().unwrap().to_string()
    }

    #[test]
    fn presets_print_valid_configs() {
        for name in ["ellipse-sd", "ellipse-sd-noredist", "flower-sd", "astroid-willmore"] {
            let (code, out, _) = cli(&["presets", name]);
            assert_eq!(code, 0, "{name}");
            let config = RunConfig::from_json(&out).unwrap();
            assert_eq!(config.n, Some(100));
        }
        let (code, out, _) = cli(&["presets", "ellipse-sd"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["tau"], 0.001);
        assert_eq!(v["t_end"], 2.0);
        assert_eq!(v["omega"], 1.0);
    }

    #[test]
    fn unknown_preset_is_a_config_error() {
        let (code, _, err) = cli(&["presets", "hexagon"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("hexagon"));
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(cli(&["frobnicate"]).0, EXIT_CONFIG);
        assert_eq!(cli(&["run"]).0, EXIT_CONFIG);
        assert_eq!(cli(&["--help"]).0, 0);
    }

    #[test]
    fn run_writes_curves_metrics_and_svg() {
        let dir = tempfile::tempdir().unwrap();
        let out_dir = dir.path().join("out");
        let cfg = write_config(
            dir.path(),
            r#"{"shape": {"ellipse": {"a": 2, "b": 1}}, "n": 40, "tau": 0.001, "t_end": 0.01, "snapshot_every": 4}"#,
        );
        let (code, stdout, stderr) = cli(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--svg"]);
        assert_eq!(code, 0, "{stderr}");
        assert!(stdout.contains("steps=10"));

        let mut curves: Vec<String> = fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|n| n.starts_with("curve_"))
            .collect();
        curves.sort();
        assert_eq!(
            curves,
            [
                "curve_000000.csv",
                "curve_000004.csv",
                "curve_000008.csv",
                "curve_000010.csv"
            ]
        );

        let first = fs::read_to_string(out_dir.join("curve_000000.csv")).unwrap();
        assert_eq!(first.lines().count(), 40);

        let metrics = fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
        let lines: Vec<&str> = metrics.lines().collect();
        assert_eq!(lines[0], METRICS_HEADER);
        assert_eq!(lines.len(), curves.len() + 1);
        assert!(lines[1].starts_with("0,0,"));
        assert!(lines.iter().all(|l| l.split(',').count() == 9));

        let svg = fs::read_to_string(out_dir.join("overlay.svg")).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("path")).count(), 4);

        let saved = RunConfig::load(&out_dir.join("config.json")).unwrap();
        assert_eq!(saved.n, Some(40));
    }

    #[test]
    fn written_curves_reload_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let out_dir = dir.path().join("out");
        let cfg = write_config(
            dir.path(),
            r#"{"shape": {"flower": {"radius": 1, "amplitude": 0.3, "petals": 5}}, "n": 60, "tau": 1e-6, "t_end": 3e-6}"#,
        );
        let (code, _, stderr) = cli(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code, 0, "{stderr}");
        let last = out_dir.join("curve_000003.csv");
        let points = read_curve_csv(&last).unwrap();
        let text = fs::read_to_string(&last).unwrap();
        let reparsed: Vec<(f64, f64)> = text
            .lines()
            .map(|l| {
                let (x, y) = l.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        let curve = init_from_points(&points).unwrap();
        for (p, (x, y)) in curve.points().iter().zip(reparsed) {
            let scale = x.abs().max(y.abs()).max(1.0);
            assert!((p.x - x).abs() <= 1e-12 * scale && (p.y - y).abs() <= 1e-12 * scale);
        }

        // The saved curve can seed a new run.
        let cfg2 = write_config(
            dir.path(),
            r#"{"input": "out/curve_000003.csv", "tau": 1e-6, "t_end": 2e-6, "out_dir": "again"}"#,
        );
        let (code, _, stderr) = cli(&[
            "run",
            "--config",
            &cfg2,
            "--out",
            dir.path().join("again").to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{stderr}");
    }

    #[test]
    fn bad_tau_exits_one_and_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        for tau in ["0", "-0.001"] {
            let cfg = write_config(
                dir.path(),
                &format!(r#"{{"shape": {{"circle": {{"radius": 1}}}}, "n": 20, "tau": {tau}, "t_end": 0.1}}"#),
            );
            let (code, _, err) = cli(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
            assert_eq!(code, EXIT_CONFIG);
            assert!(err.contains("'tau'"), "{err}");
        }
        assert!(!dir.path().join("o").exists());
    }

    #[test]
    fn missing_config_file_exits_one() {
        let (code, _, err) = cli(&["run", "--config", "/nonexistent/cfg.json"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("/nonexistent/cfg.json"));
    }

    #[test]
    fn solver_failure_exits_two_and_names_subsystem_and_step() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"{"shape": {"ellipse": {"a": 2, "b": 1}}, "n": 40, "t_end": 0.01,
                "solver": {"gauss_seidel": {"rel_tol": 1e-15, "max_iters": 1}}}"#,
        );
        let out_dir = dir.path().join("out");
        let (code, _, err) = cli(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code, EXIT_SOLVER);
        assert!(err.contains("step 1"), "{err}");
        assert!(err.contains("curvature"), "{err}");
        // Snapshots written before the failure stay.
        assert!(out_dir.join("curve_000000.csv").exists());

        let (code, _, err) = cli(&[
            "run",
            "--config",
            &cfg,
            "--out",
            out_dir.to_str().unwrap(),
            "--solver",
            "dense",
        ]);
        assert_eq!(code, 0, "{err}");
    }

    #[test]
    fn convergence_rejects_other_presets() {
        let (code, _, err) = cli(&["convergence", "--preset", "ellipse-sd", "--levels", "1"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("preset"));
        assert_eq!(
            cli(&["convergence", "--preset", "willmore-circle", "--levels", "0"]).0,
            EXIT_CONFIG
        );
    }

    #[test]
    fn convergence_single_level_table() {
        let dir = tempfile::tempdir().unwrap();
        let (code, out, err) = cli(&[
            "convergence",
            "--preset",
            "willmore-circle",
            "--levels",
            "1",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        let rows: Vec<&str> = out.lines().collect();
        assert_eq!(rows.len(), 2);
        let fields: Vec<&str> = rows[1].split_whitespace().collect();
        assert_eq!(fields[1], "200");
        let error: f64 = fields[5].parse().unwrap();
        assert!(error < 1e-3);
        assert!(dir.path().join("level_0/final.csv").exists());
    }
}
