use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::checks::{
    barrier_check_bracket, barrier_check_memory, comparison_check, CheckOutcome, MemoryBarrier,
};
use super::config::{AnalysisConfig, BarrierKind, OrderRole, ScenarioConfig, ThresholdConfig};
use super::convergence::{convergence_study, Centering};
use crate::analytic::critical_time_1d;
use crate::error::{Error, Result};
use crate::interface::{
    detect_support_edge, edge_track, local_exponent, local_exponent_refined, resolve_threshold,
    track_level_set, waiting_time, write_level_tracks_csv, ExponentFit, ExponentWindow, LevelTrack,
};
use crate::mol::{integrate, Grid, ProblemSpec, SolveTrace};
use crate::numeric::{fmt17, pow_pos};

pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmittedFile {
    pub name: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RunStatus {
    Passed,
    ChecksFailed,
    /// The solver failed; no analysis outputs are kept.
    SolverError(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub config_hash: String,
    pub version: String,
    pub wall_time_s: f64,
    pub status: RunStatus,
    pub files: Vec<EmittedFile>,
    pub checks: Vec<CheckOutcome>,
    /// Measured values that are reported but not judged.
    pub info: Vec<(String, String)>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.status == RunStatus::Passed
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn info_value(&self, key: &str) -> Option<&str> {
        self.info
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario={}", self.scenario);
        let _ = writeln!(s, "config_sha256={}", self.config_hash);
        let _ = writeln!(s, "version={}", self.version);
        let _ = writeln!(s, "wall_time_s={:.3}", self.wall_time_s);
        match &self.status {
            RunStatus::Passed => s.push_str("status=pass\n"),
            RunStatus::ChecksFailed => s.push_str("status=fail\n"),
            RunStatus::SolverError(msg) => {
                let _ = writeln!(s, "status=error\ndiagnostic={}", msg.replace('\n', " "));
            }
        }
        for f in &self.files {
            let _ = writeln!(s, "file={} rows={}", f.name, f.rows);
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "check={} status={} value={} {}",
                c.name,
                c.status(),
                fmt17(c.value),
                c.detail
            );
        }
        for (k, v) in &self.info {
            let _ = writeln!(s, "info.{k}={v}");
        }
        s
    }
}

/// SHA-256 of the canonical JSON form of the config, without `output_dir`.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let mut c = config.clone();
    c.output_dir = None;
    let json = serde_json::to_vec(&c).expect("scenario config serializes");
    let digest = Sha256::digest(&json);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

struct Outputs {
    dir: PathBuf,
    files: Vec<EmittedFile>,
}

impl Outputs {
    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<usize>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        let rows = body(&mut w).map_err(|e| Error::io(&path, e))?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.files.push(EmittedFile {
            name: name.to_string(),
            rows,
        });
        Ok(())
    }

    fn remove_all(&mut self) {
        for f in self.files.drain(..) {
            let _ = std::fs::remove_file(self.dir.join(&f.name));
        }
    }
}

/// Makes `dir` ready for a run: creates it, or clears the files listed by a
/// previous manifest. Any other content is refused so that the manifest
/// always describes the whole directory.
fn prepare_output_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = dir.join(MANIFEST_NAME);
    if let Ok(text) = std::fs::read_to_string(&manifest) {
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("file=") {
                let name = rest.split(' ').next().unwrap_or("");
                if !name.is_empty() && !name.contains('/') && !name.contains("..") {
                    let _ = std::fs::remove_file(dir.join(name));
                }
            }
        }
        std::fs::remove_file(&manifest).map_err(|e| Error::io(&manifest, e))?;
    }
    let leftover = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .next();
    if let Some(name) = leftover {
        return Err(Error::config(format!(
            "output directory {} is not empty (found {name})",
            dir.display()
        )));
    }
    Ok(())
}

/// Runs a scenario into `output_dir`: one solve, then every analysis on the
/// shared trace; `manifest.txt` is written last.
///
/// Configuration and I/O problems are returned as errors. A solver failure
/// yields a manifest with [`RunStatus::SolverError`] and no other files.
pub fn run_scenario(config: &ScenarioConfig, output_dir: &Path) -> Result<RunManifest> {
    config.validate()?;
    let started = Instant::now();
    prepare_output_dir(output_dir)?;
    let spec = config.problem.to_spec()?;
    let times = config.problem.snapshot_times()?;
    let mut out = Outputs {
        dir: output_dir.to_path_buf(),
        files: Vec::new(),
    };
    let mut checks = Vec::new();
    let mut info = Vec::new();

    let result = integrate(&spec, &times, &mut []).and_then(|trace| {
        info.push((
            "solver".to_string(),
            trace.stats.to_key_value().replace('\n', " "),
        ));
        for analysis in &config.analyses {
            run_analysis(
                analysis,
                &spec,
                &trace,
                config.problem.snapshots,
                &mut out,
                &mut checks,
                &mut info,
            )?;
        }
        Ok(())
    });

    let status = match result {
        Ok(()) if checks.iter().all(|c| c.passed) => RunStatus::Passed,
        Ok(()) => RunStatus::ChecksFailed,
        Err(e @ Error::Solver { .. }) => {
            out.remove_all();
            checks.clear();
            RunStatus::SolverError(e.to_string())
        }
        Err(e) => {
            out.remove_all();
            return Err(e);
        }
    };
    let manifest = RunManifest {
        scenario: config.name.clone(),
        config_hash: config_hash(config),
        version: crate::VERSION.to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
        status,
        files: out.files,
        checks,
        info,
    };
    let path = output_dir.join(MANIFEST_NAME);
    std::fs::write(&path, manifest.render()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn threshold_of(trace: &SolveTrace, th: &ThresholdConfig) -> f64 {
    resolve_threshold(trace, th.rel, th.floor)
}

fn level_tag(level: f64) -> String {
    format!("{level}").replace('.', "p")
}

fn run_analysis(
    analysis: &AnalysisConfig,
    spec: &ProblemSpec,
    trace: &SolveTrace,
    snapshots: usize,
    out: &mut Outputs,
    checks: &mut Vec<CheckOutcome>,
    info: &mut Vec<(String, String)>,
) -> Result<()> {
    let grid = &spec.grid;
    let params = spec.params;
    let xs: Vec<f64> = grid.nodes().collect();
    match analysis {
        AnalysisConfig::Waterfall { every } => {
            out.write("waterfall.csv", |w| trace.write_csv(&xs, w, *every))?;
        }
        AnalysisConfig::LevelSets {
            levels,
            include_edge,
            threshold,
            gradient_floor,
        } => {
            if *include_edge {
                let thr = threshold_of(trace, threshold);
                let track = edge_track(trace, grid, thr);
                out.write("level_set_edge.csv", |w| {
                    write_level_tracks_csv(&[&track], w)
                })?;
            }
            for &level in levels {
                let gamma0 =
                    detect_support_edge(trace.initial(), grid, level).ok_or_else(|| {
                        Error::config(format!("level {level} is not attained by the initial data"))
                    })?;
                let tracks = track_level_set(trace, grid, params, level, gamma0, *gradient_floor)?;
                let name = format!("level_set_{}.csv", level_tag(level));
                out.write(&name, |w| {
                    write_level_tracks_csv(&[&tracks.ode, &tracks.root], w)
                })?;
                let tag = level_tag(level);
                let dev = track_deviation(&tracks.ode, &tracks.root);
                info.push((format!("level_{tag}.ode_root_max_dev"), fmt17(dev)));
                info.push((
                    format!("level_{tag}.ode_root_max_dev_cells"),
                    fmt17(dev / grid.dx()),
                ));
                if let Some(term) = tracks.ode.termination {
                    info.push((format!("level_{tag}.ode_termination"), format!("{term:?}")));
                }
                checks.push(level_invariant_check(&tracks.root, trace, spec));
            }
        }
        AnalysisConfig::WaitingTime {
            monitor_x,
            threshold,
        } => {
            let thr = threshold_of(trace, threshold);
            let report = waiting_time(trace, grid, params, *monitor_x, thr)?;
            let text = report.to_key_value();
            let rows = text.lines().count();
            out.write("waiting_time.txt", |w| {
                w.write_all(text.as_bytes()).map(|_| rows)
            })?;
            info.push((
                "waiting_time".to_string(),
                report.detected_time.map_or("none".into(), fmt17),
            ));
        }
        AnalysisConfig::ExponentProfile {
            times_critical,
            threshold,
            offset_cells,
            window_cells,
            refine_edge,
        } => {
            let t_hat = critical_time_1d(params)?;
            let thr = threshold_of(trace, threshold);
            let window = ExponentWindow {
                offset_cells: *offset_cells,
                window_cells: *window_cells,
            };
            let mut fits: Vec<ExponentFit> = Vec::new();
            for (i, &factor) in times_critical.iter().enumerate() {
                let state = trace.nearest(factor * t_hat);
                let edge = detect_support_edge(state, grid, thr)
                    .ok_or_else(|| Error::config(format!("no support at t = {}", state.t)))?;
                let fit = if *refine_edge {
                    local_exponent_refined(state, grid, edge, window)?
                } else {
                    local_exponent(state, grid, edge, window)?
                };
                let name = format!("profile_{i}.csv");
                out.write(&name, |w| {
                    write_profile_csv(w, state, grid, &fit, params.p())
                })?;
                info.push((format!("exponent_{i}.t"), fmt17(fit.time)));
                info.push((format!("exponent_{i}.beta"), fmt17(fit.exponent)));
                info.push((format!("exponent_{i}.r2"), fmt17(fit.fit_quality)));
                info.push((format!("exponent_{i}.edge"), fmt17(fit.edge_position)));
                fits.push(fit);
            }
            out.write("exponent_fits.csv", |w| {
                writeln!(w, "{}", ExponentFit::CSV_HEADER)?;
                for f in &fits {
                    writeln!(w, "{}", f.csv_row())?;
                }
                Ok(fits.len())
            })?;
        }
        AnalysisConfig::BarrierCheck {
            check,
            delta,
            m,
            r,
            w,
            monitor_x,
            threshold,
        } => match check {
            BarrierKind::Memory => {
                let barrier = MemoryBarrier {
                    delta: delta.unwrap_or_else(|| params.critical_exponent()),
                    m: *m,
                    r: *r,
                    w: *w,
                };
                checks.push(barrier_check_memory(trace, grid, params, barrier)?);
            }
            BarrierKind::Bracket => {
                let thr = threshold_of(trace, threshold);
                let report = waiting_time(trace, grid, params, *monitor_x, thr)?;
                checks.push(barrier_check_bracket(&report, params)?);
            }
        },
        AnalysisConfig::Convergence {
            grids,
            center_at_midpoint,
        } => {
            let centering = if *center_at_midpoint {
                Centering::CellMidpoint
            } else {
                Centering::AsGiven
            };
            let table = convergence_study(spec, grids, centering)?;
            out.write("convergence.csv", |w| table.write_csv(w))?;
            let halving = table.l1_decreasing_by(1.5);
            checks.push(CheckOutcome {
                name: "convergence-l1-decrease".into(),
                passed: halving,
                value: table
                    .rows
                    .windows(2)
                    .map(|w| w[0].l1_err / w[1].l1_err)
                    .fold(f64::INFINITY, f64::min),
                detail: "min L1 error ratio per refinement, needs >= 1.5".into(),
            });
            let order = table.finest_l1_order().unwrap_or(f64::NAN);
            checks.push(CheckOutcome {
                name: "convergence-l1-order".into(),
                passed: order >= 0.8,
                value: order,
                detail: "observed L1 order on the finest pair, needs >= 0.8".into(),
            });
        }
        AnalysisConfig::Comparison { companion, role } => {
            let other = spec.with_initial(companion.clone());
            let (lower, upper) = match role {
                OrderRole::Lower => (&other, spec),
                OrderRole::Upper => (spec, &other),
            };
            let (outcome, _, _) = comparison_check(lower, upper, snapshots)?;
            checks.push(outcome);
        }
        AnalysisConfig::Arrival {
            x,
            threshold,
            tolerance,
        } => {
            let exact = spec
                .initial
                .barenblatt(params)?
                .ok_or_else(|| Error::config("arrival needs Barenblatt initial data"))?;
            let target = exact.time_of_radius((x - exact.center).abs())?;
            let thr = threshold_of(trace, threshold);
            let report = waiting_time(trace, grid, params, *x, thr)?;
            let text = format!("{}exact_arrival={}\n", report.to_key_value(), fmt17(target));
            let rows = text.lines().count();
            out.write("arrival.txt", |w| {
                w.write_all(text.as_bytes()).map(|_| rows)
            })?;
            let (passed, value) = match report.detected_time {
                Some(t) => ((t - target).abs() <= tolerance * target, t),
                None => (false, f64::NAN),
            };
            checks.push(CheckOutcome {
                name: "arrival".into(),
                passed,
                value,
                detail: format!("exact={} tolerance={tolerance}", fmt17(target)),
            });
        }
    }
    Ok(())
}

/// Largest gap between two tracks at common times.
fn track_deviation(a: &LevelTrack, b: &LevelTrack) -> f64 {
    a.positions
        .iter()
        .zip(&b.positions)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `|u(γ(t), t) - M|` against `10 newton_tol + 2 dx max|u_x|` on every snapshot.
fn level_invariant_check(
    track: &LevelTrack,
    trace: &SolveTrace,
    spec: &ProblemSpec,
) -> CheckOutcome {
    let grid = &spec.grid;
    let mut worst_ratio = 0.0f64;
    for (t, &x) in track.times.iter().zip(&track.positions) {
        let state = trace.nearest(*t);
        let u = interpolate(grid, &state.values, x);
        let slope = state
            .values
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() / grid.dx())
            .fold(0.0, f64::max);
        let bound = 10.0 * spec.integrator.newton_tol + 2.0 * grid.dx() * slope;
        worst_ratio = worst_ratio.max((u - track.level).abs() / bound);
    }
    CheckOutcome {
        name: format!("level-invariant-{}", level_tag(track.level)),
        passed: worst_ratio <= 1.0,
        value: worst_ratio,
        detail: "max |u(γ,t) - M| relative to its bound".into(),
    }
}

fn interpolate(grid: &Grid, values: &[f64], x: f64) -> f64 {
    let s = ((x - grid.x_left()) / grid.dx()).clamp(0.0, grid.n_cells() as f64);
    let j = (s.floor() as usize).min(grid.n_cells() - 1);
    let w = s - j as f64;
    values[j] + w * (values[j + 1] - values[j])
}

/// `x,u,barenblatt_ref,initial_ref`. Both references vanish at the fitted
/// edge `e`: `c (x-e)_+^{(p-1)/(p-2)}` with `c` matched to `u` over the fit
/// window, and the datum `(x-e)_+^{p/(p-2)}` translated to `e`.
fn write_profile_csv<W: Write>(
    w: &mut W,
    state: &crate::mol::GridState,
    grid: &Grid,
    fit: &ExponentFit,
    p: f64,
) -> std::io::Result<usize> {
    let e = fit.edge_position;
    let beta = (p - 1.0) / (p - 2.0);
    let window: Vec<(f64, f64)> = grid
        .nodes()
        .zip(&state.values)
        .filter(|(x, u)| *x >= fit.window[0] && *x <= fit.window[1] && **u > 0.0 && *x > e)
        .map(|(x, u)| (x, *u))
        .collect();
    let c = if window.is_empty() {
        1.0
    } else {
        let mean: f64 = window
            .iter()
            .map(|(x, u)| u.ln() - beta * (x - e).ln())
            .sum::<f64>()
            / window.len() as f64;
        mean.exp()
    };
    writeln!(w, "x,u,barenblatt_ref,initial_ref")?;
    let mut rows = 0;
    for (x, u) in grid.nodes().zip(&state.values) {
        writeln!(
            w,
            "{},{},{},{}",
            fmt17(x),
            fmt17(*u),
            fmt17(c * pow_pos(x - e, beta)),
            fmt17(pow_pos(x - e, p / (p - 2.0)))
        )?;
        rows += 1;
    }
    Ok(rows)
}
