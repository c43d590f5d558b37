//! Level-set curves `u(γ(t), t) = M`.
//!
//! Two trackers: explicit Euler on the interface ODE
//! `γ' = -(p-1) |u_x|^{p-3} sign(u_x) u_xx`, and direct root finding on each
//! snapshot. The root tracker is the reference; the ODE tracker degrades
//! where `u_x` is small.

use std::io::Write;

use super::edge::detect_support_edge;
use crate::analytic::PParameters;
use crate::error::{Error, Result};
use crate::mol::{Grid, GridState, SolveTrace};
use crate::numeric::{fmt17, sign};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackMethod {
    Ode,
    Root,
}

impl TrackMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TrackMethod::Ode => "ode",
            TrackMethod::Root => "root",
        }
    }
}

/// Why a track stopped before the last snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrackTermination {
    ExitedDomain { t: f64 },
    DegenerateGradient { t: f64 },
    LevelLost { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelTrack {
    pub level: f64,
    pub method: TrackMethod,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub termination: Option<TrackTermination>,
}

impl LevelTrack {
    fn new(level: f64, method: TrackMethod) -> Self {
        Self {
            level,
            method,
            times: Vec::new(),
            positions: Vec::new(),
            termination: None,
        }
    }

    fn push(&mut self, t: f64, x: f64) {
        self.times.push(t);
        self.positions.push(x);
    }

    /// Position at the recorded time nearest to `t`.
    pub fn position_near(&self, t: f64) -> Option<f64> {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        Some(self.positions[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetTracks {
    pub ode: LevelTrack,
    pub root: LevelTrack,
}

/// Writes tracks as CSV `t,gamma,method`; returns the row count.
pub fn write_level_tracks_csv<W: Write>(
    tracks: &[&LevelTrack],
    out: &mut W,
) -> std::io::Result<usize> {
    writeln!(out, "t,gamma,method")?;
    let mut rows = 0;
    for tr in tracks {
        for (t, x) in tr.times.iter().zip(&tr.positions) {
            writeln!(out, "{},{},{}", fmt17(*t), fmt17(*x), tr.method.as_str())?;
            rows += 1;
        }
    }
    Ok(rows)
}

/// Linear interpolation of nodal values to `x` using cell `[x_j, x_{j+1}]`.
fn interp(grid: &Grid, values: &[f64], x: f64, lo: usize, hi: usize) -> f64 {
    let s = (x - grid.x_left()) / grid.dx();
    let j = (s.floor().max(lo as f64) as usize).min(hi - 1);
    let w = s - j as f64;
    values[j] + w * (values[j + 1] - values[j])
}

/// Central first and second differences at interior nodes; ends copied
/// from their neighbours.
fn nodal_derivatives(state: &GridState, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let u = &state.values;
    let n = u.len();
    let dx = grid.dx();
    let mut ux = vec![0.0; n];
    let mut uxx = vec![0.0; n];
    for i in 1..n - 1 {
        ux[i] = (u[i + 1] - u[i - 1]) / (2.0 * dx);
        uxx[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dx * dx);
    }
    ux[0] = ux[1];
    uxx[0] = uxx[1];
    ux[n - 1] = ux[n - 2];
    uxx[n - 1] = uxx[n - 2];
    (ux, uxx)
}

/// Crossing of `u = level` nearest to `near`, by bracketing on each cell.
fn nearest_root(state: &GridState, grid: &Grid, level: f64, near: f64) -> Option<f64> {
    let u = &state.values;
    let mut best: Option<f64> = None;
    for j in 0..u.len() - 1 {
        let (a, b) = (u[j] - level, u[j + 1] - level);
        if a == 0.0 || a * b < 0.0 {
            let x = if a == 0.0 {
                grid.x(j)
            } else {
                grid.x(j) + grid.dx() * a / (a - b)
            };
            if best.is_none_or(|bx| (x - near).abs() < (bx - near).abs()) {
                best = Some(x);
            }
        }
    }
    best
}

/// Tracks the level `level > 0` starting from `gamma0` on the first snapshot.
pub fn track_level_set(
    trace: &SolveTrace,
    grid: &Grid,
    params: PParameters,
    level: f64,
    gamma0: f64,
    gradient_floor: f64,
) -> Result<LevelSetTracks> {
    if !(level > 0.0) {
        return Err(Error::invalid(
            "level must be > 0; the support edge is tracked by detect_support_edge",
        ));
    }
    if !grid.contains(gamma0) {
        return Err(Error::invalid(format!("γ0 = {gamma0} outside the grid")));
    }
    let n = grid.n_nodes();
    let first = trace.initial();
    let (ux0, _) = nodal_derivatives(first, grid);
    let u_at = interp(grid, &first.values, gamma0, 0, n - 1);
    let slack = 1e-12 + grid.dx() * interp(grid, &ux0, gamma0, 0, n - 1).abs();
    if (u_at - level).abs() > slack {
        return Err(Error::invalid(format!(
            "initial value {u_at} at γ0 = {gamma0} does not match level {level}"
        )));
    }

    let p = params.p();
    let mut ode = LevelTrack::new(level, TrackMethod::Ode);
    let mut root = LevelTrack::new(level, TrackMethod::Root);

    let mut gamma = gamma0;
    let interior = (grid.x(1), grid.x(n - 2));
    for (k, snap) in trace.snapshots.iter().enumerate() {
        ode.push(snap.t, gamma);
        let Some(next) = trace.snapshots.get(k + 1) else {
            break;
        };
        let (ux, uxx) = nodal_derivatives(snap, grid);
        let gx = interp(grid, &ux, gamma, 1, n - 2);
        let gxx = interp(grid, &uxx, gamma, 1, n - 2);
        if gx.abs() < gradient_floor {
            ode.termination = Some(TrackTermination::DegenerateGradient { t: snap.t });
            break;
        }
        let velocity = -(p - 1.0) * gx.abs().powf(p - 3.0) * sign(gx) * gxx;
        gamma += (next.t - snap.t) * velocity;
        if !(gamma >= interior.0 && gamma <= interior.1) {
            ode.termination = Some(TrackTermination::ExitedDomain { t: next.t });
            break;
        }
    }

    let mut prev = gamma0;
    for snap in &trace.snapshots {
        match nearest_root(snap, grid, level, prev) {
            Some(x) => {
                root.push(snap.t, x);
                prev = x;
            }
            None => {
                root.termination = Some(TrackTermination::LevelLost { t: snap.t });
                break;
            }
        }
    }
    Ok(LevelSetTracks { ode, root })
}

/// The `M = 0⁺` curve: support edge at `threshold` on every snapshot.
pub fn edge_track(trace: &SolveTrace, grid: &Grid, threshold: f64) -> LevelTrack {
    let mut track = LevelTrack::new(0.0, TrackMethod::Root);
    for snap in &trace.snapshots {
        match detect_support_edge(snap, grid, threshold) {
            Some(x) => track.push(snap.t, x),
            None => {
                track.termination = Some(TrackTermination::LevelLost { t: snap.t });
                break;
            }
        }
    }
    track
}
