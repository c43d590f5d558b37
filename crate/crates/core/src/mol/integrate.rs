//! Adaptive time integration with step-doubling error control.

use std::fmt::Write as _;
use std::io::Write;

use super::problem::{sample_initial_data, GridState, ProblemSpec, Scheme};
use super::stepper::{implicit_step, StepOutcome, Workspace};
use crate::error::{Error, Result};
use crate::numeric::fmt17;

/// Largest per-step growth of the step size. Keeps the accepted BDF2 path
/// below the zero-stability limit `1 + sqrt(2)` of the step ratio.
const MAX_GROWTH: f64 = 2.0;
const MIN_SHRINK: f64 = 0.2;
const SAFETY: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub newton_iters_total: usize,
    pub min_dt_used: f64,
    /// Most negative nodal value over all accepted states (0 if none).
    pub max_undershoot: f64,
}

impl Default for SolveStats {
    fn default() -> Self {
        Self {
            steps_accepted: 0,
            steps_rejected: 0,
            newton_iters_total: 0,
            min_dt_used: f64::INFINITY,
            max_undershoot: 0.0,
        }
    }
}

impl SolveStats {
    /// Flat `key=value` block, one entry per line.
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "steps_accepted={}", self.steps_accepted);
        let _ = writeln!(s, "steps_rejected={}", self.steps_rejected);
        let _ = writeln!(s, "newton_iters_total={}", self.newton_iters_total);
        let _ = writeln!(s, "min_dt_used={}", fmt17(self.min_dt_used));
        let _ = writeln!(s, "max_undershoot={}", fmt17(self.max_undershoot));
        s
    }
}

/// Snapshots at the requested times plus integrator statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTrace {
    pub snapshots: Vec<GridState>,
    pub stats: SolveStats,
}

impl SolveTrace {
    pub fn initial(&self) -> &GridState {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &GridState {
        self.snapshots.last().expect("trace is never empty")
    }

    /// Snapshot whose time is nearest to `t`.
    pub fn nearest(&self, t: f64) -> &GridState {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("trace is never empty")
    }

    pub fn max_value(&self) -> f64 {
        self.snapshots
            .iter()
            .map(GridState::max_value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Long-format CSV `t,x,u`, one row per (snapshot, node). Returns the row count.
    pub fn write_csv<W: Write>(
        &self,
        xs: &[f64],
        out: &mut W,
        every: usize,
    ) -> std::io::Result<usize> {
        writeln!(out, "t,x,u")?;
        let every = every.max(1);
        let last = self.snapshots.len() - 1;
        let mut rows = 0;
        for (k, snap) in self.snapshots.iter().enumerate() {
            if k % every != 0 && k != last {
                continue;
            }
            let t = fmt17(snap.t);
            for (x, u) in xs.iter().zip(&snap.values) {
                writeln!(out, "{t},{},{}", fmt17(*x), fmt17(*u))?;
                rows += 1;
            }
        }
        Ok(rows)
    }
}

/// Normalizes requested snapshot times: sorted, inside `[0, t_end]`, with
/// both ends present.
fn snapshot_schedule(spec: &ProblemSpec, requested: &[f64]) -> Result<Vec<f64>> {
    let mut times = Vec::with_capacity(requested.len() + 2);
    times.push(0.0);
    let mut last = 0.0;
    for &t in requested {
        if !(t >= 0.0 && t <= spec.t_end) {
            return Err(Error::config(format!(
                "snapshot time {t} outside [0, {}]",
                spec.t_end
            )));
        }
        if t < last {
            return Err(Error::config("snapshot times must be sorted"));
        }
        last = t;
        if t > *times.last().unwrap() {
            times.push(t);
        }
    }
    if spec.t_end > *times.last().unwrap() {
        times.push(spec.t_end);
    }
    Ok(times)
}

/// `n` uniformly spaced snapshot times over `(0, t_end]`.
pub fn uniform_snapshots(t_end: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| {
            if k == n {
                t_end
            } else {
                t_end * k as f64 / n as f64
            }
        })
        .collect()
}

/// Observer invoked after every accepted step.
pub type Observer<'a> = &'a mut dyn FnMut(&GridState);

/// Integrates `spec` from `t = 0` to `t_end`, landing exactly on every
/// snapshot time.
pub fn integrate(
    spec: &ProblemSpec,
    snapshot_times: &[f64],
    observers: &mut [Observer<'_>],
) -> Result<SolveTrace> {
    let schedule = snapshot_schedule(spec, snapshot_times)?;
    let settings = spec.integrator;
    let initial = sample_initial_data(spec)?;
    let mut stats = SolveStats::default();
    let mut snapshots = Vec::with_capacity(schedule.len());
    snapshots.push(initial.clone());
    stats.max_undershoot = initial.min_value().min(0.0);

    let mut current = initial;
    let mut previous: Option<GridState> = None;
    let mut h = settings.dt_init;
    let mut ws = Workspace::default();
    let n = current.values.len();

    for &target in &schedule[1..] {
        while current.t < target {
            let remaining = target - current.t;
            let mut h_try = h.min(settings.dt_max);
            let landing = h_try >= remaining;
            if landing {
                h_try = remaining;
            } else if h_try > 0.5 * remaining {
                h_try = 0.5 * remaining;
            }

            let history = match settings.scheme {
                Scheme::Bdf2 => previous.as_ref(),
                Scheme::Bdf1 => None,
            };
            let order = if history.is_some() { 2 } else { 1 };

            let full = implicit_step(spec, &current, history, h_try, &mut ws)?;
            let (full, it_full) = match full {
                StepOutcome::Accepted {
                    state,
                    newton_iters,
                } => (Some(state), newton_iters),
                StepOutcome::Rejected { newton_iters, .. } => (None, newton_iters),
            };
            stats.newton_iters_total += it_full;
            let Some(full) = full else {
                stats.steps_rejected += 1;
                h = 0.5 * h_try;
                continue;
            };
            let halves = two_half_steps(spec, &current, history, h_try, &mut ws, &mut stats)?;
            let Some((mid, mut end)) = halves else {
                stats.steps_rejected += 1;
                h = 0.5 * h_try;
                continue;
            };

            let divisor = if order == 2 { 3.0 } else { 1.0 };
            let mut err: f64 = 0.0;
            for i in 1..n - 1 {
                let e = (end.values[i] - full.values[i]).abs() / divisor;
                let scale = settings.atol
                    + settings.rtol * current.values[i].abs().max(end.values[i].abs());
                err = err.max(e / scale);
            }
            if err.is_nan() {
                return Err(Error::Solver {
                    t: current.t,
                    reason: "non-finite error estimate".into(),
                });
            }
            let expo = 1.0 / (f64::from(order) + 1.0);
            let factor = if err == 0.0 {
                MAX_GROWTH
            } else {
                (SAFETY * err.powf(-expo)).clamp(MIN_SHRINK, MAX_GROWTH)
            };
            if err > 1.0 {
                stats.steps_rejected += 1;
                h = h_try * factor.min(0.9);
                continue;
            }

            if landing {
                end.t = target;
            }
            if let Some(i) = end.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::Solver {
                    t: end.t,
                    reason: format!("non-finite value at node {i}"),
                });
            }
            stats.steps_accepted += 1;
            stats.min_dt_used = stats.min_dt_used.min(h_try);
            stats.max_undershoot = stats.max_undershoot.min(end.min_value());
            for obs in observers.iter_mut() {
                obs(&end);
            }
            let truncated = h_try < h.min(settings.dt_max);
            h = if truncated {
                (h_try * factor).max(h * factor.min(1.0))
            } else {
                h_try * factor
            };
            previous = Some(mid);
            current = end;
        }
        snapshots.push(current.clone());
    }
    Ok(SolveTrace { snapshots, stats })
}

fn two_half_steps(
    spec: &ProblemSpec,
    current: &GridState,
    history: Option<&GridState>,
    h: f64,
    ws: &mut Workspace,
    stats: &mut SolveStats,
) -> Result<Option<(GridState, GridState)>> {
    let half = 0.5 * h;
    let mid = match implicit_step(spec, current, history, half, ws)? {
        StepOutcome::Accepted {
            state,
            newton_iters,
        } => {
            stats.newton_iters_total += newton_iters;
            state
        }
        StepOutcome::Rejected { newton_iters, .. } => {
            stats.newton_iters_total += newton_iters;
            return Ok(None);
        }
    };
    let second_history = history.map(|_| current);
    let end = match implicit_step(spec, &mid, second_history, half, ws)? {
        StepOutcome::Accepted {
            state,
            newton_iters,
        } => {
            stats.newton_iters_total += newton_iters;
            state
        }
        StepOutcome::Rejected { newton_iters, .. } => {
            stats.newton_iters_total += newton_iters;
            return Ok(None);
        }
    };
    Ok(Some((mid, end)))
}

/// Nodal max norm and trapezoidal L1 norm of a state error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub max_norm: f64,
    pub l1_norm: f64,
}

pub fn error_norms(state: &GridState, xs: &[f64], exact: impl Fn(f64) -> f64) -> ErrorNorms {
    let errs: Vec<f64> = xs
        .iter()
        .zip(&state.values)
        .map(|(&x, &u)| (u - exact(x)).abs())
        .collect();
    let max_norm = errs.iter().copied().fold(0.0, f64::max);
    let l1_norm = errs
        .windows(2)
        .zip(xs.windows(2))
        .map(|(e, x)| 0.5 * (e[0] + e[1]) * (x[1] - x[0]))
        .sum();
    ErrorNorms { max_norm, l1_norm }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::PParameters;
    use crate::mol::grid::build_grid;
    use crate::mol::problem::{IntegratorSettings, Profile};

    fn spec(n: usize, initial: Profile, bc: (f64, f64), t_end: f64) -> ProblemSpec {
        ProblemSpec {
            params: PParameters::one_d(4.0).unwrap(),
            grid: build_grid(-1.0, 1.0, n).unwrap(),
            bc_left: bc.0,
            bc_right: bc.1,
            initial,
            t_end,
            integrator: IntegratorSettings::default(),
        }
    }

    #[test]
    fn zero_horizon_gives_initial_snapshot_only() {
        let s = spec(16, Profile::critical_power(), (0.0, 1.0), 0.0);
        let tr = integrate(&s, &[], &mut []).unwrap();
        assert_eq!(tr.snapshots.len(), 1);
        assert_eq!(tr.snapshots[0].t, 0.0);
        assert_eq!(tr.stats.steps_accepted, 0);
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let s = spec(32, Profile::Constant { value: 0.0 }, (0.0, 0.0), 0.1);
        let tr = integrate(&s, &uniform_snapshots(0.1, 5), &mut []).unwrap();
        for snap in &tr.snapshots {
            assert!(snap.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn lands_on_snapshots_and_pins_boundaries() {
        let s = spec(40, Profile::critical_power(), (0.0, 1.0), 0.01);
        let times = [0.001, 0.0025, 0.0075];
        let mut observed = 0usize;
        let mut pinned = true;
        let mut obs = |st: &GridState| {
            observed += 1;
            pinned &= st.values[0] == 0.0 && st.values[40] == 1.0;
        };
        let tr = integrate(&s, &times, &mut [&mut obs]).unwrap();
        let got: Vec<f64> = tr.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(got, vec![0.0, 0.001, 0.0025, 0.0075, 0.01]);
        assert!(pinned);
        assert_eq!(observed, tr.stats.steps_accepted);
        assert!(tr.stats.min_dt_used > 0.0);
    }

    #[test]
    fn rejects_bad_snapshot_times() {
        let s = spec(16, Profile::critical_power(), (0.0, 1.0), 0.01);
        assert!(integrate(&s, &[0.02], &mut []).is_err());
        assert!(integrate(&s, &[0.005, 0.001], &mut []).is_err());
    }

    #[test]
    fn runs_are_bit_identical() {
        let s = spec(64, Profile::critical_power(), (0.0, 1.0), 0.005);
        let a = integrate(&s, &uniform_snapshots(0.005, 4), &mut []).unwrap();
        let b = integrate(&s, &uniform_snapshots(0.005, 4), &mut []).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bdf1_and_bdf2_agree_loosely() {
        let mut s = spec(32, Profile::critical_power(), (0.0, 1.0), 0.005);
        let b2 = integrate(&s, &[], &mut []).unwrap();
        s.integrator.scheme = Scheme::Bdf1;
        let b1 = integrate(&s, &[], &mut []).unwrap();
        let dev = b1
            .last()
            .values
            .iter()
            .zip(&b2.last().values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(dev < 1e-4, "{dev}");
    }

    #[test]
    fn error_norm_examples() {
        let g = build_grid(-1.0, 1.0, 1000).unwrap();
        let xs: Vec<f64> = g.nodes().collect();
        let exact = |x: f64| x.sin();
        let st = GridState {
            t: 0.0,
            values: xs.iter().map(|&x| exact(x)).collect(),
        };
        let e = error_norms(&st, &xs, exact);
        assert_eq!((e.max_norm, e.l1_norm), (0.0, 0.0));
        let shifted = GridState {
            t: 0.0,
            values: xs.iter().map(|&x| exact(x) + 0.25).collect(),
        };
        assert!((error_norms(&shifted, &xs, exact).max_norm - 0.25).abs() < 1e-15);
        let abs = GridState {
            t: 0.0,
            values: xs.iter().map(|x| x.abs()).collect(),
        };
        let e = error_norms(&abs, &xs, |_| 0.0);
        assert!((e.l1_norm - 1.0).abs() < 1e-5);
    }

    #[test]
    fn csv_has_one_row_per_node_and_snapshot() {
        let s = spec(8, Profile::critical_power(), (0.0, 1.0), 0.001);
        let tr = integrate(&s, &[0.0005], &mut []).unwrap();
        let xs: Vec<f64> = s.grid.nodes().collect();
        let mut buf = Vec::new();
        let rows = tr.write_csv(&xs, &mut buf, 1).unwrap();
        assert_eq!(rows, 3 * 9);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,u\n"));
        assert_eq!(text.lines().count(), 28);
        let kv = tr.stats.to_key_value();
        assert!(kv.contains("steps_accepted="));
    }
}
