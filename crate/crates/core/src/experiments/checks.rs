use serde::Serialize;

use crate::analytic::{barrier_upper_time_limit, critical_time_1d, memory_horizon, PParameters};
use crate::error::{Error, Result};
use crate::interface::WaitingTimeReport;
use crate::mol::{
    integrate, sample_initial_data, uniform_snapshots, Grid, ProblemSpec, SolveTrace,
};

/// Relative band around the bracket `[ĥt, t₂(0)]`.
pub const BRACKET_BAND: f64 = 0.1;
/// Slack of the memory-domination check, relative to `M`.
pub const MEMORY_SLACK: f64 = 1e-6;
/// Allowed ordering violation, relative to the solution scale.
pub const COMPARISON_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// The measured quantity (violation, detected time, ...).
    pub value: f64,
    pub detail: String,
}

impl CheckOutcome {
    pub fn status(&self) -> &'static str {
        if self.passed {
            "pass"
        } else {
            "fail"
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryBarrier {
    pub delta: f64,
    pub m: f64,
    pub r: f64,
    /// Base point; `None` takes the left support edge of the initial data.
    pub w: Option<f64>,
}

/// The last zero node before the first positive value of `values`.
fn left_support_point(values: &[f64], grid: &Grid) -> Option<f64> {
    let first = values.iter().position(|&v| v > 0.0)?;
    Some(grid.x(first.saturating_sub(1)))
}

/// Checks `u ≤ M (1 - t/ĥT)^{-1/(p-2)} (|x-w|/r)^δ` for `t ≤ min(ĥT/2, t_end)`.
///
/// The bound is the scaled separable supersolution, which equals
/// `M (|x-w|/r)^δ` at `t = 0`. A datum that is not below it is a
/// configuration error rather than a failed check.
pub fn barrier_check_memory(
    trace: &SolveTrace,
    grid: &Grid,
    params: PParameters,
    barrier: MemoryBarrier,
) -> Result<CheckOutcome> {
    let MemoryBarrier { delta, m, r, w } = barrier;
    let horizon = memory_horizon(params, delta, m, r).map_err(|e| Error::config(e.to_string()))?;
    let initial = trace.initial();
    let w = match w {
        Some(w) => w,
        None => left_support_point(&initial.values, grid).unwrap_or(grid.x_left()),
    };
    let bound = |x: f64, t: f64| {
        let p = params.p();
        m * (1.0 - t / horizon).powf(-1.0 / (p - 2.0)) * ((x - w).abs() / r).powf(delta)
    };
    let pre_slack = 1e-12 * m;
    for (x, &u) in grid.nodes().zip(&initial.values) {
        if u > bound(x, 0.0) + pre_slack {
            return Err(Error::config(format!(
                "initial datum violates u0 <= M |x-w|^δ / r^δ at x = {x} (u0 = {u}, bound = {})",
                bound(x, 0.0)
            )));
        }
    }
    let t_cut = (0.5 * horizon).min(initial.t.max(trace.last().t));
    let mut worst = 0.0f64;
    let mut worst_at = (0.0, 0.0);
    let mut checked = 0usize;
    for snap in trace.snapshots.iter().filter(|s| s.t <= t_cut) {
        checked += 1;
        for (x, &u) in grid.nodes().zip(&snap.values) {
            let v = u - bound(x, snap.t);
            if v > worst {
                worst = v;
                worst_at = (x, snap.t);
            }
        }
    }
    Ok(CheckOutcome {
        name: "barrier-memory".into(),
        passed: worst <= MEMORY_SLACK * m,
        value: worst,
        detail: format!(
            "horizon={:.17e} t_cut={:.17e} w={w} snapshots={checked} max_violation={worst:.3e} at x={} t={}",
            horizon, t_cut, worst_at.0, worst_at.1
        ),
    })
}

/// Pass iff the detected time lies in `[0.9 ĥt, 1.1 t₂(0)]`.
pub fn barrier_check_bracket(
    report: &WaitingTimeReport,
    params: PParameters,
) -> Result<CheckOutcome> {
    let lower = (1.0 - BRACKET_BAND) * critical_time_1d(params)?;
    let upper = (1.0 + BRACKET_BAND) * barrier_upper_time_limit(params)?;
    let (passed, value) = match report.detected_time {
        Some(t) => (t >= lower && t <= upper, t),
        None => (false, f64::NAN),
    };
    Ok(CheckOutcome {
        name: "barrier-bracket".into(),
        passed,
        value,
        detail: format!(
            "detected_time={} band=[{lower:.17e}, {upper:.17e}]",
            report
                .detected_time
                .map_or("none".to_string(), |t| format!("{t:.17e}"))
        ),
    })
}

/// Solves both problems on the same snapshots and measures `max (u_lower - u_upper)_+`.
pub fn comparison_check(
    lower: &ProblemSpec,
    upper: &ProblemSpec,
    snapshots: usize,
) -> Result<(CheckOutcome, SolveTrace, SolveTrace)> {
    if lower.grid != upper.grid {
        return Err(Error::config("comparison runs must share the grid"));
    }
    if lower.bc_left > upper.bc_left || lower.bc_right > upper.bc_right {
        return Err(Error::config("comparison boundary data are not ordered"));
    }
    if lower.params != upper.params || lower.t_end != upper.t_end {
        return Err(Error::config("comparison runs must share p and t_end"));
    }
    let a = sample_initial_data(lower)?;
    let b = sample_initial_data(upper)?;
    if let Some(i) = (0..a.values.len()).find(|&i| a.values[i] > b.values[i]) {
        return Err(Error::config(format!(
            "comparison initial data are not ordered at x = {}",
            lower.grid.x(i)
        )));
    }
    let times = uniform_snapshots(lower.t_end, snapshots);
    let ta = integrate(lower, &times, &mut [])?;
    let tb = integrate(upper, &times, &mut [])?;
    let outcome = ordering_outcome(&ta, &tb);
    Ok((outcome, ta, tb))
}

pub(crate) fn ordering_outcome(lower: &SolveTrace, upper: &SolveTrace) -> CheckOutcome {
    let scale = lower
        .max_value()
        .abs()
        .max(upper.max_value().abs())
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for (sa, sb) in lower.snapshots.iter().zip(&upper.snapshots) {
        for (a, b) in sa.values.iter().zip(&sb.values) {
            worst = worst.max(a - b);
        }
    }
    CheckOutcome {
        name: "comparison".into(),
        passed: worst <= COMPARISON_TOLERANCE * scale,
        value: worst,
        detail: format!("max_violation={worst:.3e} scale={scale:.17e}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::{build_grid, IntegratorSettings, Profile};

    fn pp() -> PParameters {
        PParameters::one_d(4.0).unwrap()
    }

    fn spec(initial: Profile, bc_right: f64, t_end: f64) -> ProblemSpec {
        ProblemSpec {
            params: pp(),
            grid: build_grid(-1.0, 1.0, 100).unwrap(),
            bc_left: 0.0,
            bc_right,
            initial,
            t_end,
            integrator: IntegratorSettings::default(),
        }
    }

    fn report(t: Option<f64>) -> WaitingTimeReport {
        WaitingTimeReport {
            monitor_x: 0.0,
            threshold: 1e-4,
            detected_time: t,
            lower: 1.0 / 48.0,
            upper: 1.0 / 32.0,
            grid_n: 800,
        }
    }

    #[test]
    fn bracket_examples() {
        assert!(
            barrier_check_bracket(&report(Some(0.0208)), pp())
                .unwrap()
                .passed
        );
        assert!(
            !barrier_check_bracket(&report(Some(0.05)), pp())
                .unwrap()
                .passed
        );
        assert!(
            !barrier_check_bracket(&report(Some(0.015)), pp())
                .unwrap()
                .passed
        );
        assert!(!barrier_check_bracket(&report(None), pp()).unwrap().passed);
    }

    #[test]
    fn memory_zero_solution_and_bad_data() {
        let barrier = MemoryBarrier {
            delta: 2.0,
            m: 1.0,
            r: 1.0,
            w: Some(0.0),
        };
        let s = spec(Profile::Constant { value: 0.0 }, 0.0, 0.01);
        let tr = integrate(&s, &uniform_snapshots(0.01, 4), &mut []).unwrap();
        let out = barrier_check_memory(&tr, &s.grid, pp(), barrier).unwrap();
        assert!(out.passed);
        assert_eq!(out.value, 0.0);

        let s = spec(Profile::Constant { value: 1.0 }, 1.0, 0.0);
        let tr = integrate(&s, &[0.0], &mut []).unwrap();
        let err = barrier_check_memory(&tr, &s.grid, pp(), barrier).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn memory_flagship_coarse() {
        // u(0, t) picks up an O(dx²) positive value, so N = 100 is too coarse.
        let mut s = spec(Profile::critical_power(), 1.0, 1.0 / 96.0);
        s.grid = build_grid(-1.0, 1.0, 400).unwrap();
        let tr = integrate(&s, &uniform_snapshots(s.t_end, 20), &mut []).unwrap();
        let barrier = MemoryBarrier {
            delta: 2.0,
            m: 1.0,
            r: 1.0,
            w: None,
        };
        let out = barrier_check_memory(&tr, &s.grid, pp(), barrier).unwrap();
        assert!(out.passed, "{}", out.detail);
        assert!(out.detail.contains("w=0"), "{}", out.detail);
    }

    #[test]
    fn comparison_identical_and_rejected() {
        let a = spec(Profile::critical_power(), 1.0, 0.005);
        let (out, _, _) = comparison_check(&a, &a, 5).unwrap();
        assert!(out.passed);
        assert_eq!(out.value, 0.0);

        let mut b = a.clone();
        b.grid = build_grid(-1.0, 1.0, 120).unwrap();
        assert!(comparison_check(&a, &b, 5).is_err());
        let c = a.with_initial(Profile::Constant { value: 0.5 });
        assert!(comparison_check(&c, &a, 5).is_err());
    }
}
