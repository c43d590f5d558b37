use std::fmt::Write as _;

use crate::analytic::{barrier_upper_time_limit, critical_time_1d, PParameters};
use crate::error::Result;
use crate::mol::{Grid, SolveTrace};
use crate::numeric::fmt17;

/// First time the solution at a monitored node exceeds a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitingTimeReport {
    /// Abscissa of the monitored node (after snapping).
    pub monitor_x: f64,
    pub threshold: f64,
    pub detected_time: Option<f64>,
    /// Conjectured critical time `t_hat`.
    pub lower: f64,
    /// Barrier arrival limit `t2(0)`.
    pub upper: f64,
    pub grid_n: usize,
}

impl WaitingTimeReport {
    pub fn to_key_value(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "monitor_x={}", fmt17(self.monitor_x));
        let _ = writeln!(s, "threshold={}", fmt17(self.threshold));
        match self.detected_time {
            Some(t) => {
                let _ = writeln!(s, "detected_time={}", fmt17(t));
            }
            None => s.push_str("detected_time=none\n"),
        }
        let _ = writeln!(s, "bracket_lower={}", fmt17(self.lower));
        let _ = writeln!(s, "bracket_upper={}", fmt17(self.upper));
        let _ = writeln!(s, "grid_n={}", self.grid_n);
        s
    }
}

/// Detects when `u(monitor_x, t)` first exceeds `threshold`, interpolating
/// linearly in time between the straddling snapshots.
pub fn waiting_time(
    trace: &SolveTrace,
    grid: &Grid,
    params: PParameters,
    monitor_x: f64,
    threshold: f64,
) -> Result<WaitingTimeReport> {
    let node = grid.nearest_node(monitor_x);
    let detected_time = trace
        .snapshots
        .iter()
        .position(|s| s.values[node] > threshold)
        .map(|k| {
            if k == 0 {
                return trace.snapshots[0].t;
            }
            let (a, b) = (&trace.snapshots[k - 1], &trace.snapshots[k]);
            let (ua, ub) = (a.values[node], b.values[node]);
            let w = ((threshold - ua) / (ub - ua)).clamp(0.0, 1.0);
            a.t + w * (b.t - a.t)
        });
    Ok(WaitingTimeReport {
        monitor_x: grid.x(node),
        threshold,
        detected_time,
        lower: critical_time_1d(params)?,
        upper: barrier_upper_time_limit(params)?,
        grid_n: grid.n_cells(),
    })
}

/// Richardson extrapolation of a quantity computed on grids `N, 2N, 4N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Richardson {
    pub extrapolated: f64,
    /// Observed order, or `None` when the three values are not in the
    /// asymptotic (monotone, contracting) regime and first order was assumed.
    pub observed_order: Option<f64>,
}

/// Extrapolates from values on successively halved grid spacings.
pub fn richardson_extrapolate(coarse: f64, medium: f64, fine: f64) -> Richardson {
    let d1 = coarse - medium;
    let d2 = medium - fine;
    let ratio = d1 / d2;
    let observed_order = (d2 != 0.0 && ratio > 1.0 && ratio.is_finite()).then(|| ratio.log2());
    let order = observed_order.unwrap_or(1.0);
    let extrapolated = if d2 == 0.0 {
        fine
    } else {
        fine - d2 / (2f64.powf(order) - 1.0)
    };
    Richardson {
        extrapolated,
        observed_order,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::{build_grid, GridState, SolveStats};

    fn trace_from(grid: &Grid, times: &[f64], f: impl Fn(f64, f64) -> f64) -> SolveTrace {
        SolveTrace {
            snapshots: times
                .iter()
                .map(|&t| GridState {
                    t,
                    values: grid.nodes().map(|x| f(x, t)).collect(),
                })
                .collect(),
            stats: SolveStats::default(),
        }
    }

    #[test]
    fn zero_solution_never_departs() {
        let g = build_grid(-1.0, 1.0, 16).unwrap();
        let tr = trace_from(&g, &[0.0, 0.1, 0.2], |_, _| 0.0);
        let pp = PParameters::one_d(4.0).unwrap();
        let r = waiting_time(&tr, &g, pp, 0.0, 1e-4).unwrap();
        assert_eq!(r.detected_time, None);
        assert!((r.lower - 1.0 / 48.0).abs() < 1e-15);
        assert!((r.upper - 1.0 / 32.0).abs() < 1e-15);
        assert!(r.to_key_value().contains("detected_time=none"));
    }

    #[test]
    fn interpolates_in_time_and_is_monotone_in_threshold() {
        let g = build_grid(-1.0, 1.0, 16).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.01).collect();
        // u(0,t) = max(t - 0.05, 0)^2
        let tr = trace_from(&g, &times, |_, t| (t - 0.05f64).max(0.0).powi(2));
        let pp = PParameters::one_d(4.0).unwrap();
        let r = waiting_time(&tr, &g, pp, 0.01, 1e-4).unwrap();
        assert_eq!(r.monitor_x, 0.0);
        let t = r.detected_time.unwrap();
        assert!(t > 0.05 && t < 0.07, "{t}");
        let mut prev = 0.0;
        for thr in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
            let t = waiting_time(&tr, &g, pp, 0.0, thr)
                .unwrap()
                .detected_time
                .unwrap();
            assert!(t >= prev);
            prev = t;
        }
    }

    #[test]
    fn richardson_recovers_first_and_second_order() {
        let exact = 0.02;
        for order in [1.0, 2.0] {
            let v = |h: f64| exact + 0.3 * h.powf(order);
            let r = richardson_extrapolate(v(0.04), v(0.02), v(0.01));
            assert!((r.extrapolated - exact).abs() < 1e-12);
            assert!((r.observed_order.unwrap() - order).abs() < 1e-9);
        }
        let r = richardson_extrapolate(1.0, 1.2, 1.1);
        assert_eq!(r.observed_order, None);
        let r = richardson_extrapolate(1.0, 1.0, 1.0);
        assert_eq!(r.extrapolated, 1.0);
    }
}
