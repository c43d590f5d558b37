use crate::mol::{Grid, GridState, SolveTrace};

/// Support threshold relative to the maximum of the solution.
pub const DEFAULT_REL_THRESHOLD: f64 = 1e-4;
/// Absolute floor below which positivity is treated as solver noise.
pub const DEFAULT_ABS_FLOOR: f64 = 1e-10;

/// `max(rel · max u, floor)` with the maximum taken over the whole trace.
pub fn resolve_threshold(trace: &SolveTrace, rel: f64, floor: f64) -> f64 {
    (rel * trace.max_value()).max(floor)
}

/// Left boundary of `{u > threshold}`, interpolated between the bracketing
/// nodes; `None` when `u <= threshold` everywhere.
pub fn detect_support_edge(state: &GridState, grid: &Grid, threshold: f64) -> Option<f64> {
    let i = state.values.iter().position(|&u| u > threshold)?;
    if i == 0 {
        return Some(grid.x_left());
    }
    let (u0, u1) = (state.values[i - 1], state.values[i]);
    let w = ((threshold - u0) / (u1 - u0)).clamp(0.0, 1.0);
    Some(grid.x(i - 1) + w * grid.dx())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{barenblatt_constants, PParameters};
    use crate::mol::build_grid;

    fn state(grid: &Grid, f: impl Fn(f64) -> f64) -> GridState {
        GridState {
            t: 0.0,
            values: grid.nodes().map(f).collect(),
        }
    }

    #[test]
    fn edge_of_critical_power() {
        let g = build_grid(-1.0, 1.0, 800).unwrap();
        let s = state(&g, |x| if x > 0.0 { x * x } else { 0.0 });
        let e = detect_support_edge(&s, &g, 1e-9).unwrap();
        assert!(e.abs() <= g.dx(), "{e}");
    }

    #[test]
    fn constant_state_edge_is_left_end() {
        let g = build_grid(-1.0, 1.0, 16).unwrap();
        let s = state(&g, |_| 1.0);
        assert_eq!(detect_support_edge(&s, &g, 0.5), Some(-1.0));
        assert_eq!(detect_support_edge(&s, &g, 2.0), None);
    }

    #[test]
    fn barenblatt_edge_within_two_cells() {
        let pp = PParameters::one_d(4.0).unwrap();
        let bc = barenblatt_constants(pp, None).unwrap();
        let g = build_grid(-1.0, 1.0, 400).unwrap();
        for t in [0.02, 0.1, 0.5] {
            let s = state(&g, |x| bc.value(x, t).unwrap());
            let e = detect_support_edge(&s, &g, 1e-9).unwrap();
            let r = bc.support_radius(t).unwrap();
            assert!((e + r).abs() <= 2.0 * g.dx(), "t={t}: {e} vs {}", -r);
        }
    }

    #[test]
    fn edge_moves_inward_with_threshold() {
        let g = build_grid(-1.0, 1.0, 200).unwrap();
        let s = state(&g, |x| if x > -0.3 { (x + 0.3).powf(1.5) } else { 0.0 });
        let mut prev = f64::NEG_INFINITY;
        for thr in [1e-10, 1e-6, 1e-3, 1e-2, 0.1] {
            let e = detect_support_edge(&s, &g, thr).unwrap();
            assert!(e >= prev);
            prev = e;
        }
    }
}
