use serde::{Deserialize, Serialize};

use super::{barenblatt_constants, separable_constants, PParameters, IDENTITY_TOL};
use crate::error::{Error, Result};
use crate::numeric::rel_diff;

/// Conjectured critical (waiting) time at the edge of `x_+^{p/(p-2)}` in 1D.
///
/// Evaluated as `(p-2)^{p-1} / (2 p^{p-1} (p-1))` and as `q^{p-1}`; the two
/// must agree to [`IDENTITY_TOL`].
pub fn critical_time_1d(params: PParameters) -> Result<f64> {
    if params.n() != 1 {
        return Err(Error::invalid("critical time is defined for n = 1 only"));
    }
    let p = params.p();
    let direct = (p - 2.0).powf(p - 1.0) / (2.0 * p.powf(p - 1.0) * (p - 1.0));
    let q = barenblatt_constants(params, None)?.q;
    let via_q = q.powf(p - 1.0);
    let d = rel_diff(direct, via_q);
    if d > IDENTITY_TOL {
        return Err(Error::Consistency(format!(
            "critical time closed forms disagree: {direct} vs {via_q} (rel {d:e})"
        )));
    }
    Ok(direct)
}

/// Limit of the barrier arrival time as δ -> 0: `(p-2)^{p-1} / p^p`.
///
/// Cross-checked against `q^{p-1} n / (p k)` for every `n` and, when
/// `n = 1`, against the ratio `t2(0) / t_hat = 2 (p-1) / p`.
pub fn barrier_upper_time_limit(params: PParameters) -> Result<f64> {
    let p = params.p();
    let closed = (p - 2.0).powf(p - 1.0) / p.powf(p);
    let bc = barenblatt_constants(params, None)?;
    let via_q = bc.q.powf(p - 1.0) * params.nf() / (p * bc.k);
    let d = rel_diff(closed, via_q);
    if d > IDENTITY_TOL {
        return Err(Error::Consistency(format!(
            "t2(0) closed forms disagree: {closed} vs {via_q} (rel {d:e})"
        )));
    }
    if params.n() == 1 {
        let ratio = closed / critical_time_1d(params)?;
        let expected = 2.0 * (p - 1.0) / p;
        let d = rel_diff(ratio, expected);
        if d > IDENTITY_TOL {
            return Err(Error::Consistency(format!(
                "t2(0)/t_hat = {ratio}, expected {expected} (rel {d:e})"
            )));
        }
    }
    Ok(closed)
}

/// Constants of the rescaled Barenblatt barrier touching `(1-r)^{p/(p-2)}`
/// from below, indexed by `δ ∈ (0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyParameters {
    pub delta: f64,
    pub epsilon: f64,
    pub r_touch: f64,
    pub t1: f64,
    pub t2: f64,
    /// Amplitude divisor: `ε λ = U(0, t1)`.
    pub lambda: f64,
}

pub fn tangency_parameters(params: PParameters, delta: f64) -> Result<TangencyParameters> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("δ must lie in (0,1), got {delta}")));
    }
    let p = params.p();
    let n = params.nf();
    let bc = barenblatt_constants(params, None)?;
    let s = 1.0 - delta;
    let sp = s.powf(p);
    let epsilon = (1.0 - sp).powf(1.0 / (p - 2.0));
    let r_touch = sp / (epsilon.powf(p - 2.0) + sp);
    let t1 = s.powf(n / bc.k);
    let u0_t1 = s.powf(-n) * bc.q.powf((p - 1.0) / (p - 2.0));
    let lambda = u0_t1 / epsilon;
    let t2 = bc.q.powf(p - 1.0) * (1.0 - t1) / (s.powf(n * (p - 2.0)) * (1.0 - sp));
    let via_lambda = lambda.powf(p - 2.0) * (1.0 - t1);
    let d = rel_diff(t2, via_lambda);
    if d > IDENTITY_TOL {
        return Err(Error::Consistency(format!(
            "t2 routes disagree at δ = {delta}: {t2} vs {via_lambda} (rel {d:e})"
        )));
    }
    Ok(TangencyParameters {
        delta,
        epsilon,
        r_touch,
        t1,
        t2,
        lambda,
    })
}

/// `LHS - RHS` of the tangency equation
/// `ε^{(p-2)/(p-1)} (1 - (r/(1-δ))^{p/(p-1)}) = (1-r)^{p/(p-1)}`.
pub fn tangency_residual(params: PParameters, delta: f64, epsilon: f64, r: f64) -> f64 {
    let p = params.p();
    let a = (p - 2.0) / (p - 1.0);
    let b = p / (p - 1.0);
    epsilon.powf(a) * (1.0 - (r / (1.0 - delta)).powf(b)) - (1.0 - r).powf(b)
}

/// `r`-derivative of [`tangency_residual`].
pub fn tangency_derivative_residual(params: PParameters, delta: f64, epsilon: f64, r: f64) -> f64 {
    let p = params.p();
    let a = (p - 2.0) / (p - 1.0);
    let b = p / (p - 1.0);
    let lhs = -epsilon.powf(a) * b / (1.0 - delta) * (r / (1.0 - delta)).powf(1.0 / (p - 1.0));
    let rhs = -b * (1.0 - r).powf(1.0 / (p - 1.0));
    lhs - rhs
}

/// The same critical time through the separable supersolution:
/// `(c_p c_o)^{p-2}` at `δ = p/(p-2)`.
pub(crate) fn critical_time_via_separable(params: PParameters) -> Result<f64> {
    let sc = separable_constants(params, params.critical_exponent())?;
    Ok(sc.c.powf(params.p() - 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::memory_horizon;
    use approx::assert_relative_eq;

    fn pp(p: f64) -> PParameters {
        PParameters::one_d(p).unwrap()
    }

    #[test]
    fn critical_time_values() {
        assert_relative_eq!(
            critical_time_1d(pp(4.0)).unwrap(),
            1.0 / 48.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            critical_time_1d(pp(3.0)).unwrap(),
            1.0 / 36.0,
            max_relative = 1e-14
        );
        assert!((critical_time_1d(pp(4.0)).unwrap() - 0.0208).abs() < 1e-4);
        assert!(critical_time_1d(PParameters::new(4.0, 2).unwrap()).is_err());
    }

    #[test]
    fn critical_time_equals_memory_horizon_at_critical_delta() {
        for p in [2.5, 3.0, 4.0, 6.0] {
            let t_hat = critical_time_1d(pp(p)).unwrap();
            let h = memory_horizon(pp(p), p / (p - 2.0), 1.0, 1.0).unwrap();
            assert_relative_eq!(t_hat, h, max_relative = 1e-12);
            assert_relative_eq!(
                t_hat,
                critical_time_via_separable(pp(p)).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn barrier_limit_p4() {
        let t2 = barrier_upper_time_limit(pp(4.0)).unwrap();
        assert_relative_eq!(t2, 0.03125, max_relative = 1e-14);
        assert_relative_eq!(
            t2 / critical_time_1d(pp(4.0)).unwrap(),
            1.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn barrier_ratio_exceeds_one() {
        for i in 1..200 {
            let p = 2.0 + 0.05 * i as f64;
            let ratio = barrier_upper_time_limit(pp(p)).unwrap() / critical_time_1d(pp(p)).unwrap();
            assert!(ratio > 1.0);
            assert_relative_eq!(ratio, 2.0 * (p - 1.0) / p, max_relative = 1e-12);
        }
    }

    #[test]
    fn barrier_limit_independent_of_dimension() {
        for p in [2.5, 3.0, 4.0, 6.0] {
            let base = barrier_upper_time_limit(pp(p)).unwrap();
            for n in 2..=3 {
                let t = barrier_upper_time_limit(PParameters::new(p, n).unwrap()).unwrap();
                assert_relative_eq!(t, base, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn tangency_example_p4_half() {
        let tp = tangency_parameters(pp(4.0), 0.5).unwrap();
        assert_relative_eq!(tp.epsilon, (15.0f64 / 16.0).sqrt(), max_relative = 1e-14);
        assert!((tp.epsilon - 0.968246).abs() < 1e-6);
        assert_relative_eq!(tp.r_touch, 0.0625, max_relative = 1e-14);
        assert_relative_eq!(tp.t1, 0.015625, max_relative = 1e-13);
        // q^3 (63/64) / (1/4 * 15/16) = 63/720
        assert_relative_eq!(tp.t2, 0.0875, max_relative = 1e-12);
    }

    #[test]
    fn tangency_rejects_out_of_range() {
        for d in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(tangency_parameters(pp(4.0), d).is_err());
        }
    }

    #[test]
    fn tangency_system_holds_on_delta_grid() {
        for p in [2.5, 3.0, 4.0, 6.0] {
            for i in 1..=100 {
                let delta = i as f64 / 101.0;
                let tp = tangency_parameters(pp(p), delta).unwrap();
                assert_relative_eq!(tp.r_touch, (1.0 - delta).powf(p), max_relative = 1e-12);
                let scale = (1.0 - tp.r_touch).powf(p / (p - 1.0));
                let res = tangency_residual(pp(p), delta, tp.epsilon, tp.r_touch);
                assert!(
                    res.abs() <= 1e-12 * scale.max(1e-300),
                    "p={p} δ={delta}: {res}"
                );
                let dres = tangency_derivative_residual(pp(p), delta, tp.epsilon, tp.r_touch);
                assert!(
                    dres.abs() <= 1e-12 * (p / (p - 1.0)),
                    "p={p} δ={delta}: {dres}"
                );
                assert!(tp.epsilon > 0.0 && tp.epsilon < 1.0);
                assert!(tp.r_touch > 0.0 && tp.r_touch < 1.0);
                assert!(tp.t1 > 0.0 && tp.t1 < 1.0);
                assert!(tp.t2 > 0.0);
            }
        }
    }

    #[test]
    fn t2_decreases_towards_limit() {
        for p in [2.5, 3.0, 4.0, 6.0] {
            let limit = barrier_upper_time_limit(pp(p)).unwrap();
            let mut prev = f64::INFINITY;
            for i in 0..60 {
                let delta = 0.9 * 0.85f64.powi(i);
                let t2 = tangency_parameters(pp(p), delta).unwrap().t2;
                assert!(t2 < prev, "p={p}: not decreasing at δ={delta}");
                assert!(t2 > limit * (1.0 - 1e-9), "p={p}: below limit at δ={delta}");
                prev = t2;
            }
            assert_relative_eq!(prev, limit, max_relative = 1e-3);
        }
    }

    #[test]
    fn rescaled_barenblatt_touches_from_below() {
        // λ^{-1} U(r, t1) vs (1-r)^{p/(p-2)} on 10^4 points of [0,1].
        for p in [3.0, 4.0, 6.0] {
            let params = pp(p);
            let bc = barenblatt_constants(params, None).unwrap();
            for delta in [0.1, 0.25, 0.5, 0.8] {
                let tp = tangency_parameters(params, delta).unwrap();
                let mut min_gap = f64::INFINITY;
                let mut arg_min = 0.0;
                for i in 0..=10_000 {
                    let r = i as f64 / 10_000.0;
                    let below = bc.value(r, tp.t1).unwrap() / tp.lambda;
                    let datum = (1.0 - r).powf(p / (p - 2.0));
                    let gap = datum - below;
                    assert!(gap >= -1e-10, "p={p} δ={delta} r={r}: gap {gap}");
                    // Both sides vanish at r = 1; contact is sought inside the barrier support.
                    if r < 1.0 - delta && gap < min_gap {
                        min_gap = gap;
                        arg_min = r;
                    }
                }
                let at_touch = (1.0 - tp.r_touch).powf(p / (p - 2.0))
                    - bc.value(tp.r_touch, tp.t1).unwrap() / tp.lambda;
                assert!(
                    at_touch.abs() < 1e-12,
                    "p={p} δ={delta}: no contact ({at_touch})"
                );
                assert!(min_gap >= -1e-10);
                assert!(
                    (arg_min - tp.r_touch).abs() < 2e-3,
                    "p={p} δ={delta}: {arg_min}"
                );
            }
        }
    }
}
