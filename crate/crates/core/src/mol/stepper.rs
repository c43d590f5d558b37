//! Implicit BDF1/BDF2 step with a damped tridiagonal Newton solve.

use super::problem::{GridState, ProblemSpec};
use super::stencil::{jacobian_into, rhs_into, Tridiagonal};
use crate::error::{Error, Result};

/// Why a step was refused; the caller retries with a smaller step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    NewtonDiverged,
    SingularJacobian,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Accepted {
        state: GridState,
        newton_iters: usize,
    },
    Rejected {
        reason: Rejection,
        newton_iters: usize,
    },
}

/// Reusable buffers so that a step does not allocate beyond its result.
#[derive(Debug, Default)]
pub struct Workspace {
    f: Vec<f64>,
    residual: Vec<f64>,
    trial: Vec<f64>,
    trial_residual: Vec<f64>,
    delta: Vec<f64>,
    scratch: Vec<f64>,
    jac: Option<Tridiagonal>,
}

/// `w - psi - gamma f(w) = 0` for one BDF step.
struct BdfSystem {
    psi: Vec<f64>,
    gamma: f64,
}

impl BdfSystem {
    /// BDF1, or variable-step BDF2 when `previous` is given.
    fn new(current: &GridState, previous: Option<&GridState>, dt: f64) -> Self {
        match previous {
            None => Self {
                psi: current.values.clone(),
                gamma: dt,
            },
            Some(prev) => {
                let w = dt / (current.t - prev.t);
                let denom = 1.0 + 2.0 * w;
                let a1 = (1.0 + w) * (1.0 + w) / denom;
                let a2 = -w * w / denom;
                let mut psi: Vec<f64> = current
                    .values
                    .iter()
                    .zip(&prev.values)
                    .map(|(un, um)| a1 * un + a2 * um)
                    .collect();
                // a1 + a2 = 1 only up to rounding; keep Dirichlet rows exact.
                let last = psi.len() - 1;
                psi[0] = current.values[0];
                psi[last] = current.values[last];
                Self {
                    psi,
                    gamma: dt * (1.0 + w) / denom,
                }
            }
        }
    }
}

/// Advances `current` by `dt`.
///
/// With `previous = None` the step is BDF1, otherwise the variable-step
/// BDF2 formula through `previous` and `current`. Boundary nodes stay at
/// their current (Dirichlet) values. Only `dt < dt_min` is a hard error;
/// Newton failures come back as [`StepOutcome::Rejected`].
pub fn implicit_step(
    spec: &ProblemSpec,
    current: &GridState,
    previous: Option<&GridState>,
    dt: f64,
    ws: &mut Workspace,
) -> Result<StepOutcome> {
    let settings = &spec.integrator;
    if !(dt >= settings.dt_min) {
        return Err(Error::Solver {
            t: current.t,
            reason: format!("step size {dt:e} fell below dt_min = {:e}", settings.dt_min),
        });
    }
    let n = current.values.len();
    let params = spec.params;
    let grid = &spec.grid;
    let system = BdfSystem::new(current, previous, dt);

    // Predictor: linear extrapolation through the history, if any.
    let mut w = match previous {
        Some(prev) => {
            let ratio = dt / (current.t - prev.t);
            let mut w: Vec<f64> = current
                .values
                .iter()
                .zip(&prev.values)
                .map(|(un, um)| un + ratio * (un - um))
                .collect();
            w[0] = current.values[0];
            w[n - 1] = current.values[n - 1];
            w
        }
        None => current.values.clone(),
    };

    ws.f.resize(n, 0.0);
    ws.residual.resize(n, 0.0);
    ws.trial.resize(n, 0.0);
    ws.trial_residual.resize(n, 0.0);
    ws.delta.resize(n, 0.0);
    let jac = ws.jac.get_or_insert_with(|| Tridiagonal::zeros(n));
    if jac.len() != n {
        *jac = Tridiagonal::zeros(n);
    }

    let mut res_norm = residual(&w, &system, spec, &mut ws.f, &mut ws.residual);
    for iter in 1..=settings.newton_max_iter {
        if !res_norm.is_finite() {
            return Ok(StepOutcome::Rejected {
                reason: Rejection::NonFinite,
                newton_iters: iter,
            });
        }
        if res_norm <= settings.newton_tol * (1.0 + max_abs(&w)) {
            return Ok(StepOutcome::Accepted {
                state: GridState {
                    t: current.t + dt,
                    values: w,
                },
                newton_iters: iter,
            });
        }
        if iter == settings.newton_max_iter {
            break;
        }
        // (I - gamma J) delta = -F
        jacobian_into(&w, params, grid, jac);
        for i in 0..n {
            jac.lower[i] *= -system.gamma;
            jac.upper[i] *= -system.gamma;
            jac.diag[i] = 1.0 - system.gamma * jac.diag[i];
            ws.delta[i] = -ws.residual[i];
        }
        if jac.solve_in_place(&mut ws.delta, &mut ws.scratch).is_err() {
            return Ok(StepOutcome::Rejected {
                reason: Rejection::SingularJacobian,
                newton_iters: iter,
            });
        }
        let mut alpha = 1.0;
        loop {
            for ((t, wi), d) in ws.trial.iter_mut().zip(&w).zip(&ws.delta) {
                *t = wi + alpha * d;
            }
            let trial_norm = residual(&ws.trial, &system, spec, &mut ws.f, &mut ws.trial_residual);
            if trial_norm < res_norm || alpha <= 1.0 / 16.0 {
                std::mem::swap(&mut w, &mut ws.trial);
                std::mem::swap(&mut ws.residual, &mut ws.trial_residual);
                res_norm = trial_norm;
                break;
            }
            alpha *= 0.5;
        }
    }
    Ok(StepOutcome::Rejected {
        reason: Rejection::NewtonDiverged,
        newton_iters: settings.newton_max_iter,
    })
}

fn residual(
    w: &[f64],
    system: &BdfSystem,
    spec: &ProblemSpec,
    f: &mut [f64],
    out: &mut [f64],
) -> f64 {
    rhs_into(w, spec.params, &spec.grid, f);
    let mut norm: f64 = 0.0;
    for i in 0..w.len() {
        out[i] = w[i] - system.psi[i] - system.gamma * f[i];
        let a = out[i].abs();
        // NaN never compares greater, so track it explicitly.
        if a.is_nan() {
            return f64::NAN;
        }
        norm = norm.max(a);
    }
    norm
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::PParameters;
    use crate::mol::grid::build_grid;
    use crate::mol::problem::{sample_initial_data, IntegratorSettings, Profile};
    use crate::mol::stencil::rhs;

    fn spec(initial: Profile, bc: (f64, f64)) -> ProblemSpec {
        ProblemSpec {
            params: PParameters::one_d(4.0).unwrap(),
            grid: build_grid(-1.0, 1.0, 40).unwrap(),
            bc_left: bc.0,
            bc_right: bc.1,
            initial,
            t_end: 1.0,
            integrator: IntegratorSettings::default(),
        }
    }

    fn accepted(o: StepOutcome) -> (GridState, usize) {
        match o {
            StepOutcome::Accepted {
                state,
                newton_iters,
            } => (state, newton_iters),
            StepOutcome::Rejected { reason, .. } => panic!("rejected: {reason:?}"),
        }
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let s = spec(Profile::Constant { value: 0.5 }, (0.5, 0.5));
        let u0 = sample_initial_data(&s).unwrap();
        let mut ws = Workspace::default();
        for dt in [1e-6, 1e-2, 0.5] {
            let (u1, iters) = accepted(implicit_step(&s, &u0, None, dt, &mut ws).unwrap());
            assert_eq!(u1.values, u0.values);
            assert_eq!(iters, 1);
        }
    }

    #[test]
    fn linear_steady_state_stays_put() {
        let s = spec(
            Profile::Linear {
                left: 0.0,
                right: 1.0,
            },
            (0.0, 1.0),
        );
        let u0 = sample_initial_data(&s).unwrap();
        let mut ws = Workspace::default();
        let (u1, _) = accepted(implicit_step(&s, &u0, None, 1e-2, &mut ws).unwrap());
        for (a, b) in u1.values.iter().zip(&u0.values) {
            assert!((a - b).abs() <= s.integrator.newton_tol);
        }
    }

    #[test]
    fn small_bdf1_step_is_consistent_with_explicit_euler() {
        let s = spec(
            Profile::Tabulated {
                values: build_grid(-1.0, 1.0, 40)
                    .unwrap()
                    .nodes()
                    .map(|x| x * x)
                    .collect(),
            },
            (1.0, 1.0),
        );
        let u0 = sample_initial_data(&s).unwrap();
        let f = rhs(&u0.values, s.params, &s.grid).unwrap();
        let mut ws = Workspace::default();
        let mut errs = Vec::new();
        for dt in [1e-5, 5e-6] {
            let (u1, _) = accepted(implicit_step(&s, &u0, None, dt, &mut ws).unwrap());
            let err = u1
                .values
                .iter()
                .zip(&u0.values)
                .zip(&f)
                .map(|((a, b), fi)| (a - b - dt * fi).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        // O(dt^2): halving dt quarters the deviation.
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}, errs {errs:?}");
    }

    #[test]
    fn boundaries_are_pinned() {
        let s = spec(Profile::critical_power(), (0.0, 1.0));
        let u0 = sample_initial_data(&s).unwrap();
        let mut ws = Workspace::default();
        let (u1, _) = accepted(implicit_step(&s, &u0, None, 1e-4, &mut ws).unwrap());
        assert_eq!(u1.values[0], 0.0);
        assert_eq!(u1.values[40], 1.0);
        let (u2, _) = accepted(implicit_step(&s, &u1, Some(&u0), 1e-4, &mut ws).unwrap());
        assert_eq!(u2.values[0], 0.0);
        assert_eq!(u2.values[40], 1.0);
    }

    #[test]
    fn dt_below_minimum_is_a_hard_error() {
        let s = spec(Profile::critical_power(), (0.0, 1.0));
        let u0 = sample_initial_data(&s).unwrap();
        let mut ws = Workspace::default();
        assert!(implicit_step(&s, &u0, None, 1e-20, &mut ws).is_err());
    }

    #[test]
    fn starved_newton_is_rejected() {
        let mut s = spec(Profile::critical_power(), (0.0, 1.0));
        s.integrator.newton_max_iter = 1;
        let u0 = sample_initial_data(&s).unwrap();
        let mut ws = Workspace::default();
        match implicit_step(&s, &u0, None, 1e-2, &mut ws).unwrap() {
            StepOutcome::Rejected { reason, .. } => assert_eq!(reason, Rejection::NewtonDiverged),
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
