use approx::assert_relative_eq;
use proptest::prelude::*;

use pwait::analytic::{
    barenblatt_constants, barrier_upper_time_limit, critical_time_1d, tangency_parameters,
    tangency_residual, PParameters,
};
use pwait::experiments::comparison_check;
use pwait::interface::waiting_time;
use pwait::mol::{
    build_grid, integrate, rhs, uniform_snapshots, IntegratorSettings, ProblemSpec, Profile,
};

fn flagship(n: usize, t_end: f64) -> ProblemSpec {
    ProblemSpec {
        params: PParameters::one_d(4.0).unwrap(),
        grid: build_grid(-1.0, 1.0, n).unwrap(),
        bc_left: 0.0,
        bc_right: 1.0,
        initial: Profile::critical_power(),
        t_end,
        integrator: IntegratorSettings::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn critical_times_are_ordered(p in 2.05f64..8.0) {
        let pp = PParameters::one_d(p).unwrap();
        let t_hat = critical_time_1d(pp).unwrap();
        let t2 = barrier_upper_time_limit(pp).unwrap();
        prop_assert!(t_hat > 0.0 && t2 > t_hat);
        assert_relative_eq!(t2 / t_hat, 2.0 * (p - 1.0) / p, max_relative = 1e-12);
        let q = barenblatt_constants(pp, None).unwrap().q;
        assert_relative_eq!(t_hat, q.powf(p - 1.0), max_relative = 1e-12);
    }

    #[test]
    fn tangency_point_solves_the_system(p in 2.2f64..6.0, delta in 0.05f64..0.9) {
        let pp = PParameters::one_d(p).unwrap();
        let tp = tangency_parameters(pp, delta).unwrap();
        prop_assert!(tp.r_touch > 0.0 && tp.r_touch < 1.0 - delta);
        let res = tangency_residual(pp, delta, tp.epsilon, tp.r_touch);
        prop_assert!(res.abs() <= 1e-12 * (1.0 - tp.r_touch), "residual {res}");
        // t2 grows with δ and tends to t2(0) from above.
        prop_assert!(tp.t2 >= barrier_upper_time_limit(pp).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn rhs_is_homogeneous_of_degree_p_minus_one(
        lambda in 0.1f64..10.0,
        seed in proptest::collection::vec(0.0f64..1.0, 17),
        p in prop::sample::select(vec![2.5, 3.0, 4.0, 6.0]),
    ) {
        let pp = PParameters::one_d(p).unwrap();
        let g = build_grid(0.0, 1.0, 16).unwrap();
        let scaled: Vec<f64> = seed.iter().map(|v| lambda * v).collect();
        let a = rhs(&seed, pp, &g).unwrap();
        let b = rhs(&scaled, pp, &g).unwrap();
        let f = lambda.powf(p - 1.0);
        let scale = a.iter().map(|v| v.abs()).fold(1e-300, f64::max) * f;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((f * x - y).abs() <= 1e-12 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn raising_the_datum_keeps_the_order(amp in 0.0f64..0.3, shift in -0.5f64..0.5) {
        let upper = flagship(60, 0.02);
        let lower = ProblemSpec {
            bc_right: 1.0 - amp,
            initial: Profile::PowerPlus { exponent: None, amplitude: 1.0 - amp, shift: shift.max(0.0) },
            ..upper.clone()
        };
        let (out, _, _) = comparison_check(&lower, &upper, 10).unwrap();
        prop_assert!(out.passed, "{}", out.detail);
    }
}

#[test]
fn larger_threshold_never_detects_earlier() {
    let s = flagship(200, 0.03);
    let tr = integrate(&s, &uniform_snapshots(s.t_end, 120), &mut []).unwrap();
    let mut last = 0.0;
    for thr in [1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1] {
        let report = waiting_time(&tr, &s.grid, s.params, 0.0, thr).unwrap();
        let t = report.detected_time.unwrap_or(f64::INFINITY);
        assert!(t >= last, "threshold {thr}: {t} < {last}");
        last = t;
    }
}

#[test]
fn tighter_tolerances_do_not_move_the_waiting_time_much() {
    let mut s = flagship(200, 0.03);
    let times = uniform_snapshots(s.t_end, 120);
    let a = integrate(&s, &times, &mut []).unwrap();
    s.integrator.rtol *= 0.1;
    s.integrator.atol *= 0.1;
    let b = integrate(&s, &times, &mut []).unwrap();
    let ta = waiting_time(&a, &s.grid, s.params, 0.0, 1e-4)
        .unwrap()
        .detected_time
        .unwrap();
    let tb = waiting_time(&b, &s.grid, s.params, 0.0, 1e-4)
        .unwrap()
        .detected_time
        .unwrap();
    assert!((ta - tb).abs() < 1e-3 * ta, "{ta} vs {tb}");
}
