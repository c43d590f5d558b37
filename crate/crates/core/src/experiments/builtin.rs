//! Named scenarios reproducing the flagship figures and barrier checks.

use super::config::{
    AnalysisConfig, BarrierKind, OrderRole, ProblemConfig, ScenarioConfig, ThresholdConfig,
    SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::mol::{IntegratorSettings, Profile};

pub const BUILTIN_NAMES: &[&str] = &[
    "fig2",
    "fig3",
    "fig4",
    "memory",
    "convergence",
    "arrival",
    "comparison",
    "flagship",
];

/// δ used by the Barenblatt-below arrival run.
pub const ARRIVAL_DELTA: f64 = 0.25;

/// `p = 4` on `(-1, 1)`, data `x_+^{p/(p-2)}`, `u(1) = 1`, up to `1.2 ĥt`.
pub fn flagship_problem(p: f64, n_cells: usize) -> ProblemConfig {
    ProblemConfig {
        p,
        x_left: -1.0,
        x_right: 1.0,
        n_cells,
        bc_left: 0.0,
        bc_right: 1.0,
        initial: Profile::critical_power(),
        t_end: None,
        t_end_critical: Some(1.2),
        snapshots: 400,
        integrator: IntegratorSettings::default(),
    }
}

fn scenario(name: &str, problem: ProblemConfig, analyses: Vec<AnalysisConfig>) -> ScenarioConfig {
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        output_dir: None,
        problem,
        analyses,
    }
}

fn level_sets() -> AnalysisConfig {
    AnalysisConfig::LevelSets {
        levels: vec![0.02, 0.05, 0.1],
        include_edge: true,
        threshold: ThresholdConfig::default(),
        gradient_floor: 1e-8,
    }
}

fn waiting() -> AnalysisConfig {
    AnalysisConfig::WaitingTime {
        monitor_x: 0.0,
        threshold: ThresholdConfig::default(),
    }
}

fn barrier(check: BarrierKind) -> AnalysisConfig {
    AnalysisConfig::BarrierCheck {
        check,
        delta: None,
        m: 1.0,
        r: 1.0,
        w: None,
        monitor_x: 0.0,
        threshold: ThresholdConfig::default(),
    }
}

fn exponent_profile() -> AnalysisConfig {
    AnalysisConfig::ExponentProfile {
        times_critical: vec![0.0, 1.2],
        threshold: ThresholdConfig::default(),
        offset_cells: 3,
        window_cells: 12,
        refine_edge: true,
    }
}

/// Barenblatt data with support radius 1/2 at `t0 = 2^{-6}` for `p = 4`.
pub fn convergence_problem(n_cells: usize) -> ProblemConfig {
    ProblemConfig {
        p: 4.0,
        x_left: -1.0,
        x_right: 1.0,
        n_cells,
        bc_left: 0.0,
        bc_right: 0.0,
        initial: Profile::Barenblatt {
            t0: 0.015625,
            c0: None,
            center: 0.0,
            scale: 1.0,
        },
        t_end: Some(0.015625),
        t_end_critical: None,
        snapshots: 4,
        integrator: IntegratorSettings::default(),
    }
}

/// Barrier `Û(x - 1, t)` alone on a domain wide enough for its support.
pub fn arrival_problem(n_cells: usize) -> ProblemConfig {
    ProblemConfig {
        p: 4.0,
        x_left: -1.0,
        x_right: 3.0,
        n_cells,
        bc_left: 0.0,
        bc_right: 0.0,
        initial: Profile::BarenblattBelow {
            delta: ARRIVAL_DELTA,
            center: 1.0,
        },
        t_end: None,
        t_end_critical: Some(2.6),
        snapshots: 400,
        integrator: IntegratorSettings::default(),
    }
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let flag = || flagship_problem(4.0, 800);
    let cfg = match name {
        "fig2" => scenario(name, flag(), vec![AnalysisConfig::Waterfall { every: 4 }]),
        "fig3" => scenario(
            name,
            flag(),
            vec![level_sets(), waiting(), barrier(BarrierKind::Bracket)],
        ),
        "fig4" => scenario(name, flag(), vec![exponent_profile()]),
        "memory" => scenario(name, flag(), vec![barrier(BarrierKind::Memory)]),
        "convergence" => scenario(
            name,
            convergence_problem(400),
            vec![AnalysisConfig::Convergence {
                grids: vec![100, 200, 400],
                center_at_midpoint: true,
            }],
        ),
        "arrival" => scenario(
            name,
            arrival_problem(800),
            vec![AnalysisConfig::Arrival {
                x: 0.0,
                threshold: ThresholdConfig::default(),
                tolerance: 0.05,
            }],
        ),
        "comparison" => scenario(
            name,
            flag(),
            vec![AnalysisConfig::Comparison {
                companion: Profile::BarenblattBelow {
                    delta: ARRIVAL_DELTA,
                    center: 1.0,
                },
                role: OrderRole::Lower,
            }],
        ),
        "flagship" => scenario(
            name,
            flag(),
            vec![
                waiting(),
                barrier(BarrierKind::Bracket),
                exponent_profile(),
                barrier(BarrierKind::Memory),
            ],
        ),
        other => {
            return Err(Error::config(format!(
                "unknown builtin scenario {other:?}; known: {}",
                BUILTIN_NAMES.join(", ")
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_validates_and_round_trips() {
        for name in BUILTIN_NAMES {
            let cfg = builtin(name).unwrap();
            assert_eq!(cfg.name, *name);
            let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            assert_eq!(cfg, back, "{name}");
        }
        assert!(builtin("fig9").is_err());
    }

    #[test]
    fn arrival_target_is_t2() {
        let cfg = builtin("arrival").unwrap();
        let spec = cfg.problem.to_spec().unwrap();
        let sb = spec.initial.barenblatt(spec.params).unwrap().unwrap();
        let tp = crate::analytic::tangency_parameters(spec.params, ARRIVAL_DELTA).unwrap();
        assert!((sb.time_of_radius(1.0).unwrap() - tp.t2).abs() < 1e-12);
        assert!(spec.t_end > 1.2 * tp.t2);
        // the barrier's support stays inside (-1, 3) up to t_end
        assert!(sb.support_radius(spec.t_end) < 2.0);
    }
}
