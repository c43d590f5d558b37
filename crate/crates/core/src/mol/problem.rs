use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::analytic::{barenblatt_constants, tangency_parameters, PParameters, ShiftedBarenblatt};
use crate::error::{Error, Result};
use crate::numeric::pow_pos;

/// Named initial profile families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Profile {
    /// `amplitude · (x - shift)_+^exponent`; the exponent defaults to `p/(p-2)`.
    PowerPlus {
        #[serde(default)]
        exponent: Option<f64>,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `scale · U(x - center, t0)`, the `t = 0` slice of [`ShiftedBarenblatt`].
    Barenblatt {
        t0: f64,
        #[serde(default)]
        c0: Option<f64>,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// The rescaled Barenblatt barrier `U(x - center, λ^{2-p} t + t1) / λ` that
    /// touches `x_+^{p/(p-2)}` from below when `center = 1`.
    BarenblattBelow {
        delta: f64,
        #[serde(default = "one")]
        center: f64,
    },
    Constant {
        value: f64,
    },
    /// Straight line between the two end values.
    Linear {
        left: f64,
        right: f64,
    },
    /// Explicit nodal values, one per grid node.
    Tabulated {
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl Profile {
    /// The flagship datum `x_+^{p/(p-2)}`.
    pub fn critical_power() -> Self {
        Profile::PowerPlus {
            exponent: None,
            amplitude: 1.0,
            shift: 0.0,
        }
    }

    /// The exact solution generated by a Barenblatt profile, if this is one.
    pub fn barenblatt(&self, params: PParameters) -> Result<Option<ShiftedBarenblatt>> {
        match *self {
            Profile::Barenblatt {
                t0,
                c0,
                center,
                scale,
            } => {
                let bc = barenblatt_constants(params, c0)?;
                Ok(Some(ShiftedBarenblatt::new(bc, center, scale, t0)?))
            }
            Profile::BarenblattBelow { delta, center } => {
                let tp =
                    tangency_parameters(params, delta).map_err(|e| Error::config(e.to_string()))?;
                let bc = barenblatt_constants(params, None)?;
                Ok(Some(ShiftedBarenblatt::new(
                    bc,
                    center,
                    1.0 / tp.lambda,
                    tp.t1,
                )?))
            }
            _ => Ok(None),
        }
    }

    /// Samples the profile on every grid node, boundaries included.
    pub fn sample(&self, params: PParameters, grid: &Grid) -> Result<Vec<f64>> {
        let values = match self {
            Profile::PowerPlus {
                exponent,
                amplitude,
                shift,
            } => {
                let e = exponent.unwrap_or_else(|| params.critical_exponent());
                if !(e > 0.0) {
                    return Err(Error::config(format!(
                        "power-plus exponent must be > 0, got {e}"
                    )));
                }
                grid.nodes()
                    .map(|x| amplitude * pow_pos(x - shift, e))
                    .collect()
            }
            Profile::Barenblatt { .. } | Profile::BarenblattBelow { .. } => {
                let sb = self.barenblatt(params)?.expect("barenblatt profile");
                grid.nodes().map(|x| sb.value(x, 0.0)).collect()
            }
            Profile::Constant { value } => vec![*value; grid.n_nodes()],
            Profile::Linear { left, right } => {
                let len = grid.x_right() - grid.x_left();
                grid.nodes()
                    .map(|x| left + (right - left) * (x - grid.x_left()) / len)
                    .collect()
            }
            Profile::Tabulated { values } => {
                if values.len() != grid.n_nodes() {
                    return Err(Error::config(format!(
                        "tabulated profile has {} values, grid has {} nodes",
                        values.len(),
                        grid.n_nodes()
                    )));
                }
                values.clone()
            }
        };
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!(
                "initial value at node {bad} is not finite"
            )));
        }
        Ok(values)
    }
}

/// Linear multistep scheme used by the implicit stepper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Bdf1,
    Bdf2,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::Bdf1 => 1,
            Scheme::Bdf2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorSettings {
    pub scheme: Scheme,
    pub rtol: f64,
    pub atol: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub newton_max_iter: usize,
    pub newton_tol: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            scheme: Scheme::Bdf2,
            rtol: 1e-7,
            atol: 1e-10,
            dt_init: 1e-8,
            dt_min: 1e-15,
            dt_max: 1.0,
            newton_max_iter: 12,
            newton_tol: 1e-10,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("newton_tol", self.newton_tol),
            ("dt_min", self.dt_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(Error::config(format!(
                "need dt_min <= dt_init <= dt_max, got {} / {} / {}",
                self.dt_min, self.dt_init, self.dt_max
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::config("newton_max_iter must be >= 1"));
        }
        Ok(())
    }
}

/// A complete 1D Cauchy-Dirichlet problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub params: PParameters,
    pub grid: Grid,
    pub bc_left: f64,
    pub bc_right: f64,
    pub initial: Profile,
    pub t_end: f64,
    pub integrator: IntegratorSettings,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.params.n() != 1 {
            return Err(Error::config("the solver is one-dimensional (n = 1)"));
        }
        for (name, v) in [("bc_left", self.bc_left), ("bc_right", self.bc_right)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(format!(
                "t_end must be finite and >= 0, got {}",
                self.t_end
            )));
        }
        self.integrator.validate()
    }

    /// Same problem with the initial profile replaced.
    pub fn with_initial(&self, initial: Profile) -> Self {
        Self {
            initial,
            ..self.clone()
        }
    }
}

/// Nodal values at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub t: f64,
    pub values: Vec<f64>,
}

impl GridState {
    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Initial state: sampled profile with the Dirichlet values written into the end nodes.
pub fn sample_initial_data(spec: &ProblemSpec) -> Result<GridState> {
    spec.validate()?;
    let mut values = spec.initial.sample(spec.params, &spec.grid)?;
    values[0] = spec.bc_left;
    let last = values.len() - 1;
    values[last] = spec.bc_right;
    Ok(GridState { t: 0.0, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol::grid::build_grid;

    pub(crate) fn flagship(n_cells: usize) -> ProblemSpec {
        ProblemSpec {
            params: PParameters::one_d(4.0).unwrap(),
            grid: build_grid(-1.0, 1.0, n_cells).unwrap(),
            bc_left: 0.0,
            bc_right: 1.0,
            initial: Profile::critical_power(),
            t_end: 0.025,
            integrator: IntegratorSettings::default(),
        }
    }

    #[test]
    fn power_plus_samples() {
        let spec = flagship(8);
        let s = sample_initial_data(&spec).unwrap();
        // x = -1, -0.75, ..., 1; exponent p/(p-2) = 2
        assert_eq!(s.values[6], 0.25);
        assert!(s.values[..=4].iter().all(|&v| v == 0.0));
        assert_eq!(s.values[8], 1.0);
    }

    #[test]
    fn boundary_nodes_take_dirichlet_values() {
        let mut spec = flagship(16);
        spec.initial = Profile::Constant { value: 0.3 };
        spec.bc_left = 0.1;
        spec.bc_right = 0.2;
        let s = sample_initial_data(&spec).unwrap();
        assert_eq!(s.values[0], 0.1);
        assert_eq!(s.values[16], 0.2);
        assert_eq!(s.values[8], 0.3);
    }

    #[test]
    fn barenblatt_profile_matches_analytic() {
        let mut spec = flagship(64);
        spec.bc_right = 0.0;
        spec.initial = Profile::Barenblatt {
            t0: 0.015625,
            c0: None,
            center: 0.0,
            scale: 1.0,
        };
        let s = sample_initial_data(&spec).unwrap();
        let bc = barenblatt_constants(spec.params, None).unwrap();
        for (i, x) in spec.grid.nodes().enumerate() {
            let exact = bc.value(x, 0.015625).unwrap();
            assert!((s.values[i] - exact).abs() <= 1e-15);
        }
    }

    #[test]
    fn barenblatt_below_touches_the_flagship_datum() {
        let spec = flagship(1000);
        let below = Profile::BarenblattBelow {
            delta: 0.25,
            center: 1.0,
        };
        let lo = below.sample(spec.params, &spec.grid).unwrap();
        let hi = spec.initial.sample(spec.params, &spec.grid).unwrap();
        let gap = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| h - l)
            .fold(f64::INFINITY, f64::min);
        assert!(gap >= -1e-12, "{gap}");
        assert!(gap < 1e-5, "barrier should touch: {gap}");
        // support edge of the barrier reaches x = 0 at t2(δ)
        let sb = below.barenblatt(spec.params).unwrap().unwrap();
        let tp = tangency_parameters(spec.params, 0.25).unwrap();
        assert!((sb.time_of_radius(1.0).unwrap() - tp.t2).abs() < 1e-12 * tp.t2);
    }

    #[test]
    fn tabulated_length_checked() {
        let mut spec = flagship(8);
        spec.initial = Profile::Tabulated {
            values: vec![0.0; 8],
        };
        assert!(sample_initial_data(&spec).is_err());
        spec.initial = Profile::Tabulated {
            values: vec![0.0; 9],
        };
        assert!(sample_initial_data(&spec).is_ok());
    }

    #[test]
    fn invalid_settings_rejected() {
        let mut spec = flagship(8);
        spec.integrator.dt_init = 2.0;
        assert!(spec.validate().is_err());
        let mut spec = flagship(8);
        spec.integrator.rtol = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = flagship(8);
        spec.bc_left = -1.0;
        assert!(spec.validate().is_err());
        let mut spec = flagship(8);
        spec.params = PParameters::new(4.0, 2).unwrap();
        assert!(spec.validate().is_err());
    }
}
