//! Closed-form solutions, barriers and critical times.
//!
//! Everything here is pure arithmetic on `f64`. Identities that can be
//! evaluated along two independent routes (the critical time, the
//! tangency system) are checked against each other at
//! [`IDENTITY_TOL`] relative.

mod barenblatt;
mod cone;
mod critical;
mod separable;

pub use barenblatt::{barenblatt_constants, BarenblattConstants, ShiftedBarenblatt};
pub use cone::{
    cone_time_sequence, similarity_transform, ConeDivergence, ConeScaling, SimilarityTransform,
};
pub(crate) use critical::critical_time_via_separable;
pub use critical::{
    barrier_upper_time_limit, critical_time_1d, tangency_derivative_residual, tangency_parameters,
    tangency_residual, TangencyParameters,
};
pub use separable::{memory_horizon, separable_constants, SeparableConstants};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for closed-form identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Exponent `p > 2` and spatial dimension `n >= 1` of `u_t = Δ_p u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PParameters {
    p: f64,
    n: u32,
}

impl PParameters {
    pub fn new(p: f64, n: u32) -> Result<Self> {
        if !p.is_finite() || p <= 2.0 {
            return Err(Error::invalid(format!(
                "p must be finite and > 2 (degenerate regime), got {p}"
            )));
        }
        if n < 1 {
            return Err(Error::invalid("dimension n must be >= 1"));
        }
        Ok(Self { p, n })
    }

    /// One space dimension.
    pub fn one_d(p: f64) -> Result<Self> {
        Self::new(p, 1)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub(crate) fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    /// The critical decay exponent `p / (p - 2)`.
    pub fn critical_exponent(&self) -> f64 {
        self.p / (self.p - 2.0)
    }

    /// Edge exponent `(p - 1) / (p - 2)` of the Barenblatt profile.
    pub fn barenblatt_edge_exponent(&self) -> f64 {
        (self.p - 1.0) / (self.p - 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_degenerate_exponents() {
        assert!(PParameters::new(2.0, 1).is_err());
        assert!(PParameters::new(1.5, 1).is_err());
        assert!(PParameters::new(f64::NAN, 1).is_err());
        assert!(PParameters::new(4.0, 0).is_err());
        assert!(PParameters::new(2.000001, 3).is_ok());
    }

    #[test]
    fn exponents_for_p4() {
        let pp = PParameters::one_d(4.0).unwrap();
        assert_eq!(pp.critical_exponent(), 2.0);
        assert_eq!(pp.barenblatt_edge_exponent(), 1.5);
    }
}
