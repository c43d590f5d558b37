use serde::{Deserialize, Serialize};

use super::PParameters;
use crate::error::{Error, Result};
use crate::numeric::pow_pos;

/// Constants of the Barenblatt source solution
/// `U(x,t) = t^{-k} (C0 - q (|x| / t^{k/n})^{p/(p-1)})_+^{(p-1)/(p-2)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarenblattConstants {
    pub k: f64,
    pub q: f64,
    pub c0: f64,
    params: PParameters,
}

/// `k = 1/(p - 2 + p/n)`, `q = ((p-2)/p) (k/n)^{1/(p-1)}`; `C0` defaults to `q`.
pub fn barenblatt_constants(params: PParameters, c0: Option<f64>) -> Result<BarenblattConstants> {
    let p = params.p();
    let n = params.nf();
    let k = 1.0 / (p - 2.0 + p / n);
    let q = (p - 2.0) / p * (k / n).powf(1.0 / (p - 1.0));
    let c0 = match c0 {
        Some(c) if !(c > 0.0 && c.is_finite()) => {
            return Err(Error::invalid(format!("C0 must be positive, got {c}")))
        }
        Some(c) => c,
        None => q,
    };
    Ok(BarenblattConstants { k, q, c0, params })
}

impl BarenblattConstants {
    pub fn params(&self) -> PParameters {
        self.params
    }

    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.value_unchecked(x, t))
    }

    pub(crate) fn value_unchecked(&self, x: f64, t: f64) -> f64 {
        let p = self.params.p();
        let n = self.params.nf();
        let xi = x.abs() / t.powf(self.k / n);
        let inner = self.c0 - self.q * pow_pos(xi, p / (p - 1.0));
        t.powf(-self.k) * pow_pos(inner, (p - 1.0) / (p - 2.0))
    }

    /// Radius of the support ball, `(C0/q)^{(p-1)/p} t^{k/n}`.
    pub fn support_radius(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let p = self.params.p();
        Ok((self.c0 / self.q).powf((p - 1.0) / p) * t.powf(self.k / self.params.nf()))
    }

    /// Time at which the support radius equals `radius`.
    pub fn time_of_radius(&self, radius: f64) -> Result<f64> {
        if !(radius > 0.0) {
            return Err(Error::invalid("radius must be positive"));
        }
        let p = self.params.p();
        let scale = (self.c0 / self.q).powf((p - 1.0) / p);
        Ok((radius / scale).powf(self.params.nf() / self.k))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "Barenblatt time must be > 0, got {t}"
        )))
    }
}

/// Intrinsically rescaled and translated Barenblatt solution
/// `s · U(x - center, s^{p-2} t + t0)`.
///
/// Every member of this family solves the equation exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedBarenblatt {
    pub constants: BarenblattConstants,
    pub center: f64,
    pub scale: f64,
    pub t0: f64,
}

impl ShiftedBarenblatt {
    pub fn new(constants: BarenblattConstants, center: f64, scale: f64, t0: f64) -> Result<Self> {
        if !(scale > 0.0) || !(t0 > 0.0) {
            return Err(Error::invalid(
                "shifted Barenblatt needs scale > 0 and t0 > 0",
            ));
        }
        Ok(Self {
            constants,
            center,
            scale,
            t0,
        })
    }

    fn inner_time(&self, t: f64) -> f64 {
        self.scale.powf(self.constants.params.p() - 2.0) * t + self.t0
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.scale
            * self
                .constants
                .value_unchecked(x - self.center, self.inner_time(t))
    }

    pub fn support_radius(&self, t: f64) -> f64 {
        let p = self.constants.params.p();
        (self.constants.c0 / self.constants.q).powf((p - 1.0) / p)
            * self
                .inner_time(t)
                .powf(self.constants.k / self.constants.params.nf())
    }

    /// Time (in this family's clock) at which the support radius equals `radius`.
    pub fn time_of_radius(&self, radius: f64) -> Result<f64> {
        let inner = self.constants.time_of_radius(radius)?;
        Ok((inner - self.t0) / self.scale.powf(self.constants.params.p() - 2.0))
    }
}
