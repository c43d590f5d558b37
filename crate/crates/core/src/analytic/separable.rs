use serde::{Deserialize, Serialize};

use super::PParameters;
use crate::error::{Error, Result};

/// Constants of the separable radial supersolution
/// `v(x,t) = c_p c_o (T - t)^{-1/(p-2)} |x|^δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableConstants {
    pub delta: f64,
    /// Time factor: `f(t) = c_p (T - t)^{-1/(p-2)}` solves `f' = f^{p-1}`.
    pub c_p: f64,
    /// Space factor making `g = c_o r^δ` satisfy `Δ_p g <= g` for `r <= 2`.
    pub c_o: f64,
    /// `C(p, δ) = c_p c_o`.
    pub c: f64,
    params: PParameters,
}

pub fn separable_constants(params: PParameters, delta: f64) -> Result<SeparableConstants> {
    let p = params.p();
    let n = params.nf();
    let crit = params.critical_exponent();
    // Allow the critical exponent itself to survive the rounding of p/(p-2).
    if !(delta >= crit * (1.0 - 1e-14)) || !delta.is_finite() {
        return Err(Error::invalid(format!(
            "decay exponent δ = {delta} must be >= p/(p-2) = {crit}"
        )));
    }
    let c_p = (p - 2.0).powf(-1.0 / (p - 2.0));
    let bracket = delta.powf(p - 1.0) * ((p - 1.0) * (delta - 1.0) + (n - 1.0));
    let c_o = bracket.powf(1.0 / (2.0 - p)) * 2f64.powf(crit - delta);
    Ok(SeparableConstants {
        delta,
        c_p,
        c_o,
        c: c_p * c_o,
        params,
    })
}

impl SeparableConstants {
    pub fn params(&self) -> PParameters {
        self.params
    }

    /// `c_p c_o (T - t)^{-1/(p-2)} |x|^δ`; rejects `t >= T` (blow-up) and `|x| > 2`.
    pub fn supersolution_value(&self, x: f64, t: f64, horizon: f64) -> Result<f64> {
        if !(t < horizon) {
            return Err(Error::invalid(format!(
                "t = {t} is past the blow-up time T = {horizon}"
            )));
        }
        if x.abs() > 2.0 {
            return Err(Error::invalid(format!(
                "|x| = {} exceeds the validity radius 2",
                x.abs()
            )));
        }
        Ok(self.value_unchecked(x, t, horizon))
    }

    pub(crate) fn value_unchecked(&self, x: f64, t: f64, horizon: f64) -> f64 {
        let p = self.params.p();
        self.c * (horizon - t).powf(-1.0 / (p - 2.0)) * x.abs().powf(self.delta)
    }
}

/// Memory horizon `[C(p,δ)/M]^{p-2} r^p`.
pub fn memory_horizon(params: PParameters, delta: f64, m: f64, r: f64) -> Result<f64> {
    if !(m > 0.0) || !(r > 0.0) {
        return Err(Error::invalid(format!(
            "memory horizon needs M > 0 and r > 0, got M = {m}, r = {r}"
        )));
    }
    let sc = separable_constants(params, delta)?;
    let p = params.p();
    Ok((sc.c / m).powf(p - 2.0) * r.powf(p))
}
