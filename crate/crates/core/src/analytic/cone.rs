use serde::{Deserialize, Serialize};

use super::PParameters;
use crate::error::{Error, Result};

/// Intrinsic scaling `u -> λ^q u(x/λ, μ t)` applied with `λ = a` to build the
/// support-distance time sequence in a cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeScaling {
    pub q_exp: f64,
    pub a: f64,
    pub mu: f64,
    pub tau: f64,
}

impl ConeScaling {
    pub fn new(params: PParameters, q_exp: f64, a: f64, tau: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::invalid(format!("a must lie in (0,1), got {a}")));
        }
        if !(tau > 0.0) || !(q_exp > 0.0) {
            return Err(Error::invalid("cone scaling needs τ > 0 and q > 0"));
        }
        Ok(Self {
            q_exp,
            a,
            mu: a.powf(scaling_exponent(params, q_exp)),
            tau,
        })
    }

    /// Whether `t_k` grows without bound, from the geometric-series criterion.
    pub fn divergence(&self, params: PParameters) -> ConeDivergence {
        let e = scaling_exponent(params, self.q_exp);
        if e > 0.0 {
            ConeDivergence::Diverges
        } else if e == 0.0 {
            ConeDivergence::DivergesLinearly
        } else {
            let ratio = self.a.powf(-e);
            ConeDivergence::Converges {
                limit: self.tau / (1.0 - ratio),
            }
        }
    }
}

/// `q (p - 2) - p`.
fn scaling_exponent(params: PParameters, q_exp: f64) -> f64 {
    q_exp * (params.p() - 2.0) - params.p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConeDivergence {
    /// `q (p-2) > p`: geometric growth.
    Diverges,
    /// Boundary case `q = p/(p-2)`: `μ = 1`, `t_k = τ (k+1)`.
    DivergesLinearly,
    Converges {
        limit: f64,
    },
}

impl ConeDivergence {
    pub fn diverges(&self) -> bool {
        !matches!(self, ConeDivergence::Converges { .. })
    }
}

/// `t_k = τ Σ_{j=0..k} (1/a)^{(q(p-2)-p) j}` for `k = 0..=k_max`.
pub fn cone_time_sequence(cs: &ConeScaling, params: PParameters, k_max: usize) -> Result<Vec<f64>> {
    if !(cs.a > 0.0 && cs.a < 1.0) {
        return Err(Error::invalid(format!("a must lie in (0,1), got {}", cs.a)));
    }
    let ratio = (1.0 / cs.a).powf(scaling_exponent(params, cs.q_exp));
    let mut out = Vec::with_capacity(k_max + 1);
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..=k_max {
        sum += term;
        out.push(cs.tau * sum);
        term *= ratio;
    }
    Ok(out)
}

/// Result of resampling `λ^q u(x/λ, ·)` on the source grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTransform {
    /// `None` where `x/λ` falls outside the source grid.
    pub samples: Vec<Option<f64>>,
    pub mu: f64,
}

impl SimilarityTransform {
    /// A source snapshot at time `s` represents the transformed solution at `s / μ`.
    pub fn target_time(&self, source_time: f64) -> f64 {
        source_time / self.mu
    }
}

/// Applies `T_λ` to nodal samples on the sorted abscissae `xs`.
pub fn similarity_transform(
    xs: &[f64],
    values: &[f64],
    lambda: f64,
    q_exp: f64,
    params: PParameters,
) -> Result<SimilarityTransform> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("λ must be positive, got {lambda}")));
    }
    if xs.len() != values.len() || xs.len() < 2 {
        return Err(Error::invalid(
            "abscissae and values must match, length >= 2",
        ));
    }
    let amp = lambda.powf(q_exp);
    let samples = xs
        .iter()
        .map(|&x| interpolate(xs, values, x / lambda).map(|v| amp * v))
        .collect();
    Ok(SimilarityTransform {
        samples,
        mu: lambda.powf(scaling_exponent(params, q_exp)),
    })
}

fn interpolate(xs: &[f64], values: &[f64], x: f64) -> Option<f64> {
    let (first, last) = (xs[0], xs[xs.len() - 1]);
    if !(x >= first && x <= last) {
        return None;
    }
    let j = xs.partition_point(|&xi| xi <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let w = (x - x0) / (x1 - x0);
    Some(values[j - 1] + w * (values[j] - values[j - 1]))
}
