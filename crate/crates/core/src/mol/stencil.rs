//! Central-difference semi-discretization
//! `u_t^i = (p-1) |D_i|^{p-2} H_i` with frozen Dirichlet rows.

use super::grid::Grid;
use crate::analytic::PParameters;
use crate::error::{Error, Result};
use crate::numeric::sign;

/// Tridiagonal matrix; `lower[i]` couples row `i` to `i-1`, `upper[i]` to `i+1`.
///
/// `lower[0]` and `upper[n-1]` are unused and kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Entry `(i, j)`; zero outside the three diagonals.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if j + 1 == i {
            self.lower[i]
        } else if i + 1 == j {
            self.upper[i]
        } else {
            0.0
        }
    }

    /// Solves `A x = rhs` in place by the Thomas algorithm.
    ///
    /// Fails when a pivot vanishes relative to the row scale.
    pub fn solve_in_place(&self, rhs: &mut [f64], scratch: &mut Vec<f64>) -> Result<()> {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        scratch.clear();
        scratch.resize(n, 0.0);
        let mut pivot = self.diag[0];
        check_pivot(pivot, self.diag[0].abs() + self.upper[0].abs(), 0)?;
        scratch[0] = self.upper[0] / pivot;
        rhs[0] /= pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i] * scratch[i - 1];
            let scale = self.lower[i].abs() + self.diag[i].abs() + self.upper[i].abs();
            check_pivot(pivot, scale, i)?;
            scratch[i] = self.upper[i] / pivot;
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= scratch[i] * rhs[i + 1];
        }
        Ok(())
    }
}

fn check_pivot(pivot: f64, scale: f64, row: usize) -> Result<()> {
    if !pivot.is_finite() || pivot.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Solver {
            t: f64::NAN,
            reason: format!("singular tridiagonal system at row {row} (pivot {pivot:e})"),
        });
    }
    Ok(())
}

/// Writes the semi-discrete right-hand side into `out`.
pub fn rhs_into(values: &[f64], params: PParameters, grid: &Grid, out: &mut [f64]) {
    let n = values.len();
    let p = params.p();
    let inv2dx = 0.5 / grid.dx();
    let invdx2 = 1.0 / (grid.dx() * grid.dx());
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for i in 1..n - 1 {
        let (um, u0, up) = (values[i - 1], values[i], values[i + 1]);
        let d = (up - um) * inv2dx;
        let h = (up - 2.0 * u0 + um) * invdx2;
        out[i] = (p - 1.0) * d.abs().powf(p - 2.0) * h;
    }
}

/// Semi-discrete right-hand side; rejects non-finite input.
pub fn rhs(values: &[f64], params: PParameters, grid: &Grid) -> Result<Vec<f64>> {
    check_state(values, grid)?;
    let mut out = vec![0.0; values.len()];
    rhs_into(values, params, grid, &mut out);
    Ok(out)
}

pub(crate) fn check_state(values: &[f64], grid: &Grid) -> Result<()> {
    if values.len() != grid.n_nodes() {
        return Err(Error::invalid(format!(
            "state has {} values, grid has {} nodes",
            values.len(),
            grid.n_nodes()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "state value at node {i} is not finite"
        )));
    }
    Ok(())
}

/// Writes the exact Jacobian of [`rhs_into`] into `jac`.
///
/// The `|D|^{p-3}` factor is undefined at `D = 0` for `p < 3`; that term is
/// set to zero there.
pub fn jacobian_into(values: &[f64], params: PParameters, grid: &Grid, jac: &mut Tridiagonal) {
    let n = values.len();
    let p = params.p();
    let inv2dx = 0.5 / grid.dx();
    let invdx2 = 1.0 / (grid.dx() * grid.dx());
    for row in [0, n - 1] {
        jac.lower[row] = 0.0;
        jac.diag[row] = 0.0;
        jac.upper[row] = 0.0;
    }
    for i in 1..n - 1 {
        let (um, u0, up) = (values[i - 1], values[i], values[i + 1]);
        let d = (up - um) * inv2dx;
        let h = (up - 2.0 * u0 + um) * invdx2;
        let ad = d.abs();
        let a = ad.powf(p - 2.0);
        // d/dD |D|^{p-2} = (p-2) |D|^{p-3} sign(D)
        let da = if d == 0.0 {
            0.0
        } else {
            (p - 2.0) * ad.powf(p - 3.0) * sign(d)
        };
        let cross = (p - 1.0) * da * h * inv2dx;
        let diffusive = (p - 1.0) * a * invdx2;
        jac.lower[i] = diffusive - cross;
        jac.diag[i] = -2.0 * diffusive;
        jac.upper[i] = diffusive + cross;
    }
}

pub fn jacobian(values: &[f64], params: PParameters, grid: &Grid) -> Result<Tridiagonal> {
    check_state(values, grid)?;
    let mut jac = Tridiagonal::zeros(values.len());
    jacobian_into(values, params, grid, &mut jac);
    Ok(jac)
}
