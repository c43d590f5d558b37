use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mol::{build_grid, error_norms, integrate, ProblemSpec};
use crate::numeric::fmt17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_cells: usize,
    pub max_err: f64,
    pub l1_err: f64,
    /// `log2(err_prev / err)` against the previous row, for `N` doubling.
    pub max_order: Option<f64>,
    pub l1_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub const CSV_HEADER: &'static str = "n_cells,max_err,l1_err,max_order,l1_order";

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<usize> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), fmt17);
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.n_cells,
                fmt17(r.max_err),
                fmt17(r.l1_err),
                opt(r.max_order),
                opt(r.l1_order)
            )?;
        }
        Ok(self.rows.len())
    }

    /// Whether L1 errors fall strictly, by at least `ratio` per refinement.
    pub fn l1_decreasing_by(&self, ratio: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[0].l1_err >= ratio * w[1].l1_err && w[1].l1_err < w[0].l1_err)
    }

    pub fn finest_l1_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.l1_order)
    }
}

/// Placement of the grid relative to the Barenblatt center.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Centering {
    /// Every grid spans the base domain.
    AsGiven,
    /// Each grid is translated by less than one cell so that the center is a
    /// cell midpoint. With a node at the center the central difference there
    /// vanishes by symmetry, the stencil returns 0 while `Δ_p U` does not,
    /// and that node never moves.
    CellMidpoint,
}

/// Solves `base` on each grid and compares the final state to the exact
/// Barenblatt solution. Orders are `log_r(err_prev/err)` with `r` the ratio
/// of consecutive cell counts.
pub fn convergence_study(
    base: &ProblemSpec,
    grids: &[usize],
    centering: Centering,
) -> Result<ConvergenceTable> {
    let exact = base
        .initial
        .barenblatt(base.params)?
        .ok_or_else(|| Error::config("convergence study needs Barenblatt initial data"))?;
    if base.bc_left != 0.0 || base.bc_right != 0.0 {
        return Err(Error::config("convergence study needs zero boundary data"));
    }
    let (a, b) = (base.grid.x_left(), base.grid.x_right());
    let reach = exact.support_radius(base.t_end);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(grids.len());
    for &n in grids {
        let dx = (b - a) / n as f64;
        let shift = match centering {
            Centering::AsGiven => 0.0,
            Centering::CellMidpoint => {
                let s = (exact.center - a) / dx;
                (s - s.floor() - 0.5) * dx
            }
        };
        let (lo, hi) = (a + shift, b + shift);
        if exact.center - reach <= lo || exact.center + reach >= hi {
            return Err(Error::config(
                "Barenblatt support must stay strictly inside the domain up to t_end",
            ));
        }
        let spec = ProblemSpec {
            grid: build_grid(lo, hi, n)?,
            ..base.clone()
        };
        let trace = integrate(&spec, &[spec.t_end], &mut [])?;
        let xs: Vec<f64> = spec.grid.nodes().collect();
        let norms = error_norms(trace.last(), &xs, |x| exact.value(x, spec.t_end));
        let (max_order, l1_order) = match rows.last() {
            Some(prev) => {
                let r = (n as f64 / prev.n_cells as f64).ln();
                (
                    Some((prev.max_err / norms.max_norm).ln() / r),
                    Some((prev.l1_err / norms.l1_norm).ln() / r),
                )
            }
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            n_cells: n,
            max_err: norms.max_norm,
            l1_err: norms.l1_norm,
            max_order,
            l1_order,
        });
    }
    Ok(ConvergenceTable { rows })
}
