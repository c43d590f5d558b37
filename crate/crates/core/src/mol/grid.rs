use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest accepted number of cells.
pub const MIN_CELLS: usize = 8;

/// Uniform grid with nodes `x_left + i dx`, `i = 0..=n_cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
    dx: f64,
}

pub fn build_grid(x_left: f64, x_right: f64, n_cells: usize) -> Result<Grid> {
    if !(x_left.is_finite() && x_right.is_finite() && x_left < x_right) {
        return Err(Error::invalid(format!(
            "grid needs finite x_left < x_right, got [{x_left}, {x_right}]"
        )));
    }
    if n_cells < MIN_CELLS {
        return Err(Error::invalid(format!(
            "grid needs at least {MIN_CELLS} cells, got {n_cells}"
        )));
    }
    Ok(Grid {
        x_left,
        x_right,
        n_cells,
        dx: (x_right - x_left) / n_cells as f64,
    })
}

impl Grid {
    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.x_right
        } else {
            self.x_left + i as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_cells).map(|i| self.x(i))
    }

    /// Index of the node nearest to `x`, clamped to the grid.
    pub fn nearest_node(&self, x: f64) -> usize {
        let s = ((x - self.x_left) / self.dx).round();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.n_cells)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_left && x <= self.x_right
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_or_inverted_grids() {
        assert!(build_grid(-1.0, 1.0, 4).is_err());
        assert!(build_grid(1.0, -1.0, 100).is_err());
        assert!(build_grid(0.0, f64::INFINITY, 100).is_err());
    }

    #[test]
    fn spacing_and_nodes() {
        let g = build_grid(-1.0, 1.0, 400).unwrap();
        assert_eq!(g.dx(), 0.005);
        let g = build_grid(0.0, 2.0, 100).unwrap();
        let xs: Vec<f64> = g.nodes().collect();
        assert_eq!(xs.len(), 101);
        assert_eq!(xs[0], 0.0);
        assert_eq!(xs[1], 0.02);
        assert_eq!(xs[100], 2.0);
        assert!((xs[50] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn nearest_node_clamps() {
        let g = build_grid(-1.0, 1.0, 800).unwrap();
        assert_eq!(g.nearest_node(0.0), 400);
        assert_eq!(g.nearest_node(-5.0), 0);
        assert_eq!(g.nearest_node(5.0), 800);
        assert_eq!(g.nearest_node(0.0011), 400);
        assert_eq!(g.nearest_node(0.0013), 401);
    }
}
