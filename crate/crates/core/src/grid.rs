//! Structured node-centered grid over an axis-aligned box.
//!
//! Nodes live at the cell corners, so an `nx x ny x nz` cell grid carries
//! `(nx+1)(ny+1)(nz+1)` nodes including the boundary layer. Storage is
//! row-major with x fastest.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("extent along axis {axis} must be positive, got {value}")]
    NonPositiveExtent { axis: usize, value: f64 },
    #[error("need at least 4 cells along axis {axis}, got {value}")]
    TooFewCells { axis: usize, value: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    extents: [f64; 3],
    cells: [usize; 3],
}

impl Grid {
    pub fn new(extents: [f64; 3], cells: [usize; 3]) -> Result<Self, GridError> {
        for axis in 0..3 {
            if !(extents[axis] > 0.0) || !extents[axis].is_finite() {
                return Err(GridError::NonPositiveExtent {
                    axis,
                    value: extents[axis],
                });
            }
            if cells[axis] < 4 {
                return Err(GridError::TooFewCells {
                    axis,
                    value: cells[axis],
                });
            }
        }
        Ok(Grid { extents, cells })
    }

    /// Unit cube with the same cell count on every axis.
    pub fn unit_cube(n: usize) -> Result<Self, GridError> {
        Grid::new([1.0, 1.0, 1.0], [n, n, n])
    }

    pub fn extents(&self) -> [f64; 3] {
        self.extents
    }

    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    /// Nodes per axis, cells + 1.
    pub fn nodes(&self) -> [usize; 3] {
        [self.cells[0] + 1, self.cells[1] + 1, self.cells[2] + 1]
    }

    pub fn node_count(&self) -> usize {
        let n = self.nodes();
        n[0] * n[1] * n[2]
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.extents[0] / self.cells[0] as f64,
            self.extents[1] / self.cells[1] as f64,
            self.extents[2] / self.cells[2] as f64,
        ]
    }

    pub fn min_spacing(&self) -> f64 {
        let h = self.spacing();
        h[0].min(h[1]).min(h[2])
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let n = self.nodes();
        i + n[0] * (j + n[1] * k)
    }

    #[inline]
    pub fn position(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.spacing();
        [i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]]
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        i == 0
            || j == 0
            || k == 0
            || i == self.cells[0]
            || j == self.cells[1]
            || k == self.cells[2]
    }

    /// Trapezoidal quadrature weight of a node (volume measure included).
    #[inline]
    pub fn quad_weight(&self, i: usize, j: usize, k: usize) -> f64 {
        let h = self.spacing();
        let w = |idx: usize, last: usize| if idx == 0 || idx == last { 0.5 } else { 1.0 };
        w(i, self.cells[0]) * w(j, self.cells[1]) * w(k, self.cells[2]) * h[0] * h[1] * h[2]
    }

    pub fn for_each_node(&self, mut body: impl FnMut(usize, usize, usize, usize)) {
        let n = self.nodes();
        let mut idx = 0;
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    body(i, j, k, idx);
                    idx += 1;
                }
            }
        }
    }

    pub fn for_each_interior_node(&self, mut body: impl FnMut(usize, usize, usize, usize)) {
        let n = self.nodes();
        for k in 1..n[2] - 1 {
            for j in 1..n[1] - 1 {
                for i in 1..n[0] - 1 {
                    body(i, j, k, self.index(i, j, k));
                }
            }
        }
    }

    pub fn for_each_boundary_node(&self, mut body: impl FnMut(usize, usize, usize, usize)) {
        self.for_each_node(|i, j, k, idx| {
            if self.is_boundary(i, j, k) {
                body(i, j, k, idx);
            }
        });
    }

    /// Outward unit normal axes active at a node: `normal_axes[d]` is true
    /// when the node lies on a face perpendicular to axis `d`. Edge and
    /// corner nodes activate several axes.
    pub fn boundary_axes(&self, i: usize, j: usize, k: usize) -> [bool; 3] {
        [
            i == 0 || i == self.cells[0],
            j == 0 || j == self.cells[1],
            k == 0 || k == self.cells[2],
        ]
    }

    pub fn interior_node_count(&self) -> usize {
        let n = self.nodes();
        (n[0] - 2) * (n[1] - 2) * (n[2] - 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_times_cells_recovers_extent() {
        let g = Grid::new([2.0, 1.0, 3.0], [8, 4, 12]).unwrap();
        let h = g.spacing();
        for d in 0..3 {
            assert!((h[d] * g.cells()[d] as f64 - g.extents()[d]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert_eq!(
            Grid::new([0.0, 1.0, 1.0], [4, 4, 4]),
            Err(GridError::NonPositiveExtent { axis: 0, value: 0.0 })
        );
        assert_eq!(
            Grid::new([1.0, 1.0, 1.0], [4, 3, 4]),
            Err(GridError::TooFewCells { axis: 1, value: 3 })
        );
    }

    #[test]
    fn quad_weights_sum_to_volume() {
        let g = Grid::new([2.0, 1.0, 1.0], [6, 4, 5]).unwrap();
        let mut total = 0.0;
        g.for_each_node(|i, j, k, _| total += g.quad_weight(i, j, k));
        assert!((total - 2.0).abs() < 1e-13);
    }

    #[test]
    fn boundary_classification() {
        let g = Grid::unit_cube(4).unwrap();
        assert!(g.is_boundary(0, 2, 2));
        assert!(g.is_boundary(4, 4, 4));
        assert!(!g.is_boundary(2, 2, 2));
        assert_eq!(g.boundary_axes(0, 2, 4), [true, false, true]);
        let mut interior = 0;
        g.for_each_interior_node(|_, _, _, _| interior += 1);
        assert_eq!(interior, g.interior_node_count());
    }
}
