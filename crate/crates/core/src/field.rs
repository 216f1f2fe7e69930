//! Scalar, vector, and symmetric tensor fields collocated on grid nodes.
//!
//! Fields are plain value types: construct, read, combine. All differential
//! operators live in [`crate::ops`].

use crate::grid::Grid;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("value count {got} does not match node count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("tensor flagged symmetric has asymmetric entries at node {node}")]
    NotSymmetric { node: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; grid.node_count()];
        grid.for_each_node(|i, j, k, idx| {
            let [x, y, z] = grid.position(i, j, k);
            values[idx] = f(x, y, z);
        });
        ScalarField { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.node_count() {
            return Err(FieldError::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.grid.index(i, j, k);
        self.values[idx] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled_add(&mut self, a: f64, other: &ScalarField) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += a * o;
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<[f64; 3]>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            values: vec![[0.0; 3]; grid.node_count()],
        }
    }

    pub fn constant(grid: Grid, c: [f64; 3]) -> Self {
        VectorField {
            grid,
            values: vec![c; grid.node_count()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let mut values = vec![[0.0; 3]; grid.node_count()];
        grid.for_each_node(|i, j, k, idx| {
            let [x, y, z] = grid.position(i, j, k);
            values[idx] = f(x, y, z);
        });
        VectorField { grid, values }
    }

    pub fn from_components(
        grid: Grid,
        x: Vec<f64>,
        y: Vec<f64>,
        z: Vec<f64>,
    ) -> Result<Self, FieldError> {
        let n = grid.node_count();
        for comp in [&x, &y, &z] {
            if comp.len() != n {
                return Err(FieldError::LengthMismatch {
                    expected: n,
                    got: comp.len(),
                });
            }
        }
        let values = (0..n).map(|idx| [x[idx], y[idx], z[idx]]).collect();
        Ok(VectorField { grid, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        self.values[self.grid.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: [f64; 3]) {
        let idx = self.grid.index(i, j, k);
        self.values[idx] = v;
    }

    /// One component as a scalar field (copies).
    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField::from_values(self.grid, self.values.iter().map(|v| v[c]).collect()).unwrap()
    }

    /// Nodewise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField {
        ScalarField::from_values(
            self.grid,
            self.values
                .iter()
                .map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
                .collect(),
        )
        .unwrap()
    }

    pub fn map(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        VectorField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &VectorField,
        f: impl Fn([f64; 3], [f64; 3]) -> [f64; 3],
    ) -> Result<Self, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(VectorField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled_add(&mut self, a: f64, other: &VectorField) {
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            v[0] += a * o[0];
            v[1] += a * o[1];
            v[2] += a * o[2];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Grid,
    values: Vec<[[f64; 3]; 3]>,
    symmetric: bool,
}

impl TensorField {
    pub fn zeros(grid: Grid, symmetric: bool) -> Self {
        TensorField {
            grid,
            values: vec![[[0.0; 3]; 3]; grid.node_count()],
            symmetric,
        }
    }

    pub fn from_values(
        grid: Grid,
        values: Vec<[[f64; 3]; 3]>,
        symmetric: bool,
    ) -> Result<Self, FieldError> {
        if values.len() != grid.node_count() {
            return Err(FieldError::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        if symmetric {
            for (node, t) in values.iter().enumerate() {
                for a in 0..3 {
                    for b in (a + 1)..3 {
                        if t[a][b] != t[b][a] {
                            return Err(FieldError::NotSymmetric { node });
                        }
                    }
                }
            }
        }
        Ok(TensorField {
            grid,
            values,
            symmetric,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn values(&self) -> &[[[f64; 3]; 3]] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [[[f64; 3]; 3]] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> [[f64; 3]; 3] {
        self.values[self.grid.index(i, j, k)]
    }

    /// Nodewise trace as a scalar field.
    pub fn trace(&self) -> ScalarField {
        ScalarField::from_values(
            self.grid,
            self.values
                .iter()
                .map(|t| t[0][0] + t[1][1] + t[2][2])
                .collect(),
        )
        .unwrap()
    }

    /// Nodewise Frobenius contraction with another tensor field.
    pub fn contract(&self, other: &TensorField) -> Result<ScalarField, FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(ScalarField::from_values(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| {
                    let mut s = 0.0;
                    for p in 0..3 {
                        for q in 0..3 {
                            s += a[p][q] * b[p][q];
                        }
                    }
                    s
                })
                .collect(),
        )
        .unwrap())
    }

    /// Nodewise Frobenius magnitude, |T| = sqrt(T:T).
    pub fn magnitude(&self) -> ScalarField {
        ScalarField::from_values(
            self.grid,
            self.values
                .iter()
                .map(|t| {
                    let mut s = 0.0;
                    for p in 0..3 {
                        for q in 0..3 {
                            s += t[p][q] * t[p][q];
                        }
                    }
                    s.sqrt()
                })
                .collect(),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_values_checks_length() {
        let g = Grid::unit_cube(4).unwrap();
        assert!(ScalarField::from_values(g, vec![0.0; 10]).is_err());
        assert!(ScalarField::from_values(g, vec![0.0; g.node_count()]).is_ok());
    }

    #[test]
    fn symmetric_tensor_rejects_asymmetry() {
        let g = Grid::unit_cube(4).unwrap();
        let mut vals = vec![[[0.0; 3]; 3]; g.node_count()];
        vals[7][0][1] = 1.0;
        assert_eq!(
            TensorField::from_values(g, vals.clone(), true),
            Err(FieldError::NotSymmetric { node: 7 })
        );
        assert!(TensorField::from_values(g, vals, false).is_ok());
    }

    #[test]
    fn magnitude_and_trace() {
        let g = Grid::unit_cube(4).unwrap();
        let v = VectorField::constant(g, [3.0, 4.0, 0.0]);
        assert!((v.magnitude().max_value() - 5.0).abs() < 1e-15);
    }
}
