//! Discrete differential operators, quadrature, and norms on box fields.
//!
//! Interior derivatives are second-order central differences; boundary nodes
//! use second-order one-sided stencils so every operator is defined on the
//! closed domain without ghost state. Volume quadrature is the trapezoidal
//! rule induced by the node layout.

use crate::field::{ScalarField, TensorField, VectorField};
use crate::grid::Grid;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OpsError {
    #[error("Lp exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("Sobolev order must be at most 3, got {0}")]
    InvalidOrder(usize),
}

/// First derivative along one axis of a raw value buffer.
///
/// Central differences in the interior, second-order one-sided at the two
/// boundary planes.
fn diff_axis_values(grid: Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.nodes();
    let h = grid.spacing()[axis];
    let stride = match axis {
        0 => 1,
        1 => n[0],
        _ => n[0] * n[1],
    };
    let last = n[axis] - 1;
    let mut out = vec![0.0; values.len()];
    grid.for_each_node(|i, j, k, idx| {
        let a = [i, j, k][axis];
        out[idx] = if a == 0 {
            (-3.0 * values[idx] + 4.0 * values[idx + stride] - values[idx + 2 * stride])
                / (2.0 * h)
        } else if a == last {
            (3.0 * values[idx] - 4.0 * values[idx - stride] + values[idx - 2 * stride])
                / (2.0 * h)
        } else {
            (values[idx + stride] - values[idx - stride]) / (2.0 * h)
        };
    });
    out
}

/// Second derivative along one axis; the one-sided 4-point closure
/// (2, -5, 4, -1)/h^2 is second-order accurate, boundary values are
/// extrapolated rather than imposed.
fn second_diff_axis_values(grid: Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let n = grid.nodes();
    let h2 = grid.spacing()[axis] * grid.spacing()[axis];
    let stride = match axis {
        0 => 1,
        1 => n[0],
        _ => n[0] * n[1],
    };
    let last = n[axis] - 1;
    let mut out = vec![0.0; values.len()];
    grid.for_each_node(|i, j, k, idx| {
        let a = [i, j, k][axis];
        out[idx] = if a == 0 {
            (2.0 * values[idx] - 5.0 * values[idx + stride] + 4.0 * values[idx + 2 * stride]
                - values[idx + 3 * stride])
                / h2
        } else if a == last {
            (2.0 * values[idx] - 5.0 * values[idx - stride] + 4.0 * values[idx - 2 * stride]
                - values[idx - 3 * stride])
                / h2
        } else {
            (values[idx + stride] - 2.0 * values[idx] + values[idx - stride]) / h2
        };
    });
    out
}

pub fn diff_axis(f: &ScalarField, axis: usize) -> ScalarField {
    ScalarField::from_values(f.grid(), diff_axis_values(f.grid(), f.values(), axis)).unwrap()
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let dx = diff_axis_values(grid, f.values(), 0);
    let dy = diff_axis_values(grid, f.values(), 1);
    let dz = diff_axis_values(grid, f.values(), 2);
    VectorField::from_components(grid, dx, dy, dz).unwrap()
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = v.grid();
    let mut out = vec![0.0; grid.node_count()];
    for axis in 0..3 {
        let comp: Vec<f64> = v.values().iter().map(|w| w[axis]).collect();
        let d = diff_axis_values(grid, &comp, axis);
        for (o, dv) in out.iter_mut().zip(&d) {
            *o += dv;
        }
    }
    ScalarField::from_values(grid, out).unwrap()
}

/// Conservative-form divergence used for convective fluxes.
///
/// Identical to central differences in the interior but closed with the
/// first-order one-sided row (F1 - F0)/h at the boundary, which makes the
/// operator telescope exactly against the trapezoidal quadrature:
/// sum_w div F = net boundary flux, so impermeable walls conserve mass to
/// rounding.
pub fn divergence_conservative(v: &VectorField) -> ScalarField {
    let grid = v.grid();
    let n = grid.nodes();
    let h = grid.spacing();
    let mut out = vec![0.0; grid.node_count()];
    for axis in 0..3 {
        let stride = match axis {
            0 => 1,
            1 => n[0],
            _ => n[0] * n[1],
        };
        let last = n[axis] - 1;
        let comp: Vec<f64> = v.values().iter().map(|w| w[axis]).collect();
        grid.for_each_node(|i, j, k, idx| {
            let a = [i, j, k][axis];
            out[idx] += if a == 0 {
                (comp[idx + stride] - comp[idx]) / h[axis]
            } else if a == last {
                (comp[idx] - comp[idx - stride]) / h[axis]
            } else {
                (comp[idx + stride] - comp[idx - stride]) / (2.0 * h[axis])
            };
        });
    }
    ScalarField::from_values(grid, out).unwrap()
}

/// Velocity gradient tensor, (grad u)_{ab} = d u_a / d x_b.
pub fn gradient_vector(u: &VectorField) -> TensorField {
    let grid = u.grid();
    let mut vals = vec![[[0.0; 3]; 3]; grid.node_count()];
    for a in 0..3 {
        let comp: Vec<f64> = u.values().iter().map(|w| w[a]).collect();
        for b in 0..3 {
            let d = diff_axis_values(grid, &comp, b);
            for (t, dv) in vals.iter_mut().zip(&d) {
                t[a][b] = *dv;
            }
        }
    }
    TensorField::from_values(grid, vals, false).unwrap()
}

/// Symmetric velocity gradient, (grad u + grad^t u)/2.
pub fn strain_rate(u: &VectorField) -> TensorField {
    let g = gradient_vector(u);
    let vals = g
        .values()
        .iter()
        .map(|t| {
            let mut s = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    s[a][b] = 0.5 * (t[a][b] + t[b][a]);
                }
            }
            s
        })
        .collect();
    TensorField::from_values(u.grid(), vals, true).unwrap()
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut out = vec![0.0; grid.node_count()];
    for axis in 0..3 {
        let d = second_diff_axis_values(grid, f.values(), axis);
        for (o, dv) in out.iter_mut().zip(&d) {
            *o += dv;
        }
    }
    ScalarField::from_values(grid, out).unwrap()
}

pub fn laplacian_vector(u: &VectorField) -> VectorField {
    let grid = u.grid();
    let mut comps = Vec::with_capacity(3);
    for a in 0..3 {
        let comp: Vec<f64> = u.values().iter().map(|w| w[a]).collect();
        let mut out = vec![0.0; grid.node_count()];
        for axis in 0..3 {
            let d = second_diff_axis_values(grid, &comp, axis);
            for (o, dv) in out.iter_mut().zip(&d) {
                *o += dv;
            }
        }
        comps.push(out);
    }
    let z = comps.pop().unwrap();
    let y = comps.pop().unwrap();
    let x = comps.pop().unwrap();
    VectorField::from_components(grid, x, y, z).unwrap()
}

/// Row-wise divergence of a tensor field, (div T)_a = sum_b d T_{ab} / d x_b.
pub fn divergence_tensor(t: &TensorField) -> VectorField {
    let grid = t.grid();
    let mut comps = Vec::with_capacity(3);
    for a in 0..3 {
        let mut out = vec![0.0; grid.node_count()];
        for b in 0..3 {
            let entry: Vec<f64> = t.values().iter().map(|m| m[a][b]).collect();
            let d = diff_axis_values(grid, &entry, b);
            for (o, dv) in out.iter_mut().zip(&d) {
                *o += dv;
            }
        }
        comps.push(out);
    }
    let z = comps.pop().unwrap();
    let y = comps.pop().unwrap();
    let x = comps.pop().unwrap();
    VectorField::from_components(grid, x, y, z).unwrap()
}

/// Convective derivative (u . grad) g of a scalar field.
pub fn advect_scalar(u: &VectorField, g: &ScalarField) -> ScalarField {
    let grad = gradient(g);
    ScalarField::from_values(
        g.grid(),
        u.values()
            .iter()
            .zip(grad.values())
            .map(|(uv, gv)| uv[0] * gv[0] + uv[1] * gv[1] + uv[2] * gv[2])
            .collect(),
    )
    .unwrap()
}

/// Convective derivative (u . grad) w of a vector field, componentwise.
pub fn advect_vector(u: &VectorField, w: &VectorField) -> VectorField {
    let g = gradient_vector(w);
    let mut out = VectorField::zeros(w.grid());
    for ((o, uv), t) in out.values_mut().iter_mut().zip(u.values()).zip(g.values()) {
        for a in 0..3 {
            o[a] = uv[0] * t[a][0] + uv[1] * t[a][1] + uv[2] * t[a][2];
        }
    }
    out
}

/// Trapezoidal volume quadrature over the box.
pub fn integrate(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let mut total = 0.0;
    grid.for_each_node(|i, j, k, idx| {
        total += grid.quad_weight(i, j, k) * f.values()[idx];
    });
    total
}

/// L2 inner product of two scalar fields on the same grid.
pub fn inner_product(f: &ScalarField, g: &ScalarField) -> f64 {
    let grid = f.grid();
    let mut total = 0.0;
    grid.for_each_node(|i, j, k, idx| {
        total += grid.quad_weight(i, j, k) * f.values()[idx] * g.values()[idx];
    });
    total
}

/// Trapezoidal quadrature of a scalar over the six box faces.
pub fn boundary_integral(f: &ScalarField) -> f64 {
    let grid = f.grid();
    let n = grid.nodes();
    let h = grid.spacing();
    let mut total = 0.0;
    // face perpendicular to `axis` at plane index `plane`
    for axis in 0..3 {
        let (t1, t2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let w = |idx: usize, last: usize| if idx == 0 || idx == last { 0.5 } else { 1.0 };
        for plane in [0, n[axis] - 1] {
            for b in 0..n[t2] {
                for a in 0..n[t1] {
                    let mut ijk = [0usize; 3];
                    ijk[axis] = plane;
                    ijk[t1] = a;
                    ijk[t2] = b;
                    let weight = w(a, n[t1] - 1) * w(b, n[t2] - 1) * h[t1] * h[t2];
                    total += weight * f.at(ijk[0], ijk[1], ijk[2]);
                }
            }
        }
    }
    total
}

/// Fields that expose a nodewise magnitude and scalar components, so the
/// same norm routines serve scalars and vectors.
pub trait NormField {
    fn grid(&self) -> Grid;
    fn node_magnitude(&self, idx: usize) -> f64;
    fn scalar_components(&self) -> Vec<ScalarField>;
}

impl NormField for ScalarField {
    fn grid(&self) -> Grid {
        ScalarField::grid(self)
    }
    fn node_magnitude(&self, idx: usize) -> f64 {
        self.values()[idx].abs()
    }
    fn scalar_components(&self) -> Vec<ScalarField> {
        vec![self.clone()]
    }
}

impl NormField for VectorField {
    fn grid(&self) -> Grid {
        VectorField::grid(self)
    }
    fn node_magnitude(&self, idx: usize) -> f64 {
        let v = self.values()[idx];
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    }
    fn scalar_components(&self) -> Vec<ScalarField> {
        (0..3).map(|c| self.component(c)).collect()
    }
}

/// Lp norm by quadrature; p = infinity returns the max nodewise magnitude.
pub fn lp_norm<F: NormField>(f: &F, p: f64) -> Result<f64, OpsError> {
    if !(p >= 1.0) {
        return Err(OpsError::InvalidExponent(p));
    }
    let grid = f.grid();
    if p.is_infinite() {
        let mut m: f64 = 0.0;
        grid.for_each_node(|_, _, _, idx| m = m.max(f.node_magnitude(idx)));
        return Ok(m);
    }
    let mut total = 0.0;
    grid.for_each_node(|i, j, k, idx| {
        total += grid.quad_weight(i, j, k) * f.node_magnitude(idx).powf(p);
    });
    Ok(total.powf(1.0 / p))
}

/// W^{k,2} norm via repeated first differences, k <= 3.
///
/// Sums the squared L2 norms of every distinct partial derivative with
/// |alpha| <= k. Third differences near the boundary fall back on repeated
/// one-sided stencils and are lower accuracy there.
pub fn sobolev_norm<F: NormField>(f: &F, k: usize) -> Result<f64, OpsError> {
    if k > 3 {
        return Err(OpsError::InvalidOrder(k));
    }
    let mut total = 0.0;
    for comp in f.scalar_components() {
        for ax in 0..=k {
            for ay in 0..=(k - ax) {
                for az in 0..=(k - ax - ay) {
                    let mut d = comp.clone();
                    for _ in 0..ax {
                        d = diff_axis(&d, 0);
                    }
                    for _ in 0..ay {
                        d = diff_axis(&d, 1);
                    }
                    for _ in 0..az {
                        d = diff_axis(&d, 2);
                    }
                    total += inner_product(&d, &d);
                }
            }
        }
    }
    Ok(total.sqrt())
}
