//! Functionals evaluated on state snapshots: the ballistic energy budget,
//! material derivatives, the velocity decomposition, the interpolation
//! inequality check, the data-size gauge, and the per-sample record of all
//! monitored norms.

use crate::constitutive::{self, ConstitutiveError, PhysParams};
use crate::elliptic::{self, EllipticSolverConfig, SolverError};
use crate::field::{ScalarField, TensorField, VectorField};
use crate::integrator::{BoundaryData, FluidState};
use crate::ops;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiagError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("dt must be positive, got {0}")]
    InvalidDt(f64),
    #[error("temperature must stay positive, min is {0}")]
    NonPositiveTemperature(f64),
    #[error("field must vanish on the boundary, node {node} holds {value:.3e}")]
    NonZeroTrace { node: usize, value: f64 },
    #[error("data minima must be positive: {0}")]
    NonPositiveData(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
}

fn tangential_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// 2D trapezoid integral of f over one face of the box (axis = face normal,
/// side 0 = low face, 1 = high face).
fn face_integral(f: &ScalarField, axis: usize, side: usize) -> f64 {
    let grid = f.grid();
    let cells = grid.cells();
    let h = grid.spacing();
    let (p, q) = tangential_axes(axis);
    let fixed = if side == 0 { 0 } else { cells[axis] };
    let mut total = 0.0;
    for jq in 0..=cells[q] {
        let wq = if jq == 0 || jq == cells[q] { 0.5 } else { 1.0 };
        for jp in 0..=cells[p] {
            let wp = if jp == 0 || jp == cells[p] { 0.5 } else { 1.0 };
            let mut ijk = [0usize; 3];
            ijk[axis] = fixed;
            ijk[p] = jp;
            ijk[q] = jq;
            let idx = grid.index(ijk[0], ijk[1], ijk[2]);
            total += wp * wq * f.values()[idx];
        }
    }
    total * h[p] * h[q]
}

/// Boundary-size gauge for a scalar trace: surface L² of the trace plus all
/// tangential differences up to third order, combined as a single square
/// root. This is an integer-order stand-in for a fractional trace norm and
/// is reported as such.
pub fn boundary_trace_norm_scalar(f: &ScalarField) -> f64 {
    let mut total = 0.0;
    for axis in 0..3 {
        let (p, q) = tangential_axes(axis);
        for a in 0..=3usize {
            for b in 0..=(3 - a) {
                let mut d = f.clone();
                for _ in 0..a {
                    d = ops::diff_axis(&d, p);
                }
                for _ in 0..b {
                    d = ops::diff_axis(&d, q);
                }
                let sq = d.map(|v| v * v);
                total += face_integral(&sq, axis, 0) + face_integral(&sq, axis, 1);
            }
        }
    }
    total.sqrt()
}

/// Componentwise version of [`boundary_trace_norm_scalar`], combined in
/// Euclidean fashion.
pub fn boundary_trace_norm_vector(v: &VectorField) -> f64 {
    let mut total = 0.0;
    for c in 0..3 {
        let n = boundary_trace_norm_scalar(&v.component(c));
        total += n * n;
    }
    total.sqrt()
}

/// D_t g = (g_now - g_prev)/dt + u . grad g, with the convective term
/// evaluated on the current snapshot.
pub fn material_derivative_scalar(
    g_now: &ScalarField,
    g_prev: &ScalarField,
    u: &VectorField,
    dt: f64,
) -> Result<ScalarField, DiagError> {
    if !(dt > 0.0) {
        return Err(DiagError::InvalidDt(dt));
    }
    if g_now.grid() != g_prev.grid() || g_now.grid() != u.grid() {
        return Err(DiagError::GridMismatch);
    }
    let mut out = ops::advect_scalar(u, g_now);
    let inv_dt = 1.0 / dt;
    for ((o, a), b) in out
        .values_mut()
        .iter_mut()
        .zip(g_now.values())
        .zip(g_prev.values())
    {
        *o += (a - b) * inv_dt;
    }
    Ok(out)
}

pub fn material_derivative_vector(
    g_now: &VectorField,
    g_prev: &VectorField,
    u: &VectorField,
    dt: f64,
) -> Result<VectorField, DiagError> {
    if !(dt > 0.0) {
        return Err(DiagError::InvalidDt(dt));
    }
    if g_now.grid() != g_prev.grid() || g_now.grid() != u.grid() {
        return Err(DiagError::GridMismatch);
    }
    let mut out = ops::advect_vector(u, g_now);
    let inv_dt = 1.0 / dt;
    for ((o, a), b) in out
        .values_mut()
        .iter_mut()
        .zip(g_now.values())
        .zip(g_prev.values())
    {
        for c in 0..3 {
            o[c] += (a[c] - b[c]) * inv_dt;
        }
    }
    Ok(out)
}

/// Ballistic energy of one snapshot:
/// integral of ( 1/2 rho |u - u_ext|^2 + rho e - theta_ext rho s ).
pub fn ballistic_energy(
    state: &FluidState,
    bdata: &BoundaryData,
    params: &PhysParams,
) -> Result<f64, DiagError> {
    let grid = state.grid();
    let s = constitutive::entropy(&state.rho, &state.theta, params)?;
    let cv = params.cv();
    let mut integrand = ScalarField::zeros(grid);
    for i in 0..grid.node_count() {
        let r = state.rho.values()[i];
        let uv = state.u.values()[i];
        let ue = bdata.u_ext().values()[i];
        let du = [uv[0] - ue[0], uv[1] - ue[1], uv[2] - ue[2]];
        let kin = 0.5 * r * (du[0] * du[0] + du[1] * du[1] + du[2] * du[2]);
        integrand.values_mut()[i] = kin + r * cv * state.theta.values()[i]
            - bdata.theta_ext().values()[i] * r * s.values()[i];
    }
    Ok(ops::integrate(&integrand))
}

/// One evaluation of the ballistic energy balance across a snapshot pair.
#[derive(Debug, Clone, Copy)]
pub struct BudgetRecord {
    /// Ballistic energy of the current snapshot.
    pub ballistic_energy: f64,
    /// Backward difference (E_now - E_prev)/dt.
    pub d_dt_ballistic: f64,
    /// Entropy-weighted dissipation integral, nonnegative.
    pub dissipation: f64,
    /// The five right-hand contributions: boundary stress work, kinetic
    /// correction, force work, entropy flux, temperature-gradient flux.
    pub terms: [f64; 5],
    /// (d/dt E + dissipation) - sum of terms.
    pub residual: f64,
}

fn midpoint(a: &ScalarField, b: &ScalarField) -> ScalarField {
    a.zip_with(b, |x, y| 0.5 * (x + y)).expect("same grid")
}

fn midpoint_vec(a: &VectorField, b: &VectorField) -> VectorField {
    a.zip_with(b, |x, y| {
        [
            0.5 * (x[0] + y[0]),
            0.5 * (x[1] + y[1]),
            0.5 * (x[2] + y[2]),
        ]
    })
    .expect("same grid")
}

/// Evaluates the ballistic energy balance on a snapshot pair. The time
/// derivative is the backward difference of the ballistic energy; all
/// spatial integrals are taken on the field average of the two snapshots so
/// the residual is second order in dt on smooth runs.
pub fn ballistic_energy_budget(
    state_now: &FluidState,
    state_prev: &FluidState,
    bdata: &BoundaryData,
    params: &PhysParams,
    dt: f64,
) -> Result<BudgetRecord, DiagError> {
    if !(dt > 0.0) {
        return Err(DiagError::InvalidDt(dt));
    }
    if state_now.grid() != state_prev.grid() {
        return Err(DiagError::GridMismatch);
    }
    let min_theta = state_now.theta.min_value().min(state_prev.theta.min_value());
    if !(min_theta > 0.0) {
        return Err(DiagError::NonPositiveTemperature(min_theta));
    }
    let grid = state_now.grid();
    let n = grid.node_count();
    let kappa = params.kappa();

    let e_now = ballistic_energy(state_now, bdata, params)?;
    let e_prev = ballistic_energy(state_prev, bdata, params)?;
    let d_dt = (e_now - e_prev) / dt;

    let rho = midpoint(&state_now.rho, &state_prev.rho);
    let theta = midpoint(&state_now.theta, &state_prev.theta);
    let u = midpoint_vec(&state_now.u, &state_prev.u);

    let strain = ops::strain_rate(&u);
    let stress = constitutive::viscous_stress(&strain, params)?;
    let grad_theta = ops::gradient(&theta);
    let s = constitutive::entropy(&rho, &theta, params)?;
    let p = constitutive::pressure(&rho, &theta)?;

    let strain_ext = ops::strain_rate(bdata.u_ext());
    let grad_theta_ext = ops::gradient(bdata.theta_ext());

    // dissipation: (theta_ext/theta) (S:D + kappa |grad theta|^2 / theta)
    let sd = stress.contract(&strain).expect("same grid");
    let mut dissipation_field = ScalarField::zeros(grid);
    for i in 0..n {
        let t = theta.values()[i];
        let g = grad_theta.values()[i];
        let g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
        dissipation_field.values_mut()[i] =
            bdata.theta_ext().values()[i] / t * (sd.values()[i] + kappa * g2 / t);
    }
    let dissipation = ops::integrate(&dissipation_field);

    // term 1: -(rho u x u + p I - S) : D(u_ext)
    let mut flux_tensor = TensorField::zeros(grid, true);
    for i in 0..n {
        let r = rho.values()[i];
        let uv = u.values()[i];
        let pv = p.values()[i];
        let sv = stress.values()[i];
        let tv = &mut flux_tensor.values_mut()[i];
        for a in 0..3 {
            for b in 0..3 {
                tv[a][b] = r * uv[a] * uv[b] - sv[a][b];
            }
            tv[a][a] += pv;
        }
    }
    let t1 = -ops::integrate(&flux_tensor.contract(&strain_ext).expect("same grid"));

    // term 2: 1/2 rho u . grad |u_ext|^2
    let speed_ext_sq = bdata.u_ext().magnitude().map(|m| m * m);
    let grad_sq = ops::gradient(&speed_ext_sq);
    let mut t2_field = ScalarField::zeros(grid);
    for i in 0..n {
        let uv = u.values()[i];
        let gv = grad_sq.values()[i];
        t2_field.values_mut()[i] =
            0.5 * rho.values()[i] * (uv[0] * gv[0] + uv[1] * gv[1] + uv[2] * gv[2]);
    }
    let t2 = ops::integrate(&t2_field);

    // term 3: rho (u - u_ext) . f
    let mut t3_field = ScalarField::zeros(grid);
    for i in 0..n {
        let uv = u.values()[i];
        let ue = bdata.u_ext().values()[i];
        let fv = bdata.force().values()[i];
        t3_field.values_mut()[i] = rho.values()[i]
            * ((uv[0] - ue[0]) * fv[0] + (uv[1] - ue[1]) * fv[1] + (uv[2] - ue[2]) * fv[2]);
    }
    let t3 = ops::integrate(&t3_field);

    // term 4: -rho s u . grad theta_ext
    let mut t4_field = ScalarField::zeros(grid);
    for i in 0..n {
        let uv = u.values()[i];
        let gv = grad_theta_ext.values()[i];
        t4_field.values_mut()[i] = -rho.values()[i]
            * s.values()[i]
            * (uv[0] * gv[0] + uv[1] * gv[1] + uv[2] * gv[2]);
    }
    let t4 = ops::integrate(&t4_field);

    // term 5: kappa (grad theta / theta) . grad theta_ext
    let mut t5_field = ScalarField::zeros(grid);
    for i in 0..n {
        let gv = grad_theta.values()[i];
        let ge = grad_theta_ext.values()[i];
        t5_field.values_mut()[i] =
            kappa / theta.values()[i] * (gv[0] * ge[0] + gv[1] * ge[1] + gv[2] * ge[2]);
    }
    let t5 = ops::integrate(&t5_field);

    let terms = [t1, t2, t3, t4, t5];
    let residual = d_dt + dissipation - terms.iter().sum::<f64>();
    Ok(BudgetRecord {
        ballistic_energy: e_now,
        d_dt_ballistic: d_dt,
        dissipation,
        terms,
        residual,
    })
}

/// Splits the velocity into the pressure-driven part v (zero trace) and the
/// inertia/force part w (trace u_B):
///   div S(Dv) = grad p,              v = 0 on the boundary,
///   div S(Dw) = rho D_t u - rho f,   w = u_B on the boundary.
/// Returns (v, w, ||u - v - w||_{L2}).
pub fn decompose_velocity(
    state: &FluidState,
    dt_u: &VectorField,
    bdata: &BoundaryData,
    params: &PhysParams,
    cfg: &EllipticSolverConfig,
) -> Result<(VectorField, VectorField, f64), DiagError> {
    let grid = state.grid();
    let p = constitutive::pressure(&state.rho, &state.theta)?;
    let grad_p = ops::gradient(&p);
    let v = elliptic::solve_lame_dirichlet(&grad_p, &VectorField::zeros(grid), params, cfg)?;

    let mut rhs_w = VectorField::zeros(grid);
    for i in 0..grid.node_count() {
        let r = state.rho.values()[i];
        let dv = dt_u.values()[i];
        let fv = bdata.force().values()[i];
        rhs_w.values_mut()[i] = [
            r * (dv[0] - fv[0]),
            r * (dv[1] - fv[1]),
            r * (dv[2] - fv[2]),
        ];
    }
    let w = elliptic::solve_lame_dirichlet(&rhs_w, bdata.u_b(), params, cfg)?;

    let mut diff = state.u.clone();
    diff.scaled_add(-1.0, &v);
    diff.scaled_add(-1.0, &w);
    let mismatch = ops::lp_norm(&diff, 2.0).expect("p=2 valid");
    Ok((v, w, mismatch))
}

const TRACE_TOL: f64 = 1e-12;

/// Interpolation inequality check for a zero-trace field:
/// lhs = ||grad U||^2_{L4}, rhs = ||U||_inf ||Lap U||_{L2}, margin = rhs - lhs.
pub fn gn_check(u: &ScalarField) -> Result<(f64, f64, f64), DiagError> {
    let grid = u.grid();
    let mut bad = None;
    grid.for_each_boundary_node(|_, _, _, idx| {
        let v = u.values()[idx];
        if v.abs() > TRACE_TOL && bad.is_none() {
            bad = Some((idx, v));
        }
    });
    if let Some((node, value)) = bad {
        return Err(DiagError::NonZeroTrace { node, value });
    }
    let grad = ops::gradient(u);
    let l4 = ops::lp_norm(&grad, 4.0).expect("p=4 valid");
    let lhs = l4 * l4;
    let rhs = ops::lp_norm(u, f64::INFINITY).expect("p=inf valid")
        * ops::lp_norm(&ops::laplacian(u), 2.0).expect("p=2 valid");
    Ok((lhs, rhs, rhs - lhs))
}

/// The seven contributions to the data-size gauge and their maximum.
#[derive(Debug, Clone, Copy)]
pub struct DataQuantity {
    pub data_w32: f64,
    pub inv_min_rho0: f64,
    pub inv_min_theta0: f64,
    pub inv_min_theta_b: f64,
    pub theta_b_boundary: f64,
    pub u_b_boundary: f64,
    pub f_w22: f64,
}

impl DataQuantity {
    pub fn terms(&self) -> [(&'static str, f64); 7] {
        [
            ("data_w32", self.data_w32),
            ("inv_min_rho0", self.inv_min_rho0),
            ("inv_min_theta0", self.inv_min_theta0),
            ("inv_min_theta_b", self.inv_min_theta_b),
            ("theta_b_boundary", self.theta_b_boundary),
            ("u_b_boundary", self.u_b_boundary),
            ("f_w22", self.f_w22),
        ]
    }

    pub fn value(&self) -> f64 {
        self.terms()
            .iter()
            .map(|&(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn compute_d0(state0: &FluidState, bdata: &BoundaryData) -> Result<DataQuantity, DiagError> {
    let min_rho0 = state0.rho.min_value();
    let min_theta0 = state0.theta.min_value();
    let min_theta_b = bdata.min_theta_b();
    for (name, v) in [
        ("min rho0", min_rho0),
        ("min theta0", min_theta0),
        ("min theta_B", min_theta_b),
    ] {
        if !(v > 0.0) {
            return Err(DiagError::NonPositiveData(format!("{name} = {v}")));
        }
    }
    let r = ops::sobolev_norm(&state0.rho, 3).expect("k=3 valid");
    let t = ops::sobolev_norm(&state0.theta, 3).expect("k=3 valid");
    let u = ops::sobolev_norm(&state0.u, 3).expect("k=3 valid");
    Ok(DataQuantity {
        data_w32: (r * r + t * t + u * u).sqrt(),
        inv_min_rho0: 1.0 / min_rho0,
        inv_min_theta0: 1.0 / min_theta0,
        inv_min_theta_b: 1.0 / min_theta_b,
        theta_b_boundary: boundary_trace_norm_scalar(bdata.theta_b()),
        u_b_boundary: boundary_trace_norm_vector(bdata.u_b()),
        f_w22: ops::sobolev_norm(bdata.force(), 2).expect("k=2 valid"),
    })
}

/// One fully populated sample of every monitored functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub sup_rho: f64,
    pub sup_theta: f64,
    pub sup_speed: f64,
    pub min_rho: f64,
    pub min_theta: f64,
    pub mass: f64,
    pub ballistic_energy: f64,
    pub dissipation: f64,
    pub budget_terms: [f64; 5],
    pub budget_residual: f64,
    pub grad_u_l2: f64,
    pub grad_u_l4: f64,
    pub grad_theta_l2: f64,
    pub rho_dt_u_l2: f64,
    pub rho_dt_theta_l2: f64,
    pub decomposition_mismatch: f64,
    pub gn_margin: f64,
}

impl DiagnosticsRecord {
    /// Column order used by the time-series writer.
    pub const FIELD_NAMES: [&'static str; 22] = [
        "time",
        "sup_rho",
        "sup_theta",
        "sup_speed",
        "min_rho",
        "min_theta",
        "mass",
        "ballistic_energy",
        "dissipation",
        "budget_term_1",
        "budget_term_2",
        "budget_term_3",
        "budget_term_4",
        "budget_term_5",
        "budget_residual",
        "grad_u_l2",
        "grad_u_l4",
        "grad_theta_l2",
        "rho_dt_u_l2",
        "rho_dt_theta_l2",
        "decomposition_mismatch",
        "gn_margin",
    ];

    pub fn to_row(&self) -> [f64; 22] {
        [
            self.time,
            self.sup_rho,
            self.sup_theta,
            self.sup_speed,
            self.min_rho,
            self.min_theta,
            self.mass,
            self.ballistic_energy,
            self.dissipation,
            self.budget_terms[0],
            self.budget_terms[1],
            self.budget_terms[2],
            self.budget_terms[3],
            self.budget_terms[4],
            self.budget_residual,
            self.grad_u_l2,
            self.grad_u_l4,
            self.grad_theta_l2,
            self.rho_dt_u_l2,
            self.rho_dt_theta_l2,
            self.decomposition_mismatch,
            self.gn_margin,
        ]
    }

    pub fn from_row(row: &[f64]) -> Option<Self> {
        if row.len() != 22 {
            return None;
        }
        Some(DiagnosticsRecord {
            time: row[0],
            sup_rho: row[1],
            sup_theta: row[2],
            sup_speed: row[3],
            min_rho: row[4],
            min_theta: row[5],
            mass: row[6],
            ballistic_energy: row[7],
            dissipation: row[8],
            budget_terms: [row[9], row[10], row[11], row[12], row[13]],
            budget_residual: row[14],
            grad_u_l2: row[15],
            grad_u_l4: row[16],
            grad_theta_l2: row[17],
            rho_dt_u_l2: row[18],
            rho_dt_theta_l2: row[19],
            decomposition_mismatch: row[20],
            gn_margin: row[21],
        })
    }
}

/// Populates a full record from a snapshot pair.
pub fn record(
    state_now: &FluidState,
    state_prev: &FluidState,
    bdata: &BoundaryData,
    params: &PhysParams,
    dt: f64,
) -> Result<DiagnosticsRecord, DiagError> {
    let grid = state_now.grid();
    let budget = ballistic_energy_budget(state_now, state_prev, bdata, params, dt)?;

    let grad_u = ops::gradient_vector(&state_now.u).magnitude();
    let grad_u_l2 = ops::lp_norm(&grad_u, 2.0).expect("p=2 valid");
    let grad_u_l4 = ops::lp_norm(&grad_u, 4.0).expect("p=4 valid");
    let grad_theta_l2 =
        ops::lp_norm(&ops::gradient(&state_now.theta), 2.0).expect("p=2 valid");

    let dt_u = material_derivative_vector(&state_now.u, &state_prev.u, &state_now.u, dt)?;
    let dt_theta =
        material_derivative_scalar(&state_now.theta, &state_prev.theta, &state_now.u, dt)?;
    let mut wu = ScalarField::zeros(grid);
    let mut wt = ScalarField::zeros(grid);
    for i in 0..grid.node_count() {
        let r = state_now.rho.values()[i];
        let dv = dt_u.values()[i];
        wu.values_mut()[i] = r * (dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]);
        let dth = dt_theta.values()[i];
        wt.values_mut()[i] = r * dth * dth;
    }
    let rho_dt_u_l2 = ops::integrate(&wu).max(0.0).sqrt();
    let rho_dt_theta_l2 = ops::integrate(&wt).max(0.0).sqrt();

    let cfg = EllipticSolverConfig::default_for(grid);
    let (_, _, decomposition_mismatch) =
        decompose_velocity(state_now, &dt_u, bdata, params, &cfg)?;

    // zero-trace deviation of the temperature from the harmonic extension
    let mut dev = state_now
        .theta
        .zip_with(bdata.theta_ext(), |a, b| a - b)
        .expect("same grid");
    grid.for_each_boundary_node(|_, _, _, idx| dev.values_mut()[idx] = 0.0);
    let (_, _, gn_margin) = gn_check(&dev)?;

    Ok(DiagnosticsRecord {
        time: state_now.time,
        sup_rho: state_now.rho.max_value(),
        sup_theta: state_now.theta.max_value(),
        sup_speed: state_now.u.magnitude().max_value(),
        min_rho: state_now.rho.min_value(),
        min_theta: state_now.theta.min_value(),
        mass: ops::integrate(&state_now.rho),
        ballistic_energy: budget.ballistic_energy,
        dissipation: budget.dissipation,
        budget_terms: budget.terms,
        budget_residual: budget.residual,
        grad_u_l2,
        grad_u_l4,
        grad_theta_l2,
        rho_dt_u_l2,
        rho_dt_theta_l2,
        decomposition_mismatch,
        gn_margin,
    })
}
