//! Time evolution of the coupled mass/momentum/internal-energy system with
//! Dirichlet boundary data, plus validation of the admissible data class and
//! the compatibility conditions.
//!
//! The scheme evolves the conservative variables (rho, rho u, rho e) with
//! centered fluxes in conservative form. The convective divergence uses the
//! telescoping closure of [`ops::divergence_conservative`], so with an
//! impermeable boundary the discrete total mass is conserved to rounding.
//! Temperature and velocity boundary traces are re-imposed exactly after
//! every stage.

use crate::constitutive::{self, ConstitutiveError, PhysParams};
use crate::elliptic::{self, EllipticSolverConfig, SolverError};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::ops;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StepError {
    #[error("{field} lost positivity at node {node} (value {value:.6e}) at t = {time:.6}")]
    PositivityLost {
        field: &'static str,
        node: usize,
        value: f64,
        time: f64,
    },
    #[error("requested dt {dt:.6e} exceeds the stability bound {bound:.6e} (cfl_safety applied)")]
    StabilityBoundExceeded { dt: f64, bound: f64 },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("boundary temperature must be positive, min over boundary nodes is {0}")]
    NonPositiveBoundaryTemperature(f64),
    #[error("state fields live on different grids")]
    GridMismatch,
}

/// Solution triple (rho, theta, u) at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub time: f64,
    pub rho: ScalarField,
    pub theta: ScalarField,
    pub u: VectorField,
}

impl FluidState {
    pub fn new(
        time: f64,
        rho: ScalarField,
        theta: ScalarField,
        u: VectorField,
    ) -> Result<Self, DataError> {
        if rho.grid() != theta.grid() || rho.grid() != u.grid() {
            return Err(DataError::GridMismatch);
        }
        check_positive(&rho, "rho", time)
            .and_then(|_| check_positive(&theta, "theta", time))
            .map_err(|e| DataError::Constitutive(step_to_constitutive(e)))?;
        Ok(FluidState { time, rho, theta, u })
    }

    pub fn grid(&self) -> Grid {
        self.rho.grid()
    }

    /// Constant equilibrium state.
    pub fn equilibrium(grid: Grid, rho: f64, theta: f64) -> Self {
        FluidState {
            time: 0.0,
            rho: ScalarField::constant(grid, rho),
            theta: ScalarField::constant(grid, theta),
            u: VectorField::zeros(grid),
        }
    }
}

fn step_to_constitutive(e: StepError) -> ConstitutiveError {
    match e {
        StepError::PositivityLost { field, node, value, .. } => ConstitutiveError::NonPositive {
            name: field,
            node,
            value,
        },
        _ => unreachable!(),
    }
}

fn check_positive(f: &ScalarField, name: &'static str, time: f64) -> Result<(), StepError> {
    for (node, &v) in f.values().iter().enumerate() {
        if !(v > 0.0) {
            return Err(StepError::PositivityLost {
                field: name,
                node,
                value: v,
                time,
            });
        }
    }
    Ok(())
}

/// Boundary data (theta_B, u_B), time-independent body force f, and the
/// cached interior extensions from the harmonic / Lame-harmonic lifts.
#[derive(Debug, Clone)]
pub struct BoundaryData {
    theta_b: ScalarField,
    u_b: VectorField,
    force: VectorField,
    theta_ext: ScalarField,
    u_ext: VectorField,
}

impl BoundaryData {
    /// Validates positivity of theta_B and tangentiality of u_B, then
    /// computes and caches the interior extensions (the data is
    /// time-independent, so this happens once per run).
    pub fn new(
        theta_b: ScalarField,
        u_b: VectorField,
        force: VectorField,
        params: &PhysParams,
        solver_cfg: &EllipticSolverConfig,
    ) -> Result<Self, DataError> {
        let grid = theta_b.grid();
        let mut min_tb = f64::INFINITY;
        grid.for_each_boundary_node(|_, _, _, idx| {
            min_tb = min_tb.min(theta_b.values()[idx]);
        });
        if !(min_tb > 0.0) {
            return Err(DataError::NonPositiveBoundaryTemperature(min_tb));
        }
        let (theta_ext, u_ext) = elliptic::extend_boundary_data(&theta_b, &u_b, params, solver_cfg)?;
        Ok(BoundaryData {
            theta_b,
            u_b,
            force,
            theta_ext,
            u_ext,
        })
    }

    pub fn theta_b(&self) -> &ScalarField {
        &self.theta_b
    }
    pub fn u_b(&self) -> &VectorField {
        &self.u_b
    }
    pub fn force(&self) -> &VectorField {
        &self.force
    }
    /// Harmonic extension of theta_B into the interior.
    pub fn theta_ext(&self) -> &ScalarField {
        &self.theta_ext
    }
    /// Lame-harmonic extension of u_B into the interior.
    pub fn u_ext(&self) -> &VectorField {
        &self.u_ext
    }

    pub fn min_theta_b(&self) -> f64 {
        let grid = self.theta_b.grid();
        let mut m = f64::INFINITY;
        grid.for_each_boundary_node(|_, _, _, idx| m = m.min(self.theta_b.values()[idx]));
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeScheme {
    ExplicitRk2,
    SemiImplicitTheta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub cfl_safety: f64,
    pub scheme: TimeScheme,
}

impl StepConfig {
    pub fn new(dt: f64, cfl_safety: f64, scheme: TimeScheme) -> Option<Self> {
        if dt > 0.0 && cfl_safety > 0.0 && cfl_safety <= 1.0 {
            Some(StepConfig {
                dt,
                cfl_safety,
                scheme,
            })
        } else {
            None
        }
    }
}

/// Acoustic + diffusive stability bound:
/// dt <= min( h/(|u| + sqrt(theta_max) gamma), h^2 rho_min / (2 max(kappa/cv, 2mu+eta)) )
/// with gamma = sqrt(1 + 1/cv).
pub fn stability_bound(state: &FluidState, params: &PhysParams) -> f64 {
    let h = state.grid().min_spacing();
    let umax = ops::lp_norm(&state.u, f64::INFINITY).expect("p=inf valid");
    let theta_max = state.theta.max_value();
    let rho_min = state.rho.min_value();
    let gamma = (1.0 + 1.0 / params.cv()).sqrt();
    let acoustic = h / (umax + theta_max.max(0.0).sqrt() * gamma);
    let diffusive =
        h * h * rho_min / (2.0 * (params.kappa() / params.cv()).max(2.0 * params.mu() + params.eta()));
    acoustic.min(diffusive)
}

/// Optional manufactured-solution source fields appended to the right-hand
/// sides of the three balance laws (time-independent).
#[derive(Debug, Clone)]
pub struct SourceFields {
    pub mass: ScalarField,
    pub momentum: VectorField,
    pub energy: ScalarField,
}

/// Right-hand sides d/dt of the conservative variables (rho, m, E).
fn conservative_rhs(
    rho: &ScalarField,
    theta: &ScalarField,
    u: &VectorField,
    bdata: &BoundaryData,
    params: &PhysParams,
    sources: Option<&SourceFields>,
) -> (ScalarField, VectorField, ScalarField) {
    let grid = rho.grid();
    let cv = params.cv();

    // mass: -div(rho u), conservative closure
    let mut mass_flux = u.clone();
    for (fv, rv) in mass_flux.values_mut().iter_mut().zip(rho.values()) {
        fv[0] *= rv;
        fv[1] *= rv;
        fv[2] *= rv;
    }
    let mut d_rho = ops::divergence_conservative(&mass_flux);
    for v in d_rho.values_mut() {
        *v = -*v;
    }

    // momentum: -div(rho u x u) - grad p + div S + rho f
    let p = rho.zip_with(theta, |r, t| r * t).unwrap();
    let grad_p = ops::gradient(&p);
    let strain = ops::strain_rate(u);
    let stress = constitutive::viscous_stress(&strain, params).expect("strain is symmetric");
    let div_stress = ops::divergence_tensor(&stress);
    let mut d_m = VectorField::zeros(grid);
    for a in 0..3 {
        // flux of the a-th momentum component: rho u_a u
        let mut flux = VectorField::zeros(grid);
        for ((fv, uv), rv) in flux
            .values_mut()
            .iter_mut()
            .zip(u.values())
            .zip(rho.values())
        {
            let ma = rv * uv[a];
            fv[0] = ma * uv[0];
            fv[1] = ma * uv[1];
            fv[2] = ma * uv[2];
        }
        let div_flux = ops::divergence_conservative(&flux);
        for (dv, fv) in d_m.values_mut().iter_mut().zip(div_flux.values()) {
            dv[a] = -fv;
        }
    }
    for (((dv, gp), ds), (rv, fv)) in d_m
        .values_mut()
        .iter_mut()
        .zip(grad_p.values())
        .zip(div_stress.values())
        .zip(rho.values().iter().zip(bdata.force().values()))
    {
        for a in 0..3 {
            dv[a] += -gp[a] + ds[a] + rv * fv[a];
        }
    }

    // internal energy: -div(rho e u) + kappa Lap theta + S:D - p div u
    let mut energy_flux = VectorField::zeros(grid);
    for (((fv, uv), rv), tv) in energy_flux
        .values_mut()
        .iter_mut()
        .zip(u.values())
        .zip(rho.values())
        .zip(theta.values())
    {
        let re = rv * cv * tv;
        fv[0] = re * uv[0];
        fv[1] = re * uv[1];
        fv[2] = re * uv[2];
    }
    let div_energy_flux = ops::divergence_conservative(&energy_flux);
    let lap_theta = ops::laplacian(theta);
    let dissipation = stress.contract(&strain).unwrap();
    let div_u = ops::divergence(u);
    let mut d_e = ScalarField::zeros(grid);
    {
        let dev = d_e.values_mut();
        for i in 0..grid.node_count() {
            dev[i] = -div_energy_flux.values()[i]
                + params.kappa() * lap_theta.values()[i]
                + dissipation.values()[i]
                - p.values()[i] * div_u.values()[i];
        }
    }

    if let Some(src) = sources {
        d_rho.scaled_add(1.0, &src.mass);
        d_m.scaled_add(1.0, &src.momentum);
        d_e.scaled_add(1.0, &src.energy);
    }
    (d_rho, d_m, d_e)
}

struct Conservative {
    rho: Vec<f64>,
    m: Vec<[f64; 3]>,
    e: Vec<f64>,
}

fn to_conservative(state: &FluidState, cv: f64) -> Conservative {
    let n = state.grid().node_count();
    let mut c = Conservative {
        rho: vec![0.0; n],
        m: vec![[0.0; 3]; n],
        e: vec![0.0; n],
    };
    for i in 0..n {
        let r = state.rho.values()[i];
        let uv = state.u.values()[i];
        c.rho[i] = r;
        c.m[i] = [r * uv[0], r * uv[1], r * uv[2]];
        c.e[i] = r * cv * state.theta.values()[i];
    }
    c
}

/// Recover the primitive state, re-impose the boundary traces exactly, and
/// check positivity. Density is never clipped; loss of positivity is a hard
/// error.
fn to_primitive(
    cons: &Conservative,
    grid: Grid,
    cv: f64,
    bdata: &BoundaryData,
    time: f64,
) -> Result<FluidState, StepError> {
    let n = grid.node_count();
    let mut rho = ScalarField::zeros(grid);
    let mut theta = ScalarField::zeros(grid);
    let mut u = VectorField::zeros(grid);
    for i in 0..n {
        let r = cons.rho[i];
        if !(r > 0.0) {
            return Err(StepError::PositivityLost {
                field: "rho",
                node: i,
                value: r,
                time,
            });
        }
        rho.values_mut()[i] = r;
        let mv = cons.m[i];
        u.values_mut()[i] = [mv[0] / r, mv[1] / r, mv[2] / r];
        theta.values_mut()[i] = cons.e[i] / (cv * r);
    }
    grid.for_each_boundary_node(|_, _, _, idx| {
        theta.values_mut()[idx] = bdata.theta_b().values()[idx];
        u.values_mut()[idx] = bdata.u_b().values()[idx];
    });
    for (node, &t) in theta.values().iter().enumerate() {
        if !(t > 0.0) {
            return Err(StepError::PositivityLost {
                field: "theta",
                node,
                value: t,
                time,
            });
        }
    }
    Ok(FluidState { time, rho, theta, u })
}

/// One time step. Enforces the stability bound, re-imposes boundary traces
/// exactly, and checks positivity after every stage.
pub fn step(
    state: &FluidState,
    bdata: &BoundaryData,
    params: &PhysParams,
    cfg: &StepConfig,
) -> Result<FluidState, StepError> {
    step_with_sources(state, bdata, params, cfg, None, None)
}

/// Step with optional manufactured source terms and an optional elliptic
/// configuration for the semi-implicit scheme.
pub fn step_with_sources(
    state: &FluidState,
    bdata: &BoundaryData,
    params: &PhysParams,
    cfg: &StepConfig,
    sources: Option<&SourceFields>,
    solver_cfg: Option<&EllipticSolverConfig>,
) -> Result<FluidState, StepError> {
    let bound = cfg.cfl_safety * stability_bound(state, params);
    if cfg.dt > bound {
        return Err(StepError::StabilityBoundExceeded {
            dt: cfg.dt,
            bound,
        });
    }
    match cfg.scheme {
        TimeScheme::ExplicitRk2 => step_rk2(state, bdata, params, cfg.dt, sources),
        TimeScheme::SemiImplicitTheta => {
            let default_cfg = EllipticSolverConfig::default_for(state.grid());
            let scfg = solver_cfg.unwrap_or(&default_cfg);
            step_semi_implicit(state, bdata, params, cfg.dt, sources, scfg)
        }
    }
}

fn step_rk2(
    state: &FluidState,
    bdata: &BoundaryData,
    params: &PhysParams,
    dt: f64,
    sources: Option<&SourceFields>,
) -> Result<FluidState, StepError> {
    let grid = state.grid();
    let cv = params.cv();
    let c0 = to_conservative(state, cv);

    let (dr1, dm1, de1) = conservative_rhs(&state.rho, &state.theta, &state.u, bdata, params, sources);

    // predictor
    let n = grid.node_count();
    let mut c1 = Conservative {
        rho: vec![0.0; n],
        m: vec![[0.0; 3]; n],
        e: vec![0.0; n],
    };
    for i in 0..n {
        c1.rho[i] = c0.rho[i] + dt * dr1.values()[i];
        for a in 0..3 {
            c1.m[i][a] = c0.m[i][a] + dt * dm1.values()[i][a];
        }
        c1.e[i] = c0.e[i] + dt * de1.values()[i];
    }
    let mid = to_primitive(&c1, grid, cv, bdata, state.time + dt)?;

    let (dr2, dm2, de2) = conservative_rhs(&mid.rho, &mid.theta, &mid.u, bdata, params, sources);

    // Heun corrector
    let mut c2 = c1;
    for i in 0..n {
        c2.rho[i] = c0.rho[i] + 0.5 * dt * (dr1.values()[i] + dr2.values()[i]);
        for a in 0..3 {
            c2.m[i][a] = c0.m[i][a] + 0.5 * dt * (dm1.values()[i][a] + dm2.values()[i][a]);
        }
        c2.e[i] = c0.e[i] + 0.5 * dt * (de1.values()[i] + de2.values()[i]);
    }
    to_primitive(&c2, grid, cv, bdata, state.time + dt)
}

/// Explicit conservative transport and sources, implicit viscous and heat
/// diffusion via shifted elliptic solves.
fn step_semi_implicit(
    state: &FluidState,
    bdata: &BoundaryData,
    params: &PhysParams,
    dt: f64,
    sources: Option<&SourceFields>,
    scfg: &EllipticSolverConfig,
) -> Result<FluidState, StepError> {
    let grid = state.grid();
    let cv = params.cv();
    let n = grid.node_count();

    // explicit part: drop the diffusion operators from the rhs
    let (dr, dm_full, de_full) =
        conservative_rhs(&state.rho, &state.theta, &state.u, bdata, params, sources);
    let strain = ops::strain_rate(&state.u);
    let stress = constitutive::viscous_stress(&strain, params).expect("symmetric");
    let div_stress = ops::divergence_tensor(&stress);
    let lap_theta = ops::laplacian(&state.theta);

    let c0 = to_conservative(state, cv);
    let mut rho_new = ScalarField::zeros(grid);
    for i in 0..n {
        let r = c0.rho[i] + dt * dr.values()[i];
        if !(r > 0.0) {
            return Err(StepError::PositivityLost {
                field: "rho",
                node: i,
                value: r,
                time: state.time + dt,
            });
        }
        rho_new.values_mut()[i] = r;
    }

    // velocity: (rho_new I - dt L) u_new = m* with m* excluding div S
    let mut m_star = VectorField::zeros(grid);
    for i in 0..n {
        for a in 0..3 {
            m_star.values_mut()[i][a] =
                c0.m[i][a] + dt * (dm_full.values()[i][a] - div_stress.values()[i][a]);
        }
    }
    let u_new = elliptic::solve_shifted_lame(&rho_new, dt, &m_star, bdata.u_b(), params, scfg)?;

    // temperature: (cv rho_new I - dt kappa Lap) theta_new = E*
    let mut e_star = ScalarField::zeros(grid);
    for i in 0..n {
        e_star.values_mut()[i] =
            c0.e[i] + dt * (de_full.values()[i] - params.kappa() * lap_theta.values()[i]);
    }
    let mass = rho_new.map(|r| cv * r);
    let theta_new =
        elliptic::solve_shifted_poisson(&mass, dt * params.kappa(), &e_star, bdata.theta_b(), scfg)?;

    for (node, &t) in theta_new.values().iter().enumerate() {
        if !(t > 0.0) {
            return Err(StepError::PositivityLost {
                field: "theta",
                node,
                value: t,
                time: state.time + dt,
            });
        }
    }
    Ok(FluidState {
        time: state.time + dt,
        rho: rho_new,
        theta: theta_new,
        u: u_new,
    })
}

/// Admissible-data report: positivity minima and the finiteness of every
/// required norm.
#[derive(Debug, Clone)]
pub struct DataClassReport {
    pub min_rho0: f64,
    pub min_theta0: f64,
    pub min_theta_b: f64,
    pub w32_data_norm: f64,
    pub theta_b_boundary_norm: f64,
    pub u_b_boundary_norm: f64,
    pub f_w22_norm: f64,
    pub failures: Vec<String>,
}

impl DataClassReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn check_data_class(state0: &FluidState, bdata: &BoundaryData) -> DataClassReport {
    let min_rho0 = state0.rho.min_value();
    let min_theta0 = state0.theta.min_value();
    let min_theta_b = bdata.min_theta_b();

    let w32 = {
        let r = ops::sobolev_norm(&state0.rho, 3).expect("k=3 valid");
        let t = ops::sobolev_norm(&state0.theta, 3).expect("k=3 valid");
        let u = ops::sobolev_norm(&state0.u, 3).expect("k=3 valid");
        (r * r + t * t + u * u).sqrt()
    };
    let tb_norm = crate::diagnostics::boundary_trace_norm_scalar(bdata.theta_b());
    let ub_norm = crate::diagnostics::boundary_trace_norm_vector(bdata.u_b());
    let f_norm = ops::sobolev_norm(bdata.force(), 2).expect("k=2 valid");

    let mut failures = Vec::new();
    if !(min_rho0 > 0.0) {
        failures.push(format!("rho0 not bounded below: min = {min_rho0}"));
    }
    if !(min_theta0 > 0.0) {
        failures.push(format!("theta0 not bounded below: min = {min_theta0}"));
    }
    if !(min_theta_b > 0.0) {
        failures.push(format!("theta_B not bounded below: min = {min_theta_b}"));
    }
    for (name, v) in [
        ("W^{3,2} data norm", w32),
        ("theta_B boundary norm", tb_norm),
        ("u_B boundary norm", ub_norm),
        ("f W^{2,2} norm", f_norm),
    ] {
        if !v.is_finite() {
            failures.push(format!("{name} is not finite"));
        }
    }
    DataClassReport {
        min_rho0,
        min_theta0,
        min_theta_b,
        w32_data_norm: w32,
        theta_b_boundary_norm: tb_norm,
        u_b_boundary_norm: ub_norm,
        f_w22_norm: f_norm,
        failures,
    }
}

/// Compatibility residuals in face-max norm: trace mismatches, the momentum
/// balance, and the internal-energy balance restricted to boundary nodes.
#[derive(Debug, Clone, Copy)]
pub struct CompatReport {
    pub theta_trace_residual: f64,
    pub u_trace_residual: f64,
    pub momentum_residual: f64,
    pub energy_residual: f64,
}

impl CompatReport {
    pub fn max_residual(&self) -> f64 {
        self.theta_trace_residual
            .max(self.u_trace_residual)
            .max(self.momentum_residual)
            .max(self.energy_residual)
    }
}

pub fn check_compatibility(
    state0: &FluidState,
    bdata: &BoundaryData,
    params: &PhysParams,
) -> CompatReport {
    let grid = state0.grid();

    let p = state0.rho.zip_with(&state0.theta, |r, t| r * t).unwrap();
    let grad_p = ops::gradient(&p);
    let conv = ops::advect_vector(&state0.u, &state0.u);
    let strain = ops::strain_rate(&state0.u);
    let stress = constitutive::viscous_stress(&strain, params).expect("symmetric");
    let div_stress = ops::divergence_tensor(&stress);

    let conv_theta = ops::advect_scalar(&state0.u, &state0.theta);
    let lap_theta = ops::laplacian(&state0.theta);
    let dissipation = stress.contract(&strain).unwrap();
    let div_u = ops::divergence(&state0.u);

    let mut theta_res: f64 = 0.0;
    let mut u_res: f64 = 0.0;
    let mut mom_res: f64 = 0.0;
    let mut en_res: f64 = 0.0;
    grid.for_each_boundary_node(|_, _, _, idx| {
        theta_res = theta_res
            .max((state0.theta.values()[idx] - bdata.theta_b().values()[idx]).abs());
        let du = [
            state0.u.values()[idx][0] - bdata.u_b().values()[idx][0],
            state0.u.values()[idx][1] - bdata.u_b().values()[idx][1],
            state0.u.values()[idx][2] - bdata.u_b().values()[idx][2],
        ];
        u_res = u_res.max((du[0] * du[0] + du[1] * du[1] + du[2] * du[2]).sqrt());

        let r = state0.rho.values()[idx];
        let mut m2 = 0.0;
        for a in 0..3 {
            let res = r * conv.values()[idx][a] + grad_p.values()[idx][a]
                - div_stress.values()[idx][a]
                - r * bdata.force().values()[idx][a];
            m2 += res * res;
        }
        mom_res = mom_res.max(m2.sqrt());

        let e = r * conv_theta.values()[idx] - params.kappa() * lap_theta.values()[idx]
            - dissipation.values()[idx]
            + p.values()[idx] * div_u.values()[idx];
        en_res = en_res.max(e.abs());
    });
    CompatReport {
        theta_trace_residual: theta_res,
        u_trace_residual: u_res,
        momentum_residual: mom_res,
        energy_residual: en_res,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PhysParams {
        PhysParams::new(0.05, 0.0, 0.05, 1.5).unwrap()
    }

    fn equilibrium_bdata(grid: Grid, p: &PhysParams) -> BoundaryData {
        BoundaryData::new(
            ScalarField::constant(grid, 1.0),
            VectorField::zeros(grid),
            VectorField::zeros(grid),
            p,
            &EllipticSolverConfig::default_for(grid),
        )
        .unwrap()
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let g = Grid::unit_cube(8).unwrap();
        let p = params();
        let bdata = equilibrium_bdata(g, &p);
        let state = FluidState::equilibrium(g, 1.0, 1.0);
        let cfg = StepConfig::new(1e-3, 0.9, TimeScheme::ExplicitRk2).unwrap();
        let next = step(&state, &bdata, &p, &cfg).unwrap();
        let dr = next.rho.zip_with(&state.rho, |a, b| a - b).unwrap();
        let dt_ = next.theta.zip_with(&state.theta, |a, b| a - b).unwrap();
        assert!(ops::lp_norm(&dr, f64::INFINITY).unwrap() < 1e-12);
        assert!(ops::lp_norm(&dt_, f64::INFINITY).unwrap() < 1e-12);
        assert!(ops::lp_norm(&next.u, f64::INFINITY).unwrap() < 1e-12);
    }

    #[test]
    fn equilibrium_fixed_point_semi_implicit() {
        let g = Grid::unit_cube(6).unwrap();
        let p = params();
        let bdata = equilibrium_bdata(g, &p);
        let state = FluidState::equilibrium(g, 1.0, 1.0);
        let cfg = StepConfig::new(1e-3, 0.9, TimeScheme::SemiImplicitTheta).unwrap();
        let next = step(&state, &bdata, &p, &cfg).unwrap();
        let dr = next.rho.zip_with(&state.rho, |a, b| a - b).unwrap();
        let dt_ = next.theta.zip_with(&state.theta, |a, b| a - b).unwrap();
        assert!(ops::lp_norm(&dr, f64::INFINITY).unwrap() < 1e-10);
        assert!(ops::lp_norm(&dt_, f64::INFINITY).unwrap() < 1e-9);
        assert!(ops::lp_norm(&next.u, f64::INFINITY).unwrap() < 1e-9);
    }

    #[test]
    fn oversized_dt_is_rejected() {
        let g = Grid::unit_cube(8).unwrap();
        let p = params();
        let bdata = equilibrium_bdata(g, &p);
        let state = FluidState::equilibrium(g, 1.0, 1.0);
        let cfg = StepConfig::new(10.0, 0.9, TimeScheme::ExplicitRk2).unwrap();
        assert!(matches!(
            step(&state, &bdata, &p, &cfg),
            Err(StepError::StabilityBoundExceeded { .. })
        ));
    }

    #[test]
    fn mass_is_conserved_under_shear() {
        let g = Grid::unit_cube(8).unwrap();
        let p = params();
        // lid-driven tangential trace on the top z-face
        let mut u_b = VectorField::zeros(g);
        g.for_each_boundary_node(|i, j, k, idx| {
            if k == g.cells()[2] {
                let [x, y, _] = g.position(i, j, k);
                u_b.values_mut()[idx] = [
                    0.2 * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin(),
                    0.0,
                    0.0,
                ];
            }
        });
        let bdata = BoundaryData::new(
            ScalarField::constant(g, 1.0),
            u_b.clone(),
            VectorField::zeros(g),
            &p,
            &EllipticSolverConfig::default_for(g),
        )
        .unwrap();
        let mut state = FluidState {
            time: 0.0,
            rho: ScalarField::constant(g, 1.0),
            theta: ScalarField::constant(g, 1.0),
            u: bdata.u_ext().clone(),
        };
        let mass0 = ops::integrate(&state.rho);
        let cfg = StepConfig::new(2e-3, 0.9, TimeScheme::ExplicitRk2).unwrap();
        for _ in 0..50 {
            state = step(&state, &bdata, &p, &cfg).unwrap();
        }
        let drift = (ops::integrate(&state.rho) - mass0).abs() / mass0;
        assert!(drift < 1e-12, "mass drift {drift}");
        assert!(state.rho.min_value() > 0.0 && state.theta.min_value() > 0.0);
        // boundary traces are imposed exactly
        g.for_each_boundary_node(|_, _, _, idx| {
            assert_eq!(state.theta.values()[idx], 1.0);
            assert_eq!(state.u.values()[idx], u_b.values()[idx]);
        });
    }

    #[test]
    fn data_class_report_flags_zero_density() {
        let g = Grid::unit_cube(6).unwrap();
        let p = params();
        let bdata = equilibrium_bdata(g, &p);
        let good = FluidState::equilibrium(g, 1.0, 1.0);
        let rep = check_data_class(&good, &bdata);
        assert!(rep.pass());
        assert_eq!(rep.min_rho0, 1.0);
        assert_eq!(rep.min_theta0, 1.0);
        assert_eq!(rep.min_theta_b, 1.0);

        let mut rho = ScalarField::constant(g, 1.0);
        rho.values_mut()[5] = 0.0;
        let bad = FluidState {
            time: 0.0,
            rho,
            theta: ScalarField::constant(g, 1.0),
            u: VectorField::zeros(g),
        };
        let rep = check_data_class(&bad, &bdata);
        assert!(!rep.pass());
        assert!(rep.failures[0].contains("rho0"));
    }

    #[test]
    fn compatibility_zero_for_equilibrium() {
        let g = Grid::unit_cube(6).unwrap();
        let p = params();
        let bdata = equilibrium_bdata(g, &p);
        let state = FluidState::equilibrium(g, 1.0, 1.0);
        let rep = check_compatibility(&state, &bdata, &p);
        assert!(rep.max_residual() < 1e-12);
    }

    #[test]
    fn compatibility_sees_trace_mismatch() {
        let g = Grid::unit_cube(6).unwrap();
        let p = params();
        let mut u_b = VectorField::zeros(g);
        g.for_each_boundary_node(|i, j, k, idx| {
            if k == g.cells()[2] {
                let [x, y, _] = g.position(i, j, k);
                u_b.values_mut()[idx] = [
                    0.3 * (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin(),
                    0.0,
                    0.0,
                ];
            }
        });
        let bdata = BoundaryData::new(
            ScalarField::constant(g, 1.0),
            u_b.clone(),
            VectorField::zeros(g),
            &p,
            &EllipticSolverConfig::default_for(g),
        )
        .unwrap();
        let state = FluidState::equilibrium(g, 1.0, 1.0);
        let rep = check_compatibility(&state, &bdata, &p);
        let max_ub = ops::lp_norm(&u_b, f64::INFINITY).unwrap();
        assert!((rep.u_trace_residual - max_ub).abs() < 1e-12);
    }

    #[test]
    fn boundary_data_rejects_nonpositive_temperature() {
        let g = Grid::unit_cube(6).unwrap();
        let p = params();
        let res = BoundaryData::new(
            ScalarField::constant(g, 0.0),
            VectorField::zeros(g),
            VectorField::zeros(g),
            &p,
            &EllipticSolverConfig::default_for(g),
        );
        assert!(matches!(
            res,
            Err(DataError::NonPositiveBoundaryTemperature(_))
        ));
    }
}
