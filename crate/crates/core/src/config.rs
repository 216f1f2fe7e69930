//! Run configuration: a line-oriented `key = value` format with `[section]`
//! headers. Unknown sections or keys are hard errors; every omitted key
//! falls back to a documented default. `serialize` emits a canonical file
//! that reparses to an equal config.

use crate::constitutive::PhysParams;
use crate::elliptic::EllipticSolverConfig;
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::integrator::{BoundaryData, DataError, FluidState, StepConfig, TimeScheme};
use crate::monitor::MonitorConfig;
use crate::snapshot::{self, SnapshotError};
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: cannot parse {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("missing required key {0}")]
    MissingKey(&'static str),
    #[error("key {key} violates {constraint}, got {value}")]
    Domain {
        key: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("referenced path does not exist: {0}")]
    MissingPath(PathBuf),
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("snapshot grid does not match the configured grid")]
    GridMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

impl Face {
    /// (normal axis, 0 = low side / 1 = high side)
    pub fn axis_side(self) -> (usize, usize) {
        match self {
            Face::XMin => (0, 0),
            Face::XMax => (0, 1),
            Face::YMin => (1, 0),
            Face::YMax => (1, 1),
            Face::ZMin => (2, 0),
            Face::ZMax => (2, 1),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "xmin" => Face::XMin,
            "xmax" => Face::XMax,
            "ymin" => Face::YMin,
            "ymax" => Face::YMax,
            "zmin" => Face::ZMin,
            "zmax" => Face::ZMax,
            _ => return None,
        })
    }
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Face::XMin => "xmin",
            Face::XMax => "xmax",
            Face::YMin => "ymin",
            Face::YMax => "ymax",
            Face::ZMin => "zmin",
            Face::ZMax => "zmax",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    /// Constant density and temperature, fluid at rest.
    Equilibrium { rho: f64, theta: f64 },
    /// Temperature and velocity from the boundary extensions, density set so
    /// the pressure is uniform.
    Extension { pressure: f64 },
    /// Load the state from a snapshot file.
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSpec {
    Constant { value: f64 },
    /// Constant trace plus a sine bump on one face.
    HotFace {
        value: f64,
        amplitude: f64,
        face: Face,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocitySpec {
    Zero,
    /// Tangential sine-bump slip along the first tangential axis of one face.
    TangentialShear { amplitude: f64, face: Face },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForceSpec {
    Zero,
    Constant([f64; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: Grid,
    pub params: PhysParams,
    pub initial: InitialSpec,
    pub theta_b: ThetaSpec,
    pub u_b: VelocitySpec,
    pub force: ForceSpec,
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub scheme: TimeScheme,
    pub diag_interval: usize,
    pub snapshot_every: usize,
    pub output_dir: PathBuf,
    pub monitor: MonitorConfig,
}

struct RawConfig {
    extents: [f64; 3],
    cells: [usize; 3],
    mu: f64,
    eta: f64,
    kappa: f64,
    cv: f64,
    initial_preset: String,
    initial_rho: f64,
    initial_theta: f64,
    initial_pressure: f64,
    initial_snapshot: Option<PathBuf>,
    theta_preset: String,
    theta_value: f64,
    theta_amplitude: f64,
    theta_face: Face,
    u_preset: String,
    u_amplitude: f64,
    u_face: Face,
    force_preset: String,
    force_constant: [f64; 3],
    dt: f64,
    t_end: Option<f64>,
    cfl_safety: f64,
    scheme: String,
    diag_interval: usize,
    snapshot_every: usize,
    output_dir: PathBuf,
    window: usize,
    growth_factor: f64,
    min_samples: usize,
}

impl Default for RawConfig {
    fn default() -> Self {
        RawConfig {
            extents: [1.0, 1.0, 1.0],
            cells: [16, 16, 16],
            mu: 0.05,
            eta: 0.0,
            kappa: 0.05,
            cv: 1.5,
            initial_preset: "equilibrium".into(),
            initial_rho: 1.0,
            initial_theta: 1.0,
            initial_pressure: 1.0,
            initial_snapshot: None,
            theta_preset: "constant".into(),
            theta_value: 1.0,
            theta_amplitude: 0.5,
            theta_face: Face::ZMax,
            u_preset: "zero".into(),
            u_amplitude: 0.2,
            u_face: Face::ZMax,
            force_preset: "zero".into(),
            force_constant: [0.0; 3],
            dt: 1e-3,
            t_end: None,
            cfl_safety: 0.9,
            scheme: "explicit-rk2".into(),
            diag_interval: 10,
            snapshot_every: 0,
            output_dir: PathBuf::from("out"),
            window: 30,
            growth_factor: 4.0,
            min_samples: 8,
        }
    }
}

fn parse_scalar<T: std::str::FromStr>(
    value: &str,
    line: usize,
    key: &str,
) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue {
        line,
        key: key.to_string(),
        reason: format!("cannot parse {value:?}"),
    })
}

fn parse_vec3<T: std::str::FromStr + Copy>(
    value: &str,
    line: usize,
    key: &str,
) -> Result<[T; 3], ConfigError> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    let lift = |s: &str| parse_scalar::<T>(s, line, key);
    match parts.as_slice() {
        [one] => {
            let v = lift(one)?;
            Ok([v; 3])
        }
        [a, b, c] => Ok([lift(a)?, lift(b)?, lift(c)?]),
        _ => Err(ConfigError::BadValue {
            line,
            key: key.to_string(),
            reason: "expected one or three whitespace-separated values".into(),
        }),
    }
}

fn parse_face(value: &str, line: usize, key: &str) -> Result<Face, ConfigError> {
    Face::parse(value).ok_or_else(|| ConfigError::BadValue {
        line,
        key: key.to_string(),
        reason: format!("unknown face {value:?} (xmin/xmax/ymin/ymax/zmin/zmax)"),
    })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut raw = RawConfig::default();
    let mut section = String::new();
    for (i, full_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = full_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax {
                    line: line_no,
                    text: full_line.to_string(),
                })?
                .trim();
            match name {
                "grid" | "params" | "initial" | "boundary" | "force" | "time" | "output"
                | "monitor" => section = name.to_string(),
                _ => {
                    return Err(ConfigError::UnknownSection {
                        line: line_no,
                        name: name.to_string(),
                    })
                }
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            text: full_line.to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let qualified = format!("{section}.{key}");
        match qualified.as_str() {
            "grid.extents" => raw.extents = parse_vec3(value, line_no, key)?,
            "grid.cells" => raw.cells = parse_vec3(value, line_no, key)?,
            "params.mu" => raw.mu = parse_scalar(value, line_no, key)?,
            "params.eta" => raw.eta = parse_scalar(value, line_no, key)?,
            "params.kappa" => raw.kappa = parse_scalar(value, line_no, key)?,
            "params.cv" => raw.cv = parse_scalar(value, line_no, key)?,
            "initial.preset" => raw.initial_preset = value.to_string(),
            "initial.rho" => raw.initial_rho = parse_scalar(value, line_no, key)?,
            "initial.theta" => raw.initial_theta = parse_scalar(value, line_no, key)?,
            "initial.pressure" => raw.initial_pressure = parse_scalar(value, line_no, key)?,
            "initial.snapshot" => raw.initial_snapshot = Some(PathBuf::from(value)),
            "boundary.theta_preset" => raw.theta_preset = value.to_string(),
            "boundary.theta_value" => raw.theta_value = parse_scalar(value, line_no, key)?,
            "boundary.theta_amplitude" => {
                raw.theta_amplitude = parse_scalar(value, line_no, key)?
            }
            "boundary.theta_face" => raw.theta_face = parse_face(value, line_no, key)?,
            "boundary.u_preset" => raw.u_preset = value.to_string(),
            "boundary.u_amplitude" => raw.u_amplitude = parse_scalar(value, line_no, key)?,
            "boundary.u_face" => raw.u_face = parse_face(value, line_no, key)?,
            "force.preset" => raw.force_preset = value.to_string(),
            "force.constant" => raw.force_constant = parse_vec3(value, line_no, key)?,
            "time.dt" => raw.dt = parse_scalar(value, line_no, key)?,
            "time.t_end" => raw.t_end = Some(parse_scalar(value, line_no, key)?),
            "time.cfl_safety" => raw.cfl_safety = parse_scalar(value, line_no, key)?,
            "time.scheme" => raw.scheme = value.to_string(),
            "output.directory" => raw.output_dir = PathBuf::from(value),
            "output.diag_interval" => raw.diag_interval = parse_scalar(value, line_no, key)?,
            "output.snapshot_every" => raw.snapshot_every = parse_scalar(value, line_no, key)?,
            "monitor.window" => raw.window = parse_scalar(value, line_no, key)?,
            "monitor.growth_factor" => raw.growth_factor = parse_scalar(value, line_no, key)?,
            "monitor.min_samples" => raw.min_samples = parse_scalar(value, line_no, key)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: qualified,
                })
            }
        }
    }
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let grid = Grid::new(raw.extents, raw.cells).map_err(|e| ConfigError::BadValue {
        line: 0,
        key: "grid".into(),
        reason: e.to_string(),
    })?;
    for (key, value, constraint, ok) in [
        ("mu", raw.mu, "mu > 0", raw.mu > 0.0),
        ("eta", raw.eta, "eta >= 0", raw.eta >= 0.0),
        ("kappa", raw.kappa, "kappa > 0", raw.kappa > 0.0),
        ("cv", raw.cv, "cv > 0", raw.cv > 0.0),
        ("dt", raw.dt, "dt > 0", raw.dt > 0.0),
        (
            "cfl_safety",
            raw.cfl_safety,
            "cfl_safety in (0, 1]",
            raw.cfl_safety > 0.0 && raw.cfl_safety <= 1.0,
        ),
    ] {
        if !ok {
            return Err(ConfigError::Domain {
                key,
                constraint,
                value,
            });
        }
    }
    let params = PhysParams::new(raw.mu, raw.eta, raw.kappa, raw.cv).expect("checked above");
    let t_end = raw.t_end.ok_or(ConfigError::MissingKey("time.t_end"))?;
    if t_end < 0.0 {
        return Err(ConfigError::Domain {
            key: "t_end",
            constraint: "t_end >= 0",
            value: t_end,
        });
    }
    let scheme = match raw.scheme.as_str() {
        "explicit-rk2" => TimeScheme::ExplicitRk2,
        "semi-implicit" => TimeScheme::SemiImplicitTheta,
        other => {
            return Err(ConfigError::BadValue {
                line: 0,
                key: "time.scheme".into(),
                reason: format!("unknown scheme {other:?} (explicit-rk2/semi-implicit)"),
            })
        }
    };
    let initial = match raw.initial_preset.as_str() {
        "equilibrium" => InitialSpec::Equilibrium {
            rho: raw.initial_rho,
            theta: raw.initial_theta,
        },
        "extension" => InitialSpec::Extension {
            pressure: raw.initial_pressure,
        },
        "snapshot" => {
            let path = raw
                .initial_snapshot
                .ok_or(ConfigError::MissingKey("initial.snapshot"))?;
            if !path.exists() {
                return Err(ConfigError::MissingPath(path));
            }
            InitialSpec::Snapshot(path)
        }
        other => {
            return Err(ConfigError::BadValue {
                line: 0,
                key: "initial.preset".into(),
                reason: format!("unknown preset {other:?} (equilibrium/extension/snapshot)"),
            })
        }
    };
    let theta_b = match raw.theta_preset.as_str() {
        "constant" => ThetaSpec::Constant {
            value: raw.theta_value,
        },
        "hot-face" => ThetaSpec::HotFace {
            value: raw.theta_value,
            amplitude: raw.theta_amplitude,
            face: raw.theta_face,
        },
        other => {
            return Err(ConfigError::BadValue {
                line: 0,
                key: "boundary.theta_preset".into(),
                reason: format!("unknown preset {other:?} (constant/hot-face)"),
            })
        }
    };
    let u_b = match raw.u_preset.as_str() {
        "zero" => VelocitySpec::Zero,
        "tangential-shear" => VelocitySpec::TangentialShear {
            amplitude: raw.u_amplitude,
            face: raw.u_face,
        },
        other => {
            return Err(ConfigError::BadValue {
                line: 0,
                key: "boundary.u_preset".into(),
                reason: format!("unknown preset {other:?} (zero/tangential-shear)"),
            })
        }
    };
    let force = match raw.force_preset.as_str() {
        "zero" => ForceSpec::Zero,
        "constant" => ForceSpec::Constant(raw.force_constant),
        other => {
            return Err(ConfigError::BadValue {
                line: 0,
                key: "force.preset".into(),
                reason: format!("unknown preset {other:?} (zero/constant)"),
            })
        }
    };
    let monitor = MonitorConfig::new(raw.window, raw.growth_factor, raw.min_samples).map_err(
        |e| ConfigError::BadValue {
            line: 0,
            key: "monitor".into(),
            reason: e.to_string(),
        },
    )?;
    Ok(RunConfig {
        grid,
        params,
        initial,
        theta_b,
        u_b,
        force,
        dt: raw.dt,
        t_end,
        cfl_safety: raw.cfl_safety,
        scheme,
        diag_interval: raw.diag_interval.max(1),
        snapshot_every: raw.snapshot_every,
        output_dir: raw.output_dir,
        monitor,
    })
}

impl RunConfig {
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let e = self.grid.extents();
        let c = self.grid.cells();
        s.push_str("[grid]\n");
        s.push_str(&format!("extents = {} {} {}\n", e[0], e[1], e[2]));
        s.push_str(&format!("cells = {} {} {}\n", c[0], c[1], c[2]));
        s.push_str("\n[params]\n");
        s.push_str(&format!("mu = {}\n", self.params.mu()));
        s.push_str(&format!("eta = {}\n", self.params.eta()));
        s.push_str(&format!("kappa = {}\n", self.params.kappa()));
        s.push_str(&format!("cv = {}\n", self.params.cv()));
        s.push_str("\n[initial]\n");
        match &self.initial {
            InitialSpec::Equilibrium { rho, theta } => {
                s.push_str("preset = equilibrium\n");
                s.push_str(&format!("rho = {rho}\n"));
                s.push_str(&format!("theta = {theta}\n"));
            }
            InitialSpec::Extension { pressure } => {
                s.push_str("preset = extension\n");
                s.push_str(&format!("pressure = {pressure}\n"));
            }
            InitialSpec::Snapshot(path) => {
                s.push_str("preset = snapshot\n");
                s.push_str(&format!("snapshot = {}\n", path.display()));
            }
        }
        s.push_str("\n[boundary]\n");
        match self.theta_b {
            ThetaSpec::Constant { value } => {
                s.push_str("theta_preset = constant\n");
                s.push_str(&format!("theta_value = {value}\n"));
            }
            ThetaSpec::HotFace {
                value,
                amplitude,
                face,
            } => {
                s.push_str("theta_preset = hot-face\n");
                s.push_str(&format!("theta_value = {value}\n"));
                s.push_str(&format!("theta_amplitude = {amplitude}\n"));
                s.push_str(&format!("theta_face = {face}\n"));
            }
        }
        match self.u_b {
            VelocitySpec::Zero => s.push_str("u_preset = zero\n"),
            VelocitySpec::TangentialShear { amplitude, face } => {
                s.push_str("u_preset = tangential-shear\n");
                s.push_str(&format!("u_amplitude = {amplitude}\n"));
                s.push_str(&format!("u_face = {face}\n"));
            }
        }
        s.push_str("\n[force]\n");
        match self.force {
            ForceSpec::Zero => s.push_str("preset = zero\n"),
            ForceSpec::Constant(f) => {
                s.push_str("preset = constant\n");
                s.push_str(&format!("constant = {} {} {}\n", f[0], f[1], f[2]));
            }
        }
        s.push_str("\n[time]\n");
        s.push_str(&format!("dt = {}\n", self.dt));
        s.push_str(&format!("t_end = {}\n", self.t_end));
        s.push_str(&format!("cfl_safety = {}\n", self.cfl_safety));
        s.push_str(&format!(
            "scheme = {}\n",
            match self.scheme {
                TimeScheme::ExplicitRk2 => "explicit-rk2",
                TimeScheme::SemiImplicitTheta => "semi-implicit",
            }
        ));
        s.push_str("\n[output]\n");
        s.push_str(&format!("directory = {}\n", self.output_dir.display()));
        s.push_str(&format!("diag_interval = {}\n", self.diag_interval));
        s.push_str(&format!("snapshot_every = {}\n", self.snapshot_every));
        s.push_str("\n[monitor]\n");
        s.push_str(&format!("window = {}\n", self.monitor.window));
        s.push_str(&format!("growth_factor = {}\n", self.monitor.growth_factor));
        s.push_str(&format!("min_samples = {}\n", self.monitor.min_samples));
        s
    }

    pub fn step_config(&self) -> StepConfig {
        StepConfig::new(self.dt, self.cfl_safety, self.scheme)
            .expect("validated at parse time")
    }

    /// Boundary temperature trace on the full grid (interior values carry the
    /// base value; only boundary nodes matter downstream).
    pub fn theta_b_field(&self) -> ScalarField {
        match self.theta_b {
            ThetaSpec::Constant { value } => ScalarField::constant(self.grid, value),
            ThetaSpec::HotFace {
                value,
                amplitude,
                face,
            } => {
                let mut f = ScalarField::constant(self.grid, value);
                add_face_bump_scalar(&mut f, face, amplitude);
                f
            }
        }
    }

    pub fn u_b_field(&self) -> VectorField {
        match self.u_b {
            VelocitySpec::Zero => VectorField::zeros(self.grid),
            VelocitySpec::TangentialShear { amplitude, face } => {
                let mut f = VectorField::zeros(self.grid);
                add_face_bump_tangential(&mut f, face, amplitude);
                f
            }
        }
    }

    pub fn force_field(&self) -> VectorField {
        match self.force {
            ForceSpec::Zero => VectorField::zeros(self.grid),
            ForceSpec::Constant(c) => VectorField::constant(self.grid, c),
        }
    }

    /// Materializes the initial state and the boundary data (with cached
    /// extensions).
    pub fn build(&self) -> Result<(FluidState, BoundaryData), BuildError> {
        let cfg = EllipticSolverConfig::default_for(self.grid);
        let bdata = BoundaryData::new(
            self.theta_b_field(),
            self.u_b_field(),
            self.force_field(),
            &self.params,
            &cfg,
        )?;
        let state = match &self.initial {
            InitialSpec::Equilibrium { rho, theta } => FluidState::new(
                0.0,
                ScalarField::constant(self.grid, *rho),
                ScalarField::constant(self.grid, *theta),
                VectorField::zeros(self.grid),
            )?,
            InitialSpec::Extension { pressure } => {
                let p0 = *pressure;
                let theta = bdata.theta_ext().clone();
                let rho = theta.map(|t| p0 / t);
                FluidState::new(0.0, rho, theta, bdata.u_ext().clone())?
            }
            InitialSpec::Snapshot(path) => {
                let state = snapshot::read_snapshot(path)?;
                if state.grid() != self.grid {
                    return Err(BuildError::GridMismatch);
                }
                state
            }
        };
        Ok((state, bdata))
    }
}

fn face_coords(grid: Grid, face: Face) -> impl Fn(usize, usize, usize) -> Option<(f64, f64)> {
    let (axis, side) = face.axis_side();
    let cells = grid.cells();
    let fixed = if side == 0 { 0 } else { cells[axis] };
    let (p, q) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let ext = grid.extents();
    move |i: usize, j: usize, k: usize| {
        let ijk = [i, j, k];
        if ijk[axis] != fixed {
            return None;
        }
        let pos = grid.position(i, j, k);
        Some((pos[p] / ext[p], pos[q] / ext[q]))
    }
}

/// Adds amplitude * sin(pi s1) sin(pi s2) on one face; the bump vanishes on
/// the face edges so the trace stays continuous.
fn add_face_bump_scalar(f: &mut ScalarField, face: Face, amplitude: f64) {
    let grid = f.grid();
    let coords = face_coords(grid, face);
    grid.for_each_boundary_node(|i, j, k, idx| {
        if let Some((s1, s2)) = coords(i, j, k) {
            f.values_mut()[idx] += amplitude * (PI * s1).sin() * (PI * s2).sin();
        }
    });
}

/// Tangential slip along the first tangential axis of the face, with the
/// same vanishing-at-edges bump profile. The normal component stays zero.
fn add_face_bump_tangential(f: &mut VectorField, face: Face, amplitude: f64) {
    let grid = f.grid();
    let (axis, _) = face.axis_side();
    let dir = match axis {
        0 => 1,
        1 => 0,
        _ => 0,
    };
    let coords = face_coords(grid, face);
    grid.for_each_boundary_node(|i, j, k, idx| {
        if let Some((s1, s2)) = coords(i, j, k) {
            f.values_mut()[idx][dir] += amplitude * (PI * s1).sin() * (PI * s2).sin();
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let text = "[grid]\ncells = 8\n[params]\nmu = 0.1\n[time]\nt_end = 0.5\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.grid.cells(), [8, 8, 8]);
        assert_eq!(cfg.params.mu(), 0.1);
        assert_eq!(cfg.params.cv(), 1.5);
        assert_eq!(cfg.t_end, 0.5);
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.scheme, TimeScheme::ExplicitRk2);
        assert!(matches!(cfg.initial, InitialSpec::Equilibrium { .. }));
    }

    #[test]
    fn negative_mu_names_the_constraint() {
        let text = "[params]\nmu = -1\n[time]\nt_end = 1\n";
        let err = parse_config(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("mu"), "{msg}");
        assert!(msg.contains("mu > 0"), "{msg}");
    }

    #[test]
    fn unknown_key_is_hard_error() {
        let text = "[grid]\ncolor = blue\n[time]\nt_end = 1\n";
        assert!(matches!(
            parse_config(text),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
    }

    #[test]
    fn unknown_section_is_hard_error() {
        let text = "[universe]\nanswer = 42\n";
        assert!(matches!(
            parse_config(text),
            Err(ConfigError::UnknownSection { line: 1, .. })
        ));
    }

    #[test]
    fn missing_t_end_is_reported() {
        assert!(matches!(
            parse_config("[grid]\ncells = 8\n"),
            Err(ConfigError::MissingKey("time.t_end"))
        ));
    }

    #[test]
    fn round_trip_canonical_form() {
        let text = "\
[grid]
extents = 1 2 1
cells = 8 12 8

[boundary]
theta_preset = hot-face
theta_value = 1.5
theta_amplitude = 0.25
theta_face = ymax
u_preset = tangential-shear
u_amplitude = 0.3
u_face = zmin

[time]
dt = 5e-4
t_end = 0.25
scheme = semi-implicit
";
        let cfg = parse_config(text).unwrap();
        let cfg2 = parse_config(&cfg.serialize()).unwrap();
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn build_equilibrium() {
        let cfg =
            parse_config("[grid]\ncells = 6\n[time]\nt_end = 0.1\n").unwrap();
        let (state, bdata) = cfg.build().unwrap();
        assert_eq!(state.rho.values()[0], 1.0);
        assert_eq!(bdata.min_theta_b(), 1.0);
    }

    #[test]
    fn build_extension_has_uniform_pressure() {
        let text = "\
[grid]
cells = 8
[boundary]
theta_preset = hot-face
theta_amplitude = 0.4
[initial]
preset = extension
pressure = 2.0
[time]
t_end = 0.1
";
        let cfg = parse_config(text).unwrap();
        let (state, _) = cfg.build().unwrap();
        let p = state.rho.zip_with(&state.theta, |r, t| r * t).unwrap();
        assert!((p.max_value() - 2.0).abs() < 1e-12);
        assert!((p.min_value() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shear_trace_is_tangential() {
        let text = "\
[grid]
cells = 8
[boundary]
u_preset = tangential-shear
u_amplitude = 0.5
u_face = xmax
[time]
t_end = 0.1
";
        let cfg = parse_config(text).unwrap();
        let u_b = cfg.u_b_field();
        crate::elliptic::check_tangential(&u_b).unwrap();
        assert!(u_b.magnitude().max_value() > 0.4);
    }

    proptest! {
        #[test]
        fn serialized_configs_reparse_equal(
            cells in 4usize..12,
            mu in 0.01f64..1.0,
            kappa in 0.01f64..1.0,
            cv in 0.5f64..3.0,
            dt in 1e-4f64..1e-2,
            t_end in 0.0f64..1.0,
            amp in 0.0f64..0.5,
            shear in prop::bool::ANY,
            hot in prop::bool::ANY,
        ) {
            let mut text = format!(
                "[grid]\ncells = {cells}\n[params]\nmu = {mu}\nkappa = {kappa}\ncv = {cv}\n[time]\ndt = {dt}\nt_end = {t_end}\n"
            );
            if shear {
                text.push_str(&format!("[boundary]\nu_preset = tangential-shear\nu_amplitude = {amp}\n"));
            }
            if hot {
                text.push_str("[boundary]\ntheta_preset = hot-face\n");
            }
            let cfg = parse_config(&text).unwrap();
            let cfg2 = parse_config(&cfg.serialize()).unwrap();
            prop_assert_eq!(cfg, cfg2);
        }
    }
}
