//! Orchestrates a whole run: data validation, time stepping, periodic
//! diagnostics, and the running regularity report.

use crate::constitutive::PhysParams;
use crate::diagnostics::{self, DiagError, DiagnosticsRecord};
use crate::integrator::{self, BoundaryData, DataError, FluidState, StepConfig, StepError};
use crate::monitor::{Classification, Monitor, MonitorConfig, MonitorError, RegularityReport};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("initial data rejected: {0}")]
    DataClassFailed(String),
    #[error(
        "compatibility residual {residual:.3e} exceeds {tol:.3e}; rerun with the override flag to proceed anyway"
    )]
    CompatibilityFailed { residual: f64, tol: f64 },
    #[error("t_end {t_end} lies before the initial time {t0}")]
    InvalidInterval { t0: f64, t_end: f64 },
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Diag(#[from] DiagError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub t_end: f64,
    /// Steps between diagnostics samples (the final step is always sampled).
    pub diag_interval: usize,
    /// Accept compatibility residuals above the tolerance.
    pub override_compat: bool,
    /// Face-max residual allowed by the compatibility gate.
    pub compat_tol: f64,
    pub monitor: MonitorConfig,
}

impl RunOptions {
    pub fn new(t_end: f64) -> Self {
        RunOptions {
            t_end,
            diag_interval: 10,
            override_compat: false,
            compat_tol: 1e-6,
            monitor: MonitorConfig::default(),
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub final_state: FluidState,
    pub records: Vec<DiagnosticsRecord>,
    pub report: RegularityReport,
    /// Compatibility residual that was accepted via override, if any.
    pub overridden_compat_residual: Option<f64>,
}

/// Advances the state to t_end, sampling diagnostics every
/// `diag_interval` steps. The hook receives (step index, state, record) at
/// every sample and may be used for snapshot output.
pub fn run(
    state0: &FluidState,
    bdata: &BoundaryData,
    params: &PhysParams,
    step_cfg: &StepConfig,
    opts: &RunOptions,
    mut hook: impl FnMut(usize, &FluidState, &DiagnosticsRecord),
) -> Result<RunOutcome, RunError> {
    if opts.t_end < state0.time {
        return Err(RunError::InvalidInterval {
            t0: state0.time,
            t_end: opts.t_end,
        });
    }

    let data_report = integrator::check_data_class(state0, bdata);
    if !data_report.pass() {
        return Err(RunError::DataClassFailed(data_report.failures.join("; ")));
    }
    let compat = integrator::check_compatibility(state0, bdata, params);
    let mut overridden = None;
    if compat.max_residual() > opts.compat_tol {
        if opts.override_compat {
            overridden = Some(compat.max_residual());
        } else {
            return Err(RunError::CompatibilityFailed {
                residual: compat.max_residual(),
                tol: opts.compat_tol,
            });
        }
    }

    // zero-length interval: return the input unchanged
    if opts.t_end == state0.time {
        return Ok(RunOutcome {
            final_state: state0.clone(),
            records: Vec::new(),
            report: RegularityReport {
                horizon: state0.time,
                running_sup: [
                    state0.rho.max_value(),
                    state0.theta.max_value(),
                    state0.u.magnitude().max_value(),
                ],
                running_min: [state0.rho.min_value(), state0.theta.min_value()],
                classification: Classification::ConditionallyRegular,
                estimated_tstar: None,
                fit_quality: 0.0,
            },
            overridden_compat_residual: overridden,
        });
    }

    let mut monitor = Monitor::new(opts.monitor);
    let mut records = Vec::new();
    let mut state = state0.clone();
    let interval = opts.diag_interval.max(1);
    let mut step_index = 0usize;
    // never sample twice at the same time even if dt underflows the horizon
    while state.time < opts.t_end - 1e-12 * step_cfg.dt {
        let remaining = opts.t_end - state.time;
        let mut cfg = *step_cfg;
        if remaining < cfg.dt {
            cfg.dt = remaining;
        }
        let prev = state.clone();
        state = integrator::step(&prev, bdata, params, &cfg)?;
        step_index += 1;
        let at_end = state.time >= opts.t_end - 1e-12 * step_cfg.dt;
        if step_index % interval == 0 || at_end {
            let rec = diagnostics::record(&state, &prev, bdata, params, cfg.dt)?;
            monitor.update(&rec)?;
            hook(step_index, &state, &rec);
            records.push(rec);
        }
    }
    Ok(RunOutcome {
        final_state: state,
        records,
        report: *monitor.report(),
        overridden_compat_residual: overridden,
    })
}
