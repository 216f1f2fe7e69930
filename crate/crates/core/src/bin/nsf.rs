use clap::{Parser, Subcommand};
use nsf_core::config::{self, RunConfig};
use nsf_core::diagnostics::{self, DiagnosticsRecord};
use nsf_core::integrator;
use nsf_core::monitor::{self, MonitorConfig};
use nsf_core::runner::{self, RunOptions};
use nsf_core::snapshot;
use nsf_core::timeseries;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const CONFIG_HELP: &str = "\
Config files are line-oriented `key = value` text with [section] headers.
Unknown sections or keys are errors. Defaults:

  [grid]     extents = 1 1 1        box side lengths
             cells = 16 16 16       cells per axis (one value = cube)
  [params]   mu = 0.05              shear viscosity (> 0)
             eta = 0                bulk viscosity (>= 0)
             kappa = 0.05           heat conductivity (> 0)
             cv = 1.5               specific heat (> 0)
  [initial]  preset = equilibrium   equilibrium | extension | snapshot
             rho = 1                equilibrium density
             theta = 1              equilibrium temperature
             pressure = 1           uniform pressure for `extension`
             snapshot = <path>      state file for `snapshot`
  [boundary] theta_preset = constant       constant | hot-face
             theta_value = 1
             theta_amplitude = 0.5         hot-face bump height
             theta_face = zmax
             u_preset = zero               zero | tangential-shear
             u_amplitude = 0.2             slip bump height
             u_face = zmax
  [force]    preset = zero          zero | constant
             constant = 0 0 0
  [time]     dt = 1e-3              time step (> 0)
             t_end = <required>     final time (>= 0)
             cfl_safety = 0.9       fraction of the stability bound
             scheme = explicit-rk2  explicit-rk2 | semi-implicit
  [output]   directory = out
             diag_interval = 10     steps between diagnostics samples
             snapshot_every = 0     steps between snapshots (0 = none)
  [monitor]  window = 30            trailing samples for trend fitting
             growth_factor = 4      growth flag threshold (> 1)
             min_samples = 8        samples before any fit (>= 4)

The environment variable NSF_THREADS caps internal parallelism (0 = auto).";

#[derive(Parser)]
#[command(
    name = "nsf",
    about = "Compressible heat-conducting flow simulator with regularity diagnostics",
    after_long_help = CONFIG_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate: emit a diagnostics time series, periodic snapshots, and a
    /// final regularity report
    Run {
        config: PathBuf,
        /// Override the configured output directory
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Write a snapshot every N steps (overrides the config)
        #[arg(long, value_name = "N")]
        snapshot_every: Option<usize>,
        /// Proceed despite compatibility residuals (logged)
        #[arg(long)]
        override_compat: bool,
        /// Suppress progress and report output
        #[arg(long)]
        quiet: bool,
    },
    /// Validate initial and boundary data; nonzero exit on failure
    Check { config: PathBuf },
    /// Evaluate one diagnostics record from a snapshot pair
    Diagnose {
        /// Earlier snapshot
        previous: PathBuf,
        /// Later snapshot
        current: PathBuf,
        config: PathBuf,
    },
    /// Classify an emitted time series offline
    Monitor {
        timeseries: PathBuf,
        #[arg(long, default_value_t = 30)]
        window: usize,
        #[arg(long, default_value_t = 4.0)]
        growth_factor: f64,
        #[arg(long, default_value_t = 8)]
        min_samples: usize,
    },
    /// Emit per-channel two-column plot files from a time series
    Plotdata {
        timeseries: PathBuf,
        #[arg(long, default_value = "plot")]
        output_dir: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    // the implementation runs serially, so any requested cap is honored
    if let Ok(v) = std::env::var("NSF_THREADS") {
        if v.parse::<usize>().is_err() {
            eprintln!("error: NSF_THREADS must be a nonnegative integer, got {v:?}");
            return ExitCode::FAILURE;
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            output_dir,
            snapshot_every,
            override_compat,
            quiet,
        } => cmd_run(&config, output_dir, snapshot_every, override_compat, quiet),
        Command::Check { config } => cmd_check(&config),
        Command::Diagnose {
            previous,
            current,
            config,
        } => cmd_diagnose(&previous, &current, &config),
        Command::Monitor {
            timeseries,
            window,
            growth_factor,
            min_samples,
        } => cmd_monitor(&timeseries, window, growth_factor, min_samples),
        Command::Plotdata {
            timeseries,
            output_dir,
            quiet,
        } => cmd_plotdata(&timeseries, &output_dir, quiet),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    config::parse_config(&text).map_err(|e| e.to_string())
}

fn cmd_run(
    config_path: &Path,
    output_dir: Option<PathBuf>,
    snapshot_every: Option<usize>,
    override_compat: bool,
    quiet: bool,
) -> Result<ExitCode, String> {
    let mut cfg = load_config(config_path)?;
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    if let Some(n) = snapshot_every {
        cfg.snapshot_every = n;
    }
    let (state0, bdata) = cfg.build().map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| format!("cannot create {}: {e}", cfg.output_dir.display()))?;

    let mut opts = RunOptions::new(cfg.t_end);
    opts.diag_interval = cfg.diag_interval;
    opts.override_compat = override_compat;
    opts.monitor = cfg.monitor;

    let snap_every = cfg.snapshot_every;
    let out_dir = cfg.output_dir.clone();
    let mut snap_err: Option<String> = None;
    let outcome = runner::run(
        &state0,
        &bdata,
        &cfg.params,
        &cfg.step_config(),
        &opts,
        |step, state, _rec| {
            if snap_every > 0 && step % snap_every == 0 && snap_err.is_none() {
                let path = out_dir.join(format!("step_{step:06}.snap"));
                if let Err(e) = snapshot::write_snapshot(state, &path) {
                    snap_err = Some(e.to_string());
                }
            }
        },
    )
    .map_err(|e| e.to_string())?;
    if let Some(e) = snap_err {
        return Err(e);
    }

    timeseries::write_timeseries(&outcome.records, &cfg.output_dir.join("timeseries.csv"))
        .map_err(|e| e.to_string())?;
    snapshot::write_snapshot(&outcome.final_state, &cfg.output_dir.join("final.snap"))
        .map_err(|e| e.to_string())?;
    std::fs::write(
        cfg.output_dir.join("report.txt"),
        format!("{}\n", outcome.report),
    )
    .map_err(|e| e.to_string())?;

    if !quiet {
        if let Some(r) = outcome.overridden_compat_residual {
            println!("compatibility residual {r:.3e} accepted via --override-compat");
        }
        println!(
            "run finished at t = {:.6} ({} samples)",
            outcome.final_state.time,
            outcome.records.len()
        );
        println!("{}", outcome.report);
    }
    Ok(ExitCode::SUCCESS)
}

const CHECK_COMPAT_TOL: f64 = 1e-6;

fn cmd_check(config_path: &Path) -> Result<ExitCode, String> {
    let cfg = load_config(config_path)?;
    let (state0, bdata) = cfg.build().map_err(|e| e.to_string())?;
    let data = integrator::check_data_class(&state0, &bdata);
    println!("data class");
    println!("  min rho0        = {:.6e}", data.min_rho0);
    println!("  min theta0      = {:.6e}", data.min_theta0);
    println!("  min theta_B     = {:.6e}", data.min_theta_b);
    println!("  data norm       = {:.6e}", data.w32_data_norm);
    println!("  theta_B norm    = {:.6e}", data.theta_b_boundary_norm);
    println!("  u_B norm        = {:.6e}", data.u_b_boundary_norm);
    println!("  force norm      = {:.6e}", data.f_w22_norm);
    for f in &data.failures {
        println!("  FAIL: {f}");
    }
    let compat = integrator::check_compatibility(&state0, &bdata, &cfg.params);
    println!("compatibility residuals (face-max)");
    println!("  theta trace     = {:.6e}", compat.theta_trace_residual);
    println!("  u trace         = {:.6e}", compat.u_trace_residual);
    println!("  momentum        = {:.6e}", compat.momentum_residual);
    println!("  energy          = {:.6e}", compat.energy_residual);
    let pass = data.pass() && compat.max_residual() <= CHECK_COMPAT_TOL;
    println!("verdict: {}", if pass { "pass" } else { "fail" });
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_diagnose(prev: &Path, current: &Path, config_path: &Path) -> Result<ExitCode, String> {
    let cfg = load_config(config_path)?;
    let state_prev = snapshot::read_snapshot(prev).map_err(|e| e.to_string())?;
    let state_now = snapshot::read_snapshot(current).map_err(|e| e.to_string())?;
    if state_prev.grid() != cfg.grid || state_now.grid() != cfg.grid {
        return Err("snapshot grid does not match the configured grid".into());
    }
    let (_, bdata) = cfg.build().map_err(|e| e.to_string())?;
    let dt = if state_now.time > state_prev.time {
        state_now.time - state_prev.time
    } else {
        cfg.dt
    };
    let rec = diagnostics::record(&state_now, &state_prev, &bdata, &cfg.params, dt)
        .map_err(|e| e.to_string())?;
    for (name, value) in DiagnosticsRecord::FIELD_NAMES.iter().zip(rec.to_row()) {
        println!("{name} = {value:.16e}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_monitor(
    path: &Path,
    window: usize,
    growth_factor: f64,
    min_samples: usize,
) -> Result<ExitCode, String> {
    let records = timeseries::read_timeseries(path).map_err(|e| e.to_string())?;
    let cfg =
        MonitorConfig::new(window, growth_factor, min_samples).map_err(|e| e.to_string())?;
    let report = monitor::classify(&records, &cfg).map_err(|e| e.to_string())?;
    println!("{report}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_plotdata(path: &Path, output_dir: &Path, quiet: bool) -> Result<ExitCode, String> {
    let records = timeseries::read_timeseries(path).map_err(|e| e.to_string())?;
    let paths = timeseries::write_plot_data(&records, output_dir).map_err(|e| e.to_string())?;
    if !quiet {
        println!(
            "wrote {} channel files to {}",
            paths.len(),
            output_dir.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}
