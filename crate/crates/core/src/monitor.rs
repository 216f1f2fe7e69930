//! Tracks the running extremes of (density, temperature, speed), classifies
//! runs, and extrapolates a singularity time when the monitored channels
//! grow fast enough.
//!
//! The classifier fits m(t) ~ C (T* - t)^(-gamma) to the trailing window of
//! the largest sup channel. A finite-time power law produces an interior
//! optimum for T* with a high-quality fit; plain exponential growth pushes
//! the optimal T* to the search boundary and is reported as growth without a
//! singularity estimate. The fit family and the thresholds are monitoring
//! policy, not a statement about the underlying equations.

use crate::diagnostics::DiagnosticsRecord;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("record time {next} does not advance past the report horizon {prev}")]
    NonMonotoneTime { prev: f64, next: f64 },
    #[error("need at least {need} samples, got {have}")]
    TooFewSamples { have: usize, need: usize },
    #[error("invalid monitor config: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    ConditionallyRegular,
    GrowthDetected,
    SuspectedBlowUp,
    PositivityLost,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::ConditionallyRegular => "conditionally-regular",
            Classification::GrowthDetected => "growth-detected",
            Classification::SuspectedBlowUp => "suspected-blow-up",
            Classification::PositivityLost => "positivity-lost",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    /// Last time observed.
    pub horizon: f64,
    /// Running suprema of (rho, theta, |u|) over [0, horizon].
    pub running_sup: [f64; 3],
    /// Running minima of (rho, theta).
    pub running_min: [f64; 2],
    pub classification: Classification,
    /// Present only for suspected-blow-up; always beyond the horizon.
    pub estimated_tstar: Option<f64>,
    /// Coefficient of determination of the trailing power-law fit.
    pub fit_quality: f64,
}

impl fmt::Display for RegularityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "regularity report")?;
        writeln!(f, "  horizon         = {:.6}", self.horizon)?;
        writeln!(
            f,
            "  running sup     = rho {:.6e}, theta {:.6e}, speed {:.6e}",
            self.running_sup[0], self.running_sup[1], self.running_sup[2]
        )?;
        writeln!(
            f,
            "  running min     = rho {:.6e}, theta {:.6e}",
            self.running_min[0], self.running_min[1]
        )?;
        writeln!(f, "  classification  = {}", self.classification)?;
        match self.estimated_tstar {
            Some(t) => writeln!(f, "  estimated T*    = {t:.6}")?,
            None => writeln!(f, "  estimated T*    = none")?,
        }
        write!(f, "  fit quality     = {:.4}", self.fit_quality)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorConfig {
    /// Trailing samples used for trend fitting.
    pub window: usize,
    /// Flag threshold on channel growth across the window.
    pub growth_factor: f64,
    /// Samples required before any fit is attempted.
    pub min_samples: usize,
}

impl MonitorConfig {
    pub fn new(window: usize, growth_factor: f64, min_samples: usize) -> Result<Self, MonitorError> {
        if min_samples < 4 {
            return Err(MonitorError::InvalidConfig("min_samples must be at least 4"));
        }
        if window < min_samples {
            return Err(MonitorError::InvalidConfig(
                "window must be at least min_samples",
            ));
        }
        if !(growth_factor > 1.0) {
            return Err(MonitorError::InvalidConfig("growth_factor must exceed 1"));
        }
        Ok(MonitorConfig {
            window,
            growth_factor,
            min_samples,
        })
    }
}

impl Default for MonitorConfig {
    fn default() -> Self {
        MonitorConfig {
            window: 30,
            growth_factor: 4.0,
            min_samples: 8,
        }
    }
}

const FIT_QUALITY_THRESHOLD: f64 = 0.99;

/// Least squares of log m against log(tstar - t); returns (gamma, r_squared).
fn power_law_fit(times: &[f64], logs: &[f64], tstar: f64) -> (f64, f64) {
    let n = times.len() as f64;
    let xs: Vec<f64> = times.iter().map(|&t| (tstar - t).ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = logs.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(logs) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = (sxy * sxy) / (sxx * syy);
    // model: log m = log C - gamma log(tstar - t)
    (-slope, r2.clamp(0.0, 1.0))
}

/// Classifies a full history of records. Pure function of the history.
pub fn classify(
    history: &[DiagnosticsRecord],
    cfg: &MonitorConfig,
) -> Result<RegularityReport, MonitorError> {
    if history.len() < cfg.min_samples {
        return Err(MonitorError::TooFewSamples {
            have: history.len(),
            need: cfg.min_samples,
        });
    }
    let horizon = history.last().unwrap().time;
    let mut sup = [f64::NEG_INFINITY; 3];
    let mut min = [f64::INFINITY; 2];
    let mut positivity_lost = false;
    for rec in history {
        sup[0] = sup[0].max(rec.sup_rho);
        sup[1] = sup[1].max(rec.sup_theta);
        sup[2] = sup[2].max(rec.sup_speed);
        min[0] = min[0].min(rec.min_rho);
        min[1] = min[1].min(rec.min_theta);
        if !(rec.min_rho > 0.0) || !(rec.min_theta > 0.0) {
            positivity_lost = true;
        }
    }
    let mut report = RegularityReport {
        horizon,
        running_sup: sup,
        running_min: min,
        classification: Classification::ConditionallyRegular,
        estimated_tstar: None,
        fit_quality: 0.0,
    };
    if positivity_lost {
        report.classification = Classification::PositivityLost;
        return Ok(report);
    }

    let start = history.len().saturating_sub(cfg.window);
    let window = &history[start..];
    let channel: Vec<f64> = window
        .iter()
        .map(|r| r.sup_rho.max(r.sup_theta).max(r.sup_speed))
        .collect();
    let times: Vec<f64> = window.iter().map(|r| r.time).collect();
    let first = channel.first().copied().unwrap_or(0.0);
    let last = channel.last().copied().unwrap_or(0.0);
    if !(first > 0.0) || last < cfg.growth_factor * first {
        return Ok(report);
    }
    report.classification = Classification::GrowthDetected;

    if channel.iter().any(|&m| !(m > 0.0)) {
        return Ok(report);
    }
    let logs: Vec<f64> = channel.iter().map(|m| m.ln()).collect();
    let t_last = *times.last().unwrap();
    let span = t_last - times[0];
    if !(span > 0.0) {
        return Ok(report);
    }

    // golden-section maximization of the fit quality over the candidate
    // singularity time
    let lo = t_last + 1e-3 * span;
    let hi = t_last + 2.0 * span;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = power_law_fit(&times, &logs, c).1;
    let mut fd = power_law_fit(&times, &logs, d).1;
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = power_law_fit(&times, &logs, c).1;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = power_law_fit(&times, &logs, d).1;
        }
    }
    let tstar = 0.5 * (a + b);
    let (gamma, r2) = power_law_fit(&times, &logs, tstar);
    report.fit_quality = r2;

    // an optimum pinned at the search boundary means the data prefers
    // "singularity at infinity", i.e. sub-power-law (e.g. exponential) growth
    let at_boundary = tstar > t_last + 1.99 * span;
    if r2 >= FIT_QUALITY_THRESHOLD && gamma > 0.0 && !at_boundary {
        report.classification = Classification::SuspectedBlowUp;
        report.estimated_tstar = Some(tstar);
    }
    Ok(report)
}

/// Single-owner accumulator over a record stream.
#[derive(Debug, Clone)]
pub struct Monitor {
    cfg: MonitorConfig,
    history: Vec<DiagnosticsRecord>,
    report: RegularityReport,
}

impl Monitor {
    pub fn new(cfg: MonitorConfig) -> Self {
        Monitor {
            cfg,
            history: Vec::new(),
            report: RegularityReport {
                horizon: f64::NEG_INFINITY,
                running_sup: [f64::NEG_INFINITY; 3],
                running_min: [f64::INFINITY; 2],
                classification: Classification::ConditionallyRegular,
                estimated_tstar: None,
                fit_quality: 0.0,
            },
        }
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.cfg
    }

    pub fn history(&self) -> &[DiagnosticsRecord] {
        &self.history
    }

    pub fn report(&self) -> &RegularityReport {
        &self.report
    }

    /// Folds one record into the running report. Time must strictly advance.
    pub fn update(&mut self, rec: &DiagnosticsRecord) -> Result<RegularityReport, MonitorError> {
        if rec.time <= self.report.horizon {
            return Err(MonitorError::NonMonotoneTime {
                prev: self.report.horizon,
                next: rec.time,
            });
        }
        self.history.push(*rec);
        let sticky_lost = self.report.classification == Classification::PositivityLost;
        self.report.horizon = rec.time;
        self.report.running_sup[0] = self.report.running_sup[0].max(rec.sup_rho);
        self.report.running_sup[1] = self.report.running_sup[1].max(rec.sup_theta);
        self.report.running_sup[2] = self.report.running_sup[2].max(rec.sup_speed);
        self.report.running_min[0] = self.report.running_min[0].min(rec.min_rho);
        self.report.running_min[1] = self.report.running_min[1].min(rec.min_theta);
        if sticky_lost || !(rec.min_rho > 0.0) || !(rec.min_theta > 0.0) {
            self.report.classification = Classification::PositivityLost;
            self.report.estimated_tstar = None;
        } else if self.history.len() >= self.cfg.min_samples {
            let fitted = classify(&self.history, &self.cfg)?;
            self.report.classification = fitted.classification;
            self.report.estimated_tstar = fitted.estimated_tstar;
            self.report.fit_quality = fitted.fit_quality;
        }
        Ok(self.report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(time: f64, m: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            time,
            sup_rho: 1.0,
            sup_theta: 1.0,
            sup_speed: m,
            min_rho: 1.0,
            min_theta: 1.0,
            mass: 1.0,
            ballistic_energy: 0.0,
            dissipation: 0.0,
            budget_terms: [0.0; 5],
            budget_residual: 0.0,
            grad_u_l2: 0.0,
            grad_u_l4: 0.0,
            grad_theta_l2: 0.0,
            rho_dt_u_l2: 0.0,
            rho_dt_theta_l2: 0.0,
            decomposition_mismatch: 0.0,
            gn_margin: 0.0,
        }
    }

    #[test]
    fn config_validation() {
        assert!(MonitorConfig::new(10, 4.0, 4).is_ok());
        assert!(MonitorConfig::new(3, 4.0, 3).is_err());
        assert!(MonitorConfig::new(4, 4.0, 8).is_err());
        assert!(MonitorConfig::new(10, 1.0, 4).is_err());
    }

    #[test]
    fn constant_stream_is_regular() {
        let cfg = MonitorConfig::default();
        let mut mon = Monitor::new(cfg);
        for i in 0..40 {
            let r = mon.update(&rec(i as f64 * 0.01, 2.0)).unwrap();
            assert_eq!(r.classification, Classification::ConditionallyRegular);
            assert_eq!(r.running_sup, [1.0, 1.0, 2.0]);
        }
    }

    #[test]
    fn bounded_oscillation_is_regular() {
        let cfg = MonitorConfig::default();
        let history: Vec<_> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.02;
                rec(t, 2.0 + (8.0 * t).sin())
            })
            .collect();
        let r = classify(&history, &cfg).unwrap();
        assert_eq!(r.classification, Classification::ConditionallyRegular);
        assert!(r.estimated_tstar.is_none());
    }

    #[test]
    fn positivity_loss_is_sticky() {
        let cfg = MonitorConfig::default();
        let mut mon = Monitor::new(cfg);
        mon.update(&rec(0.0, 1.0)).unwrap();
        let mut bad = rec(0.01, 1.0);
        bad.min_theta = -0.1;
        let r = mon.update(&bad).unwrap();
        assert_eq!(r.classification, Classification::PositivityLost);
        let r = mon.update(&rec(0.02, 1.0)).unwrap();
        assert_eq!(r.classification, Classification::PositivityLost);
    }

    #[test]
    fn power_law_series_is_suspected_blow_up() {
        let cfg = MonitorConfig {
            window: 40,
            growth_factor: 4.0,
            min_samples: 8,
        };
        let history: Vec<_> = (0..40)
            .map(|i| {
                let t = 0.5 + 0.4 * i as f64 / 39.0;
                rec(t, 1.0 / (1.0 - t))
            })
            .collect();
        let r = classify(&history, &cfg).unwrap();
        assert_eq!(r.classification, Classification::SuspectedBlowUp);
        let tstar = r.estimated_tstar.unwrap();
        assert!(tstar > r.horizon);
        assert!((0.95..=1.05).contains(&tstar), "tstar {tstar}");
        assert!(r.fit_quality >= 0.99);
    }

    #[test]
    fn exponential_series_is_growth_not_blow_up() {
        let cfg = MonitorConfig {
            window: 60,
            growth_factor: 4.0,
            min_samples: 8,
        };
        let history: Vec<_> = (0..60)
            .map(|i| {
                let t = i as f64 * 0.1;
                rec(t, t.exp())
            })
            .collect();
        let r = classify(&history, &cfg).unwrap();
        assert_eq!(r.classification, Classification::GrowthDetected);
        assert!(r.estimated_tstar.is_none());
    }

    #[test]
    fn doubling_stream_flags_growth() {
        let cfg = MonitorConfig::default();
        let mut mon = Monitor::new(cfg);
        let mut last = Classification::ConditionallyRegular;
        for i in 0..40 {
            let t = i as f64 * 0.01;
            last = mon.update(&rec(t, 2f64.powi(i))).unwrap().classification;
        }
        assert_ne!(last, Classification::ConditionallyRegular);
    }

    #[test]
    fn scale_equivariance() {
        let cfg = MonitorConfig {
            window: 40,
            growth_factor: 4.0,
            min_samples: 8,
        };
        let base: Vec<_> = (0..40)
            .map(|i| {
                let t = 0.5 + 0.4 * i as f64 / 39.0;
                rec(t, 1.0 / (1.0 - t))
            })
            .collect();
        let scaled: Vec<_> = base
            .iter()
            .map(|r| {
                let mut s = *r;
                s.sup_speed *= 1000.0;
                s
            })
            .collect();
        let r1 = classify(&base, &cfg).unwrap();
        let r2 = classify(&scaled, &cfg).unwrap();
        assert_eq!(r1.classification, r2.classification);
        let (t1, t2) = (r1.estimated_tstar.unwrap(), r2.estimated_tstar.unwrap());
        assert!((t1 - t2).abs() < 1e-6);
    }

    #[test]
    fn tstar_accuracy_across_exponents() {
        let cfg = MonitorConfig {
            window: 40,
            growth_factor: 1.5,
            min_samples: 8,
        };
        for gamma in [0.5, 1.0, 2.0] {
            // gap ratio 8: gaps from 0.4 down to 0.05 before T* = 1
            let history: Vec<_> = (0..40)
                .map(|i| {
                    let t = 0.6 + 0.35 * i as f64 / 39.0;
                    rec(t, (1.0 - t).powf(-gamma))
                })
                .collect();
            let r = classify(&history, &cfg).unwrap();
            assert_eq!(
                r.classification,
                Classification::SuspectedBlowUp,
                "gamma {gamma}"
            );
            let tstar = r.estimated_tstar.unwrap();
            assert!(
                (tstar - 1.0).abs() / 1.0 <= 0.05,
                "gamma {gamma}, tstar {tstar}"
            );
        }
    }

    #[test]
    fn nonmonotone_time_is_rejected() {
        let mut mon = Monitor::new(MonitorConfig::default());
        mon.update(&rec(0.1, 1.0)).unwrap();
        assert!(matches!(
            mon.update(&rec(0.1, 1.0)),
            Err(MonitorError::NonMonotoneTime { .. })
        ));
    }

    #[test]
    fn too_few_samples_error() {
        let cfg = MonitorConfig::default();
        let history: Vec<_> = (0..3).map(|i| rec(i as f64, 1.0)).collect();
        assert!(matches!(
            classify(&history, &cfg),
            Err(MonitorError::TooFewSamples { .. })
        ));
    }

    #[test]
    fn report_display_is_structured() {
        let cfg = MonitorConfig::default();
        let history: Vec<_> = (0..10).map(|i| rec(i as f64 * 0.1, 1.0)).collect();
        let r = classify(&history, &cfg).unwrap();
        let text = format!("{r}");
        assert!(text.contains("classification  = conditionally-regular"));
        assert!(text.contains("estimated T*    = none"));
    }
}
