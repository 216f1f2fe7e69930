//! Comma-separated diagnostics time series: one header row naming every
//! record field, one row per sample, values printed with 17 significant
//! digits so a parse-back reproduces every f64 exactly.

use crate::diagnostics::DiagnosticsRecord;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimeseriesError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: expected {expected} columns, got {got}")]
    ColumnCount {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("line {line}: unparsable value {value:?}")]
    BadValue { line: usize, value: String },
    #[error("header does not match the documented column order")]
    BadHeader,
}

fn format_value(v: f64) -> String {
    // 17 significant digits: exact f64 round trip
    format!("{v:.16e}")
}

pub fn write_timeseries(
    records: &[DiagnosticsRecord],
    path: &Path,
) -> Result<(), TimeseriesError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", DiagnosticsRecord::FIELD_NAMES.join(","))?;
    for rec in records {
        let row: Vec<String> = rec.to_row().iter().map(|&v| format_value(v)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_timeseries(path: &Path) -> Result<Vec<DiagnosticsRecord>, TimeseriesError> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines.next().ok_or(TimeseriesError::BadHeader)??;
    if header != DiagnosticsRecord::FIELD_NAMES.join(",") {
        return Err(TimeseriesError::BadHeader);
    }
    let ncols = DiagnosticsRecord::FIELD_NAMES.len();
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(ncols);
        for tok in line.split(',') {
            row.push(tok.parse::<f64>().map_err(|_| TimeseriesError::BadValue {
                line: i + 2,
                value: tok.to_string(),
            })?);
        }
        if row.len() != ncols {
            return Err(TimeseriesError::ColumnCount {
                line: i + 2,
                expected: ncols,
                got: row.len(),
            });
        }
        records.push(DiagnosticsRecord::from_row(&row).expect("length checked"));
    }
    Ok(records)
}

/// Emits one two-column `time value` text file per channel, ready for any
/// plotting tool. Returns the written paths.
pub fn write_plot_data(
    records: &[DiagnosticsRecord],
    dir: &Path,
) -> Result<Vec<std::path::PathBuf>, TimeseriesError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (col, name) in DiagnosticsRecord::FIELD_NAMES.iter().enumerate().skip(1) {
        let path = dir.join(format!("{name}.dat"));
        let mut w = BufWriter::new(File::create(&path)?);
        for rec in records {
            let row = rec.to_row();
            writeln!(w, "{} {}", format_value(row[0]), format_value(row[col]))?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(time: f64, seed: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            time,
            sup_rho: 1.0 + seed,
            sup_theta: 2.0 * seed,
            sup_speed: seed * seed,
            min_rho: 0.5,
            min_theta: 0.25,
            mass: 1.0 / 3.0 + seed,
            ballistic_energy: -seed,
            dissipation: seed.abs(),
            budget_terms: [seed, -seed, 2.0 * seed, 0.0, 1e-300],
            budget_residual: 1e-17 * seed,
            grad_u_l2: seed.abs().sqrt(),
            grad_u_l4: seed,
            grad_theta_l2: seed,
            rho_dt_u_l2: seed,
            rho_dt_theta_l2: seed,
            decomposition_mismatch: seed,
            gn_margin: -1e-12,
        }
    }

    #[test]
    fn empty_stream_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_timeseries(&[], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("time,sup_rho,"));
        assert!(read_timeseries(&path).unwrap().is_empty());
    }

    #[test]
    fn three_records_give_four_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("three.csv");
        let recs = [rec(0.0, 0.1), rec(0.1, 0.2), rec(0.2, 0.3)];
        write_timeseries(&recs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn parse_back_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exact.csv");
        let recs: Vec<_> = (0..10)
            .map(|i| rec(i as f64 * 0.017, (i as f64 + 0.3).ln()))
            .collect();
        write_timeseries(&recs, &path).unwrap();
        let back = read_timeseries(&path).unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in back.iter().zip(&recs) {
            assert_eq!(a.mass.to_bits(), b.mass.to_bits());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn plot_data_emits_one_file_per_channel() {
        let dir = tempfile::tempdir().unwrap();
        let recs = [rec(0.0, 0.1), rec(0.1, 0.2)];
        let paths = write_plot_data(&recs, dir.path()).unwrap();
        assert_eq!(paths.len(), DiagnosticsRecord::FIELD_NAMES.len() - 1);
        let mass = std::fs::read_to_string(dir.path().join("mass.dat")).unwrap();
        assert_eq!(mass.lines().count(), 2);
        for line in mass.lines() {
            assert_eq!(line.split(' ').count(), 2);
        }
    }
}
