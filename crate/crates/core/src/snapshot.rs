//! Binary snapshot files: an ASCII header describing the grid and time,
//! followed by five named blocks of little-endian binary64 values in
//! row-major order with x fastest. Round trips are bit-identical.

use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, GridError};
use crate::integrator::{DataError, FluidState};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &str = "NSF-SNAP 1";
const BLOCK_NAMES: [&str; 5] = ["rho", "theta", "ux", "uy", "uz"];

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("not a snapshot file (bad magic line {0:?})")]
    BadMagic(String),
    #[error("malformed header line {0:?}")]
    BadHeader(String),
    #[error("file truncated while reading block {0}")]
    Truncated(&'static str),
    #[error("trailing bytes after the last block")]
    TrailingData,
    #[error("invalid grid in header: {0}")]
    Grid(#[from] GridError),
    #[error("snapshot holds an invalid state: {0}")]
    State(#[from] DataError),
}

pub fn write_snapshot(state: &FluidState, path: &Path) -> Result<(), SnapshotError> {
    let grid = state.grid();
    let mut w = BufWriter::new(File::create(path)?);
    let c = grid.cells();
    let e = grid.extents();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "cells {} {} {}", c[0], c[1], c[2])?;
    writeln!(w, "extents {:.16e} {:.16e} {:.16e}", e[0], e[1], e[2])?;
    writeln!(w, "time {:.16e}", state.time)?;
    let write_block = |w: &mut BufWriter<File>, name: &str, values: &[f64]| -> io::Result<()> {
        writeln!(w, "{name}")?;
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
        writeln!(w)?;
        Ok(())
    };
    write_block(&mut w, "rho", state.rho.values())?;
    write_block(&mut w, "theta", state.theta.values())?;
    for (c, name) in ["ux", "uy", "uz"].iter().enumerate() {
        let comp: Vec<f64> = state.u.values().iter().map(|v| v[c]).collect();
        write_block(&mut w, name, &comp)?;
    }
    w.flush()?;
    Ok(())
}

fn read_line(r: &mut impl BufRead) -> Result<String, SnapshotError> {
    let mut line = String::new();
    let n = r.read_line(&mut line)?;
    if n == 0 {
        return Err(SnapshotError::BadHeader("<eof>".into()));
    }
    Ok(line.trim_end_matches('\n').to_string())
}

fn parse_triple<T: std::str::FromStr>(line: &str, key: &str) -> Result<[T; 3], SnapshotError> {
    let mut it = line.split_whitespace();
    if it.next() != Some(key) {
        return Err(SnapshotError::BadHeader(line.to_string()));
    }
    let mut out = Vec::with_capacity(3);
    for _ in 0..3 {
        let tok = it
            .next()
            .ok_or_else(|| SnapshotError::BadHeader(line.to_string()))?;
        out.push(
            tok.parse()
                .map_err(|_| SnapshotError::BadHeader(line.to_string()))?,
        );
    }
    if it.next().is_some() {
        return Err(SnapshotError::BadHeader(line.to_string()));
    }
    out.try_into()
        .map_err(|_| SnapshotError::BadHeader(line.to_string()))
}

pub fn read_snapshot(path: &Path) -> Result<FluidState, SnapshotError> {
    let mut r = BufReader::new(File::open(path)?);
    let magic = read_line(&mut r)?;
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let cells: [usize; 3] = parse_triple(&read_line(&mut r)?, "cells")?;
    let extents: [f64; 3] = parse_triple(&read_line(&mut r)?, "extents")?;
    let time_line = read_line(&mut r)?;
    let time: f64 = time_line
        .strip_prefix("time ")
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| SnapshotError::BadHeader(time_line.clone()))?;

    let grid = Grid::new(extents, cells)?;
    let n = grid.node_count();
    let mut blocks: Vec<Vec<f64>> = Vec::with_capacity(5);
    for name in BLOCK_NAMES {
        let label = read_line(&mut r)?;
        if label != name {
            return Err(SnapshotError::BadHeader(label));
        }
        let mut bytes = vec![0u8; 8 * n];
        r.read_exact(&mut bytes)
            .map_err(|_| SnapshotError::Truncated(name))?;
        blocks.push(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        );
        let sep = read_line(&mut r).map_err(|_| SnapshotError::Truncated(name))?;
        if !sep.is_empty() {
            return Err(SnapshotError::Truncated(name));
        }
    }
    let mut trailing = Vec::new();
    r.read_to_end(&mut trailing)?;
    if !trailing.is_empty() {
        return Err(SnapshotError::TrailingData);
    }

    let uz = blocks.pop().unwrap();
    let uy = blocks.pop().unwrap();
    let ux = blocks.pop().unwrap();
    let theta = blocks.pop().unwrap();
    let rho = blocks.pop().unwrap();
    let rho = ScalarField::from_values(grid, rho).expect("length checked");
    let theta = ScalarField::from_values(grid, theta).expect("length checked");
    let u = VectorField::from_components(grid, ux, uy, uz).expect("length checked");
    Ok(FluidState::new(time, rho, theta, u)?)
}
