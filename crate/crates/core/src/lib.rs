//! Compressible Navier-Stokes-Fourier simulator on a box domain with
//! inhomogeneous Dirichlet data, estimate-chain diagnostics, and a blow-up
//! monitor.

pub mod config;
pub mod constitutive;
pub mod diagnostics;
pub mod elliptic;
pub mod field;
pub mod grid;
pub mod integrator;
pub mod monitor;
pub mod ops;
pub mod runner;
pub mod snapshot;
pub mod timeseries;

pub use constitutive::PhysParams;
pub use field::{ScalarField, TensorField, VectorField};
pub use grid::Grid;
