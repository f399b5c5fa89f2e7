//! Simulation and analysis toolkit for the hdDEB qudit key distribution
//! protocol and its homogeneous Bell inequalities (hCHSH-d).
//!
//! - [`qudit`]: dense complex algebra, Fourier matrices, bipartite states.
//! - [`ditter`]: ditter observables and single-ditter product measurements.
//! - [`bell`]: Bell operators, violation factors, local bounds, basis search.
//! - [`protocol`]: seeded Monte-Carlo runs, sifting and violation estimates.
//! - [`security`]: noise thresholds and cloning-attack criteria.
//! - [`cli`]: the `hddeb` command-line front end.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example optimal_violations`
//! reproduces the reference violation table.

pub mod bell;
pub mod cli;
pub mod ditter;
pub mod error;
pub mod protocol;
pub mod qudit;
pub mod security;

pub use error::{Error, Result};
pub use num_complex::Complex64;
