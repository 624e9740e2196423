//! Finite-difference simulation of a susceptible-infected system in which
//! susceptibles diffuse and drift away from infected (repellent taxis),
//! while infected diffuse with a coefficient proportional to the local
//! susceptible density (a degenerate, nondivergence-form term).
//!
//! The crate covers the discretization (`grid`, `stencil`, `kinetics`),
//! explicit time stepping with regularization continuation
//! (`timestepper`), numerical monitors for the known a priori bounds
//! (`diagnostics`), and configuration/output plumbing for the `simulate`
//! CLI (`config`, `output`, `modes`).

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod kinetics;
pub mod modes;
pub mod output;
pub mod par;
pub mod stencil;
pub mod timestepper;

pub use error::Error;
pub use grid::{build_grid, synthesize_initials, Field, Grid, InitialConditionSpec};
pub use kinetics::{ChiModel, ModelParams};
pub use timestepper::{run, stable_dt, step, SimState, StepControl};
