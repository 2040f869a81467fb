//! Equity-aware load shedding for AC power networks.
//!
//! The crate assembles an AC optimal power flow in which every load bus may
//! curtail demand at a penalty price, adds a grid-Gini equity limit on how
//! unevenly curtailment is spread across buses, and solves the resulting
//! nonlinear program with a dense primal-dual interior-point method.
//!
//! Layout:
//! - [`case`]: network data model, Matpower and JSON readers, admittance matrix
//! - [`equity`]: outage risk index, grid Gini coefficient, linearized limit rows
//! - [`opf`]: the shedding NLP (variables, bounds, objective, constraints, derivatives)
//! - [`solver`]: interior-point NLP solver and KKT diagnostics
//! - [`scenario`]: load scaling, generator trips, single solves and equity-limit sweeps
//!
//! With the default `parallel` feature, sweeps evaluate rows on the rayon
//! thread pool; without it every sweep runs sequentially.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod case;
pub mod equity;
pub mod error;
pub mod opf;
mod parallel;
pub mod scenario;
pub mod solver;

pub use case::{AdmittanceMatrix, Branch, Bus, Generator, NetworkCase};
pub use solver::{SolveOutcome, SolveStatus, SolverOptions};

pub use equity::{EquityLinearization, EquityReport};
pub use error::{Error, Result};
pub use opf::{ShedSolution, SheddingProblem, VariableLayout};
pub use scenario::{ScenarioConfig, SweepResult, SweepRow};

/// Matpower text of the IEEE 14-bus test system.
pub const CASE14_M: &str = include_str!("../data/case14.m");

/// Matpower text of a 5-bus test system with branch flow limits.
pub const CASE5_M: &str = include_str!("../data/case5.m");
