//! The equity-constrained load-shedding NLP.
//!
//! Variables (all power quantities in pu on the case base):
//! bus angles and magnitudes, active and reactive output of each in-service
//! generator, real shed per load bus, and the `z+`/`z-` disparity pairs of
//! the equity block. Reactive shed follows real shed at the bus's demand
//! power factor.
//!
//! Equalities: real and reactive balance per bus, then one coupling row per
//! load-bus pair. Inequalities: `|S|^2 - rate^2 <= 0` at both ends of each
//! rated branch, then the equity budget row.

mod flows;
mod layout;
mod problem;

use serde::{Deserialize, Serialize};

use crate::equity::EquityReport;
use crate::solver::{KktResiduals, SolveStatus};

pub use flows::{eval_branch_flow, eval_power_balance};
pub use layout::VariableLayout;
pub use problem::{assemble, SheddingProblem};

/// Default curtailment penalty, $/MWh.
pub const DEFAULT_SHED_PENALTY: f64 = 500_000.0;

/// Optimal plan in engineering units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShedSolution {
    pub bus_ids: Vec<u32>,
    /// Voltage magnitude per bus, pu.
    pub v: Vec<f64>,
    /// Voltage angle per bus, radians.
    pub theta: Vec<f64>,
    /// Active output per case generator, MW (zero when out of service).
    pub p_gen: Vec<f64>,
    /// Reactive output per case generator, MVAr.
    pub q_gen: Vec<f64>,
    pub load_bus_ids: Vec<u32>,
    /// Real curtailment per load bus, MW.
    pub p_shed: Vec<f64>,
    /// Reactive curtailment per load bus, MVAr.
    pub q_shed: Vec<f64>,
    pub generation_cost: f64,
    pub shed_penalty_cost: f64,
    pub total_cost: f64,
    pub equity: EquityReport,
    pub converged: bool,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Largest power-balance mismatch, pu.
    pub max_residual: f64,
    pub kkt: KktResiduals,
}

impl ShedSolution {
    /// Total real curtailment, MW.
    pub fn total_shed(&self) -> f64 {
        self.p_shed.iter().sum()
    }
}
