//! Study scenarios: load scaling, generator trips, penalty and equity limit,
//! plus equity-limit sweeps.

use serde::{Deserialize, Serialize};

use crate::case::NetworkCase;
use crate::error::{Error, Result};
use crate::opf::{assemble, ShedSolution, DEFAULT_SHED_PENALTY};
use crate::solver::{self, SolveStatus, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Multiplier on every bus real demand.
    pub load_p_scale: f64,
    /// Multiplier on every bus reactive demand.
    pub load_q_scale: f64,
    /// Zero-based indices into the case generator list to take out of service.
    pub tripped_gens: Vec<usize>,
    /// Curtailment penalty, $/MWh.
    pub shed_penalty: f64,
    /// Equity limit; `None` solves without equity rows.
    pub beta: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            load_p_scale: 1.0,
            load_q_scale: 1.0,
            tripped_gens: Vec::new(),
            shed_penalty: DEFAULT_SHED_PENALTY,
            beta: None,
        }
    }
}

impl ScenarioConfig {
    /// The post-contingency study: real demand doubled, the first generator
    /// tripped, $500000/MWh penalty.
    pub fn doubled_load_g1_trip(beta: Option<f64>) -> Self {
        Self { load_p_scale: 2.0, tripped_gens: vec![0], beta, ..Self::default() }
    }

    pub fn validate(&self, base: &NetworkCase) -> Result<()> {
        if !(self.load_p_scale > 0.0 && self.load_q_scale > 0.0) {
            return Err(Error::Scenario("load scales must be positive".into()));
        }
        if !(self.shed_penalty > 0.0 && self.shed_penalty.is_finite()) {
            return Err(Error::Scenario("shed penalty must be positive".into()));
        }
        if let Some(&k) = self.tripped_gens.iter().find(|&&k| k >= base.generators.len()) {
            return Err(Error::Scenario(format!(
                "generator index {k} out of range (case has {})",
                base.generators.len()
            )));
        }
        if let Some(b) = self.beta {
            if !(b >= 0.0) {
                return Err(Error::Scenario(format!("equity limit must be nonnegative, got {b}")));
            }
        }
        Ok(())
    }
}

/// Returns a copy of `base` with demands scaled and generators tripped.
pub fn apply_scenario(base: &NetworkCase, cfg: &ScenarioConfig) -> Result<NetworkCase> {
    cfg.validate(base)?;
    let mut case = base.clone();
    for bus in &mut case.buses {
        bus.p_demand *= cfg.load_p_scale;
        bus.q_demand *= cfg.load_q_scale;
    }
    for &k in &cfg.tripped_gens {
        case.generators[k].in_service = false;
    }
    if !case.generators.iter().any(|g| g.in_service) {
        return Err(Error::Scenario("scenario trips every generator".into()));
    }
    Ok(case)
}

/// Applies the scenario, assembles and solves it.
///
/// A run that stops at the iteration limit returns a solution flagged as not
/// converged; a numerical breakdown is an error.
pub fn solve_scenario(base: &NetworkCase, cfg: &ScenarioConfig, opts: &SolverOptions) -> Result<ShedSolution> {
    opts.validate().map_err(Error::Scenario)?;
    let case = apply_scenario(base, cfg)?;
    let problem = assemble(&case, cfg.beta, cfg.shed_penalty)?;
    let outcome = solver::solve(&problem, &problem.initial_point(), opts);
    if outcome.status == SolveStatus::NumericalFailure {
        return Err(Error::Numerical(format!(
            "scenario (beta = {}): {}",
            cfg.beta.map_or("none".to_string(), |b| b.to_string()),
            outcome.message.unwrap_or_default()
        )));
    }
    problem.solution(&outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub total_cost: f64,
    pub generation_cost: f64,
    pub total_shed_mw: f64,
    pub ggc: f64,
    /// ORI per load bus, aligned with [`SweepResult::load_bus_ids`].
    pub ori: Vec<f64>,
    pub converged: bool,
    pub error: Option<String>,
    pub solution: Option<ShedSolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub load_bus_ids: Vec<u32>,
    /// Sorted by increasing beta.
    pub rows: Vec<SweepRow>,
}

fn sweep_row(base: &NetworkCase, cfg: &ScenarioConfig, beta: f64, opts: &SolverOptions) -> SweepRow {
    let cfg = ScenarioConfig { beta: Some(beta), ..cfg.clone() };
    match solve_scenario(base, &cfg, opts) {
        Ok(sol) => SweepRow {
            beta,
            total_cost: sol.total_cost,
            generation_cost: sol.generation_cost,
            total_shed_mw: sol.total_shed(),
            ggc: sol.equity.ggc,
            ori: sol.equity.ori.clone(),
            converged: sol.converged,
            error: None,
            solution: Some(sol),
        },
        Err(e) => SweepRow {
            beta,
            total_cost: f64::NAN,
            generation_cost: f64::NAN,
            total_shed_mw: f64::NAN,
            ggc: f64::NAN,
            ori: Vec::new(),
            converged: false,
            error: Some(e.to_string()),
            solution: None,
        },
    }
}

fn prepare_grid(base: &NetworkCase, cfg: &ScenarioConfig, beta_grid: &[f64]) -> Result<(Vec<f64>, Vec<u32>)> {
    if beta_grid.is_empty() {
        return Err(Error::Scenario("empty equity-limit grid".into()));
    }
    if let Some(b) = beta_grid.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::Scenario(format!("equity limit must be nonnegative, got {b}")));
    }
    let case = apply_scenario(base, cfg)?;
    let ids = case.load_buses().iter().map(|&k| case.buses[k].id).collect();
    let mut grid = beta_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    Ok((grid, ids))
}

/// Solves the scenario once per equity limit in `beta_grid`, each from the
/// same deterministic start. Rows run concurrently when the `parallel`
/// feature is on; the result is ordered by beta either way. A failed row is
/// recorded and the sweep continues.
pub fn sweep_beta(
    base: &NetworkCase,
    cfg: &ScenarioConfig,
    beta_grid: &[f64],
    opts: &SolverOptions,
) -> Result<SweepResult> {
    let (grid, load_bus_ids) = prepare_grid(base, cfg, beta_grid)?;
    let rows = crate::parallel::map_ordered(&grid, |&b| sweep_row(base, cfg, b, opts));
    Ok(SweepResult { load_bus_ids, rows })
}

/// [`sweep_beta`] on the calling thread only.
pub fn sweep_beta_sequential(
    base: &NetworkCase,
    cfg: &ScenarioConfig,
    beta_grid: &[f64],
    opts: &SolverOptions,
) -> Result<SweepResult> {
    let (grid, load_bus_ids) = prepare_grid(base, cfg, beta_grid)?;
    let rows = grid.iter().map(|&b| sweep_row(base, cfg, b, opts)).collect();
    Ok(SweepResult { load_bus_ids, rows })
}

/// `start, start + step, ..., end` with endpoint tolerance for float steps.
pub fn beta_range(start: f64, step: f64, end: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(end >= start) || !start.is_finite() || !end.is_finite() {
        return Err(Error::Scenario(format!("invalid grid {start}:{step}:{end}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| {
            let v = start + k as f64 * step;
            (v * 1e12).round() / 1e12
        })
        .collect())
}
