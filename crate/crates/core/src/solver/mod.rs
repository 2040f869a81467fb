//! Primal-dual interior-point solver for smooth nonlinear programs
//!
//! ```text
//! min f(x)  s.t.  g(x) = 0,  h(x) <= 0,  lower <= x <= upper
//! ```
//!
//! Inequalities get slack variables; each iteration takes a Newton step on
//! the perturbed KKT system, factored as a symmetric indefinite matrix with
//! diagonal regularization until its inertia is correct. Variables with
//! equal bounds are turned into equality rows.

mod ipm;
pub mod ldl;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use ipm::solve;

/// Problem interface the solver works against. Jacobians and Hessians are
/// dense; callers receive zeroed matrices and add their entries.
pub trait Nlp {
    fn num_vars(&self) -> usize;
    fn num_eq(&self) -> usize;
    fn num_ineq(&self) -> usize;

    /// Lower bounds, `-inf` where unbounded.
    fn lower_bounds(&self) -> Vec<f64>;
    /// Upper bounds, `+inf` where unbounded.
    fn upper_bounds(&self) -> Vec<f64>;

    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);

    fn eq_values(&self, x: &[f64], out: &mut [f64]);
    /// `num_eq x num_vars`.
    fn eq_jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>);

    fn ineq_values(&self, x: &[f64], out: &mut [f64]);
    /// `num_ineq x num_vars`.
    fn ineq_jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>);

    /// Adds the Hessian of `obj_factor * f + eq_mult . g + ineq_mult . h` to
    /// `hess` (both triangles). Returns `false` when second derivatives are
    /// not available, in which case the solver falls back to a damped
    /// quasi-Newton approximation.
    fn lagrangian_hessian(
        &self,
        _x: &[f64],
        _obj_factor: f64,
        _eq_mult: &[f64],
        _ineq_mult: &[f64],
        _hess: &mut DMatrix<f64>,
    ) -> bool {
        false
    }

    fn eq_name(&self, k: usize) -> String {
        format!("equality row {k}")
    }

    fn ineq_name(&self, k: usize) -> String {
        format!("inequality row {k}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Maximum constraint violation.
    pub feas_tol: f64,
    /// Maximum infinity norm of the Lagrangian gradient (scaled objective).
    pub opt_tol: f64,
    /// Maximum slack-multiplier product.
    pub comp_tol: f64,
    pub max_iter: usize,
    /// Centering factor applied to the average complementarity.
    pub barrier_reduction: f64,
    /// Fraction-to-boundary factor.
    pub step_shrink: f64,
    /// Pivots at or below this magnitude count as zero eigenvalues.
    pub regularization: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-6,
            opt_tol: 1e-6,
            comp_tol: 1e-6,
            max_iter: 150,
            barrier_reduction: 0.1,
            step_shrink: 0.995,
            regularization: 1e-10,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.feas_tol > 0.0 && self.opt_tol > 0.0 && self.comp_tol > 0.0) {
            return Err("tolerances must be positive".into());
        }
        if !(self.barrier_reduction > 0.0 && self.barrier_reduction < 1.0) {
            return Err("barrier_reduction must lie in (0, 1)".into());
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err("step_shrink must lie in (0, 1)".into());
        }
        if !(self.regularization > 0.0) {
            return Err("regularization must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    NumericalFailure,
}

/// Multipliers of the Lagrangian
/// `objective_scale * f + eq . g + ineq . h - lower . x + upper . x`.
/// Bound multipliers are zero where the bound is infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub objective_scale: f64,
    pub eq: Vec<f64>,
    pub ineq: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    /// Largest violation of any constraint or bound.
    pub primal: f64,
    /// Infinity norm of the Lagrangian gradient.
    pub stationarity: f64,
    /// Largest slack times multiplier.
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn within(&self, opts: &SolverOptions) -> bool {
        self.primal <= opts.feas_tol && self.stationarity <= opts.opt_tol && self.complementarity <= opts.comp_tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub residuals: KktResiduals,
    /// Barrier target used for the step taken from this iterate.
    pub barrier: f64,
    pub alpha_primal: f64,
    pub alpha_dual: f64,
    /// Smallest slack after the step.
    pub min_slack: f64,
    /// Hessian shift used to correct the KKT inertia.
    pub regularization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub x_star: Vec<f64>,
    pub objective: f64,
    pub multipliers: Multipliers,
    pub status: SolveStatus,
    pub iterations: usize,
    pub kkt_residuals: KktResiduals,
    pub message: Option<String>,
    pub history: Vec<IterationRecord>,
}

/// First-order optimality residuals of `(x, multipliers)` for `problem`.
pub fn check_kkt<P: Nlp + ?Sized>(problem: &P, x: &[f64], mult: &Multipliers) -> KktResiduals {
    let n = problem.num_vars();
    let (m, p) = (problem.num_eq(), problem.num_ineq());
    assert_eq!(x.len(), n);
    assert_eq!(mult.eq.len(), m);
    assert_eq!(mult.ineq.len(), p);
    let lo = problem.lower_bounds();
    let hi = problem.upper_bounds();

    let mut g = vec![0.0; m];
    let mut h = vec![0.0; p];
    problem.eq_values(x, &mut g);
    problem.ineq_values(x, &mut h);

    let mut primal = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    primal = h.iter().fold(primal, |a, &v| a.max(v));
    for k in 0..n {
        primal = primal.max(lo[k] - x[k]).max(x[k] - hi[k]);
    }

    let mut grad = vec![0.0; n];
    problem.gradient(x, &mut grad);
    let mut jg = DMatrix::zeros(m, n);
    let mut jh = DMatrix::zeros(p, n);
    problem.eq_jacobian(x, &mut jg);
    problem.ineq_jacobian(x, &mut jh);
    let mut lx: Vec<f64> = grad.iter().map(|v| mult.objective_scale * v).collect();
    for (r, &l) in mult.eq.iter().enumerate() {
        if l != 0.0 {
            for k in 0..n {
                lx[k] += l * jg[(r, k)];
            }
        }
    }
    for (r, &u) in mult.ineq.iter().enumerate() {
        if u != 0.0 {
            for k in 0..n {
                lx[k] += u * jh[(r, k)];
            }
        }
    }
    for k in 0..n {
        lx[k] += mult.upper[k] - mult.lower[k];
    }
    let stationarity = lx.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let mut complementarity = h.iter().zip(&mult.ineq).fold(0.0f64, |a, (hv, u)| a.max((hv * u).abs()));
    for k in 0..n {
        if lo[k].is_finite() && lo[k] != hi[k] {
            complementarity = complementarity.max(((x[k] - lo[k]) * mult.lower[k]).abs());
        }
        if hi[k].is_finite() && lo[k] != hi[k] {
            complementarity = complementarity.max(((hi[k] - x[k]) * mult.upper[k]).abs());
        }
    }
    KktResiduals { primal, stationarity, complementarity }
}
