use nalgebra::DMatrix;

use super::flows::{end_flow, eval_power_balance};
use super::{ShedSolution, VariableLayout};
use crate::case::{build_ybus, to_pu, AdmittanceMatrix, BranchAdmittance, NetworkCase};
use crate::equity::{build_equity_linearization, equity_report, EquityLinearization, EquityVar, LinearRow};
use crate::error::{Error, Result};
use crate::solver::{Nlp, SolveOutcome, SolveStatus};

/// Shed below this many pu is reported as exactly zero.
const SHED_ZERO_PU: f64 = 1e-8;

/// A rated branch with its limit in pu.
#[derive(Debug, Clone)]
struct RatedBranch {
    index: usize,
    adm: BranchAdmittance,
    rate_pu: f64,
}

/// Assembled shedding NLP. Immutable once built.
#[derive(Debug, Clone)]
pub struct SheddingProblem {
    pub layout: VariableLayout,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub case: NetworkCase,
    /// Equity limit; `None` omits the equity rows.
    pub beta: Option<f64>,
    /// Curtailment penalty, $/MWh.
    pub shed_penalty: f64,
    pub ybus: AdmittanceMatrix,
    /// Case indices of the in-service generators, in variable order.
    pub gens: Vec<usize>,
    /// Bus ordinals of the load buses, in variable order.
    pub loads: Vec<usize>,
    pub equity: Option<EquityLinearization>,
    gen_bus: Vec<usize>,
    load_p: Vec<f64>,
    load_q: Vec<f64>,
    rated: Vec<RatedBranch>,
}

/// Builds the shedding problem for `case` with equity limit `beta`
/// (`None` for no limit) and curtailment penalty `shed_penalty` in $/MWh.
pub fn assemble(case: &NetworkCase, beta: Option<f64>, shed_penalty: f64) -> Result<SheddingProblem> {
    case.validate()?;
    if !(shed_penalty > 0.0 && shed_penalty.is_finite()) {
        return Err(Error::Assembly(format!("shed penalty must be positive, got {shed_penalty}")));
    }
    if let Some(b) = beta {
        if !(b >= 0.0) {
            return Err(Error::Domain(format!("equity limit must be nonnegative, got {b}")));
        }
    }
    if !case.is_connected() {
        return Err(Error::Topology("network is not connected through in-service branches".into()));
    }
    let gens: Vec<usize> = (0..case.generators.len()).filter(|&k| case.generators[k].in_service).collect();
    if gens.is_empty() {
        return Err(Error::Assembly("no in-service generators".into()));
    }
    let map = case.bus_map();
    let base = case.base_mva;
    let gen_bus: Vec<usize> =
        gens.iter().map(|&k| map.ordinal(case.generators[k].at_bus).expect("validated")).collect();
    let loads = case.load_buses();
    let load_p: Vec<f64> = loads.iter().map(|&k| to_pu(case.buses[k].p_demand, base)).collect();
    let load_q: Vec<f64> = loads.iter().map(|&k| to_pu(case.buses[k].q_demand, base)).collect();

    let equity = match beta {
        Some(b) if loads.len() >= 2 => Some(build_equity_linearization(&load_p, b)?),
        _ => None,
    };
    let n_pairs = equity.as_ref().map_or(0, |e| e.aux_count);
    let layout = VariableLayout { n_bus: case.buses.len(), n_gen: gens.len(), n_load: loads.len(), n_pairs };

    let mut lower = vec![f64::NEG_INFINITY; layout.len()];
    let mut upper = vec![f64::INFINITY; layout.len()];
    let reference = case.reference_ordinal().expect("validated");
    lower[layout.theta(reference)] = 0.0;
    upper[layout.theta(reference)] = 0.0;
    for (k, bus) in case.buses.iter().enumerate() {
        lower[layout.v(k)] = bus.v_min;
        upper[layout.v(k)] = bus.v_max;
    }
    for (g, &k) in gens.iter().enumerate() {
        let gen = &case.generators[k];
        lower[layout.p_gen(g)] = to_pu(gen.p_min, base);
        upper[layout.p_gen(g)] = to_pu(gen.p_max, base);
        lower[layout.q_gen(g)] = to_pu(gen.q_min, base);
        upper[layout.q_gen(g)] = to_pu(gen.q_max, base);
    }
    for (l, &d) in load_p.iter().enumerate() {
        lower[layout.shed(l)] = 0.0;
        upper[layout.shed(l)] = d;
    }
    for p in 0..n_pairs {
        for idx in [layout.z_plus(p), layout.z_minus(p)] {
            lower[idx] = 0.0;
            upper[idx] = 1.0;
        }
    }

    let rated = case
        .branches
        .iter()
        .enumerate()
        .filter(|(_, b)| b.in_service && b.rate > 0.0)
        .map(|(index, b)| RatedBranch {
            index,
            adm: BranchAdmittance::new(
                b,
                map.ordinal(b.from_bus).expect("validated"),
                map.ordinal(b.to_bus).expect("validated"),
            ),
            rate_pu: to_pu(b.rate, base),
        })
        .collect();

    Ok(SheddingProblem {
        layout,
        lower,
        upper,
        ybus: build_ybus(case),
        case: case.clone(),
        beta,
        shed_penalty,
        gens,
        loads,
        equity,
        gen_bus,
        load_p,
        load_q,
        rated,
    })
}

impl SheddingProblem {
    fn n_bus(&self) -> usize {
        self.layout.n_bus
    }

    fn n_balance(&self) -> usize {
        2 * self.n_bus()
    }

    /// Variable index of an equity-block variable.
    fn equity_index(&self, var: EquityVar) -> usize {
        match var {
            EquityVar::Shed(k) => self.layout.shed(k),
            EquityVar::ZPlus(p) => self.layout.z_plus(p),
            EquityVar::ZMinus(p) => self.layout.z_minus(p),
        }
    }

    fn eval_row(&self, row: &LinearRow, x: &[f64]) -> f64 {
        row.terms.iter().map(|&(v, c)| c * x[self.equity_index(v)]).sum()
    }

    /// Reactive shed per unit real shed at load slot `l`.
    fn q_ratio(&self, l: usize) -> f64 {
        self.load_q[l] / self.load_p[l]
    }

    /// Net nodal injections (pu) implied by `x`.
    pub fn injections(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_bus();
        let base = self.case.base_mva;
        let mut p: Vec<f64> = self.case.buses.iter().map(|b| -to_pu(b.p_demand, base)).collect();
        let mut q: Vec<f64> = self.case.buses.iter().map(|b| -to_pu(b.q_demand, base)).collect();
        for (g, &bus) in self.gen_bus.iter().enumerate() {
            p[bus] += x[self.layout.p_gen(g)];
            q[bus] += x[self.layout.q_gen(g)];
        }
        for (l, &bus) in self.loads.iter().enumerate() {
            let s = x[self.layout.shed(l)];
            p[bus] += s;
            q[bus] += s * self.q_ratio(l);
        }
        debug_assert_eq!(p.len(), n);
        (p, q)
    }

    /// Real and reactive power-balance residuals at `x`, pu.
    pub fn power_balance(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_bus();
        let (p, q) = self.injections(x);
        eval_power_balance(&x[..n], &x[n..2 * n], &p, &q, &self.ybus)
    }

    /// Generation cost in $/h at `x`.
    pub fn generation_cost(&self, x: &[f64]) -> f64 {
        let base = self.case.base_mva;
        self.gens.iter().enumerate().map(|(g, &k)| self.case.generators[k].cost(x[self.layout.p_gen(g)] * base)).sum()
    }

    /// Curtailment penalty in $/h at `x` (one-hour horizon).
    pub fn shed_cost(&self, x: &[f64]) -> f64 {
        let base = self.case.base_mva;
        (0..self.layout.n_load).map(|l| x[self.layout.shed(l)] * base).sum::<f64>() * self.shed_penalty
    }

    /// Objective value, gradient and Hessian at `x`.
    pub fn eval_objective(&self, x: &[f64]) -> (f64, Vec<f64>, DMatrix<f64>) {
        let n = self.layout.len();
        let mut grad = vec![0.0; n];
        self.gradient(x, &mut grad);
        let mut hess = DMatrix::zeros(n, n);
        self.add_objective_hessian(1.0, &mut hess);
        (self.objective(x), grad, hess)
    }

    fn add_objective_hessian(&self, factor: f64, hess: &mut DMatrix<f64>) {
        let base = self.case.base_mva;
        for (g, &k) in self.gens.iter().enumerate() {
            let i = self.layout.p_gen(g);
            hess[(i, i)] += factor * base * base * self.case.generators[k].cost_curvature();
        }
    }

    /// Deterministic start: flat voltages, mid-range generator output, and
    /// shed spread in proportion to demand over the capacity deficit.
    pub fn initial_point(&self) -> Vec<f64> {
        let l = &self.layout;
        let mut x = vec![0.0; l.len()];
        for (k, bus) in self.case.buses.iter().enumerate() {
            x[l.v(k)] = 1.0f64.clamp(bus.v_min, bus.v_max);
        }
        for g in 0..l.n_gen {
            for idx in [l.p_gen(g), l.q_gen(g)] {
                x[idx] = 0.5 * (self.lower[idx] + self.upper[idx]);
            }
        }
        let demand = self.case.total_p_demand();
        let deficit = (demand - self.case.online_capacity()).max(0.0);
        let fraction = if demand > 0.0 { (deficit / demand).min(1.0) } else { 0.0 };
        for (k, &d) in self.load_p.iter().enumerate() {
            x[l.shed(k)] = fraction * d;
        }
        if let Some(eq) = &self.equity {
            let shed: Vec<f64> = (0..l.n_load).map(|k| x[l.shed(k)]).collect();
            let (zp, zm) = eq.minimal_aux(&shed, &self.load_p);
            for p in 0..l.n_pairs {
                x[l.z_plus(p)] = zp[p];
                x[l.z_minus(p)] = zm[p];
            }
        }
        x
    }

    /// Column indices that may be nonzero in each equality-Jacobian row.
    pub fn eq_jacobian_pattern(&self) -> Vec<Vec<usize>> {
        let n = self.n_bus();
        let l = &self.layout;
        let mut rows = Vec::with_capacity(self.num_eq());
        for _part in 0..2 {
            for i in 0..n {
                let mut cols = Vec::new();
                for j in 0..n {
                    if i == j || self.ybus.g[(i, j)] != 0.0 || self.ybus.b[(i, j)] != 0.0 {
                        cols.push(l.theta(j));
                        cols.push(l.v(j));
                    }
                }
                cols.extend(
                    self.gen_bus
                        .iter()
                        .enumerate()
                        .filter(|(_, &b)| b == i)
                        .flat_map(|(g, _)| [l.p_gen(g), l.q_gen(g)]),
                );
                cols.extend(self.loads.iter().enumerate().filter(|(_, &b)| b == i).map(|(k, _)| l.shed(k)));
                cols.sort_unstable();
                rows.push(cols);
            }
        }
        if let Some(eq) = &self.equity {
            for row in &eq.coupling_rows {
                let mut cols: Vec<usize> = row.terms.iter().map(|&(v, _)| self.equity_index(v)).collect();
                cols.sort_unstable();
                rows.push(cols);
            }
        }
        rows
    }

    /// Converts a solver outcome into engineering units.
    pub fn solution(&self, outcome: &SolveOutcome) -> Result<ShedSolution> {
        let x = &outcome.x_star;
        let l = &self.layout;
        let base = self.case.base_mva;
        let n = self.n_bus();
        let mut p_gen = vec![0.0; self.case.generators.len()];
        let mut q_gen = vec![0.0; self.case.generators.len()];
        for (g, &k) in self.gens.iter().enumerate() {
            p_gen[k] = x[l.p_gen(g)] * base;
            q_gen[k] = x[l.q_gen(g)] * base;
        }
        // Interior-point iterates never sit exactly on a bound; shed left at
        // noise level would otherwise dominate the scale-free Gini report.
        let p_shed: Vec<f64> =
            (0..l.n_load).map(|k| x[l.shed(k)]).map(|s| if s < SHED_ZERO_PU { 0.0 } else { s * base }).collect();
        let q_shed: Vec<f64> = p_shed.iter().enumerate().map(|(k, s)| s * self.q_ratio(k)).collect();
        let clamped: Vec<f64> =
            p_shed.iter().zip(&self.loads).map(|(&s, &b)| s.clamp(0.0, self.case.buses[b].p_demand)).collect();
        let equity = equity_report(&clamped, &self.case)?;
        let (rp, rq) = self.power_balance(x);
        let max_residual = rp.iter().chain(&rq).fold(0.0f64, |a, r| a.max(r.abs()));
        let generation_cost = self.generation_cost(x);
        let shed_penalty_cost = p_shed.iter().sum::<f64>() * self.shed_penalty;
        Ok(ShedSolution {
            bus_ids: self.case.buses.iter().map(|b| b.id).collect(),
            v: x[n..2 * n].to_vec(),
            theta: x[..n].to_vec(),
            p_gen,
            q_gen,
            load_bus_ids: self.loads.iter().map(|&k| self.case.buses[k].id).collect(),
            p_shed,
            q_shed,
            generation_cost,
            shed_penalty_cost,
            total_cost: generation_cost + shed_penalty_cost,
            equity,
            converged: outcome.status == SolveStatus::Converged,
            status: outcome.status,
            iterations: outcome.iterations,
            max_residual,
            kkt: outcome.kkt_residuals,
        })
    }
}

impl Nlp for SheddingProblem {
    fn num_vars(&self) -> usize {
        self.layout.len()
    }

    fn num_eq(&self) -> usize {
        self.n_balance() + self.layout.n_pairs
    }

    fn num_ineq(&self) -> usize {
        2 * self.rated.len() + usize::from(self.equity.is_some())
    }

    fn lower_bounds(&self) -> Vec<f64> {
        self.lower.clone()
    }

    fn upper_bounds(&self) -> Vec<f64> {
        self.upper.clone()
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.generation_cost(x) + self.shed_cost(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let base = self.case.base_mva;
        for (g, &k) in self.gens.iter().enumerate() {
            let i = self.layout.p_gen(g);
            grad[i] = base * self.case.generators[k].marginal_cost(x[i] * base);
        }
        for l in 0..self.layout.n_load {
            grad[self.layout.shed(l)] = base * self.shed_penalty;
        }
    }

    fn eq_values(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n_bus();
        let (rp, rq) = self.power_balance(x);
        out[..n].copy_from_slice(&rp);
        out[n..2 * n].copy_from_slice(&rq);
        if let Some(eq) = &self.equity {
            for (p, row) in eq.coupling_rows.iter().enumerate() {
                out[2 * n + p] = self.eval_row(row, x);
            }
        }
    }

    fn eq_jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        let n = self.n_bus();
        let l = &self.layout;
        let (theta, v) = (&x[..n], &x[n..2 * n]);
        for i in 0..n {
            let (rp, rq) = (i, n + i);
            for j in 0..n {
                let (g, b) = (self.ybus.g[(i, j)], self.ybus.b[(i, j)]);
                if g == 0.0 && b == 0.0 {
                    continue;
                }
                if i == j {
                    jac[(rp, l.v(i))] -= 2.0 * v[i] * g;
                    jac[(rq, l.v(i))] += 2.0 * v[i] * b;
                    continue;
                }
                let (s, c) = (theta[i] - theta[j]).sin_cos();
                let a = g * c + b * s;
                let bb = g * s - b * c;
                let vv = v[i] * v[j];
                // P_ij = vv a, Q_ij = vv bb; residual = inj - sum.
                jac[(rp, l.theta(i))] += vv * bb;
                jac[(rp, l.theta(j))] -= vv * bb;
                jac[(rp, l.v(i))] -= v[j] * a;
                jac[(rp, l.v(j))] -= v[i] * a;
                jac[(rq, l.theta(i))] -= vv * a;
                jac[(rq, l.theta(j))] += vv * a;
                jac[(rq, l.v(i))] -= v[j] * bb;
                jac[(rq, l.v(j))] -= v[i] * bb;
            }
        }
        for (g, &bus) in self.gen_bus.iter().enumerate() {
            jac[(bus, l.p_gen(g))] += 1.0;
            jac[(n + bus, l.q_gen(g))] += 1.0;
        }
        for (k, &bus) in self.loads.iter().enumerate() {
            jac[(bus, l.shed(k))] += 1.0;
            jac[(n + bus, l.shed(k))] += self.q_ratio(k);
        }
        if let Some(eq) = &self.equity {
            for (p, row) in eq.coupling_rows.iter().enumerate() {
                for &(var, c) in &row.terms {
                    jac[(2 * n + p, self.equity_index(var))] += c;
                }
            }
        }
    }

    fn ineq_values(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n_bus();
        let (theta, v) = (&x[..n], &x[n..2 * n]);
        for (r, br) in self.rated.iter().enumerate() {
            let (f, t) = super::eval_branch_flow(theta, v, &br.adm);
            let lim = br.rate_pu * br.rate_pu;
            out[2 * r] = f - lim;
            out[2 * r + 1] = t - lim;
        }
        if let Some(eq) = &self.equity {
            out[2 * self.rated.len()] = self.eval_row(&eq.budget_row, x);
        }
    }

    fn ineq_jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        let l = &self.layout;
        for (r, br) in self.rated.iter().enumerate() {
            for (row, flow, (s, o)) in self.branch_ends(x, br, r) {
                let idx = [l.theta(s), l.theta(o), l.v(s), l.v(o)];
                for k in 0..4 {
                    jac[(row, idx[k])] += flow.grad[k];
                }
            }
        }
        if let Some(eq) = &self.equity {
            let row = 2 * self.rated.len();
            for &(var, c) in &eq.budget_row.terms {
                jac[(row, self.equity_index(var))] += c;
            }
        }
    }

    fn lagrangian_hessian(
        &self,
        x: &[f64],
        obj_factor: f64,
        eq_mult: &[f64],
        ineq_mult: &[f64],
        hess: &mut DMatrix<f64>,
    ) -> bool {
        self.add_objective_hessian(obj_factor, hess);
        let n = self.n_bus();
        let l = &self.layout;
        let (theta, v) = (&x[..n], &x[n..2 * n]);
        for i in 0..n {
            let (lp, lq) = (eq_mult[i], eq_mult[n + i]);
            if lp == 0.0 && lq == 0.0 {
                continue;
            }
            for j in 0..n {
                let (g, b) = (self.ybus.g[(i, j)], self.ybus.b[(i, j)]);
                if g == 0.0 && b == 0.0 {
                    continue;
                }
                if i == j {
                    // w = V_i^2 (lp G - lq B)
                    hess[(l.v(i), l.v(i))] -= 2.0 * (lp * g - lq * b);
                    continue;
                }
                let (s, c) = (theta[i] - theta[j]).sin_cos();
                let a = g * c + b * s;
                let bb = g * s - b * c;
                let big_a = lp * a + lq * bb;
                let a_theta = -lp * bb + lq * a;
                let vv = v[i] * v[j];
                let (ti, tj, vi, vj) = (l.theta(i), l.theta(j), l.v(i), l.v(j));
                // Hessian of w = V_i V_j A(theta_i - theta_j), subtracted.
                let w_tt = -vv * big_a;
                let w_tvi = v[j] * a_theta;
                let w_tvj = v[i] * a_theta;
                let entries = [
                    (ti, ti, w_tt),
                    (tj, tj, w_tt),
                    (ti, tj, -w_tt),
                    (tj, ti, -w_tt),
                    (ti, vi, w_tvi),
                    (vi, ti, w_tvi),
                    (tj, vi, -w_tvi),
                    (vi, tj, -w_tvi),
                    (ti, vj, w_tvj),
                    (vj, ti, w_tvj),
                    (tj, vj, -w_tvj),
                    (vj, tj, -w_tvj),
                    (vi, vj, big_a),
                    (vj, vi, big_a),
                ];
                for (r, c, val) in entries {
                    hess[(r, c)] -= val;
                }
            }
        }
        for (r, br) in self.rated.iter().enumerate() {
            for (row, flow, (s, o)) in self.branch_ends(x, br, r) {
                let m = ineq_mult[row];
                if m == 0.0 {
                    continue;
                }
                let idx = [l.theta(s), l.theta(o), l.v(s), l.v(o)];
                for a in 0..4 {
                    for b in 0..4 {
                        hess[(idx[a], idx[b])] += m * flow.hess[a][b];
                    }
                }
            }
        }
        true
    }

    fn eq_name(&self, k: usize) -> String {
        let n = self.n_bus();
        if k < n {
            format!("real power balance at bus {}", self.case.buses[k].id)
        } else if k < 2 * n {
            format!("reactive power balance at bus {}", self.case.buses[k - n].id)
        } else {
            let (i, j) = self.equity.as_ref().expect("equity rows").pair_index[k - 2 * n];
            format!(
                "equity coupling of buses {} and {}",
                self.case.buses[self.loads[i]].id, self.case.buses[self.loads[j]].id
            )
        }
    }

    fn ineq_name(&self, k: usize) -> String {
        if k < 2 * self.rated.len() {
            let br = &self.rated[k / 2];
            let end = if k.is_multiple_of(2) { "from" } else { "to" };
            format!("flow limit at {end} end of branch {}", br.index)
        } else {
            "equity budget".into()
        }
    }
}

impl SheddingProblem {
    /// Both ends of a rated branch: (inequality row, flow, (self bus, other bus)).
    fn branch_ends(
        &self,
        x: &[f64],
        br: &RatedBranch,
        r: usize,
    ) -> [(usize, super::flows::EndFlow, (usize, usize)); 2] {
        let n = self.n_bus();
        let (theta, v) = (&x[..n], &x[n..2 * n]);
        let (f, t) = (br.adm.from, br.adm.to);
        [
            (2 * r, end_flow(theta[f], theta[t], v[f], v[t], br.adm.yff, br.adm.yft), (f, t)),
            (2 * r + 1, end_flow(theta[t], theta[f], v[t], v[f], br.adm.ytt, br.adm.ytf), (t, f)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::parse_matpower_case;

    fn case14() -> NetworkCase {
        parse_matpower_case(crate::CASE14_M).unwrap()
    }

    #[test]
    fn variable_count_after_trip() {
        let mut case = case14();
        case.generators[0].in_service = false;
        let p = assemble(&case, Some(1.0), 500_000.0).unwrap();
        assert_eq!(p.layout.len(), 157);
        assert_eq!(p.num_eq(), 28 + 55);
        assert_eq!(p.num_ineq(), 1);
    }

    #[test]
    fn no_equity_sentinel_drops_rows() {
        let p = assemble(&case14(), None, 500_000.0).unwrap();
        assert_eq!(p.layout.n_pairs, 0);
        assert_eq!(p.num_eq(), 28);
        assert_eq!(p.num_ineq(), 0);
    }

    #[test]
    fn shed_bounds_follow_demand() {
        let mut case = case14();
        for b in &mut case.buses {
            b.p_demand *= 2.0;
        }
        let p = assemble(&case, Some(0.5), 500_000.0).unwrap();
        let bus3 = p.loads.iter().position(|&k| case.buses[k].id == 3).unwrap();
        assert!((p.upper[p.layout.shed(bus3)] * 100.0 - 188.4).abs() < 1e-9);
        assert_eq!(p.lower[p.layout.shed(bus3)], 0.0);
        let r = p.layout.theta(0);
        assert_eq!((p.lower[r], p.upper[r]), (0.0, 0.0));
    }

    #[test]
    fn zero_shed_budget_row_is_zero() {
        let p = assemble(&case14(), Some(0.3), 500_000.0).unwrap();
        let mut x = p.initial_point();
        for k in 0..p.layout.n_load {
            x[p.layout.shed(k)] = 0.0;
        }
        let mut h = vec![0.0; p.num_ineq()];
        p.ineq_values(&x, &mut h);
        assert_eq!(h[0], 0.0);
    }

    #[test]
    fn objective_constant_and_penalty_terms() {
        let mut case = case14();
        for g in &mut case.generators {
            g.cost_coeffs[0] = 7.0;
        }
        let p = assemble(&case, None, 500_000.0).unwrap();
        let mut x = vec![0.0; p.layout.len()];
        assert!((p.objective(&x) - 35.0).abs() < 1e-9);
        x[p.layout.shed(0)] = 0.004;
        x[p.layout.shed(3)] = 0.006;
        assert!((p.objective(&x) - (35.0 + 500_000.0)).abs() < 1e-6);
    }

    #[test]
    fn assembly_errors() {
        let mut case = case14();
        for g in &mut case.generators {
            g.in_service = false;
        }
        assert!(matches!(assemble(&case, None, 1.0), Err(Error::Assembly(_))));

        let mut case = case14();
        for br in
            case.branches.iter_mut().filter(|b| b.from_bus == 9 || b.to_bus == 9 || b.to_bus == 14 || b.from_bus == 14)
        {
            if br.to_bus == 14 {
                br.in_service = false;
            }
        }
        assert!(matches!(assemble(&case, None, 1.0), Err(Error::Topology(_))));
        assert!(matches!(assemble(&case14(), Some(-0.1), 1.0), Err(Error::Domain(_))));
        assert!(matches!(assemble(&case14(), None, 0.0), Err(Error::Assembly(_))));
    }
}
