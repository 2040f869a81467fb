use nalgebra::DMatrix;

use super::ldl::Ldlt;
use super::{check_kkt, IterationRecord, KktResiduals, Multipliers, Nlp, SolveOutcome, SolveStatus, SolverOptions};

/// Target for the largest objective gradient entry after scaling.
const MAX_SCALED_GRADIENT: f64 = 100.0;
/// Relative distance by which a start point is pushed inside its bounds.
const BOUND_PUSH: f64 = 1e-4;
const MAX_HESSIAN_SHIFT: f64 = 1e40;
const JACOBIAN_SHIFT: f64 = 1e-8;

/// Internal view: fixed variables become equality rows, finite bounds
/// become inequality rows appended after the problem's own.
struct Rows {
    n: usize,
    m_user: usize,
    p_user: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    fixed: Vec<usize>,
    lower: Vec<usize>,
    upper: Vec<usize>,
}

impl Rows {
    fn new<P: Nlp + ?Sized>(problem: &P) -> Self {
        let n = problem.num_vars();
        let lo = problem.lower_bounds();
        let hi = problem.upper_bounds();
        assert_eq!(lo.len(), n);
        assert_eq!(hi.len(), n);
        let mut fixed = Vec::new();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for k in 0..n {
            assert!(lo[k] <= hi[k], "variable {k} has inverted bounds");
            if lo[k] == hi[k] {
                fixed.push(k);
                continue;
            }
            if lo[k].is_finite() {
                lower.push(k);
            }
            if hi[k].is_finite() {
                upper.push(k);
            }
        }
        Self { n, m_user: problem.num_eq(), p_user: problem.num_ineq(), lo, hi, fixed, lower, upper }
    }

    fn meq(&self) -> usize {
        self.m_user + self.fixed.len()
    }

    fn niq(&self) -> usize {
        self.p_user + self.lower.len() + self.upper.len()
    }

    /// Projects `x0` strictly inside the bounds.
    fn interior_start(&self, x0: &[f64]) -> Vec<f64> {
        x0.iter()
            .enumerate()
            .map(|(k, &v)| {
                let (lo, hi) = (self.lo[k], self.hi[k]);
                let v = if v.is_finite() { v } else { 0.0 };
                if lo == hi {
                    return lo;
                }
                match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => {
                        let push = BOUND_PUSH * (hi - lo);
                        v.clamp(lo + push, hi - push)
                    }
                    (true, false) => v.max(lo + BOUND_PUSH * lo.abs().max(1.0)),
                    (false, true) => v.min(hi - BOUND_PUSH * hi.abs().max(1.0)),
                    (false, false) => v,
                }
            })
            .collect()
    }
}

struct Point {
    f: f64,
    grad: Vec<f64>,
    g: Vec<f64>,
    jg: DMatrix<f64>,
    h: Vec<f64>,
    jh: DMatrix<f64>,
}

fn first_bad(v: &[f64]) -> Option<usize> {
    v.iter().position(|x| !x.is_finite())
}

fn evaluate<P: Nlp + ?Sized>(problem: &P, rows: &Rows, x: &[f64], scale: f64) -> Result<Point, String> {
    let n = rows.n;
    let f = problem.objective(x);
    if !f.is_finite() {
        return Err("objective evaluated to a non-finite value".into());
    }
    let mut grad = vec![0.0; n];
    problem.gradient(x, &mut grad);
    if let Some(k) = first_bad(&grad) {
        return Err(format!("objective gradient entry {k} is non-finite"));
    }
    let mut g = vec![0.0; rows.meq()];
    problem.eq_values(x, &mut g[..rows.m_user]);
    if let Some(k) = first_bad(&g[..rows.m_user]) {
        return Err(format!("{} evaluated to a non-finite value", problem.eq_name(k)));
    }
    for (r, &k) in rows.fixed.iter().enumerate() {
        g[rows.m_user + r] = x[k] - rows.lo[k];
    }
    let mut jg = DMatrix::zeros(rows.meq(), n);
    {
        let mut user = DMatrix::zeros(rows.m_user, n);
        problem.eq_jacobian(x, &mut user);
        if let Some(p) = user.iter().position(|v| !v.is_finite()) {
            let r = p % rows.m_user.max(1);
            return Err(format!("Jacobian of {} is non-finite", problem.eq_name(r)));
        }
        jg.rows_mut(0, rows.m_user).copy_from(&user);
    }
    for (r, &k) in rows.fixed.iter().enumerate() {
        jg[(rows.m_user + r, k)] = 1.0;
    }

    let mut h = vec![0.0; rows.niq()];
    problem.ineq_values(x, &mut h[..rows.p_user]);
    if let Some(k) = first_bad(&h[..rows.p_user]) {
        return Err(format!("{} evaluated to a non-finite value", problem.ineq_name(k)));
    }
    let mut off = rows.p_user;
    for &k in &rows.lower {
        h[off] = rows.lo[k] - x[k];
        off += 1;
    }
    for &k in &rows.upper {
        h[off] = x[k] - rows.hi[k];
        off += 1;
    }
    let mut jh = DMatrix::zeros(rows.p_user, n);
    problem.ineq_jacobian(x, &mut jh);
    if let Some(p) = jh.iter().position(|v| !v.is_finite()) {
        let r = p % rows.p_user.max(1);
        return Err(format!("Jacobian of {} is non-finite", problem.ineq_name(r)));
    }
    Ok(Point { f: scale * f, grad: grad.iter().map(|v| scale * v).collect(), g, jg, h, jh })
}

/// `grad(scaled f) + Jg' lambda + Jh' mu`, including bound rows.
fn lagrangian_gradient(rows: &Rows, pt: &Point, lam: &[f64], mu: &[f64]) -> Vec<f64> {
    let mut lx = pt.grad.clone();
    gemv_t(&pt.jg, lam, &mut lx);
    gemv_t(&pt.jh, &mu[..rows.p_user], &mut lx);
    let mut off = rows.p_user;
    for &k in &rows.lower {
        lx[k] -= mu[off];
        off += 1;
    }
    for &k in &rows.upper {
        lx[k] += mu[off];
        off += 1;
    }
    lx
}

/// `out += A' v`
fn gemv_t(a: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    for (r, &w) in v.iter().enumerate() {
        if w != 0.0 {
            for (k, o) in out.iter_mut().enumerate() {
                *o += w * a[(r, k)];
            }
        }
    }
}

/// `Jh dx` over all inequality rows.
fn ineq_times(rows: &Rows, pt: &Point, dx: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.niq());
    for r in 0..rows.p_user {
        out.push((0..rows.n).map(|k| pt.jh[(r, k)] * dx[k]).sum());
    }
    out.extend(rows.lower.iter().map(|&k| -dx[k]));
    out.extend(rows.upper.iter().map(|&k| dx[k]));
    out
}

fn external_multipliers(rows: &Rows, scale: f64, lam: &[f64], mu: &[f64]) -> Multipliers {
    let n = rows.n;
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for (r, &k) in rows.fixed.iter().enumerate() {
        let v = lam[rows.m_user + r];
        if v >= 0.0 {
            upper[k] = v;
        } else {
            lower[k] = -v;
        }
    }
    let mut off = rows.p_user;
    for &k in &rows.lower {
        lower[k] += mu[off];
        off += 1;
    }
    for &k in &rows.upper {
        upper[k] += mu[off];
        off += 1;
    }
    Multipliers {
        objective_scale: scale,
        eq: lam[..rows.m_user].to_vec(),
        ineq: mu[..rows.p_user].to_vec(),
        lower,
        upper,
    }
}

/// Damped BFGS approximation of the Lagrangian Hessian.
struct QuasiNewton {
    b: DMatrix<f64>,
}

impl QuasiNewton {
    fn new(n: usize) -> Self {
        Self { b: DMatrix::identity(n, n) }
    }

    fn update(&mut self, s: &[f64], y: &[f64]) {
        let n = s.len();
        let sv = nalgebra::DVector::from_column_slice(s);
        let yv = nalgebra::DVector::from_column_slice(y);
        let bs = &self.b * &sv;
        let sbs = sv.dot(&bs);
        if !(sbs > 1e-300) {
            return;
        }
        let sy = sv.dot(&yv);
        let theta = if sy >= 0.2 * sbs { 1.0 } else { 0.8 * sbs / (sbs - sy) };
        let r = &yv * theta + &bs * (1.0 - theta);
        let sr = sv.dot(&r);
        if !(sr > 1e-300) {
            return;
        }
        for i in 0..n {
            for j in 0..n {
                self.b[(i, j)] += -bs[i] * bs[j] / sbs + r[i] * r[j] / sr;
            }
        }
    }
}

struct Snapshot {
    x: Vec<f64>,
    lam: Vec<f64>,
    mu: Vec<f64>,
    score: f64,
}

fn failure(
    problem_x: Vec<f64>,
    mult: Multipliers,
    residuals: KktResiduals,
    iterations: usize,
    message: String,
    history: Vec<IterationRecord>,
    objective: f64,
) -> SolveOutcome {
    SolveOutcome {
        x_star: problem_x,
        objective,
        multipliers: mult,
        status: SolveStatus::NumericalFailure,
        iterations,
        kkt_residuals: residuals,
        message: Some(message),
        history,
    }
}

/// Runs the primal-dual interior-point method from `x0`.
///
/// `x0` is projected inside the bounds first. The objective is scaled so its
/// largest gradient entry at the start is at most 100; reported multipliers
/// and residuals refer to that scaled Lagrangian, and `objective` is
/// unscaled.
pub fn solve<P: Nlp + ?Sized>(problem: &P, x0: &[f64], opts: &SolverOptions) -> SolveOutcome {
    assert_eq!(x0.len(), problem.num_vars(), "start vector has wrong length");
    let rows = Rows::new(problem);
    let (n, meq, niq) = (rows.n, rows.meq(), rows.niq());
    let mut x = rows.interior_start(x0);
    let mut history = Vec::new();

    let scale = {
        let mut grad = vec![0.0; n];
        problem.gradient(&x, &mut grad);
        let gmax = grad.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if gmax.is_finite() && gmax > MAX_SCALED_GRADIENT {
            MAX_SCALED_GRADIENT / gmax
        } else {
            1.0
        }
    };

    let empty_mult = |x: &[f64]| Multipliers {
        objective_scale: scale,
        eq: vec![0.0; rows.m_user],
        ineq: vec![0.0; rows.p_user],
        lower: vec![0.0; x.len()],
        upper: vec![0.0; x.len()],
    };
    let nan_residuals = KktResiduals { primal: f64::NAN, stationarity: f64::NAN, complementarity: f64::NAN };

    let mut pt = match evaluate(problem, &rows, &x, scale) {
        Ok(p) => p,
        Err(msg) => {
            let m = empty_mult(&x);
            return failure(x, m, nan_residuals, 0, msg, history, f64::NAN);
        }
    };

    let mut z: Vec<f64> =
        pt.h.iter().enumerate().map(|(r, &hv)| if r >= rows.p_user || hv < -1.0 { -hv } else { 1.0 }).collect();
    let mut gamma = 1.0;
    let mut mu: Vec<f64> = z.iter().map(|zi| gamma / zi).collect();
    let mut lam = vec![0.0; meq];

    let mut exact_hessian = true;
    let mut quasi: Option<QuasiNewton> = None;
    let mut last_shift: f64 = 0.0;
    let mut best: Option<Snapshot> = None;
    let mut status = SolveStatus::IterationLimit;
    let mut message = None;
    let mut iterations = 0;

    for it in 0..=opts.max_iter {
        let mult = external_multipliers(&rows, scale, &lam, &mu);
        let res = check_kkt(problem, &x, &mult);
        let score =
            (res.primal / opts.feas_tol).max(res.stationarity / opts.opt_tol).max(res.complementarity / opts.comp_tol);
        if score.is_finite() && best.as_ref().is_none_or(|b| score < b.score) {
            best = Some(Snapshot { x: x.clone(), lam: lam.clone(), mu: mu.clone(), score });
        }
        if res.within(opts) {
            status = SolveStatus::Converged;
            break;
        }
        if it == opts.max_iter {
            break;
        }
        iterations = it + 1;

        let lx = lagrangian_gradient(&rows, &pt, &lam, &mu);

        // Hessian of the Lagrangian.
        let mut kkt = DMatrix::zeros(n + meq, n + meq);
        {
            let mut hess = DMatrix::zeros(n, n);
            if exact_hessian {
                exact_hessian =
                    problem.lagrangian_hessian(&x, scale, &lam[..rows.m_user], &mu[..rows.p_user], &mut hess);
            }
            if !exact_hessian {
                hess = quasi.get_or_insert_with(|| QuasiNewton::new(n)).b.clone();
            }
            if hess.iter().any(|v| !v.is_finite()) {
                let msg = "Hessian of the Lagrangian is non-finite".to_string();
                return failure(x.clone(), mult, res, iterations, msg, history, pt.f / scale);
            }
            kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
        }
        // Condensed inequality curvature and right-hand side.
        let mut rhs = vec![0.0; n + meq];
        for (k, v) in lx.iter().enumerate() {
            rhs[k] = -v;
        }
        for r in 0..rows.p_user {
            let w = mu[r] / z[r];
            let c = (gamma + mu[r] * pt.h[r]) / z[r];
            let row = pt.jh.row(r);
            let nz: Vec<usize> = (0..n).filter(|&k| row[k] != 0.0).collect();
            for &i in &nz {
                rhs[i] -= row[i] * c;
                for &j in &nz {
                    kkt[(i, j)] += w * row[i] * row[j];
                }
            }
        }
        let mut off = rows.p_user;
        for &k in &rows.lower {
            kkt[(k, k)] += mu[off] / z[off];
            rhs[k] += (gamma + mu[off] * pt.h[off]) / z[off];
            off += 1;
        }
        for &k in &rows.upper {
            kkt[(k, k)] += mu[off] / z[off];
            rhs[k] -= (gamma + mu[off] * pt.h[off]) / z[off];
            off += 1;
        }
        for r in 0..meq {
            for k in 0..n {
                let v = pt.jg[(r, k)];
                kkt[(n + r, k)] = v;
                kkt[(k, n + r)] = v;
            }
            rhs[n + r] = -pt.g[r];
        }

        // Factor with inertia correction.
        let mut shift: f64 = 0.0;
        let mut jac_shift = 0.0;
        let mut step = None;
        loop {
            let mut k = kkt.clone();
            for i in 0..n {
                k[(i, i)] += shift;
            }
            for r in 0..meq {
                k[(n + r, n + r)] -= jac_shift;
            }
            let f = Ldlt::factor(&k);
            let inertia = f.inertia(opts.regularization);
            if inertia.positive == n && inertia.negative == meq && inertia.zero == 0 {
                if let Some(sol) = f.solve(&rhs) {
                    step = Some(sol);
                    break;
                }
            }
            if inertia.zero > 0 && jac_shift == 0.0 && meq > 0 {
                jac_shift = JACOBIAN_SHIFT;
                continue;
            }
            shift = if shift == 0.0 {
                if last_shift == 0.0 {
                    1e-4
                } else {
                    (last_shift / 3.0).max(1e-20)
                }
            } else if last_shift == 0.0 {
                shift * 100.0
            } else {
                shift * 8.0
            };
            if shift > MAX_HESSIAN_SHIFT {
                break;
            }
        }
        let Some(sol) = step else {
            let msg = "KKT matrix could not be regularized to the correct inertia".to_string();
            return failure(x.clone(), mult, res, iterations, msg, history, pt.f / scale);
        };
        if shift > 0.0 {
            last_shift = shift;
        }
        let dx = &sol[..n];
        let dlam = &sol[n..];

        let jdx = ineq_times(&rows, &pt, dx);
        let dz: Vec<f64> = (0..niq).map(|r| -pt.h[r] - z[r] - jdx[r]).collect();
        let dmu: Vec<f64> = (0..niq).map(|r| -mu[r] + (gamma - mu[r] * dz[r]) / z[r]).collect();

        let ratio = |v: &[f64], dv: &[f64]| {
            v.iter().zip(dv).filter(|(_, d)| **d < 0.0).fold(f64::INFINITY, |a, (vi, di)| a.min(-vi / di))
        };
        let alpha_p = (opts.step_shrink * ratio(&z, &dz)).min(1.0);
        let alpha_d = (opts.step_shrink * ratio(&mu, &dmu)).min(1.0);

        let x_old = x.clone();
        for k in 0..n {
            x[k] += alpha_p * dx[k];
        }
        for r in 0..niq {
            z[r] += alpha_p * dz[r];
            mu[r] += alpha_d * dmu[r];
        }
        for r in 0..meq {
            lam[r] += alpha_d * dlam[r];
        }

        let new_pt = match evaluate(problem, &rows, &x, scale) {
            Ok(p) => p,
            Err(msg) => {
                let mult = external_multipliers(&rows, scale, &lam, &mu);
                return failure(x, mult, res, iterations, msg, history, f64::NAN);
            }
        };
        // Bound rows are linear, so their slacks equal the bound distances.
        for r in rows.p_user..niq {
            z[r] = (-new_pt.h[r]).max(f64::MIN_POSITIVE);
        }

        if let Some(q) = quasi.as_mut() {
            let s: Vec<f64> = x.iter().zip(&x_old).map(|(a, b)| a - b).collect();
            let new_lx = lagrangian_gradient(&rows, &new_pt, &lam, &mu);
            let old_lx = lagrangian_gradient(&rows, &pt, &lam, &mu);
            let y: Vec<f64> = new_lx.iter().zip(&old_lx).map(|(a, b)| a - b).collect();
            q.update(&s, &y);
        }
        pt = new_pt;

        history.push(IterationRecord {
            iteration: it,
            objective: pt.f / scale,
            residuals: res,
            barrier: gamma,
            alpha_primal: alpha_p,
            alpha_dual: alpha_d,
            min_slack: z.iter().fold(f64::INFINITY, |a, &v| a.min(v)),
            regularization: shift,
        });

        if niq > 0 {
            let avg = z.iter().zip(&mu).map(|(a, b)| a * b).sum::<f64>() / niq as f64;
            gamma = gamma.min(opts.barrier_reduction * avg);
        }
    }

    if status != SolveStatus::Converged {
        if let Some(b) = best {
            x = b.x;
            lam = b.lam;
            mu = b.mu;
        }
        message = Some(format!("no KKT point within tolerances after {iterations} iterations"));
    }
    let multipliers = external_multipliers(&rows, scale, &lam, &mu);
    let kkt_residuals = check_kkt(problem, &x, &multipliers);
    let objective = problem.objective(&x);
    SolveOutcome { x_star: x, objective, multipliers, status, iterations, kkt_residuals, message, history }
}
