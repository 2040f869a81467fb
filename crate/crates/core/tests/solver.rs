use eqshed::solver::{check_kkt, solve, Multipliers, Nlp, SolveStatus, SolverOptions};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `min 0.5 x'Qx + c'x  s.t.  A x <= b,  lo <= x <= hi`.
struct Qp {
    q: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Qp {
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.c.dot(x)
    }
}

impl Nlp for Qp {
    fn num_vars(&self) -> usize {
        self.c.len()
    }
    fn num_eq(&self) -> usize {
        0
    }
    fn num_ineq(&self) -> usize {
        self.b.len()
    }
    fn lower_bounds(&self) -> Vec<f64> {
        self.lo.clone()
    }
    fn upper_bounds(&self) -> Vec<f64> {
        self.hi.clone()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.value(&DVector::from_column_slice(x))
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        let g = &self.q * DVector::from_column_slice(x) + &self.c;
        grad.copy_from_slice(g.as_slice());
    }
    fn eq_values(&self, _: &[f64], _: &mut [f64]) {}
    fn eq_jacobian(&self, _: &[f64], _: &mut DMatrix<f64>) {}
    fn ineq_values(&self, x: &[f64], out: &mut [f64]) {
        let h = &self.a * DVector::from_column_slice(x) - &self.b;
        out.copy_from_slice(h.as_slice());
    }
    fn ineq_jacobian(&self, _: &[f64], jac: &mut DMatrix<f64>) {
        jac.copy_from(&self.a);
    }
    fn lagrangian_hessian(&self, _: &[f64], s: f64, _: &[f64], _: &[f64], hess: &mut DMatrix<f64>) -> bool {
        *hess += &self.q * s;
        true
    }
}

/// Solves the QP by enumerating every active set of the stacked constraints
/// (general rows plus bounds as rows) and keeping the best KKT point.
fn active_set_oracle(qp: &Qp) -> (DVector<f64>, f64) {
    let n = qp.c.len();
    let mut rows: Vec<(DVector<f64>, f64)> =
        (0..qp.b.len()).map(|r| (qp.a.row(r).transpose().into_owned(), qp.b[r])).collect();
    for k in 0..n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        rows.push((e.clone(), qp.hi[k]));
        rows.push((-e, -qp.lo[k]));
    }
    let m = rows.len();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0u32..(1 << m) {
        let active: Vec<usize> = (0..m).filter(|r| mask & (1 << r) != 0).collect();
        if active.len() > n {
            continue;
        }
        let k = active.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&qp.q);
        for (i, &r) in active.iter().enumerate() {
            for j in 0..n {
                kkt[(n + i, j)] = rows[r].0[j];
                kkt[(j, n + i)] = rows[r].0[j];
            }
            rhs[n + i] = rows[r].1;
        }
        for j in 0..n {
            rhs[j] = -qp.c[j];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let x = sol.rows(0, n).into_owned();
        let dual_ok = (0..k).all(|i| sol[n + i] >= -1e-12);
        let primal_ok = rows.iter().all(|(a, b)| a.dot(&x) <= b + 1e-10);
        if dual_ok && primal_ok {
            let f = qp.value(&x);
            if best.as_ref().map_or(true, |(_, bf)| f < *bf) {
                best = Some((x, f));
            }
        }
    }
    best.expect("feasible QP has a KKT point")
}

fn random_qp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Qp {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = g.transpose() * &g + DMatrix::identity(n, n) * 0.1;
    let c = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
    let a = DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
    let inside = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let b = &a * &inside + DVector::from_fn(m, |_, _| rng.gen_range(0.05..1.0));
    Qp { q, c, a, b, lo: vec![-2.0; n], hi: vec![2.0; n] }
}

fn tight() -> SolverOptions {
    SolverOptions { feas_tol: 1e-10, opt_tol: 1e-10, comp_tol: 1e-10, ..SolverOptions::default() }
}

#[test]
fn convex_qps_match_active_set_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..40 {
        let qp = random_qp(&mut rng, 3, 4);
        let (_, f_star) = active_set_oracle(&qp);
        let out = solve(&qp, &[0.0; 3], &tight());
        assert_eq!(out.status, SolveStatus::Converged, "trial {trial}: {:?}", out.message);
        assert!((out.objective - f_star).abs() <= 1e-8, "trial {trial}: {} vs {f_star}", out.objective);
    }
}

/// `min (x - 3)^2` on `[0, 10]`.
struct Parabola;

impl Nlp for Parabola {
    fn num_vars(&self) -> usize {
        1
    }
    fn num_eq(&self) -> usize {
        0
    }
    fn num_ineq(&self) -> usize {
        0
    }
    fn lower_bounds(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn upper_bounds(&self) -> Vec<f64> {
        vec![10.0]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (x[0] - 3.0).powi(2)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        g[0] = 2.0 * (x[0] - 3.0);
    }
    fn eq_values(&self, _: &[f64], _: &mut [f64]) {}
    fn eq_jacobian(&self, _: &[f64], _: &mut DMatrix<f64>) {}
    fn ineq_values(&self, _: &[f64], _: &mut [f64]) {}
    fn ineq_jacobian(&self, _: &[f64], _: &mut DMatrix<f64>) {}
    fn lagrangian_hessian(&self, _: &[f64], s: f64, _: &[f64], _: &[f64], h: &mut DMatrix<f64>) -> bool {
        h[(0, 0)] += 2.0 * s;
        true
    }
}

#[test]
fn parabola_interior_minimum() {
    let out = solve(&Parabola, &[9.0], &SolverOptions::default());
    assert_eq!(out.status, SolveStatus::Converged);
    assert!((out.x_star[0] - 3.0).abs() < 1e-6);
}

#[test]
fn toy_kkt_point_has_zero_residuals() {
    let mult = Multipliers { objective_scale: 1.0, eq: vec![], ineq: vec![], lower: vec![0.0], upper: vec![0.0] };
    let r = check_kkt(&Parabola, &[3.0], &mult);
    assert!(r.primal < 1e-10 && r.stationarity < 1e-10 && r.complementarity < 1e-10, "{r:?}");
}

/// `min x + y  s.t.  x + y >= 1,  x, y >= 0`.
fn half_plane() -> Qp {
    Qp {
        q: DMatrix::zeros(2, 2),
        c: DVector::from_vec(vec![1.0, 1.0]),
        a: DMatrix::from_row_slice(1, 2, &[-1.0, -1.0]),
        b: DVector::from_vec(vec![-1.0]),
        lo: vec![0.0, 0.0],
        hi: vec![f64::INFINITY, f64::INFINITY],
    }
}

#[test]
fn active_linear_constraint() {
    let out = solve(&half_plane(), &[3.0, 2.0], &SolverOptions::default());
    assert_eq!(out.status, SolveStatus::Converged);
    assert!((out.objective - 1.0).abs() < 1e-6);
    let mult =
        Multipliers { objective_scale: 1.0, eq: vec![], ineq: vec![1.0], lower: vec![0.0; 2], upper: vec![0.0; 2] };
    let r = check_kkt(&half_plane(), &[0.5, 0.5], &mult);
    assert!(r.primal < 1e-10 && r.stationarity < 1e-10 && r.complementarity < 1e-10, "{r:?}");
}

#[test]
fn primal_residual_is_the_largest_violation() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..50 {
        let qp = random_qp(&mut rng, 3, 4);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let xv = DVector::from_column_slice(&x);
        let mut worst = (&qp.a * &xv - &qp.b).max().max(0.0);
        for k in 0..3 {
            worst = worst.max(qp.lo[k] - x[k]).max(x[k] - qp.hi[k]);
        }
        let mult = Multipliers {
            objective_scale: 1.0,
            eq: vec![],
            ineq: vec![0.0; 4],
            lower: vec![0.0; 3],
            upper: vec![0.0; 3],
        };
        assert_eq!(check_kkt(&qp, &x, &mult).primal, worst);
    }
}

#[test]
fn barrier_is_monotone_and_slacks_stay_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let qp = random_qp(&mut rng, 4, 5);
        let out = solve(&qp, &[0.0; 4], &tight());
        assert!(!out.history.is_empty());
        for w in out.history.windows(2) {
            assert!(w[1].barrier <= w[0].barrier);
        }
        assert!(out.history.iter().all(|r| r.min_slack > 0.0));
    }
}

#[test]
fn converged_status_implies_residuals_within_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = SolverOptions::default();
    for _ in 0..10 {
        let qp = random_qp(&mut rng, 3, 6);
        let out = solve(&qp, &[1.5, -1.5, 0.0], &opts);
        assert_eq!(out.status, SolveStatus::Converged);
        assert!(out.kkt_residuals.within(&opts));
        assert_eq!(check_kkt(&qp, &out.x_star, &out.multipliers), out.kkt_residuals);
    }
}

#[test]
fn identical_inputs_give_identical_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let qp = random_qp(&mut rng, 4, 6);
    let a = solve(&qp, &[0.1, 0.2, 0.3, 0.4], &SolverOptions::default());
    let b = solve(&qp, &[0.1, 0.2, 0.3, 0.4], &SolverOptions::default());
    assert_eq!(a, b);
}

#[test]
fn start_outside_bounds_is_projected() {
    let out = solve(&Parabola, &[-50.0], &SolverOptions::default());
    assert_eq!(out.status, SolveStatus::Converged);
    assert!((out.x_star[0] - 3.0).abs() < 1e-6);
}

#[test]
fn iteration_limit_returns_flagged_best_iterate() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let qp = random_qp(&mut rng, 4, 6);
    let opts = SolverOptions { max_iter: 2, ..SolverOptions::default() };
    let out = solve(&qp, &[0.0; 4], &opts);
    assert_eq!(out.status, SolveStatus::IterationLimit);
    assert!(out.message.is_some());
    assert_eq!(out.x_star.len(), 4);
    assert!(out.x_star.iter().zip(&qp.lo).all(|(x, l)| x >= l));
}

/// Bounded Rosenbrock with a disc constraint and no second derivatives.
struct NoHessian;

impl Nlp for NoHessian {
    fn num_vars(&self) -> usize {
        2
    }
    fn num_eq(&self) -> usize {
        0
    }
    fn num_ineq(&self) -> usize {
        1
    }
    fn lower_bounds(&self) -> Vec<f64> {
        vec![-2.0, -2.0]
    }
    fn upper_bounds(&self) -> Vec<f64> {
        vec![2.0, 2.0]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 10.0 * (x[1] - x[0] * x[0]).powi(2)
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        let t = x[1] - x[0] * x[0];
        g[0] = -2.0 * (1.0 - x[0]) - 40.0 * x[0] * t;
        g[1] = 20.0 * t;
    }
    fn eq_values(&self, _: &[f64], _: &mut [f64]) {}
    fn eq_jacobian(&self, _: &[f64], _: &mut DMatrix<f64>) {}
    fn ineq_values(&self, x: &[f64], out: &mut [f64]) {
        out[0] = x[0] * x[0] + x[1] * x[1] - 1.5;
    }
    fn ineq_jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        jac[(0, 0)] = 2.0 * x[0];
        jac[(0, 1)] = 2.0 * x[1];
    }
}

#[test]
fn quasi_newton_fallback_reaches_kkt_point() {
    let opts = SolverOptions { max_iter: 300, ..SolverOptions::default() };
    let out = solve(&NoHessian, &[-1.0, 0.5], &opts);
    assert_eq!(out.status, SolveStatus::Converged, "{:?}", out.message);
    // The unconstrained minimum (1, 1) lies outside the disc.
    let r2 = out.x_star[0].powi(2) + out.x_star[1].powi(2);
    assert!((r2 - 1.5).abs() < 1e-5);
    assert!(out.x_star[0] > 0.0 && out.x_star[1] > 0.0);
}

/// Equality row that turns NaN for `x < 1`.
struct Poisoned;

impl Nlp for Poisoned {
    fn num_vars(&self) -> usize {
        1
    }
    fn num_eq(&self) -> usize {
        1
    }
    fn num_ineq(&self) -> usize {
        0
    }
    fn lower_bounds(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn upper_bounds(&self) -> Vec<f64> {
        vec![4.0]
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x[0]
    }
    fn gradient(&self, _: &[f64], g: &mut [f64]) {
        g[0] = 1.0;
    }
    fn eq_values(&self, x: &[f64], out: &mut [f64]) {
        out[0] = (x[0] - 1.0).sqrt() - 0.5;
    }
    fn eq_jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        jac[(0, 0)] = 0.5 / (x[0] - 1.0).sqrt();
    }
    fn ineq_values(&self, _: &[f64], _: &mut [f64]) {}
    fn ineq_jacobian(&self, _: &[f64], _: &mut DMatrix<f64>) {}
    fn eq_name(&self, _: usize) -> String {
        "root balance".into()
    }
}

#[test]
fn nan_in_user_function_names_the_constraint() {
    let out = solve(&Poisoned, &[0.5], &SolverOptions::default());
    assert_eq!(out.status, SolveStatus::NumericalFailure);
    let msg = out.message.unwrap();
    assert!(msg.contains("root balance"), "{msg}");
}
