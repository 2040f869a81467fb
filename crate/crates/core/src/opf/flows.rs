//! Polar AC power-flow quantities and their derivatives.

use crate::case::{AdmittanceMatrix, BranchAdmittance};

/// Power-balance mismatches `inj - V_i sum_j V_j (G cos + B sin)` (real) and
/// `inj - V_i sum_j V_j (G sin - B cos)` (reactive), per bus, in pu.
pub fn eval_power_balance(
    theta: &[f64],
    v: &[f64],
    p_inj: &[f64],
    q_inj: &[f64],
    ybus: &AdmittanceMatrix,
) -> (Vec<f64>, Vec<f64>) {
    let n = ybus.n;
    assert!(theta.len() == n && v.len() == n && p_inj.len() == n && q_inj.len() == n);
    let mut rp = p_inj.to_vec();
    let mut rq = q_inj.to_vec();
    for i in 0..n {
        for j in 0..n {
            let (g, b) = (ybus.g[(i, j)], ybus.b[(i, j)]);
            if g == 0.0 && b == 0.0 {
                continue;
            }
            let (s, c) = (theta[i] - theta[j]).sin_cos();
            let vv = v[i] * v[j];
            rp[i] -= vv * (g * c + b * s);
            rq[i] -= vv * (g * s - b * c);
        }
    }
    (rp, rq)
}

/// Squared apparent power at one branch end and its derivatives with respect
/// to `(theta_self, theta_other, v_self, v_other)`.
pub(crate) struct EndFlow {
    pub value: f64,
    pub grad: [f64; 4],
    pub hess: [[f64; 4]; 4],
}

/// `S = V_s conj(y_self V_s + y_mut V_o)`; returns `|S|^2`.
pub(crate) fn end_flow(
    theta_s: f64,
    theta_o: f64,
    vs: f64,
    vo: f64,
    y_self: num_complex::Complex64,
    y_mut: num_complex::Complex64,
) -> EndFlow {
    let (gs, bs) = (y_self.re, y_self.im);
    let (gm, bm) = (y_mut.re, y_mut.im);
    let (sn, cs) = (theta_s - theta_o).sin_cos();
    let a_ = gm * cs + bm * sn;
    let b_ = gm * sn - bm * cs;
    let (a, b) = (vs, vo);

    let p = a * a * gs + a * b * a_;
    let q = -a * a * bs + a * b * b_;
    // Order within the local derivative arrays: (theta, v_self, v_other).
    let dp = [-a * b * b_, 2.0 * a * gs + b * a_, a * a_];
    let dq = [a * b * a_, -2.0 * a * bs + b * b_, a * b_];
    let hp = [[-a * b * a_, -b * b_, -a * b_], [-b * b_, 2.0 * gs, a_], [-a * b_, a_, 0.0]];
    let hq = [[-a * b * b_, b * a_, a * a_], [b * a_, -2.0 * bs, b_], [a * a_, b_, 0.0]];
    let mut g3 = [0.0; 3];
    let mut h3 = [[0.0; 3]; 3];
    for r in 0..3 {
        g3[r] = 2.0 * (p * dp[r] + q * dq[r]);
        for c in 0..3 {
            h3[r][c] = 2.0 * (dp[r] * dp[c] + p * hp[r][c] + dq[r] * dq[c] + q * hq[r][c]);
        }
    }
    // Map (theta, vs, vo) onto (theta_s, theta_o, vs, vo); theta = theta_s - theta_o.
    let map = |k: usize| -> (usize, f64) {
        match k {
            0 => (0, 1.0),
            1 => (0, -1.0),
            2 => (1, 1.0),
            _ => (2, 1.0),
        }
    };
    let mut grad = [0.0; 4];
    let mut hess = [[0.0; 4]; 4];
    for r in 0..4 {
        let (lr, sr) = map(r);
        grad[r] = sr * g3[lr];
        for c in 0..4 {
            let (lc, sc) = map(c);
            hess[r][c] = sr * sc * h3[lr][lc];
        }
    }
    EndFlow { value: p * p + q * q, grad, hess }
}

/// Squared apparent power `(|S_from|^2, |S_to|^2)` in pu^2 on an in-service
/// branch, from the pi-model with tap and phase shift.
pub fn eval_branch_flow(theta: &[f64], v: &[f64], branch: &BranchAdmittance) -> (f64, f64) {
    let (f, t) = (branch.from, branch.to);
    let from = end_flow(theta[f], theta[t], v[f], v[t], branch.yff, branch.yft);
    let to = end_flow(theta[t], theta[f], v[t], v[f], branch.ytt, branch.ytf);
    (from.value, to.value)
}
