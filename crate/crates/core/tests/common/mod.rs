//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use eqshed::case::NetworkCase;
use num_complex::Complex64 as C;

/// Dense complex matrix stored as rows.
pub type CMat = Vec<Vec<C>>;

fn index_of(case: &NetworkCase, id: u32) -> usize {
    case.buses.iter().position(|b| b.id == id).expect("bus id")
}

/// Textbook admittance matrix: `Y = Cf' Yf + Ct' Yt + diag(Ysh)` with branch
/// incidence matrices and per-branch two-port admittances.
pub fn ybus_oracle(case: &NetworkCase) -> CMat {
    let n = case.buses.len();
    let live: Vec<_> = case.branches.iter().filter(|b| b.in_service).collect();
    let nl = live.len();
    // Incidence matrices, nl x n.
    let mut cf = vec![vec![0.0; n]; nl];
    let mut ct = vec![vec![0.0; n]; nl];
    let (mut yff, mut yft, mut ytf, mut ytt) = (vec![], vec![], vec![], vec![]);
    for (l, br) in live.iter().enumerate() {
        cf[l][index_of(case, br.from_bus)] = 1.0;
        ct[l][index_of(case, br.to_bus)] = 1.0;
        let ys = C::new(br.r, br.x).inv();
        let a = C::new(br.tap * br.shift.cos(), br.tap * br.shift.sin());
        let tt = ys + C::new(0.0, 0.5 * br.b_charging);
        ytt.push(tt);
        yff.push(tt / (a * a.conj()));
        yft.push(-ys / a.conj());
        ytf.push(-ys / a);
    }
    // Yf = diag(yff) Cf + diag(yft) Ct, Yt = diag(ytf) Cf + diag(ytt) Ct.
    let yf: CMat = (0..nl).map(|l| (0..n).map(|k| yff[l] * cf[l][k] + yft[l] * ct[l][k]).collect()).collect();
    let yt: CMat = (0..nl).map(|l| (0..n).map(|k| ytf[l] * cf[l][k] + ytt[l] * ct[l][k]).collect()).collect();
    let mut y = vec![vec![C::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = C::new(0.0, 0.0);
            for l in 0..nl {
                acc += yf[l][j] * cf[l][i] + yt[l][j] * ct[l][i];
            }
            y[i][j] = acc;
        }
        let b = &case.buses[i];
        y[i][i] += C::new(b.shunt_g, b.shunt_b) / case.base_mva;
    }
    y
}

pub fn phasors(theta: &[f64], v: &[f64]) -> Vec<C> {
    theta.iter().zip(v).map(|(&t, &m)| C::from_polar(m, t)).collect()
}

/// Complex bus injections `V .* conj(Y V)`.
pub fn injections(y: &CMat, vc: &[C]) -> Vec<C> {
    (0..vc.len())
        .map(|i| {
            let cur: C = (0..vc.len()).map(|j| y[i][j] * vc[j]).sum();
            vc[i] * cur.conj()
        })
        .collect()
}

/// Newton power flow with every non-reference bus treated as PQ with the
/// given scheduled injection. The Jacobian is built by finite differences.
/// Returns `(theta, v)` or `None` without convergence.
pub fn newton_power_flow(y: &CMat, sched: &[C], reference: usize, v_ref: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = sched.len();
    let others: Vec<usize> = (0..n).filter(|&k| k != reference).collect();
    let m = others.len();
    let mut theta = vec![0.0; n];
    let mut v = vec![1.0; n];
    v[reference] = v_ref;
    let mismatch = |theta: &[f64], v: &[f64]| -> Vec<f64> {
        let s = injections(y, &phasors(theta, v));
        let mut f = Vec::with_capacity(2 * m);
        f.extend(others.iter().map(|&k| s[k].re - sched[k].re));
        f.extend(others.iter().map(|&k| s[k].im - sched[k].im));
        f
    };
    for _ in 0..30 {
        let f = mismatch(&theta, &v);
        if f.iter().all(|e| e.abs() < 1e-12) {
            return Some((theta, v));
        }
        let mut jac = nalgebra::DMatrix::zeros(2 * m, 2 * m);
        let h = 1e-7;
        for (c, &k) in others.iter().enumerate() {
            for (col, is_v) in [(c, false), (m + c, true)] {
                let (mut tp, mut vp) = (theta.clone(), v.clone());
                let (mut tm, mut vm) = (theta.clone(), v.clone());
                if is_v {
                    vp[k] += h;
                    vm[k] -= h;
                } else {
                    tp[k] += h;
                    tm[k] -= h;
                }
                let (fp, fm) = (mismatch(&tp, &vp), mismatch(&tm, &vm));
                for r in 0..2 * m {
                    jac[(r, col)] = (fp[r] - fm[r]) / (2.0 * h);
                }
            }
        }
        let rhs = nalgebra::DVector::from_iterator(2 * m, f.iter().map(|e| -e));
        let dx = jac.lu().solve(&rhs)?;
        for (c, &k) in others.iter().enumerate() {
            theta[k] += dx[c];
            v[k] += dx[m + c];
        }
    }
    None
}

/// Complex power entering each end of every in-service branch.
pub fn line_flows(case: &NetworkCase, theta: &[f64], v: &[f64]) -> Vec<(C, C)> {
    let vc = phasors(theta, v);
    case.branches
        .iter()
        .filter(|b| b.in_service)
        .map(|br| {
            let (f, t) = (index_of(case, br.from_bus), index_of(case, br.to_bus));
            let ys = C::new(br.r, br.x).inv();
            let a = C::from_polar(br.tap, br.shift);
            let half = C::new(0.0, 0.5 * br.b_charging);
            // Ideal transformer on the from side, then the pi section.
            let vf = vc[f] / a;
            let i_series = (vf - vc[t]) * ys;
            let i_from = (i_series + half * vf) / a.conj();
            let i_to = -i_series + half * vc[t];
            (vc[f] * i_from.conj(), vc[t] * i_to.conj())
        })
        .collect()
}

/// Fourth-order central-difference Jacobian of `f` at `x`, one row per
/// output. The wide step keeps roundoff small for large-magnitude functions.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> Vec<Vec<f64>> {
    let m = f(x).len();
    let mut jac = vec![vec![0.0; x.len()]; m];
    let mut xs = x.to_vec();
    for k in 0..x.len() {
        let h = 1e-3 * x[k].abs().max(1.0);
        let mut at = |d: f64| {
            xs[k] = x[k] + d;
            f(&xs)
        };
        let (p2, p1, m1, m2) = (at(2.0 * h), at(h), at(-h), at(-2.0 * h));
        xs[k] = x[k];
        for r in 0..m {
            jac[r][k] = (8.0 * (p1[r] - m1[r]) - (p2[r] - m2[r])) / (12.0 * h);
        }
    }
    jac
}

/// Entrywise relative error `|a - b| / max(1, |a|, |b|)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

pub fn case14() -> NetworkCase {
    eqshed::case::parse_matpower_case(eqshed::CASE14_M).unwrap()
}

pub fn case5() -> NetworkCase {
    eqshed::case::parse_matpower_case(eqshed::CASE5_M).unwrap()
}

/// Raw numeric rows of a `mpc.<block> = [ ... ];` literal, read directly from
/// case text without the library parser.
pub fn raw_block(text: &str, block: &str) -> Vec<Vec<f64>> {
    let start = text.find(&format!("mpc.{block} = [")).expect("block");
    let body = &text[start..];
    let open = body.find('[').unwrap() + 1;
    let close = body.find(']').unwrap();
    body[open..close]
        .lines()
        .map(|l| l.split('%').next().unwrap().trim().trim_end_matches(';'))
        .filter(|l| !l.is_empty())
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect()
}
