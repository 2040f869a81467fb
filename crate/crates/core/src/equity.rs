//! Outage risk index (ORI) and grid Gini coefficient of load shedding.
//!
//! Every bus with positive real demand is one subregion. For a shed vector
//! `s` and demand vector `d` over those `n` buses:
//!
//! ```text
//! ORI_i = s_i / d_i
//! GGC   = sum_i sum_j |ORI_i - ORI_j| / (2 n (n - 1) mean(ORI))
//! ```
//!
//! Inside the optimization the limit `GGC <= beta` is imposed in the
//! multiplied-out form, with each `|ORI_i - ORI_j|` (for `i < j`) split into
//! nonnegative parts `z+ - z- = ORI_i - ORI_j`. That form stays well defined
//! when nothing is shed, where the ratio above is 0/0.

use serde::{Deserialize, Serialize};

use crate::case::NetworkCase;
use crate::error::{Error, Result};

/// Relative slack allowed when a shed value sits on its bounds.
const SHED_BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityReport {
    /// External ids of the load buses, aligned with `ori`.
    pub bus_ids: Vec<u32>,
    pub ori: Vec<f64>,
    pub ori_mean: f64,
    /// Grid Gini coefficient; 0 when nothing is shed.
    pub ggc: f64,
    pub n_subregions: usize,
}

/// Ratio of shed to demand per load bus.
///
/// Shed values within a relative 1e-9 of their bounds are clamped into
/// `[0, demand]`; anything further out is a domain error.
pub fn compute_ori(p_shed: &[f64], p_demand: &[f64]) -> Result<Vec<f64>> {
    if p_shed.len() != p_demand.len() {
        return Err(Error::Domain(format!("{} shed values for {} load buses", p_shed.len(), p_demand.len())));
    }
    p_shed
        .iter()
        .zip(p_demand)
        .enumerate()
        .map(|(k, (&s, &d))| {
            if !(d > 0.0) {
                return Err(Error::Domain(format!("load bus {k} has non-positive demand {d}; it is not a subregion")));
            }
            let slack = SHED_BOUND_TOL * d;
            if !(s >= -slack && s <= d + slack) {
                return Err(Error::Domain(format!("shed {s} at load bus {k} outside [0, {d}]")));
            }
            Ok((s / d).clamp(0.0, 1.0))
        })
        .collect()
}

/// Compensated (Neumaier) sum, so repeated equal terms round like a product.
fn stable_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + carry
}

/// Sum of `|ORI_i - ORI_j|` over pairs `i < j`.
fn pairwise_disparity(ori: &[f64]) -> f64 {
    stable_sum(ori.iter().enumerate().flat_map(|(i, a)| ori[i + 1..].iter().map(move |b| (a - b).abs())))
}

/// Grid Gini coefficient of an ORI vector. Defined as 0 when the mean is 0.
pub fn compute_ggc(ori: &[f64]) -> Result<f64> {
    let n = ori.len();
    if n < 2 {
        return Err(Error::Domain(format!("Gini coefficient needs at least 2 subregions, got {n}")));
    }
    if let Some(v) = ori.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("negative or NaN ORI value {v}")));
    }
    let total = stable_sum(ori.iter().copied());
    if total == 0.0 {
        return Ok(0.0);
    }
    // 2 sum_{i<j} |d| / (2 n (n-1) mean) with n * mean written as the total.
    Ok(pairwise_disparity(ori) / ((n - 1) as f64 * total))
}

/// ORI, mean ORI and Gini coefficient for `p_shed` (MW, aligned with
/// [`NetworkCase::load_buses`]).
pub fn equity_report(p_shed: &[f64], case: &NetworkCase) -> Result<EquityReport> {
    let loads = case.load_buses();
    let demand: Vec<f64> = loads.iter().map(|&k| case.buses[k].p_demand).collect();
    let ori = compute_ori(p_shed, &demand)?;
    let n = ori.len();
    let ori_mean = if n == 0 { 0.0 } else { ori.iter().sum::<f64>() / n as f64 };
    let ggc = if n < 2 { 0.0 } else { compute_ggc(&ori)? };
    Ok(EquityReport { bus_ids: loads.iter().map(|&k| case.buses[k].id).collect(), ori, ori_mean, ggc, n_subregions: n })
}

/// A variable of the linearized equity block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquityVar {
    /// Shed at the k-th load bus, in the unit the demands were given in.
    Shed(usize),
    /// Positive part of the disparity of pair p.
    ZPlus(usize),
    /// Negative part of the disparity of pair p.
    ZMinus(usize),
}

/// Linear row `sum coeff * var`, read as `= 0` or `<= 0` by its owner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub terms: Vec<(EquityVar, f64)>,
}

impl LinearRow {
    pub fn eval(&self, shed: &[f64], z_plus: &[f64], z_minus: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|&(var, c)| {
                c * match var {
                    EquityVar::Shed(k) => shed[k],
                    EquityVar::ZPlus(p) => z_plus[p],
                    EquityVar::ZMinus(p) => z_minus[p],
                }
            })
            .sum()
    }
}

/// Linear equality and budget rows that impose `GGC <= beta` with auxiliary
/// disparity variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityLinearization {
    pub beta: f64,
    /// Load-bus ordinal pairs `(i, j)` with `i < j`.
    pub pair_index: Vec<(usize, usize)>,
    /// Number of `(z+, z-)` pairs, `n (n - 1) / 2`.
    pub aux_count: usize,
    /// `z+_p - z-_p - ORI_i + ORI_j = 0` for each pair p.
    pub coupling_rows: Vec<LinearRow>,
    /// `2 sum_p (z+_p + z-_p) - beta * 2 n (n - 1) * mean(ORI) <= 0`.
    pub budget_row: LinearRow,
}

/// Builds the linearized equity block for load buses with the given demands.
pub fn build_equity_linearization(demand: &[f64], beta: f64) -> Result<EquityLinearization> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!("equity limit must be nonnegative, got {beta}")));
    }
    if let Some((k, d)) = demand.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(Error::Domain(format!("load bus {k} has non-positive demand {d}")));
    }
    let n = demand.len();
    let pair_index: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();

    let coupling_rows = pair_index
        .iter()
        .enumerate()
        .map(|(p, &(i, j))| LinearRow {
            terms: vec![
                (EquityVar::ZPlus(p), 1.0),
                (EquityVar::ZMinus(p), -1.0),
                (EquityVar::Shed(i), -1.0 / demand[i]),
                (EquityVar::Shed(j), 1.0 / demand[j]),
            ],
        })
        .collect();

    // beta * 2 n (n-1) * (1/n) sum ORI_i = beta * 2 (n-1) sum s_i / d_i
    let nf = n as f64;
    let mut terms = Vec::with_capacity(2 * pair_index.len() + n);
    for p in 0..pair_index.len() {
        terms.push((EquityVar::ZPlus(p), 2.0));
        terms.push((EquityVar::ZMinus(p), 2.0));
    }
    for (k, d) in demand.iter().enumerate() {
        terms.push((EquityVar::Shed(k), -beta * 2.0 * (nf - 1.0) / d));
    }

    Ok(EquityLinearization {
        beta,
        aux_count: pair_index.len(),
        pair_index,
        coupling_rows,
        budget_row: LinearRow { terms },
    })
}

impl EquityLinearization {
    /// Smallest auxiliary values consistent with the coupling rows:
    /// `z+ = max(d, 0)`, `z- = max(-d, 0)` for each pair disparity `d`.
    pub fn minimal_aux(&self, shed: &[f64], demand: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.pair_index
            .iter()
            .map(|&(i, j)| {
                let d = shed[i] / demand[i] - shed[j] / demand[j];
                (d.max(0.0), (-d).max(0.0))
            })
            .unzip()
    }
}
