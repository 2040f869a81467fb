//! Grid data model.
//!
//! Quantities are stored in the units a case file uses: MW and MVAr for
//! powers, per-unit for impedances and voltages, radians for phase shifts.
//! Per-unit conversion of powers happens when a problem is assembled.

mod json;
mod matpower;
mod ybus;

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use json::{parse_json_case, serialize_json};
pub use matpower::parse_matpower_case;
pub use ybus::{build_ybus, AdmittanceMatrix, BranchAdmittance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    /// External bus number.
    pub id: u32,
    /// Real power demand, MW.
    pub p_demand: f64,
    /// Reactive power demand, MVAr.
    pub q_demand: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Shunt conductance, MW consumed at 1 pu voltage.
    pub shunt_g: f64,
    /// Shunt susceptance, MVAr injected at 1 pu voltage.
    pub shunt_b: f64,
    pub is_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub at_bus: u32,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Cost polynomial in ascending powers of P (MW): `[c0, c1, c2]` gives
    /// `c0 + c1 P + c2 P^2` in $/h.
    pub cost_coeffs: Vec<f64>,
    pub in_service: bool,
}

impl Generator {
    /// Cost in $/h at output `p_mw`.
    pub fn cost(&self, p_mw: f64) -> f64 {
        self.cost_coeffs.iter().rev().fold(0.0, |acc, c| acc * p_mw + c)
    }

    /// Marginal cost in $/MWh at output `p_mw`.
    pub fn marginal_cost(&self, p_mw: f64) -> f64 {
        self.cost_coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c * p_mw.powi(k as i32 - 1)).sum()
    }

    /// Second derivative of the cost, $/MW^2h.
    pub fn cost_curvature(&self) -> f64 {
        self.cost_coeffs.get(2).map_or(0.0, |c2| 2.0 * c2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from_bus: u32,
    pub to_bus: u32,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, pu.
    pub b_charging: f64,
    /// Off-nominal tap ratio on the from side.
    pub tap: f64,
    /// Phase shift, radians.
    pub shift: f64,
    /// Apparent power limit, MVA. Zero means unlimited.
    pub rate: f64,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub branches: Vec<Branch>,
}

/// Bidirectional map between external bus ids and internal ordinals.
#[derive(Debug, Clone, PartialEq)]
pub struct BusMap {
    ids: Vec<u32>,
    ordinals: HashMap<u32, usize>,
}

impl BusMap {
    pub fn ordinal(&self, id: u32) -> Option<usize> {
        self.ordinals.get(&id).copied()
    }

    pub fn id(&self, ordinal: usize) -> u32 {
        self.ids[ordinal]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// MW (or MVAr, MVA) to per-unit on `base_mva`.
pub fn to_pu(value: f64, base_mva: f64) -> f64 {
    value / base_mva
}

/// Per-unit to MW (or MVAr, MVA) on `base_mva`.
pub fn from_pu(value: f64, base_mva: f64) -> f64 {
    value * base_mva
}

impl NetworkCase {
    pub fn bus_map(&self) -> BusMap {
        let ids: Vec<u32> = self.buses.iter().map(|b| b.id).collect();
        let ordinals = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        BusMap { ids, ordinals }
    }

    /// Ordinal of the angle-reference bus.
    pub fn reference_ordinal(&self) -> Option<usize> {
        self.buses.iter().position(|b| b.is_reference)
    }

    /// Ordinals of buses treated as equity subregions (positive real demand).
    pub fn load_buses(&self) -> Vec<usize> {
        self.buses.iter().enumerate().filter(|(_, b)| b.p_demand > 0.0).map(|(k, _)| k).collect()
    }

    pub fn total_p_demand(&self) -> f64 {
        self.buses.iter().map(|b| b.p_demand).sum()
    }

    /// Sum of `p_max` over in-service generators, MW.
    pub fn online_capacity(&self) -> f64 {
        self.generators.iter().filter(|g| g.in_service).map(|g| g.p_max).sum()
    }

    /// Checks every structural invariant of the case.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if !(self.base_mva > 0.0 && self.base_mva.is_finite()) {
            return fail(format!("base_mva must be positive, got {}", self.base_mva));
        }
        if self.buses.is_empty() {
            return fail("case has no buses".into());
        }
        let mut seen = HashMap::new();
        for (k, bus) in self.buses.iter().enumerate() {
            if bus.id == 0 {
                return fail(format!("bus at position {k} has id 0"));
            }
            if seen.insert(bus.id, k).is_some() {
                return fail(format!("duplicate bus id {}", bus.id));
            }
            if !(bus.v_min > 0.0 && bus.v_min <= bus.v_max) {
                return fail(format!(
                    "bus {}: voltage bounds must satisfy 0 < v_min <= v_max (v_min={}, v_max={})",
                    bus.id, bus.v_min, bus.v_max
                ));
            }
            let values = [bus.p_demand, bus.q_demand, bus.shunt_g, bus.shunt_b];
            if values.iter().any(|v| !v.is_finite()) {
                return fail(format!("bus {}: non-finite demand or shunt", bus.id));
            }
        }
        let refs = self.buses.iter().filter(|b| b.is_reference).count();
        if refs != 1 {
            return fail(format!("expected exactly one reference bus, found {refs}"));
        }
        for (k, gen) in self.generators.iter().enumerate() {
            if !seen.contains_key(&gen.at_bus) {
                return fail(format!("generator {k} references unknown bus {}", gen.at_bus));
            }
            if !(gen.p_min <= gen.p_max) || !(gen.q_min <= gen.q_max) {
                return fail(format!("generator {k}: inverted power bounds"));
            }
            if gen.cost_coeffs.is_empty() || gen.cost_coeffs.len() > 3 {
                return fail(format!(
                    "generator {k}: cost polynomial needs 1-3 coefficients, got {}",
                    gen.cost_coeffs.len()
                ));
            }
            if gen.cost_coeffs.len() == 3 && gen.cost_coeffs[2] < 0.0 {
                return fail(format!("generator {k}: negative quadratic cost coefficient"));
            }
        }
        for (k, br) in self.branches.iter().enumerate() {
            for id in [br.from_bus, br.to_bus] {
                if !seen.contains_key(&id) {
                    return fail(format!("branch {k} references unknown bus {id}"));
                }
            }
            if br.from_bus == br.to_bus {
                return fail(format!("branch {k} connects bus {} to itself", br.from_bus));
            }
            if br.r == 0.0 && br.x == 0.0 {
                return fail(format!("branch {k} has zero impedance"));
            }
            if !(br.tap > 0.0) {
                return fail(format!("branch {k} has non-positive tap {}", br.tap));
            }
            if br.rate < 0.0 {
                return fail(format!("branch {k} has negative rate"));
            }
        }
        Ok(())
    }

    /// True when every bus is reachable from the reference bus through
    /// in-service branches.
    pub fn is_connected(&self) -> bool {
        let map = self.bus_map();
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in self.branches.iter().filter(|b| b.in_service) {
            if let (Some(f), Some(t)) = (map.ordinal(br.from_bus), map.ordinal(br.to_bus)) {
                adj[f].push(t);
                adj[t].push(f);
            }
        }
        let start = self.reference_ordinal().unwrap_or(0);
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            for &m in &adj[k] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn two_bus() -> NetworkCase {
        NetworkCase {
            name: "two-bus".into(),
            base_mva: 100.0,
            buses: vec![
                Bus {
                    id: 1,
                    p_demand: 0.0,
                    q_demand: 0.0,
                    v_min: 0.9,
                    v_max: 1.1,
                    shunt_g: 0.0,
                    shunt_b: 0.0,
                    is_reference: true,
                },
                Bus {
                    id: 2,
                    p_demand: 50.0,
                    q_demand: 10.0,
                    v_min: 0.9,
                    v_max: 1.1,
                    shunt_g: 0.0,
                    shunt_b: 0.0,
                    is_reference: false,
                },
            ],
            generators: vec![Generator {
                at_bus: 1,
                p_min: 0.0,
                p_max: 100.0,
                q_min: -50.0,
                q_max: 50.0,
                cost_coeffs: vec![0.0, 20.0, 0.01],
                in_service: true,
            }],
            branches: vec![Branch {
                from_bus: 1,
                to_bus: 2,
                r: 0.0,
                x: 0.1,
                b_charging: 0.0,
                tap: 1.0,
                shift: 0.0,
                rate: 0.0,
                in_service: true,
            }],
        }
    }

    #[test]
    fn per_unit_round_trip() {
        for &mw in &[0.0, 1e-9, 43.4, 188.4, 332.4, 1e7] {
            let back = from_pu(to_pu(mw, 100.0), 100.0);
            assert!((back - mw).abs() <= 1e-12 * mw.abs().max(1e-300));
        }
    }

    #[test]
    fn generator_cost_polynomial() {
        let g = &two_bus().generators[0];
        assert_eq!(g.cost(0.0), 0.0);
        assert!((g.cost(10.0) - (200.0 + 1.0)).abs() < 1e-12);
        assert!((g.marginal_cost(10.0) - 20.2).abs() < 1e-12);
        assert_eq!(g.cost_curvature(), 0.02);
    }

    #[test]
    fn validation_catches_broken_invariants() {
        let mut c = two_bus();
        c.buses[1].v_min = 1.2;
        assert!(matches!(c.validate(), Err(Error::Validation(_))));

        let mut c = two_bus();
        c.buses[1].is_reference = true;
        assert!(c.validate().is_err());

        let mut c = two_bus();
        c.buses[1].id = 1;
        assert!(c.validate().is_err());

        let mut c = two_bus();
        c.generators[0].at_bus = 7;
        assert!(c.validate().is_err());

        let mut c = two_bus();
        c.branches[0].x = 0.0;
        assert!(c.validate().is_err());

        let mut c = two_bus();
        c.branches[0].tap = 0.0;
        assert!(c.validate().is_err());

        let mut c = two_bus();
        c.generators[0].cost_coeffs = vec![0.0, 1.0, -1.0];
        assert!(c.validate().is_err());

        assert!(two_bus().validate().is_ok());
    }

    #[test]
    fn connectivity() {
        let mut c = two_bus();
        assert!(c.is_connected());
        c.branches[0].in_service = false;
        assert!(!c.is_connected());
    }

    #[test]
    fn bus_map_is_bidirectional() {
        let mut c = two_bus();
        c.buses[0].id = 10;
        c.buses[1].id = 3;
        let map = c.bus_map();
        assert_eq!(map.ordinal(3), Some(1));
        assert_eq!(map.id(0), 10);
        assert_eq!(map.ordinal(1), None);
    }
}
