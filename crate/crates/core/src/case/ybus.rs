use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Branch, NetworkCase};

/// Nodal admittance matrix split into conductance and susceptance parts,
/// indexed by internal bus ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    pub n: usize,
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl AdmittanceMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, g: DMatrix::zeros(n, n), b: DMatrix::zeros(n, n) }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.g[(i, j)], self.b[(i, j)])
    }

    fn add(&mut self, i: usize, j: usize, y: Complex64) {
        self.g[(i, j)] += y.re;
        self.b[(i, j)] += y.im;
    }
}

/// Two-port admittances of a branch pi-model with the tap on the from side.
///
/// `I_from = yff V_from + yft V_to`, `I_to = ytf V_from + ytt V_to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAdmittance {
    pub from: usize,
    pub to: usize,
    pub yff: Complex64,
    pub yft: Complex64,
    pub ytf: Complex64,
    pub ytt: Complex64,
}

impl BranchAdmittance {
    pub fn new(branch: &Branch, from: usize, to: usize) -> Self {
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(branch.r, branch.x);
        let charging = Complex64::new(0.0, branch.b_charging / 2.0);
        let tap = Complex64::from_polar(branch.tap, branch.shift);
        let ytt = ys + charging;
        Self { from, to, yff: ytt / (branch.tap * branch.tap), yft: -ys / tap.conj(), ytf: -ys / tap, ytt }
    }
}

/// Builds the nodal admittance matrix of the in-service network, with bus
/// shunts on the diagonal.
///
/// Assumes `case` has been validated.
pub fn build_ybus(case: &NetworkCase) -> AdmittanceMatrix {
    let map = case.bus_map();
    let mut y = AdmittanceMatrix::zeros(case.buses.len());
    for (k, bus) in case.buses.iter().enumerate() {
        y.add(k, k, Complex64::new(bus.shunt_g, bus.shunt_b) / case.base_mva);
    }
    for br in case.branches.iter().filter(|b| b.in_service) {
        let (f, t) = match (map.ordinal(br.from_bus), map.ordinal(br.to_bus)) {
            (Some(f), Some(t)) => (f, t),
            _ => continue,
        };
        let a = BranchAdmittance::new(br, f, t);
        y.add(f, f, a.yff);
        y.add(f, t, a.yft);
        y.add(t, f, a.ytf);
        y.add(t, t, a.ytt);
    }
    y
}
