use serde::{Deserialize, Serialize};

/// Offsets of the variable blocks in the NLP vector, in order:
/// angles, magnitudes, generator P, generator Q, load shed, z+, z-.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub n_bus: usize,
    pub n_gen: usize,
    pub n_load: usize,
    pub n_pairs: usize,
}

impl VariableLayout {
    pub fn theta(&self, bus: usize) -> usize {
        bus
    }
    pub fn v(&self, bus: usize) -> usize {
        self.n_bus + bus
    }
    pub fn p_gen(&self, g: usize) -> usize {
        2 * self.n_bus + g
    }
    pub fn q_gen(&self, g: usize) -> usize {
        2 * self.n_bus + self.n_gen + g
    }
    pub fn shed(&self, load: usize) -> usize {
        2 * self.n_bus + 2 * self.n_gen + load
    }
    pub fn z_plus(&self, pair: usize) -> usize {
        2 * self.n_bus + 2 * self.n_gen + self.n_load + pair
    }
    pub fn z_minus(&self, pair: usize) -> usize {
        self.z_plus(0) + self.n_pairs + pair
    }
    pub fn len(&self) -> usize {
        2 * self.n_bus + 2 * self.n_gen + self.n_load + 2 * self.n_pairs
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
