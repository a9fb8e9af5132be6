//! Tiny deterministic PRNG (SplitMix64) shared by weight init, sampling
//! and randomized tests. Self-contained so seeded results never shift
//! underneath us with a dependency bump.

use crate::Gate;

#[derive(Debug, Clone)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Random circuit over the supported gate set, used by the oracle suites
/// and the gradcheck command.
pub fn random_circuit(rng: &mut Prng, n_qubits: usize, len: usize) -> Vec<Gate> {
    let mut gates = Vec::with_capacity(len);
    for _ in 0..len {
        let target = rng.below(n_qubits);
        let gate = match rng.below(if n_qubits > 1 { 4 } else { 3 }) {
            0 => Gate::H { target },
            1 => Gate::RY {
                target,
                angle: rng.uniform(-std::f64::consts::PI, std::f64::consts::PI),
            },
            2 => Gate::RZ {
                target,
                angle: rng.uniform(-std::f64::consts::PI, std::f64::consts::PI),
            },
            _ => {
                let control = (target + 1 + rng.below(n_qubits - 1)) % n_qubits;
                Gate::CNOT { control, target }
            }
        };
        gates.push(gate);
    }
    gates
}
