use num_complex::Complex64;

use crate::{Gate, QsimError, Result};

/// Simulator ceiling: 2^14 amplitudes per instance keeps batched execution
/// over B·L instances in memory at desk scale.
pub const MAX_QUBITS: usize = 14;

/// Full statevector of one quantum register instance.
///
/// Holds 2^n complex amplitudes in f64 precision. Qubit `j` is bit `j` of
/// the basis-state index (qubit 0 = least significant bit).
///
/// ```
/// use qsim::{Gate, StateVector};
///
/// // Bell pair: H on qubit 0, then CNOT(0 → 1)
/// let mut state = StateVector::ground(2).unwrap();
/// state.apply(&Gate::H { target: 0 }).unwrap();
/// state.apply(&Gate::CNOT { control: 0, target: 1 }).unwrap();
///
/// assert!((state.probability(0b00) - 0.5).abs() < 1e-12);
/// assert!((state.probability(0b11) - 0.5).abs() < 1e-12);
/// assert!(state.expectation_z(0).unwrap().abs() < 1e-12);
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Ground state |0...0⟩ of an `n_qubits` register.
    pub fn ground(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QsimError::QubitCountOutOfRange {
                n_qubits,
                max: MAX_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Builds a state directly from amplitudes (used by the dense oracle
    /// and tests; the caller is responsible for normalization).
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QsimError::QubitCountOutOfRange {
                n_qubits,
                max: MAX_QUBITS,
            });
        }
        assert_eq!(amps.len(), 1 << n_qubits, "amplitude count must be 2^n");
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Σ |amp|², which every gate application preserves.
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies one gate in place.
    ///
    /// In-place for efficiency; the semantic contract is value-in/value-out
    /// (see [`apply_gate`] for the pure form).
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::H { target } => {
                let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
                self.map_pairs(target, |a0, a1| {
                    ((a0 + a1) * inv_sqrt2, (a0 - a1) * inv_sqrt2)
                });
            }
            Gate::RY { target, angle } => {
                let (sin, cos) = (angle / 2.0).sin_cos();
                self.map_pairs(target, |a0, a1| (a0 * cos - a1 * sin, a0 * sin + a1 * cos));
            }
            Gate::RZ { target, angle } => {
                let phase0 = Complex64::from_polar(1.0, -angle / 2.0);
                let phase1 = Complex64::from_polar(1.0, angle / 2.0);
                self.map_pairs(target, |a0, a1| (a0 * phase0, a1 * phase1));
            }
            Gate::CNOT { control, target } => {
                let cbit = 1usize << control;
                let tbit = 1usize << target;
                for i in 0..self.amps.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies a whole gate sequence in circuit order.
    pub fn apply_all(&mut self, gates: &[Gate]) -> Result<()> {
        for g in gates {
            self.apply(g)?;
        }
        Ok(())
    }

    /// ⟨Z_j⟩ = P₀^(j) − P₁^(j), the per-qubit Pauli-Z expectation computed
    /// by probability weighting. Always in [−1, +1] up to float error.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(QsimError::QubitIndexOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let bit = 1usize << qubit;
        let mut expectation = 0.0;
        for (i, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            expectation += if i & bit == 0 { p } else { -p };
        }
        Ok(expectation)
    }

    /// Vector of ⟨Z_j⟩ for every qubit, index 0 first.
    pub fn measure_all_z(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits];
        for (i, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            for (j, slot) in out.iter_mut().enumerate() {
                *slot += if i & (1 << j) == 0 { p } else { -p };
            }
        }
        out
    }

    /// `|amps[index]|²` for a single basis state.
    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    fn map_pairs(
        &mut self,
        target: usize,
        f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64),
    ) {
        let bit = 1usize << target;
        for i0 in 0..self.amps.len() {
            if i0 & bit == 0 {
                let i1 = i0 | bit;
                let (a0, a1) = (self.amps[i0], self.amps[i1]);
                let (b0, b1) = f(a0, a1);
                self.amps[i0] = b0;
                self.amps[i1] = b1;
            }
        }
    }
}

/// Pure form of gate application: clones, applies, returns.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut next = state.clone();
    next.apply(gate)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn ground_state_examples() {
        let s = StateVector::ground(2).unwrap();
        assert_eq!(s.amps(), &[re(1.0), re(0.0), re(0.0), re(0.0)]);
        let s = StateVector::ground(1).unwrap();
        assert_eq!(s.amps(), &[re(1.0), re(0.0)]);
        let s = StateVector::ground(10).unwrap();
        assert_eq!(s.dim(), 1024);
        assert_eq!(s.amps()[0], re(1.0));
        assert!(s.amps()[1..].iter().all(|a| *a == re(0.0)));
    }

    #[test]
    fn ground_state_rejects_bad_counts() {
        assert!(StateVector::ground(0).is_err());
        assert!(StateVector::ground(15).is_err());
        assert!(StateVector::ground(14).is_ok());
    }

    #[test]
    fn hadamard_on_ground() {
        let mut s = StateVector::ground(1).unwrap();
        s.apply(&Gate::H { target: 0 }).unwrap();
        assert!((s.amps()[0] - re(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((s.amps()[1] - re(FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn ry_pi_flips_ground() {
        let mut s = StateVector::ground(1).unwrap();
        s.apply(&Gate::RY {
            target: 0,
            angle: PI,
        })
        .unwrap();
        assert!(s.amps()[0].norm() < 1e-15);
        assert!((s.amps()[1] - re(1.0)).norm() < 1e-15);
    }

    #[test]
    fn cnot_makes_bell_state() {
        // (|00⟩+|10⟩)/√2 with control = qubit 0 → (|00⟩+|11⟩)/√2
        let mut s = StateVector::ground(2).unwrap();
        s.apply(&Gate::H { target: 0 }).unwrap();
        s.apply(&Gate::CNOT {
            control: 0,
            target: 1,
        })
        .unwrap();
        assert!((s.amps()[0b00] - re(FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(s.amps()[0b01].norm() < 1e-15);
        assert!(s.amps()[0b10].norm() < 1e-15);
        assert!((s.amps()[0b11] - re(FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn expectation_z_basis_states() {
        let s = StateVector::ground(1).unwrap();
        assert_eq!(s.expectation_z(0).unwrap(), 1.0);
        let mut flipped = s;
        flipped
            .apply(&Gate::RY {
                target: 0,
                angle: PI,
            })
            .unwrap();
        assert!((flipped.expectation_z(0).unwrap() + 1.0).abs() < 1e-12);
    }

    /// ⟨Z⟩ of RZ(φ)·RY(θ)·H|0⟩ is −sin θ for any (θ, φ); expected values
    /// here come from explicit 2×2 matrix algebra: the amplitudes are
    /// e^{∓iφ/2}(cos(θ/2) ∓ sin(θ/2))/√2, so P₀ = (1−sinθ)/2, P₁ = (1+sinθ)/2.
    #[test]
    fn expectation_z_closed_form_after_encoding() {
        for &(theta, phi) in &[
            (0.3, 1.2),
            (2.7, -0.4),
            (PI / 2.0, 0.0),
            (0.0, 2.2),
            (-1.1, 0.9),
        ] {
            let mut s = StateVector::ground(1).unwrap();
            s.apply(&Gate::H { target: 0 }).unwrap();
            s.apply(&Gate::RY { target: 0, angle: theta }).unwrap();
            s.apply(&Gate::RZ { target: 0, angle: phi }).unwrap();

            // independent 2x2 oracle
            let h = [
                [re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)],
                [re(FRAC_1_SQRT_2), re(-FRAC_1_SQRT_2)],
            ];
            let (sin, cos) = (theta / 2.0).sin_cos();
            let ry = [[re(cos), re(-sin)], [re(sin), re(cos)]];
            let rz = [
                [Complex64::from_polar(1.0, -phi / 2.0), re(0.0)],
                [re(0.0), Complex64::from_polar(1.0, phi / 2.0)],
            ];
            let mut v = [re(1.0), re(0.0)];
            for m in [h, ry, rz] {
                v = [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]];
            }
            let oracle = v[0].norm_sqr() - v[1].norm_sqr();

            let got = s.expectation_z(0).unwrap();
            assert!((got - oracle).abs() < 1e-12);
            assert!((got - (-theta.sin())).abs() < 1e-12);
        }
    }

    #[test]
    fn expectation_z_rejects_bad_index() {
        let s = StateVector::ground(2).unwrap();
        assert!(s.expectation_z(2).is_err());
    }

    #[test]
    fn measure_all_z_examples() {
        let s = StateVector::ground(2).unwrap();
        assert_eq!(s.measure_all_z(), vec![1.0, 1.0]);

        let mut bell = StateVector::ground(2).unwrap();
        bell.apply(&Gate::H { target: 0 }).unwrap();
        bell.apply(&Gate::CNOT {
            control: 0,
            target: 1,
        })
        .unwrap();
        for m in bell.measure_all_z() {
            assert!(m.abs() < 1e-12, "Bell marginals are maximally mixed");
        }
    }

    /// Against brute-force enumeration of all 8 basis states.
    #[test]
    fn measure_all_z_matches_per_qubit_probability_sums() {
        let mut s = StateVector::ground(3).unwrap();
        let circuit = [
            Gate::H { target: 0 },
            Gate::RY { target: 1, angle: 0.7 },
            Gate::CNOT { control: 0, target: 2 },
            Gate::RZ { target: 2, angle: 1.9 },
            Gate::RY { target: 0, angle: -0.4 },
            Gate::CNOT { control: 2, target: 1 },
            Gate::H { target: 2 },
        ];
        s.apply_all(&circuit).unwrap();

        let measured = s.measure_all_z();
        for j in 0..3 {
            let mut p0 = 0.0;
            let mut p1 = 0.0;
            for idx in 0..8usize {
                let p = s.probability(idx);
                if idx & (1 << j) == 0 {
                    p0 += p;
                } else {
                    p1 += p;
                }
            }
            assert!((measured[j] - (p0 - p1)).abs() < 1e-14);
            assert!(measured[j].abs() <= 1.0 + 1e-12);
        }
    }
}
