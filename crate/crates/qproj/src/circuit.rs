//! Full bound circuit (encoding stage + ansatz) and the exact adjoint
//! differentiation walk used as the production gradient path.

use num_complex::Complex64;
use qsim::{Gate, StateVector};

use crate::ansatz::{AnsatzDescriptor, AnsatzSlot, RotationAxis};
use crate::{QprojError, Result};

/// Which parameter a rotation gate is bound to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamBinding {
    /// Encoding RY angle of qubit j (θ_j).
    EncTheta(usize),
    /// Encoding RZ angle of qubit j (φ_j).
    EncPhi(usize),
    /// Ansatz parameter k of the flat trainable vector.
    Ansatz(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundGate {
    pub gate: Gate,
    pub binding: Option<ParamBinding>,
}

/// Assembles the complete per-row circuit: H + RY(θ_j) + RZ(φ_j) per qubit,
/// then `n_layers` repetitions of the ansatz template with consecutive
/// parameters bound to its rotation slots.
pub fn full_circuit(
    enc_theta: &[f64],
    enc_phi: &[f64],
    ansatz: &AnsatzDescriptor,
    theta: &[f64],
) -> Result<Vec<BoundGate>> {
    let n_q = ansatz.n_qubits();
    if enc_theta.len() != n_q || enc_phi.len() != n_q {
        return Err(QprojError::AngleCountMismatch {
            expected: n_q,
            got: enc_theta.len().min(enc_phi.len()),
        });
    }
    if theta.len() != ansatz.trainable_param_count() {
        return Err(QprojError::ParamCountMismatch {
            expected: ansatz.trainable_param_count(),
            got: theta.len(),
        });
    }

    let mut gates = Vec::with_capacity(3 * n_q + ansatz.gate_count());
    for j in 0..n_q {
        gates.push(BoundGate {
            gate: Gate::H { target: j },
            binding: None,
        });
        gates.push(BoundGate {
            gate: Gate::RY {
                target: j,
                angle: enc_theta[j],
            },
            binding: Some(ParamBinding::EncTheta(j)),
        });
        gates.push(BoundGate {
            gate: Gate::RZ {
                target: j,
                angle: enc_phi[j],
            },
            binding: Some(ParamBinding::EncPhi(j)),
        });
    }

    let mut next_param = 0usize;
    for _ in 0..ansatz.n_layers() {
        for slot in ansatz.layer_slots() {
            match *slot {
                AnsatzSlot::Rotation { axis, qubit } => {
                    let angle = theta[next_param];
                    let gate = match axis {
                        RotationAxis::Y => Gate::RY {
                            target: qubit,
                            angle,
                        },
                        RotationAxis::Z => Gate::RZ {
                            target: qubit,
                            angle,
                        },
                    };
                    gates.push(BoundGate {
                        gate,
                        binding: Some(ParamBinding::Ansatz(next_param)),
                    });
                    next_param += 1;
                }
                AnsatzSlot::Entangler { control, target } => {
                    gates.push(BoundGate {
                        gate: Gate::CNOT { control, target },
                        binding: None,
                    });
                }
            }
        }
    }
    debug_assert_eq!(next_param, theta.len());
    Ok(gates)
}

/// Runs a bound circuit from the ground state.
pub fn run_circuit(circuit: &[BoundGate], n_qubits: usize) -> Result<StateVector> {
    let mut state = StateVector::ground(n_qubits)?;
    for bg in circuit {
        state.apply(&bg.gate)?;
    }
    Ok(state)
}

/// The ansatz-only gate list with parameters bound, in circuit order.
pub fn ansatz_gates(ansatz: &AnsatzDescriptor, theta: &[f64]) -> Result<Vec<Gate>> {
    if theta.len() != ansatz.trainable_param_count() {
        return Err(QprojError::ParamCountMismatch {
            expected: ansatz.trainable_param_count(),
            got: theta.len(),
        });
    }
    let mut gates = Vec::with_capacity(ansatz.gate_count());
    let mut next_param = 0usize;
    for _ in 0..ansatz.n_layers() {
        for slot in ansatz.layer_slots() {
            match *slot {
                AnsatzSlot::Rotation { axis, qubit } => {
                    let angle = theta[next_param];
                    next_param += 1;
                    gates.push(match axis {
                        RotationAxis::Y => Gate::RY { target: qubit, angle },
                        RotationAxis::Z => Gate::RZ { target: qubit, angle },
                    });
                }
                AnsatzSlot::Entangler { control, target } => {
                    gates.push(Gate::CNOT { control, target });
                }
            }
        }
    }
    Ok(gates)
}

/// Applies the variational layers to an already-prepared state.
pub fn apply_ansatz(
    state: &StateVector,
    ansatz: &AnsatzDescriptor,
    theta: &[f64],
) -> Result<StateVector> {
    let gates = ansatz_gates(ansatz, theta)?;
    let mut evolved = state.clone();
    evolved.apply_all(&gates)?;
    Ok(evolved)
}

/// Debug text form of a bound circuit (the qsim one-gate-per-line format).
pub fn circuit_to_text(circuit: &[BoundGate]) -> String {
    let gates: Vec<Gate> = circuit.iter().map(|bg| bg.gate).collect();
    qsim::format_circuit(&gates)
}

/// Gradients of a linear functional Σ_j λ_j⟨Z_j⟩ of the final state with
/// respect to every bound rotation angle.
#[derive(Debug, Clone, Default)]
pub struct CircuitGradients {
    pub enc_theta: Vec<f64>,
    pub enc_phi: Vec<f64>,
    pub ansatz: Vec<f64>,
}

/// Exact adjoint differentiation through the statevector.
///
/// For L = Σ_j λ_j ⟨ψ|Z_j|ψ⟩ and a rotation gate U(a) = exp(−i·a/2·P), the
/// derivative contribution at that gate is Im⟨Φ_k|P ψ_k⟩, where ψ_k is the
/// state just after gate k and Φ_k is (Σ λ_j Z_j)ψ_final pulled back through
/// the inverse of every later gate. One forward pass plus one backward walk
/// yields every angle gradient; cost O(gates · 2^n) per row.
pub fn adjoint_gradients(
    circuit: &[BoundGate],
    n_qubits: usize,
    lambda: &[f64],
    ansatz_param_count: usize,
) -> Result<CircuitGradients> {
    assert_eq!(lambda.len(), n_qubits, "one weight per measured qubit");

    let mut psi = run_circuit(circuit, n_qubits)?;
    let mut phi = weighted_z(&psi, lambda);

    let mut grads = CircuitGradients {
        enc_theta: vec![0.0; n_qubits],
        enc_phi: vec![0.0; n_qubits],
        ansatz: vec![0.0; ansatz_param_count],
    };

    for bg in circuit.iter().rev() {
        if let Some(binding) = bg.binding {
            let value = match bg.gate {
                Gate::RY { target, .. } => im_phi_pauli_y_psi(&phi, &psi, target),
                Gate::RZ { target, .. } => im_phi_pauli_z_psi(&phi, &psi, target),
                _ => unreachable!("only rotations carry bindings"),
            };
            match binding {
                ParamBinding::EncTheta(j) => grads.enc_theta[j] += value,
                ParamBinding::EncPhi(j) => grads.enc_phi[j] += value,
                ParamBinding::Ansatz(k) => grads.ansatz[k] += value,
            }
        }
        let inverse = bg.gate.dagger();
        psi.apply(&inverse)?;
        phi.apply(&inverse)?;
    }
    Ok(grads)
}

/// Φ = (Σ_j λ_j Z_j) ψ, a diagonal weighting of the amplitudes.
fn weighted_z(psi: &StateVector, lambda: &[f64]) -> StateVector {
    let mut weighted = psi.clone();
    for (i, amp) in weighted.amps_mut().iter_mut().enumerate() {
        let mut w = 0.0;
        for (j, lam) in lambda.iter().enumerate() {
            w += if i & (1 << j) == 0 { *lam } else { -*lam };
        }
        *amp *= w;
    }
    weighted
}

/// Im⟨Φ|σ_y^{(t)} ψ⟩ without materializing σ_y ψ.
fn im_phi_pauli_y_psi(phi: &StateVector, psi: &StateVector, target: usize) -> f64 {
    let bit = 1usize << target;
    let (phi_amps, psi_amps) = (phi.amps(), psi.amps());
    let mut acc = Complex64::new(0.0, 0.0);
    let minus_i = Complex64::new(0.0, -1.0);
    let plus_i = Complex64::new(0.0, 1.0);
    for i0 in 0..psi_amps.len() {
        if i0 & bit == 0 {
            let i1 = i0 | bit;
            // (σ_y ψ)[i0] = −i ψ[i1]; (σ_y ψ)[i1] = +i ψ[i0]
            acc += phi_amps[i0].conj() * (minus_i * psi_amps[i1]);
            acc += phi_amps[i1].conj() * (plus_i * psi_amps[i0]);
        }
    }
    acc.im
}

/// Im⟨Φ|σ_z^{(t)} ψ⟩.
fn im_phi_pauli_z_psi(phi: &StateVector, psi: &StateVector, target: usize) -> f64 {
    let bit = 1usize << target;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (p, s)) in phi.amps().iter().zip(psi.amps()).enumerate() {
        let signed = if i & bit == 0 { *s } else { -*s };
        acc += p.conj() * signed;
    }
    acc.im
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::AnsatzVariant;

    /// Single qubit, single RY(θ) on |0⟩: ⟨Z⟩ = cos θ, gradient −sin θ.
    #[test]
    fn adjoint_matches_single_rotation_closed_form() {
        let ansatz = AnsatzDescriptor::custom(
            1,
            1,
            vec![AnsatzSlot::Rotation {
                axis: RotationAxis::Y,
                qubit: 0,
            }],
        )
        .unwrap();
        for &theta in &[0.0, 0.4, 1.3, 2.9, -0.7] {
            // Encoding angles pinned so only the ansatz rotation matters:
            // H then RY(θ_enc=0), RZ(0) leave |+⟩... instead build the bare
            // rotation circuit directly.
            let circuit = vec![BoundGate {
                gate: Gate::RY {
                    target: 0,
                    angle: theta,
                },
                binding: Some(ParamBinding::Ansatz(0)),
            }];
            let grads = adjoint_gradients(&circuit, 1, &[1.0], 1).unwrap();
            assert!(
                (grads.ansatz[0] + theta.sin()).abs() < 1e-12,
                "theta = {theta}"
            );
            let _ = ansatz;
        }
    }

    /// Trailing RZ commutes with every Z measurement: exact zero gradient.
    #[test]
    fn commuting_parameter_has_zero_gradient() {
        let circuit = vec![
            BoundGate {
                gate: Gate::H { target: 0 },
                binding: None,
            },
            BoundGate {
                gate: Gate::RY {
                    target: 0,
                    angle: 0.9,
                },
                binding: Some(ParamBinding::Ansatz(0)),
            },
            BoundGate {
                gate: Gate::RZ {
                    target: 0,
                    angle: 1.7,
                },
                binding: Some(ParamBinding::Ansatz(1)),
            },
        ];
        let grads = adjoint_gradients(&circuit, 1, &[0.8], 2).unwrap();
        assert!(grads.ansatz[1].abs() < 1e-10);
    }

    #[test]
    fn full_circuit_layout_and_counts() {
        let ansatz = AnsatzDescriptor::new(AnsatzVariant::B150M, 3, 2).unwrap();
        let theta = vec![0.1; ansatz.trainable_param_count()];
        let circuit = full_circuit(&[0.2; 3], &[0.3; 3], &ansatz, &theta).unwrap();
        // 9 encoding gates + 2 layers × (9 rotations + 3 ring CNOTs)
        assert_eq!(circuit.len(), 9 + 24);
        let bound = circuit.iter().filter(|g| g.binding.is_some()).count();
        assert_eq!(bound, 6 + 18);
    }

    #[test]
    fn full_circuit_rejects_wrong_param_len() {
        let ansatz = AnsatzDescriptor::new(AnsatzVariant::A8M, 2, 1).unwrap();
        let err = full_circuit(&[0.0; 2], &[0.0; 2], &ansatz, &[0.0; 3]).unwrap_err();
        assert_eq!(
            err,
            QprojError::ParamCountMismatch {
                expected: 4,
                got: 3
            }
        );
    }
}
