use qsim::{Gate, StateVector};

use crate::math::sigmoid;
use crate::{QprojError, Result};

/// Maps 2·n_q compressed features to rotation angles: θ_j = π·σ(x_j),
/// φ_j = π·σ(x_{n_q+j}). All angles land strictly inside (0, π).
pub fn encode_angles(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert!(x.len() % 2 == 0, "encoder input must have 2·n_q features");
    let n_q = x.len() / 2;
    let theta = x[..n_q].iter().map(|&v| std::f64::consts::PI * sigmoid(v)).collect();
    let phi = x[n_q..].iter().map(|&v| std::f64::consts::PI * sigmoid(v)).collect();
    (theta, phi)
}

/// Builds the encoded product state ⊗_j RZ(φ_j)·RY(θ_j)·H|0⟩_j.
pub fn build_encoded_state(theta: &[f64], phi: &[f64], n_qubits: usize) -> Result<StateVector> {
    if theta.len() != n_qubits || phi.len() != n_qubits {
        return Err(QprojError::AngleCountMismatch {
            expected: n_qubits,
            got: theta.len().min(phi.len()),
        });
    }
    let mut state = StateVector::ground(n_qubits)?;
    for j in 0..n_qubits {
        state.apply(&Gate::H { target: j })?;
        state.apply(&Gate::RY {
            target: j,
            angle: theta[j],
        })?;
        state.apply(&Gate::RZ {
            target: j,
            angle: phi[j],
        })?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn zero_input_gives_half_pi() {
        let (theta, phi) = encode_angles(&[0.0, 0.0, 0.0, 0.0]);
        for a in theta.iter().chain(&phi) {
            assert!((a - PI / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_limits_pin_the_angle_range() {
        // x = ±20 saturates to within 1e-8 of the limits while staying
        // representably inside (0, π)
        let (theta, _) = encode_angles(&[20.0, -20.0]);
        assert!((theta[0] - PI).abs() < 1e-7);
        assert!(theta[0] < PI);
        let (theta, _) = encode_angles(&[-20.0, 0.0]);
        assert!(theta[0] > 0.0 && theta[0] < 1e-7);
    }

    /// tanh-compressed features live in (−1, 1), so the encoded angles stay
    /// inside (π·σ(−1), π·σ(1)).
    #[test]
    fn tanh_range_maps_into_interior_band() {
        let lo = PI * sigmoid(-1.0);
        let hi = PI * sigmoid(1.0);
        assert!((lo - 0.2689414213699951 * PI).abs() < 1e-12);
        assert!((hi - 0.7310585786300049 * PI).abs() < 1e-12);
        let (theta, phi) = encode_angles(&[-0.999, 0.999, 0.5, -0.5]);
        for a in theta.iter().chain(&phi) {
            assert!(*a > lo - 1e-9 && *a < hi + 1e-9);
        }
    }

    #[test]
    fn zero_angles_give_uniform_superposition() {
        // θ = φ = 0 leaves ⊗|+⟩: every amplitude 1/√(2^n).
        let state = build_encoded_state(&[0.0; 3], &[0.0; 3], 3).unwrap();
        let expected = 1.0 / (8.0f64).sqrt();
        for amp in state.amps() {
            assert!((amp.re - expected).abs() < 1e-12);
            assert!(amp.im.abs() < 1e-12);
        }
    }

    /// RY(π/2)·H|0⟩ = [0, 1]: the two rotations compose to a bit flip.
    /// Expected amplitudes from 2×2 algebra:
    /// (cos(π/4) − sin(π/4), cos(π/4) + sin(π/4))/√2 = (0, 1).
    #[test]
    fn single_qubit_closed_form() {
        let state = build_encoded_state(&[PI / 2.0], &[0.0], 1).unwrap();
        assert!(state.amps()[0].norm() < 1e-12);
        assert!((state.amps()[1].re - 1.0).abs() < 1e-12);
    }

    /// ⟨Z_j⟩ of the encoded state is −sin θ_j, independent of φ.
    #[test]
    fn measured_expectations_follow_minus_sine() {
        let theta = [0.3, 1.1, 2.9, 0.77];
        let phi = [2.0, 0.1, 1.4, 2.6];
        let state = build_encoded_state(&theta, &phi, 4).unwrap();
        let measured = state.measure_all_z();
        for (m, t) in measured.iter().zip(&theta) {
            assert!((m + t.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_count_mismatch_is_rejected() {
        assert!(build_encoded_state(&[0.1, 0.2], &[0.3], 2).is_err());
    }
}
