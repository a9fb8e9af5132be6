use num_complex::Complex64;

use crate::{Gate, QsimError, Result, StateVector};

/// The dense oracle materializes the full 2^n × 2^n matrix, so it is
/// deliberately capped well below the simulator ceiling.
pub const DENSE_ORACLE_MAX_QUBITS: usize = 6;

/// Full circuit unitary, built column by column for oracle tests.
#[derive(Debug, Clone)]
pub struct DenseUnitary {
    dim: usize,
    /// Column-major: `cols[c][r]` is entry (r, c).
    cols: Vec<Vec<Complex64>>,
}

impl DenseUnitary {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.cols[col][row]
    }

    /// U applied to a state: matrix-vector product.
    pub fn apply(&self, state: &StateVector) -> StateVector {
        assert_eq!(state.dim(), self.dim, "state dimension mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (c, amp) in state.amps().iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            for r in 0..self.dim {
                out[r] += self.cols[c][r] * amp;
            }
        }
        let n_qubits = self.dim.trailing_zeros() as usize;
        StateVector::from_amplitudes(n_qubits, out).expect("dim within oracle scope")
    }

    /// Max deviation of U†U from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                let mut dot = Complex64::new(0.0, 0.0);
                for r in 0..self.dim {
                    dot += self.cols[a][r].conj() * self.cols[b][r];
                }
                let expected = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - Complex64::new(expected, 0.0)).norm());
            }
        }
        worst
    }
}

/// Builds the complete circuit unitary as the in-order product of the
/// per-gate embeddings. Each column starts as a basis state and is pushed
/// through the ordinary gate kernels, so the oracle shares no matrix code
/// with the statevector path it checks.
pub fn dense_unitary(gates: &[Gate], n_qubits: usize) -> Result<DenseUnitary> {
    if n_qubits == 0 || n_qubits > DENSE_ORACLE_MAX_QUBITS {
        return Err(QsimError::OracleTooLarge {
            n_qubits,
            max: DENSE_ORACLE_MAX_QUBITS,
        });
    }
    for g in gates {
        g.validate(n_qubits)?;
    }
    let dim = 1usize << n_qubits;
    let mut cols = Vec::with_capacity(dim);
    for c in 0..dim {
        let mut col = vec![Complex64::new(0.0, 0.0); dim];
        col[c] = Complex64::new(1.0, 0.0);
        cols.push(apply_dense(col, gates, n_qubits));
    }
    Ok(DenseUnitary { dim, cols })
}

/// Reference single-column evolution. Intentionally re-derives the gate
/// matrices (Hadamard, RY, RZ, CNOT truth table) instead of calling
/// `StateVector::apply`.
fn apply_dense(mut col: Vec<Complex64>, gates: &[Gate], _n_qubits: usize) -> Vec<Complex64> {
    let dim = col.len();
    for g in gates {
        match *g {
            Gate::H { target } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let m = [
                    [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
                    [Complex64::new(s, 0.0), Complex64::new(-s, 0.0)],
                ];
                two_by_two(&mut col, target, &m);
            }
            Gate::RY { target, angle } => {
                let (sin, cos) = (angle / 2.0).sin_cos();
                let m = [
                    [Complex64::new(cos, 0.0), Complex64::new(-sin, 0.0)],
                    [Complex64::new(sin, 0.0), Complex64::new(cos, 0.0)],
                ];
                two_by_two(&mut col, target, &m);
            }
            Gate::RZ { target, angle } => {
                let m = [
                    [Complex64::from_polar(1.0, -angle / 2.0), Complex64::new(0.0, 0.0)],
                    [Complex64::new(0.0, 0.0), Complex64::from_polar(1.0, angle / 2.0)],
                ];
                two_by_two(&mut col, target, &m);
            }
            Gate::CNOT { control, target } => {
                let mut next = vec![Complex64::new(0.0, 0.0); dim];
                for (i, amp) in col.iter().enumerate() {
                    let j = if i & (1 << control) != 0 {
                        i ^ (1 << target)
                    } else {
                        i
                    };
                    next[j] = *amp;
                }
                col = next;
            }
        }
    }
    col
}

fn two_by_two(col: &mut [Complex64], target: usize, m: &[[Complex64; 2]; 2]) {
    let bit = 1usize << target;
    for i0 in 0..col.len() {
        if i0 & bit == 0 {
            let i1 = i0 | bit;
            let (a0, a1) = (col[i0], col[i1]);
            col[i0] = m[0][0] * a0 + m[0][1] * a1;
            col[i1] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}
