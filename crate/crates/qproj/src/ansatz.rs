use crate::{QprojError, Result};

/// Which repeated layer template the variational circuit uses.
///
/// `A8M` is the light two-rotation layer (one RY and one RZ parameter per
/// qubit, interleaved with two nearest-neighbour CNOT chains); with the
/// default two layers and ten qubits it carries exactly 40 trainable
/// parameters. `B150M` is the canonical ZYZ + ring-CNOT layer: three
/// parameters per qubit per layer, ring entangler 0→1→…→(n−1)→0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzVariant {
    A8M,
    B150M,
    Custom,
}

impl AnsatzVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "A8M" => Some(Self::A8M),
            "B150M" => Some(Self::B150M),
            "CUSTOM" => Some(Self::Custom),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::A8M => "A8M",
            Self::B150M => "B150M",
            Self::Custom => "Custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationAxis {
    Y,
    Z,
}

/// One slot of a layer template: either a trainable rotation (consumes one
/// parameter) or a fixed CNOT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnsatzSlot {
    Rotation { axis: RotationAxis, qubit: usize },
    Entangler { control: usize, target: usize },
}

/// Layer template repeated `n_layers` times, with parameter bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct AnsatzDescriptor {
    variant: AnsatzVariant,
    n_qubits: usize,
    n_layers: usize,
    layer: Vec<AnsatzSlot>,
}

impl AnsatzDescriptor {
    pub fn new(variant: AnsatzVariant, n_qubits: usize, n_layers: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(QprojError::InvalidAnsatz {
                reason: "qubit count must be positive".into(),
            });
        }
        if n_layers == 0 {
            return Err(QprojError::InvalidAnsatz {
                reason: "layer count must be positive".into(),
            });
        }
        let layer = match variant {
            AnsatzVariant::A8M => a8m_layer(n_qubits),
            AnsatzVariant::B150M => b150m_layer(n_qubits),
            AnsatzVariant::Custom => {
                return Err(QprojError::InvalidAnsatz {
                    reason: "custom variant requires an explicit layer template".into(),
                })
            }
        };
        let descriptor = Self {
            variant,
            n_qubits,
            n_layers,
            layer,
        };
        // Parameter-count identities hold by construction; verify at build
        // time so a template edit cannot silently drift.
        match variant {
            AnsatzVariant::A8M => {
                assert_eq!(descriptor.params_per_layer(), 2 * n_qubits);
            }
            AnsatzVariant::B150M => {
                assert_eq!(descriptor.params_per_layer(), 3 * n_qubits);
            }
            AnsatzVariant::Custom => {}
        }
        Ok(descriptor)
    }

    /// Descriptor from an explicit layer template.
    pub fn custom(n_qubits: usize, n_layers: usize, layer: Vec<AnsatzSlot>) -> Result<Self> {
        for slot in &layer {
            let valid = match *slot {
                AnsatzSlot::Rotation { qubit, .. } => qubit < n_qubits,
                AnsatzSlot::Entangler { control, target } => {
                    control < n_qubits && target < n_qubits && control != target
                }
            };
            if !valid {
                return Err(QprojError::InvalidAnsatz {
                    reason: format!("slot {slot:?} invalid for {n_qubits} qubits"),
                });
            }
        }
        Ok(Self {
            variant: AnsatzVariant::Custom,
            n_qubits,
            n_layers,
            layer,
        })
    }

    pub fn variant(&self) -> AnsatzVariant {
        self.variant
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn layer_slots(&self) -> &[AnsatzSlot] {
        &self.layer
    }

    pub fn params_per_layer(&self) -> usize {
        self.layer
            .iter()
            .filter(|s| matches!(s, AnsatzSlot::Rotation { .. }))
            .count()
    }

    pub fn trainable_param_count(&self) -> usize {
        self.params_per_layer() * self.n_layers
    }

    /// Total ansatz gates over all layers (rotations + CNOTs; the encoding
    /// stage is not part of the ansatz).
    pub fn gate_count(&self) -> usize {
        self.layer.len() * self.n_layers
    }

    pub fn cnot_count(&self) -> usize {
        self.layer
            .iter()
            .filter(|s| matches!(s, AnsatzSlot::Entangler { .. }))
            .count()
            * self.n_layers
    }
}

/// A8M layer: RY column, CNOT chain on even pairs, RZ column, CNOT chain
/// on odd pairs. Two parameters per qubit per layer.
fn a8m_layer(n_qubits: usize) -> Vec<AnsatzSlot> {
    let mut slots = Vec::new();
    for qubit in 0..n_qubits {
        slots.push(AnsatzSlot::Rotation {
            axis: RotationAxis::Y,
            qubit,
        });
    }
    for control in (0..n_qubits.saturating_sub(1)).step_by(2) {
        slots.push(AnsatzSlot::Entangler {
            control,
            target: control + 1,
        });
    }
    for qubit in 0..n_qubits {
        slots.push(AnsatzSlot::Rotation {
            axis: RotationAxis::Z,
            qubit,
        });
    }
    for control in (1..n_qubits.saturating_sub(1)).step_by(2) {
        slots.push(AnsatzSlot::Entangler {
            control,
            target: control + 1,
        });
    }
    slots
}

/// B150M layer: per-qubit ZYZ rotation triple (applied RZ, RY, RZ in
/// circuit order) followed by the ring CNOT schedule. The ring degenerates
/// to nothing for one qubit and to the pair (0→1, 1→0) for two.
fn b150m_layer(n_qubits: usize) -> Vec<AnsatzSlot> {
    let mut slots = Vec::new();
    for qubit in 0..n_qubits {
        slots.push(AnsatzSlot::Rotation {
            axis: RotationAxis::Z,
            qubit,
        });
        slots.push(AnsatzSlot::Rotation {
            axis: RotationAxis::Y,
            qubit,
        });
        slots.push(AnsatzSlot::Rotation {
            axis: RotationAxis::Z,
            qubit,
        });
    }
    if n_qubits > 1 {
        for control in 0..n_qubits {
            slots.push(AnsatzSlot::Entangler {
                control,
                target: (control + 1) % n_qubits,
            });
        }
    }
    slots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a8m_param_identity() {
        let d = AnsatzDescriptor::new(AnsatzVariant::A8M, 10, 2).unwrap();
        assert_eq!(d.trainable_param_count(), 40);
    }

    #[test]
    fn b150m_param_identity() {
        for (n_q, n_l) in [(10, 2), (4, 3), (1, 1)] {
            let d = AnsatzDescriptor::new(AnsatzVariant::B150M, n_q, n_l).unwrap();
            assert_eq!(d.trainable_param_count(), 3 * n_q * n_l);
        }
    }

    #[test]
    fn b150m_gate_count_ten_qubits_two_layers() {
        let d = AnsatzDescriptor::new(AnsatzVariant::B150M, 10, 2).unwrap();
        // 60 rotations + 20 CNOTs
        assert_eq!(d.gate_count(), 80);
        assert_eq!(d.cnot_count(), 20);
    }

    #[test]
    fn ring_degenerates_for_small_registers() {
        let one = AnsatzDescriptor::new(AnsatzVariant::B150M, 1, 1).unwrap();
        assert_eq!(one.cnot_count(), 0);
        assert_eq!(one.trainable_param_count(), 3);
        assert_eq!(one.gate_count(), 3);

        let two = AnsatzDescriptor::new(AnsatzVariant::B150M, 2, 1).unwrap();
        assert_eq!(two.cnot_count(), 2);
    }

    #[test]
    fn custom_rejects_bad_slots() {
        let err = AnsatzDescriptor::custom(
            2,
            1,
            vec![AnsatzSlot::Entangler {
                control: 1,
                target: 1,
            }],
        );
        assert!(err.is_err());
    }
}
