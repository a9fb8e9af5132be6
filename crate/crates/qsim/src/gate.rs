use crate::{QsimError, Result};

/// One gate of the supported set.
///
/// `H` is the Hadamard, `RY`/`RZ` are rotations by `angle` radians about
/// the Y and Z axes, and `CNOT` flips `target` when `control` is |1⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H { target: usize },
    RY { target: usize, angle: f64 },
    RZ { target: usize, angle: f64 },
    CNOT { control: usize, target: usize },
}

impl Gate {
    pub fn target(&self) -> usize {
        match *self {
            Gate::H { target }
            | Gate::RY { target, .. }
            | Gate::RZ { target, .. }
            | Gate::CNOT { target, .. } => target,
        }
    }

    /// Checks all qubit indices against a register of `n_qubits`.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let check = |index: usize| {
            if index < n_qubits {
                Ok(())
            } else {
                Err(QsimError::QubitIndexOutOfRange { index, n_qubits })
            }
        };
        match *self {
            Gate::H { target } | Gate::RY { target, .. } | Gate::RZ { target, .. } => {
                check(target)
            }
            Gate::CNOT { control, target } => {
                check(control)?;
                check(target)?;
                if control == target {
                    return Err(QsimError::ControlEqualsTarget { index: target });
                }
                Ok(())
            }
        }
    }

    /// Inverse gate: H and CNOT are involutions, rotations negate the angle.
    pub fn dagger(&self) -> Gate {
        match *self {
            Gate::H { target } => Gate::H { target },
            Gate::CNOT { control, target } => Gate::CNOT { control, target },
            Gate::RY { target, angle } => Gate::RY {
                target,
                angle: -angle,
            },
            Gate::RZ { target, angle } => Gate::RZ {
                target,
                angle: -angle,
            },
        }
    }
}

/// Renders a circuit in the debug text format: one gate per line,
/// `KIND target [control] [angle]`, angles as decimal radians.
///
/// ```
/// use qsim::{format_circuit, Gate};
/// let text = format_circuit(&[
///     Gate::H { target: 0 },
///     Gate::CNOT { control: 0, target: 1 },
/// ]);
/// assert_eq!(text, "H 0\nCNOT 1 0\n");
/// ```
pub fn format_circuit(gates: &[Gate]) -> String {
    let mut out = String::new();
    for g in gates {
        match *g {
            Gate::H { target } => out.push_str(&format!("H {target}\n")),
            Gate::RY { target, angle } => out.push_str(&format!("RY {target} {angle}\n")),
            Gate::RZ { target, angle } => out.push_str(&format!("RZ {target} {angle}\n")),
            Gate::CNOT { control, target } => {
                out.push_str(&format!("CNOT {target} {control}\n"))
            }
        }
    }
    out
}

/// Parses the debug text format produced by [`format_circuit`].
///
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_circuit(text: &str) -> Result<Vec<Gate>> {
    let mut gates = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let kind = parts.next().unwrap();
        let parse_usize = |tok: Option<&str>, what: &str| -> Result<usize> {
            tok.ok_or_else(|| QsimError::CircuitParse {
                line,
                reason: format!("missing {what}"),
            })?
            .parse()
            .map_err(|_| QsimError::CircuitParse {
                line,
                reason: format!("invalid {what}"),
            })
        };
        let parse_angle = |tok: Option<&str>| -> Result<f64> {
            tok.ok_or_else(|| QsimError::CircuitParse {
                line,
                reason: "missing angle".into(),
            })?
            .parse()
            .map_err(|_| QsimError::CircuitParse {
                line,
                reason: "invalid angle".into(),
            })
        };
        let gate = match kind {
            "H" => Gate::H {
                target: parse_usize(parts.next(), "target")?,
            },
            "RY" => Gate::RY {
                target: parse_usize(parts.next(), "target")?,
                angle: parse_angle(parts.next())?,
            },
            "RZ" => Gate::RZ {
                target: parse_usize(parts.next(), "target")?,
                angle: parse_angle(parts.next())?,
            },
            "CNOT" => {
                let target = parse_usize(parts.next(), "target")?;
                let control = parse_usize(parts.next(), "control")?;
                Gate::CNOT { control, target }
            }
            other => {
                return Err(QsimError::CircuitParse {
                    line,
                    reason: format!("unknown gate kind `{other}`"),
                })
            }
        };
        if let Some(extra) = parts.next() {
            return Err(QsimError::CircuitParse {
                line,
                reason: format!("trailing token `{extra}`"),
            });
        }
        gates.push(gate);
    }
    Ok(gates)
}
