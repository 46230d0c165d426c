//! Gate-level circuits, dense evaluation and linear-chain compilation.

mod compile;
mod gate;
mod simulate;
mod templates;

pub use compile::{compile, lower_gate, peephole_cancel, CompiledCircuit, DEVICE_CHAIN};
pub use gate::{parse_gate, Gate, Polarity};
pub use simulate::{
    apply_confusion, circuit_to_unitary, run_statevector, sample_counts, sample_counts_with, sample_probabilities,
    simulate_noisy, Confusion, MeasurementCounts,
};
pub use templates::{
    controlled_pauli_gates, controlled_pauli_template, controlled_rz, pauli_exponential, zzz_block_gates,
    zzz_block_template, ZzzBlock,
};

use std::fmt;

use crate::error::{QemError, Result};
use crate::state::check_sites;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
    ancilla: Option<usize>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, gates: Vec::new(), ancilla: None }
    }

    pub fn with_ancilla(n: usize, ancilla: usize) -> Result<Self> {
        if ancilla >= n {
            return Err(QemError::SiteOutOfRange { site: ancilla, n });
        }
        Ok(Circuit { n, gates: Vec::new(), ancilla: Some(ancilla) })
    }

    pub fn from_gates(n: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(n);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ancilla(&self) -> Option<usize> {
        self.ancilla
    }

    pub fn set_ancilla(&mut self, ancilla: Option<usize>) {
        self.ancilla = ancilla;
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        check_sites(self.n, &g.sites())?;
        if let Gate::ControlledPauli { pauli, .. } = &g {
            if pauli.n() != self.n {
                return Err(QemError::LengthMismatch(self.n, pauli.n()));
            }
        }
        self.gates.push(g);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n != self.n {
            return Err(QemError::LengthMismatch(self.n, other.n));
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    /// The adjoint circuit: reversed order, each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n: self.n,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
            ancilla: self.ancilla,
        }
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Cnot { .. })).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.arity() == 2).count()
    }

    pub fn count_named(&self, name: &str) -> usize {
        self.gates.iter().filter(|g| g.name() == name).count()
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    /// Reads the line format written by `Display`; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut circuit: Option<Circuit> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            match (toks.next(), &mut circuit) {
                (Some("qubits"), None) => {
                    let n = toks
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or(QemError::Parse { line: line_no, msg: "bad qubit count".into() })?;
                    circuit = Some(Circuit::new(n));
                }
                (Some("ancilla"), Some(c)) => {
                    let a: usize = toks
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or(QemError::Parse { line: line_no, msg: "bad ancilla".into() })?;
                    if a >= c.n {
                        return Err(QemError::Parse { line: line_no, msg: "ancilla out of range".into() });
                    }
                    c.ancilla = Some(a);
                }
                (_, None) => {
                    return Err(QemError::Parse { line: line_no, msg: "expected 'qubits <n>' header".into() })
                }
                (_, Some(c)) => {
                    let g = parse_gate(line, line_no)?;
                    c.push(g).map_err(|e| QemError::Parse { line: line_no, msg: e.to_string() })?;
                }
            }
        }
        circuit.ok_or(QemError::Parse { line: 0, msg: "empty circuit text".into() })
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n)?;
        if let Some(a) = self.ancilla {
            writeln!(f, "ancilla {a}")?;
        }
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_format_round_trip() {
        let mut c = Circuit::with_ancilla(3, 2).unwrap();
        c.push(Gate::H(2)).unwrap();
        c.push(Gate::cnot(2, 0)).unwrap();
        c.push(Gate::Rz(1, -0.125)).unwrap();
        let text = c.to_text();
        assert_eq!(Circuit::from_text(&text).unwrap(), c);
        assert!(text.starts_with("qubits 3\nancilla 2\nh 2\n"));
    }

    #[test]
    fn push_validates_sites() {
        let mut c = Circuit::new(2);
        assert!(matches!(c.push(Gate::H(2)), Err(QemError::SiteOutOfRange { .. })));
        assert!(matches!(c.push(Gate::cnot(1, 1)), Err(QemError::DuplicateSite(1))));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Circuit::from_text("qubits 2\nh 0\nbogus 1\n").unwrap_err();
        assert_eq!(err, QemError::Parse { line: 3, msg: "unknown gate 'bogus'".into() });
    }

    #[test]
    fn inverse_reverses() {
        let c = Circuit::from_gates(1, vec![Gate::S(0), Gate::Rx(0, 0.2)]).unwrap();
        assert_eq!(c.inverse().gates(), &[Gate::Rx(0, -0.2), Gate::Sdg(0)]);
    }
}
