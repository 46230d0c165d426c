//! Linear-connectivity decompositions of controlled Paulis, Pauli
//! exponentials and the diagonal blocks of the nuclear Hamiltonian.

use super::compile::{compile, CompiledCircuit};
use super::{Circuit, Gate, Polarity};
use crate::error::{QemError, Result};
use crate::pauli::{Pauli, PauliString, Phase};

fn chain_position(chain: Option<&[usize]>, q: usize) -> usize {
    chain.and_then(|c| c.iter().position(|&x| x == q)).unwrap_or(q)
}

fn check_real_sign(p: &PauliString) -> Result<bool> {
    match p.phase() {
        Phase::ONE => Ok(false),
        Phase::MINUS_ONE => Ok(true),
        _ => Err(QemError::NotHermitian),
    }
}

/// Controlled-P as a CNOT ladder.
///
/// Each factor is rotated to X (`H` for Z, `Sdg` for Y), the X parity is
/// spread from the target nearest the control to the far end of the chain,
/// and one CNOT from the control closes it. A support of `w` sites that is
/// contiguous with the control on the chain costs `2w - 1` CNOTs.
pub fn controlled_pauli_gates(
    p: &PauliString,
    control: usize,
    polarity: Polarity,
    chain: Option<&[usize]>,
) -> Result<Vec<Gate>> {
    let mut targets = p.support();
    if targets.is_empty() {
        return Err(QemError::EmptySupport);
    }
    if targets.contains(&control) {
        return Err(QemError::DuplicateSite(control));
    }
    let negative = check_real_sign(p)?;
    let cpos = chain_position(chain, control) as i64;
    targets.sort_by_key(|&q| ((chain_position(chain, q) as i64 - cpos).abs(), q));

    let mut gates = Vec::new();
    if polarity == Polarity::OnZero {
        gates.push(Gate::X(control));
    }
    for &q in &targets {
        match p.factor(q) {
            Pauli::Z => gates.push(Gate::H(q)),
            Pauli::Y => gates.push(Gate::Sdg(q)),
            _ => {}
        }
    }
    for w in targets.windows(2).rev() {
        gates.push(Gate::cnot(w[0], w[1]));
    }
    gates.push(Gate::cnot(control, targets[0]));
    for w in targets.windows(2) {
        gates.push(Gate::cnot(w[0], w[1]));
    }
    for &q in &targets {
        match p.factor(q) {
            Pauli::Z => gates.push(Gate::H(q)),
            Pauli::Y => gates.push(Gate::S(q)),
            _ => {}
        }
    }
    if negative {
        // A controlled sign is a Z on the control.
        gates.push(Gate::Z(control));
    }
    if polarity == Polarity::OnZero {
        gates.push(Gate::X(control));
    }
    Ok(gates)
}

pub fn controlled_pauli_template(
    p: &PauliString,
    control: usize,
    polarity: Polarity,
    chain: &[usize],
) -> Result<CompiledCircuit> {
    let gates = controlled_pauli_gates(p, control, polarity, Some(chain))?;
    compile(&Circuit::from_gates(p.n(), gates)?, chain)
}

/// Controlled `Rz(phi)` from two CNOTs.
pub fn controlled_rz(control: usize, target: usize, phi: f64) -> Vec<Gate> {
    vec![
        Gate::Rz(target, phi / 2.0),
        Gate::cnot(control, target),
        Gate::Rz(target, -phi / 2.0),
        Gate::cnot(control, target),
    ]
}

/// `exp(-i theta P)`, optionally controlled on `control` (polarity on-one).
///
/// Support sites are ordered along the chain and the parity is accumulated on
/// the last one.
pub fn pauli_exponential(p: &PauliString, theta: f64, control: Option<usize>, chain: Option<&[usize]>) -> Result<Vec<Gate>> {
    let mut support = p.support();
    if support.is_empty() {
        return Err(QemError::EmptySupport);
    }
    let theta = if check_real_sign(p)? { -theta } else { theta };
    support.sort_by_key(|&q| (chain_position(chain, q), q));
    let last = *support.last().expect("non-empty");
    let mut gates = Vec::new();
    for &q in &support {
        match p.factor(q) {
            Pauli::X => gates.push(Gate::H(q)),
            Pauli::Y => {
                gates.push(Gate::Sdg(q));
                gates.push(Gate::H(q));
            }
            _ => {}
        }
    }
    for w in support.windows(2) {
        gates.push(Gate::cnot(w[0], w[1]));
    }
    match control {
        Some(c) => gates.extend(controlled_rz(c, last, 2.0 * theta)),
        None => gates.push(Gate::Rz(last, 2.0 * theta)),
    }
    for w in support.windows(2).rev() {
        gates.push(Gate::cnot(w[0], w[1]));
    }
    for &q in &support {
        match p.factor(q) {
            Pauli::X => gates.push(Gate::H(q)),
            Pauli::Y => {
                gates.push(Gate::H(q));
                gates.push(Gate::S(q));
            }
            _ => {}
        }
    }
    Ok(gates)
}

/// The diagonal blocks of the nuclear Hamiltonian on the chain 1-4-3-2
/// (indices 0, 3, 2, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZzzBlock {
    /// Z1Z4, Z1Z2Z4, Z1Z3Z4
    ThreeTerm,
    /// Z2Z3Z4
    OneTerm,
    /// Z2Z3, Z1Z2Z3: the three-term layout mirrored on the chain
    TwoTerm,
}

impl ZzzBlock {
    /// Labels of the block's terms on four qubits, in angle order.
    pub fn terms(self) -> &'static [&'static str] {
        match self {
            ZzzBlock::ThreeTerm => &["ZIIZ", "ZZIZ", "ZIZZ"],
            ZzzBlock::OneTerm => &["IZZZ"],
            ZzzBlock::TwoTerm => &["IZZI", "ZZZI"],
        }
    }
}

/// Gates of `prod_k exp(-i beta_k P_k)` for the block's terms.
pub fn zzz_block_gates(kind: ZzzBlock, betas: &[f64]) -> Result<Vec<Gate>> {
    if betas.len() != kind.terms().len() {
        return Err(QemError::LengthMismatch(kind.terms().len(), betas.len()));
    }
    let (open, rz): (Vec<Gate>, Vec<Gate>) = match kind {
        ZzzBlock::ThreeTerm => (
            vec![Gate::cnot(0, 3), Gate::cnot(2, 1), Gate::cnot(3, 2), Gate::cnot(2, 1)],
            vec![Gate::Rz(3, 2.0 * betas[0]), Gate::Rz(1, 2.0 * betas[1]), Gate::Rz(2, 2.0 * betas[2])],
        ),
        ZzzBlock::OneTerm => (
            vec![Gate::cnot(3, 2), Gate::cnot(2, 1)],
            vec![Gate::Rz(1, 2.0 * betas[0])],
        ),
        ZzzBlock::TwoTerm => (
            vec![Gate::cnot(1, 2), Gate::cnot(3, 0), Gate::cnot(2, 3), Gate::cnot(3, 0)],
            vec![Gate::Rz(2, 2.0 * betas[0]), Gate::Rz(0, 2.0 * betas[1])],
        ),
    };
    let mut gates = open.clone();
    gates.extend(rz);
    gates.extend(open.into_iter().rev());
    Ok(gates)
}

/// Block template on an `n >= 4` qubit register, compiled on `chain`.
pub fn zzz_block_template(kind: ZzzBlock, betas: &[f64], n: usize, chain: &[usize]) -> Result<CompiledCircuit> {
    if n < 4 {
        return Err(QemError::LengthMismatch(4, n));
    }
    let circuit = Circuit::from_gates(n, zzz_block_gates(kind, betas)?)?;
    CompiledCircuit::new(circuit, chain.to_vec())
}
