use super::templates::controlled_pauli_gates;
use super::{Circuit, Gate};
use crate::error::{QemError, Result};

/// Wire order 1, 4, 3, 2, ancilla of the hardware layout.
pub const DEVICE_CHAIN: [usize; 5] = [0, 3, 2, 1, 4];

/// A circuit of single-qubit gates and chain-adjacent CNOTs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCircuit {
    circuit: Circuit,
    chain: Vec<usize>,
}

impl CompiledCircuit {
    pub fn new(circuit: Circuit, chain: Vec<usize>) -> Result<Self> {
        let pos = positions(&chain, circuit.n())?;
        for g in circuit.gates() {
            match g {
                Gate::Cnot { control, target } => {
                    if pos[*control].abs_diff(pos[*target]) != 1 {
                        return Err(QemError::InvalidParameter(format!(
                            "CNOT {control}->{target} is not chain-adjacent"
                        )));
                    }
                }
                g if g.arity() == 1 => {}
                g => return Err(QemError::InvalidParameter(format!("gate {g} is not in the compiled set"))),
            }
        }
        Ok(CompiledCircuit { circuit, chain })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn into_circuit(self) -> Circuit {
        self.circuit
    }

    pub fn chain(&self) -> &[usize] {
        &self.chain
    }

    pub fn cnot_count(&self) -> usize {
        self.circuit.cnot_count()
    }
}

fn positions(chain: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut pos = vec![usize::MAX; n];
    for (i, &q) in chain.iter().enumerate() {
        if q >= n {
            return Err(QemError::SiteOutOfRange { site: q, n });
        }
        if pos[q] != usize::MAX {
            return Err(QemError::DuplicateSite(q));
        }
        pos[q] = i;
    }
    if pos.contains(&usize::MAX) {
        return Err(QemError::InvalidParameter("chain does not cover every qubit".into()));
    }
    Ok(pos)
}

/// Rewrites controlled Paulis as CNOT ladders and CZ as `H CNOT H`;
/// other gates pass through. Without a chain, qubit index order is used.
pub fn lower_gate(g: &Gate, chain: Option<&[usize]>) -> Result<Vec<Gate>> {
    Ok(match g {
        Gate::ControlledPauli { control, pauli, polarity } => controlled_pauli_gates(pauli, *control, *polarity, chain)?,
        Gate::Cz(a, b) => vec![Gate::H(*b), Gate::cnot(*a, *b), Gate::H(*b)],
        g => vec![g.clone()],
    })
}

/// CNOT between non-adjacent chain sites through the neighbour `m` of the
/// control: `CX(c,m) CX(m,t) CX(c,m) CX(m,t)`, applied recursively.
fn route_cnot(control: usize, target: usize, chain: &[usize], pos: &[usize], out: &mut Vec<Gate>) {
    let (pc, pt) = (pos[control], pos[target]);
    if pc.abs_diff(pt) == 1 {
        out.push(Gate::cnot(control, target));
        return;
    }
    let m = if pt > pc { chain[pc + 1] } else { chain[pc - 1] };
    out.push(Gate::cnot(control, m));
    route_cnot(m, target, chain, pos, out);
    out.push(Gate::cnot(control, m));
    route_cnot(m, target, chain, pos, out);
}

/// Lowers, routes to the chain and runs [`peephole_cancel`].
pub fn compile(c: &Circuit, chain: &[usize]) -> Result<CompiledCircuit> {
    let pos = positions(chain, c.n())?;
    let mut gates = Vec::with_capacity(c.len());
    for g in c.gates() {
        for lg in lower_gate(g, Some(chain))? {
            match lg {
                Gate::Cnot { control, target } => route_cnot(control, target, chain, &pos, &mut gates),
                other => gates.push(other),
            }
        }
    }
    let mut out = Circuit::new(c.n());
    out.set_ancilla(c.ancilla());
    for g in peephole(gates) {
        out.push(g)?;
    }
    CompiledCircuit::new(out, chain.to_vec())
}

pub fn peephole_cancel(c: &CompiledCircuit) -> CompiledCircuit {
    let mut out = Circuit::new(c.circuit.n());
    out.set_ancilla(c.circuit.ancilla());
    for g in peephole(c.circuit.gates().to_vec()) {
        out.push(g).expect("peephole keeps sites valid");
    }
    CompiledCircuit { circuit: out, chain: c.chain.clone() }
}

enum Fuse {
    Cancel,
    Replace(Gate),
    None,
}

fn fuse(a: &Gate, b: &Gate) -> Fuse {
    use Gate::*;
    let rot = |q: usize, x: f64, make: fn(usize, f64) -> Gate| {
        if x.abs() < 1e-14 {
            Fuse::Cancel
        } else {
            Fuse::Replace(make(q, x))
        }
    };
    match (a, b) {
        (H(p), H(q)) | (X(p), X(q)) | (Y(p), Y(q)) | (Z(p), Z(q)) | (S(p), Sdg(q)) | (Sdg(p), S(q)) if p == q => {
            Fuse::Cancel
        }
        (Rz(p, x), Rz(q, y)) if p == q => rot(*p, x + y, Rz),
        (Rx(p, x), Rx(q, y)) if p == q => rot(*p, x + y, Rx),
        (Ry(p, x), Ry(q, y)) if p == q => rot(*p, x + y, Ry),
        (Cnot { control: c1, target: t1 }, Cnot { control: c2, target: t2 }) if c1 == c2 && t1 == t2 => Fuse::Cancel,
        (Cz(a1, b1), Cz(a2, b2)) if (a1, b1) == (a2, b2) || (a1, b1) == (b2, a2) => Fuse::Cancel,
        _ => Fuse::None,
    }
}

/// Cancels inverse pairs and merges same-axis rotations. A gate is compared
/// with the most recent kept gate sharing one of its qubits; anything in
/// between acts on disjoint qubits and commutes with both.
fn peephole(gates: Vec<Gate>) -> Vec<Gate> {
    let mut out: Vec<Gate> = Vec::with_capacity(gates.len());
    for g in gates {
        let sites = g.sites();
        let prev = out
            .iter()
            .rposition(|h| h.sites().iter().any(|s| sites.contains(s)));
        if let Some(j) = prev {
            match fuse(&out[j], &g) {
                Fuse::Cancel => {
                    out.remove(j);
                    continue;
                }
                Fuse::Replace(r) => {
                    out[j] = r;
                    continue;
                }
                Fuse::None => {}
            }
        }
        if let Gate::Rz(_, a) | Gate::Rx(_, a) | Gate::Ry(_, a) = g {
            if a.abs() < 1e-14 {
                continue;
            }
        }
        out.push(g);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_to_unitary, zzz_block_gates, ZzzBlock};
    use crate::linalg::equal_up_to_phase;

    #[test]
    fn double_cnot_cancels() {
        let c = Circuit::from_gates(2, vec![Gate::cnot(0, 1), Gate::cnot(0, 1)]).unwrap();
        assert!(compile(&c, &[0, 1]).unwrap().circuit().is_empty());
    }

    #[test]
    fn rotations_merge() {
        let c = Circuit::from_gates(1, vec![Gate::Rz(0, 0.25), Gate::Rz(0, 0.5)]).unwrap();
        assert_eq!(compile(&c, &[0]).unwrap().circuit().gates(), &[Gate::Rz(0, 0.75)]);
    }

    #[test]
    fn abutted_blocks_shed_cnots() {
        let mut gates = zzz_block_gates(ZzzBlock::OneTerm, &[0.3]).unwrap();
        gates.extend(zzz_block_gates(ZzzBlock::OneTerm, &[0.2]).unwrap());
        let c = Circuit::from_gates(4, gates).unwrap();
        assert_eq!(c.cnot_count(), 8);
        let compiled = compile(&c, &DEVICE_CHAIN[..4]).unwrap();
        assert!(compiled.cnot_count() <= 6);
        assert!(equal_up_to_phase(
            &circuit_to_unitary(&c).unwrap(),
            &circuit_to_unitary(compiled.circuit()).unwrap(),
            1e-10
        ));
    }

    #[test]
    fn routed_cnot_is_exact() {
        let c = Circuit::from_gates(5, vec![Gate::cnot(4, 0), Gate::Cz(2, 4)]).unwrap();
        let compiled = compile(&c, &DEVICE_CHAIN).unwrap();
        assert!(equal_up_to_phase(
            &circuit_to_unitary(&c).unwrap(),
            &circuit_to_unitary(compiled.circuit()).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn rejects_non_adjacent() {
        let c = Circuit::from_gates(3, vec![Gate::cnot(0, 2)]).unwrap();
        assert!(CompiledCircuit::new(c, vec![0, 1, 2]).is_err());
    }
}
