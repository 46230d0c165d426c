use rand::Rng;

use crate::circuit::{Circuit, Gate};
use crate::error::{QemError, Result};
use crate::rng::child_rng;

// Paulis as (x, z) bit pairs.
fn pauli_gate(q: usize, x: bool, z: bool) -> Option<Gate> {
    match (x, z) {
        (false, false) => None,
        (true, false) => Some(Gate::X(q)),
        (true, true) => Some(Gate::Y(q)),
        (false, true) => Some(Gate::Z(q)),
    }
}

/// `G (P_a (x) P_b) G^dagger` up to phase for the two Clifford gates.
fn conjugate(g: &Gate, (xa, za): (bool, bool), (xb, zb): (bool, bool)) -> ((bool, bool), (bool, bool)) {
    match g {
        // a = control, b = target
        Gate::Cnot { .. } => ((xa, za ^ zb), (xb ^ xa, zb)),
        _ => ((xa, za ^ xb), (xb, zb ^ xa)),
    }
}

/// `T` copies of `c` with a uniformly random Pauli before every CNOT and CZ
/// and the compensating Pauli after it, so each copy has the same noiseless
/// unitary up to a global phase.
pub fn pauli_twirl(c: &Circuit, twirls: usize, seed: u64) -> Result<Vec<Circuit>> {
    if twirls == 0 {
        return Err(QemError::InvalidParameter("twirl count must be at least 1".into()));
    }
    if let Some(g) = c.gates().iter().find(|g| g.arity() > 1 && !matches!(g, Gate::Cnot { .. } | Gate::Cz(..))) {
        return Err(QemError::NotTwirlable(g.name().to_string()));
    }
    (0..twirls)
        .map(|i| {
            let mut rng = child_rng(seed, i as u64);
            let mut out = Circuit::new(c.n());
            out.set_ancilla(c.ancilla());
            for g in c.gates() {
                let (a, b) = match g {
                    Gate::Cnot { control, target } => (*control, *target),
                    Gate::Cz(a, b) => (*a, *b),
                    _ => {
                        out.push(g.clone())?;
                        continue;
                    }
                };
                let pa = (rng.random::<bool>(), rng.random::<bool>());
                let pb = (rng.random::<bool>(), rng.random::<bool>());
                let (qa, qb) = conjugate(g, pa, pb);
                for p in [pauli_gate(a, pa.0, pa.1), pauli_gate(b, pb.0, pb.1)].into_iter().flatten() {
                    out.push(p)?;
                }
                out.push(g.clone())?;
                for p in [pauli_gate(a, qa.0, qa.1), pauli_gate(b, qb.0, qb.1)].into_iter().flatten() {
                    out.push(p)?;
                }
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_to_unitary;
    use crate::linalg::equal_up_to_phase;

    #[test]
    fn twirled_copies_are_equivalent() {
        let mut c = Circuit::new(3);
        for g in [
            Gate::H(0),
            Gate::cnot(0, 1),
            Gate::Rz(1, 0.3),
            Gate::Cz(1, 2),
            Gate::cnot(2, 0),
            Gate::Rx(2, -0.7),
        ] {
            c.push(g).unwrap();
        }
        let u = circuit_to_unitary(&c).unwrap();
        let copies = pauli_twirl(&c, 20, 5).unwrap();
        assert_eq!(copies.len(), 20);
        for t in &copies {
            assert!(equal_up_to_phase(&circuit_to_unitary(t).unwrap(), &u, 1e-12));
        }
        assert_eq!(copies, pauli_twirl(&c, 20, 5).unwrap());
    }

    #[test]
    fn rejects_controlled_pauli() {
        let mut c = Circuit::new(3);
        c.push(Gate::controlled_pauli(0, "IXZ".parse().unwrap(), crate::circuit::Polarity::OnOne).unwrap())
            .unwrap();
        assert!(matches!(pauli_twirl(&c, 1, 0), Err(QemError::NotTwirlable(_))));
        assert!(pauli_twirl(&Circuit::new(1), 0, 0).is_err());
    }
}
