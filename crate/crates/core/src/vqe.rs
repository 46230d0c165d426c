//! Two-angle ansatz for the four-qubit ground state.

use std::cell::RefCell;

use cobyla::{minimize, Func, RhoBeg, StopTols};
use serde::{Deserialize, Serialize};

use crate::circuit::{run_statevector, Circuit, Gate};
use crate::error::{QemError, Result};
use crate::pauli::PauliSumOperator;
use crate::state::StateVector;

/// Angles in the convention `Ry(theta) = exp(-i theta Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzParams {
    pub theta0: f64,
    pub theta1: f64,
}

impl AnsatzParams {
    pub fn new(theta0: f64, theta1: f64) -> Self {
        AnsatzParams { theta0, theta1 }
    }
}

/// `Ry(theta0)` on every qubit, CZ on (0,3) and (1,2), `Ry(theta1)` on
/// qubits 2 and 3, then the same CZ pair again. Both CZ pairs are nearest
/// neighbours on the chain 0-3-2-1.
pub fn ansatz_circuit(p: &AnsatzParams) -> Circuit {
    let mut g: Vec<Gate> = (0..4).map(|q| Gate::Ry(q, 2.0 * p.theta0)).collect();
    g.extend([Gate::Cz(0, 3), Gate::Cz(1, 2)]);
    g.extend([Gate::Ry(2, 2.0 * p.theta1), Gate::Ry(3, 2.0 * p.theta1)]);
    g.extend([Gate::Cz(0, 3), Gate::Cz(1, 2)]);
    Circuit::from_gates(4, g).expect("sites are in range")
}

pub fn ansatz_state(p: &AnsatzParams) -> StateVector {
    run_statevector(&ansatz_circuit(p), &StateVector::zero(4)).expect("four-qubit circuit")
}

pub fn energy(p: &AnsatzParams, h: &PauliSumOperator) -> Result<f64> {
    if h.n() != 4 {
        return Err(QemError::LengthMismatch(4, h.n()));
    }
    Ok(ansatz_state(p).expectation(&h.to_matrix()?).re)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeResult {
    pub params: AnsatzParams,
    pub energy: f64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

/// COBYLA over an arbitrary objective of two variables, returning the best
/// point evaluated.
pub fn minimize_2d<F: Fn(f64, f64) -> f64>(f: F, start: [f64; 2], budget: usize) -> Result<(f64, f64, f64, usize, bool)> {
    if budget < 10 {
        return Err(QemError::InvalidParameter("optimizer budget must be at least 10".into()));
    }
    let best = RefCell::new((f64::INFINITY, start[0], start[1], 0usize));
    let objective = |x: &[f64], _: &mut ()| {
        let v = f(x[0], x[1]);
        let mut b = best.borrow_mut();
        b.3 += 1;
        if v < b.0 {
            *b = (v, x[0], x[1], b.3);
        }
        v
    };
    let cons: Vec<&dyn Func<()>> = vec![];
    let tols = StopTols { xtol_abs: vec![1e-6; 2], ftol_abs: 1e-12, ..StopTols::default() };
    let bound = 4.0 * std::f64::consts::PI;
    let outcome = minimize(objective, &start, &[(-bound, bound); 2], &cons, (), budget, RhoBeg::All(0.2), Some(tols));
    let exhausted = matches!(outcome, Ok((cobyla::SuccessStatus::MaxEvalReached, _, _)));
    let (v, x0, x1, n) = *best.borrow();
    Ok((x0, x1, v, n, exhausted))
}

/// Derivative-free minimization of the ansatz energy; deterministic given
/// the start.
pub fn optimize(h: &PauliSumOperator, initial: &AnsatzParams, budget: usize) -> Result<OptimizeResult> {
    let m = h.to_matrix()?;
    if h.n() != 4 {
        return Err(QemError::LengthMismatch(4, h.n()));
    }
    let f = |a: f64, b: f64| ansatz_state(&AnsatzParams::new(a, b)).expectation(&m).re;
    let (t0, t1, e, n, exhausted) = minimize_2d(f, [initial.theta0, initial.theta1], budget)?;
    Ok(OptimizeResult { params: AnsatzParams::new(t0, t1), energy: e, evaluations: n, budget_exhausted: exhausted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{exact_ground_state, nuclear_hamiltonian, shift_identity};

    #[test]
    fn zero_angles_give_vacuum() {
        let psi = ansatz_state(&AnsatzParams::new(0.0, 0.0));
        assert!((psi.amplitudes()[0].re - 1.0).abs() < 1e-14);
        let c = ansatz_circuit(&AnsatzParams::new(0.3, 0.2));
        assert_eq!(c.count_named("cz"), 4);
    }

    #[test]
    fn amplitudes_are_real() {
        let psi = ansatz_state(&AnsatzParams::new(0.41, -1.3));
        assert!(psi.amplitudes().iter().all(|a| a.im.abs() < 1e-14));
    }

    #[test]
    fn vacuum_energy() {
        let (h, _) = shift_identity(&nuclear_hamiltonian());
        assert!((energy(&AnsatzParams::new(0.0, 0.0), &h).unwrap() - 10.5).abs() < 1e-12);
    }

    #[test]
    fn quadratic_converges() {
        let (a, b, _, n, _) = minimize_2d(|a, b| (a - 0.3).powi(2) + (b + 0.7).powi(2), [0.0, 0.0], 100).unwrap();
        assert!((a - 0.3).abs() < 1e-3 && (b + 0.7).abs() < 1e-3);
        assert!(n <= 100);
    }

    #[test]
    fn optimized_energy_within_ten_percent() {
        let (h, _) = shift_identity(&nuclear_hamiltonian());
        let (e0, _) = exact_ground_state(&h).unwrap();
        let r = optimize(&h, &AnsatzParams::new(0.1, 0.1), 200).unwrap();
        assert!(((r.energy - e0) / e0).abs() < 0.1, "{} vs {}", r.energy, e0);
        assert_eq!(r, optimize(&h, &AnsatzParams::new(0.1, 0.1), 200).unwrap());
    }
}
