//! Hadamard-test circuits for the moments `<psi| O_k U(j tau) O_l |psi>`,
//! with `|psi> = B|0>`. The ancilla is qubit `h.n()`.

use serde::{Deserialize, Serialize};

use crate::circuit::{compile, Circuit, Gate, Polarity};
use crate::crg::{chain_for, crg_step_gates, evolution_step_gates};
use crate::error::{QemError, Result};
use crate::linalg::CMatrix;
use crate::pauli::{Pauli, PauliString, PauliSumOperator};
use crate::trotter::ProductFormulaSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitStyle {
    /// Every rotation of the evolution controlled on the ancilla.
    Plain,
    /// Uncontrolled evolution bracketed by controlled reversals.
    Crg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub fn gates(self, q: usize) -> Vec<Gate> {
        match self {
            Basis::X => vec![Gate::H(q)],
            Basis::Y => vec![Gate::Sdg(q), Gate::H(q)],
            Basis::Z => vec![],
        }
    }

    /// Single-qubit matrices in application order.
    pub fn rotation(self) -> Vec<CMatrix> {
        self.gates(0).iter().map(Gate::local_matrix).collect()
    }
}

/// Appends the rotation that maps `basis` onto the computational basis.
pub fn with_measurement_basis(c: &Circuit, qubit: usize, basis: Basis) -> Result<Circuit> {
    let mut out = c.clone();
    for g in basis.gates(qubit) {
        out.push(g)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSpec {
    pub ok: PauliString,
    pub ol: PauliString,
    pub j: usize,
    pub tau: f64,
    /// Order and number of steps used for the evolution.
    pub formula: ProductFormulaSpec,
}

impl MomentSpec {
    pub fn time(&self) -> f64 {
        self.j as f64 * self.tau
    }

    fn check(&self, h: &PauliSumOperator, prep: &Circuit) -> Result<()> {
        for p in [&self.ok, &self.ol] {
            if p.n() != h.n() {
                return Err(QemError::LengthMismatch(h.n(), p.n()));
            }
        }
        if prep.n() != h.n() && prep.n() != h.n() + 1 {
            return Err(QemError::LengthMismatch(h.n(), prep.n()));
        }
        if prep.gates().iter().any(|g| g.sites().contains(&h.n())) {
            return Err(QemError::InvalidParameter("state preparation touches the ancilla".into()));
        }
        Ok(())
    }

    fn diagonal(&self) -> bool {
        self.ok == self.ol
    }
}

fn pauli_gates(p: &PauliString) -> Vec<Gate> {
    p.support()
        .into_iter()
        .map(|q| match p.factor(q) {
            Pauli::X => Gate::X(q),
            Pauli::Y => Gate::Y(q),
            _ => Gate::Z(q),
        })
        .collect()
}

fn operator(p: &PauliString, a: usize, polarity: Option<Polarity>) -> Result<Vec<Gate>> {
    if p.is_identity() {
        return Ok(vec![]);
    }
    match polarity {
        None => Ok(pauli_gates(p)),
        Some(pol) => Ok(vec![Gate::controlled_pauli(a, p.embed(a + 1, 0), pol)?]),
    }
}

fn half_steps(spec: &ProductFormulaSpec) -> Result<ProductFormulaSpec> {
    if !spec.steps.is_multiple_of(2) {
        return Err(QemError::OddStepCount);
    }
    Ok(ProductFormulaSpec { steps: spec.steps / 2, ..spec.clone() })
}

fn assemble(n: usize, a: usize, sections: &[Vec<Gate>], chain: &[usize]) -> Result<Circuit> {
    let mut out = Circuit::with_ancilla(n, a)?;
    for s in sections {
        let mut c = Circuit::with_ancilla(n, a)?;
        for g in s {
            c.push(g.clone())?;
        }
        out.extend(compile(&c, chain)?.circuit())?;
    }
    Ok(out)
}

/// Compiled EV circuit; the ancilla is left unrotated, see
/// [`with_measurement_basis`]. On the ancilla-0 branch the whole circuit
/// is the identity, so post-selecting the system on `|0...0>` leaves the
/// moment on the ancilla coherence.
///
/// The crg style splits `U(j tau)` into an uncontrolled half and a
/// reversal-controlled half (`U(-j tau/2)` on the 0 branch), which needs an
/// even number of steps.
pub fn build_ev_circuit(h: &PauliSumOperator, spec: &MomentSpec, prep: &Circuit, style: CircuitStyle) -> Result<Circuit> {
    spec.check(h, prep)?;
    let a = h.n();
    let pol = if spec.diagonal() { None } else { Some(Polarity::OnOne) };
    let mut gates = vec![Gate::H(a)];
    gates.extend(prep.gates().iter().cloned());
    gates.extend(operator(&spec.ol, a, pol)?);
    let t = spec.time();
    match style {
        CircuitStyle::Crg => {
            let half = half_steps(&spec.formula)?;
            let steps = vec![t / 2.0 / half.steps as f64; half.steps];
            gates.extend(evolution_step_gates(h, &half, &steps, None)?.0);
            gates.extend(crg_step_gates(h, &half, &steps, Polarity::OnZero)?.0);
        }
        CircuitStyle::Plain => {
            let r = spec.formula.steps;
            gates.extend(evolution_step_gates(h, &spec.formula, &vec![t / r as f64; r], Some(a))?.0);
        }
    }
    gates.extend(operator(&spec.ok, a, pol)?);
    gates.extend(prep.inverse().gates().iter().cloned());
    assemble(a + 1, a, &[gates], &chain_for(h))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdrCircuits {
    /// Ancilla `<Z>` equals `Re m`.
    pub signal_re: Circuit,
    /// Ancilla `<Z>` equals `Im m`.
    pub signal_im: Circuit,
    /// Same structure with the second half of the steps reversed in time;
    /// noiseless ancilla `<Z>` is 1.
    pub reference: Circuit,
}

/// Hadamard test with operator renormalization. In the crg style the
/// ancilla-0 branch runs `O_k` then `U(-j tau/2)` and the 1 branch `O_l` then
/// `U(j tau/2)`, so their overlap is the moment at `j tau` using evolution
/// blocks of half the duration; every block uses `formula.steps` steps.
///
/// The reference is compiled in two sections so that gate cancellation
/// cannot fold the backward half onto the forward half.
pub fn build_odr_circuits(
    h: &PauliSumOperator,
    spec: &MomentSpec,
    prep: &Circuit,
    style: CircuitStyle,
) -> Result<OdrCircuits> {
    spec.check(h, prep)?;
    let a = h.n();
    let r = spec.formula.steps;
    if !r.is_multiple_of(2) {
        return Err(QemError::OddStepCount);
    }
    let chain = chain_for(h);
    let t = spec.time();
    let s = match style {
        CircuitStyle::Crg => t / 2.0 / r as f64,
        CircuitStyle::Plain => t / r as f64,
    };
    let evolution = |steps: &[f64]| match style {
        CircuitStyle::Crg => crg_step_gates(h, &spec.formula, steps, Polarity::OnZero),
        CircuitStyle::Plain => evolution_step_gates(h, &spec.formula, steps, Some(a)),
    };

    let signal = |imag: bool| -> Result<Circuit> {
        let mut g = vec![Gate::H(a)];
        if imag {
            g.push(Gate::Sdg(a));
        }
        g.extend(prep.gates().iter().cloned());
        if spec.diagonal() {
            g.extend(operator(&spec.ok, a, None)?);
        } else {
            g.extend(operator(&spec.ok, a, Some(Polarity::OnZero))?);
            g.extend(operator(&spec.ol, a, Some(Polarity::OnOne))?);
        }
        g.extend(evolution(&vec![s; r])?.0);
        g.push(Gate::H(a));
        assemble(a + 1, a, &[g], &chain)
    };

    let mut steps = vec![s; r / 2];
    steps.extend(vec![-s; r / 2]);
    let (ev, starts) = evolution(&steps)?;
    let split = starts[r / 2];
    let mut first = vec![Gate::H(a)];
    first.extend(prep.gates().iter().cloned());
    first.extend(operator(&spec.ok, a, None)?);
    first.extend(ev[..split].iter().cloned());
    let mut second: Vec<Gate> = ev[split..].to_vec();
    second.push(Gate::H(a));
    let reference = assemble(a + 1, a, &[first, second], &chain)?;

    Ok(OdrCircuits { signal_re: signal(false)?, signal_im: signal(true)?, reference })
}
