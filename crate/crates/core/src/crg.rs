//! Uncontrolled and controlled time-evolution circuits.
//!
//! The controlled form uses control reversal gates: conjugating a product
//! formula by Paulis that anticommute with its terms runs it backwards, so a
//! single uncontrolled evolution with a few controlled Paulis around it
//! realizes `|0><0| U(-t) + |1><1| U(t)`.

use crate::circuit::{
    compile, pauli_exponential, zzz_block_gates, Circuit, Gate, Polarity, ZzzBlock, DEVICE_CHAIN,
};
use crate::error::{QemError, Result};
use crate::lattice::NUCLEAR_TERM_ORDER;
use crate::pauli::{PauliString, PauliSumOperator};
use crate::trotter::{crg_grouping, schedule, GroupingStrategy, ProductFormulaSpec, ReversalGroup};

/// Coefficients of the ten non-identity nuclear terms, in [`NUCLEAR_TERM_ORDER`].
#[derive(Debug, Clone, Copy)]
struct NuclearLayout {
    c: [f64; 10],
}

impl NuclearLayout {
    fn detect(h: &PauliSumOperator) -> Option<Self> {
        if h.n() != 4 || h.len() != 10 {
            return None;
        }
        let mut c = [0.0; 10];
        for (i, label) in NUCLEAR_TERM_ORDER.iter().enumerate() {
            let p: PauliString = label.parse().ok()?;
            let (coef, _) = h.terms().iter().find(|(_, q)| *q == p)?;
            c[i] = *coef;
        }
        Some(NuclearLayout { c })
    }

    fn x_layer(&self, s: f64) -> Vec<Gate> {
        (0..4).map(|q| Gate::Rx(q, 2.0 * self.c[q] * s)).collect()
    }

    fn block(&self, kind: ZzzBlock, s: f64) -> Vec<Gate> {
        let betas: Vec<f64> = match kind {
            ZzzBlock::ThreeTerm => self.c[4..7].iter(),
            ZzzBlock::OneTerm => self.c[7..8].iter(),
            ZzzBlock::TwoTerm => self.c[8..10].iter(),
        }
        .map(|c| c * s)
        .collect();
        zzz_block_gates(kind, &betas).expect("block arity matches")
    }

    /// `R1 = Z1 Y4 Z3 Z2` reverses the X layer and the three- and one-term
    /// blocks; the two-term block commutes with it and is reversed by `X2`.
    fn reversals() -> (PauliString, PauliString) {
        ("ZZZY".parse().expect("valid label"), "IXII".parse().expect("valid label"))
    }
}

/// The three reversal groups with the shared `R1` of the template circuits.
pub fn nuclear_groups(h: &PauliSumOperator) -> Result<Vec<ReversalGroup>> {
    NuclearLayout::detect(h).ok_or(QemError::GroupingFailure)?;
    let index = |label: &str| {
        let p: PauliString = label.parse().expect("valid label");
        h.terms().iter().position(|(_, q)| *q == p).expect("detected layout")
    };
    let (r1, r3) = NuclearLayout::reversals();
    let pick = |labels: &[&str]| labels.iter().map(|l| index(l)).collect::<Vec<_>>();
    Ok(vec![
        ReversalGroup { term_indices: pick(&NUCLEAR_TERM_ORDER[0..4]), reversal: r1.clone() },
        ReversalGroup { term_indices: pick(&NUCLEAR_TERM_ORDER[4..8]), reversal: r1 },
        ReversalGroup { term_indices: pick(&NUCLEAR_TERM_ORDER[8..10]), reversal: r3 },
    ])
}

/// Qubit chain used to compile circuits for `h` plus one ancilla at index `h.n()`.
pub fn chain_for(h: &PauliSumOperator) -> Vec<usize> {
    if NuclearLayout::detect(h).is_some() {
        DEVICE_CHAIN.to_vec()
    } else {
        (0..=h.n()).collect()
    }
}

fn uses_template(h: &PauliSumOperator, spec: &ProductFormulaSpec) -> Option<NuclearLayout> {
    if spec.order == 2 && spec.term_order.is_none() {
        NuclearLayout::detect(h)
    } else {
        None
    }
}

/// Second-order nuclear step `X(s/2) D(s) X(s/2)`, with optional controlled
/// `X2` around the two-term block.
fn nuclear_step(layout: &NuclearLayout, s: f64, flip: Option<(usize, Polarity)>) -> Result<Vec<Gate>> {
    let mut g = layout.x_layer(s / 2.0);
    g.extend(layout.block(ZzzBlock::ThreeTerm, s));
    g.extend(layout.block(ZzzBlock::OneTerm, s));
    let flip_gate = match flip {
        Some((a, pol)) => Some(Gate::controlled_pauli(a, NuclearLayout::reversals().1.embed(5, 0), pol)?),
        None => None,
    };
    g.extend(flip_gate.clone());
    g.extend(layout.block(ZzzBlock::TwoTerm, s));
    g.extend(flip_gate);
    g.extend(layout.x_layer(s / 2.0));
    Ok(g)
}

fn check_terms(h: &PauliSumOperator) -> Result<()> {
    if h.terms().iter().any(|(_, p)| p.is_identity()) {
        return Err(QemError::IdentityTerm);
    }
    Ok(())
}

fn equal_steps(spec: &ProductFormulaSpec, t: f64) -> Vec<f64> {
    vec![t / spec.steps as f64; spec.steps]
}

/// Gates of a formula applied step by step with the given step sizes,
/// optionally with every rotation controlled on `control`. The second value
/// holds the gate index at which each step starts.
pub(crate) fn evolution_step_gates(
    h: &PauliSumOperator,
    spec: &ProductFormulaSpec,
    steps: &[f64],
    control: Option<usize>,
) -> Result<(Vec<Gate>, Vec<usize>)> {
    check_terms(h)?;
    let template = if control.is_none() { uses_template(h, spec) } else { None };
    let n_total = h.n() + 1;
    let chain = chain_for(h);
    let one = ProductFormulaSpec { steps: 1, ..spec.clone() };
    let mut gates = Vec::new();
    let mut starts = Vec::with_capacity(steps.len());
    for &s in steps {
        starts.push(gates.len());
        match &template {
            Some(layout) => gates.extend(nuclear_step(layout, s, None)?),
            None => {
                for (g, d) in schedule(h, &one, s)? {
                    let (c, p) = &h.terms()[g];
                    gates.extend(pauli_exponential(&p.embed(n_total, 0), c * d, control, Some(&chain))?);
                }
            }
        }
    }
    Ok((gates, starts))
}

/// Reversal-controlled evolution with explicit step sizes; see
/// [`controlled_evolution_crg`]. Step starts are reported as in
/// [`evolution_step_gates`], the opening reversal belonging to the first step.
pub(crate) fn crg_step_gates(
    h: &PauliSumOperator,
    spec: &ProductFormulaSpec,
    steps: &[f64],
    polarity: Polarity,
) -> Result<(Vec<Gate>, Vec<usize>)> {
    if !spec.order.is_multiple_of(2) {
        return Err(QemError::OddOrderReversal);
    }
    check_terms(h)?;
    let n_total = h.n() + 1;
    let a = h.n();
    let mut gates = Vec::new();
    let mut starts = Vec::with_capacity(steps.len());
    if let Some(layout) = uses_template(h, spec) {
        let r1 = Gate::controlled_pauli(a, NuclearLayout::reversals().0.embed(n_total, 0), polarity)?;
        gates.push(r1.clone());
        for (i, &s) in steps.iter().enumerate() {
            starts.push(if i == 0 { 0 } else { gates.len() });
            gates.extend(nuclear_step(&layout, s, Some((a, polarity)))?);
        }
        gates.push(r1);
        return Ok((gates, starts));
    }

    let groups = crg_grouping(h, GroupingStrategy::GreedyMinimal)?;
    let mut owner = vec![0; h.len()];
    for (gi, g) in groups.iter().enumerate() {
        for &i in &g.term_indices {
            owner[i] = gi;
        }
    }
    let chain = chain_for(h);
    let reversal = |gi: usize| Gate::controlled_pauli(a, groups[gi].reversal.embed(n_total, 0), polarity);
    let one = ProductFormulaSpec { steps: 1, ..spec.clone() };
    let mut open: Option<usize> = None;
    for &s in steps {
        starts.push(gates.len());
        for (term, d) in schedule(h, &one, s)? {
            let gi = owner[term];
            if open != Some(gi) {
                if let Some(prev) = open {
                    gates.push(reversal(prev)?);
                }
                gates.push(reversal(gi)?);
                open = Some(gi);
            }
            let (coef, p) = &h.terms()[term];
            gates.extend(pauli_exponential(&p.embed(n_total, 0), coef * d, None, Some(&chain))?);
        }
    }
    if let Some(prev) = open {
        gates.push(reversal(prev)?);
    }
    Ok((gates, starts))
}

/// The product formula on `h.n()` qubits. The nuclear Hamiltonian at order
/// two uses the hand-built block templates; anything else is compiled term
/// by term with CNOT ladders.
pub fn uncontrolled_step_circuit(h: &PauliSumOperator, spec: &ProductFormulaSpec, t: f64) -> Result<Circuit> {
    schedule(h, spec, t)?;
    let (gates, _) = evolution_step_gates(h, spec, &equal_steps(spec, t), None)?;
    Circuit::from_gates(h.n(), gates)
}

/// `|0><0| (x) U(-t) + |1><1| (x) U(t)` for [`Polarity::OnZero`], swapped for
/// [`Polarity::OnOne`]; the ancilla is qubit `h.n()`.
pub fn controlled_evolution_crg(
    h: &PauliSumOperator,
    spec: &ProductFormulaSpec,
    t: f64,
    polarity: Polarity,
) -> Result<Circuit> {
    if !spec.order.is_multiple_of(2) {
        return Err(QemError::OddOrderReversal);
    }
    schedule(h, spec, t)?;
    let (gates, _) = crg_step_gates(h, spec, &equal_steps(spec, t), polarity)?;
    let mut c = Circuit::with_ancilla(h.n() + 1, h.n())?;
    for g in gates {
        c.push(g)?;
    }
    Ok(c)
}

/// `|0><0| (x) 1 + |1><1| (x) U(t)` with every rotation controlled.
pub fn controlled_evolution_plain(h: &PauliSumOperator, spec: &ProductFormulaSpec, t: f64) -> Result<Circuit> {
    schedule(h, spec, t)?;
    let (gates, _) = evolution_step_gates(h, spec, &equal_steps(spec, t), Some(h.n()))?;
    let mut c = Circuit::with_ancilla(h.n() + 1, h.n())?;
    for g in gates {
        c.push(g)?;
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrgCost {
    pub reversals: usize,
    /// Compiled CNOTs beyond those of the uncontrolled evolution.
    pub extra_cnots: usize,
}

pub fn crg_cost(h: &PauliSumOperator, spec: &ProductFormulaSpec, t: f64) -> Result<CrgCost> {
    let chain = chain_for(h);
    let crg = controlled_evolution_crg(h, spec, t, Polarity::OnZero)?;
    let plain = Circuit::from_gates(h.n() + 1, evolution_step_gates(h, spec, &equal_steps(spec, t), None)?.0)?;
    let with = compile(&crg, &chain)?.cnot_count();
    let without = compile(&plain, &chain)?.cnot_count();
    Ok(CrgCost {
        reversals: crg.gates().iter().filter(|g| g.is_controlled_pauli()).count(),
        extra_cnots: with.saturating_sub(without),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_to_unitary;
    use crate::lattice::{nuclear_hamiltonian, shift_identity};
    use crate::linalg::{equal_up_to_phase, max_abs_diff, CMatrix};
    use crate::trotter::trotter_unitary;

    fn nuclear() -> PauliSumOperator {
        shift_identity(&nuclear_hamiltonian()).0
    }

    fn block_diag(a: &CMatrix, b: &CMatrix, ancilla_first_zero: bool) -> CMatrix {
        // ancilla is the highest qubit: rows 0..d are ancilla 0
        let d = a.nrows();
        let mut m = CMatrix::zeros(2 * d, 2 * d);
        let (lo, hi) = if ancilla_first_zero { (a, b) } else { (b, a) };
        m.view_mut((0, 0), (d, d)).copy_from(lo);
        m.view_mut((d, d), (d, d)).copy_from(hi);
        m
    }

    #[test]
    fn template_step_matches_formula() {
        let h = nuclear();
        for steps in [1, 2, 3] {
            let spec = ProductFormulaSpec::new(2, steps);
            let c = uncontrolled_step_circuit(&h, &spec, 0.37).unwrap();
            let u = circuit_to_unitary(&c).unwrap();
            let v = trotter_unitary(&h, &spec, 0.37).unwrap();
            assert!(equal_up_to_phase(&u, &v, 1e-10));
        }
    }

    #[test]
    fn crg_is_block_diagonal() {
        let h = nuclear();
        let t = 0.61;
        for steps in [1, 2] {
            let spec = ProductFormulaSpec::new(2, steps);
            let c = controlled_evolution_crg(&h, &spec, t, Polarity::OnZero).unwrap();
            let u = circuit_to_unitary(&c).unwrap();
            let fwd = trotter_unitary(&h, &spec, t).unwrap();
            let back = trotter_unitary(&h, &spec, -t).unwrap();
            assert!(max_abs_diff(&u, &block_diag(&back, &fwd, true)) < 1e-10);
        }
    }

    #[test]
    fn generic_crg_and_plain() {
        let h = PauliSumOperator::new(
            3,
            vec![(0.4, "XXI".parse().unwrap()), (-0.7, "IYZ".parse().unwrap()), (0.2, "ZIX".parse().unwrap())],
        )
        .unwrap();
        let spec = ProductFormulaSpec::new(2, 2);
        let t = 0.8;
        let fwd = trotter_unitary(&h, &spec, t).unwrap();
        let back = trotter_unitary(&h, &spec, -t).unwrap();
        let crg = circuit_to_unitary(&controlled_evolution_crg(&h, &spec, t, Polarity::OnOne).unwrap()).unwrap();
        assert!(max_abs_diff(&crg, &block_diag(&back, &fwd, false)) < 1e-10);
        let plain = circuit_to_unitary(&controlled_evolution_plain(&h, &spec, t).unwrap()).unwrap();
        assert!(max_abs_diff(&plain, &block_diag(&CMatrix::identity(8, 8), &fwd, true)) < 1e-10);
        }

    #[test]
    fn nuclear_overhead() {
        let h = nuclear();
        for r in 1..=4 {
            let cost = crg_cost(&h, &ProductFormulaSpec::new(2, r), 0.3).unwrap();
            assert_eq!(cost, CrgCost { reversals: 2 * (1 + r), extra_cnots: 14 + 2 * r });
        }
    }

    #[test]
    fn nuclear_group_reversals() {
        let groups = nuclear_groups(&nuclear()).unwrap();
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[0].reversal.to_string(), "ZZZY");
        assert_eq!(groups[2].term_indices.len(), 2);
    }

    #[test]
    fn odd_order_rejected() {
        let h = nuclear();
        assert_eq!(
            controlled_evolution_crg(&h, &ProductFormulaSpec::new(1, 1), 0.1, Polarity::OnZero),
            Err(QemError::OddOrderReversal)
        );
    }
}
