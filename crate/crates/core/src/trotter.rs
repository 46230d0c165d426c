//! Product formulas and grouping of Hamiltonian terms under control
//! reversal gates.

use serde::{Deserialize, Serialize};

use crate::error::{QemError, Result};
use crate::linalg::{exact_evolution, phase_aligned_distance, CMatrix, C64};
use crate::pauli::{Pauli, PauliString, PauliSumOperator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductFormulaSpec {
    /// 1 or an even order.
    pub order: usize,
    /// Number of steps `r` the total time is split into.
    pub steps: usize,
    /// Optional permutation of the Hamiltonian terms; input order otherwise.
    #[serde(default)]
    pub term_order: Option<Vec<usize>>,
}

impl ProductFormulaSpec {
    pub fn new(order: usize, steps: usize) -> Self {
        ProductFormulaSpec { order, steps, term_order: None }
    }

    fn validate(&self, n_terms: usize) -> Result<Vec<usize>> {
        if !(self.order == 1 || (self.order >= 2 && self.order.is_multiple_of(2))) {
            return Err(QemError::UnsupportedOrder(self.order));
        }
        if self.steps == 0 {
            return Err(QemError::InvalidParameter("product formula needs at least one step".into()));
        }
        match &self.term_order {
            None => Ok((0..n_terms).collect()),
            Some(o) => {
                let mut seen = vec![false; n_terms];
                for &i in o {
                    if i >= n_terms || seen[i] {
                        return Err(QemError::InvalidParameter("term order is not a permutation".into()));
                    }
                    seen[i] = true;
                }
                if o.len() != n_terms {
                    return Err(QemError::InvalidParameter("term order is not a permutation".into()));
                }
                Ok(o.clone())
            }
        }
    }
}

/// `p_j = 1 / (4 - 4^{1/(2j-1)})` of the recursive construction.
pub fn suzuki_p(j: usize) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (2.0 * j as f64 - 1.0)))
}

fn base_schedule(order: usize, s: f64, terms: &[usize], out: &mut Vec<(usize, f64)>) {
    match order {
        1 => out.extend(terms.iter().map(|&g| (g, s))),
        2 => {
            out.extend(terms.iter().map(|&g| (g, s / 2.0)));
            out.extend(terms.iter().rev().map(|&g| (g, s / 2.0)));
        }
        _ => {
            let p = suzuki_p(order / 2);
            for f in [p, p, 1.0 - 4.0 * p, p, p] {
                base_schedule(order - 2, f * s, terms, out);
            }
        }
    }
}

/// The formula as a sequence of `(term index, duration)` exponentials, in
/// time order, with adjacent repeats of a term merged.
pub fn schedule(h: &PauliSumOperator, spec: &ProductFormulaSpec, t: f64) -> Result<Vec<(usize, f64)>> {
    let terms = spec.validate(h.len())?;
    let s = t / spec.steps as f64;
    let mut raw = Vec::new();
    for _ in 0..spec.steps {
        base_schedule(spec.order, s, &terms, &mut raw);
    }
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
    for (g, d) in raw {
        match out.last_mut() {
            Some((last, acc)) if *last == g => *acc += d,
            _ => out.push((g, d)),
        }
    }
    Ok(out)
}

/// `exp(-i c s P) = cos(cs) I - i sin(cs) P`
fn term_exponential(p: &CMatrix, c: f64, s: f64) -> CMatrix {
    let dim = p.nrows();
    let (sn, cs) = (c * s).sin_cos();
    CMatrix::identity(dim, dim) * C64::new(cs, 0.0) + p * C64::new(0.0, -sn)
}

pub fn trotter_unitary(h: &PauliSumOperator, spec: &ProductFormulaSpec, t: f64) -> Result<CMatrix> {
    let sched = schedule(h, spec, t)?;
    let mats: Vec<CMatrix> = h.terms().iter().map(|(_, p)| p.to_matrix()).collect::<Result<_>>()?;
    let dim = 1usize << h.n();
    let mut u = CMatrix::identity(dim, dim);
    for (g, s) in sched {
        u = term_exponential(&mats[g], h.terms()[g].0, s) * u;
    }
    Ok(u)
}

/// Spectral-norm distance to `exp(-iHt)` after global-phase alignment.
pub fn trotter_error(h: &PauliSumOperator, spec: &ProductFormulaSpec, t: f64) -> Result<f64> {
    Ok(phase_aligned_distance(&exact_evolution(h, t)?, &trotter_unitary(h, spec, t)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversalGroup {
    pub term_indices: Vec<usize>,
    pub reversal: PauliString,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupingStrategy {
    WorstCase,
    GreedyMinimal,
}

fn anticommute(a: (usize, usize), b: (usize, usize)) -> bool {
    ((a.0 & b.1) ^ (a.1 & b.0)).count_ones() % 2 == 1
}

fn masks(p: &PauliString) -> (usize, usize) {
    (p.x_mask(), p.z_mask())
}

fn pauli_from_masks(n: usize, x: usize, z: usize) -> PauliString {
    PauliString::new((0..n).map(|q| Pauli::from_bits((x >> q) & 1 == 1, (z >> q) & 1 == 1)).collect())
}

/// Largest register for the exhaustive reversal search.
const GREEDY_MAX_QUBITS: usize = 8;

/// Candidate reversals anticommuting with all of `members`, smallest weight first.
fn reversal_exists(n: usize, members: &[(usize, usize)]) -> bool {
    (1..1usize << (2 * n)).any(|code| {
        let (x, z) = (code & ((1 << n) - 1), code >> n);
        members.iter().all(|m| anticommute((x, z), *m))
    })
}

/// Among valid reversals prefer low weight, then those commuting with most
/// terms outside the group, then a fixed order that reads labels from the
/// last qubit.
fn best_reversal(n: usize, members: &[(usize, usize)], others: &[(usize, usize)]) -> Option<PauliString> {
    let mut best: Option<((usize, usize, String), PauliString)> = None;
    for code in 1..1usize << (2 * n) {
        let (x, z) = (code & ((1 << n) - 1), code >> n);
        if !members.iter().all(|m| anticommute((x, z), *m)) {
            continue;
        }
        let p = pauli_from_masks(n, x, z);
        let extra = others.iter().filter(|o| anticommute((x, z), **o)).count();
        let key = (p.weight(), extra, p.to_string().chars().rev().collect::<String>());
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, p));
        }
    }
    best.map(|(_, p)| p)
}

fn worst_case(h: &PauliSumOperator) -> Vec<ReversalGroup> {
    let n = h.n();
    let mut groups: Vec<((usize, bool), ReversalGroup)> = Vec::new();
    for (i, (_, p)) in h.terms().iter().enumerate() {
        let q = p.support()[0];
        let is_z = p.factor(q) == Pauli::Z;
        match groups.iter_mut().find(|(k, _)| *k == (q, is_z)) {
            Some((_, g)) => g.term_indices.push(i),
            None => {
                let r = PauliString::single(n, q, if is_z { Pauli::X } else { Pauli::Z });
                groups.push(((q, is_z), ReversalGroup { term_indices: vec![i], reversal: r }));
            }
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Diagonal and off-diagonal terms are kept apart so each group stays one
/// layer of the product formula; within a class terms join the first group
/// that still admits a common reversal.
fn greedy(h: &PauliSumOperator) -> Vec<ReversalGroup> {
    let n = h.n();
    let all: Vec<(usize, usize)> = h.terms().iter().map(|(_, p)| masks(p)).collect();
    let mut groups: Vec<(bool, Vec<usize>)> = Vec::new();
    for (i, (_, p)) in h.terms().iter().enumerate() {
        let diag = p.is_diagonal();
        let slot = groups.iter().position(|(d, members)| {
            *d == diag && {
                let mut m: Vec<(usize, usize)> = members.iter().map(|&k| all[k]).collect();
                m.push(all[i]);
                reversal_exists(n, &m)
            }
        });
        match slot {
            Some(g) => groups[g].1.push(i),
            None => groups.push((diag, vec![i])),
        }
    }
    groups
        .into_iter()
        .map(|(_, members)| {
            let m: Vec<(usize, usize)> = members.iter().map(|&k| all[k]).collect();
            let others: Vec<(usize, usize)> =
                (0..all.len()).filter(|k| !members.contains(k)).map(|k| all[k]).collect();
            let reversal = best_reversal(n, &m, &others).expect("single-term groups always admit a reversal");
            ReversalGroup { term_indices: members, reversal }
        })
        .collect()
}

/// Partitions the terms into groups sharing a Pauli reversal `R` with
/// `{H_m, R} = 0`.
pub fn crg_grouping(h: &PauliSumOperator, strategy: GroupingStrategy) -> Result<Vec<ReversalGroup>> {
    if h.terms().iter().any(|(_, p)| p.is_identity()) {
        return Err(QemError::IdentityTerm);
    }
    let groups = match strategy {
        GroupingStrategy::WorstCase => worst_case(h),
        GroupingStrategy::GreedyMinimal if h.n() <= GREEDY_MAX_QUBITS => greedy(h),
        GroupingStrategy::GreedyMinimal => worst_case(h),
    };
    for g in &groups {
        for &i in &g.term_indices {
            if crate::pauli::pauli_commutes(&g.reversal, &h.terms()[i].1)? {
                return Err(QemError::GroupingFailure);
            }
        }
    }
    Ok(groups)
}

/// Sub-operator of the listed terms.
pub fn group_operator(h: &PauliSumOperator, g: &ReversalGroup) -> PauliSumOperator {
    let terms = g.term_indices.iter().map(|&i| h.terms()[i].clone()).collect();
    PauliSumOperator::new(h.n(), terms).expect("subset of a valid operator")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{nuclear_hamiltonian, shift_identity};
    use crate::linalg::max_abs_diff;

    fn op(n: usize, terms: &[(f64, &str)]) -> PauliSumOperator {
        PauliSumOperator::new(n, terms.iter().map(|(c, l)| (*c, l.parse().unwrap())).collect()).unwrap()
    }

    #[test]
    fn suzuki_coefficient() {
        assert!((suzuki_p(2) - 0.414491).abs() < 1e-6);
    }

    #[test]
    fn zero_time_is_identity() {
        let (h, _) = shift_identity(&nuclear_hamiltonian());
        let u = trotter_unitary(&h, &ProductFormulaSpec::new(2, 3), 0.0).unwrap();
        assert!(max_abs_diff(&u, &CMatrix::identity(16, 16)) < 1e-14);
    }

    #[test]
    fn commuting_terms_are_exact() {
        let h = op(3, &[(0.3, "ZZI"), (-0.8, "IZZ"), (0.5, "ZIZ")]);
        for order in [1, 2, 4] {
            let e = trotter_error(&h, &ProductFormulaSpec::new(order, 1), 0.9).unwrap();
            assert!(e < 1e-10, "order {order}: {e}");
        }
    }

    #[test]
    fn odd_order_rejected() {
        let h = op(1, &[(1.0, "X")]);
        assert_eq!(trotter_unitary(&h, &ProductFormulaSpec::new(3, 1), 0.1), Err(QemError::UnsupportedOrder(3)));
    }

    #[test]
    fn doubling_steps_quarters_order_two_error() {
        let (h, _) = shift_identity(&nuclear_hamiltonian());
        let e1 = trotter_error(&h, &ProductFormulaSpec::new(2, 1), 0.1).unwrap();
        let e2 = trotter_error(&h, &ProductFormulaSpec::new(2, 2), 0.1).unwrap();
        assert!((e1 / e2 - 4.0).abs() < 0.4, "{}", e1 / e2);
    }

    #[test]
    fn heisenberg_needs_two_groups() {
        let mut terms = Vec::new();
        for b in 0..3 {
            for p in ['X', 'Y', 'Z'] {
                let mut label = vec!['I'; 4];
                label[b] = p;
                label[b + 1] = p;
                terms.push((1.0, label.into_iter().collect::<String>()));
            }
        }
        let refs: Vec<(f64, &str)> = terms.iter().map(|(c, l)| (*c, l.as_str())).collect();
        let h = op(4, &refs);
        let groups = crg_grouping(&h, GroupingStrategy::GreedyMinimal).unwrap();
        assert_eq!(groups.len(), 2);
        let rev: Vec<String> = groups.iter().map(|g| g.reversal.to_string()).collect();
        assert!(rev.contains(&"ZIZI".to_string()), "{rev:?}");
        assert!(rev.contains(&"XIXI".to_string()), "{rev:?}");
    }

    #[test]
    fn nuclear_greedy_grouping() {
        let (h, _) = shift_identity(&nuclear_hamiltonian());
        let groups = crg_grouping(&h, GroupingStrategy::GreedyMinimal).unwrap();
        let members: Vec<Vec<usize>> = groups.iter().map(|g| g.term_indices.clone()).collect();
        assert_eq!(members, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![8, 9]]);
        assert_eq!(groups[2].reversal.to_string(), "IXII");
    }

    #[test]
    fn single_x_term() {
        let h = op(2, &[(0.5, "IX")]);
        let g = crg_grouping(&h, GroupingStrategy::WorstCase).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].reversal.to_string(), "IZ");
        let h = op(2, &[(0.5, "II"), (1.0, "XI")]);
        assert_eq!(crg_grouping(&h, GroupingStrategy::WorstCase), Err(QemError::IdentityTerm));
    }
}
