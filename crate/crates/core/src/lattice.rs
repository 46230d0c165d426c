//! Two nucleons on a 2x2 periodic lattice in first quantization, plus the
//! exact-diagonalization oracle for spectra, moments and responses.
//!
//! Qubit map: qubit label `k` is index `k - 1`. The spin-up nucleon's site
//! is Gray-coded on qubits (0, 1), the spin-down one on (2, 3), with site
//! 1 = 00, 2 = 01, 3 = 10, 4 = 11 (first bit on the lower qubit). The first
//! bit is the y coordinate, the second the x coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{QemError, Result};
use crate::estimation::ResponseCurve;
use crate::linalg::{exact_evolution, hermitian_eigen, CMatrix, C64};
use crate::pauli::{PauliString, PauliSumOperator};
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeModelParams {
    #[serde(rename = "L")]
    pub l: usize,
    pub a: f64,
    pub t: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "V")]
    pub v: f64,
}

impl Default for LatticeModelParams {
    fn default() -> Self {
        LatticeModelParams { l: 2, a: 1.0, t: 1.0, u: -7.0, v: 28.0 }
    }
}

impl LatticeModelParams {
    fn validate(&self) -> Result<()> {
        if self.l != 2 {
            return Err(QemError::UnsupportedLattice(self.l));
        }
        if !(self.a > 0.0) {
            return Err(QemError::InvalidParameter(format!("lattice spacing a = {}", self.a)));
        }
        Ok(())
    }
}

pub const N_SYSTEM: usize = 4;

/// Term order of the compiled product formula: X layer, three-term block,
/// one-term block, two-term block.
pub const NUCLEAR_TERM_ORDER: [&str; 10] = [
    "XIII", "IXII", "IIXI", "IIIX", "ZIIZ", "ZZIZ", "ZIZZ", "IZZZ", "IZZI", "ZZZI",
];

/// `(y, x)` coordinates of a Gray-coded site on the 2x2 lattice.
fn coords(code: usize) -> (usize, usize) {
    (code & 1, (code >> 1) & 1)
}

fn site_code(y: usize, x: usize) -> usize {
    y | (x << 1)
}

/// Single-particle kinetic matrix: `2d t` on site minus `t` per neighbour.
fn kinetic(params: &LatticeModelParams) -> [[f64; 4]; 4] {
    let l = params.l;
    let mut k = [[0.0; 4]; 4];
    for (code, row) in k.iter_mut().enumerate() {
        row[code] += 4.0 * params.t;
        let (y, x) = coords(code);
        for (dy, dx) in [(1, 0), (l - 1, 0), (0, 1), (0, l - 1)] {
            let nb = site_code((y + dy) % l, (x + dx) % l);
            row[nb] -= params.t;
        }
    }
    k
}

fn split(i: usize) -> (usize, usize) {
    (i & 3, (i >> 2) & 3)
}

/// Kinetic, contact and static-nucleon terms as a Pauli sum in the
/// compiled term order.
pub fn build_hamiltonian(params: &LatticeModelParams) -> Result<PauliSumOperator> {
    params.validate()?;
    let k = kinetic(params);
    let mut m = CMatrix::zeros(16, 16);
    for col in 0..16 {
        let (up, down) = split(col);
        for nb in 0..4 {
            m[(nb | (down << 2), col)] += C64::new(k[nb][up], 0.0);
            m[(up | (nb << 2), col)] += C64::new(k[nb][down], 0.0);
        }
        let mut diag = 0.0;
        if up == down {
            diag += params.u;
        }
        let (n1u, n1d) = ((up == 0) as u8 as f64, (down == 0) as u8 as f64);
        diag += params.u * (n1u + n1d) + params.v * n1u * n1d;
        m[(col, col)] += C64::new(diag, 0.0);
    }
    let h = PauliSumOperator::from_hermitian_matrix(N_SYSTEM, &m)?;
    layout_order(&h)
}

/// Reorders terms so the compiled layout comes first; other terms keep their order.
pub fn layout_order(h: &PauliSumOperator) -> Result<PauliSumOperator> {
    if h.n() != N_SYSTEM {
        return Ok(h.clone());
    }
    let labels: Vec<String> = h.terms().iter().map(|(_, p)| p.to_string()).collect();
    let mut order: Vec<usize> = Vec::with_capacity(labels.len());
    let mut rest: Vec<usize> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        if NUCLEAR_TERM_ORDER.contains(&l.as_str()) {
            continue;
        }
        rest.push(i);
    }
    let ident: Vec<usize> = rest.iter().copied().filter(|&i| h.terms()[i].1.is_identity()).collect();
    order.extend(&ident);
    for want in NUCLEAR_TERM_ORDER {
        if let Some(i) = labels.iter().position(|l| l == want) {
            order.push(i);
        }
    }
    order.extend(rest.iter().filter(|i| !ident.contains(i)));
    h.reordered(&order)
}

/// The printed operator for `t = 1, U = -7, V = 28`.
pub fn nuclear_hamiltonian() -> PauliSumOperator {
    let mut terms = vec![(4.5, PauliString::identity(N_SYSTEM))];
    for (i, l) in NUCLEAR_TERM_ORDER.iter().enumerate() {
        let c = if i < 4 { -2.0 } else { 1.75 };
        terms.push((c, l.parse().expect("valid label")));
    }
    PauliSumOperator::new(N_SYSTEM, terms).expect("valid operator")
}

/// Drops the identity term; returns the shifted operator and the removed constant.
pub fn shift_identity(h: &PauliSumOperator) -> (PauliSumOperator, f64) {
    let c = h.identity_coefficient();
    let terms = h.terms().iter().filter(|(_, p)| !p.is_identity()).cloned().collect();
    (PauliSumOperator::new(h.n(), terms).expect("subset of a valid operator"), c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumVector {
    pub x: [i64; 2],
    pub q: [f64; 2],
}

impl MomentumVector {
    /// `q = pi / (L a) * x`
    pub fn new(x: [i64; 2], params: &LatticeModelParams) -> Self {
        let s = std::f64::consts::PI / (params.l as f64 * params.a);
        MomentumVector { x, q: [s * x[0] as f64, s * x[1] as f64] }
    }
}

/// `O(q) = sum_f e_f sum_i exp(i q . r_i) n_{i,f}` with `r_i = L a (x_i, y_i)`.
///
/// Only real phases are supported; a complex result is an error.
pub fn excitation_operator(
    params: &LatticeModelParams,
    k: &MomentumVector,
    e_up: f64,
    e_down: f64,
) -> Result<PauliSumOperator> {
    params.validate()?;
    let scale = params.l as f64 * params.a;
    let phase = |code: usize| {
        let (y, x) = coords(code);
        let arg = k.q[0] * scale * x as f64 + k.q[1] * scale * y as f64;
        C64::from_polar(1.0, arg)
    };
    let mut m = CMatrix::zeros(16, 16);
    for i in 0..16 {
        let (up, down) = split(i);
        let v = phase(up) * e_up + phase(down) * e_down;
        if v.im.abs() > 1e-12 {
            return Err(QemError::ComplexExcitation);
        }
        m[(i, i)] = C64::new(v.re, 0.0);
    }
    PauliSumOperator::from_hermitian_matrix(N_SYSTEM, &m)
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
}

/// Eigenvectors carry a fixed phase: first significant amplitude real positive.
fn fix_phase(v: &crate::linalg::CVector) -> crate::linalg::CVector {
    let pivot = v.iter().find(|z| z.norm() > 1e-8).copied().unwrap_or(C64::new(1.0, 0.0));
    v * (pivot.conj() / pivot.norm())
}

pub fn spectral_decomposition(h: &PauliSumOperator) -> Result<SpectralDecomposition> {
    let (energies, vecs) = hermitian_eigen(&h.to_matrix()?)?;
    let states = (0..energies.len())
        .map(|i| StateVector::from_amplitudes(h.n(), fix_phase(&vecs.column(i).into_owned())))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralDecomposition { energies, states })
}

/// Lowest eigenpair. In a degenerate ground space the eigensolver's first
/// vector is returned with its phase fixed, so the choice is deterministic.
pub fn exact_ground_state(h: &PauliSumOperator) -> Result<(f64, StateVector)> {
    let sd = spectral_decomposition(h)?;
    Ok((sd.energies[0], sd.states[0].clone()))
}

/// `<psi| O_k^dagger exp(-i h t) O_l |psi>`
pub fn exact_moment(h: &PauliSumOperator, psi: &StateVector, ok: &PauliString, ol: &PauliString, t: f64) -> Result<C64> {
    let u = exact_evolution(h, t)?;
    let left = psi.apply(&ok.to_matrix()?);
    let right = psi.apply(&(u * ol.to_matrix()?));
    Ok(left.inner(&right))
}

/// `<psi| O^dagger exp(-i h t) O |psi>` for a Pauli-sum excitation.
pub fn exact_operator_moment(h: &PauliSumOperator, psi: &StateVector, o: &PauliSumOperator, t: f64) -> Result<C64> {
    let om = o.to_matrix()?;
    let u = exact_evolution(h, t)?;
    let phi = psi.apply(&om);
    Ok(phi.inner(&phi.apply(&u)))
}

/// Transition strengths `|<f|O|psi>|^2` paired with excitation energies `E_f - E_0`.
pub fn transition_strengths(h: &PauliSumOperator, psi: &StateVector, o: &PauliSumOperator) -> Result<Vec<(f64, f64)>> {
    let sd = spectral_decomposition(h)?;
    let e0 = sd.energies[0];
    let phi = psi.apply(&o.to_matrix()?);
    Ok(sd
        .energies
        .iter()
        .zip(&sd.states)
        .map(|(e, f)| (e - e0, f.inner(&phi).norm_sqr()))
        .collect())
}

/// `sum_f |<f|O|psi>|^2 exp(-(nu - (E_f - E_0))^2 / (2 delta^2))` on the grid.
pub fn exact_response(
    h: &PauliSumOperator,
    psi: &StateVector,
    o: &PauliSumOperator,
    nu_grid: &[f64],
    delta: f64,
) -> Result<ResponseCurve> {
    if !(delta > 0.0) {
        return Err(QemError::InvalidParameter(format!("kernel width {delta}")));
    }
    let strengths = transition_strengths(h, psi, o)?;
    let values = nu_grid
        .iter()
        .map(|nu| {
            strengths
                .iter()
                .map(|(w, s)| s * (-(nu - w).powi(2) / (2.0 * delta * delta)).exp())
                .sum()
        })
        .collect();
    Ok(ResponseCurve::new(nu_grid.to_vec(), values, vec![0.0; nu_grid.len()]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_same(a: &PauliSumOperator, b: &PauliSumOperator) {
        assert_eq!(a.len(), b.len(), "{a} vs {b}");
        for (c, p) in b.terms() {
            assert!((a.coefficient_of(p) - c).abs() < 1e-12, "{p}: {} vs {c}", a.coefficient_of(p));
        }
    }

    #[test]
    fn builder_reproduces_printed_hamiltonian() {
        let h = build_hamiltonian(&LatticeModelParams::default()).unwrap();
        assert_same(&h, &nuclear_hamiltonian());
        let labels: Vec<String> = h.terms().iter().skip(1).map(|(_, p)| p.to_string()).collect();
        assert_eq!(labels, NUCLEAR_TERM_ORDER);
    }

    #[test]
    fn zero_parameters_give_zero_operator() {
        let p = LatticeModelParams { t: 0.0, u: 0.0, v: 0.0, ..Default::default() };
        assert!(build_hamiltonian(&p).unwrap().is_empty());
    }

    #[test]
    fn unsupported_lattice() {
        let p = LatticeModelParams { l: 3, ..Default::default() };
        assert_eq!(build_hamiltonian(&p), Err(QemError::UnsupportedLattice(3)));
    }

    #[test]
    fn excitation_is_z1_plus_z3() {
        let p = LatticeModelParams::default();
        let o = excitation_operator(&p, &MomentumVector::new([0, 1], &p), 1.0, 1.0).unwrap();
        let expected = PauliSumOperator::new(4, vec![(1.0, "ZIII".parse().unwrap()), (1.0, "IIZI".parse().unwrap())]).unwrap();
        assert_same(&o, &expected);
        let zero = excitation_operator(&p, &MomentumVector::new([0, 0], &p), 1.0, 1.0).unwrap();
        assert_eq!(zero.len(), 1);
        assert!((zero.identity_coefficient() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shift_moves_spectrum() {
        let h = nuclear_hamiltonian();
        let (ht, c) = shift_identity(&h);
        assert_eq!(c, 4.5);
        let (e, _) = exact_ground_state(&h).unwrap();
        let (et, _) = exact_ground_state(&ht).unwrap();
        assert!((e - et - 4.5).abs() < 1e-10);
        assert!((et + 9.342975).abs() < 1e-5);
    }

    #[test]
    fn single_qubit_ground_state() {
        let h = PauliSumOperator::new(1, vec![(1.0, "Z".parse().unwrap())]).unwrap();
        let (e, psi) = exact_ground_state(&h).unwrap();
        assert!((e + 1.0).abs() < 1e-12);
        assert!((psi.amplitudes()[1].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moment_at_zero_time() {
        let (h, _) = shift_identity(&nuclear_hamiltonian());
        let (_, psi) = exact_ground_state(&h).unwrap();
        let z1: PauliString = "ZIII".parse().unwrap();
        let z3: PauliString = "IIZI".parse().unwrap();
        assert!((exact_moment(&h, &psi, &z1, &z1, 0.0).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-10);
        let z13: PauliString = "ZIZI".parse().unwrap();
        let static_val = psi.expectation_pauli(&z13).unwrap();
        assert!((exact_moment(&h, &psi, &z1, &z3, 0.0).unwrap() - static_val).norm() < 1e-10);
    }
}
