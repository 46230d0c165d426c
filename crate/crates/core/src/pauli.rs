//! Pauli strings with exact phase tracking, and real-weighted Pauli sums.
//!
//! Qubit `q` of an `n`-qubit string acts on bit `q` of the computational
//! basis index (qubit 0 is the least significant bit). Labels are written
//! with qubit 0 first, so `"ZIYZ"` is `Z0 Y2 Z3`.

use std::fmt;
use std::str::FromStr;

use crate::error::{QemError, Result};
use crate::linalg::{CMatrix, C64};

/// Largest register handed to dense conversions unless a caller asks otherwise.
pub const DEFAULT_MAX_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// (x bit, z bit) of the symplectic representation.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Single-site product `self * other` as (phase exponent of i, result).
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' | 'i' | '_' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Phase from the group {+1, +i, -1, -i}, stored as a power of i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u8) -> Phase {
        Phase(k % 4)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    pub fn conj(self) -> Phase {
        Phase((4 - self.0) % 4)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    factors: Vec<Pauli>,
    phase: Phase,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            factors: vec![Pauli::I; n],
            phase: Phase::ONE,
        }
    }

    pub fn new(factors: Vec<Pauli>) -> Self {
        PauliString {
            factors,
            phase: Phase::ONE,
        }
    }

    pub fn with_phase(factors: Vec<Pauli>, phase: Phase) -> Self {
        PauliString { factors, phase }
    }

    /// Builds an `n`-qubit string from `(site, factor)` pairs.
    pub fn from_sparse(n: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = PauliString::identity(n);
        for &(q, p) in sites {
            if q >= n {
                return Err(QemError::SiteOutOfRange { site: q, n });
            }
            s.factors[q] = p;
        }
        Ok(s)
    }

    pub fn single(n: usize, site: usize, p: Pauli) -> Self {
        let mut s = PauliString::identity(n);
        s.factors[site] = p;
        s
    }

    pub fn n(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    pub fn factor(&self, q: usize) -> Pauli {
        self.factors[q]
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Same factors with phase reset to +1.
    pub fn unsigned(&self) -> PauliString {
        PauliString::new(self.factors.clone())
    }

    pub fn support(&self) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(q, _)| q)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.factors.iter().filter(|p| **p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// True when every factor is I or Z.
    pub fn is_diagonal(&self) -> bool {
        self.factors.iter().all(|p| matches!(p, Pauli::I | Pauli::Z))
    }

    pub fn x_mask(&self) -> usize {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, p)| p.bits().0)
            .fold(0, |m, (q, _)| m | (1 << q))
    }

    pub fn z_mask(&self) -> usize {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, p)| p.bits().1)
            .fold(0, |m, (q, _)| m | (1 << q))
    }

    pub fn try_mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n() != other.n() {
            return Err(QemError::LengthMismatch(self.n(), other.n()));
        }
        let mut phase = self.phase * other.phase;
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| {
                let (k, p) = a.mul(*b);
                phase = phase * Phase::from_power(k);
                p
            })
            .collect();
        Ok(PauliString { factors, phase })
    }

    /// Hermitian adjoint: factors are Hermitian, so only the phase conjugates.
    pub fn adjoint(&self) -> PauliString {
        PauliString {
            factors: self.factors.clone(),
            phase: self.phase.conj(),
        }
    }

    /// Embeds into a larger register, placing qubit `q` at `q + offset`.
    pub fn embed(&self, n_total: usize, offset: usize) -> PauliString {
        let mut out = PauliString::identity(n_total);
        for (q, p) in self.factors.iter().enumerate() {
            out.factors[q + offset] = *p;
        }
        out.phase = self.phase;
        out
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        self.to_matrix_limited(DEFAULT_MAX_QUBITS)
    }

    pub fn to_matrix_limited(&self, max_qubits: usize) -> Result<CMatrix> {
        let n = self.n();
        if n > max_qubits {
            return Err(QemError::DimensionOverflow { n, max: max_qubits });
        }
        let dim = 1usize << n;
        let mut m = CMatrix::zeros(dim, dim);
        let xm = self.x_mask();
        let zm = self.z_mask();
        let n_y = self.factors.iter().filter(|p| **p == Pauli::Y).count() as u8;
        let base = (self.phase * Phase::from_power(n_y)).to_complex();
        for col in 0..dim {
            let sign = if (col & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            m[(col ^ xm, col)] = base * sign;
        }
        Ok(m)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.0 {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}")?;
        for p in &self.factors {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = QemError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("-i") {
            (Phase::MINUS_I, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, rest)
        } else if let Some(rest) = s.strip_prefix('i') {
            (Phase::I, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (Phase::ONE, rest)
        } else {
            (Phase::ONE, s)
        };
        let factors = body
            .chars()
            .map(|c| {
                Pauli::from_char(c).ok_or_else(|| QemError::Parse {
                    line: 0,
                    msg: format!("bad pauli label '{c}'"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PauliString { factors, phase })
    }
}

/// True iff the two strings commute: the count of sites where both are
/// non-identity and different is even.
pub fn pauli_commutes(a: &PauliString, b: &PauliString) -> Result<bool> {
    if a.n() != b.n() {
        return Err(QemError::LengthMismatch(a.n(), b.n()));
    }
    let clashes = a
        .factors
        .iter()
        .zip(&b.factors)
        .filter(|(p, q)| **p != Pauli::I && **q != Pauli::I && p != q)
        .count();
    Ok(clashes % 2 == 0)
}

/// Hermitian operator `sum_k c_k P_k` with real coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSumOperator {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSumOperator {
    pub fn zero(n: usize) -> Self {
        PauliSumOperator { n, terms: Vec::new() }
    }

    /// Canonicalizes: phases folded into real coefficients, duplicates merged
    /// in first-occurrence order, zero terms dropped.
    pub fn new(n: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let mut out: Vec<(f64, PauliString)> = Vec::with_capacity(terms.len());
        for (c, s) in terms {
            if s.n() != n {
                return Err(QemError::LengthMismatch(n, s.n()));
            }
            let c = match s.phase() {
                Phase::ONE => c,
                Phase::MINUS_ONE => -c,
                _ => return Err(QemError::NotHermitian),
            };
            let s = s.unsigned();
            match out.iter_mut().find(|(_, t)| *t == s) {
                Some(entry) => entry.0 += c,
                None => out.push((c, s)),
            }
        }
        out.retain(|(c, _)| c.abs() > 1e-14);
        Ok(PauliSumOperator { n, terms: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn identity_coefficient(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(_, s)| s.is_identity())
            .map(|(c, _)| *c)
            .sum()
    }

    pub fn coefficient_of(&self, s: &PauliString) -> f64 {
        self.terms
            .iter()
            .find(|(_, t)| t == s)
            .map(|(c, _)| *c)
            .unwrap_or(0.0)
    }

    /// Same operator with terms in the given order (a permutation of indices).
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.terms.len()];
        if order.len() != self.terms.len() {
            return Err(QemError::InvalidParameter("term order is not a permutation".into()));
        }
        let mut terms = Vec::with_capacity(order.len());
        for &i in order {
            if i >= seen.len() || seen[i] {
                return Err(QemError::InvalidParameter("term order is not a permutation".into()));
            }
            seen[i] = true;
            terms.push(self.terms[i].clone());
        }
        Ok(PauliSumOperator { n: self.n, terms })
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.n > DEFAULT_MAX_QUBITS {
            return Err(QemError::DimensionOverflow {
                n: self.n,
                max: DEFAULT_MAX_QUBITS,
            });
        }
        let dim = 1usize << self.n;
        let mut m = CMatrix::zeros(dim, dim);
        for (c, s) in &self.terms {
            m += s.to_matrix()? * C64::new(*c, 0.0);
        }
        Ok(m)
    }

    /// Pauli decomposition `c_P = Tr(P M) / 2^n` of a Hermitian matrix.
    pub fn from_hermitian_matrix(n: usize, m: &CMatrix) -> Result<Self> {
        let dim = 1usize << n;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(QemError::LengthMismatch(dim, m.nrows()));
        }
        let mut terms = Vec::new();
        for code in 0..(1usize << (2 * n)) {
            let factors: Vec<Pauli> = (0..n)
                .map(|q| match (code >> (2 * q)) & 3 {
                    0 => Pauli::I,
                    1 => Pauli::X,
                    2 => Pauli::Y,
                    _ => Pauli::Z,
                })
                .collect();
            let p = PauliString::new(factors);
            let pm = p.to_matrix()?;
            let c = (&pm * m).trace() / dim as f64;
            if c.im.abs() > 1e-9 {
                return Err(QemError::NotHermitian);
            }
            if c.re.abs() > 1e-12 {
                terms.push((c.re, p));
            }
        }
        PauliSumOperator::new(n, terms)
    }
}

impl fmt::Display for PauliSumOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, s)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}*{s}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn commutation_examples() {
        assert!(!pauli_commutes(&ps("X"), &ps("Z")).unwrap());
        // Z1 Y4 Z3 Z2 vs X1 in 0-based labels.
        assert!(!pauli_commutes(&ps("ZZZY"), &ps("XIII")).unwrap());
        assert!(pauli_commutes(&ps("ZIIZ"), &ps("IZZI")).unwrap());
        assert!(pauli_commutes(&ps("XX"), &ps("ZZ")).unwrap());
        assert!(matches!(
            pauli_commutes(&ps("X"), &ps("XX")),
            Err(QemError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn single_qubit_products_match_matrices() {
        let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        for a in all {
            for b in all {
                let pa = PauliString::new(vec![a]);
                let pb = PauliString::new(vec![b]);
                let prod = pa.try_mul(&pb).unwrap();
                let lhs = prod.to_matrix().unwrap();
                let rhs = pa.to_matrix().unwrap() * pb.to_matrix().unwrap();
                assert!(max_abs_diff(&lhs, &rhs) < 1e-14, "{a:?}{b:?}");
            }
        }
    }

    #[test]
    fn z_matrices() {
        let z = ps("Z").to_matrix().unwrap();
        assert_eq!(z[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(z[(1, 1)], C64::new(-1.0, 0.0));
        let zz = ps("ZZ").to_matrix().unwrap();
        let diag: Vec<f64> = (0..4).map(|i| zz[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, -1.0, -1.0, 1.0]);
    }

    #[test]
    fn qubit_zero_is_least_significant() {
        let x0 = ps("XI").to_matrix().unwrap();
        assert_eq!(x0[(1, 0)], C64::new(1.0, 0.0));
        assert_eq!(x0[(2, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn label_round_trip_keeps_phase() {
        for s in ["XYZI", "-iZZ", "iXY", "-YI"] {
            assert_eq!(ps(s).to_string(), s);
        }
    }

    #[test]
    fn canonicalization_merges_and_drops() {
        let h = PauliSumOperator::new(
            2,
            vec![(1.0, ps("XI")), (2.0, ps("ZZ")), (0.5, ps("XI")), (1.0, ps("-ZZ")), (-1.0, ps("ZZ"))],
        )
        .unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.terms()[0].0, 1.5);
        assert!(PauliSumOperator::new(1, vec![(1.0, ps("iX"))]).is_err());
    }

    #[test]
    fn oversize_matrix_rejected() {
        let big = PauliString::identity(11);
        assert!(matches!(
            big.to_matrix(),
            Err(QemError::DimensionOverflow { n: 11, max: 10 })
        ));
    }

    #[test]
    fn decomposition_recovers_operator() {
        let h = PauliSumOperator::new(2, vec![(0.3, ps("XY")), (-1.2, ps("ZI")), (2.0, ps("II"))]).unwrap();
        let back = PauliSumOperator::from_hermitian_matrix(2, &h.to_matrix().unwrap()).unwrap();
        for (c, s) in h.terms() {
            assert!((back.coefficient_of(s) - c).abs() < 1e-12);
        }
        assert_eq!(back.len(), 3);
    }
}
