//! Pure and mixed register states.

use crate::error::{QemError, Result};
use crate::linalg::{conjugate_local, CMatrix, CVector, C64, NORM_TOL};
use crate::pauli::PauliString;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: CVector,
}

impl StateVector {
    pub fn zero(n: usize) -> Self {
        let mut amplitudes = CVector::zeros(1 << n);
        amplitudes[0] = C64::new(1.0, 0.0);
        StateVector { n, amplitudes }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amplitudes = CVector::zeros(1 << n);
        amplitudes[index] = C64::new(1.0, 0.0);
        StateVector { n, amplitudes }
    }

    /// Normalizes the input; rejects zero vectors and wrong lengths.
    pub fn from_amplitudes(n: usize, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != 1 << n {
            return Err(QemError::LengthMismatch(1 << n, amplitudes.len()));
        }
        let norm = amplitudes.norm();
        if norm < NORM_TOL {
            return Err(QemError::InvalidParameter("zero state vector".into()));
        }
        Ok(StateVector {
            n,
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn apply(&self, u: &CMatrix) -> StateVector {
        StateVector {
            n: self.n,
            amplitudes: u * &self.amplitudes,
        }
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }

    pub fn expectation_pauli(&self, p: &PauliString) -> Result<C64> {
        Ok(self.expectation(&p.to_matrix()?))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            n: self.n,
            m: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    m: CMatrix,
}

impl DensityMatrix {
    pub fn zero(n: usize) -> Self {
        StateVector::zero(n).to_density()
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1 << n;
        DensityMatrix {
            n,
            m: CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0),
        }
    }

    /// Wraps a matrix without normalization checks (used for unnormalized
    /// projections); see [`DensityMatrix::is_valid`].
    pub fn from_matrix(n: usize, m: CMatrix) -> Result<Self> {
        if m.nrows() != 1 << n || m.ncols() != 1 << n {
            return Err(QemError::LengthMismatch(1 << n, m.nrows()));
        }
        Ok(DensityMatrix { n, m })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Hermitian, unit trace, eigenvalues >= -1e-10.
    pub fn is_valid(&self) -> bool {
        if !crate::linalg::is_hermitian(&self.m, 1e-10) || (self.trace() - 1.0).abs() > 1e-10 {
            return false;
        }
        crate::linalg::hermitian_eigen(&self.m)
            .map(|(vals, _)| vals.iter().all(|v| *v >= -1e-10))
            .unwrap_or(false)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.m.nrows()).map(|i| self.m[(i, i)].re.max(0.0)).collect()
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (op * &self.m).trace()
    }

    pub fn expectation_pauli(&self, p: &PauliString) -> Result<f64> {
        if p.n() != self.n {
            return Err(QemError::LengthMismatch(self.n, p.n()));
        }
        Ok(self.expectation(&p.to_matrix_limited(self.n.max(crate::pauli::DEFAULT_MAX_QUBITS))?).re)
    }

    /// `rho -> U rho U^dagger` with `U` local on `sites`.
    pub fn apply_unitary(&mut self, u: &CMatrix, sites: &[usize]) -> Result<()> {
        check_sites(self.n, sites)?;
        conjugate_local(&mut self.m, u, sites);
        Ok(())
    }

    /// `rho -> U rho U^dagger` with a full-register unitary.
    pub fn apply_full(&mut self, u: &CMatrix) {
        self.m = u * &self.m * u.adjoint();
    }

    pub fn fidelity_with_pure(&self, psi: &StateVector) -> f64 {
        psi.amplitudes().dotc(&(&self.m * psi.amplitudes())).re
    }
}

pub(crate) fn check_sites(n: usize, sites: &[usize]) -> Result<()> {
    for (i, &s) in sites.iter().enumerate() {
        if s >= n {
            return Err(QemError::SiteOutOfRange { site: s, n });
        }
        if sites[..i].contains(&s) {
            return Err(QemError::DuplicateSite(s));
        }
    }
    Ok(())
}

/// `Tr_system[rho (|s><s| (x) 1_ancilla)]` for the system basis label `system_state`.
///
/// The result is the unnormalized 2x2 ancilla block; its trace is the
/// probability of finding the system in `|s>`.
pub fn project_and_reduce(rho: &DensityMatrix, ancilla: usize, system_state: usize) -> Result<CMatrix> {
    let n = rho.n();
    if ancilla >= n {
        return Err(QemError::SiteOutOfRange { site: ancilla, n });
    }
    let low_mask = (1usize << ancilla) - 1;
    let base = (system_state & low_mask) | ((system_state & !low_mask) << 1);
    if base >= 1 << n {
        return Err(QemError::InvalidParameter("system label out of range".into()));
    }
    let idx = |a: usize| base | (a << ancilla);
    Ok(CMatrix::from_fn(2, 2, |r, c| rho.matrix()[(idx(r), idx(c))]))
}

/// `Tr rho^2` of a trace-normalized matrix.
pub fn purity(rho: &CMatrix) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, max_abs_diff};

    #[test]
    fn purity_examples() {
        assert!((purity(DensityMatrix::zero(2).matrix()) - 1.0).abs() < 1e-14);
        assert!((purity(DensityMatrix::maximally_mixed(1).matrix()) - 0.5).abs() < 1e-14);
        // Bloch vector of length b along X.
        let b: f64 = 0.6;
        let m = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(b / 2.0, 0.0), c(b / 2.0, 0.0), c(0.5, 0.0)]);
        assert!((purity(&m) - (1.0 + b * b) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn projection_of_plus_ancilla() {
        // system qubits 0..2 in |00>, ancilla (qubit 2) in |+>.
        let s = 0.5f64.sqrt();
        let mut amps = CVector::zeros(8);
        amps[0] = c(s, 0.0);
        amps[4] = c(s, 0.0);
        let rho = StateVector::from_amplitudes(3, amps).unwrap().to_density();
        let r = project_and_reduce(&rho, 2, 0).unwrap();
        let expected = CMatrix::from_element(2, 2, c(0.5, 0.0));
        assert!(max_abs_diff(&r, &expected) < 1e-14);
        assert!(project_and_reduce(&rho, 3, 0).is_err());
    }

    #[test]
    fn site_checks() {
        let mut rho = DensityMatrix::zero(2);
        let x = CMatrix::identity(2, 2);
        assert!(matches!(rho.apply_unitary(&x, &[2]), Err(QemError::SiteOutOfRange { .. })));
        let cx = CMatrix::identity(4, 4);
        assert!(matches!(rho.apply_unitary(&cx, &[1, 1]), Err(QemError::DuplicateSite(1))));
    }
}
