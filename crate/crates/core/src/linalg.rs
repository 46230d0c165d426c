//! Dense complex linear algebra shared by the simulators.

use nalgebra::{DMatrix, DVector};

use crate::error::{QemError, Result};
use crate::pauli::PauliSumOperator;

pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ALGEBRA_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    let id = CMatrix::identity(m.nrows(), m.ncols());
    m.is_square() && max_abs_diff(&(m.adjoint() * m), &id) <= tol
}

/// Eigenpairs of a Hermitian matrix sorted by ascending eigenvalue.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !is_hermitian(m, 1e-9) {
        return Err(QemError::NotHermitian);
    }
    let eig = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), idx.len(), |r, col| eig.eigenvectors[(r, idx[col])]);
    Ok((values, vectors))
}

/// `exp(-i m t)` for a Hermitian matrix.
pub fn hermitian_exp(m: &CMatrix, t: f64) -> Result<CMatrix> {
    let (vals, vecs) = hermitian_eigen(m)?;
    let phases = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter().map(|e| C64::from_polar(1.0, -e * t)),
    ));
    Ok(&vecs * phases * vecs.adjoint())
}

/// Exact real-time evolution `e^{-iht}` through eigendecomposition.
pub fn exact_evolution(h: &PauliSumOperator, t: f64) -> Result<CMatrix> {
    hermitian_exp(&h.to_matrix()?, t)
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// `|Tr(U^dagger V)| / dim`; equals 1 iff the unitaries agree up to a global phase.
pub fn phase_fidelity(u: &CMatrix, v: &CMatrix) -> f64 {
    (u.adjoint() * v).trace().norm() / u.nrows() as f64
}

/// Spectral-norm distance after aligning the global phase of `v` to `u`.
pub fn phase_aligned_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    let overlap = (u.adjoint() * v).trace();
    let phase = if overlap.norm() > 0.0 {
        (overlap / overlap.norm()).conj()
    } else {
        C64::new(1.0, 0.0)
    };
    spectral_norm(&(u - v * phase))
}

/// Entrywise distance after global-phase alignment.
pub fn max_diff_up_to_phase(u: &CMatrix, v: &CMatrix) -> f64 {
    let overlap = (u.adjoint() * v).trace();
    let phase = if overlap.norm() > 0.0 {
        (overlap / overlap.norm()).conj()
    } else {
        C64::new(1.0, 0.0)
    };
    max_abs_diff(u, &(v * phase))
}

pub fn equal_up_to_phase(u: &CMatrix, v: &CMatrix, tol: f64) -> bool {
    u.shape() == v.shape() && max_diff_up_to_phase(u, v) <= tol
}

/// Kronecker product with `a` on the high-order bits.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Left-multiplies the rows of `m` by a `2^k x 2^k` operator acting on `sites`.
///
/// Site `sites[b]` maps to local bit `b`.
pub fn apply_local_rows(m: &mut CMatrix, op: &CMatrix, sites: &[usize]) {
    let k = sites.len();
    let local_dim = 1usize << k;
    debug_assert_eq!(op.nrows(), local_dim);
    let mask: usize = sites.iter().map(|s| 1usize << s).sum();
    let offsets: Vec<usize> = (0..local_dim)
        .map(|l| {
            sites
                .iter()
                .enumerate()
                .filter(|(b, _)| (l >> b) & 1 == 1)
                .map(|(_, s)| 1usize << s)
                .sum()
        })
        .collect();
    let dim = m.nrows();
    let mut buf = vec![C64::new(0.0, 0.0); local_dim];
    for col in 0..m.ncols() {
        for base in (0..dim).filter(|i| i & mask == 0) {
            for (l, off) in offsets.iter().enumerate() {
                buf[l] = m[(base | off, col)];
            }
            for (r, off) in offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (l, v) in buf.iter().enumerate() {
                    let a = op[(r, l)];
                    if a.re != 0.0 || a.im != 0.0 {
                        acc += a * v;
                    }
                }
                m[(base | off, col)] = acc;
            }
        }
    }
}

/// `m -> op m op^dagger` with `op` local on `sites`.
pub fn conjugate_local(m: &mut CMatrix, op: &CMatrix, sites: &[usize]) {
    apply_local_rows(m, op, sites);
    let mut t = m.transpose();
    let op_conj = op.map(|z| z.conj());
    apply_local_rows(&mut t, &op_conj, sites);
    *m = t.transpose();
}
