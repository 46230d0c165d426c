//! Quantum channels in Kraus form with a fast path for depolarizing noise.

use crate::error::{QemError, Result};
use crate::linalg::{c, max_abs_diff, CMatrix, C64};
use crate::state::{check_sites, DensityMatrix};

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// `(1-p) rho + p Tr_S(rho) (x) 1/2^m`
    Depolarizing(f64),
    Kraus(Vec<CMatrix>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    arity: usize,
    kind: Kind,
}

impl Channel {
    pub fn depolarizing(arity: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QemError::InvalidParameter(format!("depolarizing p = {p}")));
        }
        if arity == 0 {
            return Err(QemError::InvalidParameter("zero-arity channel".into()));
        }
        Ok(Channel { arity, kind: Kind::Depolarizing(p) })
    }

    /// Kraus channel; rejects sets that are not trace preserving within 1e-10.
    pub fn from_kraus(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| QemError::InvalidParameter("empty Kraus set".into()))?;
        let dim = first.nrows();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(QemError::InvalidParameter("Kraus dimension must be 2^m".into()));
        }
        let mut sum = CMatrix::zeros(dim, dim);
        for k in &kraus {
            if k.shape() != (dim, dim) {
                return Err(QemError::InvalidParameter("Kraus operators differ in shape".into()));
            }
            sum += k.adjoint() * k;
        }
        if max_abs_diff(&sum, &CMatrix::identity(dim, dim)) > 1e-10 {
            return Err(QemError::InvalidParameter("Kraus set is not trace preserving".into()));
        }
        Ok(Channel {
            arity: dim.trailing_zeros() as usize,
            kind: Kind::Kraus(kraus),
        })
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::from_kraus(vec![u])
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_prob(gamma, "amplitude damping")?;
        let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - gamma).sqrt(), 0.0)]);
        let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(gamma.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        Self::from_kraus(vec![k0, k1])
    }

    pub fn phase_damping(gamma: f64) -> Result<Self> {
        check_prob(gamma, "phase damping")?;
        let k0 = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - gamma).sqrt(), 0.0)]);
        let k1 = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(gamma.sqrt(), 0.0)]);
        Self::from_kraus(vec![k0, k1])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn depolarizing_probability(&self) -> Option<f64> {
        match self.kind {
            Kind::Depolarizing(p) => Some(p),
            Kind::Kraus(_) => None,
        }
    }

    /// Explicit Kraus operators (the depolarizing form expands to 4^m Paulis).
    pub fn kraus(&self) -> Vec<CMatrix> {
        match &self.kind {
            Kind::Kraus(k) => k.clone(),
            Kind::Depolarizing(p) => {
                let m = self.arity;
                let count = 1usize << (2 * m);
                let paulis = [
                    CMatrix::identity(2, 2),
                    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
                    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
                    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
                ];
                (0..count)
                    .map(|label| {
                        let mut op = CMatrix::identity(1, 1);
                        for b in (0..m).rev() {
                            op = op.kronecker(&paulis[(label >> (2 * b)) & 3]);
                        }
                        let w = if label == 0 {
                            1.0 - p + p / count as f64
                        } else {
                            p / count as f64
                        };
                        op * C64::new(w.sqrt(), 0.0)
                    })
                    .collect()
            }
        }
    }
}

fn check_prob(x: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(QemError::InvalidParameter(format!("{what} parameter {x} outside [0, 1]")));
    }
    Ok(())
}

pub fn apply_channel(rho: &DensityMatrix, ch: &Channel, qubits: &[usize]) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    apply_channel_in_place(&mut out, ch, qubits)?;
    Ok(out)
}

pub fn apply_channel_in_place(rho: &mut DensityMatrix, ch: &Channel, qubits: &[usize]) -> Result<()> {
    if ch.arity != qubits.len() {
        return Err(QemError::ArityMismatch { arity: ch.arity, sites: qubits.len() });
    }
    check_sites(rho.n(), qubits)?;
    match &ch.kind {
        Kind::Depolarizing(p) => {
            if *p > 0.0 {
                depolarize(rho.matrix_mut(), *p, qubits);
            }
        }
        Kind::Kraus(ks) => {
            if ks.len() == 1 {
                return rho.apply_unitary(&ks[0], qubits);
            }
            let src = rho.matrix().clone();
            let mut acc = CMatrix::zeros(src.nrows(), src.ncols());
            for k in ks {
                let mut term = src.clone();
                crate::linalg::conjugate_local(&mut term, k, qubits);
                acc += term;
            }
            *rho.matrix_mut() = acc;
        }
    }
    Ok(())
}

/// In-place `(1-p) rho + p Tr_S(rho) (x) 1/2^m` over the sites in `qubits`.
fn depolarize(m: &mut CMatrix, p: f64, qubits: &[usize]) {
    let mask: usize = qubits.iter().map(|s| 1usize << s).sum();
    let local_dim = 1usize << qubits.len();
    let dim = m.nrows();
    let offsets: Vec<usize> = (0..local_dim)
        .map(|l| {
            qubits
                .iter()
                .enumerate()
                .filter(|(b, _)| (l >> b) & 1 == 1)
                .map(|(_, s)| 1usize << s)
                .sum()
        })
        .collect();
    let scale = p / local_dim as f64;
    for r in (0..dim).filter(|i| i & mask == 0) {
        for col in (0..dim).filter(|i| i & mask == 0) {
            // Partial trace over S on the (r, col) environment block.
            let tr: C64 = offsets.iter().map(|o| m[(r | o, col | o)]).sum();
            for a in &offsets {
                for b in &offsets {
                    let v = m[(r | a, col | b)] * (1.0 - p);
                    m[(r | a, col | b)] = if a == b { v + tr * scale } else { v };
                }
            }
        }
    }
}
