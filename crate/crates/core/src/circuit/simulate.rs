use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::compile::lower_gate;
use super::{Circuit, Gate};
use crate::channel::{apply_channel_in_place, Channel};
use crate::error::{QemError, Result};
use crate::linalg::{apply_local_rows, CMatrix};
use crate::noise::NoiseModel;
use crate::pauli::DEFAULT_MAX_QUBITS;
use crate::state::{DensityMatrix, StateVector};

fn check_size(n: usize) -> Result<()> {
    if n > DEFAULT_MAX_QUBITS {
        return Err(QemError::DimensionOverflow { n, max: DEFAULT_MAX_QUBITS });
    }
    Ok(())
}

/// Product of the gate matrices in sequence order.
pub fn circuit_to_unitary(c: &Circuit) -> Result<CMatrix> {
    check_size(c.n())?;
    let dim = 1usize << c.n();
    let mut u = CMatrix::identity(dim, dim);
    for g in c.gates() {
        apply_local_rows(&mut u, &g.local_matrix(), &g.sites());
    }
    Ok(u)
}

pub fn run_statevector(c: &Circuit, input: &StateVector) -> Result<StateVector> {
    check_size(c.n())?;
    if input.n() != c.n() {
        return Err(QemError::LengthMismatch(c.n(), input.n()));
    }
    let dim = 1usize << c.n();
    let mut v = CMatrix::from_iterator(dim, 1, input.amplitudes().iter().cloned());
    for g in c.gates() {
        apply_local_rows(&mut v, &g.local_matrix(), &g.sites());
    }
    StateVector::from_amplitudes(c.n(), v.column(0).into_owned())
}

/// Applies each gate followed by the channels the model attaches to it, then
/// the optional global channel. Readout error is left to sampling.
pub fn simulate_noisy(c: &Circuit, nm: &NoiseModel, rho_in: &DensityMatrix) -> Result<DensityMatrix> {
    check_size(c.n())?;
    if rho_in.n() != c.n() {
        return Err(QemError::LengthMismatch(c.n(), rho_in.n()));
    }
    let mut rho = rho_in.clone();
    let overrotation = if nm.cnot_overrotation() != 0.0 {
        Some(Channel::unitary(Gate::Rz(0, nm.cnot_overrotation()).local_matrix())?)
    } else {
        None
    };
    for g in c.gates() {
        let lowered;
        let gates: &[Gate] = if g.is_controlled_pauli() {
            lowered = lower_gate(g, None)?;
            &lowered
        } else {
            std::slice::from_ref(g)
        };
        for g in gates {
            let sites = g.sites();
            rho.apply_unitary(&g.local_matrix(), &sites)?;
            match sites.len() {
                1 => {
                    if let Some(ch) = nm.one_qubit() {
                        apply_channel_in_place(&mut rho, ch, &sites)?;
                    }
                }
                _ => {
                    if let (Some(ch), Gate::Cnot { target, .. }) = (&overrotation, g) {
                        apply_channel_in_place(&mut rho, ch, &[*target])?;
                    }
                    if let Some(ch) = nm.two_qubit() {
                        apply_channel_in_place(&mut rho, ch, &sites)?;
                    }
                    for ch in nm.idle_channels() {
                        for q in 0..c.n() {
                            apply_channel_in_place(&mut rho, ch, &[q])?;
                        }
                    }
                }
            }
        }
    }
    if nm.global_depolarizing() > 0.0 {
        let all: Vec<usize> = (0..c.n()).collect();
        apply_channel_in_place(&mut rho, &Channel::depolarizing(c.n(), nm.global_depolarizing())?, &all)?;
    }
    Ok(rho)
}

/// Per-qubit readout matrix, `p[i][j]` = P(read i | true j).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confusion(pub [[f64; 2]; 2]);

impl Confusion {
    pub const IDEAL: Confusion = Confusion([[1.0, 0.0], [0.0, 1.0]]);

    /// Columns must be probability vectors.
    pub fn new(p: [[f64; 2]; 2]) -> Result<Self> {
        for (j, col) in [[p[0][0], p[1][0]], [p[0][1], p[1][1]]].iter().enumerate() {
            if col.iter().any(|x| !(0.0..=1.0).contains(x)) || (col[0] + col[1] - 1.0).abs() > 1e-12 {
                return Err(QemError::InvalidParameter(format!("confusion column {j} is not stochastic")));
            }
        }
        Ok(Confusion(p))
    }

    /// Flip probabilities `e0 = P(1|0)`, `e1 = P(0|1)`.
    pub fn asymmetric(e0: f64, e1: f64) -> Result<Self> {
        Self::new([[1.0 - e0, e1], [e0, 1.0 - e1]])
    }

    pub fn symmetric(e: f64) -> Result<Self> {
        Self::asymmetric(e, e)
    }

    pub fn inverse(&self, qubit: usize) -> Result<[[f64; 2]; 2]> {
        let [[a, b], [c, d]] = self.0;
        let det = a * d - b * c;
        if det.abs() < 1e-12 {
            return Err(QemError::SingularConfusion(qubit));
        }
        Ok([[d / det, -b / det], [-c / det, a / det]])
    }
}

/// Applies per-qubit confusion to a distribution over basis labels.
/// A single entry is broadcast to every qubit; an empty slice means perfect readout.
pub fn apply_confusion(probs: &[f64], n: usize, confusion: &[Confusion]) -> Result<Vec<f64>> {
    if confusion.is_empty() {
        return Ok(probs.to_vec());
    }
    if confusion.len() != 1 && confusion.len() != n {
        return Err(QemError::LengthMismatch(n, confusion.len()));
    }
    let mut p = probs.to_vec();
    for q in 0..n {
        let m = confusion[if confusion.len() == 1 { 0 } else { q }].0;
        let bit = 1usize << q;
        for i in (0..p.len()).filter(|i| i & bit == 0) {
            let (p0, p1) = (p[i], p[i | bit]);
            p[i] = m[0][0] * p0 + m[0][1] * p1;
            p[i | bit] = m[1][0] * p0 + m[1][1] * p1;
        }
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementCounts {
    n: usize,
    counts: Vec<u64>,
}

impl MeasurementCounts {
    pub fn new(n: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != 1 << n {
            return Err(QemError::LengthMismatch(1 << n, counts.len()));
        }
        Ok(MeasurementCounts { n, counts })
    }

    pub fn empty(n: usize) -> Self {
        MeasurementCounts { n, counts: vec![0; 1 << n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, label: usize) -> u64 {
        self.counts[label]
    }

    /// Number of shots in which qubit `q` read 1.
    pub fn ones(&self, q: usize) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .filter(|(i, _)| (i >> q) & 1 == 1)
            .map(|(_, c)| *c)
            .sum()
    }

    /// `<Z_q>` from the empirical frequencies.
    pub fn expectation_z(&self, q: usize) -> Option<f64> {
        let s = self.shots();
        (s > 0).then(|| 1.0 - 2.0 * self.ones(q) as f64 / s as f64)
    }

    /// Union of two records on the same register.
    pub fn merge(&mut self, other: &MeasurementCounts) -> Result<()> {
        if other.n != self.n {
            return Err(QemError::LengthMismatch(self.n, other.n));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// `label,count` rows; labels list qubit 0 first.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,count\n");
        for (i, c) in self.counts.iter().enumerate().filter(|(_, c)| **c > 0) {
            let label: String = (0..self.n).map(|q| if (i >> q) & 1 == 1 { '1' } else { '0' }).collect();
            out.push_str(&format!("{label},{c}\n"));
        }
        out
    }
}

/// Multinomial draw through a chain of conditional binomials.
pub fn sample_probabilities<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    for (i, p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        if i + 1 == probs.len() || mass <= 0.0 {
            out[i] = remaining;
            break;
        }
        let frac = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, frac).map(|b| b.sample(rng)).unwrap_or(0);
        out[i] = k;
        remaining -= k;
        mass -= p;
    }
    out
}

/// Samples computational-basis outcomes of `rho`, with readout confusion
/// applied to the outcome distribution.
pub fn sample_counts(rho: &DensityMatrix, shots: u64, confusion: &[Confusion], seed: u64) -> Result<MeasurementCounts> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_counts_with(rho, shots, confusion, &mut rng)
}

pub fn sample_counts_with<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    shots: u64,
    confusion: &[Confusion],
    rng: &mut R,
) -> Result<MeasurementCounts> {
    if shots == 0 {
        return Err(QemError::InvalidParameter("shots must be positive".into()));
    }
    let probs = apply_confusion(&rho.probabilities(), rho.n(), confusion)?;
    MeasurementCounts::new(rho.n(), sample_probabilities(&probs, shots, rng))
}
