//! Estimator-side error mitigation for Hadamard-test moments.

mod circuits;
mod readout;
mod twirl;

pub use circuits::{
    build_ev_circuit, build_odr_circuits, with_measurement_basis, Basis, CircuitStyle, MomentSpec, OdrCircuits,
};
pub use readout::{control_flip_combine, control_flip_pair, mitigated_expectation_z, readout_mitigate};
pub use twirl::pauli_twirl;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{sample_counts_with, Confusion, MeasurementCounts};
use crate::error::{QemError, Result};
use crate::estimation::{posterior_resample, ResampleConfig};
use crate::linalg::{c, C64};
use crate::pauli::{Pauli, PauliString};
use crate::state::{project_and_reduce, DensityMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub value: C64,
    pub sigma_re: f64,
    pub sigma_im: f64,
    /// Purity of the post-selected ancilla state.
    pub purity: f64,
    pub p0_success: f64,
    /// ODR reference expectation, when renormalized.
    pub renorm_factor: Option<f64>,
    /// False for fallbacks and unstable renormalizations.
    pub valid: bool,
}

impl MomentEstimate {
    pub fn exact(value: C64) -> Self {
        MomentEstimate {
            value,
            sigma_re: 0.0,
            sigma_im: 0.0,
            purity: 1.0,
            p0_success: 1.0,
            renorm_factor: None,
            valid: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Raw,
    Ev,
    Pev,
}

/// Ancilla expectations: `post` on the post-selected subset (normalized by
/// `p0`), `full` over every shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AncillaBloch {
    pub post: [f64; 3],
    pub full: [f64; 3],
    pub p0: f64,
}

impl AncillaBloch {
    /// Exact expectations of a simulated state, post-selecting the other
    /// qubits on `|0...0>`.
    pub fn from_density(rho: &DensityMatrix, ancilla: usize) -> Result<Self> {
        let r0 = project_and_reduce(rho, ancilla, 0)?;
        let p0 = (r0[(0, 0)] + r0[(1, 1)]).re;
        let post = if p0 > 0.0 {
            [2.0 * r0[(1, 0)].re / p0, 2.0 * r0[(1, 0)].im / p0, (r0[(0, 0)] - r0[(1, 1)]).re / p0]
        } else {
            [0.0; 3]
        };
        let n = rho.n();
        let full = [Pauli::X, Pauli::Y, Pauli::Z]
            .map(|p| rho.expectation_pauli(&PauliString::single(n, ancilla, p)).unwrap_or(0.0));
        Ok(AncillaBloch { post, full, p0 })
    }

    pub fn post_purity(&self) -> f64 {
        let r2: f64 = self.post.iter().map(|x| x * x).sum();
        ((1.0 + r2) / 2.0).min(1.0)
    }
}

/// `Re a = <X>_0 / (1 + <Z>_0)`, `Im a = <Y>_0 / (1 + <Z>_0)`.
pub fn ev_from_bloch(b: [f64; 3]) -> Result<C64> {
    let d = 1.0 + b[2];
    if d.abs() < 1e-12 {
        return Err(QemError::UndefinedEstimate("post-selected <Z> = -1".into()));
    }
    Ok(c(b[0] / d, b[1] / d))
}

/// Closest pure state: the Bloch vector is clipped to the ball and scaled to
/// unit length. A zero vector falls back to the plain formula, flagged by the
/// second value.
pub fn pev_from_bloch(b: [f64; 3]) -> Result<(C64, bool)> {
    let r = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if r < 1e-12 {
        return Ok((ev_from_bloch(b)?, true));
    }
    Ok((ev_from_bloch(b.map(|x| x / r))?, false))
}

fn point(kind: EstimatorKind, b: &AncillaBloch) -> Result<(C64, bool)> {
    match kind {
        EstimatorKind::Raw => Ok((c(b.full[0], b.full[1]), false)),
        EstimatorKind::Ev => Ok((ev_from_bloch(b.post)?, false)),
        EstimatorKind::Pev => pev_from_bloch(b.post),
    }
}

/// Noiseless-shot estimate from exact expectations.
pub fn exact_estimate(kind: EstimatorKind, b: &AncillaBloch) -> Result<MomentEstimate> {
    let (value, fallback) = point(kind, b)?;
    Ok(MomentEstimate {
        value,
        purity: b.post_purity(),
        p0_success: b.p0,
        valid: !fallback,
        ..MomentEstimate::exact(value)
    })
}

/// Count records of the three ancilla bases reduced to two bits: bit 0 is the
/// ancilla outcome, bit 1 is set when the other qubits were not all zero.
/// Post-selection is done per basis.
#[derive(Debug, Clone, PartialEq)]
pub struct AncillaTomogram {
    pub counts_x: MeasurementCounts,
    pub counts_y: MeasurementCounts,
    pub counts_z: MeasurementCounts,
}

/// Reduces a full-register record to the two-bit form.
pub fn reduce_record(full: &MeasurementCounts, ancilla: usize) -> Result<MeasurementCounts> {
    if ancilla >= full.n() {
        return Err(QemError::SiteOutOfRange { site: ancilla, n: full.n() });
    }
    let mut out = vec![0u64; 4];
    for (label, &k) in full.counts().iter().enumerate() {
        let a = (label >> ancilla) & 1;
        let rejected = usize::from(label & !(1 << ancilla) != 0);
        out[a | rejected << 1] += k;
    }
    MeasurementCounts::new(2, out)
}

impl AncillaTomogram {
    pub fn new(counts_x: MeasurementCounts, counts_y: MeasurementCounts, counts_z: MeasurementCounts) -> Result<Self> {
        for r in [&counts_x, &counts_y, &counts_z] {
            if r.n() != 2 {
                return Err(QemError::LengthMismatch(2, r.n()));
            }
            if r.shots() == 0 {
                return Err(QemError::UndefinedEstimate("empty basis record".into()));
            }
        }
        Ok(AncillaTomogram { counts_x, counts_y, counts_z })
    }

    pub fn from_full(
        x: &MeasurementCounts,
        y: &MeasurementCounts,
        z: &MeasurementCounts,
        ancilla: usize,
    ) -> Result<Self> {
        Self::new(reduce_record(x, ancilla)?, reduce_record(y, ancilla)?, reduce_record(z, ancilla)?)
    }

    fn records(&self) -> [&MeasurementCounts; 3] {
        [&self.counts_x, &self.counts_y, &self.counts_z]
    }

    pub fn bloch(&self) -> Result<AncillaBloch> {
        bloch_of(self.records())
    }
}

fn bloch_of(records: [&MeasurementCounts; 3]) -> Result<AncillaBloch> {
    let mut post = [0.0; 3];
    let mut full = [0.0; 3];
    for (i, r) in records.iter().enumerate() {
        let (a0, a1, b0, b1) = (r.get(0) as f64, r.get(1) as f64, r.get(2) as f64, r.get(3) as f64);
        if a0 + a1 == 0.0 {
            return Err(QemError::UndefinedEstimate("no post-selected shots".into()));
        }
        post[i] = (a0 - a1) / (a0 + a1);
        full[i] = (a0 + b0 - a1 - b1) / r.shots() as f64;
    }
    let z = records[2];
    let p0 = (z.get(0) + z.get(1)) as f64 / z.shots() as f64;
    Ok(AncillaBloch { post, full, p0 })
}

/// Point estimate from the observed counts with Bayesian resampled sigmas.
pub fn estimate_moment(
    t: &AncillaTomogram,
    kind: EstimatorKind,
    cfg: &ResampleConfig,
    seed: u64,
) -> Result<MomentEstimate> {
    let b = t.bloch()?;
    let (value, fallback) = point(kind, &b)?;
    let records = [t.counts_x.clone(), t.counts_y.clone(), t.counts_z.clone()];
    let s = posterior_resample(&records, cfg, seed, |r| {
        let b = bloch_of([&r[0], &r[1], &r[2]]).ok()?;
        let (v, _) = point(kind, &b).ok()?;
        Some(vec![v.re, v.im])
    })?;
    Ok(MomentEstimate {
        value,
        sigma_re: s.sigma[0],
        sigma_im: s.sigma[1],
        purity: b.post_purity(),
        p0_success: b.p0,
        renorm_factor: None,
        valid: !fallback,
    })
}

pub fn ev_estimate(t: &AncillaTomogram) -> Result<MomentEstimate> {
    estimate_moment(t, EstimatorKind::Ev, &ResampleConfig::default(), 0)
}

pub fn pev_estimate(t: &AncillaTomogram) -> Result<MomentEstimate> {
    estimate_moment(t, EstimatorKind::Pev, &ResampleConfig::default(), 0)
}

pub fn raw_estimate(t: &AncillaTomogram) -> Result<MomentEstimate> {
    estimate_moment(t, EstimatorKind::Raw, &ResampleConfig::default(), 0)
}

/// Samples the three basis records of an EV circuit's final state. Basis
/// changes are applied noiselessly; readout confusion is applied.
pub fn sample_tomogram(
    rho: &DensityMatrix,
    ancilla: usize,
    shots_per_basis: u64,
    confusion: &[Confusion],
    rng: &mut ChaCha8Rng,
) -> Result<AncillaTomogram> {
    let mut records = Vec::with_capacity(3);
    for basis in [Basis::X, Basis::Y, Basis::Z] {
        let mut r = rho.clone();
        for u in basis.rotation() {
            r.apply_unitary(&u, &[ancilla])?;
        }
        records.push(reduce_record(&sample_counts_with(&r, shots_per_basis, confusion, rng)?, ancilla)?);
    }
    let z = records.pop().expect("three records");
    let y = records.pop().expect("three records");
    let x = records.pop().expect("three records");
    AncillaTomogram::new(x, y, z)
}

pub const DEFAULT_ODR_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdrCorrection {
    pub value: f64,
    pub renorm_factor: f64,
    pub unstable: bool,
}

/// `signal * truth / reference`, reported within `[-1, 1]`; a reference
/// below `floor` in magnitude is flagged unstable.
pub fn odr_correct(signal: f64, reference: f64, reference_truth: f64, floor: f64) -> Result<OdrCorrection> {
    if reference_truth == 0.0 {
        return Err(QemError::InvalidParameter("ODR reference truth must be nonzero".into()));
    }
    let unstable = reference.abs() < floor || reference == 0.0;
    let value = if reference == 0.0 {
        signal.signum()
    } else {
        (signal * reference_truth / reference).clamp(-1.0, 1.0)
    };
    Ok(OdrCorrection { value, renorm_factor: reference, unstable })
}

/// Ancilla `<Z>` of the signal (real and optional imaginary parts) and the
/// reference, renormalized, with resampled sigmas. Records are full-register
/// counts; only the ancilla bit is read.
pub fn odr_estimate(
    signal_re: &MeasurementCounts,
    signal_im: Option<&MeasurementCounts>,
    reference: &MeasurementCounts,
    ancilla: usize,
    floor: f64,
    cfg: &ResampleConfig,
    seed: u64,
) -> Result<MomentEstimate> {
    let marginal = |r: &MeasurementCounts| -> Result<MeasurementCounts> {
        if ancilla >= r.n() {
            return Err(QemError::SiteOutOfRange { site: ancilla, n: r.n() });
        }
        let ones = r.ones(ancilla);
        MeasurementCounts::new(1, vec![r.shots() - ones, ones])
    };
    let mut records = vec![marginal(signal_re)?, marginal(reference)?];
    if let Some(im) = signal_im {
        records.push(marginal(im)?);
    }
    let eval = |r: &[MeasurementCounts]| -> Option<(f64, f64, OdrCorrection)> {
        let z = |m: &MeasurementCounts| m.expectation_z(0);
        let rf = z(&r[1])?;
        let re = odr_correct(z(&r[0])?, rf, 1.0, floor).ok()?;
        let im = match r.get(2) {
            Some(m) => odr_correct(z(m)?, rf, 1.0, floor).ok()?.value,
            None => 0.0,
        };
        Some((re.value, im, re))
    };
    let (re, im, corr) = eval(&records).ok_or_else(|| QemError::UndefinedEstimate("empty ODR record".into()))?;
    let s = posterior_resample(&records, cfg, seed, |r| eval(r).map(|(a, b, _)| vec![a, b]))?;
    Ok(MomentEstimate {
        value: c(re, im),
        sigma_re: s.sigma[0],
        sigma_im: if signal_im.is_some() { s.sigma[1] } else { 0.0 },
        purity: 1.0,
        p0_success: 1.0,
        renorm_factor: Some(corr.renorm_factor),
        valid: !corr.unstable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bloch_for(alpha: C64) -> [f64; 3] {
        let p0 = (1.0 + alpha.norm_sqr()) / 2.0;
        [alpha.re / p0, alpha.im / p0, (1.0 - alpha.norm_sqr()) / 2.0 / p0]
    }

    #[test]
    fn ev_examples() {
        assert!((ev_from_bloch([1.0, 0.0, 0.0]).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let a = ev_from_bloch([0.88235, 0.0, 0.47059]).unwrap();
        assert!((a.re - 0.6).abs() < 1e-4);
        let b = bloch_for(c(0.3, -0.4));
        assert!((ev_from_bloch(b).unwrap() - c(0.3, -0.4)).norm() < 1e-14);
        assert!(ev_from_bloch([0.0, 0.0, -1.0]).is_err());
    }

    #[test]
    fn pev_examples() {
        let b = bloch_for(c(0.5, 0.5));
        let (p, fb) = pev_from_bloch(b).unwrap();
        assert!(!fb);
        assert!((p - ev_from_bloch(b).unwrap()).norm() < 1e-14);
        let (_, fb) = pev_from_bloch([0.0; 3]).unwrap();
        assert!(fb);
        let r = (0.4f64 * 0.4 + 0.2 * 0.2).sqrt();
        let (p, _) = pev_from_bloch([0.4, 0.0, 0.2]).unwrap();
        assert!((p - ev_from_bloch([0.4 / r, 0.0, 0.2 / r]).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn odr_examples() {
        assert_eq!(odr_correct(0.3, 1.0, 1.0, 0.05).unwrap().value, 0.3);
        let c = odr_correct(0.3 * 0.6, 0.6, 1.0, 0.05).unwrap();
        assert!((c.value - 0.3).abs() < 1e-15 && !c.unstable);
        let c = odr_correct(0.3, 0.04, 1.0, 0.05).unwrap();
        assert!(c.unstable);
        assert_eq!(c.value, 1.0);
    }

    #[test]
    fn reduction_and_tomogram() {
        // two qubits, ancilla = 1; labels 0b00, 0b10 are accepted
        let full = MeasurementCounts::new(2, vec![30, 5, 10, 55]).unwrap();
        let r = reduce_record(&full, 1).unwrap();
        assert_eq!(r.counts(), &[30, 10, 5, 55]);
        let t = AncillaTomogram::new(r.clone(), r.clone(), r).unwrap();
        let b = t.bloch().unwrap();
        assert!((b.post[0] - 0.5).abs() < 1e-15);
        assert!((b.p0 - 0.4).abs() < 1e-15);
    }

    #[test]
    fn estimate_has_sigmas() {
        let r = MeasurementCounts::new(2, vec![900, 50, 30, 20]).unwrap();
        let t = AncillaTomogram::new(r.clone(), r.clone(), r).unwrap();
        let e = ev_estimate(&t).unwrap();
        assert!(e.sigma_re > 0.0 && e.sigma_re < 0.1);
        assert!(e.valid);
    }
}
