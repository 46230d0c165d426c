use std::collections::BTreeMap;

use crate::circuit::{run_statevector, sample_counts_with, simulate_noisy, Circuit, MeasurementCounts};
use crate::error::Result;
use crate::estimation::{posterior_resample, ResampleConfig};
use crate::linalg::{c, C64};
use crate::mitigation::{
    build_ev_circuit, build_odr_circuits, estimate_moment, exact_estimate, odr_estimate, pauli_twirl, sample_tomogram,
    AncillaBloch, AncillaTomogram, CircuitStyle, EstimatorKind, MomentEstimate, MomentSpec,
};
use crate::noise::NoiseModel;
use crate::pauli::{Pauli, PauliString, PauliSumOperator};
use crate::rng::{child_rng, derive_seed};
use crate::state::{DensityMatrix, StateVector};

use super::{Mitigation, MitigationSpec};

/// One moment part `m_{k,l}` under every requested estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct PartResult {
    pub estimates: BTreeMap<Mitigation, MomentEstimate>,
    /// Noiseless value of the circuit each estimator runs.
    pub truth: BTreeMap<Mitigation, C64>,
    pub cnots: BTreeMap<Mitigation, usize>,
    /// Posterior spread of the post-selected purity; NaN without tomography.
    pub purity_sigma: f64,
}

fn undefined() -> MomentEstimate {
    MomentEstimate {
        value: c(f64::NAN, f64::NAN),
        sigma_re: f64::NAN,
        sigma_im: f64::NAN,
        purity: f64::NAN,
        p0_success: 0.0,
        renorm_factor: None,
        valid: false,
    }
}

fn kind(m: Mitigation) -> Option<EstimatorKind> {
    match m {
        Mitigation::Raw => Some(EstimatorKind::Raw),
        Mitigation::Ev => Some(EstimatorKind::Ev),
        Mitigation::Pev => Some(EstimatorKind::Pev),
        Mitigation::Odr => None,
    }
}

fn clean_ancilla_z(c: &Circuit) -> Result<f64> {
    let psi = run_statevector(c, &StateVector::zero(c.n()))?;
    let a = c.ancilla().unwrap_or(c.n() - 1);
    let z = PauliString::single(c.n(), a, Pauli::Z);
    Ok(psi.expectation_pauli(&z)?.re)
}

/// Twirled copies share the shots; their records are unioned.
pub(crate) fn sample_twirled(
    c: &Circuit,
    nm: &NoiseModel,
    shots: u64,
    twirls: usize,
    seed: u64,
) -> Result<MeasurementCounts> {
    let copies = pauli_twirl(c, twirls, derive_seed(seed, 0))?;
    let mut total = MeasurementCounts::empty(c.n());
    let t = copies.len() as u64;
    for (i, copy) in copies.iter().enumerate() {
        let s = shots / t + u64::from((i as u64) < shots % t);
        if s == 0 {
            continue;
        }
        let rho = simulate_noisy(copy, nm, &DensityMatrix::zero(c.n()))?;
        let mut rng = child_rng(seed, 1 + i as u64);
        total.merge(&sample_counts_with(&rho, s, nm.readout(), &mut rng)?)?;
    }
    Ok(total)
}

/// Runs the EV and ODR circuits of one part as needed by `mits`. Estimates
/// that are undefined on the sampled record come back with NaN values and
/// `valid = false`.
#[allow(clippy::too_many_arguments)]
pub fn measure_part(
    h: &PauliSumOperator,
    prep: &Circuit,
    spec: &MomentSpec,
    style: CircuitStyle,
    nm: &NoiseModel,
    mits: &[Mitigation],
    ms: &MitigationSpec,
    seed: u64,
) -> Result<PartResult> {
    let a = h.n();
    let rcfg = ResampleConfig { draws: ms.draws, ..ResampleConfig::default() };
    let mut out = PartResult { estimates: BTreeMap::new(), truth: BTreeMap::new(), cnots: BTreeMap::new(), purity_sigma: f64::NAN };
    let tomo: Vec<Mitigation> = mits.iter().copied().filter(|m| kind(*m).is_some()).collect();
    if !tomo.is_empty() {
        let circ = build_ev_circuit(h, spec, prep, style)?;
        let clean = run_statevector(&circ, &StateVector::zero(circ.n()))?.to_density();
        let truth = exact_estimate(EstimatorKind::Ev, &AncillaBloch::from_density(&clean, a)?)?.value;
        let rho = simulate_noisy(&circ, nm, &DensityMatrix::zero(circ.n()))?;
        let mut rng = child_rng(seed, 0);
        let t = sample_tomogram(&rho, a, ms.shots, nm.readout(), &mut rng)?;
        let records = [t.counts_x.clone(), t.counts_y.clone(), t.counts_z.clone()];
        out.purity_sigma = posterior_resample(&records, &rcfg, derive_seed(seed, 2), |r| {
            let b = AncillaTomogram::new(r[0].clone(), r[1].clone(), r[2].clone()).ok()?.bloch().ok()?;
            Some(vec![b.post_purity()])
        })
        .map_or(f64::NAN, |s| s.sigma[0]);
        for m in tomo {
            let k = kind(m).expect("tomographic estimator");
            let e = estimate_moment(&t, k, &rcfg, derive_seed(seed, 1)).unwrap_or_else(|_| undefined());
            out.estimates.insert(m, e);
            out.truth.insert(m, truth);
            out.cnots.insert(m, circ.cnot_count());
        }
    }
    if mits.contains(&Mitigation::Odr) {
        let odr = build_odr_circuits(h, spec, prep, style)?;
        let truth = c(clean_ancilla_z(&odr.signal_re)?, clean_ancilla_z(&odr.signal_im)?);
        let rec = |c: &Circuit, stream: u64| sample_twirled(c, nm, ms.shots, ms.twirls, derive_seed(seed, stream));
        let re = rec(&odr.signal_re, 10)?;
        let im = rec(&odr.signal_im, 11)?;
        let rf = rec(&odr.reference, 12)?;
        let e = odr_estimate(&re, Some(&im), &rf, a, ms.odr_floor, &rcfg, derive_seed(seed, 13))
            .unwrap_or_else(|_| undefined());
        out.estimates.insert(Mitigation::Odr, e);
        out.truth.insert(Mitigation::Odr, truth);
        out.cnots.insert(Mitigation::Odr, odr.signal_re.cnot_count());
    }
    Ok(out)
}
