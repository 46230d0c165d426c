use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{run_statevector, sample_counts_with, simulate_noisy, MeasurementCounts};
use crate::error::{QemError, Result};
use crate::linalg::{c, C64};
use crate::mitigation::{
    build_ev_circuit, build_odr_circuits, exact_estimate, odr_correct, pauli_twirl, sample_tomogram, AncillaBloch,
    EstimatorKind, MomentSpec,
};
use crate::pauli::{Pauli, PauliString};
use crate::rng::{child_rng, derive_seed};
use crate::state::{DensityMatrix, StateVector};
use crate::vqe::ansatz_circuit;

use super::{line_chart, percentile, read_csv, shot_noise_barrier, write_csv, ExperimentConfig, Mitigation, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub estimator: Mitigation,
    pub error_mean: f64,
    pub error_median: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    /// Error of the infinite-shot estimate.
    pub analytic_error: f64,
    pub barrier: f64,
    pub undefined: usize,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub csv: PathBuf,
    pub svg: PathBuf,
}

fn summarize(lambda: f64, m: Mitigation, errs: &[f64], analytic: f64, barrier: f64, hash: &str) -> SweepRow {
    let ok: Vec<f64> = errs.iter().copied().filter(|e| e.is_finite()).collect();
    let mean = if ok.is_empty() { f64::NAN } else { ok.iter().sum::<f64>() / ok.len() as f64 };
    SweepRow {
        lambda,
        estimator: m,
        error_mean: mean,
        error_median: percentile(&ok, 0.5),
        band_lo: percentile(&ok, 0.025),
        band_hi: percentile(&ok, 0.975),
        analytic_error: analytic,
        barrier,
        undefined: errs.len() - ok.len(),
        config_hash: hash.to_string(),
    }
}

fn ancilla_z(rho: &DensityMatrix, a: usize) -> Result<f64> {
    rho.expectation_pauli(&PauliString::single(rho.n(), a, Pauli::Z))
}

fn z_of(r: &MeasurementCounts, a: usize) -> f64 {
    let ones = r.ones(a) as f64;
    1.0 - 2.0 * ones / r.shots() as f64
}

/// Absolute error of each estimator against the noiseless value of its own
/// circuit, for every strength on the grid, on the diagonal moment of the
/// first excitation term.
pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let h = cfg.hamiltonian()?;
    let prep = ansatz_circuit(&cfg.ansatz);
    let ops = cfg.excitation_strings()?;
    let a = h.n();
    let ms = &cfg.mitigation;
    let spec = MomentSpec {
        ok: ops[0].1.clone(),
        ol: ops[0].1.clone(),
        j: cfg.noise.sweep_moment,
        tau: cfg.tau,
        formula: cfg.formula.clone(),
    };
    if cfg.noise.sweep.is_empty() {
        return Err(QemError::Config("empty noise sweep".into()));
    }
    let barrier = shot_noise_barrier(ms.shots);
    let hash = cfg.hash();
    let kinds: Vec<(Mitigation, EstimatorKind)> = ms
        .estimators
        .iter()
        .filter_map(|m| match m {
            Mitigation::Raw => Some((*m, EstimatorKind::Raw)),
            Mitigation::Ev => Some((*m, EstimatorKind::Ev)),
            Mitigation::Pev => Some((*m, EstimatorKind::Pev)),
            Mitigation::Odr => None,
        })
        .collect();
    let with_odr = ms.estimators.contains(&Mitigation::Odr);

    let ev = build_ev_circuit(&h, &spec, &prep, cfg.style)?;
    let clean = run_statevector(&ev, &StateVector::zero(ev.n()))?.to_density();
    let ev_truth = exact_estimate(EstimatorKind::Ev, &AncillaBloch::from_density(&clean, a)?)?.value;
    let odr = if with_odr { Some(build_odr_circuits(&h, &spec, &prep, cfg.style)?) } else { None };
    let odr_truth = match &odr {
        Some(o) => {
            let z = |c| -> Result<f64> { ancilla_z(&run_statevector(c, &StateVector::zero(a + 1))?.to_density(), a) };
            c(z(&o.signal_re)?, z(&o.signal_im)?)
        }
        None => c(0.0, 0.0),
    };

    let per_lambda: Vec<Result<Vec<SweepRow>>> = cfg
        .noise
        .sweep
        .par_iter()
        .enumerate()
        .map(|(li, &lambda)| {
            let nm = cfg.noise.model(lambda)?;
            let lseed = derive_seed(seed, li as u64);
            let mut rows = Vec::new();
            if !kinds.is_empty() {
                let rho = simulate_noisy(&ev, &nm, &DensityMatrix::zero(a + 1))?;
                let b = AncillaBloch::from_density(&rho, a)?;
                let mut errs = vec![Vec::with_capacity(ms.repetitions); kinds.len()];
                for rep in 0..ms.repetitions {
                    let mut rng = child_rng(lseed, rep as u64);
                    let t = sample_tomogram(&rho, a, ms.shots, nm.readout(), &mut rng)?;
                    let bb = t.bloch().ok();
                    for (i, (_, k)) in kinds.iter().enumerate() {
                        let e = bb
                            .as_ref()
                            .and_then(|bb| exact_estimate(*k, bb).ok())
                            .map_or(f64::NAN, |m| (m.value - ev_truth).norm());
                        errs[i].push(e);
                    }
                }
                for (i, (m, k)) in kinds.iter().enumerate() {
                    let analytic = exact_estimate(*k, &b).map_or(f64::NAN, |v| (v.value - ev_truth).norm());
                    rows.push(summarize(lambda, *m, &errs[i], analytic, barrier, &hash));
                }
            }
            if let Some(o) = &odr {
                // One twirl set per strength; repetitions resample the shots.
                let tw = |c, s| pauli_twirl(c, ms.twirls, derive_seed(lseed, s));
                let sets = [tw(&o.signal_re, 100)?, tw(&o.signal_im, 101)?, tw(&o.reference, 102)?];
                let rhos: Vec<Vec<DensityMatrix>> = sets
                    .iter()
                    .map(|set| set.iter().map(|c| simulate_noisy(c, &nm, &DensityMatrix::zero(a + 1))).collect())
                    .collect::<Result<_>>()?;
                let exact_z: Vec<f64> = rhos
                    .iter()
                    .map(|rs| Ok(rs.iter().map(|r| ancilla_z(r, a)).sum::<Result<f64>>()? / rs.len() as f64))
                    .collect::<Result<_>>()?;
                let correct = |zr: f64, zi: f64, zf: f64| -> Option<C64> {
                    let re = odr_correct(zr, zf, 1.0, ms.odr_floor).ok()?;
                    let im = odr_correct(zi, zf, 1.0, ms.odr_floor).ok()?;
                    (!re.unstable).then_some(c(re.value, im.value))
                };
                let analytic = correct(exact_z[0], exact_z[1], exact_z[2]).map_or(f64::NAN, |v| (v - odr_truth).norm());
                let t = ms.twirls as u64;
                let mut errs = Vec::with_capacity(ms.repetitions);
                for rep in 0..ms.repetitions {
                    let mut rng = child_rng(lseed, 1000 + rep as u64);
                    let mut z = [0.0; 3];
                    for (zi, rs) in z.iter_mut().zip(&rhos) {
                        let mut total = MeasurementCounts::empty(a + 1);
                        for (i, r) in rs.iter().enumerate() {
                            let s = ms.shots / t + u64::from((i as u64) < ms.shots % t);
                            if s > 0 {
                                total.merge(&sample_counts_with(r, s, nm.readout(), &mut rng)?)?;
                            }
                        }
                        *zi = z_of(&total, a);
                    }
                    errs.push(correct(z[0], z[1], z[2]).map_or(f64::NAN, |v| (v - odr_truth).norm()));
                }
                rows.push(summarize(lambda, Mitigation::Odr, &errs, analytic, barrier, &hash));
            }
            Ok(rows)
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_lambda {
        rows.extend(r?);
    }
    let csv = cfg.out_dir.join("noise_sweep.csv");
    write_csv(&csv, &rows)?;
    let svg = cfg.out_dir.join("noise_sweep.svg");
    std::fs::write(&svg, plot_sweep(&read_csv(&csv)?))?;
    Ok(SweepOutput { rows, csv, svg })
}

fn plot_sweep(rows: &[SweepRow]) -> String {
    let mut names: Vec<Mitigation> = rows.iter().map(|r| r.estimator).collect();
    names.sort();
    names.dedup();
    let mut series: Vec<Series> = names
        .iter()
        .map(|m| {
            let pts = rows.iter().filter(|r| r.estimator == *m).map(|r| (r.lambda, r.error_mean)).collect();
            Series::new(m.name(), pts)
        })
        .collect();
    let mut lambdas: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    lambdas.dedup();
    if let Some(b) = rows.first().map(|r| r.barrier) {
        series.push(Series::new("3/sqrt(shots)", lambdas.iter().map(|&l| (l, b)).collect()).dashed());
    }
    line_chart("Absolute error against noise strength", "lambda", "|error|", &series, true, true)
}

/// Strength at which the mean error of `m` first exceeds the barrier,
/// interpolated on log axes. `None` if it never does; the first grid point
/// if it starts above.
pub fn crossing_lambda(rows: &[SweepRow], m: Mitigation) -> Option<f64> {
    let pts: Vec<&SweepRow> = rows.iter().filter(|r| r.estimator == m).collect();
    let above = |r: &SweepRow| !(r.error_mean <= r.barrier);
    let i = pts.iter().position(|r| above(r))?;
    if i == 0 {
        return Some(pts[0].lambda);
    }
    let (p, q) = (pts[i - 1], pts[i]);
    if !q.error_mean.is_finite() {
        return Some(q.lambda);
    }
    let (x0, x1) = (p.lambda.ln(), q.lambda.ln());
    let (y0, y1) = (p.error_mean.ln(), q.error_mean.ln());
    let f = (p.barrier.ln() - y0) / (y1 - y0);
    Some((x0 + f * (x1 - x0)).exp())
}
