use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QemError, Result};
use crate::lattice::exact_moment;
use crate::mitigation::MomentSpec;
use crate::rng::derive_seed;
use crate::trotter::ProductFormulaSpec;
use crate::vqe::{ansatz_circuit, ansatz_state};

use super::{line_chart, measure_part, read_csv, write_csv, ExperimentConfig, Mitigation, PartResult, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStepRow {
    pub double_steps: usize,
    pub t: f64,
    pub estimator: Mitigation,
    pub cnots: usize,
    pub re: f64,
    pub im: f64,
    pub sigma_re: f64,
    pub sigma_im: f64,
    pub trotter_re: f64,
    pub trotter_im: f64,
    pub oracle_re: f64,
    pub oracle_im: f64,
    pub purity: f64,
    pub purity_sigma: f64,
    pub p0: f64,
    pub renorm: f64,
    pub renorm_sigma: f64,
    pub renorm_fit: f64,
    /// `(1 - p_eff) / 2` with `p_eff = 1 - renorm_fit`.
    pub p0_bound: f64,
    pub config_hash: String,
}

/// `y = amplitude * exp(-rate * x)` fitted by least squares on `ln y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub amplitude: f64,
    pub rate: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r2: f64,
}

impl ExpFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (-self.rate * x).exp()
    }
}

/// Points with `y <= 0` are dropped; needs two remaining points.
pub fn fit_exponential(xs: &[f64], ys: &[f64]) -> Result<ExpFit> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(_, y)| **y > 0.0).map(|(x, y)| (*x, y.ln())).collect();
    if pts.len() < 2 {
        return Err(QemError::UndefinedEstimate("exponential fit needs two positive points".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(QemError::UndefinedEstimate("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(ExpFit { amplitude: icpt.exp(), rate: -slope, r2 })
}

#[derive(Debug, Clone)]
pub struct MultiStepOutput {
    pub rows: Vec<MultiStepRow>,
    pub fit: ExpFit,
    pub files: Vec<PathBuf>,
}

#[derive(Serialize)]
struct FitRow<'a> {
    amplitude: f64,
    rate: f64,
    r2: f64,
    config_hash: &'a str,
}

/// Diagonal moment of the first excitation term at `t = d tau` using `2d`
/// steps, for `d = 1..=double_steps`. Tomography supplies purity and
/// post-selection rate, the operator-renormalization reference supplies the
/// renormalization factor; both are always run.
pub fn run_multi_step(cfg: &ExperimentConfig) -> Result<MultiStepOutput> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let h = cfg.hamiltonian()?;
    let prep = ansatz_circuit(&cfg.ansatz);
    let psi = ansatz_state(&cfg.ansatz);
    let op = cfg.excitation_strings()?[0].1.clone();
    let nm = cfg.noise.model(cfg.multi_step.lambda)?;
    let mut mits = cfg.mitigation.estimators.clone();
    mits.extend([Mitigation::Pev, Mitigation::Odr]);
    mits.sort();
    mits.dedup();
    let hash = cfg.hash();
    let ds: Vec<usize> = (1..=cfg.multi_step.double_steps).collect();
    if ds.len() < 2 {
        return Err(QemError::Config("multi-step needs at least two step counts".into()));
    }
    let results: Vec<Result<PartResult>> = ds
        .par_iter()
        .map(|&d| {
            let formula = ProductFormulaSpec { steps: 2 * d, ..cfg.formula.clone() };
            let spec = MomentSpec { ok: op.clone(), ol: op.clone(), j: d, tau: cfg.tau, formula };
            measure_part(&h, &prep, &spec, cfg.style, &nm, &mits, &cfg.mitigation, derive_seed(seed, d as u64))
        })
        .collect();
    let parts: Vec<PartResult> = results.into_iter().collect::<Result<_>>()?;
    let renorm: Vec<f64> = parts.iter().map(|p| p.estimates[&Mitigation::Odr].renorm_factor.unwrap_or(f64::NAN)).collect();
    let xs: Vec<f64> = ds.iter().map(|&d| d as f64).collect();
    let fit = fit_exponential(&xs, &renorm)?;

    let mut rows = Vec::new();
    for (i, &d) in ds.iter().enumerate() {
        let p = &parts[i];
        let t = d as f64 * cfg.tau;
        let oracle = exact_moment(&h, &psi, &op, &op, t)?;
        let diag = &p.estimates[&Mitigation::Pev];
        let rf = fit.eval(d as f64);
        for m in cfg.mitigation.estimators.iter() {
            let e = &p.estimates[m];
            rows.push(MultiStepRow {
                double_steps: d,
                t,
                estimator: *m,
                cnots: p.cnots[m],
                re: e.value.re,
                im: e.value.im,
                sigma_re: e.sigma_re,
                sigma_im: e.sigma_im,
                trotter_re: p.truth[m].re,
                trotter_im: p.truth[m].im,
                oracle_re: oracle.re,
                oracle_im: oracle.im,
                purity: diag.purity,
                purity_sigma: p.purity_sigma,
                p0: diag.p0_success,
                renorm: renorm[i],
                renorm_sigma: odr_reference_sigma(renorm[i], cfg.mitigation.shots),
                renorm_fit: rf,
                p0_bound: rf / 2.0,
                config_hash: hash.clone(),
            });
        }
    }
    let csv = cfg.out_dir.join("multi_step.csv");
    write_csv(&csv, &rows)?;
    let fcsv = cfg.out_dir.join("multi_step_fit.csv");
    write_csv(&fcsv, &[FitRow { amplitude: fit.amplitude, rate: fit.rate, r2: fit.r2, config_hash: &hash }])?;
    let svg = cfg.out_dir.join("multi_step.svg");
    std::fs::write(&svg, plot(&read_csv(&csv)?))?;
    Ok(MultiStepOutput { rows, fit, files: vec![csv, fcsv, svg] })
}

/// Binomial spread of a `<Z>` estimate from `shots` samples.
fn odr_reference_sigma(z: f64, shots: u64) -> f64 {
    ((1.0 - z * z).max(0.0) / shots as f64).sqrt()
}

fn plot(rows: &[MultiStepRow]) -> String {
    let first = rows.first().map(|r| r.estimator);
    let pick = |f: fn(&MultiStepRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().filter(|r| Some(r.estimator) == first).map(|r| (r.double_steps as f64, f(r))).collect()
    };
    let series = vec![
        Series::new("purity", pick(|r| r.purity)),
        Series::new("P0", pick(|r| r.p0)),
        Series::new("renorm", pick(|r| r.renorm)),
        Series::new("renorm fit", pick(|r| r.renorm_fit)).dashed(),
        Series::new("P0 bound", pick(|r| r.p0_bound)).dashed(),
    ];
    line_chart("Diagnostics against depth", "double steps", "value", &series, false, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential_fits_perfectly() {
        let xs: Vec<f64> = (1..=6).map(|x| x as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.8 * (-0.5 * x).exp()).collect();
        let f = fit_exponential(&xs, &ys).unwrap();
        assert!((f.amplitude - 0.8).abs() < 1e-12 && (f.rate - 0.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(fit_exponential(&[1.0], &[0.5]).is_err());
        assert!(fit_exponential(&[1.0, 2.0], &[-0.5, 0.0]).is_err());
    }
}
