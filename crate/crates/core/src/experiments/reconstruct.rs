use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimation::{assemble_moment, reconstruct_response, KernelSpec};
use crate::lattice::{exact_ground_state, exact_operator_moment, exact_response};
use crate::mitigation::{MomentEstimate, MomentSpec};
use crate::rng::derive_seed;
use crate::trotter::ProductFormulaSpec;
use crate::vqe::{ansatz_circuit, ansatz_state};

use super::{line_chart, measure_part, read_csv, write_csv, ExperimentConfig, PartResult, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionRow {
    pub nu: f64,
    pub oracle: f64,
    /// From exact moments.
    pub exact_moments: f64,
    /// From noiseless moments of the same circuits.
    pub trotter: f64,
    pub mitigated: f64,
    pub sigma: f64,
    pub within_3sigma: bool,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub j: usize,
    pub t: f64,
    pub steps: usize,
    pub re: f64,
    pub im: f64,
    pub sigma_re: f64,
    pub sigma_im: f64,
    pub purity: f64,
    pub p0: f64,
    pub renorm: Option<f64>,
    pub trotter_re: f64,
    pub trotter_im: f64,
    pub exact_re: f64,
    pub exact_im: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct ReconstructionOutput {
    pub rows: Vec<ReconstructionRow>,
    pub kernel: KernelSpec,
    pub peak: f64,
    /// `max |Phi_N - oracle|` with exact moments.
    pub exact_deviation: f64,
    /// Share of grid points where the mitigated curve is within 3 sigma of the noiseless one.
    pub fraction_within: f64,
    pub files: Vec<PathBuf>,
}

/// Even step count for moment `j`, at least 2.
pub(crate) fn steps_for(j: usize, per_moment: f64) -> usize {
    let s = (j as f64 * per_moment / 2.0).ceil() as usize * 2;
    s.max(2)
}

/// Gaussian-kernel response from `N + 1` moments, `N` set by the kernel
/// tolerance, comparing oracle, exact-moment, noiseless-circuit and
/// mitigated curves.
pub fn run_reconstruction(cfg: &ExperimentConfig) -> Result<ReconstructionOutput> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let kc = &cfg.kernel;
    let spec = KernelSpec::for_tolerance(kc.delta, cfg.tau, kc.eps)?;
    let grid = kc.grid();
    let h = cfg.hamiltonian()?;
    let prep = ansatz_circuit(&cfg.ansatz);
    let psi = ansatz_state(&cfg.ansatz);
    let ops = cfg.excitation_strings()?;
    let o = cfg.excitation_operator()?;
    let coeffs: Vec<f64> = ops.iter().map(|x| x.0).collect();
    let (e0, _) = exact_ground_state(&h)?;
    let nm = cfg.noise.model(kc.lambda)?;
    let hash = cfg.hash();
    let mits = [kc.estimator];

    let oracle = exact_response(&h, &psi, &o, &grid, kc.delta)?;
    let exact: Vec<MomentEstimate> = (0..=spec.n)
        .map(|j| Ok(MomentEstimate::exact(exact_operator_moment(&h, &psi, &o, j as f64 * cfg.tau)?)))
        .collect::<Result<_>>()?;
    let phi_exact = reconstruct_response(&exact, &spec, &grid, e0)?;

    let pairs: Vec<(usize, usize)> = (0..ops.len()).flat_map(|k| (k..ops.len()).map(move |l| (k, l))).collect();
    let jobs: Vec<(usize, usize, usize)> =
        (0..=spec.n).flat_map(|j| pairs.iter().map(move |&(k, l)| (j, k, l))).collect();
    let results: Vec<Result<PartResult>> = jobs
        .par_iter()
        .map(|&(j, k, l)| {
            let formula = ProductFormulaSpec { steps: steps_for(j, kc.steps_per_moment), ..cfg.formula.clone() };
            let ms = MomentSpec { ok: ops[k].1.clone(), ol: ops[l].1.clone(), j, tau: cfg.tau, formula };
            let stream = ((j as u64) << 16) | ((k as u64) << 8) | l as u64;
            measure_part(&h, &prep, &ms, cfg.style, &nm, &mits, &cfg.mitigation, derive_seed(seed, stream))
        })
        .collect();
    let mut parts = BTreeMap::new();
    for (key, r) in jobs.iter().zip(results) {
        parts.insert(*key, r?);
    }
    let mut mitigated = Vec::with_capacity(spec.n + 1);
    let mut noiseless = Vec::with_capacity(spec.n + 1);
    let mut mrows = Vec::with_capacity(spec.n + 1);
    for j in 0..=spec.n {
        let mut e = BTreeMap::new();
        let mut t = BTreeMap::new();
        for &(k, l) in &pairs {
            let p: &PartResult = &parts[&(j, k, l)];
            e.insert((k, l), p.estimates[&kc.estimator].clone());
            t.insert((k, l), MomentEstimate::exact(p.truth[&kc.estimator]));
        }
        let m = assemble_moment(&e, &coeffs)?;
        let tr = assemble_moment(&t, &coeffs)?;
        mrows.push(MomentRow {
            j,
            t: j as f64 * cfg.tau,
            steps: steps_for(j, kc.steps_per_moment),
            re: m.value.re,
            im: m.value.im,
            sigma_re: m.sigma_re,
            sigma_im: m.sigma_im,
            purity: m.purity,
            p0: m.p0_success,
            renorm: m.renorm_factor,
            trotter_re: tr.value.re,
            trotter_im: tr.value.im,
            exact_re: exact[j].value.re,
            exact_im: exact[j].value.im,
            config_hash: hash.clone(),
        });
        mitigated.push(m);
        noiseless.push(tr);
    }
    let phi_trotter = reconstruct_response(&noiseless, &spec, &grid, e0)?;
    let phi_mit = reconstruct_response(&mitigated, &spec, &grid, e0)?;

    let rows: Vec<ReconstructionRow> = (0..grid.len())
        .map(|i| ReconstructionRow {
            nu: grid[i],
            oracle: oracle.values[i],
            exact_moments: phi_exact.values[i],
            trotter: phi_trotter.values[i],
            mitigated: phi_mit.values[i],
            sigma: phi_mit.sigma[i],
            within_3sigma: (phi_mit.values[i] - phi_trotter.values[i]).abs() <= 3.0 * phi_mit.sigma[i],
            config_hash: hash.clone(),
        })
        .collect();
    let fraction_within = rows.iter().filter(|r| r.within_3sigma).count() as f64 / rows.len().max(1) as f64;

    let csv = cfg.out_dir.join("reconstruction.csv");
    write_csv(&csv, &rows)?;
    let mcsv = cfg.out_dir.join("reconstruction_moments.csv");
    write_csv(&mcsv, &mrows)?;
    let svg = cfg.out_dir.join("reconstruction.svg");
    std::fs::write(&svg, plot(&read_csv(&csv)?))?;
    Ok(ReconstructionOutput {
        rows,
        kernel: spec,
        peak: oracle.peak(),
        exact_deviation: phi_exact.max_abs_diff(&oracle),
        fraction_within,
        files: vec![csv, mcsv, svg],
    })
}

fn plot(rows: &[ReconstructionRow]) -> String {
    let pick = |f: fn(&ReconstructionRow) -> f64| rows.iter().map(|r| (r.nu, f(r))).collect::<Vec<_>>();
    let series = vec![
        Series::new("oracle", pick(|r| r.oracle)).dashed(),
        Series::new("exact moments", pick(|r| r.exact_moments)),
        Series::new("noiseless", pick(|r| r.trotter)),
        Series::new("mitigated", pick(|r| r.mitigated)),
    ];
    line_chart("Response", "nu", "Phi", &series, false, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_rule() {
        assert_eq!(steps_for(0, 1.0), 2);
        assert_eq!(steps_for(3, 1.0), 4);
        assert_eq!(steps_for(10, 1.0), 10);
        assert_eq!(steps_for(10, 0.5), 6);
    }
}
