use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QemError, Result};
use crate::estimation::{assemble_moment, z_score};
use crate::lattice::exact_moment;
use crate::linalg::C64;
use crate::mitigation::{MomentEstimate, MomentSpec};
use crate::rng::derive_seed;
use crate::vqe::{ansatz_circuit, ansatz_state};

use super::{line_chart, measure_part, read_csv, write_csv, ExperimentConfig, Mitigation, PartResult, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleStepRow {
    pub j: usize,
    pub t: f64,
    /// `k-l` for a part, `total` for the assembled moment.
    pub part: String,
    pub estimator: Mitigation,
    pub re: f64,
    pub im: f64,
    pub sigma_re: f64,
    pub sigma_im: f64,
    pub purity: f64,
    pub p0: f64,
    pub renorm: Option<f64>,
    pub valid: bool,
    pub cnots: usize,
    pub trotter_re: f64,
    pub trotter_im: f64,
    pub oracle_re: f64,
    pub oracle_im: f64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreRow {
    pub estimator: Mitigation,
    pub z2_re: f64,
    pub z2_im: f64,
    /// Largest `|estimate - truth| / sigma` over both parts of every moment.
    pub max_dev: f64,
    pub moments: usize,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct SingleStepOutput {
    pub rows: Vec<SingleStepRow>,
    pub zscores: Vec<ZScoreRow>,
    pub files: Vec<PathBuf>,
}

fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|k| (k..n).map(move |l| (k, l))).collect()
}

/// Moments `m(j tau)` of the excitation operator for every `j` in the
/// config under one noise strength, per part and assembled.
pub fn run_single_step(cfg: &ExperimentConfig) -> Result<SingleStepOutput> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let h = cfg.hamiltonian()?;
    let prep = ansatz_circuit(&cfg.ansatz);
    let psi = ansatz_state(&cfg.ansatz);
    let ops = cfg.excitation_strings()?;
    let coeffs: Vec<f64> = ops.iter().map(|o| o.0).collect();
    let nm = cfg.noise.model(cfg.noise.lambda)?;
    let mits = &cfg.mitigation.estimators;
    if mits.is_empty() {
        return Err(QemError::Config("no estimators selected".into()));
    }
    let hash = cfg.hash();

    let jobs: Vec<(usize, usize, usize)> =
        cfg.moments.iter().flat_map(|&j| pairs(ops.len()).into_iter().map(move |(k, l)| (j, k, l))).collect();
    let results: Vec<Result<PartResult>> = jobs
        .par_iter()
        .map(|&(j, k, l)| {
            let spec = MomentSpec { ok: ops[k].1.clone(), ol: ops[l].1.clone(), j, tau: cfg.tau, formula: cfg.formula.clone() };
            let stream = ((j as u64) << 16) | ((k as u64) << 8) | l as u64;
            measure_part(&h, &prep, &spec, cfg.style, &nm, mits, &cfg.mitigation, derive_seed(seed, stream))
        })
        .collect();
    let mut parts: BTreeMap<(usize, usize, usize), PartResult> = BTreeMap::new();
    for (key, r) in jobs.iter().zip(results) {
        parts.insert(*key, r?);
    }

    let mut rows = Vec::new();
    let mut zs = Vec::new();
    for m in mits {
        let (mut est, mut tru, mut sig) = ((vec![], vec![]), (vec![], vec![]), (vec![], vec![]));
        let mut max_dev: f64 = 0.0;
        for &j in &cfg.moments {
            let t = j as f64 * cfg.tau;
            let mut e_parts = BTreeMap::new();
            let mut t_parts = BTreeMap::new();
            let mut o_parts = BTreeMap::new();
            let mut cnots = 0;
            for (k, l) in pairs(ops.len()) {
                let p = &parts[&(j, k, l)];
                let e = p.estimates[m].clone();
                let truth = p.truth[m];
                let oracle = exact_moment(&h, &psi, &ops[k].1, &ops[l].1, t)?;
                cnots = cnots.max(p.cnots[m]);
                rows.push(row(j, t, &format!("{k}-{l}"), *m, &e, p.cnots[m], truth, oracle, &hash));
                e_parts.insert((k, l), e);
                t_parts.insert((k, l), MomentEstimate::exact(truth));
                o_parts.insert((k, l), MomentEstimate::exact(oracle));
            }
            let e = assemble_moment(&e_parts, &coeffs)?;
            let truth = assemble_moment(&t_parts, &coeffs)?.value;
            let oracle = assemble_moment(&o_parts, &coeffs)?.value;
            rows.push(row(j, t, "total", *m, &e, cnots, truth, oracle, &hash));
            est.0.push(e.value.re);
            est.1.push(e.value.im);
            tru.0.push(truth.re);
            tru.1.push(truth.im);
            sig.0.push(e.sigma_re);
            sig.1.push(e.sigma_im);
            for (d, s) in [(e.value.re - truth.re, e.sigma_re), (e.value.im - truth.im, e.sigma_im)] {
                if s > 0.0 {
                    max_dev = max_dev.max(d.abs() / s);
                }
            }
        }
        // z^2 skips components with zero spread (imaginary part at j = 0).
        let z2 = |e: &[f64], t: &[f64], s: &[f64]| -> f64 {
            let keep: Vec<usize> = (0..e.len()).filter(|&i| s[i] > 0.0 && e[i].is_finite()).collect();
            if keep.is_empty() {
                return f64::NAN;
            }
            let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
            z_score(&pick(e), &pick(t), &pick(s)).unwrap_or(f64::NAN)
        };
        zs.push(ZScoreRow {
            estimator: *m,
            z2_re: z2(&est.0, &tru.0, &sig.0),
            z2_im: z2(&est.1, &tru.1, &sig.1),
            max_dev,
            moments: cfg.moments.len(),
            config_hash: hash.clone(),
        });
    }

    let csv = cfg.out_dir.join("single_step.csv");
    write_csv(&csv, &rows)?;
    let zcsv = cfg.out_dir.join("single_step_zscores.csv");
    write_csv(&zcsv, &zs)?;
    let svg = cfg.out_dir.join("single_step.svg");
    std::fs::write(&svg, plot(&read_csv(&csv)?))?;
    Ok(SingleStepOutput { rows, zscores: zs, files: vec![csv, zcsv, svg] })
}

#[allow(clippy::too_many_arguments)]
fn row(j: usize, t: f64, part: &str, m: Mitigation, e: &MomentEstimate, cnots: usize, truth: C64, oracle: C64, hash: &str) -> SingleStepRow {
    SingleStepRow {
        j,
        t,
        part: part.to_string(),
        estimator: m,
        re: e.value.re,
        im: e.value.im,
        sigma_re: e.sigma_re,
        sigma_im: e.sigma_im,
        purity: e.purity,
        p0: e.p0_success,
        renorm: e.renorm_factor,
        valid: e.valid,
        cnots,
        trotter_re: truth.re,
        trotter_im: truth.im,
        oracle_re: oracle.re,
        oracle_im: oracle.im,
        config_hash: hash.to_string(),
    }
}

fn plot(rows: &[SingleStepRow]) -> String {
    let total: Vec<&SingleStepRow> = rows.iter().filter(|r| r.part == "total").collect();
    let mut names: Vec<Mitigation> = total.iter().map(|r| r.estimator).collect();
    names.sort();
    names.dedup();
    let mut series: Vec<Series> = names
        .iter()
        .map(|m| Series::new(m.name(), total.iter().filter(|r| r.estimator == *m).map(|r| (r.t, r.re)).collect()))
        .collect();
    if let Some(first) = names.first() {
        let pts = |f: fn(&SingleStepRow) -> f64| total.iter().filter(|r| r.estimator == *first).map(|r| (r.t, f(r))).collect();
        series.push(Series::new("trotter", pts(|r| r.trotter_re)).dashed());
        series.push(Series::new("exact", pts(|r| r.oracle_re)).dashed());
    }
    line_chart("Re m(t)", "t", "Re m", &series, false, false)
}
