//! Experiment drivers: configuration, parallel job execution, CSV and SVG output.

mod config;
mod measure;
mod multi_step;
mod plot;
mod reconstruct;
mod selftest;
mod single_step;
mod sweep;

pub use config::{
    ExcitationTerm, ExperimentConfig, KernelConfig, Mitigation, MitigationSpec, MultiStepConfig, NoiseKind,
    NoiseSpec, VqeConfig, DEFAULT_ANSATZ,
};
pub use measure::{measure_part, PartResult};
pub use multi_step::{fit_exponential, run_multi_step, ExpFit, MultiStepOutput, MultiStepRow};
pub use plot::{line_chart, Series};
pub use reconstruct::{run_reconstruction, MomentRow, ReconstructionOutput, ReconstructionRow};
pub use selftest::{run_selftest, SelfTestRow};
pub use single_step::{run_single_step, SingleStepOutput, SingleStepRow, ZScoreRow};
pub use sweep::{crossing_lambda, run_noise_sweep, SweepOutput, SweepRow};

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{QemError, Result};
use crate::lattice::exact_ground_state;
use crate::vqe::{optimize, OptimizeResult};

/// `3 / sqrt(shots)` on an expectation value in `[-1, 1]`.
pub fn shot_noise_barrier(shots: u64) -> f64 {
    3.0 / (shots as f64).sqrt()
}

/// Linear-interpolated percentile, `q` in `[0, 1]`, of unsorted data.
pub fn percentile(data: &[f64], q: f64) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut v = data.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| QemError::Io(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| QemError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| QemError::Io(e.to_string()))?;
    r.deserialize().map(|x| x.map_err(|e| QemError::Io(e.to_string()))).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub files: Vec<String>,
    pub elapsed_ms: u128,
}

/// Writes `{command}-manifest.json` next to the outputs.
pub fn write_manifest(cfg: &ExperimentConfig, command: &str, files: &[PathBuf], started: Instant) -> Result<PathBuf> {
    let m = Manifest {
        command: command.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed()?,
        version: env!("CARGO_PKG_VERSION").to_string(),
        files: files.iter().map(|f| f.file_name().unwrap_or_default().to_string_lossy().into_owned()).collect(),
        elapsed_ms: started.elapsed().as_millis(),
    };
    let path = cfg.out_dir.join(format!("{command}-manifest.json"));
    std::fs::create_dir_all(&cfg.out_dir)?;
    let text = serde_json::to_string_pretty(&m).map_err(|e| QemError::Io(e.to_string()))?;
    std::fs::write(&path, text)?;
    Ok(path)
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct VqeRow {
    pub theta0: f64,
    pub theta1: f64,
    pub energy: f64,
    pub exact: f64,
    pub rel_error: f64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
    pub config_hash: String,
}

/// Optimizes the ansatz and writes `vqe.csv`.
pub fn run_vqe(cfg: &ExperimentConfig) -> Result<(OptimizeResult, PathBuf)> {
    cfg.validate()?;
    let h = cfg.hamiltonian()?;
    let (e0, _) = exact_ground_state(&h)?;
    let r = optimize(&h, &cfg.vqe.initial, cfg.vqe.budget)?;
    let row = VqeRow {
        theta0: r.params.theta0,
        theta1: r.params.theta1,
        energy: r.energy,
        exact: e0,
        rel_error: ((r.energy - e0) / e0).abs(),
        evaluations: r.evaluations,
        budget_exhausted: r.budget_exhausted,
        config_hash: cfg.hash(),
    };
    let path = cfg.out_dir.join("vqe.csv");
    write_csv(&path, &[row])?;
    Ok((r, path))
}
