//! Conjugate Beta/Dirichlet posteriors over measurement outcomes and the
//! posterior-resampling error propagation built on them.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use rayon::prelude::*;

use crate::circuit::{sample_probabilities, MeasurementCounts};
use crate::error::{QemError, Result};
use crate::rng::child_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPosterior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPosterior {
    pub const UNIFORM: BetaPosterior = BetaPosterior { alpha: 1.0, beta: 1.0 };

    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(QemError::InvalidParameter(format!("Beta({alpha}, {beta})")));
        }
        Ok(BetaPosterior { alpha, beta })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn variance(&self) -> f64 {
        let s = self.alpha + self.beta;
        self.alpha * self.beta / (s * s * (s + 1.0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Beta::new(self.alpha, self.beta).expect("validated parameters").sample(rng)
    }
}

/// `m` successes in `trials` shots: `(alpha + m, beta + trials - m)`.
pub fn beta_update(prior: BetaPosterior, m: u64, trials: u64) -> Result<BetaPosterior> {
    if m > trials {
        return Err(QemError::InvalidParameter(format!("{m} successes out of {trials} trials")));
    }
    Ok(BetaPosterior {
        alpha: prior.alpha + m as f64,
        beta: prior.beta + (trials - m) as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPosterior {
    pub concentration: Vec<f64>,
}

impl DirichletPosterior {
    pub fn new(concentration: Vec<f64>) -> Result<Self> {
        if concentration.is_empty() || concentration.iter().any(|a| !(*a > 0.0)) {
            return Err(QemError::InvalidParameter("Dirichlet concentrations must be positive".into()));
        }
        Ok(DirichletPosterior { concentration })
    }

    /// Posterior after observing `counts` under a flat prior of weight `prior` per outcome.
    pub fn from_counts(counts: &[u64], prior: f64) -> Result<Self> {
        Self::new(counts.iter().map(|c| *c as f64 + prior).collect())
    }

    pub fn mean(&self) -> Vec<f64> {
        let s: f64 = self.concentration.iter().sum();
        self.concentration.iter().map(|a| a / s).collect()
    }

    /// Normalized Gamma draws; two outcomes use the Beta sampler directly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        if let [a, b] = self.concentration[..] {
            let p = Beta::new(a, b).expect("validated parameters").sample(rng);
            return vec![1.0 - p, p];
        }
        let g: Vec<f64> = self
            .concentration
            .iter()
            .map(|a| Gamma::new(*a, 1.0).expect("validated parameters").sample(rng))
            .collect();
        let s: f64 = g.iter().sum();
        g.into_iter().map(|x| x / s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    /// Number of posterior draws `L`.
    pub draws: usize,
    /// Synthetic record size as a multiple of the observed shots. Large
    /// values make the likelihood step negligible so the spread reflects the
    /// posterior alone.
    pub oversample: u64,
    pub prior: f64,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig { draws: 200, oversample: 100, prior: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResampleSummary {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
    pub used: usize,
    pub dropped: usize,
}

/// Posterior, then likelihood, then estimator, repeated `draws` times; the
/// estimator sees one synthetic record per input record and may return
/// `None` to drop that draw.
pub fn posterior_resample<F>(
    records: &[MeasurementCounts],
    cfg: &ResampleConfig,
    seed: u64,
    estimator: F,
) -> Result<ResampleSummary>
where
    F: Fn(&[MeasurementCounts]) -> Option<Vec<f64>> + Sync,
{
    if cfg.draws < 2 {
        return Err(QemError::InvalidParameter("need at least two posterior draws".into()));
    }
    let posts: Vec<(DirichletPosterior, u64, usize)> = records
        .iter()
        .map(|r| {
            let synth = r.shots().max(1) * cfg.oversample.max(1);
            Ok((DirichletPosterior::from_counts(r.counts(), cfg.prior)?, synth, r.n()))
        })
        .collect::<Result<_>>()?;
    let outputs: Vec<Option<Vec<f64>>> = (0..cfg.draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = child_rng(seed, i as u64);
            let synthetic: Vec<MeasurementCounts> = posts
                .iter()
                .map(|(post, synth, n)| {
                    let p = post.sample(&mut rng);
                    MeasurementCounts::new(*n, sample_probabilities(&p, *synth, &mut rng)).expect("matching size")
                })
                .collect();
            estimator(&synthetic).filter(|v| v.iter().all(|x| x.is_finite()))
        })
        .collect();
    let kept: Vec<&Vec<f64>> = outputs.iter().flatten().collect();
    let dropped = cfg.draws - kept.len();
    if kept.len() < 2 {
        return Err(QemError::UndefinedEstimate(format!("{dropped} of {} posterior draws undefined", cfg.draws)));
    }
    let dim = kept[0].len();
    let mut mean = vec![0.0; dim];
    for v in &kept {
        for (m, x) in mean.iter_mut().zip(v.iter()) {
            *m += x;
        }
    }
    let k = kept.len() as f64;
    mean.iter_mut().for_each(|m| *m /= k);
    let mut var = vec![0.0; dim];
    for v in &kept {
        for ((s, x), m) in var.iter_mut().zip(v.iter()).zip(&mean) {
            *s += (x - m).powi(2);
        }
    }
    let sigma = var.into_iter().map(|s| (s / (k - 1.0)).sqrt()).collect();
    Ok(ResampleSummary { mean, sigma, used: kept.len(), dropped })
}

/// Single-record, scalar-estimator form returning `(mean, sigma)`.
pub fn posterior_resample_expectation<F>(
    counts: &MeasurementCounts,
    draws: usize,
    estimator: F,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&MeasurementCounts) -> Option<f64> + Sync,
{
    let cfg = ResampleConfig { draws, ..Default::default() };
    let s = posterior_resample(std::slice::from_ref(counts), &cfg, seed, |r| estimator(&r[0]).map(|x| vec![x]))?;
    Ok((s.mean[0], s.sigma[0]))
}
