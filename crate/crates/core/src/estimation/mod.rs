//! Uncertainty propagation, moment assembly, response reconstruction and scoring.

mod bayes;
mod kernel;

pub use bayes::{
    beta_update, posterior_resample, posterior_resample_expectation, BetaPosterior, DirichletPosterior,
    ResampleConfig, ResampleSummary,
};
pub use kernel::{gaussian_fourier_coeffs, reconstruct_response, KernelSpec, ResponseCurve, ALIASING_TOL};

use std::collections::BTreeMap;

use crate::error::{QemError, Result};
use crate::linalg::C64;
use crate::mitigation::MomentEstimate;

/// `m = sum_{k,l} o_k o_l m_{k,l}`.
///
/// Only `k <= l` needs to be present; a missing `(l, k)` reuses the `(k, l)`
/// estimate, which holds for real Hamiltonians and real reference states.
/// Reused pairs are fully correlated, so their weights add before the
/// quadrature sum.
pub fn assemble_moment(parts: &BTreeMap<(usize, usize), MomentEstimate>, o: &[f64]) -> Result<MomentEstimate> {
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for k in 0..o.len() {
        for l in 0..o.len() {
            let key = if parts.contains_key(&(k, l)) {
                (k, l)
            } else if parts.contains_key(&(l, k)) {
                (l, k)
            } else {
                return Err(QemError::MissingPart(k, l));
            };
            *weights.entry(key).or_insert(0.0) += o[k] * o[l];
        }
    }
    let mut value = C64::new(0.0, 0.0);
    let (mut var_re, mut var_im) = (0.0, 0.0);
    let mut purity: f64 = 1.0;
    let mut p0: f64 = 1.0;
    let mut renorm: Option<f64> = None;
    let mut valid = true;
    for (key, w) in &weights {
        let m = &parts[key];
        value += m.value * *w;
        var_re += (w * m.sigma_re).powi(2);
        var_im += (w * m.sigma_im).powi(2);
        purity = purity.min(m.purity);
        p0 = p0.min(m.p0_success);
        if let Some(r) = m.renorm_factor {
            renorm = Some(renorm.map_or(r, |x: f64| x.min(r)));
        }
        valid &= m.valid;
    }
    Ok(MomentEstimate {
        value,
        sigma_re: var_re.sqrt(),
        sigma_im: var_im.sqrt(),
        purity,
        p0_success: p0,
        renorm_factor: renorm,
        valid,
    })
}

/// `z^2 = (1/N) sum ((m_i - mu_i) / sigma_i)^2`
pub fn z_score(estimates: &[f64], truths: &[f64], sigmas: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(QemError::LengthMismatch(estimates.len(), truths.len()));
    }
    if estimates.len() != sigmas.len() {
        return Err(QemError::LengthMismatch(estimates.len(), sigmas.len()));
    }
    if estimates.is_empty() {
        return Err(QemError::UndefinedEstimate("z-score of an empty sequence".into()));
    }
    let mut acc = 0.0;
    for (i, ((m, mu), s)) in estimates.iter().zip(truths).zip(sigmas).enumerate() {
        if *s <= 0.0 {
            return Err(QemError::ZeroSigma(i));
        }
        acc += ((m - mu) / s).powi(2);
    }
    Ok(acc / estimates.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(v: f64, s: f64) -> MomentEstimate {
        MomentEstimate { sigma_re: s, sigma_im: s, ..MomentEstimate::exact(C64::new(v, 0.0)) }
    }

    #[test]
    fn assembly_passthrough_and_sum() {
        let mut parts = BTreeMap::new();
        parts.insert((0, 0), est(0.3, 0.1));
        let m = assemble_moment(&parts, &[1.0]).unwrap();
        assert_eq!(m.value, C64::new(0.3, 0.0));
        assert_eq!(m.sigma_re, 0.1);

        let mut parts = BTreeMap::new();
        for key in [(0, 0), (0, 1), (1, 1)] {
            parts.insert(key, est(0.5, 0.1));
        }
        let m = assemble_moment(&parts, &[1.0, 1.0]).unwrap();
        assert!((m.value.re - 2.0).abs() < 1e-15);
        // weights 1, 2, 1 in quadrature
        assert!((m.sigma_re - 0.1 * 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn missing_part() {
        let mut parts = BTreeMap::new();
        parts.insert((0, 0), est(0.5, 0.1));
        assert_eq!(assemble_moment(&parts, &[1.0, 1.0]).unwrap_err(), QemError::MissingPart(0, 1));
    }

    #[test]
    fn z_score_examples() {
        assert_eq!(z_score(&[1.0, 2.0], &[1.0, 2.0], &[0.1, 0.1]).unwrap(), 0.0);
        assert_eq!(z_score(&[1.0], &[0.0], &[0.0]), Err(QemError::ZeroSigma(0)));
        assert!((z_score(&[1.0, 0.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
    }
}
