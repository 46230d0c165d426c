//! Gaussian-kernel integral transform from Fourier moments.

use serde::{Deserialize, Serialize};

use crate::error::{QemError, Result};
use crate::linalg::C64;
use crate::mitigation::MomentEstimate;

/// Aliasing tolerance used by [`gaussian_fourier_coeffs`] and [`reconstruct_response`].
pub const ALIASING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub delta: f64,
    pub tau: f64,
    pub n: usize,
}

impl KernelSpec {
    pub fn new(delta: f64, tau: f64, n: usize) -> Result<Self> {
        if !(delta > 0.0 && tau > 0.0) || n == 0 {
            return Err(QemError::InvalidParameter(format!("kernel delta={delta} tau={tau} N={n}")));
        }
        Ok(KernelSpec { delta, tau, n })
    }

    /// Smallest `N` with `T = N tau >= sqrt(2 ln(1/eps)) / delta`.
    pub fn for_tolerance(delta: f64, tau: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(QemError::InvalidParameter(format!("tolerance {eps}")));
        }
        let t = (2.0 * (1.0 / eps).ln()).sqrt() / delta;
        Self::new(delta, tau, (t / tau - 1e-9).ceil().max(1.0) as usize)
    }

    pub fn total_time(&self) -> f64 {
        self.n as f64 * self.tau
    }

    /// Weight of the nearest periodic replica, `exp(-(2 pi / tau - span)^2 / (2 delta^2))`,
    /// for excitation energies spread over `span`.
    pub fn aliasing_bound(&self, span: f64) -> f64 {
        let gap = 2.0 * std::f64::consts::PI / self.tau - span.abs();
        if gap <= 0.0 {
            return 1.0;
        }
        (-(gap * gap) / (2.0 * self.delta * self.delta)).exp()
    }

    pub fn check_aliasing(&self, span: f64) -> Result<()> {
        let b = self.aliasing_bound(span);
        if b > ALIASING_TOL {
            return Err(QemError::Aliasing(b));
        }
        Ok(())
    }
}

fn coeff(spec: &KernelSpec, nu: f64, j: i64) -> C64 {
    let jt = j as f64 * spec.tau;
    let amp = spec.tau * spec.delta / (2.0 * std::f64::consts::PI).sqrt()
        * (-(spec.delta * spec.delta) * jt * jt / 2.0).exp();
    C64::from_polar(amp, nu * jt)
}

/// `c_j(nu) = (tau delta / sqrt(2 pi)) e^{i nu j tau} e^{-delta^2 j^2 tau^2 / 2}` for
/// `j = -N..=N` (index `j + N`).
pub fn gaussian_fourier_coeffs(spec: &KernelSpec, nu: f64) -> Result<Vec<C64>> {
    spec.check_aliasing(0.0)?;
    let n = spec.n as i64;
    Ok((-n..=n).map(|j| coeff(spec, nu, j)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    pub nu_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Largest imaginary part discarded during symmetrization.
    pub imag_residue: f64,
}

impl ResponseCurve {
    pub fn new(nu_grid: Vec<f64>, values: Vec<f64>, sigma: Vec<f64>) -> Self {
        assert_eq!(nu_grid.len(), values.len());
        assert_eq!(nu_grid.len(), sigma.len());
        ResponseCurve { nu_grid, values, sigma, imag_residue: 0.0 }
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ResponseCurve) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `Phi_N(nu) = sum_{|j| <= N} c_j(nu + E_0) m(j tau)` with `m(-j tau) = conj m(j tau)`.
///
/// `moments[j]` holds `m(j tau)` for `j = 0..=N` with `H` unshifted by `E_0`;
/// `energy_offset = E_0` moves the ground state to `nu = 0`.
pub fn reconstruct_response(
    moments: &[MomentEstimate],
    spec: &KernelSpec,
    nu_grid: &[f64],
    energy_offset: f64,
) -> Result<ResponseCurve> {
    if moments.len() < spec.n + 1 {
        return Err(QemError::MissingPart(spec.n, 0));
    }
    let span = nu_grid.iter().map(|x| x.abs()).fold(0.0, f64::max);
    spec.check_aliasing(span)?;
    let mut values = Vec::with_capacity(nu_grid.len());
    let mut sigma = Vec::with_capacity(nu_grid.len());
    let mut imag: f64 = 0.0;
    for &nu in nu_grid {
        let shifted = nu + energy_offset;
        let c0 = coeff(spec, shifted, 0).re;
        let m0 = &moments[0];
        let mut v = c0 * m0.value.re;
        let mut var = (c0 * m0.sigma_re).powi(2);
        imag = imag.max((c0 * m0.value.im).abs());
        for (j, m) in moments.iter().enumerate().take(spec.n + 1).skip(1) {
            let c = coeff(spec, shifted, j as i64);
            v += 2.0 * (c * m.value).re;
            var += 4.0 * ((c.re * m.sigma_re).powi(2) + (c.im * m.sigma_im).powi(2));
        }
        values.push(v);
        sigma.push(var.sqrt());
    }
    let mut curve = ResponseCurve::new(nu_grid.to_vec(), values, sigma);
    curve.imag_residue = imag;
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_identities() {
        let spec = KernelSpec::new(0.4, 0.125, 20).unwrap();
        let c = gaussian_fourier_coeffs(&spec, 0.0).unwrap();
        assert!((c[20].re - 0.125 * 0.4 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        let c = gaussian_fourier_coeffs(&spec, 1.3).unwrap();
        for j in 1..=20 {
            assert!((c[20 + j] - c[20 - j].conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn truncation_rule() {
        let spec = KernelSpec::for_tolerance(0.4, 0.125, 1e-2).unwrap();
        assert_eq!(spec.n, 61);
    }

    #[test]
    fn kernel_reproduces_gaussian() {
        let spec = KernelSpec::for_tolerance(0.4, 0.125, 1e-2).unwrap();
        let nu = 0.7;
        let c = gaussian_fourier_coeffs(&spec, nu).unwrap();
        let n = spec.n as i64;
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let w = -4.0 + 8.0 * k as f64 / 199.0;
            let s: C64 = (-n..=n)
                .map(|j| c[(j + n) as usize] * C64::from_polar(1.0, -w * j as f64 * spec.tau))
                .sum();
            let g = (-(nu - w).powi(2) / (2.0 * 0.16)).exp();
            worst = worst.max((s - g).norm());
        }
        assert!(worst <= 1e-2, "{worst}");
    }

    #[test]
    fn aliasing_detected() {
        let spec = KernelSpec::new(3.0, 1.0, 4).unwrap();
        assert!(matches!(gaussian_fourier_coeffs(&spec, 0.0), Err(QemError::Aliasing(_))));
    }

    #[test]
    fn zero_moments_give_zero_curve() {
        let spec = KernelSpec::new(0.4, 0.125, 8).unwrap();
        let moments = vec![MomentEstimate::exact(C64::new(0.0, 0.0)); 9];
        let curve = reconstruct_response(&moments, &spec, &[-1.0, 0.0, 1.0], 0.0).unwrap();
        assert!(curve.values.iter().all(|v| *v == 0.0));
    }
}
