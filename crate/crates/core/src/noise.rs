//! Noise channels and composite device models.

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::circuit::{Confusion, Gate};
use crate::error::{QemError, Result};

/// Two-qubit depolarizing probability at unit scale, midpoint of the quoted device range.
pub const DEFAULT_P0_2Q: f64 = 7.5e-3;
pub const DEFAULT_P0_1Q: f64 = 3.0e-4;
pub const DEFAULT_READOUT: f64 = 2.0e-2;
/// Per-qubit damping after each two-qubit gate layer at unit scale.
pub const DEFAULT_DAMPING: f64 = 1.0e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ChannelKind {
    Depolarizing { p: f64, arity: usize },
    AmplitudeDamping { gamma: f64 },
    PhaseDamping { gamma: f64 },
    /// Unitary rotation by `epsilon` radians about `axis` (`x`, `y` or `z`).
    CoherentOverrotation { epsilon: f64, axis: char },
}

pub fn make_channel(kind: ChannelKind) -> Result<Channel> {
    match kind {
        ChannelKind::Depolarizing { p, arity } => Channel::depolarizing(arity, p),
        ChannelKind::AmplitudeDamping { gamma } => Channel::amplitude_damping(gamma),
        ChannelKind::PhaseDamping { gamma } => Channel::phase_damping(gamma),
        ChannelKind::CoherentOverrotation { epsilon, axis } => {
            if !epsilon.is_finite() {
                return Err(QemError::InvalidParameter("non-finite rotation".into()));
            }
            let g = match axis {
                'x' | 'X' => Gate::Rx(0, epsilon),
                'y' | 'Y' => Gate::Ry(0, epsilon),
                'z' | 'Z' => Gate::Rz(0, epsilon),
                other => return Err(QemError::InvalidParameter(format!("rotation axis '{other}'"))),
            };
            Channel::unitary(g.local_matrix())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoiseModel {
    global_depolarizing: f64,
    one_qubit: Option<Channel>,
    two_qubit: Option<Channel>,
    idle: Vec<Channel>,
    cnot_overrotation: f64,
    readout: Vec<Confusion>,
    scale: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel { scale: 1.0, ..Default::default() }
    }

    /// A single depolarizing channel on the whole register after the circuit.
    pub fn global(p: f64) -> Result<Self> {
        Self::noiseless().with_global_depolarizing(p)
    }

    pub fn with_global_depolarizing(mut self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QemError::InvalidParameter(format!("global depolarizing p = {p}")));
        }
        self.global_depolarizing = p;
        Ok(self)
    }

    pub fn with_one_qubit(mut self, ch: Channel) -> Result<Self> {
        if ch.arity() != 1 {
            return Err(QemError::ArityMismatch { arity: ch.arity(), sites: 1 });
        }
        self.one_qubit = Some(ch);
        Ok(self)
    }

    pub fn with_two_qubit(mut self, ch: Channel) -> Result<Self> {
        if ch.arity() != 2 {
            return Err(QemError::ArityMismatch { arity: ch.arity(), sites: 2 });
        }
        self.two_qubit = Some(ch);
        Ok(self)
    }

    /// Single-qubit channel applied to every qubit after each two-qubit gate.
    pub fn with_idle(mut self, ch: Channel) -> Result<Self> {
        if ch.arity() != 1 {
            return Err(QemError::ArityMismatch { arity: ch.arity(), sites: 1 });
        }
        self.idle.push(ch);
        Ok(self)
    }

    /// Systematic `Rz(epsilon)` on the target after every CNOT.
    pub fn with_cnot_overrotation(mut self, epsilon: f64) -> Self {
        self.cnot_overrotation = epsilon;
        self
    }

    pub fn with_readout(mut self, readout: Vec<Confusion>) -> Self {
        self.readout = readout;
        self
    }

    pub fn global_depolarizing(&self) -> f64 {
        self.global_depolarizing
    }

    pub fn one_qubit(&self) -> Option<&Channel> {
        self.one_qubit.as_ref()
    }

    pub fn two_qubit(&self) -> Option<&Channel> {
        self.two_qubit.as_ref()
    }

    pub fn idle_channels(&self) -> &[Channel] {
        &self.idle
    }

    pub fn cnot_overrotation(&self) -> f64 {
        self.cnot_overrotation
    }

    pub fn readout(&self) -> &[Confusion] {
        &self.readout
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Parameters of the composite stand-in for a calibrated device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceParams {
    pub p0_2q: f64,
    pub p0_1q: f64,
    pub readout_err: f64,
    pub damping: f64,
    /// Coherent CNOT over-rotation (radians); not scaled by `lambda`.
    pub overrotation: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        DeviceParams {
            p0_2q: DEFAULT_P0_2Q,
            p0_1q: DEFAULT_P0_1Q,
            readout_err: DEFAULT_READOUT,
            damping: DEFAULT_DAMPING,
            overrotation: 0.0,
        }
    }
}

/// Depolarizing on every gate, amplitude and phase damping on all qubits
/// after each two-qubit gate and symmetric readout flips, all scaled by
/// `lambda`.
pub fn make_device_model(params: &DeviceParams, lambda: f64) -> Result<NoiseModel> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(QemError::InvalidParameter(format!("scale lambda = {lambda} outside (0, 1]")));
    }
    let mut nm = NoiseModel::noiseless()
        .with_one_qubit(Channel::depolarizing(1, lambda * params.p0_1q)?)?
        .with_two_qubit(Channel::depolarizing(2, lambda * params.p0_2q)?)?;
    if params.damping > 0.0 {
        nm = nm
            .with_idle(Channel::amplitude_damping(lambda * params.damping)?)?
            .with_idle(Channel::phase_damping(lambda * params.damping)?)?;
    }
    if params.readout_err > 0.0 {
        nm = nm.with_readout(vec![Confusion::symmetric(lambda * params.readout_err)?]);
    }
    nm.cnot_overrotation = params.overrotation;
    nm.scale = lambda;
    Ok(nm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::apply_channel;
    use crate::linalg::{c, max_abs_diff, CMatrix};
    use crate::state::DensityMatrix;

    #[test]
    fn amplitude_damping_one_resets() {
        let ch = make_channel(ChannelKind::AmplitudeDamping { gamma: 1.0 }).unwrap();
        let rho = DensityMatrix::maximally_mixed(1);
        let out = apply_channel(&rho, &ch, &[0]).unwrap();
        assert!(max_abs_diff(out.matrix(), DensityMatrix::zero(1).matrix()) < 1e-14);
    }

    #[test]
    fn depolarizing_zero_is_identity() {
        let ch = make_channel(ChannelKind::Depolarizing { p: 0.0, arity: 1 }).unwrap();
        let rho = DensityMatrix::from_matrix(
            1,
            CMatrix::from_row_slice(2, 2, &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)]),
        )
        .unwrap();
        assert_eq!(apply_channel(&rho, &ch, &[0]).unwrap(), rho);
    }

    #[test]
    fn parameter_ranges() {
        assert!(make_channel(ChannelKind::PhaseDamping { gamma: 1.5 }).is_err());
        assert!(make_channel(ChannelKind::CoherentOverrotation { epsilon: 0.1, axis: 'q' }).is_err());
        assert!(make_device_model(&DeviceParams::default(), 0.0).is_err());
        assert!(make_device_model(&DeviceParams::default(), 1.0).is_ok());
    }
}
