use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{QemError, Result};
use crate::lattice::{build_hamiltonian, shift_identity, LatticeModelParams};
use crate::mitigation::{CircuitStyle, DEFAULT_ODR_FLOOR};
use crate::noise::{make_device_model, DeviceParams, NoiseModel};
use crate::pauli::{PauliString, PauliSumOperator};
use crate::trotter::ProductFormulaSpec;
use crate::vqe::AnsatzParams;

/// Converged angles of the two-parameter ansatz for the default model.
pub const DEFAULT_ANSATZ: AnsatzParams = AnsatzParams { theta0: 0.7030634286450563, theta1: 0.2378197700292653 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExcitationTerm {
    pub coeff: f64,
    pub pauli: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// Global depolarizing with probability `lambda` after every gate.
    Global,
    /// Composite device stand-in scaled by `lambda`.
    Device,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub device: DeviceParams,
    /// Strength for single-point experiments.
    pub lambda: f64,
    /// Strength grid for the noise sweep.
    pub sweep: Vec<f64>,
    /// Moment index probed by the sweep.
    pub sweep_moment: usize,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            kind: NoiseKind::Device,
            device: DeviceParams::default(),
            lambda: 0.3,
            sweep: (0..=24).map(|k| 0.999 * 10f64.powf(-4.0 + k as f64 / 6.0)).collect(),
            sweep_moment: 1,
        }
    }
}

impl NoiseSpec {
    pub fn model(&self, lambda: f64) -> Result<NoiseModel> {
        match self.kind {
            NoiseKind::Global => NoiseModel::global(lambda),
            NoiseKind::Device => make_device_model(&self.device, lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mitigation {
    Raw,
    Ev,
    Pev,
    Odr,
}

impl Mitigation {
    pub fn name(self) -> &'static str {
        match self {
            Mitigation::Raw => "raw",
            Mitigation::Ev => "ev",
            Mitigation::Pev => "pev",
            Mitigation::Odr => "odr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MitigationSpec {
    pub estimators: Vec<Mitigation>,
    /// Twirled copies per ODR circuit; shots are split evenly between them.
    pub twirls: usize,
    /// Shots per circuit (per measurement basis for tomography).
    pub shots: u64,
    pub seed: Option<u64>,
    pub repetitions: usize,
    /// Posterior draws per error bar.
    pub draws: usize,
    pub odr_floor: f64,
}

impl Default for MitigationSpec {
    fn default() -> Self {
        MitigationSpec {
            estimators: vec![Mitigation::Raw, Mitigation::Ev, Mitigation::Pev, Mitigation::Odr],
            twirls: 16,
            shots: 100_000,
            seed: None,
            repetitions: 30,
            draws: 200,
            odr_floor: DEFAULT_ODR_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub delta: f64,
    /// Truncation tolerance that fixes the number of moments.
    pub eps: f64,
    pub nu_min: f64,
    pub nu_max: f64,
    pub points: usize,
    /// Strength of the noise used for the mitigated curve.
    pub lambda: f64,
    pub estimator: Mitigation,
    /// Trotter steps per unit of `j`, rounded up to an even count.
    pub steps_per_moment: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            delta: 0.4,
            eps: 1e-2,
            nu_min: -5.0,
            nu_max: 25.0,
            points: 201,
            lambda: 0.1,
            estimator: Mitigation::Pev,
            steps_per_moment: 1.0,
        }
    }
}

impl KernelConfig {
    pub fn grid(&self) -> Vec<f64> {
        if self.points < 2 {
            return vec![self.nu_min];
        }
        let d = (self.nu_max - self.nu_min) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.nu_min + d * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiStepConfig {
    pub double_steps: usize,
    pub lambda: f64,
}

impl Default for MultiStepConfig {
    fn default() -> Self {
        MultiStepConfig { double_steps: 8, lambda: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VqeConfig {
    pub initial: AnsatzParams,
    pub budget: usize,
}

impl Default for VqeConfig {
    fn default() -> Self {
        VqeConfig { initial: AnsatzParams::new(0.1, 0.1), budget: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: LatticeModelParams,
    pub ansatz: AnsatzParams,
    pub tau: f64,
    pub moments: Vec<usize>,
    pub excitation: Vec<ExcitationTerm>,
    pub formula: ProductFormulaSpec,
    pub style: CircuitStyle,
    pub noise: NoiseSpec,
    pub mitigation: MitigationSpec,
    pub kernel: KernelConfig,
    pub multi_step: MultiStepConfig,
    pub vqe: VqeConfig,
    /// Not part of the config hash.
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: LatticeModelParams::default(),
            ansatz: DEFAULT_ANSATZ,
            tau: 0.125,
            moments: (0..=10).collect(),
            excitation: ["ZIII", "IIZI"].iter().map(|p| ExcitationTerm { coeff: 1.0, pauli: p.to_string() }).collect(),
            formula: ProductFormulaSpec::new(2, 2),
            style: CircuitStyle::Crg,
            noise: NoiseSpec::default(),
            mitigation: MitigationSpec::default(),
            kernel: KernelConfig::default(),
            multi_step: MultiStepConfig::default(),
            vqe: VqeConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QemError::Config(e.to_string()))
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.mitigation.seed = Some(seed);
        self
    }

    pub fn seed(&self) -> Result<u64> {
        self.mitigation.seed.ok_or_else(|| QemError::Config("a seed is required".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(QemError::Config(m.into()));
        self.seed()?;
        if self.mitigation.shots == 0 {
            return bad("shots must be at least 1");
        }
        if self.mitigation.twirls == 0 || self.mitigation.repetitions == 0 {
            return bad("twirls and repetitions must be at least 1");
        }
        if self.mitigation.draws < 2 {
            return bad("need at least two posterior draws");
        }
        if !(self.tau > 0.0) {
            return bad("tau must be positive");
        }
        if self.excitation.is_empty() {
            return bad("excitation operator is empty");
        }
        if self.moments.is_empty() {
            return bad("no moment indices");
        }
        self.excitation_strings()?;
        Ok(())
    }

    pub fn excitation_strings(&self) -> Result<Vec<(f64, PauliString)>> {
        self.excitation
            .iter()
            .map(|t| {
                let p: PauliString = t.pauli.parse()?;
                if p.n() != 4 {
                    return Err(QemError::LengthMismatch(4, p.n()));
                }
                Ok((t.coeff, p))
            })
            .collect()
    }

    pub fn excitation_operator(&self) -> Result<PauliSumOperator> {
        PauliSumOperator::new(4, self.excitation_strings()?)
    }

    /// Hamiltonian with its identity part removed.
    pub fn hamiltonian(&self) -> Result<PauliSumOperator> {
        Ok(shift_identity(&build_hamiltonian(&self.model)?).0)
    }

    /// SHA-256 of the JSON form with the output directory blanked.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"tau": 0.1, "bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"noise": {"lamda": 0.1}}"#).is_err());
        let c = ExperimentConfig::from_json(r#"{"tau": 0.25, "mitigation": {"seed": 4}}"#).unwrap();
        assert_eq!(c.tau, 0.25);
        assert_eq!(c.mitigation.shots, 100_000);
        c.validate().unwrap();
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(ExperimentConfig::default().validate().is_err());
        let c = ExperimentConfig::default().with_seed(1);
        c.validate().unwrap();
        let mut z = c.clone();
        z.mitigation.shots = 0;
        assert!(z.validate().is_err());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::default().with_seed(1);
        let mut b = a.clone();
        b.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        assert_ne!(a.hash(), a.clone().with_seed(2).hash());
    }

    #[test]
    fn round_trip() {
        let a = ExperimentConfig::default().with_seed(9);
        let b = ExperimentConfig::from_json(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
