use serde::{Deserialize, Serialize};

use crate::circuit::{circuit_to_unitary, compile, controlled_pauli_template, simulate_noisy, Circuit, Polarity, DEVICE_CHAIN};
use crate::crg::{crg_cost, nuclear_groups, uncontrolled_step_circuit};
use crate::error::Result;
use crate::lattice::exact_ground_state;
use crate::linalg::{exact_evolution, max_abs_diff, max_diff_up_to_phase};
use crate::mitigation::{build_ev_circuit, exact_estimate, AncillaBloch, CircuitStyle, EstimatorKind, MomentSpec};
use crate::noise::NoiseModel;
use crate::state::DensityMatrix;
use crate::trotter::{group_operator, trotter_unitary, ProductFormulaSpec};
use crate::vqe::{ansatz_circuit, optimize};

use super::{write_csv, ExperimentConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestRow {
    pub check: String,
    pub pass: bool,
    pub detail: String,
    pub config_hash: String,
}

/// Fast structural checks on the configured model; each runs in well under
/// a second.
pub fn run_selftest(cfg: &ExperimentConfig) -> Result<Vec<SelfTestRow>> {
    cfg.validate()?;
    let h = cfg.hamiltonian()?;
    let hash = cfg.hash();
    let mut rows = Vec::new();
    let mut push = |check: &str, pass: bool, detail: String| {
        rows.push(SelfTestRow { check: check.into(), pass, detail, config_hash: hash.clone() })
    };

    let spec = ProductFormulaSpec::new(2, 2);
    let chain: Vec<usize> = DEVICE_CHAIN.iter().copied().filter(|&q| q < h.n()).collect();
    let step = compile(&uncontrolled_step_circuit(&h, &spec, 0.37)?, &chain)?;
    let d = max_diff_up_to_phase(&circuit_to_unitary(step.circuit())?, &trotter_unitary(&h, &spec, 0.37)?);
    push("compiled step matches product formula", d < 1e-9, format!("{d:.2e}"));

    let groups = nuclear_groups(&h)?;
    let mut worst: f64 = 0.0;
    for g in &groups {
        let hm = group_operator(&h, g);
        let r = g.reversal.to_matrix()?;
        worst = worst.max(max_abs_diff(&(&r * exact_evolution(&hm, 0.8)? * r.adjoint()), &exact_evolution(&hm, -0.8)?));
    }
    push("reversal gates invert their groups", worst < 1e-10, format!("{} groups, {worst:.2e}", groups.len()));

    let zyzz = controlled_pauli_template(&"ZZZYI".parse()?, 4, Polarity::OnOne, &DEVICE_CHAIN)?.cnot_count();
    let cost = crg_cost(&h, &spec, 0.5)?;
    let ms = MomentSpec { ok: "ZIII".parse()?, ol: "ZIII".parse()?, j: 1, tau: cfg.tau, formula: spec.clone() };
    let ev = build_ev_circuit(&h, &ms, &Circuit::new(4), CircuitStyle::Crg)?;
    push(
        "CNOT counts",
        zyzz == 7 && cost.extra_cnots == 18 && ev.cnot_count().abs_diff(56) <= 2,
        format!("controlled ZYZZ {zyzz}, reversal overhead {}, EV {}", cost.extra_cnots, ev.cnot_count()),
    );

    let prep = ansatz_circuit(&cfg.ansatz);
    let circ = build_ev_circuit(&h, &ms, &prep, CircuitStyle::Crg)?;
    let clean = simulate_noisy(&circ, &NoiseModel::noiseless(), &DensityMatrix::zero(5))?;
    let truth = exact_estimate(EstimatorKind::Ev, &AncillaBloch::from_density(&clean, 4)?)?.value;
    let noisy = simulate_noisy(&circ, &NoiseModel::global(0.3)?, &DensityMatrix::zero(5))?;
    let pev = exact_estimate(EstimatorKind::Pev, &AncillaBloch::from_density(&noisy, 4)?)?.value;
    let e = (pev - truth).norm();
    push("purified estimate exact under global depolarizing", e < 1e-10, format!("{e:.2e}"));

    let (e0, _) = exact_ground_state(&h)?;
    let r = optimize(&h, &cfg.vqe.initial, cfg.vqe.budget)?;
    let rel = ((r.energy - e0) / e0).abs();
    push("ansatz energy within 10%", rel < 0.1, format!("{:.2}%", 100.0 * rel));

    write_csv(&cfg.out_dir.join("selftest.csv"), &rows)?;
    Ok(rows)
}
