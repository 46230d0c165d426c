use crate::circuit::{Circuit, Confusion, Gate, MeasurementCounts};
use crate::error::{QemError, Result};

/// Per-qubit marginals `(P(0), P(1))` corrected by the inverse confusion
/// matrix and clipped back onto the simplex. A single confusion matrix is
/// broadcast to every qubit.
pub fn readout_mitigate(counts: &MeasurementCounts, confusion: &[Confusion]) -> Result<Vec<[f64; 2]>> {
    let n = counts.n();
    if !(confusion.len() == 1 || confusion.len() == n) {
        return Err(QemError::LengthMismatch(n, confusion.len()));
    }
    let shots = counts.shots();
    if shots == 0 {
        return Err(QemError::UndefinedEstimate("empty record".into()));
    }
    (0..n)
        .map(|q| {
            let inv = confusion[if confusion.len() == 1 { 0 } else { q }].inverse(q)?;
            let p1 = counts.ones(q) as f64 / shots as f64;
            let m = [1.0 - p1, p1];
            let raw = [inv[0][0] * m[0] + inv[0][1] * m[1], inv[1][0] * m[0] + inv[1][1] * m[1]];
            let clipped = raw.map(|x| x.max(0.0));
            let s = clipped[0] + clipped[1];
            Ok([clipped[0] / s, clipped[1] / s])
        })
        .collect()
}

pub fn mitigated_expectation_z(counts: &MeasurementCounts, qubit: usize, confusion: &[Confusion]) -> Result<f64> {
    let m = readout_mitigate(counts, confusion)?;
    let p = m.get(qubit).ok_or(QemError::SiteOutOfRange { site: qubit, n: counts.n() })?;
    Ok(p[0] - p[1])
}

/// The circuit and a copy with `X` on the ancilla first. The flipped copy
/// reports `-<Z>`, so readout bias on the ancilla enters the two with
/// opposite signs.
pub fn control_flip_pair(c: &Circuit) -> Result<(Circuit, Circuit)> {
    let a = c.ancilla().ok_or_else(|| QemError::InvalidParameter("control flip needs an ancilla".into()))?;
    let mut flipped = Circuit::with_ancilla(c.n(), a)?;
    flipped.push(Gate::X(a))?;
    flipped.extend(c)?;
    Ok((c.clone(), flipped))
}

/// `(<Z> - <Z>_flipped) / 2`
pub fn control_flip_combine(z: f64, z_flipped: f64) -> f64 {
    (z - z_flipped) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_confusion_is_passthrough() {
        let counts = MeasurementCounts::new(1, vec![70, 30]).unwrap();
        let m = readout_mitigate(&counts, &[Confusion::IDEAL]).unwrap();
        assert!((m[0][0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn inversion_example() {
        let p = Confusion::new([[0.95, 0.02], [0.05, 0.98]]).unwrap();
        let counts = MeasurementCounts::new(1, vec![900, 100]).unwrap();
        let m = readout_mitigate(&counts, &[p]).unwrap();
        assert!((m[0][0] - 0.946237).abs() < 1e-6, "{:?}", m);
        assert!((m[0][1] - 0.053763).abs() < 1e-6);
    }

    #[test]
    fn singular_rejected() {
        let p = Confusion::new([[0.5, 0.5], [0.5, 0.5]]).unwrap();
        let counts = MeasurementCounts::new(1, vec![1, 1]).unwrap();
        assert_eq!(readout_mitigate(&counts, &[p]), Err(QemError::SingularConfusion(0)));
    }

    #[test]
    fn flip_pair_shape() {
        let mut c = Circuit::with_ancilla(2, 1).unwrap();
        c.push(Gate::H(1)).unwrap();
        let (a, b) = control_flip_pair(&c).unwrap();
        assert_eq!(a, c);
        assert_eq!(b.gates()[0], Gate::X(1));
        assert!(control_flip_pair(&Circuit::new(2)).is_err());
        assert_eq!(control_flip_combine(0.4, -0.4), 0.4);
    }
}
