use std::fmt;

use crate::error::{QemError, Result};
use crate::linalg::{c, CMatrix, C64};
use crate::pauli::{Pauli, PauliString, Phase};

/// Which control value activates a controlled gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    OnOne,
    OnZero,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    S(usize),
    Sdg(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    /// `exp(-i theta Z / 2)`
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
    Cz(usize, usize),
    /// `pauli` spans the whole register and is the identity on `control`.
    ControlledPauli { control: usize, pauli: PauliString, polarity: Polarity },
}

impl Gate {
    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::Cnot { control, target }
    }

    pub fn controlled_pauli(control: usize, pauli: PauliString, polarity: Polarity) -> Result<Gate> {
        if control >= pauli.n() {
            return Err(QemError::SiteOutOfRange { site: control, n: pauli.n() });
        }
        if pauli.factor(control) != Pauli::I {
            return Err(QemError::DuplicateSite(control));
        }
        if pauli.is_identity() {
            return Err(QemError::EmptySupport);
        }
        Ok(Gate::ControlledPauli { control, pauli, polarity })
    }

    /// Sites in the order used by [`Gate::local_matrix`].
    pub fn sites(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::S(q) | Gate::Sdg(q) => vec![*q],
            Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => vec![*q],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Cz(a, b) => vec![*a, *b],
            Gate::ControlledPauli { control, pauli, .. } => {
                let mut s = vec![*control];
                s.extend(pauli.support());
                s
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.sites().len()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::Y(_) => "y",
            Gate::Z(_) => "z",
            Gate::S(_) => "s",
            Gate::Sdg(_) => "sdg",
            Gate::Rx(..) => "rx",
            Gate::Ry(..) => "ry",
            Gate::Rz(..) => "rz",
            Gate::Cnot { .. } => "cx",
            Gate::Cz(..) => "cz",
            Gate::ControlledPauli { polarity: Polarity::OnOne, .. } => "cp1",
            Gate::ControlledPauli { polarity: Polarity::OnZero, .. } => "cp0",
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => Some(*a),
            _ => None,
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::S(q) => Gate::Sdg(*q),
            Gate::Sdg(q) => Gate::S(*q),
            Gate::Rx(q, a) => Gate::Rx(*q, -a),
            Gate::Ry(q, a) => Gate::Ry(*q, -a),
            Gate::Rz(q, a) => Gate::Rz(*q, -a),
            g => g.clone(),
        }
    }

    /// Same gate with every site passed through `f`.
    pub fn remap(&self, n: usize, f: impl Fn(usize) -> usize) -> Gate {
        match self {
            Gate::H(q) => Gate::H(f(*q)),
            Gate::X(q) => Gate::X(f(*q)),
            Gate::Y(q) => Gate::Y(f(*q)),
            Gate::Z(q) => Gate::Z(f(*q)),
            Gate::S(q) => Gate::S(f(*q)),
            Gate::Sdg(q) => Gate::Sdg(f(*q)),
            Gate::Rx(q, a) => Gate::Rx(f(*q), *a),
            Gate::Ry(q, a) => Gate::Ry(f(*q), *a),
            Gate::Rz(q, a) => Gate::Rz(f(*q), *a),
            Gate::Cnot { control, target } => Gate::cnot(f(*control), f(*target)),
            Gate::Cz(a, b) => Gate::Cz(f(*a), f(*b)),
            Gate::ControlledPauli { control, pauli, polarity } => {
                let mut factors = vec![Pauli::I; n];
                for q in pauli.support() {
                    factors[f(q)] = pauli.factor(q);
                }
                Gate::ControlledPauli {
                    control: f(*control),
                    pauli: PauliString::with_phase(factors, pauli.phase()),
                    polarity: *polarity,
                }
            }
        }
    }

    /// Dense matrix on [`Gate::sites`], with `sites()[b]` as local bit `b`.
    pub fn local_matrix(&self) -> CMatrix {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let m2 = |a: C64, b: C64, cc: C64, d: C64| CMatrix::from_row_slice(2, 2, &[a, b, cc, d]);
        match self {
            Gate::H(_) => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                m2(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0))
            }
            Gate::X(_) => m2(z, one, one, z),
            Gate::Y(_) => m2(z, c(0.0, -1.0), c(0.0, 1.0), z),
            Gate::Z(_) => m2(one, z, z, -one),
            Gate::S(_) => m2(one, z, z, c(0.0, 1.0)),
            Gate::Sdg(_) => m2(one, z, z, c(0.0, -1.0)),
            Gate::Rx(_, a) => {
                let (s, co) = (a / 2.0).sin_cos();
                m2(c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0))
            }
            Gate::Ry(_, a) => {
                let (s, co) = (a / 2.0).sin_cos();
                m2(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
            }
            Gate::Rz(_, a) => m2(C64::from_polar(1.0, -a / 2.0), z, z, C64::from_polar(1.0, a / 2.0)),
            Gate::Cnot { .. } => {
                // local bit 0 = control, bit 1 = target
                let mut m = CMatrix::zeros(4, 4);
                m[(0, 0)] = one;
                m[(2, 2)] = one;
                m[(3, 1)] = one;
                m[(1, 3)] = one;
                m
            }
            Gate::Cz(..) => {
                let mut m = CMatrix::identity(4, 4);
                m[(3, 3)] = -one;
                m
            }
            Gate::ControlledPauli { pauli, polarity, .. } => {
                let support = pauli.support();
                let local = PauliString::with_phase(support.iter().map(|&q| pauli.factor(q)).collect(), pauli.phase());
                let p = local
                    .to_matrix_limited(support.len())
                    .expect("support fits its own limit");
                let active = match polarity {
                    Polarity::OnOne => 1,
                    Polarity::OnZero => 0,
                };
                let dim = 2 * p.nrows();
                CMatrix::from_fn(dim, dim, |r, col| {
                    if r & 1 != col & 1 {
                        z
                    } else if r & 1 == active {
                        p[(r >> 1, col >> 1)]
                    } else if r == col {
                        one
                    } else {
                        z
                    }
                })
            }
        }
    }

    pub fn is_controlled_pauli(&self) -> bool {
        matches!(self, Gate::ControlledPauli { .. })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::ControlledPauli { control, pauli, .. } => write!(f, "{} {} {}", self.name(), control, pauli),
            g => {
                write!(f, "{}", g.name())?;
                for s in g.sites() {
                    write!(f, " {s}")?;
                }
                if let Some(a) = g.angle() {
                    // `{:?}` keeps the shortest round-trip representation.
                    write!(f, " {a:?}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses one line of the text format, e.g. `rz 2 0.25` or `cp0 4 ZZZYI`.
pub fn parse_gate(line: &str, line_no: usize) -> Result<Gate> {
    let err = |msg: String| QemError::Parse { line: line_no, msg };
    let toks: Vec<&str> = line.split_whitespace().collect();
    let (&name, args) = toks.split_first().ok_or_else(|| err("empty line".into()))?;
    let site = |i: usize| -> Result<usize> {
        args.get(i)
            .ok_or_else(|| err(format!("{name}: missing site")))?
            .parse::<usize>()
            .map_err(|e| err(e.to_string()))
    };
    let angle = |i: usize| -> Result<f64> {
        args.get(i)
            .ok_or_else(|| err(format!("{name}: missing angle")))?
            .parse::<f64>()
            .map_err(|e| err(e.to_string()))
    };
    let expect = |k: usize| -> Result<()> {
        if args.len() != k {
            return Err(err(format!("{name}: expected {k} arguments, got {}", args.len())));
        }
        Ok(())
    };
    let gate = match name {
        "h" | "x" | "y" | "z" | "s" | "sdg" => {
            expect(1)?;
            let q = site(0)?;
            match name {
                "h" => Gate::H(q),
                "x" => Gate::X(q),
                "y" => Gate::Y(q),
                "z" => Gate::Z(q),
                "s" => Gate::S(q),
                _ => Gate::Sdg(q),
            }
        }
        "rx" | "ry" | "rz" => {
            expect(2)?;
            let (q, a) = (site(0)?, angle(1)?);
            match name {
                "rx" => Gate::Rx(q, a),
                "ry" => Gate::Ry(q, a),
                _ => Gate::Rz(q, a),
            }
        }
        "cx" => {
            expect(2)?;
            Gate::cnot(site(0)?, site(1)?)
        }
        "cz" => {
            expect(2)?;
            Gate::Cz(site(0)?, site(1)?)
        }
        "cp0" | "cp1" => {
            expect(2)?;
            let pauli: PauliString = args[1].parse().map_err(|e: QemError| err(e.to_string()))?;
            if pauli.phase() != Phase::ONE && pauli.phase() != Phase::MINUS_ONE {
                return Err(err("controlled Pauli must have a real sign".into()));
            }
            let polarity = if name == "cp1" { Polarity::OnOne } else { Polarity::OnZero };
            Gate::controlled_pauli(site(0)?, pauli, polarity).map_err(|e| err(e.to_string()))?
        }
        other => return Err(err(format!("unknown gate '{other}'"))),
    };
    Ok(gate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_unitary, max_abs_diff};

    #[test]
    fn all_gate_matrices_are_unitary() {
        let p: PauliString = "IZYX".parse().unwrap();
        let gates = vec![
            Gate::H(0),
            Gate::S(0),
            Gate::Sdg(0),
            Gate::Rx(0, 0.3),
            Gate::Ry(0, -1.1),
            Gate::Rz(0, 2.2),
            Gate::cnot(0, 1),
            Gate::Cz(0, 1),
            Gate::controlled_pauli(0, p, Polarity::OnZero).unwrap(),
        ];
        for g in gates {
            assert!(is_unitary(&g.local_matrix(), 1e-12), "{g}");
        }
    }

    #[test]
    fn text_round_trip() {
        let gates = vec![
            Gate::Rz(3, 0.1 + 0.2),
            Gate::cnot(4, 1),
            Gate::Sdg(2),
            Gate::controlled_pauli(4, "ZZZYI".parse().unwrap(), Polarity::OnZero).unwrap(),
        ];
        for g in gates {
            assert_eq!(parse_gate(&g.to_string(), 1).unwrap(), g);
        }
        assert!(parse_gate("foo 1", 3).is_err());
        assert!(parse_gate("rz 1", 3).is_err());
    }

    #[test]
    fn inverse_undoes_gate() {
        for g in [Gate::S(0), Gate::Rx(0, 0.7), Gate::H(0)] {
            let m = g.inverse().local_matrix() * g.local_matrix();
            assert!(max_abs_diff(&m, &CMatrix::identity(2, 2)) < 1e-14);
        }
    }

    #[test]
    fn controlled_pauli_rejects_bad_input() {
        assert_eq!(
            Gate::controlled_pauli(0, "ZI".parse().unwrap(), Polarity::OnOne),
            Err(QemError::DuplicateSite(0))
        );
        assert_eq!(
            Gate::controlled_pauli(0, "II".parse().unwrap(), Polarity::OnOne),
            Err(QemError::EmptySupport)
        );
    }
}
