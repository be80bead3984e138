//! JSON specifications of states and observables.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pauli::{PauliString, PauliSum};
use crate::purity::{apply_state_prep_unitary, PrepGate};
use crate::setups::PREP_STREAM;
use crate::simulate::{brickwork_pairs, random_local_rotation, sample_haar_su4, sample_rng};
use crate::state::{QuantumState, StateVector};
use crate::C64;

/// Seeded random preparation layers appended after the explicit gates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RandomPrep {
    /// One layer of `exp(-i (a X + b Y + c Z))` per qubit, `a, b, c ~ N(0, sigma^2)`.
    LocalRotations { sigma: f64 },
    /// `layers` layers of Haar-SU(4) brickwork.
    HaarBrickwork { layers: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    /// Computational basis state, qubit 0 first.
    Basis { bits: String },
    /// Amplitudes as `[re, im]` pairs.
    Statevector { amplitudes: Vec<[f64; 2]> },
    /// Gates applied to a basis state (all zeros by default).
    PrepCircuit {
        #[serde(default)]
        bits: Option<String>,
        #[serde(default)]
        gates: Vec<PrepGate>,
        #[serde(default)]
        random: Option<RandomPrep>,
        #[serde(default)]
        seed: u64,
    },
}

impl StateSpec {
    /// The state on `n` qubits and the full list of gates applied to reach it.
    pub fn build(&self, n: usize) -> Result<(QuantumState, Vec<PrepGate>)> {
        let check = |m: usize| if m == n { Ok(()) } else { Err(Error::QubitMismatch { left: n, right: m }) };
        match self {
            Self::Basis { bits } => {
                let v = StateVector::basis(bits)?;
                check(v.n())?;
                Ok((v.into(), Vec::new()))
            }
            Self::Statevector { amplitudes } => {
                let v = StateVector::from_amplitudes(amplitudes.iter().map(|z| C64::new(z[0], z[1])).collect())?;
                check(v.n())?;
                Ok((v.into(), Vec::new()))
            }
            Self::PrepCircuit { bits, gates, random, seed } => {
                let base = match bits {
                    Some(b) => StateVector::basis(b)?,
                    None => StateVector::zero(n),
                };
                check(base.n())?;
                let mut all = gates.clone();
                let mut rng = sample_rng(*seed, PREP_STREAM);
                match random {
                    None => {}
                    Some(RandomPrep::LocalRotations { sigma }) => {
                        if !(*sigma >= 0.0 && sigma.is_finite()) {
                            return Err(invalid(format!("sigma {sigma} must be finite and nonnegative")));
                        }
                        all.extend((0..n).map(|q| PrepGate::single(q, &random_local_rotation(*sigma, &mut rng))));
                    }
                    Some(RandomPrep::HaarBrickwork { layers }) => {
                        for _ in 0..*layers {
                            for (a, b) in brickwork_pairs(n) {
                                all.push(PrepGate::two(a, b, &sample_haar_su4(&mut rng)));
                            }
                        }
                    }
                }
                let state = apply_state_prep_unitary(&QuantumState::from(base), &all)?;
                Ok((state, all))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub pauli: PauliString,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    pub terms: Vec<TermSpec>,
}

impl ObservableSpec {
    pub fn build(&self, n: usize) -> Result<PauliSum> {
        if self.terms.is_empty() {
            return Err(invalid("observable has no terms"));
        }
        PauliSum::from_terms(n, self.terms.iter().map(|t| (t.coeff, t.pauli)))
    }

    pub fn from_sum(o: &PauliSum) -> Self {
        Self { terms: o.terms().iter().map(|&(coeff, pauli)| TermSpec { coeff, pauli }).collect() }
    }
}
