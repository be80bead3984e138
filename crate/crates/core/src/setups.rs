//! Generator families and the four transverse-field Ising benchmark setups.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pauli::{PauliString, PauliSum};
use crate::purity::{apply_state_prep_unitary, PrepGate};
use crate::simulate::{brickwork_pairs, random_local_rotation, sample_haar_su4, sample_rng};
use crate::state::{QuantumState, StateVector};
use crate::variance::{ProblemFamily, ProblemInstance};

/// Stream index reserved for state-preparation randomness, disjoint from the
/// per-sample streams of the Monte Carlo estimators.
pub const PREP_STREAM: u64 = 1 << 63;

pub const DEFAULT_ROTATION_SIGMA: f64 = 0.2;

fn pauli(n: usize, letters: &[(usize, char)]) -> PauliString {
    PauliString::from_sparse(n, letters).expect("valid qubit indices")
}

/// `{X_j X_{j+1}} + {Z_j}` on an open chain.
pub fn tfim_generators(n: usize) -> Vec<PauliString> {
    let mut g: Vec<PauliString> = (0..n.saturating_sub(1)).map(|j| pauli(n, &[(j, 'X'), (j + 1, 'X')])).collect();
    g.extend((0..n).map(|j| pauli(n, &[(j, 'Z')])));
    g
}

/// `{X_j, Y_j}` on every qubit.
pub fn local_su2_generators(n: usize) -> Vec<PauliString> {
    (0..n).flat_map(|j| [pauli(n, &[(j, 'X')]), pauli(n, &[(j, 'Y')])]).collect()
}

/// `{X_j, Y_j} + {Z_j Z_{j+1}}`; closes to all of `su(2^n)`.
pub fn hardware_efficient_generators(n: usize) -> Vec<PauliString> {
    let mut g = local_su2_generators(n);
    g.extend((0..n.saturating_sub(1)).map(|j| pauli(n, &[(j, 'Z'), (j + 1, 'Z')])));
    g
}

/// Zero-based index of the first qubit of the middle pair.
pub fn middle_qubit(n: usize) -> usize {
    (n / 2).max(1) - 1
}

/// `X_p X_{p+1} + Z_p` at the middle of the chain.
pub fn setup0_observable(n: usize) -> PauliSum {
    let p = middle_qubit(n);
    PauliSum::from_terms(n, [(1.0, pauli(n, &[(p, 'X'), (p + 1, 'X')])), (1.0, pauli(n, &[(p, 'Z')]))]).expect("hermitian")
}

/// `X_1 Z_2 ... Z_{n-1} Y_n`.
pub fn setup1_observable(n: usize) -> PauliSum {
    let mut letters = vec![(0, 'X')];
    letters.extend((1..n - 1).map(|j| (j, 'Z')));
    letters.push((n - 1, 'Y'));
    PauliSum::from_pauli(pauli(n, &letters)).expect("hermitian")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Setup {
    /// Middle-pair observable on the all-zero state.
    Zero,
    /// String observable on the all-zero state.
    One,
    /// Middle-pair observable after one layer of random local rotations.
    Two,
    /// Middle-pair observable after `n` layers of Haar-SU(4) brickwork.
    Three,
}

impl Setup {
    pub const ALL: [Setup; 4] = [Setup::Zero, Setup::One, Setup::Two, Setup::Three];

    pub fn index(self) -> u8 {
        self.into()
    }
}

impl TryFrom<u8> for Setup {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Self::Zero),
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            _ => Err(format!("unknown setup {v}; expected 0-3")),
        }
    }
}

impl From<Setup> for u8 {
    fn from(s: Setup) -> u8 {
        s as u8
    }
}

impl std::fmt::Display for Setup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupOptions {
    /// Standard deviation of each rotation coefficient in setup 2.
    #[serde(default = "default_sigma")]
    pub rotation_sigma: f64,
    /// Brickwork depth in setup 3; `None` means `n`.
    #[serde(default)]
    pub prep_layers: Option<usize>,
}

fn default_sigma() -> f64 {
    DEFAULT_ROTATION_SIGMA
}

impl Default for SetupOptions {
    fn default() -> Self {
        Self { rotation_sigma: DEFAULT_ROTATION_SIGMA, prep_layers: None }
    }
}

#[derive(Debug, Clone)]
pub struct SetupInstance {
    pub setup: Setup,
    pub n: usize,
    pub generators: Vec<PauliString>,
    pub state: QuantumState,
    pub observable: PauliSum,
    pub prep: Vec<PrepGate>,
}

/// Build setup `setup` on `n` qubits; random preparation circuits are drawn
/// from `seed`.
pub fn setup_instance(setup: Setup, n: usize, seed: u64, opts: &SetupOptions) -> Result<SetupInstance> {
    if n < 2 {
        return Err(invalid("setups need at least 2 qubits"));
    }
    if !(opts.rotation_sigma >= 0.0 && opts.rotation_sigma.is_finite()) {
        return Err(invalid(format!("rotation_sigma {} must be finite and nonnegative", opts.rotation_sigma)));
    }
    let observable = match setup {
        Setup::One => setup1_observable(n),
        _ => setup0_observable(n),
    };
    let mut rng = sample_rng(seed, PREP_STREAM);
    let prep: Vec<PrepGate> = match setup {
        Setup::Zero | Setup::One => Vec::new(),
        Setup::Two => (0..n).map(|q| PrepGate::single(q, &random_local_rotation(opts.rotation_sigma, &mut rng))).collect(),
        Setup::Three => {
            let layers = opts.prep_layers.unwrap_or(n);
            let mut gates = Vec::new();
            for _ in 0..layers {
                for (a, b) in brickwork_pairs(n) {
                    gates.push(PrepGate::two(a, b, &sample_haar_su4(&mut rng)));
                }
            }
            gates
        }
    };
    let state = apply_state_prep_unitary(&QuantumState::from(StateVector::zero(n)), &prep)?;
    Ok(SetupInstance { setup, n, generators: tfim_generators(n), state, observable, prep })
}

/// A setup viewed as a family over `n`, for BP diagnosis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetupFamily {
    pub setup: Setup,
    pub seed: u64,
    pub options: SetupOptions,
}

impl ProblemFamily for SetupFamily {
    fn name(&self) -> String {
        format!("setup {}", self.setup)
    }

    fn instance(&self, n: usize) -> Result<ProblemInstance> {
        let inst = setup_instance(self.setup, n, self.seed, &self.options)?;
        Ok(ProblemInstance { generators: inst.generators, state: inst.state, observable: inst.observable })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_counts() {
        assert_eq!(tfim_generators(4).len(), 7);
        assert_eq!(local_su2_generators(3).len(), 6);
        assert_eq!(hardware_efficient_generators(3).len(), 8);
        assert_eq!(tfim_generators(3)[0].to_string(), "XXI");
    }

    #[test]
    fn observables() {
        assert_eq!(middle_qubit(3), 0);
        assert_eq!(middle_qubit(6), 2);
        let o = setup0_observable(4);
        assert_eq!(o.terms().len(), 2);
        assert_eq!(o.hs_norm_sq(), 32.0);
        let s = setup1_observable(4);
        assert_eq!(s.terms()[0].1.to_string(), "XZZY");
    }

    #[test]
    fn prep_is_seeded() {
        let a = setup_instance(Setup::Three, 4, 9, &SetupOptions::default()).unwrap();
        let b = setup_instance(Setup::Three, 4, 9, &SetupOptions::default()).unwrap();
        assert_eq!(a.prep, b.prep);
        assert_eq!(a.prep.len(), 4 * 3);
        let two = setup_instance(Setup::Two, 4, 9, &SetupOptions::default()).unwrap();
        assert_eq!(two.prep.len(), 4);
        assert!(setup_instance(Setup::Zero, 1, 0, &SetupOptions::default()).is_err());
        assert_eq!(serde_json::to_string(&Setup::Two).unwrap(), "2");
        assert!(serde_json::from_str::<Setup>("7").is_err());
    }
}
