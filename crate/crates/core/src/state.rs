//! Quantum states: pure statevectors, dense density matrices, and a globally
//! depolarized wrapper that keeps the pure part unmaterialized.

use nalgebra::{DMatrix, Matrix2, Matrix4};

use crate::error::{Error, Result};
use crate::pauli::{pow2, HermitianOp, PauliString, PauliSum};
use crate::{tol, C64};

/// Largest register simulated as a dense statevector.
pub const MAX_SIM_QUBITS: usize = 24;

/// Statevector with qubit `q` on bit `q` of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|bits>` where `bits` is written qubit 0 first, e.g. `"010"`.
    pub fn basis(bits: &str) -> Result<Self> {
        let n = bits.chars().count();
        check_n(n)?;
        let mut k = 0usize;
        for (q, c) in bits.chars().enumerate() {
            match c {
                '0' => {}
                '1' => k |= 1 << q,
                _ => return Err(Error::InvalidArgument(format!("invalid bit {c:?} in {bits:?}"))),
            }
        }
        Ok(Self::basis_index(n, k))
    }

    pub fn zero(n: usize) -> Self {
        Self::basis_index(n, 0)
    }

    pub fn basis_index(n: usize, k: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[k] = C64::new(1.0, 0.0);
        Self { n, amps }
    }

    /// Wrap amplitudes; they must have power-of-two length and unit norm.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch(format!("{len} amplitudes is not 2^n with n >= 1")));
        }
        let n = len.trailing_zeros() as usize;
        check_n(n)?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol::LINALG {
            return Err(Error::InvalidArgument(format!("statevector norm {norm} != 1")));
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn renormalize(&mut self) {
        let s = 1.0 / self.norm();
        self.amps.iter_mut().for_each(|a| *a *= s);
    }

    /// `<psi| P |psi>`; real part only (exact for Hermitian `P`).
    pub fn expectation_pauli(&self, p: &PauliString) -> f64 {
        let mut acc = 0.0;
        for (k, a) in self.amps.iter().enumerate() {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            let (r, c) = p.act_on_basis(k);
            acc += (self.amps[r].conj() * c * a).re;
        }
        acc
    }

    pub fn expectation(&self, op: &PauliSum) -> f64 {
        op.terms().iter().map(|(c, p)| c * self.expectation_pauli(p)).sum()
    }

    /// `psi <- exp(i theta P) psi = cos(theta) psi + i sin(theta) P psi`.
    pub fn apply_pauli_rotation(&mut self, p: &PauliString, theta: f64) {
        let (s, c) = theta.sin_cos();
        let is = C64::new(0.0, s);
        let x = p.x_bits() as usize;
        if x == 0 {
            for (k, a) in self.amps.iter_mut().enumerate() {
                let (_, ph) = p.act_on_basis(k);
                *a *= c + is * ph;
            }
            return;
        }
        // pair up k and k ^ x; visit each pair once via its member with the
        // highest set bit of x cleared
        let hb = 1usize << (usize::BITS - 1 - x.leading_zeros());
        for k in 0..self.amps.len() {
            if k & hb != 0 {
                continue;
            }
            let j = k ^ x;
            let (_, ck) = p.act_on_basis(k); // P|k> = ck |j>
            let (_, cj) = p.act_on_basis(j); // P|j> = cj |k>
            let (ak, aj) = (self.amps[k], self.amps[j]);
            self.amps[k] = ak * c + is * cj * aj;
            self.amps[j] = aj * c + is * ck * ak;
        }
    }

    pub fn apply_single_qubit(&mut self, q: usize, u: &Matrix2<C64>) {
        let bit = 1usize << q;
        for k in 0..self.amps.len() {
            if k & bit != 0 {
                continue;
            }
            let (a0, a1) = (self.amps[k], self.amps[k | bit]);
            self.amps[k] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
            self.amps[k | bit] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
        }
    }

    /// Apply a 4x4 gate on qubits `(q0, q1)`; the gate's local basis index is
    /// `b0 + 2 b1` with `b0` the bit of `q0`.
    pub fn apply_two_qubit(&mut self, q0: usize, q1: usize, u: &Matrix4<C64>) {
        let (m0, m1) = (1usize << q0, 1usize << q1);
        for k in 0..self.amps.len() {
            if k & (m0 | m1) != 0 {
                continue;
            }
            let idx = [k, k | m0, k | m1, k | m0 | m1];
            let v = [self.amps[idx[0]], self.amps[idx[1]], self.amps[idx[2]], self.amps[idx[3]]];
            for r in 0..4 {
                self.amps[idx[r]] = u[(r, 0)] * v[0] + u[(r, 1)] * v[1] + u[(r, 2)] * v[2] + u[(r, 3)] * v[3];
            }
        }
    }

    pub fn to_density(&self) -> DMatrix<C64> {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        &v * v.adjoint()
    }

    pub fn fidelity(&self, other: &Self) -> f64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("state on zero qubits".into()));
    }
    if n > MAX_SIM_QUBITS {
        return Err(Error::TooManyQubits { n, max: MAX_SIM_QUBITS });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    /// Dense density matrix on `n` qubits.
    Density(DMatrix<C64>),
    /// `(1 - p) rho + p 1/2^n`.
    Depolarized { inner: Box<QuantumState>, p: f64 },
}

impl From<StateVector> for QuantumState {
    fn from(v: StateVector) -> Self {
        Self::Pure(v)
    }
}

impl QuantumState {
    /// Validate a density matrix: Hermitian, unit trace, PSD.
    pub fn density(rho: DMatrix<C64>) -> Result<Self> {
        let d = rho.nrows();
        if !d.is_power_of_two() || d < 2 {
            return Err(Error::DimensionMismatch(format!("density matrix of size {d} is not 2^n")));
        }
        let op = HermitianOp::dense(rho)?;
        let tr = op.trace();
        if (tr - 1.0).abs() > tol::LINALG {
            return Err(Error::InvalidArgument(format!("trace {tr} != 1")));
        }
        let HermitianOp::Dense(rho) = op else { unreachable!() };
        let eig = nalgebra::SymmetricEigen::new(rho.clone());
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-9 {
            return Err(Error::InvalidArgument(format!("density matrix not PSD (min eigenvalue {min:.3e})")));
        }
        Ok(Self::Density(rho))
    }

    pub fn n(&self) -> usize {
        match self {
            Self::Pure(v) => v.n(),
            Self::Density(m) => m.nrows().trailing_zeros() as usize,
            Self::Depolarized { inner, .. } => inner.n(),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n()
    }

    pub fn as_pure(&self) -> Option<&StateVector> {
        match self {
            Self::Pure(v) => Some(v),
            _ => None,
        }
    }

    /// `Tr[rho P]` for a Hermitian string `P`.
    pub fn expectation_pauli(&self, p: &PauliString) -> f64 {
        match self {
            Self::Pure(v) => v.expectation_pauli(p),
            Self::Density(m) => {
                let mut acc = 0.0;
                for k in 0..m.nrows() {
                    let (r, c) = p.act_on_basis(k);
                    // Tr[rho P] = sum_k <k| rho P |k> = sum_k c rho[k, r]
                    acc += (m[(k, r)] * c).re;
                }
                acc
            }
            Self::Depolarized { inner, p: prob } => {
                let id = if p.is_identity() { p.phase().re } else { 0.0 };
                (1.0 - prob) * inner.expectation_pauli(p) + prob * id
            }
        }
    }

    pub fn expectation(&self, op: &PauliSum) -> f64 {
        op.terms().iter().map(|(c, p)| c * self.expectation_pauli(p)).sum()
    }

    /// `Tr[rho O]` for either representation of `O`.
    pub fn expectation_op(&self, op: &HermitianOp) -> Result<f64> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!("operator dim {} vs state dim {}", op.dim(), self.dim())));
        }
        Ok(match op {
            HermitianOp::Pauli(s) => self.expectation(s),
            HermitianOp::Dense(m) => (self.to_density().component_mul(&m.transpose())).sum().re,
        })
    }

    pub fn to_density(&self) -> DMatrix<C64> {
        match self {
            Self::Pure(v) => v.to_density(),
            Self::Density(m) => m.clone(),
            Self::Depolarized { inner, p } => {
                let d = self.dim();
                inner.to_density() * C64::from(1.0 - p) + DMatrix::<C64>::identity(d, d) * C64::from(p / d as f64)
            }
        }
    }

    /// Standard purity `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        match self {
            Self::Pure(_) => 1.0,
            Self::Density(m) => m.iter().map(|c| c.norm_sqr()).sum(),
            Self::Depolarized { inner, p } => {
                let d = self.dim() as f64;
                (1.0 - p).powi(2) * inner.purity() + 2.0 * (1.0 - p) * p / d + p * p / d
            }
        }
    }

    pub fn apply_pauli_rotation(&mut self, p: &PauliString, theta: f64) {
        match self {
            Self::Pure(v) => v.apply_pauli_rotation(p, theta),
            Self::Density(m) => {
                let (s, c) = theta.sin_cos();
                let d = m.nrows();
                let pd = p.to_dense();
                let u = DMatrix::<C64>::identity(d, d) * C64::from(c) + pd * C64::new(0.0, s);
                *m = &u * &*m * u.adjoint();
            }
            Self::Depolarized { inner, .. } => inner.apply_pauli_rotation(p, theta),
        }
    }

    pub fn apply_single_qubit(&mut self, q: usize, u: &Matrix2<C64>) {
        match self {
            Self::Pure(v) => v.apply_single_qubit(q, u),
            Self::Density(m) => conjugate_dense(m, |col: &mut StateVector| col.apply_single_qubit(q, u)),
            Self::Depolarized { inner, .. } => inner.apply_single_qubit(q, u),
        }
    }

    pub fn apply_two_qubit(&mut self, q0: usize, q1: usize, u: &Matrix4<C64>) {
        match self {
            Self::Pure(v) => v.apply_two_qubit(q0, q1, u),
            Self::Density(m) => conjugate_dense(m, |col: &mut StateVector| col.apply_two_qubit(q0, q1, u)),
            Self::Depolarized { inner, .. } => inner.apply_two_qubit(q0, q1, u),
        }
    }
}

/// `rho <- U rho U^dagger` given the action of `U` on vectors.
fn conjugate_dense<F: Fn(&mut StateVector)>(m: &mut DMatrix<C64>, apply: F) {
    let d = m.nrows();
    let n = d.trailing_zeros() as usize;
    // U rho: act on columns
    let mut tmp = m.clone();
    for j in 0..d {
        let mut col = StateVector { n, amps: m.column(j).iter().copied().collect() };
        apply(&mut col);
        tmp.set_column(j, &nalgebra::DVector::from_vec(col.amps));
    }
    // (U (U rho)^dagger)^dagger = U rho U^dagger
    let mut t = tmp.adjoint();
    for j in 0..d {
        let mut col = StateVector { n, amps: t.column(j).iter().copied().collect() };
        apply(&mut col);
        t.set_column(j, &nalgebra::DVector::from_vec(col.amps));
    }
    *m = t.adjoint();
}

/// Global depolarizing channel `rho -> (1 - p) rho + p 1/2^n`.
pub fn depolarize(state: &QuantumState, p: f64) -> Result<QuantumState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("depolarizing probability {p} outside [0, 1]")));
    }
    Ok(match state {
        QuantumState::Depolarized { inner, p: q } => QuantumState::Depolarized {
            inner: inner.clone(),
            p: 1.0 - (1.0 - p) * (1.0 - q),
        },
        _ => QuantumState::Depolarized { inner: Box::new(state.clone()), p },
    })
}

/// Effect of a final global depolarizing channel on an expectation value.
pub fn depolarize_expectation(value: f64, p: f64, trace_o: f64, n: usize) -> f64 {
    (1.0 - p) * value + p * trace_o / pow2(n)
}
