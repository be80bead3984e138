//! Projections onto DLA components, g-purities, and the state-preparation
//! transforms (global depolarizing noise, unitary prep circuits).

use std::collections::HashMap;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

use crate::dla::{Component, ComponentKind, DlaBasis, DlaDecomposition};
use crate::error::{invalid, Error, Result};
use crate::pauli::{HermitianOp, PauliString, PauliSum};
use crate::state::{depolarize, QuantumState, StateVector};
use crate::C64;

/// Anything with a Hilbert-Schmidt overlap against Pauli strings.
pub trait Projectable {
    fn qubits(&self) -> Option<usize>;
    /// `Tr[P X]` for a Hermitian string `P`.
    fn pauli_overlap(&self, p: &PauliString) -> f64;
    /// `Tr[X^2]`.
    fn hs_norm_sq(&self) -> f64;
    /// `||X - Y||_2^2` for the projection `Y` of `X`.
    fn distance_sq(&self, projection: &PauliSum) -> f64 {
        (self.hs_norm_sq() - projection.hs_norm_sq()).max(0.0)
    }
}

/// Largest register for which distances are formed densely.
const DENSE_DISTANCE_QUBITS: usize = 10;

fn dense_distance_sq(m: &DMatrix<C64>, projection: &PauliSum) -> f64 {
    (m - projection.to_dense()).norm_squared()
}

impl Projectable for PauliSum {
    fn qubits(&self) -> Option<usize> {
        Some(self.n())
    }

    fn pauli_overlap(&self, p: &PauliString) -> f64 {
        let sign = if p.phase_exponent() == 2 { -1.0 } else { 1.0 };
        sign * self.coefficient(&p.phaseless()) * self.dim() as f64
    }

    fn hs_norm_sq(&self) -> f64 {
        PauliSum::hs_norm_sq(self)
    }

    fn distance_sq(&self, projection: &PauliSum) -> f64 {
        self.sub(projection).map(|r| r.hs_norm_sq()).unwrap_or(f64::INFINITY)
    }
}

impl Projectable for HermitianOp {
    fn qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    fn pauli_overlap(&self, p: &PauliString) -> f64 {
        match self {
            HermitianOp::Pauli(s) => s.pauli_overlap(p),
            HermitianOp::Dense(m) => {
                let mut acc = 0.0;
                for k in 0..m.nrows() {
                    let (r, c) = p.act_on_basis(k);
                    acc += (m[(k, r)] * c).re;
                }
                acc
            }
        }
    }

    fn hs_norm_sq(&self) -> f64 {
        HermitianOp::hs_norm_sq(self)
    }

    fn distance_sq(&self, projection: &PauliSum) -> f64 {
        match self {
            HermitianOp::Pauli(s) => s.distance_sq(projection),
            HermitianOp::Dense(m) => dense_distance_sq(m, projection),
        }
    }
}

impl Projectable for QuantumState {
    fn qubits(&self) -> Option<usize> {
        Some(self.n())
    }

    fn pauli_overlap(&self, p: &PauliString) -> f64 {
        self.expectation_pauli(p)
    }

    fn hs_norm_sq(&self) -> f64 {
        self.purity()
    }

    fn distance_sq(&self, projection: &PauliSum) -> f64 {
        if self.n() <= DENSE_DISTANCE_QUBITS {
            dense_distance_sq(&self.to_density(), projection)
        } else {
            (self.purity() - projection.hs_norm_sq()).max(0.0)
        }
    }
}

impl Projectable for StateVector {
    fn qubits(&self) -> Option<usize> {
        Some(self.n())
    }

    fn pauli_overlap(&self, p: &PauliString) -> f64 {
        self.expectation_pauli(p)
    }

    fn hs_norm_sq(&self) -> f64 {
        1.0
    }

    fn distance_sq(&self, projection: &PauliSum) -> f64 {
        if self.n() <= DENSE_DISTANCE_QUBITS {
            dense_distance_sq(&self.to_density(), projection)
        } else {
            (1.0 - projection.hs_norm_sq()).max(0.0)
        }
    }
}

/// Memoizes `Tr[P X]` across the many basis elements that share strings.
struct OverlapCache<'a, T: Projectable + ?Sized> {
    target: &'a T,
    seen: HashMap<PauliString, f64>,
}

impl<'a, T: Projectable + ?Sized> OverlapCache<'a, T> {
    fn new(target: &'a T) -> Self {
        Self { target, seen: HashMap::new() }
    }

    fn inner(&mut self, b: &PauliSum) -> f64 {
        let mut acc = 0.0;
        for &(c, p) in b.terms() {
            let v = *self.seen.entry(p).or_insert_with(|| self.target.pauli_overlap(&p));
            acc += c * v;
        }
        acc
    }
}

fn check_qubits<T: Projectable + ?Sized>(x: &T, n: usize) -> Result<()> {
    match x.qubits() {
        Some(m) if m == n => Ok(()),
        Some(m) => Err(Error::QubitMismatch { left: n, right: m }),
        None => Err(Error::DimensionMismatch("operand dimension is not a power of two".into())),
    }
}

fn component_qubits(c: &Component) -> Option<usize> {
    c.elements().first().map(|e| e.n())
}

/// `<B_j, X>` for every element of the component.
pub fn overlaps<T: Projectable + ?Sized>(x: &T, component: &Component) -> Result<Vec<f64>> {
    let Some(n) = component_qubits(component) else { return Ok(Vec::new()) };
    check_qubits(x, n)?;
    let mut cache = OverlapCache::new(x);
    Ok(component.elements().iter().map(|b| cache.inner(b)).collect())
}

/// Orthogonal projection `H_g = sum_j <B_j, H> B_j`.
pub fn project<T: Projectable + ?Sized>(h: &T, component: &Component) -> Result<HermitianOp> {
    let n = match component_qubits(component) {
        Some(n) => n,
        None => h.qubits().ok_or_else(|| Error::DimensionMismatch("operand dimension is not a power of two".into()))?,
    };
    let ov = overlaps(h, component)?;
    let mut terms = Vec::new();
    for (b, c) in component.elements().iter().zip(ov) {
        terms.extend(b.terms().iter().map(|&(u, p)| (c * u, p)));
    }
    Ok(HermitianOp::Pauli(PauliSum::canonical(n, terms).pruned(1e-15)))
}

/// `P_g(H) = sum_j <B_j, H>^2`.
pub fn g_purity<T: Projectable + ?Sized>(h: &T, component: &Component) -> Result<f64> {
    Ok(overlaps(h, component)?.iter().map(|v| v * v).sum())
}

/// Whether `||H - H_g||_2 < 1e-9 ||H||_2` for the full algebra.
pub fn membership<T: Projectable + ?Sized>(h: &T, basis: &DlaBasis) -> Result<bool> {
    check_qubits(h, basis.n())?;
    let norm = h.hs_norm_sq();
    if norm == 0.0 {
        return Ok(true);
    }
    let HermitianOp::Pauli(proj) = project(h, &basis.as_component())? else { unreachable!("projections are Pauli sums") };
    Ok(h.distance_sq(&proj).sqrt() < 1e-9 * norm.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentPurity {
    pub component: ComponentKind,
    pub dim: usize,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityReport {
    pub per_component: Vec<ComponentPurity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projections: Option<Vec<PauliSum>>,
}

impl PurityReport {
    pub fn total(&self) -> f64 {
        self.per_component.iter().map(|c| c.purity).sum()
    }

    pub fn ideal(&self, k: usize) -> Option<f64> {
        self.per_component.iter().find(|c| c.component == ComponentKind::Ideal(k)).map(|c| c.purity)
    }

    pub fn center(&self) -> f64 {
        self.per_component
            .iter()
            .find(|c| c.component == ComponentKind::Center)
            .map(|c| c.purity)
            .unwrap_or(0.0)
    }
}

/// Purity in every ideal and the center, optionally keeping the projections.
pub fn purity_report<T: Projectable + ?Sized>(
    h: &T,
    decomposition: &DlaDecomposition,
    keep_projections: bool,
) -> Result<PurityReport> {
    check_qubits(h, decomposition.full().n())?;
    let mut cache = OverlapCache::new(h);
    let mut per_component = Vec::new();
    let mut projections = keep_projections.then(Vec::new);
    let comps = decomposition.ideals().iter().chain(std::iter::once(decomposition.center()));
    for c in comps {
        let ov: Vec<f64> = c.elements().iter().map(|b| cache.inner(b)).collect();
        per_component.push(ComponentPurity {
            component: c.kind(),
            dim: c.dim(),
            purity: ov.iter().map(|v| v * v).sum(),
        });
        if let Some(list) = projections.as_mut() {
            let mut terms = Vec::new();
            for (b, x) in c.elements().iter().zip(&ov) {
                terms.extend(b.terms().iter().map(|&(u, p)| (x * u, p)));
            }
            list.push(PauliSum::canonical(decomposition.full().n(), terms).pruned(1e-15));
        }
    }
    Ok(PurityReport { per_component, projections })
}

/// `rho -> (1 - p) rho + p 1/2^n`.
pub fn apply_global_depolarizing(state: &QuantumState, p: f64) -> Result<QuantumState> {
    depolarize(state, p)
}

/// Complex entries as `[re, im]` pairs, row-major.
pub type MatrixEntries = Vec<Vec<[f64; 2]>>;

/// A gate of a state-preparation circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrepGate {
    /// `exp(i theta P)`.
    Rotation { pauli: PauliString, theta: f64 },
    Single { qubit: usize, matrix: MatrixEntries },
    Two { qubits: [usize; 2], matrix: MatrixEntries },
}

impl PrepGate {
    pub fn single(qubit: usize, u: &Matrix2<C64>) -> Self {
        Self::Single { qubit, matrix: entries(2, |r, c| u[(r, c)]) }
    }

    pub fn two(q0: usize, q1: usize, u: &Matrix4<C64>) -> Self {
        Self::Two { qubits: [q0, q1], matrix: entries(4, |r, c| u[(r, c)]) }
    }
}

fn entries(d: usize, f: impl Fn(usize, usize) -> C64) -> MatrixEntries {
    (0..d).map(|r| (0..d).map(|c| f(r, c)).map(|z| [z.re, z.im]).collect()).collect()
}

fn read_matrix<const D: usize>(m: &MatrixEntries) -> Result<[[C64; D]; D]> {
    if m.len() != D || m.iter().any(|row| row.len() != D) {
        return Err(invalid(format!("gate matrix must be {D}x{D}")));
    }
    let mut out = [[C64::new(0.0, 0.0); D]; D];
    for (r, row) in m.iter().enumerate() {
        for (c, z) in row.iter().enumerate() {
            out[r][c] = C64::new(z[0], z[1]);
        }
    }
    // U U^dagger = 1
    let mut dev: f64 = 0.0;
    for i in 0..D {
        for j in 0..D {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..D {
                s += out[i][k] * out[j][k].conj();
            }
            let want = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((s - want).norm());
        }
    }
    if dev > 1e-10 {
        return Err(invalid(format!("gate matrix is not unitary (deviation {dev:.3e})")));
    }
    Ok(out)
}

/// `V rho V^dagger` for a gate list `V`.
pub fn apply_state_prep_unitary(state: &QuantumState, gates: &[PrepGate]) -> Result<QuantumState> {
    let n = state.n();
    let mut out = state.clone();
    for g in gates {
        match g {
            PrepGate::Rotation { pauli, theta } => {
                if pauli.n() != n {
                    return Err(Error::QubitMismatch { left: n, right: pauli.n() });
                }
                if !pauli.is_hermitian() {
                    return Err(Error::NotHermitian(format!("rotation generator {pauli}")));
                }
                out.apply_pauli_rotation(pauli, *theta);
            }
            PrepGate::Single { qubit, matrix } => {
                if *qubit >= n {
                    return Err(invalid(format!("qubit {qubit} out of range for n = {n}")));
                }
                let m = read_matrix::<2>(matrix)?;
                out.apply_single_qubit(*qubit, &Matrix2::from_fn(|r, c| m[r][c]));
            }
            PrepGate::Two { qubits: [a, b], matrix } => {
                if *a >= n || *b >= n || a == b {
                    return Err(invalid(format!("invalid qubit pair ({a}, {b}) for n = {n}")));
                }
                let m = read_matrix::<4>(matrix)?;
                out.apply_two_qubit(*a, *b, &Matrix4::from_fn(|r, c| m[r][c]));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dla::{decompose, lie_closure};
    use crate::setups::tfim_generators;

    fn ps(list: &[&str]) -> Vec<PauliString> {
        list.iter().map(|s| s.parse().unwrap()).collect()
    }

    fn sum(n: usize, terms: &[(f64, &str)]) -> PauliSum {
        PauliSum::from_terms(n, terms.iter().map(|&(c, s)| (c, s.parse().unwrap()))).unwrap()
    }

    #[test]
    fn single_qubit_projection() {
        let b = lie_closure(&ps(&["X", "Y"]), 4).unwrap();
        let rho = QuantumState::from(StateVector::zero(1));
        let pr = project(&rho, &b.as_component()).unwrap();
        let want = sum(1, &[(0.5, "Z")]);
        assert!((pr.as_pauli().unwrap().sub(&want).unwrap().hs_norm_sq()) < 1e-24);
        assert!((g_purity(&rho, &b.as_component()).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn dense_projection_agrees() {
        let b = lie_closure(&ps(&["XX", "ZI", "IZ"]), 16).unwrap();
        let h = sum(2, &[(0.3, "XY"), (1.2, "ZI"), (-0.4, "YY"), (0.9, "XZ")]);
        let dense = HermitianOp::dense(h.to_dense()).unwrap();
        let a = g_purity(&h, &b.as_component()).unwrap();
        let d = g_purity(&dense, &b.as_component()).unwrap();
        assert!((a - d).abs() < 1e-12);
        // Pythagoras
        let pr = project(&h, &b.as_component()).unwrap();
        let resid = h.sub(pr.as_pauli().unwrap()).unwrap();
        assert!((h.hs_norm_sq() - a - resid.hs_norm_sq()).abs() < 1e-10);
    }

    #[test]
    fn global_observable_is_invisible_to_local_algebra() {
        let b = lie_closure(&ps(&["XII", "YII", "IXI", "IYI", "IIX", "IIY"]), 64).unwrap();
        let o = sum(3, &[(1.0, "XXX")]);
        assert_eq!(g_purity(&o, &b.as_component()).unwrap(), 0.0);
        assert!(!membership(&o, &b).unwrap());
        let x1 = sum(3, &[(1.0, "XII")]);
        let dec = decompose(&b).unwrap();
        let rep = purity_report(&x1, &dec, false).unwrap();
        let ps: Vec<f64> = rep.per_component.iter().map(|c| c.purity).collect();
        assert_eq!(ps.iter().filter(|&&v| (v - 8.0).abs() < 1e-12).count(), 1);
        assert!((rep.total() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn tfim_highest_weight_purity() {
        for n in 3..=6 {
            let b = lie_closure(&tfim_generators(n), 1 << 14).unwrap();
            let rho = StateVector::zero(n);
            let p = g_purity(&rho, &b.as_component()).unwrap();
            assert!((p - n as f64 / (1 << n) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn depolarizing_scales_traceless_purity() {
        let b = lie_closure(&tfim_generators(3), 64).unwrap();
        let rho = QuantumState::from(StateVector::zero(3));
        let base = g_purity(&rho, &b.as_component()).unwrap();
        for p in [0.0, 0.5, 1.0] {
            let noisy = apply_global_depolarizing(&rho, p).unwrap();
            let got = g_purity(&noisy, &b.as_component()).unwrap();
            assert!((got - (1.0 - p).powi(2) * base).abs() < 1e-12);
        }
        assert!(apply_global_depolarizing(&rho, 1.5).is_err());
    }

    #[test]
    fn prep_unitary_checks() {
        let rho = QuantumState::from(StateVector::zero(2));
        assert_eq!(apply_state_prep_unitary(&rho, &[]).unwrap(), rho);
        let z = PrepGate::Rotation { pauli: "ZI".parse().unwrap(), theta: 0.7 };
        let b = lie_closure(&tfim_generators(2), 16).unwrap();
        let after = apply_state_prep_unitary(&rho, &[z]).unwrap();
        let (p0, p1) = (g_purity(&rho, &b.as_component()).unwrap(), g_purity(&after, &b.as_component()).unwrap());
        assert!((p0 - p1).abs() < 1e-12);
        let bad = PrepGate::Single { qubit: 0, matrix: vec![vec![[1.0, 0.0], [1.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]] };
        assert!(apply_state_prep_unitary(&rho, &[bad]).is_err());
    }

    #[test]
    fn prep_gate_serde() {
        let g = PrepGate::Rotation { pauli: "XY".parse().unwrap(), theta: 0.25 };
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<PrepGate>(&text).unwrap(), g);
    }
}
