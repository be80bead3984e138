//! Dynamical Lie algebras: Lie closure of Pauli generators, center,
//! decomposition into simple ideals, and Cartan subalgebras.
//!
//! Basis elements are stored internally in *normalized Pauli coordinates*:
//! an element with coordinates `u` is the operator `sum_P u_P P / sqrt(2^n)`,
//! so the Hilbert-Schmidt inner product is the Euclidean dot product of
//! coordinate vectors. Everything below that needs matrices (adjoint maps,
//! sub-bases) works in the coordinates of the orthonormal DLA basis.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{canonical_span, complement, orthonormalize_columns, psd_split, sym_eigen_sorted};
use crate::pauli::{pow2, PauliString, PauliSum};
use crate::tol;

/// Residual below which a new commutator counts as linearly dependent.
pub const INDEPENDENCE_TOL: f64 = 1e-10;
/// Relative gap separating eigenvalue clusters when splitting ideals.
pub const CLUSTER_GAP: f64 = 1e-6;
/// Largest semisimple dimension for which ideals are split by solving for
/// the full commutant of the adjoint representation.
pub const COMMUTANT_MAX_DIM: usize = 28;

const DECOMPOSE_SEED: u64 = 0x1d1a_5eed;

/// `4^n`, saturating.
pub fn default_dim_cap(n: usize) -> usize {
    if n >= 32 {
        usize::MAX
    } else {
        1usize << (2 * n)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ClosureOptions {
    pub dim_cap: usize,
    pub exec: Execution,
}

/// Orthonormal basis of `i g` under the Hilbert-Schmidt inner product.
#[derive(Debug, Clone)]
pub struct DlaBasis {
    n: usize,
    generators: Vec<PauliString>,
    generator_indices: Vec<usize>,
    elements: Vec<PauliSum>,
    units: Vec<PauliSum>,
    index: HashMap<PauliString, Vec<(usize, f64)>>,
    truncated: bool,
    dim_cap: usize,
}

/// Lie closure of `generators` with the default execution policy.
pub fn lie_closure(generators: &[PauliString], dim_cap: usize) -> Result<DlaBasis> {
    lie_closure_with(generators, ClosureOptions { dim_cap, exec: Execution::default() })
}

/// Lie closure of `generators` together with coherent-error generators.
pub fn augment_with_coherent_errors(
    generators: &[PauliString],
    error_generators: &[PauliString],
    dim_cap: usize,
) -> Result<DlaBasis> {
    let mut all = generators.to_vec();
    all.extend_from_slice(error_generators);
    lie_closure(&all, dim_cap)
}

/// Breadth-first nested commutators; every new bracket is Gram-Schmidt
/// reduced against the current basis and kept if its residual exceeds
/// [`INDEPENDENCE_TOL`]. Hitting `dim_cap` stops the search and marks the
/// result truncated.
pub fn lie_closure_with(generators: &[PauliString], opts: ClosureOptions) -> Result<DlaBasis> {
    let first = generators.first().ok_or_else(|| Error::InvalidArgument("empty generator list".into()))?;
    let n = first.n();
    let mut gens: Vec<PauliString> = Vec::new();
    for g in generators {
        if g.n() != n {
            return Err(Error::QubitMismatch { left: n, right: g.n() });
        }
        if !g.is_hermitian() {
            return Err(Error::NotHermitian(format!("generator {g} has an imaginary phase")));
        }
        let key = g.phaseless();
        if !gens.contains(&key) {
            gens.push(key);
        }
    }
    if opts.dim_cap < gens.len() {
        return Err(Error::InvalidArgument(format!(
            "dim_cap {} is smaller than the {} distinct generators",
            opts.dim_cap,
            gens.len()
        )));
    }

    let mut basis = DlaBasis {
        n,
        generators: gens.clone(),
        generator_indices: Vec::new(),
        elements: Vec::new(),
        units: Vec::new(),
        index: HashMap::new(),
        truncated: false,
        dim_cap: opts.dim_cap,
    };
    for g in &gens {
        let u = PauliSum::from_pauli(*g)?;
        if let Some(r) = basis.reduce(u) {
            basis.generator_indices.push(basis.units.len());
            basis.push_unit(r);
        }
    }

    let mut i = 0;
    'outer: while i < basis.units.len() {
        let brackets = {
            let units = &basis.units;
            let ui = &units[i];
            opts.exec.map(i, |j| ui.lie_bracket(&units[j]).expect("uniform qubit count"))
        };
        for b in brackets {
            if b.is_empty() {
                continue;
            }
            if let Some(r) = basis.reduce(b) {
                if basis.units.len() >= opts.dim_cap {
                    basis.truncated = true;
                    break 'outer;
                }
                basis.push_unit(r);
            }
        }
        i += 1;
    }
    Ok(basis)
}

impl DlaBasis {
    fn push_unit(&mut self, u: PauliSum) {
        let j = self.units.len();
        for &(c, p) in u.terms() {
            self.index.entry(p).or_default().push((j, c));
        }
        self.elements.push(u.scaled(1.0 / pow2(self.n).sqrt()));
        self.units.push(u);
    }

    /// Normalized-coordinate dot products of `v` with every basis unit that
    /// shares a Pauli string with it.
    fn unit_overlaps(&self, v: &PauliSum) -> HashMap<usize, f64> {
        let mut acc: HashMap<usize, f64> = HashMap::new();
        for &(c, p) in v.terms() {
            if let Some(list) = self.index.get(&p) {
                for &(j, u) in list {
                    *acc.entry(j).or_insert(0.0) += c * u;
                }
            }
        }
        acc
    }

    /// Project out the current span twice; return the normalized residual if
    /// it is independent.
    fn reduce(&self, v: PauliSum) -> Option<PauliSum> {
        let norm0 = unit_norm(&v);
        if norm0 == 0.0 {
            return None;
        }
        let mut v = v;
        for _ in 0..2 {
            let overlaps = self.unit_overlaps(&v);
            if overlaps.is_empty() {
                break;
            }
            let mut overlaps: Vec<_> = overlaps.into_iter().collect();
            overlaps.sort_unstable_by_key(|&(j, _)| j);
            let mut terms: Vec<(f64, PauliString)> = v.terms().to_vec();
            for (j, c) in overlaps {
                terms.extend(self.units[j].terms().iter().map(|&(u, p)| (-c * u, p)));
            }
            v = PauliSum::canonical(self.n, terms).pruned(1e-15 * norm0);
        }
        let r = unit_norm(&v);
        if r > INDEPENDENCE_TOL * norm0 {
            Some(v.scaled(1.0 / r))
        } else {
            None
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.units.len()
    }

    /// HS-orthonormal Hermitian basis elements `B_j`.
    pub fn elements(&self) -> &[PauliSum] {
        &self.elements
    }

    /// Distinct (phaseless) generators in input order.
    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn generator_indices(&self) -> &[usize] {
        &self.generator_indices
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    /// `dim = 4^n - 1`: the algebra is all of `su(2^n)`.
    pub fn is_full_su(&self) -> bool {
        self.n < 32 && self.dim() == default_dim_cap(self.n) - 1 && !self.index.contains_key(&PauliString::identity(self.n))
    }

    /// `<B_j, op>` for every basis element.
    pub fn coords_of(&self, op: &PauliSum) -> DVector<f64> {
        let scale = pow2(self.n).sqrt();
        let mut out = DVector::zeros(self.dim());
        for &(c, p) in op.terms() {
            if let Some(list) = self.index.get(&p) {
                for &(j, u) in list {
                    out[j] += c * u * scale;
                }
            }
        }
        out
    }

    /// `sum_j v_j B_j`.
    pub fn element_from_coords(&self, v: &DVector<f64>) -> PauliSum {
        self.raw_element(v).pruned(1e-14)
    }

    fn raw_element(&self, v: &DVector<f64>) -> PauliSum {
        let scale = 1.0 / pow2(self.n).sqrt();
        let mut terms = Vec::new();
        for (j, &c) in v.iter().enumerate() {
            if c != 0.0 {
                terms.extend(self.units[j].terms().iter().map(|&(u, p)| (c * u * scale, p)));
            }
        }
        PauliSum::canonical(self.n, terms)
    }

    /// Squared HS distance between `op` and its projection onto the span.
    pub fn projection_residual_sq(&self, op: &PauliSum) -> f64 {
        let proj = self.raw_element(&self.coords_of(op));
        op.sub(&proj).map(|r| r.hs_norm_sq()).unwrap_or(f64::INFINITY)
    }

    /// HS distance from `op` to the subspace with orthonormal coordinate
    /// columns `q`.
    fn subspace_residual(&self, op: &PauliSum, q: &DMatrix<f64>) -> f64 {
        let c = self.coords_of(op);
        let inside = q * (q.transpose() * c);
        let proj = self.raw_element(&inside);
        op.sub(&proj).map(|r| r.hs_norm_sq().sqrt()).unwrap_or(f64::INFINITY)
    }

    /// Whether `op` lies in the real span of the basis.
    pub fn contains(&self, op: &PauliSum) -> bool {
        let norm = op.hs_norm_sq();
        norm == 0.0 || self.projection_residual_sq(op).sqrt() < 1e-9 * norm.sqrt()
    }

    /// Sparse columns of the scaled adjoint map `x -> -i[x, B_j] / 2` in
    /// basis coordinates (`x` given in normalized coordinates). For Pauli
    /// bases the entries are `0` or `+-1`.
    fn ad_columns(&self, x: &PauliSum) -> Vec<Vec<(usize, f64)>> {
        self.units
            .iter()
            .map(|u| {
                let b = x.lie_bracket(u).expect("uniform qubit count").scaled(0.5);
                let mut col: Vec<(usize, f64)> = self.unit_overlaps(&b).into_iter().filter(|(_, v)| *v != 0.0).collect();
                col.sort_unstable_by_key(|&(j, _)| j);
                col
            })
            .collect()
    }

    fn ad_dense(&self, x: &PauliSum) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (j, col) in self.ad_columns(x).into_iter().enumerate() {
            for (k, v) in col {
                m[(k, j)] = v;
            }
        }
        m
    }

    /// Matrix of `ad_op: B -> -i[op, B]` in the orthonormal basis.
    pub fn ad_matrix(&self, op: &PauliSum) -> DMatrix<f64> {
        // op = sum c_P P = sqrt(d) * (normalized coords); ad_columns carries 1/2
        // relative to -i[.,.] on normalized coordinates, which itself is
        // 1/sqrt(d) times the bracket of coordinate sums.
        let unit = op.scaled(pow2(self.n).sqrt());
        self.ad_dense(&unit) * (2.0 / pow2(self.n).sqrt())
    }

    fn unit_of_coords(&self, v: &DVector<f64>) -> PauliSum {
        self.element_from_coords(v).scaled(pow2(self.n).sqrt())
    }

    fn generator_units(&self) -> Vec<PauliSum> {
        self.generator_indices.iter().map(|&j| self.units[j].clone()).collect()
    }

    /// `sum_x ad_x^T ad_x` over `xs`, accumulated from sparse rows.
    fn ad_gram(&self, xs: &[PauliSum]) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for x in xs {
            let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
            for (j, col) in self.ad_columns(x).into_iter().enumerate() {
                for (k, v) in col {
                    rows[k].push((j, v));
                }
            }
            for row in rows {
                for &(j, a) in &row {
                    for &(l, b) in &row {
                        m[(j, l)] += a * b;
                    }
                }
            }
        }
        m
    }

    pub fn as_component(&self) -> Component {
        Component {
            kind: ComponentKind::Full,
            coords: DMatrix::identity(self.dim(), self.dim()),
            elements: self.elements.clone(),
        }
    }

    fn component(&self, kind: ComponentKind, coords: DMatrix<f64>) -> Component {
        let elements = (0..coords.ncols())
            .map(|c| self.element_from_coords(&coords.column(c).clone_owned()))
            .collect();
        Component { kind, coords, elements }
    }
}

fn unit_norm(v: &PauliSum) -> f64 {
    v.terms().iter().map(|(c, _)| c * c).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Full,
    Center,
    Ideal(usize),
}

/// A sub-basis of a [`DlaBasis`]: orthonormal columns in basis coordinates
/// together with the corresponding operators.
#[derive(Debug, Clone)]
pub struct Component {
    kind: ComponentKind,
    coords: DMatrix<f64>,
    elements: Vec<PauliSum>,
}

impl Component {
    pub fn kind(&self) -> ComponentKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[PauliSum] {
        &self.elements
    }

    /// `D x dim` matrix of orthonormal columns in the parent basis coordinates.
    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    /// A component built directly from HS-orthonormal elements, for callers
    /// that have a basis without a surrounding [`DlaBasis`].
    pub fn from_elements(elements: Vec<PauliSum>) -> Self {
        let d = elements.len();
        Component { kind: ComponentKind::Full, coords: DMatrix::identity(d, d), elements }
    }
}

/// Reductive decomposition `g = g_1 + ... + g_{k-1} + center`.
#[derive(Debug, Clone)]
pub struct DlaDecomposition {
    full: DlaBasis,
    center: Component,
    ideals: Vec<Component>,
}

/// The center of `g`: elements commuting with every generator.
pub fn center_of(basis: &DlaBasis) -> Result<Component> {
    Ok(center_and_rest(basis)?.0)
}

fn center_and_rest(basis: &DlaBasis) -> Result<(Component, DMatrix<f64>)> {
    if basis.is_truncated() {
        return Err(Error::Truncated { cap: basis.dim_cap() });
    }
    let d = basis.dim();
    if basis.is_full_su() {
        return Ok((basis.component(ComponentKind::Center, DMatrix::zeros(d, 0)), DMatrix::identity(d, d)));
    }
    let gram = basis.ad_gram(&basis.generator_units());
    let (null, range) = psd_split(gram, 1e-9);
    let center = canonical_span(&null, 1e-9);
    Ok((basis.component(ComponentKind::Center, center), range))
}

/// Split `g` into its center and simple ideals.
///
/// The center is the common null space of the generators' adjoint maps.
/// The semisimple remainder is split by the commutant of its adjoint
/// representation (spanned by the ideal projectors) when it is small, and
/// otherwise by recursively generating ideals from root vectors of a random
/// regular element. Each ideal is checked for invariance under every
/// generator, and small ideals are checked to have a one-dimensional
/// commutant.
pub fn decompose(basis: &DlaBasis) -> Result<DlaDecomposition> {
    let (center, semisimple) = center_and_rest(basis)?;
    let mut rng = ChaCha8Rng::seed_from_u64(DECOMPOSE_SEED);
    let gen_ads: Vec<DMatrix<f64>> = basis.generator_units().iter().map(|g| basis.ad_dense(g)).collect();

    let mut pieces: Vec<DMatrix<f64>> = if semisimple.ncols() == 0 {
        Vec::new()
    } else if basis.is_full_su() {
        vec![semisimple]
    } else if semisimple.ncols() <= COMMUTANT_MAX_DIM {
        split_by_commutant(&semisimple, &gen_ads, &mut rng)?
    } else {
        split_by_roots(basis, &semisimple, &gen_ads, &mut rng)?
    };

    for p in pieces.iter_mut() {
        *p = canonical_span(p, 1e-9);
        verify_ideal(p, &gen_ads)?;
        if p.ncols() <= COMMUTANT_MAX_DIM && p.ncols() < basis.dim() {
            let local: Vec<_> = gen_ads.iter().map(|a| p.transpose() * a * &*p).collect();
            let c = commutant_basis(&local).ncols();
            if c != 1 {
                return Err(Error::Numerical(format!("ideal of dim {} has a {c}-dimensional commutant", p.ncols())));
            }
        }
    }
    pieces.sort_by(|a, b| a.ncols().cmp(&b.ncols()).then_with(|| first_support(a).cmp(&first_support(b))));
    let ideals = pieces
        .into_iter()
        .enumerate()
        .map(|(i, q)| basis.component(ComponentKind::Ideal(i), q))
        .collect();
    Ok(DlaDecomposition { full: basis.clone(), center, ideals })
}

fn first_support(q: &DMatrix<f64>) -> usize {
    (0..q.nrows()).find(|&r| q.row(r).iter().any(|x| x.abs() > 1e-9)).unwrap_or(usize::MAX)
}

fn verify_ideal(q: &DMatrix<f64>, gen_ads: &[DMatrix<f64>]) -> Result<()> {
    for a in gen_ads {
        let aq = a * q;
        let resid = &aq - q * (q.transpose() * &aq);
        let r = resid.amax();
        if r > 1e-8 {
            return Err(Error::Numerical(format!("component of dim {} not ad-invariant (residual {r:.3e})", q.ncols())));
        }
    }
    Ok(())
}

/// Orthonormal basis (as `s^2`-vectors) of `{T : T A = A T for all A}`.
fn commutant_basis(ads: &[DMatrix<f64>]) -> DMatrix<f64> {
    let s = ads.first().map(|a| a.nrows()).unwrap_or(0);
    let id = DMatrix::<f64>::identity(s, s);
    let mut g = DMatrix::<f64>::zeros(s * s, s * s);
    for a in ads {
        let at = a.transpose();
        g += (a * &at).kronecker(&id);
        g -= a.kronecker(a);
        g -= at.kronecker(&at);
        g += id.kronecker(&(&at * a));
    }
    psd_split(g, 1e-9).0
}

fn split_by_commutant(s: &DMatrix<f64>, gen_ads: &[DMatrix<f64>], rng: &mut ChaCha8Rng) -> Result<Vec<DMatrix<f64>>> {
    let dim = s.ncols();
    let local: Vec<_> = gen_ads.iter().map(|a| s.transpose() * a * s).collect();
    let comm = commutant_basis(&local);
    let k = comm.ncols();
    if k <= 1 {
        return Ok(vec![s.clone()]);
    }
    let r = DVector::from_fn(k, |_, _| StandardNormal.sample(rng));
    let t = DMatrix::from_column_slice(dim, dim, (&comm * r).as_slice());
    let t = (&t + t.transpose()) * 0.5;
    let (vals, vecs) = sym_eigen_sorted(t);
    let clusters = cluster(&vals);
    if clusters.len() != k {
        let gaps = vals.windows(2).map(|w| w[1] - w[0]).collect();
        return Err(Error::Clustering { gaps });
    }
    Ok(clusters
        .into_iter()
        .map(|(a, b)| s * vecs.columns(a, b - a))
        .collect())
}

/// Index ranges of eigenvalue clusters separated by a relative gap.
fn cluster(vals: &[f64]) -> Vec<(usize, usize)> {
    if vals.is_empty() {
        return Vec::new();
    }
    let spread = (vals[vals.len() - 1] - vals[0]).abs().max(vals.iter().map(|v| v.abs()).fold(0.0, f64::max)).max(1e-300);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..vals.len() {
        if vals[i] - vals[i - 1] > CLUSTER_GAP * spread {
            out.push((start, i));
            start = i;
        }
    }
    out.push((start, vals.len()));
    out
}

fn split_by_roots(
    basis: &DlaBasis,
    s: &DMatrix<f64>,
    gen_ads: &[DMatrix<f64>],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<DMatrix<f64>>> {
    let mut done = Vec::new();
    let mut todo = vec![s.clone()];
    while let Some(w) = todo.pop() {
        let dim = w.ncols();
        let local: Vec<_> = gen_ads.iter().map(|a| w.transpose() * a * &w).collect();
        let mut whole = true;
        // two independent regular elements must both fail to split a simple ideal
        for _ in 0..2 {
            let r = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
            let h = basis.unit_of_coords(&(&w * r));
            let ad_h = w.transpose() * basis.ad_dense(&h) * &w;
            let e = -(&ad_h * &ad_h);
            let e = (&e + e.transpose()) * 0.5;
            let (vals, vecs) = sym_eigen_sorted(e);
            let Some(v) = isolated_root_vector(&vals, &vecs) else { break };
            let ideal = krylov_closure(&v, &local);
            if ideal.ncols() < dim {
                let rest = complement(&ideal);
                todo.push(&w * ideal);
                todo.push(&w * rest);
                whole = false;
                break;
            }
        }
        if whole {
            done.push(w);
        }
    }
    Ok(done)
}

/// Eigenvector of the most isolated nonzero eigenvalue cluster.
fn isolated_root_vector(vals: &[f64], vecs: &DMatrix<f64>) -> Option<DVector<f64>> {
    let top = vals.last().copied().unwrap_or(0.0);
    if top <= 1e-9 {
        return None;
    }
    let clusters = cluster(vals);
    let mut best: Option<(f64, usize)> = None;
    for (ci, &(a, b)) in clusters.iter().enumerate() {
        let center = vals[a];
        if center <= 1e-8 * top {
            continue;
        }
        let left = if ci > 0 { center - vals[clusters[ci - 1].1 - 1] } else { f64::INFINITY };
        let right = if ci + 1 < clusters.len() { vals[clusters[ci + 1].0] - vals[b - 1] } else { f64::INFINITY };
        let iso = left.min(right);
        if best.map(|(bi, _)| iso > bi).unwrap_or(true) {
            best = Some((iso, a));
        }
    }
    best.map(|(_, a)| vecs.column(a).clone_owned())
}

/// Smallest subspace containing `v` and invariant under every matrix in `ads`.
fn krylov_closure(v: &DVector<f64>, ads: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut q: Vec<DVector<f64>> = vec![v.normalize()];
    let mut i = 0;
    while i < q.len() {
        for a in ads {
            let mut w = a * &q[i];
            let n0 = w.norm();
            if n0 < 1e-12 {
                continue;
            }
            for _ in 0..2 {
                for b in &q {
                    let c = b.dot(&w);
                    w.axpy(-c, b, 1.0);
                }
            }
            let r = w.norm();
            if r > 1e-8 * n0.max(1.0) {
                q.push(w / r);
            }
        }
        i += 1;
    }
    DMatrix::from_columns(&q)
}

impl DlaDecomposition {
    pub fn full(&self) -> &DlaBasis {
        &self.full
    }

    pub fn center(&self) -> &Component {
        &self.center
    }

    pub fn ideals(&self) -> &[Component] {
        &self.ideals
    }

    pub fn dims(&self) -> Vec<usize> {
        self.ideals.iter().map(|c| c.dim()).collect()
    }

    pub fn is_simple(&self) -> bool {
        self.ideals.len() == 1 && self.center.dim() == 0
    }

    /// Structural checks, all residuals as HS norms.
    pub fn check_invariants(&self) -> InvariantReport {
        let comps: Vec<&Component> = self.ideals.iter().collect();
        let mut cross: f64 = 0.0;
        for (a, ca) in comps.iter().enumerate() {
            for cb in comps.iter().skip(a + 1) {
                for x in ca.elements() {
                    for y in cb.elements() {
                        cross = cross.max(x.lie_bracket(y).map(|b| b.hs_norm_sq().sqrt()).unwrap_or(f64::INFINITY));
                    }
                }
            }
        }
        let mut central: f64 = 0.0;
        for z in self.center.elements() {
            for b in self.full.elements() {
                central = central.max(z.lie_bracket(b).map(|c| c.hs_norm_sq().sqrt()).unwrap_or(f64::INFINITY));
            }
        }
        let mut closure: f64 = 0.0;
        for c in &comps {
            let q = c.coords();
            for (i, x) in c.elements().iter().enumerate() {
                for y in c.elements().iter().skip(i + 1) {
                    let b = x.lie_bracket(y).expect("same n");
                    closure = closure.max(self.full.subspace_residual(&b, q));
                }
            }
        }
        let mut all: Vec<DVector<f64>> = self.center.coords().column_iter().map(|c| c.clone_owned()).collect();
        for c in &comps {
            all.extend(c.coords().column_iter().map(|c| c.clone_owned()));
        }
        let d = self.full.dim();
        let reconstruction = if all.is_empty() {
            if d == 0 { 0.0 } else { 1.0 }
        } else {
            let m = DMatrix::from_columns(&all);
            let p = &m * m.transpose();
            (p - DMatrix::<f64>::identity(d, d)).amax()
        };
        InvariantReport {
            dims_sum: self.center.dim() + self.dims().iter().sum::<usize>(),
            dim: d,
            max_cross_commutator: cross,
            max_center_commutator: central,
            max_bracket_residual: closure,
            reconstruction_residual: reconstruction,
        }
    }

    pub fn to_manifest(&self) -> DlaManifest {
        DlaManifest {
            n: self.full.n(),
            generators: self.full.generators().to_vec(),
            dim: self.full.dim(),
            truncated: false,
            center: ComponentManifest::of(&self.center),
            ideals: self.ideals.iter().map(ComponentManifest::of).collect(),
        }
    }

    /// Rebuild from a manifest. The full basis is recomputed from the
    /// generators; the center and ideal bases are taken verbatim.
    pub fn from_manifest(m: &DlaManifest) -> Result<Self> {
        if m.truncated {
            return Err(Error::Truncated { cap: m.dim });
        }
        let full = lie_closure(&m.generators, default_dim_cap(m.n).max(m.dim))?;
        if full.dim() != m.dim {
            return Err(Error::InvalidArgument(format!("manifest dim {} but generators close to {}", m.dim, full.dim())));
        }
        let load = |c: &ComponentManifest, kind| -> Result<Component> {
            if c.basis.len() != c.dim {
                return Err(Error::InvalidArgument(format!("component lists {} elements but dim {}", c.basis.len(), c.dim)));
            }
            let elements: Vec<PauliSum> = c
                .basis
                .iter()
                .map(|terms| PauliSum::from_terms(m.n, terms.iter().map(|t| (t.coeff, t.string))))
                .collect::<Result<_>>()?;
            let cols: Vec<DVector<f64>> = elements.iter().map(|e| full.coords_of(e)).collect();
            let coords = if cols.is_empty() { DMatrix::zeros(full.dim(), 0) } else { DMatrix::from_columns(&cols) };
            Ok(Component { kind, coords, elements })
        };
        let center = load(&m.center, ComponentKind::Center)?;
        let ideals = m
            .ideals
            .iter()
            .enumerate()
            .map(|(i, c)| load(c, ComponentKind::Ideal(i)))
            .collect::<Result<_>>()?;
        Ok(Self { full, center, ideals })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub dims_sum: usize,
    pub dim: usize,
    pub max_cross_commutator: f64,
    pub max_center_commutator: f64,
    pub max_bracket_residual: f64,
    pub reconstruction_residual: f64,
}

impl InvariantReport {
    pub fn holds(&self) -> bool {
        self.dims_sum == self.dim
            && self.max_cross_commutator < 1e-9
            && self.max_center_commutator < 1e-9
            && self.max_bracket_residual < 1e-9
            && self.reconstruction_residual < 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub coeff: f64,
    pub string: PauliString,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentManifest {
    pub dim: usize,
    pub basis: Vec<Vec<TermEntry>>,
}

impl ComponentManifest {
    fn of(c: &Component) -> Self {
        Self {
            dim: c.dim(),
            basis: c
                .elements()
                .iter()
                .map(|e| e.terms().iter().map(|&(coeff, string)| TermEntry { coeff, string }).collect())
                .collect(),
        }
    }

    fn empty() -> Self {
        Self { dim: 0, basis: Vec::new() }
    }
}

/// JSON form of a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DlaManifest {
    pub n: usize,
    pub generators: Vec<PauliString>,
    pub dim: usize,
    #[serde(default)]
    pub truncated: bool,
    pub center: ComponentManifest,
    pub ideals: Vec<ComponentManifest>,
}

impl DlaManifest {
    /// Manifest for a closure that hit its cap: dimension only.
    pub fn truncated(basis: &DlaBasis) -> Self {
        Self {
            n: basis.n(),
            generators: basis.generators().to_vec(),
            dim: basis.dim(),
            truncated: true,
            center: ComponentManifest::empty(),
            ideals: Vec::new(),
        }
    }
}

/// Maximal abelian subalgebra of a component.
#[derive(Debug, Clone)]
pub struct CartanBasis {
    elements: Vec<PauliSum>,
    coords: DMatrix<f64>,
    parent: ComponentKind,
    maximal: bool,
}

impl CartanBasis {
    pub fn elements(&self) -> &[PauliSum] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn parent(&self) -> ComponentKind {
        self.parent
    }

    /// Whether the final centralizer rank test passed.
    pub fn is_maximal(&self) -> bool {
        self.maximal
    }

    pub fn as_component(&self) -> Component {
        Component { kind: self.parent, coords: self.coords.clone(), elements: self.elements.clone() }
    }
}

/// Order in which candidate elements are tried by [`cartan_subalgebra`].
#[derive(Debug, Clone, Default)]
pub enum CartanSeed {
    /// Elements diagonal in the computational basis first.
    #[default]
    Diagonal,
    /// Parent basis order.
    BasisOrder,
    /// The given elements first (projected onto the parent), then diagonal
    /// elements.
    Elements(Vec<PauliSum>),
}

/// Greedy mutually commuting subset of the parent's basis, extended by
/// centralizer elements until the centralizer of the result is the result
/// itself.
pub fn cartan_subalgebra(basis: &DlaBasis, parent: &Component, seed: &CartanSeed) -> Result<CartanBasis> {
    if basis.is_truncated() {
        return Err(Error::Truncated { cap: basis.dim_cap() });
    }
    let q = parent.coords();
    let m = q.ncols();
    let mut candidates: Vec<DVector<f64>> = Vec::new();
    if let CartanSeed::Elements(seeds) = seed {
        for s in seeds {
            let c = q.transpose() * basis.coords_of(s);
            if c.norm() > tol::LINALG {
                candidates.push(q * c.normalize());
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    if !matches!(seed, CartanSeed::BasisOrder) {
        order.sort_by_key(|&j| !parent.elements()[j].terms().iter().all(|(_, p)| p.is_diagonal()));
    }
    candidates.extend(order.into_iter().map(|j| q.column(j).clone_owned()));

    let mut chosen: Vec<DVector<f64>> = Vec::new();
    let mut chosen_ops: Vec<PauliSum> = Vec::new();
    for c in candidates {
        let mut v = c;
        for b in &chosen {
            let d = b.dot(&v);
            v.axpy(-d, b, 1.0);
        }
        if v.norm() < 1e-8 {
            continue;
        }
        let v = v.normalize();
        let op = basis.element_from_coords(&v);
        if chosen_ops.iter().all(|h| commutes(h, &op)) {
            chosen.push(v);
            chosen_ops.push(op);
        }
    }

    // extend until the centralizer inside the parent equals the span
    let mut maximal = false;
    for _ in 0..=m {
        let units: Vec<PauliSum> = chosen.iter().map(|v| basis.unit_of_coords(v)).collect();
        let gram = basis.ad_gram(&units);
        let local = q.transpose() * gram * q;
        let (null, _) = psd_split(local, 1e-9);
        if null.ncols() <= chosen.len() {
            maximal = null.ncols() == chosen.len();
            break;
        }
        let mut best: Option<DVector<f64>> = None;
        for col in (q * null).column_iter() {
            let mut v = col.clone_owned();
            for b in &chosen {
                let d = b.dot(&v);
                v.axpy(-d, b, 1.0);
            }
            if best.as_ref().map(|b| v.norm() > b.norm()).unwrap_or(true) {
                best = Some(v);
            }
        }
        let v = best.expect("nonempty null space").normalize();
        chosen_ops.push(basis.element_from_coords(&v));
        chosen.push(v);
    }
    let coords = if chosen.is_empty() {
        DMatrix::zeros(basis.dim(), 0)
    } else {
        orthonormalize_columns(&DMatrix::from_columns(&chosen), 1e-8)
    };
    let elements = coords.column_iter().map(|c| basis.element_from_coords(&c.clone_owned())).collect();
    Ok(CartanBasis { elements, coords, parent: parent.kind(), maximal })
}

fn commutes(a: &PauliSum, b: &PauliSum) -> bool {
    let br = a.lie_bracket(b).expect("same n");
    br.hs_norm_sq().sqrt() <= 1e-9 * (a.hs_norm_sq() * b.hs_norm_sq()).sqrt().max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setups::tfim_generators;

    fn ps(list: &[&str]) -> Vec<PauliString> {
        list.iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn closure_small_examples() {
        assert_eq!(lie_closure(&ps(&["Z"]), 4).unwrap().dim(), 1);
        assert_eq!(lie_closure(&ps(&["XX", "ZI", "IZ"]), 16).unwrap().dim(), 6);
        assert_eq!(lie_closure(&ps(&["XXI", "IXX", "ZII", "IZI", "IIZ"]), 64).unwrap().dim(), 15);
        assert_eq!(lie_closure(&ps(&["X", "Y"]), 4).unwrap().dim(), 3);
    }

    #[test]
    fn closure_errors() {
        assert!(lie_closure(&[], 4).is_err());
        assert!(matches!(lie_closure(&ps(&["X", "XX"]), 16), Err(Error::QubitMismatch { .. })));
        assert!(lie_closure(&ps(&["+iX"]), 4).is_err());
        assert!(lie_closure(&ps(&["X", "Y"]), 1).is_err());
        let capped = lie_closure(&ps(&["X", "Y"]), 2).unwrap();
        assert!(capped.is_truncated());
        assert!(matches!(decompose(&capped), Err(Error::Truncated { .. })));
    }

    #[test]
    fn duplicate_generators_are_dropped() {
        let b = lie_closure(&ps(&["XX", "-XX", "ZI", "ZI", "IZ"]), 16).unwrap();
        assert_eq!(b.generators().len(), 3);
        assert_eq!(b.dim(), 6);
    }

    #[test]
    fn basis_is_orthonormal_and_closed() {
        let b = lie_closure(&tfim_generators(4), 256).unwrap();
        let d = b.dim();
        for i in 0..d {
            let ci = b.coords_of(&b.elements()[i]);
            for j in 0..d {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ci[j] - want).abs() < 1e-10);
            }
        }
        for x in b.elements() {
            for y in b.elements() {
                let br = x.lie_bracket(y).unwrap();
                assert!(b.projection_residual_sq(&br).sqrt() < 1e-9);
            }
        }
    }

    #[test]
    fn ad_matrix_is_antisymmetric_and_correct() {
        let b = lie_closure(&ps(&["XX", "ZI", "IZ"]), 16).unwrap();
        let x = PauliSum::from_terms(2, [(0.7, "ZI".parse().unwrap())]).unwrap();
        let ad = b.ad_matrix(&x);
        assert!((&ad + ad.transpose()).amax() < 1e-12);
        for j in 0..b.dim() {
            let br = x.lie_bracket(&b.elements()[j]).unwrap();
            let col = b.coords_of(&br);
            assert!((col - ad.column(j)).amax() < 1e-12);
        }
    }

    #[test]
    fn center_examples() {
        let su2 = lie_closure(&ps(&["X", "Y"]), 4).unwrap();
        assert_eq!(center_of(&su2).unwrap().dim(), 0);
        let z = lie_closure(&ps(&["Z"]), 4).unwrap();
        assert_eq!(center_of(&z).unwrap().dim(), 1);
        let so4 = lie_closure(&ps(&["XX", "ZI", "IZ"]), 16).unwrap();
        assert_eq!(center_of(&so4).unwrap().dim(), 0);
    }

    #[test]
    fn abelian_algebra_is_all_center() {
        let b = lie_closure(&ps(&["ZII", "IZI", "IIZ"]), 64).unwrap();
        let dec = decompose(&b).unwrap();
        assert_eq!(dec.center().dim(), 3);
        assert!(dec.ideals().is_empty());
        // canonicalized center is aligned with the generators
        for e in dec.center().elements() {
            assert_eq!(e.terms().len(), 1);
        }
    }

    #[test]
    fn so4_splits_into_two_su2() {
        let b = lie_closure(&ps(&["XX", "ZI", "IZ"]), 16).unwrap();
        let dec = decompose(&b).unwrap();
        assert_eq!(dec.dims(), vec![3, 3]);
        assert_eq!(dec.center().dim(), 0);
        let rep = dec.check_invariants();
        assert!(rep.holds(), "{rep:?}");
    }

    #[test]
    fn local_su2_sum() {
        let b = lie_closure(&ps(&["XII", "YII", "IXI", "IYI", "IIX", "IIY"]), 64).unwrap();
        let dec = decompose(&b).unwrap();
        assert_eq!(dec.dims(), vec![3, 3, 3]);
        assert!(dec.check_invariants().holds());
    }

    #[test]
    fn root_splitting_agrees_with_commutant() {
        // su(2)^{+12} has semisimple dim 36 > COMMUTANT_MAX_DIM: root path
        let n = 12;
        let mut gens = Vec::new();
        for q in 0..n {
            gens.push(PauliString::single(n, q, 'X').unwrap());
            gens.push(PauliString::single(n, q, 'Y').unwrap());
        }
        let b = lie_closure(&gens, 1 << 20).unwrap();
        let dec = decompose(&b).unwrap();
        assert_eq!(dec.dims(), vec![3; n]);
        assert!(dec.check_invariants().holds());
        // plus a mixed case: so(4) + su(2) + abelian
        let b = lie_closure(&ps(&["XXII", "ZIII", "IZII", "IIXI", "IIYI", "IIIZ"]), 256).unwrap();
        let dec = decompose(&b).unwrap();
        assert_eq!(dec.dims(), vec![3, 3, 3]);
        assert_eq!(dec.center().dim(), 1);
    }

    #[test]
    fn tfim_is_simple() {
        for n in 3..=6 {
            let b = lie_closure(&tfim_generators(n), 1 << 14).unwrap();
            assert_eq!(b.dim(), n * (2 * n - 1));
            let dec = decompose(&b).unwrap();
            assert!(dec.is_simple(), "n = {n}: {:?}", dec.dims());
        }
    }

    #[test]
    fn cartan_examples() {
        let b = lie_closure(&tfim_generators(4), 1 << 10).unwrap();
        let h = cartan_subalgebra(&b, &b.as_component(), &CartanSeed::Diagonal).unwrap();
        assert_eq!(h.dim(), 4);
        assert!(h.is_maximal());
        for e in h.elements() {
            assert!(e.terms().iter().all(|(_, p)| p.is_diagonal() && p.weight() == 1));
        }
        let su2 = lie_closure(&ps(&["X", "Y"]), 4).unwrap();
        assert_eq!(cartan_subalgebra(&su2, &su2.as_component(), &CartanSeed::BasisOrder).unwrap().dim(), 1);
        let so4 = lie_closure(&ps(&["XX", "ZI", "IZ"]), 16).unwrap();
        let h = cartan_subalgebra(&so4, &so4.as_component(), &CartanSeed::BasisOrder).unwrap();
        assert_eq!(h.dim(), 2);
        assert!(h.is_maximal());
        // rank additivity per ideal
        let dec = decompose(&so4).unwrap();
        for ideal in dec.ideals() {
            assert_eq!(cartan_subalgebra(&so4, ideal, &CartanSeed::Diagonal).unwrap().dim(), 1);
        }
    }

    #[test]
    fn coherent_errors_enlarge_dla() {
        let base = tfim_generators(2);
        let g = lie_closure(&base, 16).unwrap();
        let same = augment_with_coherent_errors(&base, &ps(&["YY"]), 16).unwrap();
        assert_eq!(same.dim(), g.dim());
        let bigger = augment_with_coherent_errors(&base, &ps(&["YI"]), 16).unwrap();
        assert_eq!(bigger.dim(), 10);
        let full = augment_with_coherent_errors(&base, &ps(&["YI", "IX"]), 16).unwrap();
        assert_eq!(full.dim(), 15);
        assert_eq!(augment_with_coherent_errors(&base, &[], 16).unwrap().dim(), 6);
    }

    #[test]
    fn manifest_round_trip() {
        let b = lie_closure(&ps(&["XX", "ZI", "IZ"]), 16).unwrap();
        let dec = decompose(&b).unwrap();
        let m = dec.to_manifest();
        let text = serde_json::to_string(&m).unwrap();
        let back: DlaManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        let dec2 = DlaDecomposition::from_manifest(&back).unwrap();
        assert_eq!(serde_json::to_string(&dec2.to_manifest()).unwrap(), text);
    }
}
