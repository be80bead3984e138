//! Second-moment operators of Haar-SU(4) brickwork circuits in the reduced
//! `{identity, swap}^n` basis, their leading eigenvalue, and the depth and
//! variance-gap bounds that follow from it.
//!
//! A coefficient vector `c` of length `2^n` represents
//! `sum_s c_s A_s` with `A_s = prod_q (swap if bit q of s else identity)`
//! acting on two copies of `n` qubits.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::pauli::HermitianOp;
use crate::simulate::{brickwork_pairs, sample_rng};

/// Largest `n` for which a dense matrix is materialized.
pub const DENSE_MAX_QUBITS: usize = 12;
/// Largest `n` for matrix-free application.
pub const MATRIX_FREE_MAX_QUBITS: usize = 26;

/// Weight the twirl of `identity (x) swap` puts on each of the two
/// invariants of SU(4).
pub const CROSS_WEIGHT: f64 = 0.4;

const CHUNK: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMode {
    SingleLayer,
    GroupHaar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducedMomentOperator {
    n: usize,
    mode: MomentMode,
}

/// Per-gate reduced block in the `{II, SI, IS, SS}` basis (column `j` is
/// the image of basis element `j`).
pub fn gate_block() -> [[f64; 4]; 4] {
    let w = CROSS_WEIGHT;
    [[1.0, w, w, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [0.0, w, w, 1.0]]
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("moment operators need n >= 2, got {n}")));
    }
    if n > MATRIX_FREE_MAX_QUBITS {
        return Err(Error::TooManyQubits { n, max: MATRIX_FREE_MAX_QUBITS });
    }
    Ok(())
}

/// Moment operator of one brickwork layer (even pairs, then odd pairs).
pub fn build_layer_moment(n: usize) -> Result<ReducedMomentOperator> {
    check_n(n)?;
    Ok(ReducedMomentOperator { n, mode: MomentMode::SingleLayer })
}

/// Moment operator of the Haar measure on `SU(2^n)`.
pub fn build_group_moment(n: usize) -> Result<ReducedMomentOperator> {
    check_n(n)?;
    Ok(ReducedMomentOperator { n, mode: MomentMode::GroupHaar })
}

/// Apply the reduced SU(4) twirl on qubits `a`, `b` in place.
fn apply_gate(c: &mut [f64], a: usize, b: usize, exec: Execution) {
    let (ma, mb) = (1usize << a, 1usize << b);
    let span = (ma.max(mb) << 1).max(CHUNK).min(c.len());
    exec.for_each_chunk(c, span, |_, chunk| {
        for i in 0..chunk.len() {
            if i & (ma | mb) != 0 {
                continue;
            }
            let (ia, ib, iab) = (i | ma, i | mb, i | ma | mb);
            let s = CROSS_WEIGHT * (chunk[ia] + chunk[ib]);
            chunk[i] += s;
            chunk[iab] += s;
            chunk[ia] = 0.0;
            chunk[ib] = 0.0;
        }
    });
}

fn sublayers(n: usize) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let pairs = brickwork_pairs(n);
    let split = n / 2;
    (pairs[..split].to_vec(), pairs[split..].to_vec())
}

fn apply_pairs(c: &mut [f64], pairs: &[(usize, usize)], exec: Execution) {
    for &(a, b) in pairs {
        apply_gate(c, a, b, exec);
    }
}

/// `(alpha_k, beta_k)`: the Haar twirl sends `A_s` with `|s| = k` swaps to
/// `alpha_k I + beta_k S`.
fn group_weights(n: usize) -> Vec<(f64, f64)> {
    let d2m1 = 4f64.powi(n as i32) - 1.0;
    (0..=n)
        .map(|k| {
            let alpha = (2f64.powi((2 * n - k) as i32) - 2f64.powi(k as i32)) / d2m1;
            let beta = (2f64.powi((n + k) as i32) - 2f64.powi(n as i32 - k as i32)) / d2m1;
            (alpha, beta)
        })
        .collect()
}

fn group_images(c: &[f64], n: usize, exec: Execution) -> (f64, f64) {
    let w = group_weights(n);
    let chunks = c.len().div_ceil(CHUNK);
    let parts = exec.map(chunks, |k| {
        let lo = k * CHUNK;
        let hi = (lo + CHUNK).min(c.len());
        let (mut a, mut b) = (0.0, 0.0);
        for (i, x) in c[lo..hi].iter().enumerate() {
            let (al, be) = w[(lo + i).count_ones() as usize];
            a += al * x;
            b += be * x;
        }
        (a, b)
    });
    let a: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let b: Vec<f64> = parts.iter().map(|p| p.1).collect();
    (pairwise_sum(&a), pairwise_sum(&b))
}

impl ReducedMomentOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> MomentMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Matrix-free application in place.
    pub fn apply_in_place(&self, c: &mut [f64], exec: Execution) -> Result<()> {
        if c.len() != self.len() {
            return Err(Error::DimensionMismatch(format!("vector length {} vs {}", c.len(), self.len())));
        }
        match self.mode {
            MomentMode::SingleLayer => {
                let (even, odd) = sublayers(self.n);
                apply_pairs(c, &even, exec);
                apply_pairs(c, &odd, exec);
            }
            MomentMode::GroupHaar => {
                let (a, b) = group_images(c, self.n, exec);
                c.iter_mut().for_each(|x| *x = 0.0);
                let last = c.len() - 1;
                c[0] = a;
                c[last] += b;
            }
        }
        Ok(())
    }

    pub fn apply(&self, c: &[f64], exec: Execution) -> Result<Vec<f64>> {
        let mut out = c.to_vec();
        self.apply_in_place(&mut out, exec)?;
        Ok(out)
    }

    /// Dense representation (columns are images of basis vectors).
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        if self.n > DENSE_MAX_QUBITS {
            return Err(Error::TooManyQubits { n: self.n, max: DENSE_MAX_QUBITS });
        }
        let d = self.len();
        let mut m = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        for j in 0..d {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            self.apply_in_place(&mut e, Execution::Serial)?;
            m.set_column(j, &nalgebra::DVector::from_column_slice(&e));
        }
        Ok(m)
    }
}

/// Hilbert-Schmidt Gram matrix of the reduced basis,
/// `(x)_q [[4, 2], [2, 4]]`, applied in place.
pub fn apply_gram(c: &mut [f64], exec: Execution) {
    let n = c.len().trailing_zeros() as usize;
    for q in 0..n {
        let m = 1usize << q;
        let span = (m << 1).max(CHUNK).min(c.len());
        exec.for_each_chunk(c, span, |_, chunk| {
            for i in 0..chunk.len() {
                if i & m == 0 {
                    let (a, b) = (chunk[i], chunk[i | m]);
                    chunk[i] = 4.0 * a + 2.0 * b;
                    chunk[i | m] = 2.0 * a + 4.0 * b;
                }
            }
        });
    }
}

fn gram_dot(u: &[f64], v: &[f64], exec: Execution) -> f64 {
    let mut gv = v.to_vec();
    apply_gram(&mut gv, exec);
    let prods: Vec<f64> = u.iter().zip(&gv).map(|(a, b)| a * b).collect();
    pairwise_sum(&prods)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for LambdaOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 20_000, restarts: 3, seed: 0x2de5_1a4e, exec: Execution::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaResult {
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Largest eigenvalue of `A = M_layer - M_group` with the default options.
pub fn lambda_max(n: usize, tol: f64) -> Result<f64> {
    Ok(lambda_max_with(n, &LambdaOptions { tol, ..LambdaOptions::default() })?.value)
}

/// Power iteration for the dominant eigenvalue of `A = M_layer - M_group`.
///
/// The layer operator is `P_odd P_even` with both factors projectors that
/// are self-adjoint in the Hilbert-Schmidt metric, so `A` has the same
/// spectrum as `P_even P_odd P_even - M_group`, which is self-adjoint and
/// positive semidefinite in that metric. Iterating the symmetric form makes
/// the metric Rayleigh quotient converge quadratically. Start vectors are
/// random and nonnegative with the two invariants projected out; the best
/// of `restarts` runs is returned.
pub fn lambda_max_with(n: usize, opts: &LambdaOptions) -> Result<LambdaResult> {
    check_n(n)?;
    if opts.restarts == 0 {
        return Err(invalid("restarts must be at least 1"));
    }
    let group = build_group_moment(n)?;
    let (even, odd) = sublayers(n);
    let exec = opts.exec;
    let apply_sym = |v: &[f64]| -> Result<Vec<f64>> {
        let mut w = v.to_vec();
        apply_pairs(&mut w, &even, exec);
        apply_pairs(&mut w, &odd, exec);
        apply_pairs(&mut w, &even, exec);
        let g = group.apply(v, exec)?;
        w.iter_mut().zip(&g).for_each(|(a, b)| *a -= b);
        Ok(w)
    };
    let mut best: Option<LambdaResult> = None;
    for r in 0..opts.restarts {
        let mut rng = sample_rng(opts.seed, r as u64);
        let mut v: Vec<f64> = (0..1usize << n).map(|_| rng.random::<f64>()).collect();
        let g = group.apply(&v, exec)?;
        v.iter_mut().zip(&g).for_each(|(a, b)| *a -= b);
        let mut norm = gram_dot(&v, &v, exec).sqrt();
        if norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let mut lambda = f64::NAN;
        let mut result = None;
        for it in 1..=opts.max_iter {
            let w = apply_sym(&v)?;
            let next = gram_dot(&v, &w, exec);
            let wn = gram_dot(&w, &w, exec).sqrt();
            let residual = (wn * wn - next * next).max(0.0).sqrt();
            if wn <= opts.tol {
                result = Some(LambdaResult { value: wn, iterations: it, residual: wn });
                break;
            }
            let done = (next - lambda).abs() <= opts.tol * next.abs().max(1.0);
            lambda = next;
            norm = wn;
            v = w.into_iter().map(|x| x / norm).collect();
            if done {
                result = Some(LambdaResult { value: lambda, iterations: it, residual });
                break;
            }
        }
        let res = result.ok_or(Error::NotConverged { iterations: opts.max_iter, residual: f64::NAN })?;
        if best.map(|b| res.value > b.value).unwrap_or(true) {
            best = Some(res);
        }
    }
    best.ok_or_else(|| Error::Numerical("every start vector lay in the invariant subspace".into()))
}

/// Smallest `L` with `lambda^L <= epsilon`, i.e. the ceiling of
/// `log(1/epsilon) / log(1/lambda)`; at least 1.
pub fn depth_for_epsilon(lambda: f64, epsilon: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(invalid(format!("lambda = {lambda} gives no depth guarantee; need 0 <= lambda < 1")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(invalid(format!("epsilon = {epsilon} outside (0, 1]")));
    }
    if lambda == 0.0 || epsilon == 1.0 {
        return Ok(1);
    }
    let raw = epsilon.ln() / lambda.ln();
    Ok(((raw - 1e-9).ceil() as usize).max(1))
}

/// `3 lambda^L ||O||_1^2`.
pub fn variance_gap_bound(lambda: f64, layers: usize, o: &HermitianOp) -> f64 {
    let t = o.trace_norm();
    3.0 * lambda.powi(layers as i32) * t * t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressivenessReport {
    pub n: usize,
    pub lambda_max: f64,
    pub epsilon_targets: Vec<(f64, usize)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gap_bounds: Vec<(usize, f64)>,
}

/// `lambda_max(n)` with the depths for each `epsilon` and, if an observable
/// is given, the gap bound at each requested depth.
pub fn expressiveness_report(
    n: usize,
    epsilons: &[f64],
    gap: Option<(&HermitianOp, &[usize])>,
    opts: &LambdaOptions,
) -> Result<ExpressivenessReport> {
    let lambda = lambda_max_with(n, opts)?.value;
    let lam = if lambda < opts.tol { 0.0 } else { lambda };
    let epsilon_targets = epsilons.iter().map(|&e| depth_for_epsilon(lam, e).map(|l| (e, l))).collect::<Result<_>>()?;
    let gap_bounds = match gap {
        Some((o, layers)) => layers.iter().map(|&l| (l, variance_gap_bound(lam, l, o))).collect(),
        None => Vec::new(),
    };
    Ok(ExpressivenessReport { n, lambda_max: lambda, epsilon_targets, gap_bounds })
}
