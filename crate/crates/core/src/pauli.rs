//! Pauli strings in symplectic form, real Pauli sums and Hermitian operators.
//!
//! A [`PauliString`] on `n <= 64` qubits is stored as two bit masks (bit `q`
//! of `x`/`z` belongs to qubit `q`) plus an exponent `k` of a global factor
//! `i^k`. The letter on a qubit with both bits set is the Hermitian `Y`, so
//! the operator is
//!
//! ```text
//! P = i^k * i^{|x & z|} * X^x Z^z
//! ```
//!
//! and `P` is Hermitian exactly when `k` is even. All phase bookkeeping is
//! integer arithmetic modulo 4.
//!
//! Text form: `[+-]?[i]?[IXYZ]{n}`, letters case-insensitive, qubit 0 first.
//! The imaginary marker is only recognised directly after an explicit sign
//! (`"+iXY"`, `"-iZ"`) because a bare leading `i` is indistinguishable from
//! an identity letter.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{tol, C64};

pub const MAX_QUBITS: usize = 64;

const I_POW: [C64; 4] = [
    C64::new(1.0, 0.0),
    C64::new(0.0, 1.0),
    C64::new(-1.0, 0.0),
    C64::new(0.0, -1.0),
];

/// `i^k` for any integer exponent.
pub fn i_pow(k: u32) -> C64 {
    I_POW[(k & 3) as usize]
}

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PauliString {
    n: u8,
    x: u64,
    z: u64,
    phase: u8,
}

impl PauliString {
    pub fn new(n: usize, x: u64, z: u64, phase: u8) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("Pauli string on zero qubits".into()));
        }
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS });
        }
        if (x | z) & !mask(n) != 0 {
            return Err(Error::InvalidArgument(format!(
                "bit masks exceed {n} qubits"
            )));
        }
        Ok(Self { n: n as u8, x, z, phase: phase & 3 })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, 0, 0, 0).expect("qubit count within range")
    }

    /// A single-qubit letter (`'I'`, `'X'`, `'Y'`, `'Z'`) on `qubit`.
    pub fn single(n: usize, qubit: usize, letter: char) -> Result<Self> {
        if qubit >= n {
            return Err(Error::InvalidArgument(format!("qubit {qubit} out of range for n = {n}")));
        }
        let (xb, zb) = letter_bits(letter).ok_or_else(|| Error::PauliParse {
            text: letter.to_string(),
            reason: "unknown letter".into(),
        })?;
        Self::new(n, (xb as u64) << qubit, (zb as u64) << qubit, 0)
    }

    /// Build from `(qubit, letter)` pairs; unspecified qubits carry `I`.
    pub fn from_sparse(n: usize, letters: &[(usize, char)]) -> Result<Self> {
        let mut p = Self::identity(n);
        for &(q, c) in letters {
            if q >= n {
                return Err(Error::InvalidArgument(format!("qubit {q} out of range for n = {n}")));
            }
            let (xb, zb) = letter_bits(c).ok_or_else(|| Error::PauliParse {
                text: c.to_string(),
                reason: "unknown letter".into(),
            })?;
            p.x = (p.x & !(1 << q)) | ((xb as u64) << q);
            p.z = (p.z & !(1 << q)) | ((zb as u64) << q);
        }
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    /// Exponent `k` of the global factor `i^k`.
    pub fn phase_exponent(&self) -> u8 {
        self.phase
    }

    pub fn phase(&self) -> C64 {
        i_pow(self.phase as u32)
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Diagonal in the computational basis.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    /// The same letters with phase `+1`.
    pub fn phaseless(&self) -> Self {
        Self { phase: 0, ..*self }
    }

    pub fn with_phase(&self, phase: u8) -> Self {
        Self { phase: phase & 3, ..*self }
    }

    pub fn letter(&self, qubit: usize) -> char {
        match ((self.x >> qubit) & 1, (self.z >> qubit) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (1, 1) => 'Y',
            _ => 'Z',
        }
    }

    /// Symplectic form: `true` when the two strings commute.
    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    fn check_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::QubitMismatch { left: self.n(), right: other.n() });
        }
        Ok(())
    }

    /// Exact product `self * other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = self.phase as u32
            + other.phase as u32
            + (self.x & self.z).count_ones()
            + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones()
            + 4 * 64
            - (x & z).count_ones();
        Self { n: self.n, x, z, phase: (k & 3) as u8 }
    }

    /// `[P, Q] = PQ - QP`. `None` when the strings commute, otherwise
    /// `(c, R)` with `R` phaseless and `[P, Q] = c R`.
    pub fn commutator(&self, other: &Self) -> Result<Option<(C64, Self)>> {
        self.check_n(other)?;
        if self.commutes_with(other) {
            return Ok(None);
        }
        let prod = self.mul_unchecked(other);
        Ok(Some((prod.phase() * 2.0, prod.phaseless())))
    }

    /// `P|k> = c |k'>`; returns `(k', c)`.
    #[inline]
    pub fn act_on_basis(&self, k: usize) -> (usize, C64) {
        let k64 = k as u64;
        let sign = 2 * ((self.z & k64).count_ones() & 1);
        let e = self.phase as u32 + (self.x & self.z).count_ones() + sign;
        ((k64 ^ self.x) as usize, i_pow(e))
    }

    /// Dense `2^n x 2^n` matrix. Intended for small `n`.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = 1usize << self.n;
        let mut m = DMatrix::zeros(d, d);
        for k in 0..d {
            let (r, c) = self.act_on_basis(k);
            m[(r, k)] = c;
        }
        m
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical order: qubit count, then weight, then masks, then phase.
impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.n, self.weight(), self.z, self.x, self.phase).cmp(&(
            other.n,
            other.weight(),
            other.z,
            other.x,
            other.phase,
        ))
    }
}

fn letter_bits(c: char) -> Option<(bool, bool)> {
    match c.to_ascii_uppercase() {
        'I' => Some((false, false)),
        'X' => Some((true, false)),
        'Y' => Some((true, true)),
        'Z' => Some((false, true)),
        _ => None,
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let err = |reason: &str| Error::PauliParse { text: text.to_string(), reason: reason.to_string() };
        let s = text.trim();
        if s.is_empty() {
            return Err(err("empty string"));
        }
        let mut phase = 0u8;
        let mut body = s;
        if let Some(rest) = body.strip_prefix('+') {
            body = rest;
            if let Some(r) = body.strip_prefix('i') {
                phase = 1;
                body = r;
            }
        } else if let Some(rest) = body.strip_prefix('-') {
            phase = 2;
            body = rest;
            if let Some(r) = body.strip_prefix('i') {
                phase = 3;
                body = r;
            }
        }
        if body.is_empty() {
            return Err(err("no Pauli letters"));
        }
        let n = body.chars().count();
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits { n, max: MAX_QUBITS });
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (q, c) in body.chars().enumerate() {
            let (xb, zb) = letter_bits(c)
                .ok_or_else(|| err(&format!("invalid character {c:?} at position {q}")))?;
            x |= (xb as u64) << q;
            z |= (zb as u64) << q;
        }
        Self::new(n, x, z, phase)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.phase {
            0 => "",
            1 => "+i",
            2 => "-",
            _ => "-i",
        })?;
        for q in 0..self.n() {
            write!(f, "{}", self.letter(q))?;
        }
        Ok(())
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Real linear combination of phaseless Hermitian Pauli strings.
///
/// Terms are sorted canonically with no repeated string and no zero
/// coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PauliSumRepr", into = "PauliSumRepr")]
pub struct PauliSum {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    coeff: f64,
    pauli: PauliString,
}

#[derive(Serialize, Deserialize)]
struct PauliSumRepr {
    n: usize,
    terms: Vec<TermRepr>,
}

impl TryFrom<PauliSumRepr> for PauliSum {
    type Error = Error;
    fn try_from(r: PauliSumRepr) -> Result<Self> {
        PauliSum::from_terms(r.n, r.terms.into_iter().map(|t| (t.coeff, t.pauli)))
    }
}

impl From<PauliSum> for PauliSumRepr {
    fn from(s: PauliSum) -> Self {
        PauliSumRepr {
            n: s.n,
            terms: s.terms.into_iter().map(|(coeff, pauli)| TermRepr { coeff, pauli }).collect(),
        }
    }
}

impl PauliSum {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    /// Collect terms; signs carried by Hermitian strings are folded into the
    /// coefficients. Strings with an imaginary phase are rejected.
    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        let mut v = Vec::new();
        for (c, p) in terms {
            if p.n() != n {
                return Err(Error::QubitMismatch { left: n, right: p.n() });
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite coefficient on {p}")));
            }
            let c = match p.phase_exponent() {
                0 => c,
                2 => -c,
                _ => return Err(Error::NotHermitian(format!("string {p} carries an imaginary phase"))),
            };
            v.push((c, p.phaseless()));
        }
        Ok(Self::canonical(n, v))
    }

    pub fn from_pauli(p: PauliString) -> Result<Self> {
        Self::from_terms(p.n(), [(1.0, p)])
    }

    /// Canonicalize already-phaseless terms.
    pub(crate) fn canonical(n: usize, mut v: Vec<(f64, PauliString)>) -> Self {
        v.sort_by(|a, b| a.1.cmp(&b.1));
        let mut out: Vec<(f64, PauliString)> = Vec::with_capacity(v.len());
        for (c, p) in v {
            match out.last_mut() {
                Some(last) if last.1 == p => last.0 += c,
                _ => out.push((c, p)),
            }
        }
        out.retain(|(c, _)| *c != 0.0);
        Self { n, terms: out }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        let key = p.phaseless();
        self.terms
            .binary_search_by(|t| t.1.cmp(&key))
            .map(|i| self.terms[i].0)
            .unwrap_or(0.0)
    }

    pub fn trace(&self) -> f64 {
        self.coefficient(&PauliString::identity(self.n)) * pow2(self.n)
    }

    /// `Tr[A^2] = 2^n * sum c^2`.
    pub fn hs_norm_sq(&self) -> f64 {
        pow2(self.n) * self.terms.iter().map(|(c, _)| c * c).sum::<f64>()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::canonical(self.n, self.terms.iter().map(|&(c, p)| (c * s, p)).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::QubitMismatch { left: self.n, right: other.n });
        }
        let mut v = self.terms.clone();
        v.extend_from_slice(&other.terms);
        Ok(Self::canonical(self.n, v))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    /// Drop terms with `|c| <= cutoff`.
    pub fn pruned(&self, cutoff: f64) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().copied().filter(|(c, _)| c.abs() > cutoff).collect(),
        }
    }

    /// The Hermitian operator `-i [A, B]`.
    pub fn lie_bracket(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::QubitMismatch { left: self.n, right: other.n });
        }
        let mut v = Vec::new();
        for &(a, p) in &self.terms {
            for &(b, q) in &other.terms {
                if p.commutes_with(&q) {
                    continue;
                }
                let r = p.mul_unchecked(&q);
                // -i * 2 * i^k with k odd is the real number 2 * i^(k-1).
                let s = if r.phase_exponent() == 1 { 2.0 } else { -2.0 };
                v.push((a * b * s, r.phaseless()));
            }
        }
        Ok(Self::canonical(self.n, v))
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        self.lie_bracket(other).map(|b| b.is_empty()).unwrap_or(false)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for &(c, p) in &self.terms {
            for k in 0..d {
                let (r, ph) = p.act_on_basis(k);
                m[(r, k)] += ph * c;
            }
        }
        m
    }
}

pub(crate) fn pow2(n: usize) -> f64 {
    2f64.powi(n as i32)
}

/// Hermitian operator, either as a Pauli expansion or as a dense matrix
/// (the latter also covers Hilbert spaces whose dimension is not a power of 2).
#[derive(Clone, Debug, PartialEq)]
pub enum HermitianOp {
    Pauli(PauliSum),
    Dense(DMatrix<C64>),
}

impl HermitianOp {
    pub fn dense(m: DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
        }
        let scale = m.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let dev = (&m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if dev > tol::REPRESENTATION * scale {
            return Err(Error::NotHermitian(format!("max |A - A^dagger| = {dev:.3e}")));
        }
        Ok(Self::Dense(m))
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pauli(s) => s.dim(),
            Self::Dense(m) => m.nrows(),
        }
    }

    pub fn as_pauli(&self) -> Option<&PauliSum> {
        match self {
            Self::Pauli(s) => Some(s),
            Self::Dense(_) => None,
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match self {
            Self::Pauli(s) => s.to_dense(),
            Self::Dense(m) => m.clone(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            Self::Pauli(s) => s.trace(),
            Self::Dense(m) => m.trace().re,
        }
    }

    pub fn hs_norm_sq(&self) -> f64 {
        match self {
            Self::Pauli(s) => s.hs_norm_sq(),
            Self::Dense(m) => m.iter().map(|c| c.norm_sqr()).sum(),
        }
    }

    /// Schatten 1-norm (sum of absolute eigenvalues).
    pub fn trace_norm(&self) -> f64 {
        if let Self::Pauli(s) = self {
            if s.terms().len() == 1 {
                return s.terms()[0].0.abs() * pow2(s.n());
            }
        }
        let eig = nalgebra::SymmetricEigen::new(self.to_dense());
        eig.eigenvalues.iter().map(|e| e.abs()).sum()
    }
}

impl From<PauliSum> for HermitianOp {
    fn from(s: PauliSum) -> Self {
        Self::Pauli(s)
    }
}

/// Hilbert-Schmidt inner product `Tr[A^dagger B]` (real for Hermitian operands).
pub fn hs_inner(a: &HermitianOp, b: &HermitianOp) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    match (a, b) {
        (HermitianOp::Pauli(p), HermitianOp::Pauli(q)) => {
            let (mut i, mut j, mut acc) = (0, 0, 0.0);
            let (pt, qt) = (p.terms(), q.terms());
            while i < pt.len() && j < qt.len() {
                match pt[i].1.cmp(&qt[j].1) {
                    Ordering::Less => i += 1,
                    Ordering::Greater => j += 1,
                    Ordering::Equal => {
                        acc += pt[i].0 * qt[j].0;
                        i += 1;
                        j += 1;
                    }
                }
            }
            Ok(acc * pow2(p.n()))
        }
        _ => {
            let (ma, mb) = (a.to_dense(), b.to_dense());
            Ok(ma.adjoint().component_mul(&mb.transpose()).sum().re)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>) -> bool {
        (a - b).iter().all(|c| c.norm() < 1e-12)
    }

    #[test]
    fn parse_examples() {
        let xi = p("XI");
        assert_eq!((xi.x_bits(), xi.z_bits(), xi.phase_exponent()), (0b01, 0b00, 0));
        let y = p("Y");
        assert_eq!((y.x_bits(), y.z_bits(), y.phase_exponent()), (1, 1, 0));
        assert!(y.is_hermitian());
        let xyz = p("XYZ");
        // qubit order: X on 0, Y on 1, Z on 2
        assert_eq!(xyz.x_bits(), 0b011);
        assert_eq!(xyz.z_bits(), 0b110);
        assert!(xyz.is_hermitian());
        // dense oracle: kron(X, Y, Z) with qubit 0 as least significant bit
        let dense = xyz.to_dense();
        assert!(close(&dense, &dense.adjoint()));
        assert!(close(&(&dense * &dense), &DMatrix::identity(8, 8)));
        assert_eq!(xyz.to_string(), "XYZ");
        assert_eq!(p("xyz"), xyz);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!("".parse::<PauliString>(), Err(Error::PauliParse { .. })));
        assert!(matches!("XQ".parse::<PauliString>(), Err(Error::PauliParse { .. })));
        assert!(matches!("-".parse::<PauliString>(), Err(Error::PauliParse { .. })));
        let long = "X".repeat(65);
        assert!(matches!(long.parse::<PauliString>(), Err(Error::TooManyQubits { .. })));
    }

    #[test]
    fn phase_tokens_round_trip() {
        for s in ["XY", "-XY", "+iXY", "-iXY", "IIZ"] {
            assert_eq!(p(s).to_string(), s);
        }
        assert_eq!(p("+XY").to_string(), "XY");
        // bare leading i is an identity letter
        assert_eq!(p("iX").n(), 2);
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(p("X").multiply(&p("Y")).unwrap(), p("+iZ"));
        let q = p("-XZY");
        assert_eq!(q.multiply(&q).unwrap(), PauliString::identity(3));
        let prod = p("XX").multiply(&p("ZI")).unwrap();
        assert_eq!(prod, p("-iYX"));
        // dense oracle
        let dense = &p("XX").to_dense() * &p("ZI").to_dense();
        assert!(close(&dense, &prod.to_dense()));
        assert!(matches!(p("X").multiply(&p("XX")), Err(Error::QubitMismatch { .. })));
    }

    #[test]
    fn commutator_examples() {
        let (c, r) = p("X").commutator(&p("Y")).unwrap().unwrap();
        assert_eq!(r, p("Z"));
        assert!((c - C64::new(0.0, 2.0)).norm() < 1e-15);
        assert!(p("XX").commutator(&p("YY")).unwrap().is_none());
        let (c, r) = p("XX").commutator(&p("ZI")).unwrap().unwrap();
        assert_eq!(r, p("YX"));
        assert!((c - C64::new(0.0, -2.0)).norm() < 1e-15);
        let (a, b) = (p("XX").to_dense(), p("ZI").to_dense());
        let dense = &a * &b - &b * &a;
        assert!(close(&dense, &(r.to_dense() * c)));
    }

    #[test]
    fn hs_inner_examples() {
        let x = HermitianOp::from(PauliSum::from_pauli(p("X")).unwrap());
        let z = HermitianOp::from(PauliSum::from_pauli(p("Z")).unwrap());
        assert_eq!(hs_inner(&x, &x).unwrap(), 2.0);
        assert_eq!(hs_inner(&x, &z).unwrap(), 0.0);
        let a = HermitianOp::from(PauliSum::from_terms(2, [(1.0, p("XX")), (1.0, p("ZI"))]).unwrap());
        let b = HermitianOp::from(PauliSum::from_pauli(p("XX")).unwrap());
        assert_eq!(hs_inner(&a, &b).unwrap(), 4.0);
        let dense = HermitianOp::dense(a.to_dense()).unwrap();
        assert!((hs_inner(&dense, &b).unwrap() - 4.0).abs() < 1e-12);
        assert!(hs_inner(&x, &b).is_err());
    }

    #[test]
    fn pauli_sum_is_canonical() {
        let s = PauliSum::from_terms(2, [(1.0, p("ZI")), (0.5, p("XX")), (-1.0, p("-ZI")), (0.25, p("XX"))]).unwrap();
        assert_eq!(s.terms(), &[(2.0, p("ZI")), (0.75, p("XX"))]);
        assert!(PauliSum::from_terms(1, [(1.0, p("+iX"))]).is_err());
        assert!(HermitianOp::dense(DMatrix::from_element(2, 2, C64::new(0.0, 1.0))).is_err());
    }

    #[test]
    fn lie_bracket_matches_dense() {
        let a = PauliSum::from_terms(2, [(0.3, p("XX")), (1.1, p("ZI"))]).unwrap();
        let b = PauliSum::from_terms(2, [(0.7, p("YZ")), (-0.4, p("IX")), (0.2, p("ZZ"))]).unwrap();
        let (da, db) = (a.to_dense(), b.to_dense());
        let expect = (&da * &db - &db * &da) * C64::new(0.0, -1.0);
        assert!(close(&a.lie_bracket(&b).unwrap().to_dense(), &expect));
    }

    #[test]
    fn trace_norm_of_pauli() {
        let z = HermitianOp::from(PauliSum::from_pauli(p("ZII")).unwrap());
        assert_eq!(z.trace_norm(), 8.0);
        let mix = HermitianOp::from(PauliSum::from_terms(1, [(1.0, p("Z")), (1.0, p("X"))]).unwrap());
        assert!((mix.trace_norm() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }
}
