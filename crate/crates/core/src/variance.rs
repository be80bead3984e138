//! Exact loss statistics from the DLA decomposition, barren-plateau
//! diagnosis over system-size families, weight-state and spin closed forms.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dla::{decompose, lie_closure, CartanBasis, DlaDecomposition};
use crate::error::{invalid, Error, Result};
use crate::pauli::{pow2, HermitianOp, PauliSum};
use crate::purity::{g_purity, membership, purity_report, Projectable};
use crate::state::QuantumState;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub rho_in_g: bool,
    #[serde(rename = "O_in_g")]
    pub o_in_g: bool,
}

impl Hypothesis {
    pub fn holds(&self) -> bool {
        self.rho_in_g || self.o_in_g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealContribution {
    pub dim: usize,
    pub purity_rho: f64,
    #[serde(rename = "purity_O")]
    pub purity_o: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariancePrediction {
    pub mean: f64,
    pub variance: f64,
    pub ideals: Vec<IdealContribution>,
    pub hypothesis: Hypothesis,
}

/// Which of `rho`, `O` lie in `i g`; errors with `OutsideTheory` if neither.
pub fn check_hypothesis<R, O>(rho: &R, o: &O, dec: &DlaDecomposition) -> Result<Hypothesis>
where
    R: Projectable + ?Sized,
    O: Projectable + ?Sized,
{
    let h = Hypothesis { rho_in_g: membership(rho, dec.full())?, o_in_g: membership(o, dec.full())? };
    if !h.holds() {
        return Err(Error::OutsideTheory("neither the state nor the observable lies in i*g".into()));
    }
    Ok(h)
}

/// `E[l] = Tr[rho_c O_c]` over the center.
pub fn loss_mean<R, O>(rho: &R, o: &O, dec: &DlaDecomposition) -> Result<f64>
where
    R: Projectable + ?Sized,
    O: Projectable + ?Sized,
{
    check_hypothesis(rho, o, dec)?;
    center_mean(rho, o, dec)
}

fn center_mean<R, O>(rho: &R, o: &O, dec: &DlaDecomposition) -> Result<f64>
where
    R: Projectable + ?Sized,
    O: Projectable + ?Sized,
{
    let a = crate::purity::overlaps(rho, dec.center())?;
    let b = crate::purity::overlaps(o, dec.center())?;
    Ok(a.iter().zip(&b).map(|(x, y)| x * y).sum())
}

/// `Var[l] = sum_j P_j(rho) P_j(O) / dim g_j` over the simple ideals.
pub fn loss_variance<R, O>(rho: &R, o: &O, dec: &DlaDecomposition) -> Result<VariancePrediction>
where
    R: Projectable + ?Sized,
    O: Projectable + ?Sized,
{
    let hypothesis = check_hypothesis(rho, o, dec)?;
    let pr = purity_report(rho, dec, false)?;
    let po = purity_report(o, dec, false)?;
    let ideals: Vec<IdealContribution> = dec
        .ideals()
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let purity_rho = pr.ideal(k).unwrap_or(0.0);
            let purity_o = po.ideal(k).unwrap_or(0.0);
            IdealContribution { dim: c.dim(), purity_rho, purity_o, contribution: purity_rho * purity_o / c.dim() as f64 }
        })
        .collect();
    let variance = ideals.iter().map(|c| c.contribution).sum();
    Ok(VariancePrediction { mean: center_mean(rho, o, dec)?, variance, ideals, hypothesis })
}

/// Weight vector `lambda_rho(H_j) = Tr[H_j rho]` over a Cartan basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub components: Vec<f64>,
    pub norm_sq: f64,
}

/// `|| [rho, H] ||` proxy: for pure states `||H psi - <H> psi||`, otherwise
/// the HS norm of the dense commutator.
fn commutation_residual(state: &QuantumState, h: &PauliSum) -> f64 {
    match state {
        QuantumState::Pure(v) => {
            let amps = v.amplitudes();
            let mut out = vec![C64::new(0.0, 0.0); amps.len()];
            for &(c, p) in h.terms() {
                for (k, a) in amps.iter().enumerate() {
                    let (r, ph) = p.act_on_basis(k);
                    out[r] += a * ph * c;
                }
            }
            let mean = v.expectation(h);
            out.iter().zip(amps).map(|(o, a)| (o - a * mean).norm_sqr()).sum::<f64>().sqrt()
        }
        QuantumState::Depolarized { inner, p } => (1.0 - p) * commutation_residual(inner, h),
        QuantumState::Density(m) => {
            let hd = h.to_dense();
            let c = &hd * m - m * &hd;
            c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        }
    }
}

/// Components `Tr[H_j rho]`, requiring `rho` to commute with the Cartan
/// subalgebra.
pub fn weight_vector(rho: &QuantumState, cartan: &CartanBasis) -> Result<WeightVector> {
    let mut components = Vec::with_capacity(cartan.dim());
    for h in cartan.elements() {
        if h.n() != rho.n() {
            return Err(Error::QubitMismatch { left: rho.n(), right: h.n() });
        }
        let r = commutation_residual(rho, h);
        if r > crate::tol::PHYSICS {
            return Err(Error::NotWeightState { residual: r });
        }
        components.push(rho.expectation(h));
    }
    let norm_sq = components.iter().map(|x| x * x).sum();
    Ok(WeightVector { components, norm_sq })
}

/// `Var = Tr[O^2] ||lambda_rho||^2 / dim g` for simple `g`, `O` in `i g`,
/// and a weight state `rho`.
pub fn weight_state_variance(
    rho: &QuantumState,
    o: &HermitianOp,
    dec: &DlaDecomposition,
    cartan: &CartanBasis,
) -> Result<f64> {
    if !dec.is_simple() {
        return Err(invalid(format!("weight-state formula needs a simple algebra; ideal dims {:?}, center dim {}", dec.dims(), dec.center().dim())));
    }
    if !membership(o, dec.full())? {
        return Err(Error::OutsideTheory("observable is not in i*g".into()));
    }
    let w = weight_vector(rho, cartan)?;
    Ok(o.hs_norm_sq() * w.norm_sq / dec.full().dim() as f64)
}

/// Spin-`S` matrices `[S_x, S_y, S_z]` for `S = two_s / 2`, basis ordered
/// `m = S, S-1, ..., -S`.
pub fn spin_matrices(two_s: u32) -> [DMatrix<C64>; 3] {
    let d = two_s as usize + 1;
    let s = two_s as f64 / 2.0;
    let m = |k: usize| s - k as f64;
    let mut sp = DMatrix::<C64>::zeros(d, d);
    for k in 1..d {
        // S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>
        let mk = m(k);
        sp[(k - 1, k)] = C64::from((s * (s + 1.0) - mk * (mk + 1.0)).sqrt());
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm) * C64::from(0.5);
    let sy = (&sp - &sm) * C64::new(0.0, -0.5);
    let sz = DMatrix::from_fn(d, d, |r, c| if r == c { C64::from(m(r)) } else { C64::new(0.0, 0.0) });
    [sx, sy, sz]
}

/// `Var = m^2 Tr[O^2] / (S (S+1) (2S+1))` for the spin-`S` irrep of SU(2)
/// with `rho = |S, m><S, m|` and `O` in the span of the spin matrices.
pub fn spin_variance(two_s: u32, two_m: i32, o: &HermitianOp) -> Result<f64> {
    if two_s == 0 {
        return Err(invalid("spin must be positive"));
    }
    if two_m.unsigned_abs() > two_s || (two_s as i32 - two_m) % 2 != 0 {
        return Err(invalid(format!("m = {}/2 is not a weight of spin {}/2", two_m, two_s)));
    }
    let d = two_s as usize + 1;
    if o.dim() != d {
        return Err(Error::DimensionMismatch(format!("operator dim {} vs spin dim {d}", o.dim())));
    }
    let od = o.to_dense();
    let s = two_s as f64 / 2.0;
    let norm = s * (s + 1.0) * (2.0 * s + 1.0) / 3.0;
    let mut resid = od.clone();
    for sa in spin_matrices(two_s) {
        let c = (sa.adjoint() * &od).trace().re;
        resid -= sa * C64::from(c / norm);
    }
    let total = o.hs_norm_sq();
    if resid.norm() > 1e-9 * total.sqrt().max(1.0) {
        return Err(Error::OutsideTheory("observable is not in the span of the spin matrices".into()));
    }
    let m = two_m as f64 / 2.0;
    Ok(m * m * total / (s * (s + 1.0) * (2.0 * s + 1.0)))
}

/// One system size of a problem family.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub generators: Vec<crate::pauli::PauliString>,
    pub state: QuantumState,
    pub observable: PauliSum,
}

/// A problem parameterized by qubit count.
pub trait ProblemFamily {
    fn name(&self) -> String;
    fn instance(&self, n: usize) -> Result<ProblemInstance>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyPoint {
    pub n: usize,
    pub dim_g: usize,
    pub purity_rho: f64,
    #[serde(rename = "purity_O")]
    pub purity_o: f64,
    pub trace_o2: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Bp,
    NoBp,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Expressiveness,
    State,
    Observable,
    Mixed,
}

/// Least-squares line `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    LinearFit { intercept: my - slope * mx, slope, r_squared }
}

/// The BP slope threshold on `log2 Var` (per qubit), and the least `log2`
/// growth per qubit for a factor to count as a cause.
pub const BP_SLOPE: f64 = -0.5;
pub const BP_R2: f64 = 0.98;
pub const CAUSE_SLOPE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BpDiagnosis {
    pub family: String,
    pub points: Vec<FamilyPoint>,
    /// `log2 Var` against `n`.
    pub exponential_fit: LinearFit,
    /// `log2 Var` against `log2 n`.
    pub polynomial_fit: LinearFit,
    /// `2^slope` of the exponential fit.
    pub fitted_base: f64,
    pub verdict: Verdict,
    /// Growth per qubit (`log2` slope) of `dim g`, `1/(2^n P(rho))` and
    /// `Tr[O^2]/P(O)`.
    pub cause_slopes: CauseSlopes,
    pub dominant_cause: Option<Cause>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauseSlopes {
    pub expressiveness: f64,
    pub state: f64,
    pub observable: f64,
}

/// Exact point of a family at one size.
pub fn family_point(inst: &ProblemInstance) -> Result<FamilyPoint> {
    let n = inst.state.n();
    let basis = lie_closure(&inst.generators, crate::dla::default_dim_cap(n))?;
    let dec = decompose(&basis)?;
    let pred = loss_variance(&inst.state, &inst.observable, &dec)?;
    let full = basis.as_component();
    Ok(FamilyPoint {
        n,
        dim_g: basis.dim(),
        purity_rho: g_purity(&inst.state, &full)?,
        purity_o: g_purity(&inst.observable, &full)?,
        trace_o2: inst.observable.hs_norm_sq(),
        variance: pred.variance,
    })
}

/// Evaluate a family over `ns` and classify it.
pub fn bp_diagnose(family: &dyn ProblemFamily, ns: &[usize]) -> Result<BpDiagnosis> {
    let points = ns.iter().map(|&n| family.instance(n).and_then(|i| family_point(&i))).collect::<Result<Vec<_>>>()?;
    bp_diagnose_points(family.name(), points)
}

/// Classify precomputed family points.
///
/// `log2 Var` is fitted linearly in `n`: slope at most [`BP_SLOPE`] with
/// `R^2 >= BP_R2` is a BP, a shallower slope is no-BP, anything else is
/// inconclusive. A factor is flagged when its `log2` growth per qubit is at
/// least [`CAUSE_SLOPE`] and a line in `n` fits it better than a line in
/// `log2 n`; several flagged factors within 0.25 of the largest are reported
/// as mixed.
pub fn bp_diagnose_points(family: String, points: Vec<FamilyPoint>) -> Result<BpDiagnosis> {
    if points.len() < 4 {
        return Err(invalid(format!("need at least 4 system sizes, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|p| !(p.variance > 0.0)) {
        return Err(invalid(format!("variance at n = {} is {}, cannot fit its logarithm", p.n, p.variance)));
    }
    let ns: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let lv: Vec<f64> = points.iter().map(|p| p.variance.log2()).collect();
    let exponential_fit = linear_fit(&ns, &lv);
    let polynomial_fit = linear_fit(&ns.iter().map(|n| n.log2()).collect::<Vec<_>>(), &lv);
    let verdict = if exponential_fit.slope <= BP_SLOPE && exponential_fit.r_squared >= BP_R2 {
        Verdict::Bp
    } else if exponential_fit.slope > BP_SLOPE {
        Verdict::NoBp
    } else {
        Verdict::Inconclusive
    };
    let log_ns: Vec<f64> = ns.iter().map(|n| n.log2()).collect();
    // (slope in n, whether a line in n beats a line in log2 n)
    let series = |f: &dyn Fn(&FamilyPoint) -> f64| {
        let y: Vec<f64> = points.iter().map(f).collect();
        let exp = linear_fit(&ns, &y);
        (exp.slope, exp.r_squared > linear_fit(&log_ns, &y).r_squared)
    };
    let expressiveness = series(&|p| (p.dim_g as f64).log2());
    let state = series(&|p| -(pow2(p.n) * p.purity_rho).log2());
    let observable = series(&|p| -(p.purity_o / p.trace_o2).log2());
    let cause_slopes = CauseSlopes { expressiveness: expressiveness.0, state: state.0, observable: observable.0 };
    let flagged: Vec<(Cause, f64)> = [(Cause::Expressiveness, expressiveness), (Cause::State, state), (Cause::Observable, observable)]
        .into_iter()
        .filter(|(_, (s, exponential))| s.is_finite() && *s >= CAUSE_SLOPE && *exponential)
        .map(|(c, (s, _))| (c, s))
        .collect();
    let dominant_cause = match flagged.iter().map(|(_, s)| *s).fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.max(s)))) {
        None => None,
        Some(top) => {
            let close: Vec<_> = flagged.iter().filter(|(_, s)| top - s <= 0.25).collect();
            Some(if close.len() > 1 { Cause::Mixed } else { close[0].0 })
        }
    };
    Ok(BpDiagnosis {
        family,
        points,
        fitted_base: exponential_fit.slope.exp2(),
        exponential_fit,
        polynomial_fit,
        verdict,
        cause_slopes,
        dominant_cause,
    })
}

/// Closed-form `Var` for an `su(2^n)` DLA: `P(rho) P(O) / (4^n - 1)`.
pub fn su_variance(rho: &QuantumState, o: &PauliSum) -> f64 {
    let d = pow2(rho.n());
    let p_rho = rho.purity() - 1.0 / d;
    let p_o = o.hs_norm_sq() - o.trace().powi(2) / d;
    p_rho * p_o / (d * d - 1.0)
}

/// Projections of `o` onto each simple ideal.
pub fn split_along_ideals(o: &PauliSum, dec: &DlaDecomposition) -> Result<Vec<PauliSum>> {
    dec.ideals()
        .iter()
        .map(|c| {
            crate::purity::project(o, c).map(|h| match h {
                HermitianOp::Pauli(s) => s,
                HermitianOp::Dense(_) => unreachable!("projections are Pauli sums"),
            })
        })
        .collect()
}
