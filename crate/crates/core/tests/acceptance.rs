//! Acceptance criteria 1-10. Each criterion prints one PASS/FAIL line and the
//! process exits nonzero if any of them fails.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use lie_plateau::dla::default_dim_cap;
use lie_plateau::moments::{depth_for_epsilon, lambda_max, lambda_max_with, variance_gap_bound, LambdaOptions};
use lie_plateau::purity::{apply_global_depolarizing, g_purity, purity_report};
use lie_plateau::setups::{
    local_su2_generators, setup_instance, tfim_generators, Setup, SetupFamily, SetupOptions,
};
use lie_plateau::simulate::{brickwork_variance_mc, estimate_variance_mc, CircuitSpec, Convergence, McOptions, Spam};
use lie_plateau::variance::{bp_diagnose, loss_variance, spin_matrices, spin_variance, Verdict};
use lie_plateau::{decompose, lie_closure, HermitianOp, PauliString, PauliSum, QuantumState, StateVector, C64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn zero(n: usize) -> QuantumState {
    QuantumState::from(StateVector::zero(n))
}

fn z_first(n: usize) -> PauliSum {
    let s = format!("Z{}", "I".repeat(n - 1));
    PauliSum::from_pauli(s.parse().unwrap()).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut dims = Vec::new();
    let mut ok = true;
    for n in 2..=8 {
        let dim = lie_closure(&tfim_generators(n), default_dim_cap(n)).map(|b| b.dim()).unwrap_or(0);
        ok &= dim == n * (2 * n - 1);
        dims.push(dim);
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(30);
    Outcome::new(ok, format!("dims {dims:?}, {elapsed:.2?}"))
}

fn criterion_2() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 3..=10 {
        let basis = lie_closure(&tfim_generators(n), default_dim_cap(n)).unwrap();
        let p = g_purity(&zero(n), &basis.as_component()).unwrap();
        worst = worst.max((p - n as f64 / (1u64 << n) as f64).abs());
    }
    Outcome::new(worst <= 1e-10, format!("max |P - n/2^n| = {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for setup in [Setup::Zero, Setup::One] {
        for n in 3..=5 {
            let inst = setup_instance(setup, n, 0, &SetupOptions::default()).unwrap();
            let dec = decompose(&lie_closure(&inst.generators, default_dim_cap(n)).unwrap()).unwrap();
            let exact = loss_variance(&inst.state, &inst.observable, &dec).unwrap().variance;
            let spec = CircuitSpec::new(inst.generators.clone(), 5 * n).unwrap();
            let mut hits = 0;
            for rep in 0..10u64 {
                let opts = McOptions::new(5000, 1000 * n as u64 + rep).with_convergence(Convergence::default());
                let est = estimate_variance_mc(&inst.state, &inst.observable, &spec, &opts).unwrap();
                if est.z_score(exact).abs() <= 3.0 {
                    hits += 1;
                }
            }
            ok &= hits >= 9;
            parts.push(format!("s{setup} n{n} {hits}/10"));
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(600);
    Outcome::new(ok, format!("{}, {elapsed:.1?}", parts.join(", ")))
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 2..=4 {
        let target = 1.0 / ((1u64 << n) as f64 + 1.0);
        let est = brickwork_variance_mc(4 * n, &zero(n), &z_first(n), &McOptions::new(20_000, 40 + n as u64)).unwrap();
        let z = est.z_score(target);
        ok &= z.abs() <= 3.0;
        parts.push(format!("n{n} z={z:+.2}"));
    }
    Outcome::new(ok, parts.join(", "))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let l2 = lambda_max(2, 1e-10).unwrap();
    let l16 = lambda_max_with(16, &LambdaOptions::default()).unwrap().value;
    let l20 = lambda_max_with(20, &LambdaOptions::default()).unwrap().value;
    let depth = depth_for_epsilon(0.639, 1e-9).unwrap();
    let elapsed = start.elapsed();
    // a - b/n^2 through n = 16, 20
    let asymptote = (400.0 * l20 - 256.0 * l16) / 144.0;
    let ok = l2 < 1e-8 && (l20 - 0.639).abs() <= 0.005 && depth == 47 && elapsed < Duration::from_secs(120);
    Outcome::new(
        ok,
        format!(
            "lambda(2) = {l2:.1e}, lambda(20) = {l20:.4} (target 0.639 +- 0.005, 1/n^2 extrapolation {asymptote:.4}), L(0.639, 1e-9) = {depth}, {elapsed:.1?}"
        ),
    )
}

/// Second moment of `Tr[U rho U^dag O]` under brickwork Haar-SU(4) layers,
/// propagated on the full two-copy operator space.
struct TwoCopy {
    n: usize,
    d: usize,
    x: Vec<f64>,
}

impl TwoCopy {
    fn product_state(n: usize, k: usize) -> Self {
        let d = 1 << n;
        let mut x = vec![0.0; d * d * d * d];
        x[((k * d + k) * d + k) * d + k] = 1.0;
        Self { n, d, x }
    }

    fn idx(&self, r1: usize, r2: usize, c1: usize, c2: usize) -> usize {
        ((r1 * self.d + r2) * self.d + c1) * self.d + c2
    }

    fn gate(&mut self, a: usize) {
        let m = 3usize << a;
        let dim = 4.0f64;
        let (w1, w2) = (1.0 / (dim * dim - 1.0), -1.0 / (dim * (dim * dim - 1.0)));
        let mut traces: HashMap<[usize; 4], (f64, f64)> = HashMap::new();
        let d = self.d;
        for r1 in 0..d {
            for r2 in 0..d {
                for c1 in 0..d {
                    for c2 in 0..d {
                        let v = self.x[self.idx(r1, r2, c1, c2)];
                        if v == 0.0 {
                            continue;
                        }
                        let p = [(r1 & m) >> a, (r2 & m) >> a, (c1 & m) >> a, (c2 & m) >> a];
                        let e = traces.entry([r1 & !m, r2 & !m, c1 & !m, c2 & !m]).or_insert((0.0, 0.0));
                        if p[0] == p[2] && p[1] == p[3] {
                            e.0 += v;
                        }
                        if p[0] == p[3] && p[1] == p[2] {
                            e.1 += v;
                        }
                    }
                }
            }
        }
        let mut out = vec![0.0; self.x.len()];
        for (rest, (tid, tsw)) in traces {
            let ci = w1 * tid + w2 * tsw;
            let cs = w2 * tid + w1 * tsw;
            for p0 in 0..4 {
                for p1 in 0..4 {
                    let (r1, r2) = (rest[0] | (p0 << a), rest[1] | (p1 << a));
                    out[self.idx(r1, r2, rest[2] | (p0 << a), rest[3] | (p1 << a))] += ci;
                    out[self.idx(r1, r2, rest[2] | (p1 << a), rest[3] | (p0 << a))] += cs;
                }
            }
        }
        self.x = out;
    }

    fn layer(&mut self) {
        let n = self.n;
        for a in (0..n - 1).step_by(2).chain((1..n - 1).step_by(2)) {
            self.gate(a);
        }
    }

    /// `E[Tr[. O]^2]` for a diagonal `O`.
    fn contract_diagonal(&self, o: &[f64]) -> f64 {
        let mut acc = 0.0;
        for r1 in 0..self.d {
            for r2 in 0..self.d {
                acc += self.x[self.idx(r1, r2, r1, r2)] * o[r1] * o[r2];
            }
        }
        acc
    }
}

fn criterion_6() -> Outcome {
    let n = 3;
    let lambda = lambda_max(n, 1e-12).unwrap();
    let o = z_first(n);
    let trace_norm = HermitianOp::Pauli(o.clone());
    let diag: Vec<f64> = (0..1usize << n).map(|k| if k & 1 == 0 { 1.0 } else { -1.0 }).collect();
    let haar = 1.0 / 9.0;
    let mut exact_ok = true;
    let mut mc_ok = true;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_mc: f64 = 0.0;
    let mut moment = TwoCopy::product_state(n, 0);
    for l in 1..=10 {
        moment.layer();
        // the first moment vanishes after one layer
        let var_l = moment.contract_diagonal(&diag);
        let bound = variance_gap_bound(lambda, l, &trace_norm);
        let gap = (var_l - haar).abs();
        exact_ok &= gap <= bound;
        worst_ratio = worst_ratio.max(gap / bound);
        let est = brickwork_variance_mc(l, &zero(n), &o, &McOptions::new(20_000, 600 + l as u64)).unwrap();
        let excess = (est.variance_hat - haar).abs() - bound;
        let allowance = 3.0 * est.stderr_of_variance;
        mc_ok &= excess <= allowance;
        worst_mc = worst_mc.max(excess / allowance);
    }
    Outcome::new(
        exact_ok && mc_ok,
        format!(
            "lambda(3) = {lambda:.4}; exact max gap/bound = {worst_ratio:.3}; Monte Carlo max excess/(3 stderr) = {worst_mc:.3}"
        ),
    )
}

/// `E[Tr[U rho U^dag O]^2] - E[.]^2` over Haar SU(2) in Euler angles,
/// midpoint rule in `cos(beta)` and `alpha` (`gamma` drops out for a weight
/// state).
fn spin_haar_oracle(two_s: u32, o: &DMatrix<C64>) -> f64 {
    let d = two_s as usize + 1;
    let s = two_s as f64 / 2.0;
    let sy = {
        let mut sp = DMatrix::<C64>::zeros(d, d);
        for k in 1..d {
            let m = s - k as f64;
            sp[(k - 1, k)] = C64::from((s * (s + 1.0) - m * (m + 1.0)).sqrt());
        }
        (&sp - sp.adjoint()) * C64::new(0.0, -0.5)
    };
    let steps = 400;
    let (mut m1, mut m2) = (0.0, 0.0);
    for i in 0..steps {
        let cb = -1.0 + (2.0 * i as f64 + 1.0) / steps as f64;
        let beta = cb.acos();
        let rot = expm(&(&sy * C64::new(0.0, -beta)));
        for j in 0..steps {
            let alpha = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / steps as f64;
            let phases: Vec<C64> = (0..d).map(|k| C64::from_polar(1.0, -alpha * (s - k as f64))).collect();
            let psi: Vec<C64> = (0..d).map(|k| phases[k] * rot[(k, 0)]).collect();
            let mut val = C64::new(0.0, 0.0);
            for r in 0..d {
                for c in 0..d {
                    val += psi[r].conj() * o[(r, c)] * psi[c];
                }
            }
            m1 += val.re;
            m2 += val.re * val.re;
        }
    }
    let count = (steps * steps) as f64;
    m2 / count - (m1 / count).powi(2)
}

/// Taylor series; `||a|| <= 2 pi` here.
fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let mut term = DMatrix::<C64>::identity(a.nrows(), a.ncols());
    let mut acc = term.clone();
    for k in 1..60 {
        term = &term * a * C64::from(1.0 / k as f64);
        acc += &term;
    }
    acc
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for two_s in 1..=4u32 {
        let s = two_s as f64 / 2.0;
        let sz = spin_matrices(two_s)[2].clone() * C64::from(1.0 / s);
        let formula = spin_variance(two_s, two_s as i32, &HermitianOp::dense(sz.clone()).unwrap()).unwrap();
        let oracle = spin_haar_oracle(two_s, &sz);
        let rel = (formula - oracle).abs() / oracle;
        ok &= (formula - 1.0 / 3.0).abs() < 1e-12 && rel < 0.02;
        parts.push(format!("S={s}: {formula:.6} vs {oracle:.6}"));
    }
    Outcome::new(ok, parts.join(", "))
}

fn criterion_8() -> Outcome {
    let n = 3;
    let inst = setup_instance(Setup::Zero, n, 0, &SetupOptions::default()).unwrap();
    let dec = decompose(&lie_closure(&inst.generators, default_dim_cap(n)).unwrap()).unwrap();
    let base = loss_variance(&inst.state, &inst.observable, &dec).unwrap().variance;
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [0.1, 0.5, 0.9] {
        let noisy = apply_global_depolarizing(&inst.state, p).unwrap();
        let exact = loss_variance(&noisy, &inst.observable, &dec).unwrap().variance;
        let expected = (1.0 - p) * (1.0 - p) * base;
        let mut spec = CircuitSpec::new(inst.generators.clone(), 5 * n).unwrap();
        spec.spam = Some(Spam { p_before: p, p_after: 0.0 });
        let opts = McOptions::new(5000, 800 + (10.0 * p) as u64).with_convergence(Convergence::default());
        let est = estimate_variance_mc(&inst.state, &inst.observable, &spec, &opts).unwrap();
        let z = est.z_score(expected);
        ok &= (exact - expected).abs() <= 1e-12 && z.abs() <= 3.0;
        parts.push(format!("p={p}: exact/base = {:.6}, z={z:+.2}", exact / base));
    }
    Outcome::new(ok, parts.join(", "))
}

/// `sigma_q |k>` as `(k', phase)` with `qubit q` on bit `q`.
fn apply_letter(letter: char, q: usize, k: usize) -> (usize, C64) {
    let b = (k >> q) & 1;
    match letter {
        'I' => (k, C64::new(1.0, 0.0)),
        'X' => (k ^ (1 << q), C64::new(1.0, 0.0)),
        'Y' => (k ^ (1 << q), if b == 0 { C64::new(0.0, 1.0) } else { C64::new(0.0, -1.0) }),
        'Z' => (k, C64::new(if b == 0 { 1.0 } else { -1.0 }, 0.0)),
        _ => unreachable!(),
    }
}

fn apply_string(p: &PauliString, k: usize) -> (usize, C64) {
    let mut out = (k, p.phase());
    for q in 0..p.n() {
        let (k2, c) = apply_letter(p.letter(q), q, out.0);
        out = (k2, out.1 * c);
    }
    out
}

fn pauli_oracle_failures(pairs: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..pairs {
        let n = rng.random_range(1..=8usize);
        let m = (1u64 << n) - 1;
        let mut draw = || PauliString::new(n, rng.random::<u64>() & m, rng.random::<u64>() & m, rng.random_range(0..4)).unwrap();
        let (a, b) = (draw(), draw());
        let prod = a.multiply(&b).unwrap();
        let mut same = true;
        let mut commute = true;
        for k in 0..1usize << n {
            let (k1, c1) = apply_string(&b, k);
            let (k2, c2) = apply_string(&a, k1);
            let (k3, c3) = apply_string(&prod, k);
            same &= k2 == k3 && (c1 * c2 - c3).norm() < 1e-12;
            let (j1, d1) = apply_string(&a, k);
            let (_, d2) = apply_string(&b, j1);
            commute &= (c1 * c2 - d1 * d2).norm() < 1e-12;
        }
        if !same || commute != a.commutes_with(&b) {
            failures += 1;
        }
    }
    failures
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> QuantumState {
    let amps: Vec<C64> = (0..1usize << n).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    QuantumState::from(StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap())
}

fn criterion_9() -> Outcome {
    let failures = pauli_oracle_failures(10_000, 9);
    let families: Vec<(&str, Vec<PauliString>, Vec<usize>, usize)> = {
        let ps = |v: &[&str]| v.iter().map(|s| s.parse().unwrap()).collect::<Vec<PauliString>>();
        let mut f = vec![("so(4)", ps(&["XX", "ZI", "IZ"]), vec![3, 3], 0)];
        for n in 2..=4 {
            f.push(("su(2)^n", local_su2_generators(n), vec![3; n], 0));
        }
        for n in 3..=6 {
            f.push(("so(2n)", tfim_generators(n), vec![n * (2 * n - 1)], 0));
        }
        f.push(("so(4)+u(1)", ps(&["XXI", "ZII", "IZI", "IIZ"]), vec![3, 3], 1));
        f
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut inv_ok = true;
    let mut additivity: f64 = 0.0;
    for (_, gens, dims, center) in &families {
        let n = gens[0].n();
        let dec = decompose(&lie_closure(gens, default_dim_cap(n)).unwrap()).unwrap();
        inv_ok &= dec.check_invariants().holds() && &dec.dims() == dims && dec.center().dim() == *center;
        let state = random_state(n, &mut rng);
        let total = g_purity(&state, &dec.full().as_component()).unwrap();
        let split = purity_report(&state, &dec, false).unwrap().total();
        additivity = additivity.max((total - split).abs());
    }
    Outcome::new(
        failures == 0 && inv_ok && additivity <= 1e-9,
        format!(
            "Pauli oracle failures {failures}/10000, decomposition invariants {}, additivity residual {additivity:.1e}",
            if inv_ok { "hold" } else { "violated" }
        ),
    )
}

fn criterion_10() -> Outcome {
    let ns: Vec<usize> = (3..=9).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for setup in Setup::ALL {
        let family = SetupFamily { setup, seed: 0, options: SetupOptions::default() };
        match bp_diagnose(&family, &ns) {
            Ok(d) => {
                let want = if setup == Setup::Three { Verdict::Bp } else { Verdict::NoBp };
                ok &= d.verdict == want;
                parts.push(format!(
                    "s{setup}: {:?} (slope {:.3}, R2 {:.3})",
                    d.verdict, d.exponential_fit.slope, d.exponential_fit.r_squared
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("s{setup}: error {e}"));
            }
        }
    }
    Outcome::new(ok, parts.join(", "))
}

fn main() {
    let criteria: [(u8, &str, fn() -> Outcome); 10] = [
        (1, "DLA dimensions", criterion_1),
        (2, "g-purity of |0...0>", criterion_2),
        (3, "exact variance vs Monte Carlo", criterion_3),
        (4, "2-design closed form", criterion_4),
        (5, "expressiveness numerics", criterion_5),
        (6, "depth bound", criterion_6),
        (7, "spin case", criterion_7),
        (8, "noise covariance", criterion_8),
        (9, "property suites", criterion_9),
        (10, "setup verdicts", criterion_10),
    ];
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome::new(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name}: {} [{:.1?}]", outcome.detail, start.elapsed());
        if !outcome.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
