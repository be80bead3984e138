//! Statevector simulation of Pauli-rotation circuits and Monte Carlo
//! estimation of the loss mean and variance.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::pauli::{PauliString, PauliSum};
use crate::state::{depolarize, depolarize_expectation, QuantumState, MAX_SIM_QUBITS};
use crate::{tol, C64};

pub const DEFAULT_BATCHES: usize = 20;
pub const MIN_SAMPLES: usize = 100;

/// Law of each rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ParameterDistribution {
    /// Uniform on `[-pi, pi)`.
    #[default]
    UniformPeriod,
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std: f64 },
}

impl ParameterDistribution {
    fn validate(&self) -> Result<()> {
        match *self {
            Self::UniformPeriod => Ok(()),
            Self::Uniform { low, high } if low < high && low.is_finite() && high.is_finite() => Ok(()),
            Self::Normal { mean, std } if mean.is_finite() && std.is_finite() && std >= 0.0 => Ok(()),
            _ => Err(invalid(format!("invalid parameter distribution {self:?}"))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::UniformPeriod => rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            Self::Uniform { low, high } => rng.random_range(low..high),
            Self::Normal { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + std * z
            }
        }
    }
}

/// Fixed unitary `exp(-i alpha K)` inserted after gate `after_gate` of
/// every layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentError {
    pub generator: PauliString,
    pub alpha: f64,
    pub after_gate: usize,
}

/// Global depolarizing channels before and after the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spam {
    #[serde(default)]
    pub p_before: f64,
    #[serde(default)]
    pub p_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSpec {
    pub n: usize,
    pub layer_generators: Vec<PauliString>,
    pub num_layers: usize,
    #[serde(default)]
    pub parameter_distribution: ParameterDistribution,
    #[serde(default)]
    pub coherent_errors: Vec<CoherentError>,
    #[serde(default)]
    pub spam: Option<Spam>,
}

impl CircuitSpec {
    pub fn new(layer_generators: Vec<PauliString>, num_layers: usize) -> Result<Self> {
        let n = layer_generators.first().map(|g| g.n()).ok_or_else(|| invalid("empty layer"))?;
        let spec = Self {
            n,
            layer_generators,
            num_layers,
            parameter_distribution: ParameterDistribution::default(),
            coherent_errors: Vec::new(),
            spam: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_SIM_QUBITS {
            return Err(Error::TooManyQubits { n: self.n, max: MAX_SIM_QUBITS });
        }
        if self.layer_generators.is_empty() {
            return Err(invalid("empty layer"));
        }
        if self.num_layers == 0 {
            return Err(invalid("num_layers must be at least 1"));
        }
        for g in self.layer_generators.iter().chain(self.coherent_errors.iter().map(|e| &e.generator)) {
            if g.n() != self.n {
                return Err(Error::QubitMismatch { left: self.n, right: g.n() });
            }
            if !g.is_hermitian() {
                return Err(Error::NotHermitian(format!("generator {g}")));
            }
        }
        for e in &self.coherent_errors {
            if e.after_gate >= self.layer_generators.len() {
                return Err(invalid(format!("coherent error after gate {} but the layer has {} gates", e.after_gate, self.layer_generators.len())));
            }
        }
        if let Some(s) = self.spam {
            for p in [s.p_before, s.p_after] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid(format!("SPAM probability {p} outside [0, 1]")));
                }
            }
        }
        self.parameter_distribution.validate()
    }

    pub fn num_parameters(&self) -> usize {
        self.num_layers * self.layer_generators.len()
    }

    pub fn with_layers(&self, num_layers: usize) -> Self {
        Self { num_layers, ..self.clone() }
    }

    /// Generators and coherent errors together: the effective DLA generators.
    pub fn effective_generators(&self) -> Vec<PauliString> {
        let mut out = self.layer_generators.clone();
        out.extend(self.coherent_errors.iter().filter(|e| e.alpha != 0.0).map(|e| e.generator));
        out
    }

    fn run(&self, state: &mut QuantumState, mut angle: impl FnMut(usize) -> f64) {
        let g = self.layer_generators.len();
        for l in 0..self.num_layers {
            for (j, p) in self.layer_generators.iter().enumerate() {
                state.apply_pauli_rotation(p, angle(l * g + j));
                for e in self.coherent_errors.iter().filter(|e| e.after_gate == j) {
                    state.apply_pauli_rotation(&e.generator, -e.alpha);
                }
            }
        }
    }

    fn prepare(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.n() != self.n {
            return Err(Error::QubitMismatch { left: self.n, right: state.n() });
        }
        match self.spam {
            Some(s) if s.p_before > 0.0 => depolarize(state, s.p_before),
            _ => Ok(state.clone()),
        }
    }

    fn measure(&self, state: &QuantumState, obs: &PauliSum) -> f64 {
        let v = state.expectation(obs);
        match self.spam {
            Some(s) if s.p_after > 0.0 => depolarize_expectation(v, s.p_after, obs.trace(), self.n),
            _ => v,
        }
    }
}

/// `U(theta) rho U(theta)^dagger` with `exp(i theta_l P_l)` gates, coherent
/// errors and the initial SPAM channel.
pub fn apply_circuit(state: &QuantumState, spec: &CircuitSpec, theta: &[f64]) -> Result<QuantumState> {
    spec.validate()?;
    if theta.len() != spec.num_parameters() {
        return Err(invalid(format!("expected {} parameters, got {}", spec.num_parameters(), theta.len())));
    }
    let mut out = spec.prepare(state)?;
    spec.run(&mut out, |k| theta[k]);
    Ok(out)
}

/// `Tr[U rho U^dagger O]`, including final measurement noise.
pub fn loss(state: &QuantumState, observable: &PauliSum, spec: &CircuitSpec, theta: &[f64]) -> Result<f64> {
    if observable.n() != spec.n {
        return Err(Error::QubitMismatch { left: spec.n, right: observable.n() });
    }
    let out = apply_circuit(state, spec, theta)?;
    Ok(spec.measure(&out, observable))
}

/// Independent stream for sample `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Parameter vector drawn by sample `index` in [`estimate_variance_mc`].
pub fn sample_parameters(spec: &CircuitSpec, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = sample_rng(seed, index);
    (0..spec.num_parameters()).map(|_| spec.parameter_distribution.sample(&mut rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Convergence {
    #[serde(default = "Convergence::default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "Convergence::default_max_layers")]
    pub max_layers: usize,
}

impl Convergence {
    fn default_rel_tol() -> f64 {
        0.05
    }

    fn default_max_layers() -> usize {
        512
    }
}

impl Default for Convergence {
    fn default() -> Self {
        Self { rel_tol: 0.05, max_layers: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub num_samples: usize,
    pub seed: u64,
    /// Layer doubling; `None` runs the given depth only.
    pub convergence: Option<Convergence>,
    pub batches: usize,
    pub exec: Execution,
}

impl McOptions {
    pub fn new(num_samples: usize, seed: u64) -> Self {
        Self { num_samples, seed, convergence: None, batches: DEFAULT_BATCHES, exec: Execution::default() }
    }

    pub fn with_convergence(mut self, c: Convergence) -> Self {
        self.convergence = Some(c);
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.num_samples < MIN_SAMPLES {
            return Err(invalid(format!("num_samples must be at least {MIN_SAMPLES}, got {}", self.num_samples)));
        }
        if self.batches < 2 || self.batches > self.num_samples {
            return Err(invalid(format!("invalid batch count {}", self.batches)));
        }
        if let Some(c) = self.convergence {
            if !(c.rel_tol > 0.0) {
                return Err(invalid("rel_tol must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerPoint {
    pub layers: usize,
    pub variance: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub num_samples: usize,
    pub mean_hat: f64,
    pub stderr_of_mean: f64,
    pub variance_hat: f64,
    pub stderr_of_variance: f64,
    pub seed: u64,
    pub layers_used: usize,
    pub converged: bool,
    pub history: Vec<LayerPoint>,
}

impl McEstimate {
    /// `(variance_hat - exact) / stderr`.
    pub fn z_score(&self, exact: f64) -> f64 {
        if self.stderr_of_variance > 0.0 {
            (self.variance_hat - exact) / self.stderr_of_variance
        } else if (self.variance_hat - exact).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Sample statistics of a loss sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    pub stderr_of_mean: f64,
    pub variance: f64,
    pub stderr_of_variance: f64,
}

/// Mean, unbiased variance, and batch-means standard errors.
pub fn sample_stats(xs: &[f64], batches: usize) -> SampleStats {
    let n = xs.len();
    let mean = pairwise_sum(xs) / n as f64;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let variance = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
    let b = batches.clamp(2, n.max(2));
    let mut batch_vars = Vec::with_capacity(b);
    for k in 0..b {
        let (lo, hi) = (k * n / b, (k + 1) * n / b);
        let chunk = &xs[lo..hi];
        if chunk.len() < 2 {
            continue;
        }
        let m = pairwise_sum(chunk) / chunk.len() as f64;
        let d: Vec<f64> = chunk.iter().map(|x| (x - m) * (x - m)).collect();
        batch_vars.push(pairwise_sum(&d) / (chunk.len() - 1) as f64);
    }
    let stderr_of_variance = if batch_vars.len() > 1 {
        let bm = pairwise_sum(&batch_vars) / batch_vars.len() as f64;
        let d: Vec<f64> = batch_vars.iter().map(|v| (v - bm) * (v - bm)).collect();
        (pairwise_sum(&d) / (batch_vars.len() - 1) as f64 / batch_vars.len() as f64).sqrt()
    } else {
        0.0
    };
    SampleStats { mean, stderr_of_mean: (variance / n as f64).sqrt(), variance, stderr_of_variance }
}

/// Layer doubling driver shared by the circuit and brickwork estimators.
fn estimate_with<F>(layers0: usize, opts: &McOptions, sample: F) -> Result<McEstimate>
where
    F: Fn(usize, &mut ChaCha8Rng) -> f64 + Sync,
{
    opts.validate()?;
    let run = |layers: usize| -> SampleStats {
        let xs = opts.exec.map(opts.num_samples, |i| {
            let mut rng = sample_rng(opts.seed, i as u64);
            sample(layers, &mut rng)
        });
        sample_stats(&xs, opts.batches)
    };
    const VARIANCE_FLOOR: f64 = tol::REPRESENTATION * tol::REPRESENTATION;
    let mut layers = layers0;
    let mut stats = run(layers);
    let mut history = vec![LayerPoint { layers, variance: stats.variance, stderr: stats.stderr_of_variance }];
    let mut converged = true;
    if let Some(c) = opts.convergence {
        converged = false;
        while layers * 2 <= c.max_layers {
            let next_layers = layers * 2;
            let next = run(next_layers);
            history.push(LayerPoint { layers: next_layers, variance: next.variance, stderr: next.stderr_of_variance });
            let diff = (next.variance - stats.variance).abs();
            let noise = (2.0 * (next.stderr_of_variance.powi(2) + stats.stderr_of_variance.powi(2)).sqrt()).max(VARIANCE_FLOOR);
            layers = next_layers;
            stats = next;
            if diff <= c.rel_tol * stats.variance.abs() || diff <= noise {
                converged = true;
                break;
            }
        }
    }
    Ok(McEstimate {
        num_samples: opts.num_samples,
        mean_hat: stats.mean,
        stderr_of_mean: stats.stderr_of_mean,
        variance_hat: stats.variance,
        stderr_of_variance: stats.stderr_of_variance,
        seed: opts.seed,
        layers_used: layers,
        converged,
        history,
    })
}

/// Monte Carlo mean and variance of the loss over i.i.d. parameters. With
/// layer doubling the depth starts at `spec.num_layers` and doubles until
/// successive variances agree to `rel_tol` (or within their combined noise)
/// or the cap is reached.
pub fn estimate_variance_mc(
    state: &QuantumState,
    observable: &PauliSum,
    spec: &CircuitSpec,
    opts: &McOptions,
) -> Result<McEstimate> {
    spec.validate()?;
    if observable.n() != spec.n {
        return Err(Error::QubitMismatch { left: spec.n, right: observable.n() });
    }
    let prepared = spec.prepare(state)?;
    estimate_with(spec.num_layers, opts, |layers, rng| {
        let spec = spec.with_layers(layers);
        let mut s = prepared.clone();
        spec.run(&mut s, |_| spec.parameter_distribution.sample(rng));
        spec.measure(&s, observable)
    })
}

/// Haar-random `d x d` unitary from the QR decomposition of a complex
/// Ginibre matrix with the phases of `diag(R)` folded into `Q`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// Haar-random element of SU(4).
pub fn sample_haar_su4<R: Rng + ?Sized>(rng: &mut R) -> Matrix4<C64> {
    let u = sample_haar_unitary(4, rng);
    let det = u.determinant();
    let fix = C64::from_polar(1.0, -det.arg() / 4.0);
    Matrix4::from_fn(|r, c| u[(r, c)] * fix)
}

/// `exp(-i (a X + b Y + c Z))` with `a, b, c ~ N(0, sigma^2)`.
pub fn random_local_rotation<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Matrix2<C64> {
    let law = Normal::new(0.0, sigma).expect("finite sigma");
    let (a, b, c) = (law.sample(rng), law.sample(rng), law.sample(rng));
    let r = (a * a + b * b + c * c).sqrt();
    let (s, co) = r.sin_cos();
    let k = if r > 0.0 { s / r } else { 1.0 };
    let i = C64::new(0.0, 1.0);
    Matrix2::new(
        C64::from(co) - i * (k * c),
        -i * (k * a) - C64::from(k * b),
        -i * (k * a) + C64::from(k * b),
        C64::from(co) + i * (k * c),
    )
}

/// Gate positions of one brickwork layer: even pairs, then odd pairs.
pub fn brickwork_pairs(n: usize) -> Vec<(usize, usize)> {
    let even = (0..n.saturating_sub(1)).step_by(2).map(|q| (q, q + 1));
    let odd = (1..n.saturating_sub(1)).step_by(2).map(|q| (q, q + 1));
    even.chain(odd).collect()
}

/// One brickwork layer of independent Haar-SU(4) gates.
pub fn apply_brickwork_layer<R: Rng + ?Sized>(state: &mut QuantumState, rng: &mut R) {
    for (a, b) in brickwork_pairs(state.n()) {
        let u = sample_haar_su4(rng);
        state.apply_two_qubit(a, b, &u);
    }
}

/// Monte Carlo variance of `Tr[U rho U^dagger O]` over `layers` layers of
/// Haar-SU(4) brickwork.
pub fn brickwork_variance_mc(
    layers: usize,
    state: &QuantumState,
    observable: &PauliSum,
    opts: &McOptions,
) -> Result<McEstimate> {
    let n = state.n();
    if n < 2 {
        return Err(invalid("brickwork circuits need at least 2 qubits"));
    }
    if observable.n() != n {
        return Err(Error::QubitMismatch { left: n, right: observable.n() });
    }
    if layers == 0 {
        return Err(invalid("layers must be at least 1"));
    }
    estimate_with(layers, opts, |layers, rng| {
        let mut s = state.clone();
        for _ in 0..layers {
            apply_brickwork_layer(&mut s, rng);
        }
        s.expectation(observable)
    })
}
