//! Experiment configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lie_plateau::config::{ObservableSpec, StateSpec};
use lie_plateau::dla::default_dim_cap;
use lie_plateau::purity::PrepGate;
use lie_plateau::setups::{
    hardware_efficient_generators, local_su2_generators, setup_instance, tfim_generators, Setup, SetupOptions,
};
use lie_plateau::simulate::{CircuitSpec, CoherentError, Convergence, ParameterDistribution, Spam, DEFAULT_BATCHES};
use lie_plateau::{PauliString, PauliSum, QuantumState, StateVector};
use serde::{Deserialize, Serialize};

pub const DEFAULT_SAMPLES: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorFamily {
    Tfim,
    LocalSu2,
    HardwareEfficient,
}

/// Either a named family (valid for every `n`) or explicit strings.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Family(GeneratorFamily),
    Strings(Vec<PauliString>),
}

impl<'de> Deserialize<'de> for GeneratorSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct Visitor;
        impl<'de> serde::de::Visitor<'de> for Visitor {
            type Value = GeneratorSpec;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a generator family name or a list of Pauli strings")
            }

            fn visit_str<E: serde::de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                GeneratorFamily::deserialize(serde::de::value::StrDeserializer::<E>::new(v)).map(GeneratorSpec::Family)
            }

            fn visit_seq<A: serde::de::SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Self::Value, A::Error> {
                let mut list = Vec::new();
                while let Some(p) = seq.next_element::<PauliString>()? {
                    list.push(p);
                }
                Ok(GeneratorSpec::Strings(list))
            }
        }
        d.deserialize_any(Visitor)
    }
}

impl GeneratorSpec {
    fn build(&self, n: usize) -> Result<Vec<PauliString>> {
        Ok(match self {
            Self::Family(GeneratorFamily::Tfim) => tfim_generators(n),
            Self::Family(GeneratorFamily::LocalSu2) => local_su2_generators(n),
            Self::Family(GeneratorFamily::HardwareEfficient) => hardware_efficient_generators(n),
            Self::Strings(list) => {
                if list.is_empty() {
                    bail!("generators: empty list");
                }
                if let Some((i, p)) = list.iter().enumerate().find(|(_, p)| p.n() != n) {
                    bail!("generators[{i}]: {p} acts on {} qubits, expected {n}", p.n());
                }
                list.clone()
            }
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub coherent_errors: Vec<CoherentError>,
    #[serde(default)]
    pub spam: Option<Spam>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Starting depth; `None` means `5n`.
    #[serde(default)]
    pub layers: Option<usize>,
    /// Run the starting depth only, without layer doubling.
    #[serde(default)]
    pub fixed_depth: bool,
    #[serde(default)]
    pub convergence: Convergence,
    #[serde(default)]
    pub distribution: ParameterDistribution,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

fn default_batches() -> usize {
    DEFAULT_BATCHES
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            layers: None,
            fixed_depth: false,
            convergence: Convergence::default(),
            distribution: ParameterDistribution::default(),
            batches: DEFAULT_BATCHES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSpec {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// Depths at which to report the variance gap bound for the observable.
    #[serde(default)]
    pub layers: Vec<usize>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-3, 1e-6, 1e-9]
}

fn default_tol() -> f64 {
    1e-8
}

impl Default for DepthSpec {
    fn default() -> Self {
        Self { epsilons: default_epsilons(), layers: Vec::new(), tol: default_tol() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for the JSON report and CSV table; nothing is written if unset.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Inclusive `[first, last]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_range: Option<[usize; 2]>,
    /// A benchmark setup supplies generators, state and observable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<Setup>,
    /// Setups for `reproduce-si`; all four by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setups: Option<Vec<Setup>>,
    #[serde(default)]
    pub setup_options: SetupOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<ObservableSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub depth: DepthSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_cap: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Everything needed to run one system size.
#[derive(Debug, Clone)]
pub struct Problem {
    pub n: usize,
    pub setup: Option<Setup>,
    pub generators: Vec<PauliString>,
    pub state: QuantumState,
    pub prep: Vec<PrepGate>,
    pub observable: Option<PauliSum>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| anyhow::anyhow!("line {} column {}: {e}", e.line(), e.column()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.n {
            self.n = Some(n);
            self.n_range = None;
        }
        if let Some(s) = o.samples {
            self.sampling.samples = s;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out {
            self.output.dir = Some(d.clone());
        }
    }

    /// Schema checks that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        match (self.n, self.n_range) {
            (Some(_), Some(_)) => bail!("give either n or n_range, not both"),
            (Some(0), None) => bail!("n must be positive"),
            (None, Some([a, b])) if a == 0 || a > b => bail!("n_range [{a}, {b}] must be increasing and positive"),
            _ => {}
        }
        if self.setup.is_some() && (self.generators.is_some() || self.state.is_some() || self.observable.is_some()) {
            bail!("setup fixes generators, state and observable; remove those keys");
        }
        if self.n_range.is_some() {
            if matches!(self.generators, Some(GeneratorSpec::Strings(_))) {
                bail!("explicit generator strings need a single n; use a generator family with n_range");
            }
            if matches!(self.state, Some(StateSpec::Basis { .. } | StateSpec::Statevector { .. })) {
                bail!("a basis or statevector state fixes n; use prep_circuit without bits with n_range");
            }
        }
        if self.sampling.samples == 0 {
            bail!("sampling.samples must be positive");
        }
        if self.sampling.layers == Some(0) {
            bail!("sampling.layers must be positive");
        }
        if self.depth.epsilons.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            bail!("depth.epsilons must lie in (0, 1]");
        }
        Ok(())
    }

    pub fn sizes(&self) -> Result<Vec<usize>> {
        match (self.n, self.n_range) {
            (Some(n), None) => Ok(vec![n]),
            (None, Some([a, b])) => Ok((a..=b).collect()),
            _ => bail!("config needs n or n_range"),
        }
    }

    pub fn dim_cap(&self, n: usize) -> usize {
        self.dim_cap.unwrap_or_else(|| default_dim_cap(n))
    }

    pub fn problem(&self, n: usize) -> Result<Problem> {
        if let Some(setup) = self.setup {
            return self.setup_problem(setup, n);
        }
        let generators = self.generators.as_ref().context("config needs generators or setup")?.build(n)?;
        let (state, prep) = match &self.state {
            Some(s) => s.build(n).context("state")?,
            None => (StateVector::zero(n).into(), Vec::new()),
        };
        let observable = self.observable.as_ref().map(|o| o.build(n)).transpose().context("observable")?;
        Ok(Problem { n, setup: None, generators, state, prep, observable })
    }

    pub fn setup_problem(&self, setup: Setup, n: usize) -> Result<Problem> {
        let inst = setup_instance(setup, n, self.seed, &self.setup_options)?;
        Ok(Problem {
            n,
            setup: Some(setup),
            generators: inst.generators,
            state: inst.state,
            prep: inst.prep,
            observable: Some(inst.observable),
        })
    }

    pub fn circuit(&self, p: &Problem) -> Result<CircuitSpec> {
        let mut spec = CircuitSpec::new(p.generators.clone(), self.sampling.layers.unwrap_or(5 * p.n))?;
        spec.parameter_distribution = self.sampling.distribution;
        spec.coherent_errors = self.noise.coherent_errors.clone();
        spec.spam = self.noise.spam;
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        assert!(ExperimentConfig::parse(r#"{"n": 3, "nn": 4}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"n": 3, "sampling": {"sample": 10}}"#).is_err());
    }

    #[test]
    fn family_and_strings() {
        let c = ExperimentConfig::parse(r#"{"n": 3, "generators": "tfim"}"#).unwrap();
        assert_eq!(c.problem(3).unwrap().generators.len(), 5);
        let c = ExperimentConfig::parse(r#"{"n": 2, "generators": ["XX", "ZI"]}"#).unwrap();
        assert_eq!(c.problem(2).unwrap().generators.len(), 2);
        assert!(c.problem(3).is_err());
    }

    #[test]
    fn overrides_and_validation() {
        let mut c = ExperimentConfig::parse(r#"{"n_range": [3, 5], "generators": "tfim"}"#).unwrap();
        c.validate().unwrap();
        assert_eq!(c.sizes().unwrap(), vec![3, 4, 5]);
        c.apply(&Overrides { n: Some(4), samples: Some(10), seed: Some(7), out: None });
        assert_eq!(c.sizes().unwrap(), vec![4]);
        assert_eq!((c.sampling.samples, c.seed), (10, 7));
        let bad = ExperimentConfig::parse(r#"{"n": 3, "setup": 0, "generators": "tfim"}"#).unwrap();
        assert!(bad.validate().is_err());
    }
}
