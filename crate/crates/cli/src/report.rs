//! JSON run reports and CSV tables.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use lie_plateau::dla::DlaManifest;
use lie_plateau::moments::ExpressivenessReport;
use lie_plateau::purity::{PrepGate, PurityReport};
use lie_plateau::setups::Setup;
use lie_plateau::simulate::McEstimate;
use lie_plateau::variance::{BpDiagnosis, VariancePrediction};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Truncated,
    OutsideTheory,
    NotConverged,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Error => 1,
            Status::Truncated => 2,
            Status::OutsideTheory => 3,
            Status::NotConverged => 4,
        }
    }

    /// The more severe of two statuses, by exit code.
    pub fn worst(self, other: Status) -> Status {
        if other.exit_code() > self.exit_code() {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PurityBlock {
    pub state: PurityReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<PurityReport>,
    /// `Tr[O^2]`, the purity of `O` over all operators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable_norm_sq: Option<f64>,
}

/// Results for one system size (and setup, where relevant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointReport {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup: Option<Setup>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prep: Vec<PrepGate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dla: Option<DlaManifest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purity: Option<PurityBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<VariancePrediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expressiveness: Option<ExpressivenessReport>,
}

impl PointReport {
    pub fn new(n: usize, setup: Option<Setup>) -> Self {
        Self {
            n,
            setup,
            status: Status::Ok,
            message: None,
            prep: Vec::new(),
            dla: None,
            purity: None,
            variance: None,
            monte_carlo: None,
            expressiveness: None,
        }
    }

    pub fn fail(&mut self, status: Status, message: impl Into<String>) {
        self.status = self.status.worst(status);
        self.message = Some(message.into());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix_s: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub status: Status,
    pub points: Vec<PointReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnosis: Vec<BpDiagnosis>,
    pub wall_clock: WallClock,
}

impl RunReport {
    pub fn new(command: &str, config: &ExperimentConfig, started: SystemTime, points: Vec<PointReport>) -> Self {
        let status = points.iter().fold(Status::Ok, |s, p| s.worst(p.status));
        let started_unix_s = started.duration_since(UNIX_EPOCH).unwrap_or(Duration::ZERO).as_secs_f64();
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config: config.clone(),
            status,
            points,
            diagnosis: Vec::new(),
            wall_clock: WallClock { started_unix_s, elapsed_s: started.elapsed().unwrap_or(Duration::ZERO).as_secs_f64() },
        }
    }
}

/// Write `bytes` to `path` via a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
    write_atomic(path, &bytes)
}
