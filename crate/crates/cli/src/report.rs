//! JSON run reports: one document per despeckle or benchmark invocation.

use serde::{Deserialize, Serialize};

/// Echo of everything that determines a run's output.
///
/// `lambda1`/`lambda2` are the effective weights for a single run; for a
/// benchmark over several looks they are the explicit flags (`null` means
/// the per-looks preset table, times `lambda_scale`, was used).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub model: String,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub looks: Vec<u32>,
    pub seed: u64,
    pub beta: f64,
    pub max_iters: usize,
    pub rel_change_tol: f64,
    pub bank_path: Option<String>,
    pub lambda_scale: f64,
    pub peak: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MetricsPair {
    pub psnr: f64,
    pub ssim: f64,
}

/// Per-(image, looks) benchmark row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageEntry {
    pub name: String,
    #[serde(rename = "L")]
    pub looks: u32,
    pub noisy: MetricsPair,
    pub restored: MetricsPair,
    pub iterations: usize,
    pub seconds: f64,
}

/// Per-looks dataset averages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AverageEntry {
    #[serde(rename = "L")]
    pub looks: u32,
    pub noisy: MetricsPair,
    pub restored: MetricsPair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureEntry {
    pub name: String,
    #[serde(rename = "L")]
    pub looks: u32,
    pub error: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub run_config: ConfigEcho,
    pub bank_source: String,
    pub per_image: Vec<ImageEntry>,
    pub averages: Vec<AverageEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FailureEntry>,
}

/// Report for a single despeckle run (no reference image, so no metrics).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DespeckleReport {
    pub run_config: ConfigEcho,
    pub bank_source: String,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_rel_change: f64,
    pub max_newton_iterations: u32,
    pub seconds: f64,
}
