use serde::Serialize;
use sharp_ssl::eval::Recovery;

use crate::args::FinalArg;
use crate::config::{DataSettings, EnsembleSettings};

pub const SCHEMA_VERSION: u32 = 1;

/// JSON document written by `select` and `cluster`. Coordinates are 0-based
/// column positions among the feature columns; labels are 1-based.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub config: ReportConfig,
    pub data: DataSummary,
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
    pub importance: Vec<f64>,
    pub final_labels: Option<Vec<usize>>,
    pub metrics: Metrics,
    pub projection_failures: usize,
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportConfig {
    pub data: DataSettings,
    pub ensemble: EnsembleSettings,
    #[serde(rename = "final")]
    pub final_method: Option<FinalArg>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub n_labeled: usize,
    pub feature_names: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Metrics {
    /// Against the truth column, over every row.
    pub misclustering: Option<f64>,
    /// Against the truth column, over rows without an observed label.
    pub misclustering_unlabeled: Option<f64>,
    /// Against `--support`.
    pub recovery: Option<Recovery>,
}

/// Seconds spent per phase.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub load: f64,
    pub select: f64,
    pub assign: Option<f64>,
}
