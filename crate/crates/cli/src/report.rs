use serde::Serialize;

use crate::config::ResolvedConfig;

pub const TOOL: &str = "altdesign";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Complete,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub stage: String,
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObjectiveInfo {
    pub name: String,
    /// `log` efficiencies divide the loss difference by `p`; `ratio` divides losses.
    pub efficiency_scale: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValueEntry {
    pub objective: String,
    /// `null` when the design is inadmissible for this objective.
    pub value: Option<f64>,
    pub se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    pub best_restart: usize,
    /// Final value of each restart; `null` for infeasible starts.
    pub restart_values: Vec<Option<f64>>,
    pub sweeps: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Label of the design this one was seeded from when another search's result was better.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_seeded_from: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub label: String,
    pub source: String,
    /// Unique treatments.
    pub q: usize,
    /// Pure-error degrees of freedom, `n - q`.
    pub d: usize,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<ValueEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSummary>,
}

/// Rows are designs, columns objectives, entries percentages.
#[derive(Debug, Clone, Serialize)]
pub struct EfficiencyMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub percent: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub config: ResolvedConfig,
    pub objectives: Vec<ObjectiveInfo>,
    pub designs: Vec<DesignReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub efficiency: Option<EfficiencyMatrix>,
}

impl Report {
    pub fn new(command: &str, config: ResolvedConfig) -> Report {
        Report {
            tool: TOOL,
            version: VERSION,
            command: command.into(),
            status: Status::Complete,
            failure: None,
            config,
            objectives: Vec::new(),
            designs: Vec::new(),
            efficiency: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Wall-clock measurements, kept out of the report so reports stay reproducible.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub threads: usize,
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}
