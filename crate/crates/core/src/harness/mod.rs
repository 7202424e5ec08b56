//! Scenario orchestration: configuration, Monte Carlo runs, aggregation,
//! invariant checking and output files.
//!
//! Within a step the order is assimilate, then vaccinate, then propagate.
//! Runs are independent work items; results are gathered in run order before
//! any reduction, so output does not depend on the number of workers.

pub mod config;
pub mod invariants;
pub mod multilayer;
pub mod output;
pub mod school;
pub mod summary;

use std::path::{Path, PathBuf};

pub use config::{
    InfectionModel, Knowledge, LayerArm, MultilayerScenarioConfig, RandomnessMode, ScenarioConfig, ScenarioKind,
    SchoolArm, SchoolConfig, Topology, DATASET_ENV,
};
pub use invariants::{InvariantReport, InvariantTracker};
pub use output::{emit_outputs, read_curves_csv, read_summary_csv, render_svg, CurveRow, SummaryRow};
pub use school::DatasetSource;
pub use summary::{summarize, RunSummary};

use crate::community::Partition;
use crate::epidemic::{write_trajectory_csv, TrajectoryRow};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::multilayer::{write_probability_csv, ProbabilityRow};

/// Per-step compartment counts of the first run of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub scenario: String,
    pub arm: String,
    pub rows: Vec<TrajectoryRow>,
}

/// True and analysed layer probabilities from the first run of the
/// assimilated arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTrace {
    pub condition: String,
    pub rows: Vec<ProbabilityRow>,
}

#[derive(Debug, Clone, Default)]
pub struct ScenarioReport {
    pub summaries: Vec<RunSummary>,
    pub traces: Vec<RunTrace>,
    pub probabilities: Vec<ProbabilityTrace>,
    pub invariants: InvariantReport,
    pub dataset: Option<DatasetSource>,
    pub partition: Option<Partition>,
}

impl ScenarioReport {
    /// Scenario names in first-appearance order.
    pub fn scenarios(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for s in &self.summaries {
            if !names.contains(&s.scenario) {
                names.push(s.scenario.clone());
            }
        }
        names
    }

    pub fn summaries_for(&self, scenario: &str) -> Vec<RunSummary> {
        self.summaries.iter().filter(|s| s.scenario == scenario).cloned().collect()
    }

    pub fn find(&self, scenario: &str, arm: &str) -> Option<&RunSummary> {
        self.summaries.iter().find(|s| s.scenario == scenario && s.arm == arm)
    }
}

pub fn run_scenario(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioReport> {
    match cfg.scenario {
        ScenarioKind::School => school::run(cfg, exec),
        ScenarioKind::Multilayer => multilayer::run(cfg, exec),
    }
}

/// Writes every output file plus `resolved_config.toml`; returns the paths.
pub fn write_report(report: &ScenarioReport, cfg: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    let resolved = out_dir.join("resolved_config.toml");
    std::fs::write(&resolved, cfg.to_toml()?).map_err(|e| Error::io(&resolved, e))?;
    written.push(resolved);
    for scenario in report.scenarios() {
        written.extend(emit_outputs(&scenario, &report.summaries_for(&scenario), out_dir)?);
    }
    for t in &report.traces {
        let p = out_dir.join(format!("trajectory_{}_{}.csv", t.scenario, t.arm));
        write_trajectory_csv(&t.rows, &p)?;
        written.push(p);
    }
    for p in &report.probabilities {
        let path = out_dir.join(format!("probs_{}.csv", p.condition));
        write_probability_csv(&p.rows, &path)?;
        written.push(path);
    }
    if let Some(part) = &report.partition {
        let p = out_dir.join("communities.csv");
        part.write_csv(&p)?;
        written.push(p);
    }
    Ok(written)
}
