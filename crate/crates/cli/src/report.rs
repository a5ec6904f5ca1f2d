use std::fmt::Write as _;

use fibconn::numerics::{Sampling, ToleranceConfig};
use fibconn::ValidationReport;
use serde::{Deserialize, Serialize};

use crate::scenario::{Dims, SuiteId};

pub const SCHEMA_VERSION: u32 = 1;

/// The resolved configuration a run used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub group: String,
    pub dims: Dims,
    pub sampling: Sampling,
    pub tolerances: ToleranceConfig,
    pub transport_steps: usize,
    pub suites: Vec<SuiteId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteId,
    pub report: ValidationReport,
}

/// Machine-readable outcome of one scenario run. Wall time is printed with
/// the summary table but kept out of this record so that reruns with the
/// same seed produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub scenario: String,
    pub config: ConfigEcho,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

impl RunReport {
    pub fn new(scenario: String, config: ConfigEcho, suites: Vec<SuiteReport>) -> Self {
        let passed = !suites.is_empty() && suites.iter().all(|s| s.report.passed);
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario,
            config,
            suites,
            passed,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports contain only finite numbers and strings");
        s.push('\n');
        s
    }

    /// Human-readable summary, one line per condition.
    pub fn table(&self, wall_seconds: f64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {} ({})", self.scenario, self.config.group);
        let _ = writeln!(
            out,
            "{:<24} {:<44} {:>12} {:>8} {:>8}  result",
            "suite", "condition", "max resid", "viol", "skipped"
        );
        for s in &self.suites {
            for c in &s.report.conditions {
                let _ = writeln!(
                    out,
                    "{:<24} {:<44} {:>12.3e} {:>8} {:>8}  {}",
                    s.suite.as_str(),
                    c.name,
                    c.stats.max_abs,
                    c.violations,
                    c.skipped,
                    if c.passed { "pass" } else { "FAIL" }
                );
                if !c.passed && !c.stats.worst_point.is_empty() {
                    let _ = writeln!(out, "{:<24} worst point {:?}", "", c.stats.worst_point);
                }
            }
        }
        let _ = writeln!(
            out,
            "overall: {}  ({wall_seconds:.3} s)",
            if self.passed { "PASS" } else { "FAIL" }
        );
        out
    }
}
