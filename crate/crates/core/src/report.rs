//! Per-condition residual reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ResidualStats, ToleranceConfig};

/// Residuals of one identity over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub stats: ResidualStats,
    /// Number of samples whose residual exceeded `max(abs_tol, rel_tol*|ref|)`.
    pub violations: usize,
    /// Samples skipped because a product or transformed point left a chart.
    pub skipped: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub passed: bool,
}

/// Outcome of a validation suite: one entry per checked identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub name: String,
    pub conditions: Vec<ConditionReport>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn new(name: impl Into<String>, conditions: Vec<ConditionReport>) -> Self {
        let passed = !conditions.is_empty() && conditions.iter().all(|c| c.passed);
        Self {
            name: name.into(),
            conditions,
            passed,
        }
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Largest residual across all conditions.
    pub fn max_residual(&self) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.stats.max_abs)
            .fold(0.0, f64::max)
    }

    /// Combine several reports into one, prefixing condition names.
    pub fn combine(name: impl Into<String>, parts: Vec<ValidationReport>) -> Self {
        let conditions = parts
            .into_iter()
            .flat_map(|r| {
                let prefix = r.name;
                r.conditions.into_iter().map(move |mut c| {
                    c.name = format!("{prefix}/{}", c.name);
                    c
                })
            })
            .collect();
        Self::new(name, conditions)
    }
}

/// Accumulates residuals for one condition.
#[derive(Debug, Clone)]
pub struct ConditionCheck {
    name: String,
    tol: ToleranceConfig,
    stats: ResidualStats,
    violations: usize,
    skipped: usize,
}

impl ConditionCheck {
    pub fn new(name: impl Into<String>, tol: ToleranceConfig) -> Self {
        Self {
            name: name.into(),
            tol,
            stats: ResidualStats::new(),
            violations: 0,
            skipped: 0,
        }
    }

    /// Record one residual; `reference` scales the relative tolerance.
    pub fn record(&mut self, residual: f64, reference: f64, point: &[f64]) -> Result<()> {
        self.stats.push(residual, point)?;
        if residual.abs() > self.tol.threshold(reference) {
            self.violations += 1;
        }
        Ok(())
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Record the outcome of a fallible evaluation: chart exits are counted
    /// as skipped, other errors propagate.
    pub fn record_result(&mut self, outcome: Result<(f64, f64)>, point: &[f64]) -> Result<()> {
        match outcome {
            Ok((residual, reference)) => self.record(residual, reference, point),
            Err(e) if e.is_chart_exit() => {
                self.skip();
                Ok(())
            }
            Err(Error::NumericalFailure { .. }) => {
                // a residual that cannot be evaluated is a failed sample
                self.stats.push(f64::MAX, point)?;
                self.violations += 1;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    pub fn finish(self) -> ConditionReport {
        let passed = self.stats.count > 0 && self.violations == 0;
        ConditionReport {
            name: self.name,
            stats: self.stats,
            violations: self.violations,
            skipped: self.skipped,
            abs_tol: self.tol.abs_tol,
            rel_tol: self.tol.rel_tol,
            passed,
        }
    }
}
