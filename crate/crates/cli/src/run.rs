//! Suite execution.

use std::path::Path;

use fibconn::genconn::{check_eta_forced_lgfb, check_gen_conditions, check_genconn_invariance, check_standard_reduction};
use fibconn::lgfb::check_lgfb_invariance;
use fibconn::numerics::Sampling;
use fibconn::transport::check_transport_homomorphism;
use fibconn::ValidationReport;

use crate::bundled;
use crate::error::ConfigError;
use crate::registry::{assemble, Assembled};
use crate::report::{ConfigEcho, RunReport, SuiteReport};
use crate::scenario::{Overrides, Scenario, SuiteId};

/// What each suite needs from the scenario.
fn requirements(id: SuiteId) -> &'static [&'static str] {
    match id {
        SuiteId::GroupAxioms => &[],
        SuiteId::LgfbConditions | SuiteId::LiftMultiplication | SuiteId::LinearityForced => &["eta"],
        SuiteId::LgfbInvariance => &["eta", "change"],
        SuiteId::GenConditions => &["eta", "connection"],
        SuiteId::EtaForced | SuiteId::StandardReduction => &["connection"],
        SuiteId::GenconnInvariance => &["eta", "connection", "change"],
        SuiteId::TransportHomomorphism => &["eta", "curve"],
    }
}

fn check_requirements(s: &Scenario, a: &Assembled) -> Result<(), ConfigError> {
    if s.suites.is_empty() {
        return Err(ConfigError::new("suites", "no suites requested"));
    }
    for (i, id) in s.suites.iter().enumerate() {
        for need in requirements(*id) {
            let present = match *need {
                "eta" => a.eta.is_some(),
                "connection" => a.connection.is_some(),
                "change" => a.change.is_some(),
                _ => a.curve.is_some(),
            };
            if !present {
                return Err(ConfigError::new(
                    format!("suites[{i}]"),
                    format!("suite {} needs `{need}`", id.as_str()),
                ));
            }
        }
        if *id == SuiteId::LinearityForced && !a.group.name().starts_with("additive") {
            return Err(ConfigError::new(format!("suites[{i}]"), "linearity-forced needs an additive group"));
        }
        if *id == SuiteId::StandardReduction && a.sigma_box.dim() != 0 {
            return Err(ConfigError::new(format!("suites[{i}]"), "standard-reduction needs n = l"));
        }
    }
    Ok(())
}

fn run_suite(id: SuiteId, s: &Scenario, a: &Assembled) -> fibconn::Result<ValidationReport> {
    let tol = a.tolerances;
    let sampling: Sampling = s.sampling;
    let mut report = match id {
        SuiteId::GroupAxioms => a
            .group
            .check_group_axioms(sampling.count, sampling.seed, tol)?
            .into_validation_report(),
        SuiteId::LgfbConditions => {
            let eta = a.eta.as_ref().expect("checked");
            eta.check_connection(sampling, tol)?
        }
        SuiteId::LiftMultiplication => {
            let eta = a.eta.as_ref().expect("checked");
            eta.check_lift_multiplication(&eta.samples(sampling), tol)?
        }
        SuiteId::LinearityForced => {
            let eta = a.eta.as_ref().expect("checked");
            eta.check_linearity_forced(&eta.samples(sampling), tol)?
        }
        SuiteId::LgfbInvariance => {
            let change = a.change.as_ref().expect("checked");
            check_lgfb_invariance(a.eta.as_ref().expect("checked"), change.base(), change.fiber(), sampling, tol)?
        }
        SuiteId::GenConditions => {
            let conn = a.connection.as_ref().expect("checked");
            check_gen_conditions(conn, a.eta.as_ref().expect("checked"), &conn.samples(sampling), tol)?
        }
        SuiteId::EtaForced => check_eta_forced_lgfb(a.connection.as_ref().expect("checked"), sampling, tol)?,
        SuiteId::GenconnInvariance => check_genconn_invariance(
            a.connection.as_ref().expect("checked"),
            a.eta.as_ref().expect("checked"),
            a.change.as_ref().expect("checked"),
            sampling,
            tol,
        )?,
        SuiteId::StandardReduction => {
            let conn = a.connection.as_ref().expect("checked");
            check_standard_reduction(conn, &conn.samples(sampling), tol)?
        }
        SuiteId::TransportHomomorphism => check_transport_homomorphism(
            a.eta.as_ref().expect("checked"),
            a.curve.as_ref().expect("checked"),
            sampling,
            s.transport_steps,
            tol,
        )?,
    };
    report.name = id.as_str().to_string();
    Ok(report)
}

/// Run every suite of an already parsed scenario.
pub fn run_parsed(mut s: Scenario, overrides: Overrides) -> Result<RunReport, ConfigError> {
    s.apply(overrides);
    let a = assemble(&s)?;
    check_requirements(&s, &a)?;
    let mut suites = Vec::with_capacity(s.suites.len());
    for (i, id) in s.suites.iter().enumerate() {
        let report = run_suite(*id, &s, &a).map_err(ConfigError::at(format!("suites[{i}]")))?;
        suites.push(SuiteReport { suite: *id, report });
    }
    let config = ConfigEcho {
        group: a.group.name().to_string(),
        dims: s.dims,
        sampling: s.sampling,
        tolerances: a.tolerances,
        transport_steps: s.transport_steps,
        suites: s.suites.clone(),
    };
    Ok(RunReport::new(s.name.clone(), config, suites))
}

/// Resolve `target` as a file path, falling back to a bundled scenario name.
pub fn load_target(target: &str) -> Result<Scenario, ConfigError> {
    let path = Path::new(target);
    if path.exists() {
        return Scenario::load(path);
    }
    match bundled::source(target) {
        Some(text) => Scenario::parse(text),
        None => Err(ConfigError::new(
            "<scenario>",
            format!("{target} is neither a readable file nor a bundled scenario"),
        )),
    }
}

pub fn run_scenario(target: &str, overrides: Overrides) -> Result<RunReport, ConfigError> {
    run_parsed(load_target(target)?, overrides)
}
