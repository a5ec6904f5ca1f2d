//! Scenario files: JSON documents naming a group, connection fields,
//! an optional chart change and curve, and the suites to run.

use std::path::Path;

use fibconn::numerics::{Sampling, ToleranceConfig};
use fibconn::transport::PolynomialCurve;
use fibconn::DomainBox;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Row-major matrix as a list of rows.
pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// `additive:<l>`, `heisenberg`, `aff1` or `so2`.
    pub group: String,
    pub dims: Dims,
    pub base_box: BoxSpec,
    #[serde(default)]
    pub sigma_box: Option<BoxSpec>,
    #[serde(default)]
    pub eta: Option<EtaSpec>,
    #[serde(default)]
    pub connection: Option<ConnectionSpec>,
    #[serde(default)]
    pub change: Option<ChangeSpec>,
    #[serde(default)]
    pub curve: Option<PolynomialCurve>,
    #[serde(default = "default_steps")]
    pub transport_steps: usize,
    pub suites: Vec<SuiteId>,
    pub sampling: Sampling,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
}

fn default_steps() -> usize {
    64
}

/// `m` base, `n` total fiber and `l` group dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub m: usize,
    pub n: usize,
    pub l: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSpec {
    pub fn to_box(&self, key: &str) -> Result<DomainBox, ConfigError> {
        DomainBox::new(self.lower.clone(), self.upper.clone()).map_err(|e| ConfigError::new(key, e.to_string()))
    }
}

/// Tolerances with every field optional; missing values take the library
/// defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default)]
    pub abs_tol: Option<f64>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub fd_step: Option<f64>,
}

impl ToleranceSpec {
    pub fn resolve(&self) -> ToleranceConfig {
        let d = ToleranceConfig::default();
        ToleranceConfig {
            abs_tol: self.abs_tol.unwrap_or(d.abs_tol),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            fd_step: self.fd_step.unwrap_or(d.fd_step),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteId {
    GroupAxioms,
    LgfbConditions,
    LiftMultiplication,
    LinearityForced,
    LgfbInvariance,
    GenConditions,
    EtaForced,
    GenconnInvariance,
    StandardReduction,
    TransportHomomorphism,
}

impl SuiteId {
    pub fn as_str(&self) -> &'static str {
        match self {
            SuiteId::GroupAxioms => "group-axioms",
            SuiteId::LgfbConditions => "lgfb-conditions",
            SuiteId::LiftMultiplication => "lift-multiplication",
            SuiteId::LinearityForced => "linearity-forced",
            SuiteId::LgfbInvariance => "lgfb-invariance",
            SuiteId::GenConditions => "gen-conditions",
            SuiteId::EtaForced => "eta-forced",
            SuiteId::GenconnInvariance => "genconn-invariance",
            SuiteId::StandardReduction => "standard-reduction",
            SuiteId::TransportHomomorphism => "transport-homomorphism",
        }
    }
}

/// Registered Lie group fiber bundle connection fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EtaSpec {
    Trivial,
    /// `N_mu(x) = matrices[mu] + (x_1 + ... + x_m) coupling[mu]`.
    Linear {
        matrices: Vec<Rows>,
        #[serde(default)]
        coupling: Option<Vec<Rows>>,
    },
    /// `xi(x) = xi + (x_1 + ... + x_m) slope`.
    InnerDerivation {
        xi: Rows,
        #[serde(default)]
        slope: Option<Rows>,
    },
    /// One row `(alpha, beta, c, d, a, b)` per base direction.
    HeisenbergDerivation { coeffs: Rows },
    /// One row `(alpha, beta)` per base direction.
    Aff1Derivation { coeffs: Rows },
    /// `eta(x, v)^I_mu = (v^I)^2`, not multiplicative.
    Square,
    /// `factor * of`.
    Scaled { factor: f64, of: Box<EtaSpec> },
}

/// Registered generalized connection fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnectionSpec {
    /// `A_mu = eta`, `A_theta = 0`.
    FromEta,
    /// Smooth pseudo-random boundary data combined with the scenario's eta.
    FromBoundary { seed: u64 },
    /// `A(x, v) = sigma_field + N(x) v` with `N` given as for a linear eta.
    Affine {
        sigma_field: Rows,
        matrices: Vec<Rows>,
        #[serde(default)]
        coupling: Option<Vec<Rows>>,
    },
    /// `A(x, g) = D1(e, g) boundary`, no sigma coordinates.
    StandardFromIdentity { boundary: Rows },
    /// `A(x, g)^I_mu = g^I`, fails right equivariance.
    FiberDependent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeSpec {
    pub base: BaseSpec,
    pub fiber: FiberSpec,
    #[serde(default)]
    pub sigma: SigmaSpec,
    #[serde(default)]
    pub phi: PhiSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseSpec {
    Identity,
    /// `x' = x + c x^2` componentwise.
    Polynomial { c: f64 },
    /// `x' = matrix x + offset`.
    Affine { matrix: Rows, offset: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FiberSpec {
    Identity,
    /// Rotation of the additive plane by `rate * sum(x)`.
    Rotation2 { rate: f64 },
    /// `v -> (matrix + sum(x) slope) v` on an additive group.
    Linear {
        matrix: Rows,
        #[serde(default)]
        slope: Option<Rows>,
    },
    /// Conjugation by `k(x) = offset + matrix x`.
    Inner { offset: Vec<f64>, matrix: Rows },
    /// `(a, b, c) -> (s a, t b, s t c)`, `s = exp(alpha . x)`, `t = exp(beta . x)`.
    HeisenbergScaling { alpha: Vec<f64>, beta: Vec<f64> },
    /// Apply `parts` in order.
    Compose { parts: Vec<FiberSpec> },
    /// `v -> v + c v^2` componentwise, not an automorphism.
    Bent { c: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SigmaSpec {
    #[default]
    Identity,
    /// `sigma'_k = exp(a x_1) sigma_k + b sin(x_1 + k)`.
    ScaleShift { a: f64, b: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhiSpec {
    #[default]
    Identity,
    /// `phi(z) = e + linear z + quadratic z^2` with `z = (x, sigma)`.
    Polynomial {
        linear: Rows,
        #[serde(default)]
        quadratic: Option<Rows>,
    },
}

/// Command-line overrides; each present value replaces the file's.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub abs_tol: Option<f64>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let key = if path.is_empty() || path == "." { "<root>".to_string() } else { path };
            ConfigError::new(key, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(seed) = o.seed {
            self.sampling.seed = seed;
        }
        if let Some(count) = o.samples {
            self.sampling.count = count;
        }
        if let Some(tol) = o.abs_tol {
            self.tolerances.abs_tol = Some(tol);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t", "group": "additive:2", "dims": {"m": 1, "n": 2, "l": 2},
        "base_box": {"lower": [-1], "upper": [1]},
        "eta": {"kind": "trivial"},
        "suites": ["lgfb-conditions"],
        "sampling": {"count": 10, "seed": 3}
    }"#;

    #[test]
    fn minimal_scenario_parses_with_defaults() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.transport_steps, 64);
        assert_eq!(s.tolerances.resolve(), ToleranceConfig::default());
        assert_eq!(s.eta, Some(EtaSpec::Trivial));
    }

    #[test]
    fn unknown_kind_names_the_key() {
        let bad = MINIMAL.replace("\"trivial\"", "\"nonsense\"");
        let err = Scenario::parse(&bad).unwrap_err();
        assert!(err.key.starts_with("eta"), "{err}");
    }

    #[test]
    fn overrides_take_precedence() {
        let mut s = Scenario::parse(MINIMAL).unwrap();
        s.apply(Overrides { seed: Some(9), samples: Some(5), abs_tol: Some(1e-3) });
        assert_eq!(s.sampling, Sampling::new(5, 9));
        assert_eq!(s.tolerances.resolve().abs_tol, 1e-3);
    }
}
