//! Lie group fiber bundle connections and generalized principal connections
//! in local coordinates.
//!
//! Everything here works with coefficient fields evaluated at sampled
//! points: a connection is a closure returning its coefficient matrix, and
//! each characterization or transformation law is checked by computing its
//! residual on a deterministic sample set.

pub mod atlas;
pub mod error;
pub mod genconn;
pub mod lgfb;
pub mod liegroup;
pub mod numerics;
pub mod report;
pub mod transport;

pub use atlas::{BaseChange, FiberAutomorphismField, GpbChange, GpbPoint, PairPoint, SigmaChange};
pub use error::{Error, Result};
pub use genconn::{BoundaryData, GenConnectionField, GenSample};
pub use lgfb::{LgfbConnectionField, LgfbSample, TangentVector};
pub use liegroup::{Group, GroupAxiomReport, LieGroupModel};
pub use numerics::{DomainBox, ResidualStats, Sampling, ToleranceConfig};
pub use report::{ConditionReport, ValidationReport};
pub use transport::{BaseCurve, PolynomialCurve, TransportResult};
