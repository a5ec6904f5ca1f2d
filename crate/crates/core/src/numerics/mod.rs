//! Shared numerical services: boxes, tolerances, finite differences,
//! deterministic sampling and residual bookkeeping.

mod fd;
mod residual;
mod sampling;

pub use fd::{fd_jacobian, try_fd_jacobian};
pub use residual::{accumulate_residual, ResidualStats};
pub use sampling::{sample_points, SplitMix64};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default central-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Tolerance for analytic-vs-analytic comparisons.
pub const ANALYTIC_ABS_TOL: f64 = 1e-6;
/// Tolerance when a finite-difference oracle is part of the comparison.
pub const FD_ABS_TOL: f64 = 1e-4;
/// Condition number above which a Jacobian block is treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e8;

/// Axis-aligned box of coordinates.
///
/// Bounds may be infinite when the box describes the validity region of a
/// global chart; sampling boxes must be finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidBox(format!(
                "lower has {} entries, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::InvalidBox(format!(
                    "coordinate {i}: lower {lo} must be below upper {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    /// The whole of `R^dim`.
    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
        }
    }

    /// Zero-dimensional box, used for an empty sigma range.
    pub fn empty() -> Self {
        Self {
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    /// Strict interior membership.
    pub fn contains(&self, p: &DVector<f64>) -> bool {
        p.len() == self.dim()
            && p
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v > *lo && *v < *hi)
    }

    pub fn center(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(lo, hi)| 0.5 * (lo + hi)),
        )
    }

    pub fn widths(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.lower.iter().zip(&self.upper).map(|(lo, hi)| hi - lo),
        )
    }

    /// Cartesian product with another box, coordinates of `self` first.
    pub fn product(&self, other: &DomainBox) -> DomainBox {
        let mut lower = self.lower.clone();
        lower.extend_from_slice(&other.lower);
        let mut upper = self.upper.clone();
        upper.extend_from_slice(&other.upper);
        DomainBox { lower, upper }
    }

    /// Smallest box containing every point, padded by `margin` on each side.
    pub fn bounding(points: &[DVector<f64>], margin: f64) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidBox("no points to bound".into()))?;
        let dim = first.len();
        let mut lower = vec![f64::INFINITY; dim];
        let mut upper = vec![f64::NEG_INFINITY; dim];
        for p in points {
            for i in 0..dim {
                lower[i] = lower[i].min(p[i]);
                upper[i] = upper[i].max(p[i]);
            }
        }
        for i in 0..dim {
            lower[i] -= margin;
            upper[i] += margin;
        }
        Self::new(lower, upper)
    }
}

/// How many points to draw and from which seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
}

impl Sampling {
    pub fn new(count: usize, seed: u64) -> Self {
        Self { count, seed }
    }

    pub fn rng(&self) -> SplitMix64 {
        SplitMix64::new(self.seed)
    }
}

/// Absolute/relative tolerances and the finite-difference step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub fd_step: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            abs_tol: ANALYTIC_ABS_TOL,
            rel_tol: 1e-9,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

impl ToleranceConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, fd_step: f64) -> Result<Self> {
        let cfg = Self {
            abs_tol,
            rel_tol,
            fd_step,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Preset for comparisons that include a finite-difference oracle.
    pub fn fd_oracle() -> Self {
        Self {
            abs_tol: FD_ABS_TOL,
            ..Self::default()
        }
    }

    /// Same config with a different absolute tolerance.
    pub fn with_abs(self, abs_tol: f64) -> Self {
        Self { abs_tol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let all_positive = [self.abs_tol, self.rel_tol, self.fd_step]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_positive {
            return Err(Error::InvalidTolerance(format!(
                "all tolerances must be positive and finite: {self:?}"
            )));
        }
        if self.abs_tol > 1.0 {
            return Err(Error::InvalidTolerance(format!(
                "abs_tol {} exceeds 1",
                self.abs_tol
            )));
        }
        if self.fd_step > 1e-2 {
            return Err(Error::InvalidTolerance(format!(
                "fd_step {} exceeds 1e-2",
                self.fd_step
            )));
        }
        Ok(())
    }

    /// `max(abs_tol, rel_tol * |reference|)`.
    pub fn threshold(&self, reference: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * reference.abs())
    }
}

/// Max-abs entry of a matrix, the norm every residual in the crate uses.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Concatenate coordinate blocks into one point.
pub fn concat(parts: &[&DVector<f64>]) -> DVector<f64> {
    let len = parts.iter().map(|p| p.len()).sum();
    DVector::from_iterator(len, parts.iter().flat_map(|p| p.iter().copied()))
}

/// Split `p` into consecutive blocks of the given sizes.
pub fn split(p: &DVector<f64>, sizes: &[usize]) -> Vec<DVector<f64>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &s in sizes {
        out.push(p.rows(start, s).into_owned());
        start += s;
    }
    out
}

pub(crate) fn ensure_finite_matrix(m: &DMatrix<f64>, context: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::non_finite(context, None))
    }
}

/// Inverse of a square matrix, refusing blocks whose condition number
/// exceeds [`SINGULAR_CONDITION`].
pub fn checked_inverse(m: &DMatrix<f64>, block: &str) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            context: format!("inverse of {block}"),
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition.is_nan() || condition > SINGULAR_CONDITION {
        return Err(Error::SingularJacobian {
            block: block.to_string(),
            condition,
        });
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularJacobian {
            block: block.to_string(),
            condition,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(DomainBox::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(DomainBox::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(DomainBox::new(vec![0.0], vec![1.0]).is_ok());
    }

    #[test]
    fn box_contains_is_strict() {
        let b = DomainBox::cube(2, 0.0, 1.0).unwrap();
        assert!(b.contains(&DVector::from_vec(vec![0.5, 0.5])));
        assert!(!b.contains(&DVector::from_vec(vec![0.0, 0.5])));
        assert!(!b.contains(&DVector::from_vec(vec![0.5])));
        assert!(DomainBox::unbounded(3).contains(&DVector::from_vec(vec![1e300, -1e300, 0.0])));
    }

    #[test]
    fn tolerance_validation() {
        assert!(ToleranceConfig::default().validate().is_ok());
        assert!(ToleranceConfig::new(0.0, 1e-9, 1e-5).is_err());
        assert!(ToleranceConfig::new(2.0, 1e-9, 1e-5).is_err());
        assert!(ToleranceConfig::new(1e-6, 1e-9, 0.1).is_err());
        assert!(ToleranceConfig::new(1e-6, -1.0, 1e-5).is_err());
    }

    #[test]
    fn threshold_takes_larger_of_abs_and_rel() {
        let t = ToleranceConfig::new(1e-6, 1e-3, 1e-5).unwrap();
        assert_eq!(t.threshold(0.0), 1e-6);
        assert_eq!(t.threshold(-10.0), 1e-2);
    }

    #[test]
    fn checked_inverse_flags_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            checked_inverse(&m, "test"),
            Err(Error::SingularJacobian { .. })
        ));
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 1.0]);
        let inv = checked_inverse(&m, "test").unwrap();
        assert!(max_abs(&(m * inv - DMatrix::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn split_and_concat_are_inverse() {
        let a = DVector::from_vec(vec![1.0, 2.0]);
        let b = DVector::from_vec(vec![]);
        let c = DVector::from_vec(vec![3.0]);
        let p = concat(&[&a, &b, &c]);
        let parts = split(&p, &[2, 0, 1]);
        assert_eq!(parts, vec![a, b, c]);
    }
}
