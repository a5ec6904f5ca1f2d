use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Running max/mean of absolute residuals and the point that produced the
/// largest one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub count: usize,
    pub worst_point: Vec<f64>,
    #[serde(skip)]
    sum_abs: f64,
}

impl Default for ResidualStats {
    fn default() -> Self {
        Self::new()
    }
}

impl ResidualStats {
    pub fn new() -> Self {
        Self {
            max_abs: 0.0,
            mean_abs: 0.0,
            count: 0,
            worst_point: Vec::new(),
            sum_abs: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Fold one residual in place.
    pub fn push(&mut self, value: f64, point: &[f64]) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::non_finite("accumulate_residual", None));
        }
        let v = value.abs();
        if self.count == 0 || v > self.max_abs {
            self.max_abs = v;
            self.worst_point = point.to_vec();
        }
        self.count += 1;
        self.sum_abs += v;
        self.mean_abs = self.sum_abs / self.count as f64;
        Ok(())
    }

    /// Associative merge of two partial folds. Ties on the maximum keep the
    /// left-hand worst point.
    pub fn merge(&self, other: &ResidualStats) -> ResidualStats {
        if other.count == 0 {
            return self.clone();
        }
        if self.count == 0 {
            return other.clone();
        }
        let (max_abs, worst_point) = if other.max_abs > self.max_abs {
            (other.max_abs, other.worst_point.clone())
        } else {
            (self.max_abs, self.worst_point.clone())
        };
        let count = self.count + other.count;
        let sum_abs = self.sum_abs + other.sum_abs;
        ResidualStats {
            max_abs,
            mean_abs: sum_abs / count as f64,
            count,
            worst_point,
            sum_abs,
        }
    }
}

/// Functional form of [`ResidualStats::push`].
pub fn accumulate_residual(stats: ResidualStats, value: f64, point: &[f64]) -> Result<ResidualStats> {
    let mut stats = stats;
    stats.push(value, point)?;
    Ok(stats)
}
