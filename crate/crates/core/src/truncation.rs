use serde::{Deserialize, Serialize};

use crate::error::{QgpeError, Result};

/// Discarded-weight tolerance used when only a bond cap is given.
pub const DEFAULT_EPS: f64 = 1e-16;

/// Rule for cutting singular values at a bond.
///
/// Weights are the squared singular values normalized to sum to one. The
/// retained rank `χ` is the smallest one whose discarded tail weight is at
/// most `eps`, extended over exact ties at the cut, and then capped by
/// `chi_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationPolicy {
    pub chi_max: Option<usize>,
    pub eps: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { chi_max: None, eps: DEFAULT_EPS }
    }
}

impl TruncationPolicy {
    /// Tolerance-only policy.
    pub fn with_eps(eps: f64) -> Result<Self> {
        Self::new(None, Some(eps))
    }

    /// Bond cap with the default tolerance.
    pub fn with_chi_max(chi_max: usize) -> Result<Self> {
        Self::new(Some(chi_max), None)
    }

    pub fn new(chi_max: Option<usize>, eps: Option<f64>) -> Result<Self> {
        if chi_max.is_none() && eps.is_none() {
            return Err(QgpeError::Argument("truncation policy needs chi_max or eps".into()));
        }
        if chi_max == Some(0) {
            return Err(QgpeError::Argument("chi_max must be positive".into()));
        }
        let eps = eps.unwrap_or(DEFAULT_EPS);
        if !(eps.is_finite() && (0.0..1.0).contains(&eps)) {
            return Err(QgpeError::Argument(format!("eps must lie in [0, 1), got {eps}")));
        }
        Ok(TruncationPolicy { chi_max, eps })
    }

    /// Keep every nonzero singular value.
    pub fn exact() -> Self {
        TruncationPolicy { chi_max: None, eps: 0.0 }
    }

    /// Number of singular values to keep from a descending list, together with
    /// the discarded normalized weight.
    pub fn retained(&self, singular_values: &[f64]) -> (usize, f64) {
        let n = singular_values.len();
        if n == 0 {
            return (0, 0.0);
        }
        let total: f64 = singular_values.iter().map(|s| s * s).sum();
        if total <= 0.0 || !total.is_finite() {
            return (1, 0.0);
        }
        // tail[j] = normalized weight of singular values j.. (exclusive prefix).
        let mut tail = vec![0.0; n + 1];
        for j in (0..n).rev() {
            tail[j] = tail[j + 1] + singular_values[j] * singular_values[j] / total;
        }
        let mut keep = (1..=n).find(|&k| tail[k] <= self.eps).unwrap_or(n);
        while keep < n && singular_values[keep] == singular_values[keep - 1] && singular_values[keep] > 0.0 {
            keep += 1;
        }
        if let Some(cap) = self.chi_max {
            keep = keep.min(cap);
        }
        let keep = keep.max(1);
        (keep, tail[keep])
    }
}
