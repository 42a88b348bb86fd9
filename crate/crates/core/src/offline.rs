//! Batch procedures: Benjamini–Hochberg, Storey-BH, and Storey-BH with
//! discarding (D-StBH).
//!
//! D-StBH estimates the null proportion only from p-values in `(λ, τ]`,
//!
//! ```text
//! π̂0 = (1 + #{i : λ < p_i ≤ τ}) / (n (τ − λ)),
//! FDP-hat(s) = n s π̂0 / (#{j : p_j ≤ s} ∨ 1),
//! ```
//!
//! and rejects every `p_i ≤ ŝ` for the largest admissible threshold `ŝ`.
//! Thresholds are searched over the observed p-values (plus 0) up to `λ`:
//! between observed values the denominator is fixed and FDP-hat increases
//! in `s`, so the maximizer always sits on a grid point.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::types::check_p;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchResult {
    /// Rejected 1-based indices, ascending.
    pub rejected: Vec<usize>,
    /// Threshold `ŝ`; everything at or below it is rejected.
    pub threshold: f64,
    /// `π̂0`, adaptive procedures only.
    pub pi0_hat: Option<f64>,
}

impl BatchResult {
    fn from_threshold(pvalues: &[f64], threshold: f64, pi0_hat: Option<f64>) -> Self {
        let rejected = pvalues.iter().enumerate().filter(|(_, &p)| p <= threshold).map(|(i, _)| i + 1).collect();
        Self { rejected, threshold, pi0_hat }
    }

    pub fn num_rejections(&self) -> usize {
        self.rejected.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BatchMethod {
    Bh,
    StoreyBh,
    DStBh,
}

impl std::str::FromStr for BatchMethod {
    type Err = crate::error::FdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bh" => Ok(BatchMethod::Bh),
            "storey-bh" | "storey" | "stbh" => Ok(BatchMethod::StoreyBh),
            "d-stbh" | "dstbh" => Ok(BatchMethod::DStBh),
            other => Err(invalid(format!("unknown batch method '{other}', expected bh, storey-bh or d-stbh"))),
        }
    }
}

fn check_all(pvalues: &[f64], alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    pvalues.iter().try_for_each(|&p| check_p(p))
}

fn sorted(pvalues: &[f64]) -> Vec<f64> {
    let mut v = pvalues.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Step-up BH: `ŝ = max{p_(k) : p_(k) ≤ αk/n}`, or 0 when nothing qualifies.
pub fn bh(pvalues: &[f64], alpha: f64) -> Result<BatchResult> {
    check_all(pvalues, alpha)?;
    let n = pvalues.len();
    let order = sorted(pvalues);
    let last = order.iter().enumerate().rev().find(|(i, &p)| p <= alpha * (i + 1) as f64 / n as f64);
    match last {
        Some((_, &p)) => Ok(BatchResult::from_threshold(pvalues, p, None)),
        None => Ok(BatchResult { rejected: Vec::new(), threshold: 0.0, pi0_hat: None }),
    }
}

/// Storey-BH: D-StBH with `τ = 1`.
pub fn storey_bh(pvalues: &[f64], alpha: f64, lambda: f64) -> Result<BatchResult> {
    d_stbh(pvalues, alpha, lambda, 1.0)
}

/// `π̂0 = (1 + #{λ < p ≤ τ}) / (n (τ − λ))`.
pub fn discarding_pi0(pvalues: &[f64], lambda: f64, tau: f64) -> f64 {
    let n = pvalues.len() as f64;
    let middle = pvalues.iter().filter(|&&p| lambda < p && p <= tau).count() as f64;
    (1.0 + middle) / (n * (tau - lambda))
}

/// Storey-BH with discarding.
pub fn d_stbh(pvalues: &[f64], alpha: f64, lambda: f64, tau: f64) -> Result<BatchResult> {
    check_all(pvalues, alpha)?;
    if !(lambda >= 0.0 && lambda < tau && tau <= 1.0) {
        return Err(invalid(format!("need 0 ≤ lambda < tau ≤ 1, got lambda={lambda}, tau={tau}")));
    }
    if pvalues.is_empty() {
        return Ok(BatchResult { rejected: Vec::new(), threshold: 0.0, pi0_hat: None });
    }
    let n = pvalues.len() as f64;
    let pi0 = discarding_pi0(pvalues, lambda, tau);
    let order = sorted(pvalues);
    let cap = lambda.min(tau);
    // walk the observed values up to the cap; count = #{p_j ≤ s}
    let mut threshold = 0.0;
    let mut i = 0;
    while i < order.len() && order[i] <= cap {
        let s = order[i];
        while i < order.len() && order[i] == s {
            i += 1;
        }
        let fdp = n * s * pi0 / (i.max(1) as f64);
        if fdp <= alpha {
            threshold = s;
        }
    }
    Ok(BatchResult::from_threshold(pvalues, threshold, Some(pi0)))
}

pub fn run_batch(method: BatchMethod, pvalues: &[f64], alpha: f64, lambda: f64, tau: f64) -> Result<BatchResult> {
    match method {
        BatchMethod::Bh => bh(pvalues, alpha),
        BatchMethod::StoreyBh => storey_bh(pvalues, alpha, lambda),
        BatchMethod::DStBh => d_stbh(pvalues, alpha, lambda, tau),
    }
}
