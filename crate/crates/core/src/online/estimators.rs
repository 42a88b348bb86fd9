//! Empirical upper bounds on the oracle `FDP*(t) = Σ_{j≤t, j∈H0} α_j / (|R(t)| ∨ 1)`.
//!
//! Each online rule in this crate keeps one of these at or below `α` at every step.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::normal::{cdf_unchecked, quantile_unchecked};
use crate::types::{DecisionRecord, StreamTruth};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdpEstimator {
    /// `Σ α_j 1{λ_j < P_j ≤ τ_j} / (τ_j − λ_j)`.
    Addis,
    /// `Σ α_j 1{P_j > λ_j} / (1 − λ_j)`.
    Saffron,
    /// `Σ α_j`.
    LordPlusPlus,
    /// `Σ (α_j / τ_j) 1{P_j ≤ τ_j}`.
    DLord,
}

impl FdpEstimator {
    #[inline]
    pub fn contribution(&self, r: &DecisionRecord) -> f64 {
        match self {
            FdpEstimator::Addis => {
                if r.lambda_t < r.p && r.p <= r.tau_t {
                    r.alpha_t / (r.tau_t - r.lambda_t)
                } else {
                    0.0
                }
            }
            FdpEstimator::Saffron => {
                if r.p > r.lambda_t {
                    r.alpha_t / (1.0 - r.lambda_t)
                } else {
                    0.0
                }
            }
            FdpEstimator::LordPlusPlus => r.alpha_t,
            FdpEstimator::DLord => {
                if r.p <= r.tau_t {
                    r.alpha_t / r.tau_t
                } else {
                    0.0
                }
            }
        }
    }

    /// Estimate over the whole log.
    pub fn estimate(&self, log: &[DecisionRecord]) -> f64 {
        let numerator: f64 = log.iter().map(|r| self.contribution(r)).sum();
        let rejections = log.iter().filter(|r| r.rejected).count();
        numerator / rejections.max(1) as f64
    }

    /// Estimate after every prefix `1..=t`.
    pub fn trajectory(&self, log: &[DecisionRecord]) -> Vec<f64> {
        let mut numerator = 0.0;
        let mut rejections = 0usize;
        log.iter()
            .map(|r| {
                numerator += self.contribution(r);
                rejections += usize::from(r.rejected);
                numerator / rejections.max(1) as f64
            })
            .collect()
    }
}

pub fn fdp_hat_addis(log: &[DecisionRecord]) -> f64 {
    FdpEstimator::Addis.estimate(log)
}

pub fn fdp_hat_saffron(log: &[DecisionRecord]) -> f64 {
    FdpEstimator::Saffron.estimate(log)
}

pub fn fdp_hat_lordpp(log: &[DecisionRecord]) -> f64 {
    FdpEstimator::LordPlusPlus.estimate(log)
}

pub fn fdp_hat_dlord(log: &[DecisionRecord]) -> f64 {
    FdpEstimator::DLord.estimate(log)
}

/// `FDP*(t)`, computable only when the null set is known.
pub fn oracle_fdp(log: &[DecisionRecord], truth: &StreamTruth) -> f64 {
    let numerator: f64 = log.iter().filter(|r| truth.is_null(r.index)).map(|r| r.alpha_t).sum();
    let rejections = log.iter().filter(|r| r.rejected).count();
    numerator / rejections.max(1) as f64
}

/// Monte-Carlo comparison of the two per-null penalty expectations
/// `P(ab < P ≤ b) / (b(1−a))` (discarding + adaptivity) and `P(P > a) / (1−a)`
/// (adaptivity only), for `P = Φ(−Z)`, `Z ~ N(μ_N, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaEstimate {
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    /// Standard error of `lhs − rhs` from the paired per-sample differences.
    pub diff_se: f64,
    pub samples: usize,
}

impl LemmaEstimate {
    /// `lhs ≤ rhs + k·SE`.
    pub fn lhs_within(&self, k: f64) -> bool {
        self.lhs <= self.rhs + k * self.diff_se
    }
}

pub fn check_lemma_estimates(a: f64, b: f64, mu_null: f64, n_samples: usize, seed: u64) -> Result<LemmaEstimate> {
    if !(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0) {
        return Err(invalid(format!("a and b must lie in (0, 1), got a={a}, b={b}")));
    }
    if !(mu_null <= 0.0) {
        return Err(invalid(format!("null mean must be ≤ 0, got {mu_null}")));
    }
    if n_samples < 2 {
        return Err(invalid("need at least two samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lhs_scale = 1.0 / (b * (1.0 - a));
    let rhs_scale = 1.0 / (1.0 - a);
    let (mut s_l, mut s_r, mut ss_l, mut ss_r, mut ss_d, mut s_d) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..n_samples {
        let u: f64 = rng.sample(rand_distr::Open01);
        let z = mu_null + quantile_unchecked(u);
        let p = cdf_unchecked(-z);
        let l = if a * b < p && p <= b { lhs_scale } else { 0.0 };
        let r = if p > a { rhs_scale } else { 0.0 };
        s_l += l;
        s_r += r;
        ss_l += l * l;
        ss_r += r * r;
        s_d += l - r;
        ss_d += (l - r) * (l - r);
    }
    let n = n_samples as f64;
    let se = |s: f64, ss: f64| ((ss / n - (s / n).powi(2)).max(0.0) / (n - 1.0)).sqrt();
    Ok(LemmaEstimate {
        lhs: s_l / n,
        lhs_se: se(s_l, ss_l),
        rhs: s_r / n,
        rhs_se: se(s_r, ss_r),
        diff_se: se(s_d, ss_d),
        samples: n_samples,
    })
}
