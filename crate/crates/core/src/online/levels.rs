//! Testing-level rules as pure functions of `(config, gamma, history)`.
//!
//! For the ADDIS* rule the gamma subscript of every wealth term counts the
//! selected non-candidates seen since the corresponding rejection:
//! `S^t - κ_j* - C_{j+}`. The D-LORD* rule counts selected steps since the
//! rejection, `S^t - κ_j*`.

use crate::error::{FdrError, Result};
use crate::gamma::GammaSequence;
use crate::online::history::OnlineHistory;
use crate::types::AlgorithmConfig;

/// `W0·γ_{base} + (α − W0)·γ_{s_1} + α·Σ_{j≥2} γ_{s_j}`.
///
/// Shared by every ADDIS-type and LORD-type rule so that matched inputs give
/// bit-identical levels.
#[inline]
pub(crate) fn wealth_sum(
    config: &AlgorithmConfig,
    gamma: &GammaSequence,
    base: usize,
    mut subscripts: impl Iterator<Item = usize>,
) -> f64 {
    let mut total = config.w0 * gamma.value(base);
    if let Some(first) = subscripts.next() {
        total += (config.alpha - config.w0) * gamma.value(first);
        let rest: f64 = subscripts.map(|s| gamma.value(s)).sum();
        total += config.alpha * rest;
    }
    total
}

fn subscript(total: usize, minus: usize, what: &str) -> Result<usize> {
    total.checked_sub(minus).ok_or_else(|| FdrError::Consistency(format!("negative gamma subscript in {what}")))
}

/// The uncapped ADDIS* gamma sum `K_t` (without the `τ − λ` factor).
pub fn addis_gamma_sum(history: &OnlineHistory, config: &AlgorithmConfig, gamma: &GammaSequence) -> Result<f64> {
    let s = history.selected_count();
    let base = subscript(s, history.candidate_count(), "S^t - C_{0+}")?;
    let mut subs = Vec::with_capacity(history.rejection_count());
    for mark in history.rejections() {
        let partial = subscript(s, mark.selected_through, "S^t - κ_j*")?;
        subs.push(subscript(partial, history.candidates_after(mark), "S^t - κ_j* - C_{j+}")?);
    }
    Ok(wealth_sum(config, gamma, base, subs.into_iter()))
}

/// ADDIS*: `α_t = min(λ, (τ − λ)·K_t)`.
pub fn addis_next_level(history: &OnlineHistory, config: &AlgorithmConfig, gamma: &GammaSequence) -> Result<f64> {
    let k = addis_gamma_sum(history, config, gamma)?;
    Ok(config.lambda.min((config.tau - config.lambda) * k))
}

/// SAFFRON: ADDIS* with `τ = 1`.
pub fn saffron_next_level(history: &OnlineHistory, config: &AlgorithmConfig, gamma: &GammaSequence) -> Result<f64> {
    addis_next_level(history, &config.with_tau(1.0), gamma)
}

/// D-LORD*: `α_t = min(τ, τ·(W0 γ_{S^t} + (α−W0) γ_{S^t−κ_1*} + α Σ_{j≥2} γ_{S^t−κ_j*}))`.
pub fn dlord_next_level(history: &OnlineHistory, config: &AlgorithmConfig, gamma: &GammaSequence) -> Result<f64> {
    let s = history.selected_count();
    let mut subs = Vec::with_capacity(history.rejection_count());
    for mark in history.rejections() {
        subs.push(subscript(s, mark.selected_through, "S^t - κ_j*")?);
    }
    let sum = wealth_sum(config, gamma, s, subs.into_iter());
    Ok(config.tau.min(config.tau * sum))
}

/// LORD++: D-LORD* with `τ = 1`.
pub fn lordpp_next_level(history: &OnlineHistory, config: &AlgorithmConfig, gamma: &GammaSequence) -> Result<f64> {
    dlord_next_level(history, &config.with_tau(1.0), gamma)
}

/// LOND: `α_t = α·γ_{t−1}·(D(t−1) + 1)`.
pub fn lond_next_level(history: &OnlineHistory, config: &AlgorithmConfig, gamma: &GammaSequence) -> f64 {
    lond_level(config, gamma, history.len(), history.rejection_count())
}

#[inline]
pub(crate) fn lond_level(config: &AlgorithmConfig, gamma: &GammaSequence, completed: usize, rejections: usize) -> f64 {
    config.alpha * gamma.value(completed) * (rejections as f64 + 1.0)
}

/// Wealth state of the alpha-investing baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvestingWealth {
    /// `W(t−1)`.
    pub current: f64,
    /// `W(κ_last)`, or `W0` before the first rejection.
    pub at_last_rejection: f64,
    /// `κ_last`, 0 before the first rejection.
    pub last_rejection: usize,
}

impl InvestingWealth {
    pub fn initial(config: &AlgorithmConfig) -> Self {
        Self { current: config.w0, at_last_rejection: config.w0, last_rejection: 0 }
    }

    /// Spend `φ_t = γ_{t−1−κ_last}·W(κ_last)` for step `t`.
    pub fn spend(&self, gamma: &GammaSequence, t: usize) -> f64 {
        gamma.value(t - 1 - self.last_rejection) * self.at_last_rejection
    }

    /// `W(t) = W(t−1) − φ_t·(1 − R_t) + R_t·α`.
    pub fn update(&mut self, config: &AlgorithmConfig, t: usize, spend: f64, rejected: bool) {
        if rejected {
            self.current += config.alpha;
            self.at_last_rejection = self.current;
            self.last_rejection = t;
        } else {
            self.current -= spend;
        }
    }
}

#[inline]
pub(crate) fn investing_level(spend: f64) -> f64 {
    spend / (1.0 + spend)
}

/// Alpha-investing: `α_t = φ_t / (1 + φ_t)`, wealth replayed from the history.
pub fn alpha_investing_next_level(history: &OnlineHistory, config: &AlgorithmConfig, gamma: &GammaSequence) -> f64 {
    let wealth = replay_wealth(history, config, gamma);
    investing_level(wealth.spend(gamma, history.next_index()))
}

pub fn replay_wealth(history: &OnlineHistory, config: &AlgorithmConfig, gamma: &GammaSequence) -> InvestingWealth {
    let mut wealth = InvestingWealth::initial(config);
    for (i, outcome) in history.outcomes().iter().enumerate() {
        let t = i + 1;
        let spend = wealth.spend(gamma, t);
        wealth.update(config, t, spend, outcome.rejected);
    }
    wealth
}
