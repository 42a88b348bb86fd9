//! Online FDR state machines.
//!
//! Every procedure here is a map from the decision history to the next testing
//! level. ADDIS* combines adaptivity (candidates `P ≤ λ` do not pay wealth) with
//! discarding (`P > τ` is ignored entirely). Setting `τ = 1` recovers SAFFRON;
//! D-LORD* applies discarding alone, and `τ = 1` there recovers LORD++. LOND and
//! alpha-investing are kept as baselines.
//!
//! ```
//! use fdrlab::online::{AlgorithmKind, OnlineAlgorithm};
//! use fdrlab::types::AlgorithmConfig;
//!
//! let mut alg = OnlineAlgorithm::new(AlgorithmKind::Addis, AlgorithmConfig::addis_default()).unwrap();
//! let first = alg.observe(1e-6).unwrap();
//! assert!(first.rejected);
//! let second = alg.observe(0.9).unwrap();
//! assert!(!second.selected);
//! ```

mod estimators;
mod history;
mod levels;
mod monotone;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use estimators::{
    check_lemma_estimates, fdp_hat_addis, fdp_hat_dlord, fdp_hat_lordpp, fdp_hat_saffron, oracle_fdp, FdpEstimator,
    LemmaEstimate,
};
pub use history::{OnlineHistory, RejectionMark};
pub use levels::{
    addis_gamma_sum, addis_next_level, alpha_investing_next_level, dlord_next_level, lond_next_level,
    lordpp_next_level, replay_wealth, saffron_next_level, InvestingWealth,
};
pub use monotone::{history_precedes, step_precedes};

use crate::error::{FdrError, Result};
use crate::gamma::GammaSequence;
use crate::types::{check_p, AlgorithmConfig, DecisionRecord, StepOutcome};
pub(crate) use levels::wealth_sum;
use levels::{investing_level, lond_level};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlgorithmKind {
    /// ADDIS* in its capped-level form.
    Addis,
    /// ADDIS* written with an explicit discard step and rescaled p-values.
    AddisDiscardForm,
    DLord,
    Saffron,
    LordPlusPlus,
    Lond,
    AlphaInvesting,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 7] = [
        AlgorithmKind::Addis,
        AlgorithmKind::AddisDiscardForm,
        AlgorithmKind::DLord,
        AlgorithmKind::Saffron,
        AlgorithmKind::LordPlusPlus,
        AlgorithmKind::Lond,
        AlgorithmKind::AlphaInvesting,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Addis => "addis",
            AlgorithmKind::AddisDiscardForm => "addis-discard",
            AlgorithmKind::DLord => "dlord",
            AlgorithmKind::Saffron => "saffron",
            AlgorithmKind::LordPlusPlus => "lordpp",
            AlgorithmKind::Lond => "lond",
            AlgorithmKind::AlphaInvesting => "alpha-investing",
        }
    }

    /// The estimator whose bound the rule maintains, if any.
    pub fn invariant_estimator(&self) -> Option<FdpEstimator> {
        match self {
            AlgorithmKind::Addis | AlgorithmKind::AddisDiscardForm => Some(FdpEstimator::Addis),
            AlgorithmKind::Saffron => Some(FdpEstimator::Saffron),
            AlgorithmKind::DLord => Some(FdpEstimator::DLord),
            AlgorithmKind::LordPlusPlus => Some(FdpEstimator::LordPlusPlus),
            AlgorithmKind::Lond | AlgorithmKind::AlphaInvesting => None,
        }
    }

    /// Default parameters used in the Gaussian experiments.
    pub fn default_config(&self) -> AlgorithmConfig {
        match self {
            AlgorithmKind::Addis | AlgorithmKind::AddisDiscardForm | AlgorithmKind::DLord => {
                AlgorithmConfig::addis_default()
            }
            AlgorithmKind::Saffron | AlgorithmKind::AlphaInvesting => AlgorithmConfig::saffron_default(),
            AlgorithmKind::LordPlusPlus | AlgorithmKind::Lond => AlgorithmConfig::lord_default(),
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = FdrError;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let kind = match lower.as_str() {
            "addis" | "addis*" => AlgorithmKind::Addis,
            "addis-discard" | "addis_discard_form" => AlgorithmKind::AddisDiscardForm,
            "dlord" | "d-lord" => AlgorithmKind::DLord,
            "saffron" => AlgorithmKind::Saffron,
            "lordpp" | "lord++" => AlgorithmKind::LordPlusPlus,
            "lond" => AlgorithmKind::Lond,
            "alpha-investing" | "alpha_investing" | "ai" => AlgorithmKind::AlphaInvesting,
            _ => {
                let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                return Err(FdrError::InvalidArgument(format!(
                    "unknown algorithm '{s}', expected one of: {}",
                    names.join(", ")
                )));
            }
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy)]
struct SumCache {
    clock: usize,
    rejections: usize,
    value: f64,
}

/// A running online procedure: configuration, gamma weights, and the decision log.
#[derive(Debug, Clone)]
pub struct OnlineAlgorithm {
    kind: AlgorithmKind,
    config: AlgorithmConfig,
    gamma: GammaSequence,
    history: OnlineHistory,
    log: Vec<DecisionRecord>,
    cache: Option<SumCache>,
    wealth: InvestingWealth,
    fdp_numerator: f64,
}

impl OnlineAlgorithm {
    pub fn new(kind: AlgorithmKind, config: AlgorithmConfig) -> Result<Self> {
        let gamma = GammaSequence::from_spec(config.gamma)?;
        Self::with_gamma(kind, config, gamma)
    }

    /// Builds with a prebuilt gamma sequence; `config.gamma` is not consulted.
    pub fn with_gamma(kind: AlgorithmKind, config: AlgorithmConfig, gamma: GammaSequence) -> Result<Self> {
        config.validate()?;
        let config = match kind {
            AlgorithmKind::Saffron
            | AlgorithmKind::LordPlusPlus
            | AlgorithmKind::Lond
            | AlgorithmKind::AlphaInvesting => config.with_tau(1.0),
            _ => config,
        };
        Ok(Self {
            kind,
            config,
            gamma,
            history: OnlineHistory::new(),
            log: Vec::new(),
            cache: None,
            wealth: InvestingWealth::initial(&config),
            fdp_numerator: 0.0,
        })
    }

    pub fn kind(&self) -> AlgorithmKind {
        self.kind
    }

    /// Effective configuration (`τ` forced to 1 for the non-discarding kinds).
    pub fn config(&self) -> &AlgorithmConfig {
        &self.config
    }

    pub fn gamma(&self) -> &GammaSequence {
        &self.gamma
    }

    pub fn history(&self) -> &OnlineHistory {
        &self.history
    }

    pub fn log(&self) -> &[DecisionRecord] {
        &self.log
    }

    pub fn into_log(self) -> Vec<DecisionRecord> {
        self.log
    }

    /// `α_t` for the next step `t`.
    pub fn next_level(&mut self) -> f64 {
        let cfg = self.config;
        match self.kind {
            AlgorithmKind::Addis | AlgorithmKind::Saffron => {
                let k = self.cached_addis_sum();
                cfg.lambda.min((cfg.tau - cfg.lambda) * k)
            }
            AlgorithmKind::AddisDiscardForm => cfg.tau * self.discard_form_scaled_level(),
            AlgorithmKind::DLord | AlgorithmKind::LordPlusPlus => {
                let sum = self.cached_dlord_sum();
                cfg.tau.min(cfg.tau * sum)
            }
            AlgorithmKind::Lond => lond_level(&cfg, &self.gamma, self.history.len(), self.history.rejection_count()),
            AlgorithmKind::AlphaInvesting => investing_level(self.wealth.spend(&self.gamma, self.history.next_index())),
        }
    }

    /// Tests the next hypothesis and records the decision.
    pub fn observe(&mut self, p: f64) -> Result<DecisionRecord> {
        check_p(p)?;
        let index = self.history.next_index();
        let cfg = self.config;
        let record = match self.kind {
            AlgorithmKind::Addis | AlgorithmKind::Saffron => {
                let alpha_t = self.next_level();
                DecisionRecord::from_thresholds(index, p, alpha_t, cfg.lambda, cfg.tau)
            }
            AlgorithmKind::AddisDiscardForm => {
                let scaled_level = self.discard_form_scaled_level();
                let alpha_t = cfg.tau * scaled_level;
                if p > cfg.tau {
                    DecisionRecord {
                        index,
                        p,
                        alpha_t,
                        rejected: false,
                        candidate: false,
                        selected: false,
                        lambda_t: cfg.lambda,
                        tau_t: cfg.tau,
                    }
                } else {
                    DecisionRecord {
                        index,
                        p,
                        alpha_t,
                        rejected: p / cfg.tau <= scaled_level,
                        candidate: p <= cfg.lambda,
                        selected: true,
                        lambda_t: cfg.lambda,
                        tau_t: cfg.tau,
                    }
                }
            }
            AlgorithmKind::DLord | AlgorithmKind::LordPlusPlus | AlgorithmKind::Lond => {
                let alpha_t = self.next_level();
                DecisionRecord::from_thresholds(index, p, alpha_t, alpha_t, cfg.tau)
            }
            AlgorithmKind::AlphaInvesting => {
                let spend = self.wealth.spend(&self.gamma, index);
                let alpha_t = investing_level(spend);
                let record = DecisionRecord::from_thresholds(index, p, alpha_t, alpha_t, 1.0);
                self.wealth.update(&cfg, index, spend, record.rejected);
                record
            }
        };
        self.history.push(record.outcome())?;
        if let Some(estimator) = self.kind.invariant_estimator() {
            self.fdp_numerator += estimator.contribution(&record);
        }
        self.log.push(record);
        Ok(record)
    }

    /// Feeds a whole stream and returns the decisions made for it.
    pub fn run(&mut self, pvalues: &[f64]) -> Result<&[DecisionRecord]> {
        let start = self.log.len();
        for &p in pvalues {
            self.observe(p)?;
        }
        Ok(&self.log[start..])
    }

    /// Running value of the estimator the rule keeps below `α`.
    pub fn fdp_hat(&self) -> Option<f64> {
        self.kind.invariant_estimator().map(|_| self.fdp_numerator / self.history.rejection_count().max(1) as f64)
    }

    /// Fails with [`FdrError::Invariant`] if the maintained estimate exceeds `α`.
    pub fn check_invariant(&self) -> Result<()> {
        match self.fdp_hat() {
            Some(estimate) if estimate > self.config.alpha => {
                Err(FdrError::Invariant { step: self.history.len(), estimate, alpha: self.config.alpha })
            }
            _ => Ok(()),
        }
    }

    /// Current wealth of the alpha-investing baseline.
    pub fn wealth(&self) -> Option<f64> {
        (self.kind == AlgorithmKind::AlphaInvesting).then_some(self.wealth.current)
    }

    /// ADDIS* sum `K_t`; it only changes when a selected non-candidate or a rejection arrives.
    fn cached_addis_sum(&mut self) -> f64 {
        let h = &self.history;
        let clock = h.selected_count() - h.candidate_count();
        let rejections = h.rejection_count();
        if let Some(c) = self.cache {
            if c.clock == clock && c.rejections == rejections {
                return c.value;
            }
        }
        let subs = h.rejections().iter().map(|m| clock - (m.selected_through - m.candidates_through));
        let value = wealth_sum(&self.config, &self.gamma, clock, subs);
        self.cache = Some(SumCache { clock, rejections, value });
        value
    }

    /// D-LORD* sum; changes when a selected step or a rejection arrives.
    fn cached_dlord_sum(&mut self) -> f64 {
        let h = &self.history;
        let clock = h.selected_count();
        let rejections = h.rejection_count();
        if let Some(c) = self.cache {
            if c.clock == clock && c.rejections == rejections {
                return c.value;
            }
        }
        let subs = h.rejections().iter().map(|m| clock - m.selected_through);
        let value = wealth_sum(&self.config, &self.gamma, clock, subs);
        self.cache = Some(SumCache { clock, rejections, value });
        value
    }

    /// Level on the rescaled p-value `P_t / τ`: `min(θ, (1 − θ)·K_t)` with `θ = λ/τ`.
    fn discard_form_scaled_level(&self) -> f64 {
        let h = &self.history;
        let s = h.selected_count();
        let base = s - h.candidate_count();
        let subs = h.rejections().iter().map(|m| s - m.selected_through - h.candidates_after(m));
        let k = wealth_sum(&self.config, &self.gamma, base, subs);
        let theta = self.config.lambda / self.config.tau;
        theta.min((1.0 - theta) * k)
    }
}

/// Runs a fresh procedure over `pvalues` and returns its decision log.
pub fn run_stream(kind: AlgorithmKind, config: AlgorithmConfig, pvalues: &[f64]) -> Result<Vec<DecisionRecord>> {
    let mut alg = OnlineAlgorithm::new(kind, config)?;
    alg.run(pvalues)?;
    Ok(alg.into_log())
}

/// Outcome triple of every record, in order.
pub fn outcomes_of(log: &[DecisionRecord]) -> Vec<StepOutcome> {
    log.iter().map(DecisionRecord::outcome).collect()
}
