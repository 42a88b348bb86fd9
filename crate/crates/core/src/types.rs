//! Domain types shared across the online, asynchronous, offline and
//! simulation modules. Indices are 1-based stream positions throughout.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FdrError, Result};

/// One hypothesis in a stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValueRecord {
    pub index: usize,
    pub p: f64,
    /// Finish time `E_t`, asynchronous mode only.
    pub finish_time: Option<usize>,
    /// Ground truth, known only in simulation.
    pub is_null: Option<bool>,
}

impl PValueRecord {
    pub fn new(index: usize, p: f64) -> Result<Self> {
        Self::with_finish(index, p, None)
    }

    pub fn with_finish(index: usize, p: f64, finish_time: Option<usize>) -> Result<Self> {
        if index == 0 {
            return Err(invalid("record indices are 1-based"));
        }
        check_p(p)?;
        if let Some(e) = finish_time {
            if e < index {
                return Err(invalid(format!("test {index} cannot finish at {e}, before it starts")));
            }
        }
        Ok(Self { index, p, finish_time, is_null: None })
    }
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("p-value must lie in [0, 1], got {p}")))
    }
}

/// Per-hypothesis output of an online procedure.
///
/// `rejected ⇔ p ≤ alpha_t`, `candidate ⇔ p ≤ lambda_t`, `selected ⇔ p ≤ tau_t`.
/// Procedures without a candidacy notion report `lambda_t = alpha_t`;
/// procedures without discarding report `tau_t = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub index: usize,
    pub p: f64,
    pub alpha_t: f64,
    pub rejected: bool,
    pub candidate: bool,
    pub selected: bool,
    pub lambda_t: f64,
    pub tau_t: f64,
}

impl DecisionRecord {
    pub(crate) fn from_thresholds(index: usize, p: f64, alpha_t: f64, lambda_t: f64, tau_t: f64) -> Self {
        Self {
            index,
            p,
            alpha_t,
            rejected: p <= alpha_t,
            candidate: p <= lambda_t,
            selected: p <= tau_t,
            lambda_t,
            tau_t,
        }
    }

    pub fn outcome(&self) -> StepOutcome {
        StepOutcome { rejected: self.rejected, candidate: self.candidate, selected: self.selected }
    }
}

/// The `(R, C, S)` indicator triple of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StepOutcome {
    pub rejected: bool,
    pub candidate: bool,
    pub selected: bool,
}

impl StepOutcome {
    pub const fn new(rejected: bool, candidate: bool, selected: bool) -> Self {
        Self { rejected, candidate, selected }
    }

    /// `R ≤ C ≤ S` as 0/1 values.
    pub fn is_nested(&self) -> bool {
        (!self.rejected || self.candidate) && (!self.candidate || self.selected)
    }
}

/// Weight sequence family used to spread wealth over future tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GammaSpec {
    /// `γ_j ∝ (j+1)^{-s}`, `s > 1`.
    Power(f64),
    /// `γ_j ∝ log(max(j+1, 2)) / ((j+1) e^{√log(j+1)})`.
    Lord,
}

impl Default for GammaSpec {
    fn default() -> Self {
        GammaSpec::Power(1.6)
    }
}

impl fmt::Display for GammaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaSpec::Power(s) => write!(f, "power:{s}"),
            GammaSpec::Lord => write!(f, "lord"),
        }
    }
}

impl FromStr for GammaSpec {
    type Err = FdrError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("lord") {
            return Ok(GammaSpec::Lord);
        }
        if let Some(rest) = s.strip_prefix("power:") {
            let exponent: f64 = rest.parse().map_err(|_| invalid(format!("bad gamma exponent '{rest}'")))?;
            if !(exponent > 1.0) || !exponent.is_finite() {
                return Err(invalid(format!("power gamma exponent must exceed 1, got {exponent}")));
            }
            return Ok(GammaSpec::Power(exponent));
        }
        Err(invalid(format!("unknown gamma '{s}', expected 'power:<s>' or 'lord'")))
    }
}

/// Validated parameters shared by the online procedures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    /// Target FDR level.
    pub alpha: f64,
    /// Initial wealth `W0`.
    pub w0: f64,
    /// Candidate threshold.
    pub lambda: f64,
    /// Discarding threshold.
    pub tau: f64,
    pub gamma: GammaSpec,
}

impl AlgorithmConfig {
    /// Validates `0 < alpha < 1`, `0 < w0 ≤ alpha`, `0 ≤ lambda < tau ≤ 1`.
    pub fn new(alpha: f64, w0: f64, lambda: f64, tau: f64, gamma: GammaSpec) -> Result<Self> {
        let cfg = Self { alpha, w0, lambda, tau, gamma };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults used for ADDIS*: `α = 0.05`, `W0 = α/2`, `λ = 0.25`, `τ = 0.5`, power-1.6 gamma.
    pub fn addis_default() -> Self {
        Self { alpha: 0.05, w0: 0.025, lambda: 0.25, tau: 0.5, gamma: GammaSpec::Power(1.6) }
    }

    /// Defaults used for SAFFRON: `λ = 0.5`, no discarding.
    pub fn saffron_default() -> Self {
        Self { alpha: 0.05, w0: 0.025, lambda: 0.5, tau: 1.0, gamma: GammaSpec::Power(1.6) }
    }

    /// Defaults used for LORD++ and LOND: the Gaussian-optimal gamma, no discarding.
    pub fn lord_default() -> Self {
        Self { alpha: 0.05, w0: 0.025, lambda: 0.5, tau: 1.0, gamma: GammaSpec::Lord }
    }

    pub fn validate(&self) -> Result<()> {
        let Self { alpha, w0, lambda, tau, gamma } = *self;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(w0 > 0.0 && w0 <= alpha) {
            return Err(invalid(format!("w0 must lie in (0, alpha], got {w0}")));
        }
        if !(tau > 0.0 && tau <= 1.0) {
            return Err(invalid(format!("tau must lie in (0, 1], got {tau}")));
        }
        if !(lambda >= 0.0 && lambda < tau) {
            return Err(invalid(format!("lambda must lie in [0, tau), got lambda={lambda}, tau={tau}")));
        }
        if let GammaSpec::Power(s) = gamma {
            if !(s > 1.0) || !s.is_finite() {
                return Err(invalid(format!("power gamma exponent must exceed 1, got {s}")));
            }
        }
        Ok(())
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
}

/// Ground-truth partition of `1..=M` into nulls and non-nulls.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StreamTruth {
    null_set: BTreeSet<usize>,
    nonnull_set: BTreeSet<usize>,
}

impl StreamTruth {
    /// Builds the partition from per-index null flags (`flags[i]` describes index `i + 1`).
    pub fn from_flags(flags: &[bool]) -> Self {
        let mut truth = Self::default();
        for (i, &is_null) in flags.iter().enumerate() {
            if is_null {
                truth.null_set.insert(i + 1);
            } else {
                truth.nonnull_set.insert(i + 1);
            }
        }
        truth
    }

    pub fn len(&self) -> usize {
        self.null_set.len() + self.nonnull_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_null(&self, index: usize) -> bool {
        self.null_set.contains(&index)
    }

    pub fn null_set(&self) -> &BTreeSet<usize> {
        &self.null_set
    }

    pub fn nonnull_set(&self) -> &BTreeSet<usize> {
        &self.nonnull_set
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_validation() {
        assert!(PValueRecord::new(1, 0.0).is_ok());
        assert!(PValueRecord::new(1, 1.0).is_ok());
        assert!(PValueRecord::new(1, 1.5).is_err());
        assert!(PValueRecord::new(1, f64::NAN).is_err());
        assert!(PValueRecord::new(0, 0.5).is_err());
        assert!(PValueRecord::with_finish(3, 0.5, Some(2)).is_err());
        assert!(PValueRecord::with_finish(3, 0.5, Some(3)).is_ok());
    }

    #[test]
    fn config_region() {
        let g = GammaSpec::Power(1.6);
        assert!(AlgorithmConfig::new(0.05, 0.025, 0.25, 0.5, g).is_ok());
        assert!(AlgorithmConfig::new(0.05, 0.06, 0.25, 0.5, g).is_err());
        assert!(AlgorithmConfig::new(0.05, 0.0, 0.25, 0.5, g).is_err());
        assert!(AlgorithmConfig::new(0.05, 0.025, 0.5, 0.5, g).is_err());
        assert!(AlgorithmConfig::new(0.05, 0.025, 0.6, 0.5, g).is_err());
        assert!(AlgorithmConfig::new(0.05, 0.025, 0.0, 1.0, g).is_ok());
        assert!(AlgorithmConfig::new(1.0, 0.025, 0.25, 0.5, g).is_err());
        assert!(AlgorithmConfig::new(0.05, 0.025, 0.25, 0.5, GammaSpec::Power(1.0)).is_err());
    }

    #[test]
    fn gamma_spec_parsing() {
        assert_eq!("power:1.6".parse::<GammaSpec>().unwrap(), GammaSpec::Power(1.6));
        assert_eq!("lord".parse::<GammaSpec>().unwrap(), GammaSpec::Lord);
        assert!("power:0.9".parse::<GammaSpec>().is_err());
        assert!("uniform".parse::<GammaSpec>().is_err());
        assert_eq!(GammaSpec::Power(2.0).to_string(), "power:2");
    }

    #[test]
    fn decision_thresholds_nest() {
        let d = DecisionRecord::from_thresholds(1, 0.1, 0.01, 0.25, 0.5);
        assert!(!d.rejected && d.candidate && d.selected);
        let d = DecisionRecord::from_thresholds(1, 0.0, 0.01, 0.25, 0.5);
        assert!(d.outcome().is_nested() && d.rejected);
    }

    #[test]
    fn truth_partition() {
        let t = StreamTruth::from_flags(&[true, false, true]);
        assert_eq!(t.len(), 3);
        assert!(t.is_null(1) && !t.is_null(2));
        assert!(t.null_set().is_disjoint(t.nonnull_set()));
    }
}
