use crate::error::{FdrError, Result};
use crate::types::StepOutcome;

/// Bookkeeping for the `j`-th rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RejectionMark {
    /// Stream index `κ_j` of the rejection.
    pub time: usize,
    /// `κ_j* = Σ_{i ≤ κ_j} 1{P_i ≤ τ}`.
    pub selected_through: usize,
    /// `Σ_{i ≤ κ_j} 1{P_i ≤ λ}`; with the running candidate count this gives `C_{j+}`.
    pub candidates_through: usize,
}

/// Decision history of steps `1..t-1` with the counters ADDIS-type rules read.
///
/// `κ_0 := 0`, so `C_{0+}` is the candidate count over the whole prefix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OnlineHistory {
    outcomes: Vec<StepOutcome>,
    selected: usize,
    candidates: usize,
    rejections: Vec<RejectionMark>,
}

impl OnlineHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_outcomes(outcomes: &[StepOutcome]) -> Result<Self> {
        let mut history = Self::new();
        for &o in outcomes {
            history.push(o)?;
        }
        Ok(history)
    }

    /// Appends step `t` and advances the counters.
    pub fn push(&mut self, outcome: StepOutcome) -> Result<()> {
        if !outcome.is_nested() {
            return Err(FdrError::Consistency(format!(
                "step {} violates rejected ⇒ candidate ⇒ selected: {outcome:?}",
                self.outcomes.len() + 1
            )));
        }
        self.outcomes.push(outcome);
        self.selected += usize::from(outcome.selected);
        self.candidates += usize::from(outcome.candidate);
        if outcome.rejected {
            self.rejections.push(RejectionMark {
                time: self.outcomes.len(),
                selected_through: self.selected,
                candidates_through: self.candidates,
            });
        }
        Ok(())
    }

    /// Number of completed steps, `t - 1`.
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Index `t` of the next step.
    pub fn next_index(&self) -> usize {
        self.outcomes.len() + 1
    }

    pub fn outcomes(&self) -> &[StepOutcome] {
        &self.outcomes
    }

    /// `S^t`.
    pub fn selected_count(&self) -> usize {
        self.selected
    }

    /// `C_{0+}`.
    pub fn candidate_count(&self) -> usize {
        self.candidates
    }

    pub fn rejections(&self) -> &[RejectionMark] {
        &self.rejections
    }

    pub fn rejection_count(&self) -> usize {
        self.rejections.len()
    }

    /// `C_{j+}` for a recorded rejection.
    pub fn candidates_after(&self, mark: &RejectionMark) -> usize {
        self.candidates - mark.candidates_through
    }

    /// Recomputes every counter from the raw outcomes and compares.
    pub fn check_consistency(&self) -> Result<()> {
        let fail = |what: &str| Err(FdrError::Consistency(what.to_string()));
        let selected = self.outcomes.iter().filter(|o| o.selected).count();
        let candidates = self.outcomes.iter().filter(|o| o.candidate).count();
        if selected != self.selected {
            return fail("selected count drifted");
        }
        if candidates != self.candidates {
            return fail("candidate count drifted");
        }
        let times: Vec<usize> = (1..=self.outcomes.len()).filter(|&i| self.outcomes[i - 1].rejected).collect();
        if times.len() != self.rejections.len() {
            return fail("rejection count drifted");
        }
        for (mark, &kappa) in self.rejections.iter().zip(&times) {
            let prefix = &self.outcomes[..kappa];
            let kappa_star = prefix.iter().filter(|o| o.selected).count();
            let c_plus = self.outcomes[kappa..].iter().filter(|o| o.candidate).count();
            if mark.time != kappa || mark.selected_through != kappa_star {
                return fail("rejection mark drifted");
            }
            if self.candidates_after(mark) != c_plus {
                return fail("C_{j+} drifted");
            }
            if mark.selected_through > mark.time || c_plus > self.outcomes.len() - kappa {
                return fail("rejection mark out of range");
            }
        }
        if self.outcomes.iter().any(|o| !o.is_nested()) {
            return fail("outcome nesting violated");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NONE: StepOutcome = StepOutcome::new(false, false, false);
    const SEL: StepOutcome = StepOutcome::new(false, false, true);
    const CAND: StepOutcome = StepOutcome::new(false, true, true);
    const REJ: StepOutcome = StepOutcome::new(true, true, true);

    #[test]
    fn counters_follow_definitions() {
        let h = OnlineHistory::from_outcomes(&[SEL, REJ, NONE, CAND, SEL, REJ, CAND]).unwrap();
        assert_eq!(h.selected_count(), 6);
        assert_eq!(h.candidate_count(), 4);
        let marks = h.rejections();
        assert_eq!(marks.len(), 2);
        assert_eq!(marks[0].time, 2);
        assert_eq!(marks[0].selected_through, 2);
        assert_eq!(h.candidates_after(&marks[0]), 3);
        assert_eq!(marks[1].time, 6);
        assert_eq!(marks[1].selected_through, 5);
        assert_eq!(h.candidates_after(&marks[1]), 1);
        h.check_consistency().unwrap();
    }

    #[test]
    fn rejects_unnested_outcomes() {
        let mut h = OnlineHistory::new();
        assert!(matches!(h.push(StepOutcome::new(true, false, true)), Err(FdrError::Consistency(_))));
        assert!(h.push(StepOutcome::new(false, true, false)).is_err());
        assert!(h.is_empty());
    }
}
