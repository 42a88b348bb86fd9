use crate::error::{invalid, Result};
use crate::types::StepOutcome;

const NON_CANDIDATE: StepOutcome = StepOutcome::new(false, false, true);
const CANDIDATE: StepOutcome = StepOutcome::new(false, true, true);
const REJECTION: StepOutcome = StepOutcome::new(true, true, true);
const DISCARDED: StepOutcome = StepOutcome::new(false, false, false);

/// Whether a single step of `upper` dominates the same step of `lower`.
///
/// Allowed moves: unchanged; a selected non-candidate becoming a candidate,
/// a rejection, or discarded; a candidate becoming a rejection.
pub fn step_precedes(lower: StepOutcome, upper: StepOutcome) -> bool {
    lower == upper
        || (lower == NON_CANDIDATE && (upper == CANDIDATE || upper == REJECTION || upper == DISCARDED))
        || (lower == CANDIDATE && upper == REJECTION)
}

/// `upper ⪰ lower` coordinatewise. Monotone rules give `α_t(upper) ≥ α_t(lower)`.
pub fn history_precedes(lower: &[StepOutcome], upper: &[StepOutcome]) -> Result<bool> {
    if lower.len() != upper.len() {
        return Err(invalid(format!("histories differ in length: {} vs {}", lower.len(), upper.len())));
    }
    Ok(lower.iter().zip(upper).all(|(&l, &u)| step_precedes(l, u)))
}
