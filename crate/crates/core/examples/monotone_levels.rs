//! ADDIS* levels never decrease when a past outcome moves to a "better" state
//! (non-candidate to candidate, rejection or discard; candidate to rejection).
//!
//! ```text
//! cargo run --example monotone_levels
//! ```

use fdrlab::online::{addis_next_level, history_precedes, OnlineHistory};
use fdrlab::{AlgorithmConfig, GammaSequence, StepOutcome};

const NC: StepOutcome = StepOutcome::new(false, false, true);
const C: StepOutcome = StepOutcome::new(false, true, true);
const R: StepOutcome = StepOutcome::new(true, true, true);
const D: StepOutcome = StepOutcome::new(false, false, false);

fn main() -> fdrlab::Result<()> {
    let cfg = AlgorithmConfig::addis_default();
    let gamma = GammaSequence::power(1.6)?;
    let base = [R, NC, NC, C, NC, NC];
    let level = |h: &[StepOutcome]| addis_next_level(&OnlineHistory::from_outcomes(h)?, &cfg, &gamma);

    println!("base history next level {:.6}", level(&base)?);
    for (i, to) in [(1, C), (1, R), (1, D), (3, R)] {
        let mut up = base;
        up[i] = to;
        assert!(history_precedes(&base, &up)?);
        println!("step {} -> {:?}: next level {:.6}", i + 1, (to.rejected, to.candidate, to.selected), level(&up)?);
    }
    Ok(())
}
