//! Run ADDIS* over a short hand-written stream and print every decision.
//!
//! ```text
//! cargo run --example stream_decisions
//! ```

use fdrlab::online::FdpEstimator;
use fdrlab::{AlgorithmConfig, AlgorithmKind, OnlineAlgorithm};

fn main() -> fdrlab::Result<()> {
    let pvalues = [0.001, 0.3, 0.02, 0.9, 0.0004, 0.45, 0.7, 0.003, 0.26, 0.06];

    let mut alg = OnlineAlgorithm::new(AlgorithmKind::Addis, AlgorithmConfig::addis_default())?;
    println!("{:>3} {:>8} {:>10}  sel cand rej  fdp_hat", "t", "p", "alpha_t");
    for &p in &pvalues {
        let r = alg.observe(p)?;
        println!(
            "{:>3} {:>8.4} {:>10.6}  {:>3} {:>4} {:>3}  {:.5}",
            r.index,
            r.p,
            r.alpha_t,
            u8::from(r.selected),
            u8::from(r.candidate),
            u8::from(r.rejected),
            alg.fdp_hat().unwrap_or(0.0),
        );
    }
    alg.check_invariant()?;

    // The discard form rescales p-values instead of capping levels; for dyadic
    // tau both give the same decisions bit for bit.
    let discard =
        fdrlab::online::run_stream(AlgorithmKind::AddisDiscardForm, AlgorithmConfig::addis_default(), &pvalues)?;
    assert_eq!(discard.as_slice(), alg.log());
    println!("discard form agrees; final estimate {:.5}", FdpEstimator::Addis.estimate(alg.log()));
    Ok(())
}
