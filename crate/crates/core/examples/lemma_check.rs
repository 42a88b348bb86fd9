//! Monte-Carlo check of the inequality that makes discarding safe:
//! for a conservative null, `P(ab < p ≤ b)/(b(1−a))` stays below `P(p > a)/(1−a)`.
//!
//! ```text
//! cargo run --release --example lemma_check
//! ```

use fdrlab::online::check_lemma_estimates;

fn main() -> fdrlab::Result<()> {
    println!("{:>6} {:>5} {:>5} {:>9} {:>9} {:>8}", "mu_N", "a", "b", "lhs", "rhs", "z");
    for mu_n in [0.0, -0.5, -1.0, -2.0] {
        for (a, b) in [(0.5, 0.5), (0.25, 0.8), (0.1, 0.3)] {
            let e = check_lemma_estimates(a, b, mu_n, 200_000, 1)?;
            let z = (e.lhs - e.rhs) / e.diff_se.max(f64::MIN_POSITIVE);
            println!("{mu_n:>6.1} {a:>5.2} {b:>5.2} {:>9.4} {:>9.4} {z:>8.1}", e.lhs, e.rhs);
        }
    }
    Ok(())
}
