//! The two spending sequences: `(j+1)^-s` and the LORD Gaussian-optimal one.
//!
//! ```text
//! cargo run --example gamma_sequences
//! ```

use fdrlab::GammaSequence;

fn main() -> fdrlab::Result<()> {
    let power = GammaSequence::power(1.6)?;
    let lord = GammaSequence::lord();
    println!("normalizers: power(1.6) {:.12}  lord {:.12}", power.normalizer(), lord.normalizer());
    println!("{:>6} {:>14} {:>14}", "j", "power", "lord");
    for j in [0, 1, 2, 5, 10, 100, 1000, 10_000] {
        println!("{j:>6} {:>14.8e} {:>14.8e}", power.value(j), lord.value(j));
    }
    for n in [10, 1000, 100_000] {
        println!("mass beyond {n:>6}: power {:.3e}  lord {:.3e}", power.tail_mass(n), lord.tail_mass(n));
    }
    Ok(())
}
