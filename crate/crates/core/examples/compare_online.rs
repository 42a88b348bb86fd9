//! Every online procedure on the same Gaussian stream: realized FDP next to
//! the oracle estimate (sum of null levels over rejections).
//!
//! ```text
//! cargo run --example compare_online -- [mu_null] [pi_alt]
//! ```

use fdrlab::online::{oracle_fdp, run_stream};
use fdrlab::simulation::{sample_gaussian_stream, GaussianModelConfig};
use fdrlab::AlgorithmKind;

fn main() -> fdrlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let mu_n: f64 = args.next().map_or(-1.0, |s| s.parse().expect("mu_null"));
    let pi_a: f64 = args.next().map_or(0.2, |s| s.parse().expect("pi_alt"));

    let model = GaussianModelConfig::new(1000, pi_a, mu_n, 3.0, 2019)?;
    let (records, truth) = sample_gaussian_stream(&model)?;
    let pvalues: Vec<f64> = records.iter().map(|r| r.p).collect();
    let signals = truth.nonnull_set().len();

    println!("M = {}, non-nulls = {signals}, mu_N = {mu_n}, pi_A = {pi_a}", pvalues.len());
    println!("{:<16} {:>6} {:>6} {:>8} {:>8}", "procedure", "R", "false", "FDP", "FDP*");
    for kind in AlgorithmKind::ALL {
        let log = run_stream(kind, kind.default_config(), &pvalues)?;
        let rejections = log.iter().filter(|r| r.rejected).count();
        let false_rej = log.iter().zip(&records).filter(|(r, rec)| r.rejected && rec.is_null == Some(true)).count();
        let fdp = false_rej as f64 / rejections.max(1) as f64;
        println!("{:<16} {rejections:>6} {false_rej:>6} {fdp:>8.4} {:>8.4}", kind.name(), oracle_fdp(&log, &truth));
    }
    Ok(())
}
