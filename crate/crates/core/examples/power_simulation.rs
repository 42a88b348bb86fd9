//! Monte-Carlo FDR and power of several procedures over a range of signal
//! proportions.
//!
//! ```text
//! cargo run --release --example power_simulation -- [mu_null] [trials]
//! ```

use fdrlab::simulation::{Campaign, Method, MethodSpec};
use fdrlab::AlgorithmKind;

fn main() -> fdrlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let mu_n: f64 = args.next().map_or(-1.0, |s| s.parse().expect("mu_null"));
    let trials: usize = args.next().map_or(100, |s| s.parse().expect("trials"));

    let methods: Vec<MethodSpec> = [AlgorithmKind::Addis, AlgorithmKind::Saffron, AlgorithmKind::LordPlusPlus]
        .into_iter()
        .map(|k| MethodSpec::new(Method::Online(k)))
        .collect();
    let campaign = Campaign {
        m: 1000,
        mu_n: vec![mu_n],
        mu_a: vec![3.0],
        pi_a: vec![0.1, 0.2, 0.3, 0.4, 0.5],
        trials,
        seed: 2019,
        methods,
    };
    let report = campaign.run(|done, total| eprint!("\r{done}/{total}"))?;
    eprintln!();

    println!("{:<8} {:>5} {:>14} {:>14}", "method", "pi_A", "FDR", "power");
    for p in &report.points {
        println!(
            "{:<8} {:>5.2} {:>7.4}±{:.4} {:>7.4}±{:.4}",
            p.label, p.pi_a, p.fdr.mean, p.fdr.stderr, p.power.mean, p.power.stderr
        );
    }
    eprintln!("{:.1}s", report.runtime.as_secs_f64());
    Ok(())
}
