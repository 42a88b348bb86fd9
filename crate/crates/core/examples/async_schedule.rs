//! Asynchronous ADDIS* where each test takes a geometric number of steps.
//!
//! ```text
//! cargo run --example async_schedule
//! ```

use fdrlab::async_alg::{run_async_with, AsyncAddis};
use fdrlab::simulation::{sample_async_schedule, sample_gaussian_stream, GaussianModelConfig};
use fdrlab::{AlgorithmConfig, AlgorithmKind};

fn main() -> fdrlab::Result<()> {
    let model = GaussianModelConfig::new(1000, 0.2, -1.0, 3.0, 2019)?;
    let (records, truth) = sample_gaussian_stream(&model)?;
    let p: Vec<f64> = records.iter().map(|r| r.p).collect();
    let finish = sample_async_schedule(p.len(), model.seed)?;

    let mut alg = AsyncAddis::new(AlgorithmConfig::addis_default())?;
    run_async_with(&mut alg, &p, &finish)?;
    let log = alg.decisions();

    let horizon = finish.iter().max().copied().unwrap_or(0) + 1;
    let worst = (1..=horizon).map(|t| alg.fdp_hat(t)).fold(0.0, f64::max);
    let late = finish.iter().enumerate().filter(|(i, &e)| e > i + 1).count();
    println!("{late} of {} tests finished after the next one started", p.len());
    println!("largest FDP estimate over time {worst:.5}");

    let sync = fdrlab::online::run_stream(AlgorithmKind::Addis, AlgorithmConfig::addis_default(), &p)?;
    let count = |l: &[fdrlab::DecisionRecord]| l.iter().filter(|r| r.rejected).count();
    println!("rejections async {} vs sync {}", count(&log), count(&sync));
    let false_rej = log.iter().filter(|r| r.rejected && truth.is_null(r.index)).count();
    println!("false rejections async {false_rej}");
    println!("first rejection finish times {:?}", &alg.rejection_times()[..alg.rejection_times().len().min(8)]);
    Ok(())
}
