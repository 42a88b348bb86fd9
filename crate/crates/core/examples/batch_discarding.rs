//! BH, Storey-BH and D-StBH on one batch of p-values.
//!
//! ```text
//! cargo run --example batch_discarding
//! ```

use fdrlab::offline::{discarding_pi0, run_batch, BatchMethod};
use fdrlab::simulation::{sample_gaussian_stream, GaussianModelConfig};

fn main() -> fdrlab::Result<()> {
    // Conservative nulls push null p-values toward 1, where the plain
    // Storey estimate of the null proportion overshoots.
    let model = GaussianModelConfig::new(1000, 0.3, -1.0, 3.0, 7)?;
    let (records, truth) = sample_gaussian_stream(&model)?;
    let p: Vec<f64> = records.iter().map(|r| r.p).collect();
    let alpha = 0.05;

    println!("true null proportion {:.3}", truth.null_set().len() as f64 / p.len() as f64);
    println!("pi0 with lambda=0.5, tau=1:    {:.3}", discarding_pi0(&p, 0.5, 1.0));
    println!("pi0 with lambda=0.25, tau=0.5: {:.3}", discarding_pi0(&p, 0.25, 0.5));

    for (method, lambda, tau) in
        [(BatchMethod::Bh, 0.5, 1.0), (BatchMethod::StoreyBh, 0.5, 1.0), (BatchMethod::DStBh, 0.25, 0.5)]
    {
        let out = run_batch(method, &p, alpha, lambda, tau)?;
        let false_rej = out.rejected.iter().filter(|&&i| truth.is_null(i)).count();
        println!(
            "{:<10} threshold {:.5}  rejections {:>4}  false {:>3}",
            format!("{method:?}"),
            out.threshold,
            out.num_rejections(),
            false_rej
        );
    }
    Ok(())
}
