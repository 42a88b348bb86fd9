//! The (theta, tau) tuning objective for ADDIS*, drawn as a coarse text map.
//!
//! ```text
//! cargo run --release --example tuning_surface -- [mu_null] [pi_alt]
//! ```

use fdrlab::simulation::GaussianModelConfig;
use fdrlab::tuning::{tune_surface, with_empirical_power, MixtureCdf};
use fdrlab::AlgorithmConfig;

fn main() -> fdrlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let mu_n: f64 = args.next().map_or(-1.0, |s| s.parse().expect("mu_null"));
    let pi_a: f64 = args.next().map_or(0.2, |s| s.parse().expect("pi_alt"));

    let model = GaussianModelConfig::new(1000, pi_a, mu_n, 3.0, 2019)?;
    let surface = tune_surface(&MixtureCdf::from_model(&model), 12)?;

    let (lo, hi) = surface.values.iter().flatten().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    println!("rows: theta ascending; columns: tau ascending; darker is larger");
    for row in &surface.values {
        let line: String = row
            .iter()
            .map(|&v| {
                let k = if hi > lo { ((v - lo) / (hi - lo) * 9.0).round() as usize } else { 0 };
                shades[k]
            })
            .collect();
        println!("  |{line}|");
    }
    println!(
        "argmin theta*={:.3} tau*={:.3} lambda*={:.3} (value {:.4})",
        surface.theta_star, surface.tau_star, surface.lambda_star, surface.min_value
    );

    let surface = with_empirical_power(surface, &model, &AlgorithmConfig::addis_default(), 10)?;
    if let Some((at_min, best)) = surface.power_at_argmin_and_max() {
        println!("ADDIS* power at argmin {at_min:.3}, best on grid {best:.3}");
    }
    Ok(())
}
