//! mFDR of ADDIS* when the stream is cut right after the k-th rejection.
//!
//! ```text
//! cargo run --release --example stopping_time -- [k]
//! ```

use fdrlab::simulation::{run_stopping_time_experiment, GaussianModelConfig, Method, MethodSpec, StoppingRule};
use fdrlab::AlgorithmKind;

fn main() -> fdrlab::Result<()> {
    let k: usize = std::env::args().nth(1).map_or(10, |s| s.parse().expect("k"));
    let spec = MethodSpec::new(Method::Online(AlgorithmKind::Addis));
    for mu_n in [0.0, -1.0] {
        for pi_a in [0.0, 0.1, 0.3] {
            let model = GaussianModelConfig::new(1000, pi_a, mu_n, 3.0, 10)?;
            let e = run_stopping_time_experiment(&spec, &model, StoppingRule::AtRejection(k), 300)?;
            println!(
                "mu_N {mu_n:>4} pi_A {pi_a:.1}: mFDR {:.4} ± {:.4}  (E false {:.2}, E R {:.2})",
                e.mfdr, e.stderr, e.mean_false, e.mean_rejections
            );
        }
    }
    Ok(())
}
