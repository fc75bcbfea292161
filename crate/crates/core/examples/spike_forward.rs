//! Predicted outlier and overlap of a soft-threshold kernel as the spike grows.
//!
//! `cargo run --release --example spike_forward`

use gct_lab::kernels::KernelSpec;
use gct_lab::theory::{bbp, lambda_star_kernel, spike_forward};
use gct_lab::GctError;

fn main() -> gct_lab::Result<()> {
    let (gamma, beta) = (0.5, 0.25);
    let spec = KernelSpec::soft(2.0)?;
    let lstar = lambda_star_kernel(&spec, gamma, beta)?;
    println!("soft t = 2, gamma = {gamma}, beta = {beta}: transition at {lstar:.4}");
    println!("{:>6} {:>20} {:>10} {:>10} {:>10} {:>10}", "lambda", "regime", "tau", "outlier", "cos2", "pca cos2");
    for i in 0..=10 {
        let lambda = 1.0 + 0.2 * i as f64;
        // at lambda = 1 there is no spike to locate
        let r = match spike_forward(&spec, gamma, beta, lambda) {
            Err(GctError::Unidentifiable) => {
                println!("{lambda:>6.2} {:>20}", "unidentifiable");
                continue;
            }
            r => r?,
        };
        println!(
            "{lambda:>6.2} {:>20} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            format!("{:?}", r.regime),
            r.tau,
            r.lambda_limit,
            r.cos2_limit,
            bbp(gamma, lambda).1
        );
    }
    Ok(())
}
