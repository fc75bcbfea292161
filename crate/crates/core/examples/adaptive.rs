//! Data-driven threshold choice against the theoretical best threshold.
//!
//! Close to the transition the gap criterion can pick a threshold with no
//! outlier at this size; a stronger spike makes the choice stable.
//!
//! `cargo run --release --example adaptive`

use gct_lab::estimator::{adaptive_threshold, gct};
use gct_lab::harness::ExperimentConfig;
use gct_lab::kernels::KernelSpec;
use gct_lab::model::{make_spike, sample_covariance, ModelParams, SpikePrior};
use gct_lab::theory::SoftFamily;

fn main() -> gct_lab::Result<()> {
    let (n, p, m) = (1000, 500, 16);
    let family = SoftFamily::new(&SoftFamily::default_grid())?;
    let (ls, t_star) = family.lambda_star(p as f64 / n as f64, m as f64 / (n as f64).sqrt())?;
    println!("t_* = {t_star:.2}, soft transition {ls:.4}");
    let grid = ExperimentConfig::default().adaptive_grid;
    for lambda in [1.9, 2.4] {
        let params = ModelParams::new(n, p, m, lambda, SpikePrior::Rademacher, 5)?;
        let v = make_spike(p, m, params.prior, params.seed)?;
        let cov = sample_covariance(&params, &v)?;
        let fixed = gct(&cov.y, n, &KernelSpec::soft(t_star)?, Some(&v))?;
        let (t_hat, est) = adaptive_threshold(&cov.y, n, &grid, Some(&v))?;
        println!(
            "lambda {lambda}: fixed t_* cos2 {:.3}; adaptive t_hat = {t_hat:.2}, cos2 {:.3}, gap {:.3}",
            fixed.cos2.unwrap(),
            est.cos2.unwrap(),
            est.gap
        );
    }
    Ok(())
}
