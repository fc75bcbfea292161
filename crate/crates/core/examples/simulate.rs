//! One draw of the spiked model: soft-threshold GCT against plain PCA.
//!
//! `cargo run --release --example simulate`

use gct_lab::estimator::{gct, pca};
use gct_lab::kernels::KernelSpec;
use gct_lab::model::{make_spike, sample_covariance, ModelParams, SpikePrior};
use gct_lab::theory::{bbp, spike_forward};

fn main() -> gct_lab::Result<()> {
    let params = ModelParams::new(1000, 500, 8, 1.6, SpikePrior::Rademacher, 42)?;
    let v = make_spike(params.p, params.m, params.prior, params.seed)?;
    let cov = sample_covariance(&params, &v)?;
    let spec = KernelSpec::soft(2.0)?;

    let g = gct(&cov.y, params.n, &spec, Some(&v))?;
    let th = spike_forward(&spec, params.gamma(), params.beta(), params.lambda)?;
    println!(
        "gct soft(2): lambda1 {:.4} (limit {:.4}, edge {:.4}), cos2 {:.3} (limit {:.3})",
        g.lambda1,
        th.lambda_limit,
        th.bulk.lambda_plus,
        g.cos2.unwrap(),
        th.cos2_limit
    );

    let plain = pca(&cov.y, Some(&v))?;
    let (eig, cos2) = bbp(params.gamma(), params.lambda);
    println!(
        "pca:         lambda1 {:.4} (limit {eig:.4}), cos2 {:.3} (limit {cos2:.3})",
        plain.lambda1,
        plain.cos2.unwrap()
    );
    Ok(())
}
