//! Support recovery by thresholding the top eigenvector of `K(f)`.
//!
//! `cargo run --release --example support_recovery`

use gct_lab::estimator::{exact_recovery, gct, recover_support, support_score, DEFAULT_EPS_EXPONENT};
use gct_lab::kernels::KernelSpec;
use gct_lab::model::{make_spike, sample_covariance, ModelParams, SpikePrior};

fn main() -> gct_lab::Result<()> {
    let spec = KernelSpec::soft(2.0)?;
    for lambda in [1.0, 1.8, 2.6] {
        let params = ModelParams::new(1000, 500, 8, lambda, SpikePrior::Rademacher, 3)?;
        let v = make_spike(params.p, params.m, params.prior, params.seed)?;
        let cov = sample_covariance(&params, &v)?;
        let est = gct(&cov.y, params.n, &spec, Some(&v))?;
        let sup = recover_support(&est.u1, params.n, DEFAULT_EPS_EXPONENT)?;
        println!(
            "lambda {lambda:.1}: cos2 {:.3}, {} coordinates kept, score {:+.3}, exact {}",
            est.cos2.unwrap(),
            sup.support.len(),
            support_score(&sup, &v),
            exact_recovery(&sup, &v)
        );
    }
    Ok(())
}
