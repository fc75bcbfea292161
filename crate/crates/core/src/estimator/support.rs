use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::model::SpikeVector;

/// Threshold exponent: coordinates of `u_1` below `n^(-3/8)` are dropped.
pub const DEFAULT_EPS_EXPONENT: f64 = 0.375;

#[derive(Clone, Debug, PartialEq)]
pub struct SupportEstimate {
    /// Normalized sign vector; zero when nothing survives.
    pub v_hat: DVector<f64>,
    pub support: Vec<usize>,
    pub empty: bool,
}

/// `sign(eta_h(u_1, n^-eps)) / |sign(eta_h(u_1, n^-eps))|`.
pub fn recover_support(u1: &DVector<f64>, n: usize, eps_exponent: f64) -> Result<SupportEstimate> {
    if !(eps_exponent > 0.25 && eps_exponent < 0.5) {
        return Err(invalid(format!(
            "eps_exponent = {eps_exponent} must lie in (1/4, 1/2)"
        )));
    }
    let level = (n as f64).powf(-eps_exponent);
    let support: Vec<usize> = (0..u1.len()).filter(|&i| u1[i].abs() >= level).collect();
    let mut v_hat = DVector::zeros(u1.len());
    if support.is_empty() {
        return Ok(SupportEstimate {
            v_hat,
            support,
            empty: true,
        });
    }
    let w = 1.0 / (support.len() as f64).sqrt();
    for &i in &support {
        v_hat[i] = w.copysign(u1[i]);
    }
    Ok(SupportEstimate {
        v_hat,
        support,
        empty: false,
    })
}

/// `(|true positives| - |false positives|) / m`.
pub fn support_score(est: &SupportEstimate, v: &SpikeVector) -> f64 {
    let m = v.support.len();
    if m == 0 {
        return 0.0;
    }
    let tp = est.support.iter().filter(|i| v.support.binary_search(i).is_ok()).count();
    let fp = est.support.len() - tp;
    (tp as f64 - fp as f64) / m as f64
}

/// `v_hat == v` up to a global sign: same support and matching signs.
///
/// Only meaningful for spikes with equal-magnitude entries; for other priors
/// this compares supports and signs.
pub fn exact_recovery(est: &SupportEstimate, v: &SpikeVector) -> bool {
    if est.support != v.support {
        return false;
    }
    let agree = |sign: f64| {
        est.support
            .iter()
            .all(|&i| (est.v_hat[i] * sign).signum() == v.entries[i].signum())
    };
    agree(1.0) || agree(-1.0)
}
