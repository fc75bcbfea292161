//! Empirical side: kernel matrices, spectral estimates, detection and
//! support recovery.

mod diagnostics;
mod eigen;
mod support;

pub use diagnostics::{quadratic_form_check, QuadFormCheck};
pub use eigen::{dense_top, lanczos_top, top_eigs, Eigs, DENSE_CUTOFF};
pub use support::{exact_recovery, recover_support, support_score, SupportEstimate, DEFAULT_EPS_EXPONENT};

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, GctError, Result};
use crate::kernels::KernelSpec;
use crate::model::SpikeVector;
use crate::theory::{BulkLaw, TheoryResult};

/// `K(f)` with `K_ij = f(sqrt(n) Y_ij) / sqrt(n)` off the diagonal, zero on it.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub k: DMatrix<f64>,
    pub n: usize,
}

/// Applies `spec` entrywise to the off-diagonal part of `y`.
pub fn kernel_matrix(y: &DMatrix<f64>, n: usize, spec: &KernelSpec) -> Result<KernelMatrix> {
    let p = y.nrows();
    if y.ncols() != p {
        return Err(invalid("Y must be square"));
    }
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    let rn = (n as f64).sqrt();
    let mut k = DMatrix::zeros(p, p);
    for j in 0..p {
        for i in (j + 1)..p {
            let yij = y[(i, j)];
            let x = spec.eval(rn * yij) / rn;
            if !x.is_finite() {
                return Err(GctError::NonFinite {
                    row: i,
                    col: j,
                    value: yij,
                });
            }
            k[(i, j)] = x;
            k[(j, i)] = x;
        }
    }
    Ok(KernelMatrix { k, n })
}

/// Top of the spectrum of `K(f)` and what it says about the spike.
#[derive(Clone, Debug)]
pub struct SpectralEstimate {
    pub lambda1: f64,
    pub lambda2: f64,
    pub u1: DVector<f64>,
    /// `<u_1, v>^2`, when a reference spike is known.
    pub cos2: Option<f64>,
    /// `(lambda1 - lambda2) / lambda2`.
    pub gap: f64,
}

/// Builds the estimate from the top two eigenpairs of `k`.
pub fn estimate_from_matrix(k: &DMatrix<f64>, v_ref: Option<&SpikeVector>) -> Result<SpectralEstimate> {
    let eigs = top_eigs(k, 2.min(k.nrows()))?;
    let lambda1 = eigs.values[0];
    let lambda2 = eigs.values.get(1).copied().unwrap_or(f64::NAN);
    let mut u1 = eigs.vectors[0].clone();
    let cos2 = match v_ref {
        Some(v) => {
            if v.len() != u1.len() {
                return Err(invalid("reference spike has the wrong length"));
            }
            let c = u1.dot(&v.entries);
            if c < 0.0 {
                u1.neg_mut();
            }
            Some(c * c)
        }
        None => {
            let imax = u1.iamax();
            if u1[imax] < 0.0 {
                u1.neg_mut();
            }
            None
        }
    };
    Ok(SpectralEstimate {
        lambda1,
        lambda2,
        u1,
        cos2,
        gap: (lambda1 - lambda2) / lambda2,
    })
}

/// Generalized covariance thresholding: top eigenpair of `K(f)` built from `y`.
pub fn gct(y: &DMatrix<f64>, n: usize, spec: &KernelSpec, v_ref: Option<&SpikeVector>) -> Result<SpectralEstimate> {
    let km = kernel_matrix(y, n, spec)?;
    estimate_from_matrix(&km.k, v_ref)
}

/// Top eigenpair of `y` itself (plain PCA, diagonal kept).
pub fn pca(y: &DMatrix<f64>, v_ref: Option<&SpikeVector>) -> Result<SpectralEstimate> {
    estimate_from_matrix(y, v_ref)
}

/// Runs soft-threshold GCT for every `t` and keeps the run with the largest
/// normalized gap; ties go to the smaller `t`.
pub fn adaptive_threshold(
    y: &DMatrix<f64>,
    n: usize,
    t_grid: &[f64],
    v_ref: Option<&SpikeVector>,
) -> Result<(f64, SpectralEstimate)> {
    if t_grid.is_empty() {
        return Err(invalid("t_grid is empty"));
    }
    let mut best: Option<(f64, SpectralEstimate)> = None;
    for &t in t_grid {
        let est = gct(y, n, &KernelSpec::soft(t)?, v_ref)?;
        let better = match &best {
            None => true,
            Some((bt, b)) => est.gap > b.gap || (est.gap == b.gap && t < *bt),
        };
        if better {
            best = Some((t, est));
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Rejects the null when `lambda1 > lambda_+ + eps`.
pub fn detect(estimate: &SpectralEstimate, bulk: &BulkLaw, eps: f64) -> bool {
    estimate.lambda1 > bulk.lambda_plus + eps
}

/// Half the distance between the predicted outlier and the edge, when the
/// theory predicts an outlier.
pub fn default_detect_eps(theory: &TheoryResult) -> Option<f64> {
    let gap = theory.lambda_limit - theory.bulk.lambda_plus;
    (theory.informative() && gap > 0.0).then_some(gap / 2.0)
}
