//! Monte Carlo check of the deterministic equivalents of the noise resolvent
//! `R_0(z) = (K_0 - z I)^{-1}`.

use nalgebra::{Cholesky, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kernel_matrix;
use crate::error::{invalid, GctError, Result};
use crate::kernels::KernelSpec;
use crate::model::{gaussian_matrix, gram};
use crate::theory::bulk_edge;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadFormCheck {
    pub n: usize,
    pub p: usize,
    pub z: f64,
    pub lambda_plus: f64,
    /// Predicted `s(z)`, `s(z) / (1 + a_1 gamma s(z))` and `s_b (1 + gamma - a_1 gamma s_b)`.
    pub s: f64,
    pub s_breve: f64,
    pub s_ring: f64,
    /// Observed `u^T R_0 w`, `u^T S R_0 w`, `u^T S R_0 S w`.
    pub observed: [f64; 3],
    /// `|observed - <u, w> predicted|` for each of the three forms.
    pub deviations: [f64; 3],
}

impl QuadFormCheck {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().cloned().fold(0.0, f64::max)
    }
}

/// Draws pure-noise data with `seed`, forms `K_0(f)` and compares three
/// resolvent quadratic forms with their deterministic equivalents at real
/// `z` above the bulk edge.
pub fn quadratic_form_check(
    n: usize,
    p: usize,
    spec: &KernelSpec,
    z: f64,
    u: &DVector<f64>,
    w: &DVector<f64>,
    seed: u64,
) -> Result<QuadFormCheck> {
    if u.len() != p || w.len() != p {
        return Err(invalid("u and w must have length p"));
    }
    if n == 0 || p == 0 {
        return Err(invalid("n and p must be positive"));
    }
    let gamma = p as f64 / n as f64;
    let a1 = spec.a1();
    let law = bulk_edge(a1, spec.nu2, gamma)?;
    if !(z > law.lambda_plus) {
        return Err(GctError::Domain(format!(
            "z = {z} is inside the bulk (edge {})",
            law.lambda_plus
        )));
    }
    let s = law.stieltjes(Complex64::from(z))?.re;
    let s_breve = s / (1.0 + a1 * gamma * s);
    let s_ring = s_breve * (1.0 + gamma - a1 * gamma * s_breve);

    let cov = gram(&gaussian_matrix(n, p, seed));
    let k0 = kernel_matrix(&cov, n, spec)?.k;
    let mut m = -k0;
    for i in 0..p {
        m[(i, i)] += z;
    }
    // z I - K_0 is positive definite when z clears the empirical spectrum
    let chol = Cholesky::new(m).ok_or_else(|| {
        GctError::Domain(format!("z = {z} is not above the empirical spectrum of K_0"))
    })?;
    let su = &cov * u;
    let sw = &cov * w;
    let x = chol.solve(w);
    let xs = chol.solve(&sw);
    // R_0 = -(z I - K_0)^{-1}
    let observed = [-u.dot(&x), -su.dot(&x), -su.dot(&xs)];
    let uw = u.dot(w);
    let predicted = [uw * s, uw * s_breve, uw * s_ring];
    let deviations = [
        (observed[0] - predicted[0]).abs(),
        (observed[1] - predicted[1]).abs(),
        (observed[2] - predicted[2]).abs(),
    ];
    Ok(QuadFormCheck {
        n,
        p,
        z,
        lambda_plus: law.lambda_plus,
        s,
        s_breve,
        s_ring,
        observed,
        deviations,
    })
}
