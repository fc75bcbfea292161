//! Kernel functions, their Hermite coefficients and the spike series `tau`.

pub mod hermite;
mod spec;

pub use hermite::{hermite_coeffs, hermite_eval, HermiteBasis};
pub use spec::{hard_threshold, kernel_norm, soft_threshold, KernelKind, KernelSpec, DEFAULT_DEGREE};

/// `sqrt(k!)` for `k` up to 170.
pub(crate) fn sqrt_factorial(k: usize) -> f64 {
    (1..=k).fold(1.0f64, |acc, j| acc * (j as f64).sqrt())
}
