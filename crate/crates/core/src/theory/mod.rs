//! Asymptotic predictions: bulk edge, spike limits and phase transitions.

mod bulk;
mod spike;
mod transition;

pub use bulk::{bulk_density, bulk_edge, psi, psi_prime, stieltjes, BulkLaw, DENSITY_ETA};
pub use spike::{
    bbp, s_plus, spike_forward, spike_forward_with, theta2, Regime, SpikeOptions, TheoryResult,
};
pub use transition::{
    lambda_star_kernel, lambda_star_opt, lambda_star_soft, optimal_kernel, CurveExtra, OptSearch,
    OptimalKernel, SoftFamily, TransitionCurve,
};
