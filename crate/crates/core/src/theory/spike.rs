//! Limits of the top eigenvalue and of the squared overlap `<u_1, v>^2`.

use serde::{Deserialize, Serialize};

use super::bulk::{bulk_edge, BulkLaw};
use crate::error::{invalid, GctError, Result};
use crate::kernels::KernelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Informative,
    Bulk,
    WignerInformative,
    WignerBulk,
    BbpLinear,
}

impl Regime {
    pub fn is_informative(self) -> bool {
        matches!(self, Regime::Informative | Regime::WignerInformative)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryResult {
    pub regime: Regime,
    pub tau: f64,
    /// Bound on the part of `tau` dropped by the Hermite truncation.
    pub tau_tail: f64,
    pub s_plus: Option<f64>,
    /// Limit of the top eigenvalue of `K(f)`.
    pub lambda_limit: f64,
    pub cos2_limit: f64,
    pub bulk: BulkLaw,
    /// Overlap recomputed from `psi'` along the master equation; agrees with
    /// `cos2_limit` in the informative regime.
    pub theta2_check: Option<f64>,
}

impl TheoryResult {
    pub fn informative(&self) -> bool {
        self.regime.is_informative() || (self.regime == Regime::BbpLinear && self.cos2_limit > 0.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpikeOptions {
    /// Apply the nonlinear formulas when `tau` vanishes by cancellation at
    /// `lambda > 1`, using the `tau -> 0` limit of `s_+`.
    pub allow_zero_tau: bool,
}

/// Top eigenvalue and squared overlap of sample-covariance PCA,
/// `(lambda + lambda gamma/(lambda - 1), (1 - gamma/(lambda-1)^2)/(1 + gamma/(lambda-1)))`
/// above `1 + sqrt(gamma)` and `((1 + sqrt(gamma))^2, 0)` below.
pub fn bbp(gamma: f64, lambda: f64) -> (f64, f64) {
    let edge = 1.0 + gamma.sqrt();
    if lambda <= edge {
        return (edge * edge, 0.0);
    }
    let d = lambda - 1.0;
    (
        lambda + lambda * gamma / d,
        (1.0 - gamma / (d * d)) / (1.0 + gamma / d),
    )
}

/// Root of the master equation `1 + tau s + a_1 s (lambda + gamma + tau gamma s - 1) = 0`
/// on the branch continuing `-1/(a_1 (lambda + gamma - 1))` from `tau = 0`.
///
/// Written as `-2/(B + sqrt(B^2 - 4A))`, which equals the usual quadratic
/// formula but does not cancel when `tau` is small.
pub fn s_plus(a1: f64, gamma: f64, lambda: f64, tau: f64) -> f64 {
    let a = a1 * gamma * tau;
    let b = a1 * (lambda + gamma - 1.0) + tau;
    let disc = (b * b - 4.0 * a).max(0.0);
    -2.0 / (b + disc.sqrt())
}

/// The overlap formula evaluated at `x`.
pub fn theta2(x: f64, a1: f64, nu2: f64, gamma: f64, lambda: f64, tau: f64) -> f64 {
    let d = 1.0 + a1 * gamma * x;
    let num = 1.0
        + gamma * x * (a1 * (2.0 + a1 * gamma * x) * (1.0 + a1 * a1 * gamma * x * x) - x * d * d * nu2);
    let den = x * d * (tau + a1 * (lambda + gamma + 2.0 * tau * gamma * x - 1.0));
    -num / den
}

/// Same quantity as [`theta2`], from `-s (1 + a_1 gamma s) psi'(s) / (B + 2 a_1 tau gamma s)`.
fn theta2_from_psi(law: &BulkLaw, s: f64, lambda: f64, tau: f64) -> Result<f64> {
    let (a1, g) = (law.a1, law.gamma);
    let b = a1 * (lambda + g - 1.0) + tau;
    Ok(-s * (1.0 + a1 * g * s) * law.psi_prime(s)? / (b + 2.0 * a1 * tau * g * s))
}

pub fn spike_forward(spec: &KernelSpec, gamma: f64, beta: f64, lambda: f64) -> Result<TheoryResult> {
    spike_forward_with(spec, gamma, beta, lambda, SpikeOptions::default())
}

/// Asymptotic top eigenvalue and overlap of `K(f)` at `(gamma, beta, lambda)`.
///
/// Eigenvalues are on the scale of `K(f)`, whose diagonal is zeroed, so the
/// linear kernel sits one below the sample-covariance values of [`bbp`].
pub fn spike_forward_with(
    spec: &KernelSpec,
    gamma: f64,
    beta: f64,
    lambda: f64,
    opts: SpikeOptions,
) -> Result<TheoryResult> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta = {beta} must be positive")));
    }
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(invalid(format!("lambda = {lambda} must be >= 1")));
    }
    let a1 = spec.a1();
    if a1 < 0.0 {
        return Err(invalid("a1 < 0; negate the kernel first"));
    }
    let bulk = bulk_edge(a1, spec.nu2, gamma)?;
    let tau = spec.tau(beta, lambda);
    let tau_tail = spec.tau_tail_bound(beta, lambda);
    let mut out = TheoryResult {
        regime: Regime::Bulk,
        tau,
        tau_tail,
        s_plus: None,
        lambda_limit: bulk.lambda_plus,
        cos2_limit: 0.0,
        bulk,
        theta2_check: None,
    };

    if a1 == 0.0 {
        let r = (gamma * spec.nu2).sqrt();
        if tau > r {
            out.regime = Regime::WignerInformative;
            out.lambda_limit = tau + gamma * spec.nu2 / tau;
            out.cos2_limit = 1.0 - gamma * spec.nu2 / (tau * tau);
        } else {
            out.regime = Regime::WignerBulk;
        }
        return Ok(out);
    }

    if spec.is_linear() {
        let (eig, cos2) = bbp(gamma, lambda);
        out.regime = Regime::BbpLinear;
        out.lambda_limit = a1 * (eig - 1.0);
        out.cos2_limit = cos2;
        if cos2 > 0.0 {
            out.s_plus = Some(s_plus(a1, gamma, lambda, 0.0));
        }
        return Ok(out);
    }

    if tau == 0.0 {
        if lambda == 1.0 {
            return Err(GctError::Unidentifiable);
        }
        if !opts.allow_zero_tau {
            return Err(GctError::Domain(format!(
                "tau vanishes at lambda = {lambda} for a nonlinear kernel"
            )));
        }
    }

    let s = s_plus(a1, gamma, lambda, tau);
    out.s_plus = Some(s);
    let inside = s > -1.0 / (a1 * gamma) && s < 0.0;
    if !inside || bulk.psi_prime(s)? <= 0.0 {
        return Ok(out);
    }
    let lam = bulk.psi(s)?;
    let th = theta2(s, a1, spec.nu2, gamma, lambda, tau);
    if !(lam > bulk.lambda_plus) || !(th > 0.0 && th <= 1.0 + 1e-9) {
        return Err(GctError::Numeric(format!(
            "informative point violates psi(s+) > lambda+ or theta^2 in (0,1]: \
             psi = {lam}, lambda+ = {}, theta^2 = {th}",
            bulk.lambda_plus
        )));
    }
    out.regime = Regime::Informative;
    out.lambda_limit = lam;
    out.cos2_limit = th.min(1.0);
    out.theta2_check = Some(theta2_from_psi(&bulk, s, lambda, tau)?);
    Ok(out)
}
