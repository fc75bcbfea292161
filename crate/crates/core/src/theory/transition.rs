//! Phase-transition locations `lambda_*` for a kernel, for the best soft
//! threshold, and for the optimal kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bulk::{bulk_edge, BulkLaw};
use super::spike::s_plus;
use crate::error::{invalid, GctError, Result};
use crate::kernels::{sqrt_factorial, KernelSpec, DEFAULT_DEGREE};

const LAMBDA_TOL: f64 = 1e-10;

fn check_gb(gamma: f64, beta: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma = {gamma} must be positive")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta = {beta} must be positive")));
    }
    Ok(())
}

/// Sign test for the informative regime at a given `tau`.
fn informative(law: &BulkLaw, lambda: f64, tau: f64) -> bool {
    let (a1, g) = (law.a1, law.gamma);
    if a1 == 0.0 {
        return tau > (g * law.nu2).sqrt();
    }
    let s = s_plus(a1, g, lambda, tau);
    s > -1.0 / (a1 * g) && s < 0.0 && law.psi_prime(s).map(|d| d > 0.0).unwrap_or(false)
}

/// Smallest `lambda` at which `pred` holds, for a predicate that is false
/// just above 1 and stays true once it turns true.
fn first_true(pred: impl Fn(f64) -> bool, start_hi: f64) -> Result<f64> {
    let lo = 1.0 + 1e-12;
    if pred(lo) {
        return Ok(1.0);
    }
    let mut hi = start_hi.max(1.0 + 1e-6);
    let mut k = 0;
    while !pred(hi) {
        hi = 1.0 + 2.0 * (hi - 1.0);
        k += 1;
        if k > 60 {
            return Err(GctError::NoBracket("informative lambda".into()));
        }
    }
    let g = |x: f64| if pred(x) { 1.0 } else { -1.0 };
    let mut a = lo;
    let mut b = hi;
    while b - a > LAMBDA_TOL {
        let mid = 0.5 * (a + b);
        if g(mid) > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(b)
}

/// Transition location of `spec`: below it `K(f)` has no outlier, above it it
/// does. Needs `tau` non-decreasing in `lambda`.
pub fn lambda_star_kernel(spec: &KernelSpec, gamma: f64, beta: f64) -> Result<f64> {
    check_gb(gamma, beta)?;
    if spec.is_linear() {
        return Ok(1.0 + gamma.sqrt());
    }
    if !spec.tau_nondecreasing() {
        return Err(GctError::UnsupportedKernel(format!(
            "{spec}: tau is not known to be monotone in lambda"
        )));
    }
    let law = bulk_edge(spec.a1(), spec.nu2, gamma)?;
    first_true(|lam| informative_tau(&law, lam, spec.tau(beta, lam)), 1.0 + gamma.sqrt())
}

/// Soft-threshold kernels on a grid of thresholds, built once.
#[derive(Clone, Debug)]
pub struct SoftFamily {
    pub t_grid: Vec<f64>,
    specs: Vec<KernelSpec>,
}

impl SoftFamily {
    pub fn new(t_grid: &[f64]) -> Result<Self> {
        if t_grid.is_empty() {
            return Err(invalid("t_grid is empty"));
        }
        let specs = t_grid
            .par_iter()
            .map(|&t| KernelSpec::soft(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            t_grid: t_grid.to_vec(),
            specs,
        })
    }

    /// `0, 0.01, ..., 5`.
    pub fn default_grid() -> Vec<f64> {
        (0..=500).map(|i| i as f64 / 100.0).collect()
    }

    pub fn spec(&self, i: usize) -> &KernelSpec {
        &self.specs[i]
    }

    /// `(lambda_{s,*}, t_*)`; ties go to the smaller threshold.
    pub fn lambda_star(&self, gamma: f64, beta: f64) -> Result<(f64, f64)> {
        let mut best = (f64::INFINITY, f64::NAN);
        for (t, spec) in self.t_grid.iter().zip(&self.specs) {
            let l = lambda_star_kernel(spec, gamma, beta)?;
            if l < best.0 {
                best = (l, *t);
            }
        }
        Ok(best)
    }
}

/// Best soft-threshold transition over `t_grid`, with its threshold.
pub fn lambda_star_soft(gamma: f64, beta: f64, t_grid: &[f64]) -> Result<(f64, f64)> {
    check_gb(gamma, beta)?;
    SoftFamily::new(t_grid)?.lambda_star(gamma, beta)
}

/// Search settings for the optimal kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptSearch {
    /// Number of log-spaced `a_1` values in `[a1_min, 1]`.
    pub a1_points: usize,
    pub a1_min: f64,
    /// Golden-section refinement around the best grid value.
    pub refine: bool,
    /// Hermite truncation of the candidate kernels; `None` keeps every term.
    pub degree: Option<usize>,
}

impl Default for OptSearch {
    fn default() -> Self {
        Self {
            a1_points: 60,
            a1_min: 1e-3,
            refine: true,
            degree: None,
        }
    }
}

impl OptSearch {
    /// The search as run with a degree-21 Hermite truncation.
    pub fn truncated() -> Self {
        Self {
            degree: Some(DEFAULT_DEGREE),
            ..Self::default()
        }
    }
}

/// Outcome of the optimal-kernel search.
#[derive(Clone, Debug)]
pub struct OptimalKernel {
    pub lambda_star: f64,
    pub a1: f64,
    /// Unit-norm kernel with the optimal coefficients at `lambda_star`.
    pub kernel: KernelSpec,
}

/// `sum_{odd k >= 3} (lambda-1)^{2k} / (k! beta^{2(k-1)})`, up to `degree` if given.
///
/// The full sum is `beta^2 (sinh(x^2) - x^2)` with `x = (lambda-1)/beta`.
fn signal_norm2(beta: f64, lambda: f64, degree: Option<usize>) -> f64 {
    let x = (lambda - 1.0) / beta;
    let y = x * x;
    match degree {
        None if y > 1.0 => beta * beta * (y.sinh() - y),
        _ => {
            let top = degree.unwrap_or(41);
            let mut term = y; // y^k / k! at k = 1
            let mut sum = 0.0;
            for k in 2..=top {
                term *= y / k as f64;
                if k % 2 == 1 {
                    sum += term;
                }
            }
            beta * beta * sum
        }
    }
}

/// Degree at which the optimal series has converged to double precision.
fn converged_degree(beta: f64, lambda: f64) -> usize {
    let y = ((lambda - 1.0) / beta).powi(2);
    let mut term = y;
    let mut sum = 0.0;
    for k in 2..=161usize {
        term *= y / k as f64;
        if k % 2 == 1 {
            sum += term;
            if k >= DEFAULT_DEGREE && term < 1e-17 * sum {
                return k;
            }
        }
    }
    161
}

/// Sign test with a guard for `tau` overflowing far above the transition.
fn informative_tau(law: &BulkLaw, lambda: f64, tau: f64) -> bool {
    if tau.is_infinite() {
        return tau > 0.0;
    }
    informative(law, lambda, tau)
}

/// Transition of the unit-norm kernel whose higher coefficients are
/// proportional to `(lambda-1)^k / (sqrt(k!) beta^{k-1})`, evaluated at the
/// same `lambda` that defines them. By Cauchy-Schwarz this kernel maximises
/// `tau` among kernels with the given `a_1` and norm, which gives
/// `tau = sqrt(1 - a_1^2) |g_lambda|`.
fn opt_transition(gamma: f64, beta: f64, a1: f64, degree: Option<usize>) -> Result<f64> {
    let law = bulk_edge(a1, 1.0, gamma)?;
    let w = (1.0 - a1 * a1).max(0.0).sqrt();
    if w == 0.0 {
        return Ok(1.0 + gamma.sqrt());
    }
    first_true(
        |lam| informative_tau(&law, lam, w * signal_norm2(beta, lam, degree).sqrt()),
        1.0 + gamma.sqrt(),
    )
}

/// Kernel with `a_1` and higher coefficients set from `(lambda, beta)`, unit
/// norm. Without a degree the series is cut where it has converged.
pub fn optimal_kernel(a1: f64, beta: f64, lambda: f64, degree: Option<usize>) -> Result<KernelSpec> {
    let top = degree.unwrap_or_else(|| converged_degree(beta, lambda));
    let mut coeffs = vec![0.0; top + 1];
    coeffs[1] = a1;
    let d = lambda - 1.0;
    let g2 = signal_norm2(beta, lambda, Some(top));
    let w = (1.0 - a1 * a1).max(0.0).sqrt();
    if g2 > 0.0 {
        for k in (3..=top).step_by(2) {
            coeffs[k] = w * d.powi(k as i32) / (sqrt_factorial(k) * beta.powi(k as i32 - 1)) / g2.sqrt();
        }
    }
    KernelSpec::hermite(coeffs)
}

/// Optimal transition `lambda_*(gamma, beta)` over odd kernels, scanning `a_1`
/// at unit norm (the transition is scale free).
pub fn lambda_star_opt(gamma: f64, beta: f64, cfg: &OptSearch) -> Result<OptimalKernel> {
    check_gb(gamma, beta)?;
    if cfg.a1_points < 2 || !(cfg.a1_min > 0.0 && cfg.a1_min < 1.0) {
        return Err(invalid("a1 search grid needs >= 2 points with 0 < a1_min < 1"));
    }
    let n = cfg.a1_points;
    let ratio = (1.0 / cfg.a1_min).ln() / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|i| cfg.a1_min * (ratio * i as f64).exp()).collect();
    grid[n - 1] = 1.0;
    let vals = grid
        .iter()
        .map(|&a| opt_transition(gamma, beta, a, cfg.degree))
        .collect::<Result<Vec<_>>>()?;
    let (mut best_i, mut best) = (0, vals[0]);
    for (i, &v) in vals.iter().enumerate() {
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut best_a = grid[best_i];

    let zero = opt_transition(gamma, beta, 0.0, cfg.degree)?;
    if zero < best {
        best = zero;
        best_a = 0.0;
    } else if cfg.refine {
        let lo = if best_i == 0 { grid[0] * 0.5 } else { grid[best_i - 1] };
        let hi = grid[(best_i + 1).min(n - 1)];
        let (a, v) = golden_min(|a| opt_transition(gamma, beta, a, cfg.degree), lo, hi, 60)?;
        if v < best {
            best = v;
            best_a = a;
        }
    }
    Ok(OptimalKernel {
        lambda_star: best,
        a1: best_a,
        kernel: optimal_kernel(best_a, beta, best, cfg.degree)?,
    })
}

fn golden_min(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, iters: usize) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Per-point extra output of a transition curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveExtra {
    Soft { t_star: f64 },
    Optimal { a1_star: f64, nu_star: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionCurve {
    pub gamma: f64,
    pub beta: Vec<f64>,
    pub lambda_star: Vec<f64>,
    pub extra: Vec<CurveExtra>,
}

impl TransitionCurve {
    pub fn soft(gamma: f64, betas: &[f64], family: &SoftFamily) -> Result<Self> {
        let pts = betas
            .par_iter()
            .map(|&b| family.lambda_star(gamma, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gamma,
            beta: betas.to_vec(),
            lambda_star: pts.iter().map(|p| p.0).collect(),
            extra: pts.iter().map(|p| CurveExtra::Soft { t_star: p.1 }).collect(),
        })
    }

    pub fn optimal(gamma: f64, betas: &[f64], cfg: &OptSearch) -> Result<Self> {
        let pts = betas
            .par_iter()
            .map(|&b| lambda_star_opt(gamma, b, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            gamma,
            beta: betas.to_vec(),
            lambda_star: pts.iter().map(|p| p.lambda_star).collect(),
            extra: pts
                .iter()
                .map(|p| CurveExtra::Optimal {
                    a1_star: p.a1,
                    nu_star: 1.0,
                })
                .collect(),
        })
    }
}
