use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::hermite::{self, hermite_series, HermiteBasis, Rule};
use super::sqrt_factorial;
use crate::error::{GctError, Result};

/// Hermite truncation degree used for `tau` and kernel series.
pub const DEFAULT_DEGREE: usize = 21;

/// `sign(x) (|x| - t)_+`.
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    let m = x.abs() - t;
    if m > 0.0 {
        m.copysign(x)
    } else {
        0.0
    }
}

/// `x 1{|x| >= t}`.
pub fn hard_threshold(x: f64, t: f64) -> f64 {
    if x.abs() >= t {
        x
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelKind {
    Identity,
    Soft { t: f64 },
    Hard { t: f64 },
    /// Evaluated as `sum_k a_k h_k(x)`.
    HermiteSeries,
    /// Monomial coefficients `c_0 + c_1 x + ...`.
    Polynomial { monomial: Vec<f64> },
}

/// A kernel together with its Hermite expansion.
///
/// Coefficients are always those of the kernel actually applied: when the
/// raw kernel has `a_1 < 0` it is replaced by `-f` and `negated` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Truncation degree `L`.
    pub degree: usize,
    /// `a_0, ..., a_L`.
    pub coeffs: Vec<f64>,
    /// `|f|_phi^2`; the exact norm when available, otherwise `sum a_k^2`.
    pub nu2: f64,
    pub odd: bool,
    pub negated: bool,
    /// Overall multiplier applied on top of `kind`.
    pub scale: f64,
}

const ODD_TOL: f64 = 1e-8;

impl KernelSpec {
    pub fn identity() -> Self {
        let mut coeffs = vec![0.0; DEFAULT_DEGREE + 1];
        coeffs[1] = 1.0;
        Self {
            kind: KernelKind::Identity,
            degree: DEFAULT_DEGREE,
            coeffs,
            nu2: 1.0,
            odd: true,
            negated: false,
            scale: 1.0,
        }
    }

    pub fn soft(t: f64) -> Result<Self> {
        Self::soft_with_degree(t, DEFAULT_DEGREE)
    }

    pub fn soft_with_degree(t: f64, degree: usize) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(GctError::InvalidKernel(format!("soft threshold t = {t} must be >= 0")));
        }
        let rule = hermite::piecewise_gaussian_rule(&[-t, t]);
        Self::from_pointwise(KernelKind::Soft { t }, move |x| soft_threshold(x, t), degree, &rule)
    }

    pub fn hard(t: f64) -> Result<Self> {
        Self::hard_with_degree(t, DEFAULT_DEGREE)
    }

    /// Discontinuous at `+-t`; the rule places panel edges there so each
    /// piece is integrated as a smooth function.
    pub fn hard_with_degree(t: f64, degree: usize) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(GctError::InvalidKernel(format!("hard threshold t = {t} must be >= 0")));
        }
        let rule = hermite::piecewise_gaussian_rule(&[-t, t]);
        Self::from_pointwise(KernelKind::Hard { t }, move |x| hard_threshold(x, t), degree, &rule)
    }

    /// Kernel given directly by its Hermite coefficients `a_0..`.
    pub fn hermite(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(GctError::InvalidKernel("hermite kernel needs a_1".into()));
        }
        let degree = coeffs.len() - 1;
        let nu2 = coeffs.iter().map(|a| a * a).sum();
        Self::finish(KernelKind::HermiteSeries, degree, coeffs, nu2)
    }

    /// Odd polynomial in the monomial basis; converted exactly by Gauss-Hermite.
    pub fn polynomial(monomial: Vec<f64>) -> Result<Self> {
        let poly_degree = monomial.len().saturating_sub(1);
        let degree = poly_degree.max(DEFAULT_DEGREE);
        let rule = hermite::gauss_hermite(degree + 2);
        let mono = monomial.clone();
        let coeffs = hermite::coeffs_with_rule(move |x| horner(&mono, x), degree, &rule)?;
        let nu2 = coeffs.iter().map(|a| a * a).sum();
        Self::finish(KernelKind::Polynomial { monomial }, degree, coeffs, nu2)
    }

    /// Degree-`degree` Hermite truncation of `self`, as a series kernel.
    pub fn truncated_series(&self, degree: usize) -> Result<Self> {
        let mut c = self.coeffs.clone();
        c.resize(degree + 1, 0.0);
        Self::hermite(c)
    }

    fn from_pointwise(
        kind: KernelKind,
        f: impl Fn(f64) -> f64,
        degree: usize,
        rule: &Rule,
    ) -> Result<Self> {
        let coeffs = hermite::coeffs_with_rule(&f, degree, rule)?;
        let nu2 = rule.integrate(|x| {
            let y = f(x);
            y * y
        });
        Self::finish(kind, degree, coeffs, nu2)
    }

    fn finish(kind: KernelKind, degree: usize, mut coeffs: Vec<f64>, nu2: f64) -> Result<Self> {
        let even_max = coeffs
            .iter()
            .step_by(2)
            .fold(0.0f64, |m, a| m.max(a.abs()));
        if even_max > ODD_TOL {
            return Err(GctError::InvalidKernel(format!(
                "kernel is not odd (even Hermite coefficient of size {even_max:e})"
            )));
        }
        for a in coeffs.iter_mut().step_by(2) {
            *a = 0.0;
        }
        if coeffs.iter().all(|a| *a == 0.0) {
            return Err(GctError::InvalidKernel("kernel vanishes identically".into()));
        }
        let mut spec = Self {
            kind,
            degree,
            coeffs,
            nu2,
            odd: true,
            negated: false,
            scale: 1.0,
        };
        if spec.a1() < 0.0 {
            spec.coeffs.iter_mut().for_each(|a| *a = -*a);
            spec.negated = true;
        }
        Ok(spec)
    }

    pub fn a1(&self) -> f64 {
        self.coeffs.get(1).copied().unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.nu2.sqrt()
    }

    /// `sum_{k <= L} a_k^2`.
    pub fn truncated_nu2(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum()
    }

    /// Evaluates the kernel actually used (including negation and scale).
    pub fn eval(&self, x: f64) -> f64 {
        let raw = match &self.kind {
            KernelKind::Identity => x,
            KernelKind::Soft { t } => soft_threshold(x, *t),
            KernelKind::Hard { t } => hard_threshold(x, *t),
            KernelKind::HermiteSeries => return hermite_series(&self.coeffs, x),
            KernelKind::Polynomial { monomial } => horner(monomial, x),
        };
        let sign = if self.negated { -1.0 } else { 1.0 };
        sign * self.scale * raw
    }

    /// `c f` for `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0, "scale must be positive");
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|a| *a *= c);
        out.nu2 *= c * c;
        if !matches!(out.kind, KernelKind::HermiteSeries) {
            out.scale *= c;
        }
        out
    }

    /// True when `f` is a multiple of `h_1`.
    pub fn is_linear(&self) -> bool {
        let a1 = self.a1();
        a1 > 0.0
            && self.coeffs.iter().skip(2).all(|a| a.abs() <= 1e-12 * a1)
            && (self.nu2 - a1 * a1).abs() <= 1e-10 * a1 * a1
    }

    /// Whether `tau(f, beta, .)` is known to be non-decreasing in `lambda`:
    /// all `a_l >= 0` for `l >= 3`, or a soft threshold.
    pub fn tau_nondecreasing(&self) -> bool {
        matches!(self.kind, KernelKind::Soft { .. })
            || self.coeffs.iter().skip(3).all(|a| *a >= -1e-12)
    }

    /// Truncated spike series `sum_{l=3}^{L} a_l (lambda-1)^l / (sqrt(l!) beta^(l-1))`.
    pub fn tau_truncated(&self, beta: f64, lambda: f64) -> f64 {
        tau_series(&self.coeffs, beta, lambda)
    }

    /// Full spike series.
    ///
    /// Since `E h_l(Z + x) = x^l / sqrt(l!)`, the whole series equals
    /// `beta (E f(Z + x) - a_1 x)` with `x = (lambda - 1)/beta`. For `x <= 1`
    /// the truncated series has already converged and avoids the cancellation
    /// in that difference; beyond it the expectation is integrated directly.
    pub fn tau(&self, beta: f64, lambda: f64) -> f64 {
        let x = (lambda - 1.0) / beta;
        match self.kind {
            KernelKind::Identity | KernelKind::HermiteSeries => self.tau_truncated(beta, lambda),
            _ if x.abs() <= 1.0 => self.tau_truncated(beta, lambda),
            _ => beta * (self.shifted_mean(x) - self.a1() * x),
        }
    }

    /// `E f(Z + x)` for standard normal `Z`.
    pub fn shifted_mean(&self, x: f64) -> f64 {
        let kinks: Vec<f64> = match self.kind {
            KernelKind::Soft { t } | KernelKind::Hard { t } => vec![-t - x, t - x],
            _ => Vec::new(),
        };
        let rule = hermite::piecewise_gaussian_rule(&kinks);
        rule.integrate(|z| self.eval(z + x))
    }

    /// Cauchy-Schwarz bound on the part of `tau` beyond the truncation degree.
    pub fn tau_tail_bound(&self, beta: f64, lambda: f64) -> f64 {
        let rest = (self.nu2 - self.truncated_nu2()).max(0.0);
        if rest == 0.0 {
            return 0.0;
        }
        let d = lambda - 1.0;
        let mut sum = 0.0;
        let mut log_term;
        for k in (self.degree + 1)..400 {
            log_term = 2.0 * k as f64 * d.abs().ln()
                - lgamma_int(k + 1)
                - 2.0 * (k as f64 - 1.0) * beta.ln();
            let term = log_term.exp();
            sum += term;
            if k > self.degree + 5 && term < 1e-18 * sum.max(1e-300) {
                break;
            }
        }
        rest.sqrt() * sum.sqrt()
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

pub(crate) fn tau_series(coeffs: &[f64], beta: f64, lambda: f64) -> f64 {
    let d = lambda - 1.0;
    if d == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (l, a) in coeffs.iter().enumerate().skip(3) {
        if *a == 0.0 {
            continue;
        }
        sum += a * d.powi(l as i32) / (sqrt_factorial(l) * beta.powi(l as i32 - 1));
    }
    sum
}

fn lgamma_int(k: usize) -> f64 {
    (1..k).map(|j| (j as f64).ln()).sum()
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// `|f|_phi^2` by direct quadrature of `f^2` under the basis rule; series
/// kernels return `sum a_k^2`.
pub fn kernel_norm(spec: &KernelSpec, basis: &HermiteBasis) -> f64 {
    match spec.kind {
        KernelKind::HermiteSeries => spec.truncated_nu2(),
        KernelKind::Soft { t } | KernelKind::Hard { t } => {
            let rule = hermite::piecewise_gaussian_rule(&[-t, t]);
            rule.integrate(|x| spec.eval(x).powi(2))
        }
        _ => basis.rule.integrate(|x| spec.eval(x).powi(2)),
    }
}

/// Shortest round-trip form; exponent notation for very large or small values.
fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            KernelKind::Identity => write!(f, "identity"),
            KernelKind::Soft { t } => write!(f, "soft:t={}", num(*t)),
            KernelKind::Hard { t } => write!(f, "hard:t={}", num(*t)),
            KernelKind::HermiteSeries => {
                let parts: Vec<String> = self
                    .coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a != 0.0)
                    .map(|(k, a)| format!("a{k}={}", num(*a)))
                    .collect();
                write!(f, "hermite:{}", parts.join(","))
            }
            KernelKind::Polynomial { monomial } => {
                let parts: Vec<String> = monomial
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0.0)
                    .map(|(k, c)| format!("c{k}={}", num(*c)))
                    .collect();
                write!(f, "poly:{}", parts.join(","))
            }
        }
    }
}

/// Parses `identity`, `soft:t=2.0`, `hard:t=1.5`, `hermite:a1=0.3,a3=0.7`,
/// `poly:c1=1,c3=0.2`.
impl FromStr for KernelSpec {
    type Err = GctError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, args) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), a.trim()),
            None => (s, ""),
        };
        let pairs = parse_pairs(args)?;
        let bad = |msg: &str| GctError::InvalidKernel(format!("'{s}': {msg}"));
        match head {
            "identity" | "linear" => {
                if !pairs.is_empty() {
                    return Err(bad("identity takes no arguments"));
                }
                Ok(Self::identity())
            }
            "soft" | "hard" => {
                let t = match pairs.as_slice() {
                    [(k, v)] if k == "t" => *v,
                    _ => return Err(bad("expected exactly one argument t=<value>")),
                };
                if head == "soft" {
                    Self::soft(t)
                } else {
                    Self::hard(t)
                }
            }
            "hermite" | "poly" => {
                let prefix = if head == "hermite" { 'a' } else { 'c' };
                let mut coeffs: Vec<f64> = Vec::new();
                for (k, v) in &pairs {
                    let idx: usize = k
                        .strip_prefix(prefix)
                        .and_then(|d| d.parse().ok())
                        .ok_or_else(|| bad(&format!("bad coefficient name '{k}'")))?;
                    if coeffs.len() <= idx {
                        coeffs.resize(idx + 1, 0.0);
                    }
                    coeffs[idx] = *v;
                }
                if coeffs.is_empty() {
                    return Err(bad("no coefficients given"));
                }
                if head == "hermite" {
                    if coeffs.len() < 2 {
                        coeffs.resize(2, 0.0);
                    }
                    Self::hermite(coeffs)
                } else {
                    Self::polynomial(coeffs)
                }
            }
            _ => Err(bad("unknown kernel family")),
        }
    }
}

fn parse_pairs(args: &str) -> Result<Vec<(String, f64)>> {
    if args.is_empty() {
        return Ok(Vec::new());
    }
    args.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| GctError::InvalidKernel(format!("expected key=value, got '{kv}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| GctError::InvalidKernel(format!("bad number '{v}'")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}
