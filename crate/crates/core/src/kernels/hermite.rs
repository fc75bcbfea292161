//! Orthonormal (probabilists') Hermite polynomials and quadrature rules
//! against the standard Gaussian density `phi`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{GctError, Result};

/// Value of the orthonormal Hermite polynomial `h_k` at `x`, i.e.
/// `He_k(x) / sqrt(k!)`, by the three-term recurrence
/// `h_{k+1} = (x h_k - sqrt(k) h_{k-1}) / sqrt(k+1)`.
pub fn hermite_eval(k: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for j in 0..k {
        let next = (x * cur - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// Writes `h_0(x), ..., h_{out.len()-1}(x)` into `out`.
pub fn hermite_all(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for j in 1..out.len().saturating_sub(1) {
        out[j + 1] = (x * out[j] - (j as f64).sqrt() * out[j - 1]) / ((j + 1) as f64).sqrt();
    }
}

/// `sum_k a_k h_k(x)` (Clenshaw would also do; the forward recurrence is stable here).
pub fn hermite_series(coeffs: &[f64], x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut acc = 0.0;
    for (j, a) in coeffs.iter().enumerate() {
        acc += a * cur;
        let next = (x * cur - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    acc
}

/// Quadrature nodes and weights for `int g(x) phi(x) dx`.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}

/// Gauss-Hermite rule with `count` nodes for the weight `phi`.
///
/// Nodes start from the Golub-Welsch eigenvalues and are polished by Newton
/// steps on `h_count`; weights use `w_i = 1 / (N h_{N-1}(x_i)^2)`, evaluated
/// in log space so large rules do not overflow.
pub fn gauss_hermite(count: usize) -> Rule {
    assert!(count >= 1);
    let mut jacobi = DMatrix::<f64>::zeros(count, count);
    for k in 1..count {
        let b = (k as f64).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().cloned().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut weights = Vec::with_capacity(count);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (_, hn_over_hnm1) = scaled_tail(count, *x);
            // h_N' = sqrt(N) h_{N-1}
            let step = hn_over_hnm1 / (count as f64).sqrt();
            *x -= step;
            if step.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        let (log_hnm1, _) = scaled_tail(count, *x);
        weights.push((-(count as f64).ln() - 2.0 * log_hnm1).exp());
    }
    // exact symmetry
    for i in 0..count / 2 {
        let j = count - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Returns `(ln |h_{n-1}(x)|, h_n(x) / h_{n-1}(x))` with running rescaling.
fn scaled_tail(n: usize, x: f64) -> (f64, f64) {
    let mut log_scale = 0.0;
    let mut prev = 0.0;
    let mut cur = 1.0;
    for j in 0..(n - 1) {
        let next = (x * cur - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
        prev = cur;
        cur = next;
        if cur.abs() > 1e100 {
            cur *= 1e-100;
            prev *= 1e-100;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
    }
    let j = n - 1;
    let next = (x * cur - (j as f64).sqrt() * prev) / ((j + 1) as f64).sqrt();
    (cur.abs().ln() + log_scale, next / cur)
}

/// Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let n = count;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = p0;
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule for `int g(x) phi(x) dx` over `[-R, R]`,
/// with panel boundaries forced at every breakpoint so piecewise-smooth
/// integrands are integrated panel by panel.
pub fn piecewise_gaussian_rule(breakpoints: &[f64]) -> Rule {
    const HALF_WIDTH: f64 = 30.0;
    const PANEL: f64 = 0.5;
    const ORDER: usize = 20;
    let (gl_x, gl_w) = gauss_legendre(ORDER);
    let mut cuts: Vec<f64> = vec![-HALF_WIDTH, HALF_WIDTH];
    cuts.extend(breakpoints.iter().filter(|b| b.abs() < HALF_WIDTH));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let norm = 1.0 / (std::f64::consts::TAU).sqrt();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for seg in cuts.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let panels = ((hi - lo) / PANEL).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;
        for k in 0..panels {
            let a = lo + k as f64 * h;
            let mid = a + 0.5 * h;
            for (x, w) in gl_x.iter().zip(&gl_w) {
                let t = mid + 0.5 * h * x;
                nodes.push(t);
                weights.push(0.5 * h * w * norm * (-0.5 * t * t).exp());
            }
        }
    }
    Rule { nodes, weights }
}

/// Hermite basis up to `max_degree` with its Gauss-Hermite rule.
#[derive(Clone, Debug)]
pub struct HermiteBasis {
    pub max_degree: usize,
    pub rule: Rule,
}

/// Default number of Gauss-Hermite nodes.
pub const DEFAULT_NODES: usize = 201;

impl HermiteBasis {
    pub fn new(max_degree: usize, nodes: usize) -> Self {
        Self {
            max_degree,
            rule: gauss_hermite(nodes),
        }
    }

    /// `<h_j, h_k>_phi` under the stored rule.
    pub fn gram_entry(&self, j: usize, k: usize) -> f64 {
        self.rule.integrate(|x| hermite_eval(j, x) * hermite_eval(k, x))
    }
}

impl Default for HermiteBasis {
    fn default() -> Self {
        Self::new(41, DEFAULT_NODES)
    }
}

/// Hermite coefficients `a_0..=a_degree` of `f` under `rule`.
pub fn coeffs_with_rule(f: impl Fn(f64) -> f64, degree: usize, rule: &Rule) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; degree + 1];
    let mut h = vec![0.0; degree + 1];
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fx = f(x);
        if !fx.is_finite() {
            return Err(GctError::Numeric(format!("kernel value {fx} at node {x}")));
        }
        if w == 0.0 || fx == 0.0 {
            continue;
        }
        hermite_all(x, &mut h);
        for (a, hk) in acc.iter_mut().zip(&h) {
            *a += w * fx * hk;
        }
    }
    Ok(acc)
}

/// `a_l = <f, h_l>_phi` for `l = 0..=degree` using the basis' Gauss-Hermite rule.
pub fn hermite_coeffs(f: impl Fn(f64) -> f64, degree: usize, basis: &HermiteBasis) -> Result<Vec<f64>> {
    if degree > basis.max_degree {
        return Err(crate::error::invalid(format!(
            "degree {degree} exceeds basis max degree {}",
            basis.max_degree
        )));
    }
    coeffs_with_rule(f, degree, &basis.rule)
}
