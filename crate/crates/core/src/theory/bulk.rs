//! Limiting spectral distribution of the noise kernel matrix `K_0(f)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GctError, Result};

/// Default imaginary offset for Stieltjes inversion.
pub const DENSITY_ETA: f64 = 1e-4;

/// `(a_1, |f|^2, gamma)` with the location of the upper edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkLaw {
    pub a1: f64,
    pub nu2: f64,
    pub gamma: f64,
    /// Critical point of `psi`; the edge is `psi(s0)`.
    pub s0: f64,
    pub lambda_plus: f64,
}

fn check_params(a1: f64, nu2: f64, gamma: f64) -> Result<()> {
    if !(a1 >= 0.0 && a1.is_finite()) {
        return Err(invalid(format!("a1 = {a1} must be finite and >= 0")));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(invalid(format!("gamma = {gamma} must be positive")));
    }
    if !(nu2 > 0.0 && nu2.is_finite()) {
        return Err(invalid(format!("nu2 = {nu2} must be positive")));
    }
    if nu2 < a1 * a1 * (1.0 - 1e-9) {
        return Err(invalid(format!("nu2 = {nu2} is below a1^2 = {}", a1 * a1)));
    }
    Ok(())
}

/// `|f|^2 - a_1^2`, the variance of the nonlinear part; clamped at 0.
#[inline]
fn nonlinear_var(a1: f64, nu2: f64) -> f64 {
    (nu2 - a1 * a1).max(0.0)
}

/// `psi(s) = -1/s - a_1 (1 - 1/(1 + a_1 gamma s)) - gamma (|f|^2 - a_1^2) s`.
pub fn psi(s: f64, a1: f64, nu2: f64, gamma: f64) -> Result<f64> {
    let d = 1.0 + a1 * gamma * s;
    if s == 0.0 || d == 0.0 {
        return Err(GctError::Domain(format!("psi has a pole at s = {s}")));
    }
    Ok(-1.0 / s - a1 * (1.0 - 1.0 / d) - gamma * nonlinear_var(a1, nu2) * s)
}

/// Derivative of [`psi`] in `s`.
pub fn psi_prime(s: f64, a1: f64, nu2: f64, gamma: f64) -> Result<f64> {
    let d = 1.0 + a1 * gamma * s;
    if s == 0.0 || d == 0.0 {
        return Err(GctError::Domain(format!("psi' has a pole at s = {s}")));
    }
    Ok(1.0 / (s * s) - a1 * a1 * gamma / (d * d) - gamma * nonlinear_var(a1, nu2))
}

/// Upper edge of the limiting spectrum.
///
/// For `a_1 > 0` the critical point is bracketed in `(-1/(a_1 gamma), 0)`
/// where `psi'` runs from `-inf` to `+inf`. For `a_1 = 0` the law is a
/// semicircle and the edge is `2 sqrt(gamma |f|^2)`.
pub fn bulk_edge(a1: f64, nu2: f64, gamma: f64) -> Result<BulkLaw> {
    check_params(a1, nu2, gamma)?;
    if a1 == 0.0 {
        let r = (gamma * nu2).sqrt();
        return Ok(BulkLaw {
            a1,
            nu2,
            gamma,
            s0: -1.0 / r,
            lambda_plus: 2.0 * r,
        });
    }
    let pole = -1.0 / (a1 * gamma);
    let dp = |s: f64| psi_prime(s, a1, nu2, gamma).unwrap_or(f64::NAN);
    // Both ends are singular, so step inwards until the signs are right.
    let mut lo = pole * (1.0 - 1e-12);
    let mut hi = pole * 1e-12;
    let mut k = 0;
    while !(dp(lo) < 0.0) && k < 60 {
        lo = pole + (lo - pole) * 4.0;
        k += 1;
    }
    k = 0;
    while !(dp(hi) > 0.0) && k < 60 {
        hi *= 0.25;
        k += 1;
    }
    if !(dp(lo) < 0.0 && dp(hi) > 0.0) {
        return Err(GctError::NoBracket(format!(
            "psi' on (-1/(a1 gamma), 0) with a1 = {a1}, nu2 = {nu2}, gamma = {gamma}"
        )));
    }
    let s0 = bisect(dp, lo, hi, 300);
    Ok(BulkLaw {
        a1,
        nu2,
        gamma,
        s0,
        lambda_plus: psi(s0, a1, nu2, gamma)?,
    })
}

/// Plain bisection for `g(lo) < 0 < g(hi)`, run until the bracket stops
/// shrinking in floating point.
pub(crate) fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, max_iter: usize) -> f64 {
    let increasing = g(lo) < g(hi);
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let v = g(mid);
        if (v < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl BulkLaw {
    pub fn new(a1: f64, nu2: f64, gamma: f64) -> Result<Self> {
        bulk_edge(a1, nu2, gamma)
    }

    pub fn psi(&self, s: f64) -> Result<f64> {
        psi(s, self.a1, self.nu2, self.gamma)
    }

    pub fn psi_prime(&self, s: f64) -> Result<f64> {
        psi_prime(s, self.a1, self.nu2, self.gamma)
    }

    /// `F(s) = a_1 (1 - 1/(1 + a_1 gamma s)) + gamma (|f|^2 - a_1^2) s`, so that
    /// the fixed-point equation reads `-1/s = z + F(s)`.
    fn f_map(&self, s: Complex64) -> Complex64 {
        let b = nonlinear_var(self.a1, self.nu2);
        let d = 1.0 + self.a1 * self.gamma * s;
        self.a1 * (1.0 - 1.0 / d) + self.gamma * b * s
    }

    /// `|-1/s - z - F(s)|`.
    pub fn residual(&self, z: Complex64, s: Complex64) -> f64 {
        (-1.0 / s - z - self.f_map(s)).norm()
    }

    /// Stieltjes transform of the limiting law.
    ///
    /// Complex `z` must have `Im z > 0`; real `z` must lie above the edge, where
    /// the real branch is obtained by inverting `psi` on `(s0, 0)`.
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 {
            return self.stieltjes_real(z.re).map(Complex64::from);
        }
        if !(z.im > 0.0) || !z.re.is_finite() {
            return Err(GctError::Domain(format!("stieltjes needs Im z > 0, got {z}")));
        }
        if let Some(s) = self.fixed_point(z) {
            return Ok(s);
        }
        self.cubic_branch(z)
    }

    /// Damped iteration `s <- -1/(z + F(s))` from `s = -1/z`.
    fn fixed_point(&self, z: Complex64) -> Option<Complex64> {
        let mut s = -1.0 / z;
        for _ in 0..2000 {
            let next = -1.0 / (z + self.f_map(s));
            s = 0.5 * s + 0.5 * next;
            if s.im <= 0.0 || !s.re.is_finite() {
                return None;
            }
            if self.residual(z, s) < 1e-13 {
                return Some(s);
            }
        }
        None
    }

    /// Clearing denominators gives the cubic
    /// `a_1 gamma^2 b s^3 + (z a_1 gamma + a_1^2 gamma + gamma b) s^2 + (z + a_1 gamma) s + 1 = 0`
    /// with `b = |f|^2 - a_1^2`; the root in the upper half plane is the one we want.
    fn cubic_branch(&self, z: Complex64) -> Result<Complex64> {
        let (a1, g) = (self.a1, self.gamma);
        let b = nonlinear_var(a1, self.nu2);
        let coeffs = [
            Complex64::from(1.0),
            z + a1 * g,
            z * a1 * g + a1 * a1 * g + g * b,
            Complex64::from(a1 * g * g * b),
        ];
        let roots = poly_roots(&coeffs);
        let mut s = roots
            .into_iter()
            .filter(|r| r.re.is_finite() && r.im.is_finite())
            .max_by(|x, y| x.im.total_cmp(&y.im))
            .ok_or_else(|| GctError::Numeric(format!("no root of the Stieltjes cubic at z = {z}")))?;
        // polish on the rational form, which is better conditioned near s = 0
        for _ in 0..8 {
            let d = 1.0 + a1 * g * s;
            let h = -1.0 / s - z - self.f_map(s);
            let dh = 1.0 / (s * s) - a1 * a1 * g / (d * d) - g * b;
            if dh.norm() == 0.0 {
                break;
            }
            let step = h / dh;
            s -= step;
            if step.norm() < 1e-16 * s.norm() {
                break;
            }
        }
        let res = self.residual(z, s);
        if !(s.im > 0.0) || res > 1e-10 {
            return Err(GctError::Convergence {
                what: "stieltjes",
                iterations: 2000,
                residual: res,
            });
        }
        Ok(s)
    }

    fn stieltjes_real(&self, x: f64) -> Result<f64> {
        if !(x > self.lambda_plus) {
            return Err(GctError::Domain(format!(
                "real z = {x} is not above the bulk edge {}",
                self.lambda_plus
            )));
        }
        // psi increases from lambda_+ to +inf on (s0, 0)
        let g = |s: f64| self.psi(s).map(|v| v - x).unwrap_or(f64::INFINITY);
        let mut hi = self.s0 * 0.5;
        while g(hi) < 0.0 {
            hi *= 0.5;
        }
        Ok(bisect(g, self.s0, hi, 300))
    }

    /// Density at `x` from `Im s(x + i eta) / pi`; exactly zero above the edge.
    pub fn density_at(&self, x: f64, eta: f64) -> Result<f64> {
        if x > self.lambda_plus {
            return Ok(0.0);
        }
        let s = self.stieltjes(Complex64::new(x, eta))?;
        Ok((s.im / std::f64::consts::PI).max(0.0))
    }
}

/// Density of the law on `x_grid`, with `eta = 1e-4`.
pub fn bulk_density(a1: f64, nu2: f64, gamma: f64, x_grid: &[f64]) -> Result<Vec<f64>> {
    let law = bulk_edge(a1, nu2, gamma)?;
    x_grid.iter().map(|&x| law.density_at(x, DENSITY_ETA)).collect()
}

/// Stieltjes transform for the given law parameters.
pub fn stieltjes(z: Complex64, a1: f64, nu2: f64, gamma: f64) -> Result<Complex64> {
    bulk_edge(a1, nu2, gamma)?.stieltjes(z)
}

/// Roots of `sum_k c_k s^k` by Durand-Kerner, after trimming vanishing
/// leading coefficients.
fn poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.len() > 1 && c.last().unwrap().norm() <= 1e-14 * scale {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();
    let eval = |s: Complex64| monic.iter().rev().fold(Complex64::from(0.0), |acc, a| acc * s + a);
    let radius = 1.0 + monic[..deg].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..deg).map(|k| radius * seed.powu(k as u32 + 1)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::from(1.0);
            for j in 0..deg {
                if i != j {
                    denom *= roots[i] - roots[j];
                }
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            moved = moved.max(step.norm() / roots[i].norm().max(1e-300));
        }
        if moved < 1e-15 {
            break;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn linear_kernel_edge() {
        for &g in &[0.25, 0.5, 1.0, 1.5] {
            let law = bulk_edge(1.0, 1.0, g).unwrap();
            let sg: f64 = g;
            assert!((law.lambda_plus - (g + 2.0 * sg.sqrt())).abs() < 1e-9);
            let s0 = -1.0 / (sg.sqrt() * (1.0 + sg.sqrt()));
            assert!((law.s0 - s0).abs() < 1e-9);
        }
    }

    #[test]
    fn wigner_edge() {
        let law = bulk_edge(0.0, 2.0, 0.5).unwrap();
        assert!((law.lambda_plus - 2.0).abs() < 1e-15);
        assert!((psi(law.s0, 0.0, 2.0, 0.5).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn psi_prime_matches_finite_difference() {
        let (a1, nu2, g) = (0.3, 0.5, 0.7);
        let h = 1e-5;
        for i in 1..40 {
            let s = -1.0 / (a1 * g) + i as f64 * 0.1;
            if s.abs() < 0.05 || (1.0 + a1 * g * s).abs() < 0.05 {
                continue;
            }
            let fd = (psi(s + h, a1, nu2, g).unwrap() - psi(s - h, a1, nu2, g).unwrap()) / (2.0 * h);
            assert!((psi_prime(s, a1, nu2, g).unwrap() - fd).abs() < 1e-6, "s = {s}");
        }
        assert!(psi(0.0, a1, nu2, g).is_err());
        assert!(psi_prime(-1.0 / (a1 * g), a1, nu2, g).is_err());
    }

    #[test]
    fn semicircle_closed_form() {
        let (nu2, g) = (1.3, 0.6);
        let law = bulk_edge(0.0, nu2, g).unwrap();
        let v = g * nu2;
        for &(re, im) in &[(0.3, 0.5), (-1.0, 0.01), (2.5, 1.0), (0.0, 3.0)] {
            let z = Complex64::new(re, im);
            let s = law.stieltjes(z).unwrap();
            let mut exact = (-z + (z * z - 4.0 * v).sqrt()) / (2.0 * v);
            if exact.im < 0.0 {
                exact = (-z - (z * z - 4.0 * v).sqrt()) / (2.0 * v);
            }
            assert!((s - exact).norm() < 1e-9, "z = {z}: {s} vs {exact}");
        }
    }

    #[test]
    fn stieltjes_far_field_and_residual() {
        let law = bulk_edge(0.0455, 0.01154, 0.5).unwrap();
        let z = Complex64::new(0.0, 100.0);
        let s = law.stieltjes(z).unwrap();
        assert!(((s - (-1.0 / z)) / (-1.0 / z)).norm() < 2e-3);
        for &(re, im) in &[(0.1, 1e-4), (0.0, 1e-4), (-0.3, 0.2), (0.2, 1e-6)] {
            let z = Complex64::new(re, im);
            let s = law.stieltjes(z).unwrap();
            assert!(law.residual(z, s) < 1e-10);
            assert!(s.im > 0.0);
        }
        let x = law.lambda_plus + 0.1;
        let s = law.stieltjes(Complex64::from(x)).unwrap();
        assert!(s.im == 0.0 && law.residual(Complex64::from(x), s) < 1e-10);
        assert!(law.stieltjes(Complex64::from(law.lambda_plus - 0.01)).is_err());
    }

    #[test]
    fn real_branch_is_limit_from_above() {
        let law = bulk_edge(0.6, 0.8, 0.4).unwrap();
        let x = law.lambda_plus + 0.3;
        let real = law.stieltjes(Complex64::from(x)).unwrap().re;
        let near = law.stieltjes(Complex64::new(x, 1e-9)).unwrap();
        assert!((near.re - real).abs() < 1e-7);
    }

    /// Marchenko-Pastur law with ratio `g` (< 1), shifted left by one.
    fn shifted_mp(x: f64, g: f64) -> f64 {
        let y = x + 1.0;
        let (a, b) = ((1.0 - g.sqrt()).powi(2), (1.0 + g.sqrt()).powi(2));
        if y <= a || y >= b {
            0.0
        } else {
            ((b - y) * (y - a)).sqrt() / (2.0 * PI * g * y)
        }
    }

    /// Stieltjes transform of the shifted Marchenko-Pastur law, upper branch.
    fn shifted_mp_stieltjes(z: Complex64, g: f64) -> Complex64 {
        let w = z + 1.0;
        let root = ((w - 1.0 - g) * (w - 1.0 - g) - 4.0 * g).sqrt();
        let pick = |r: Complex64| (1.0 - g - w + r) / (2.0 * g * w);
        let s = pick(root);
        if s.im > 0.0 {
            s
        } else {
            pick(-root)
        }
    }

    #[test]
    fn density_oracles() {
        let g = 0.5f64;
        let law = bulk_edge(1.0, 1.0, g).unwrap();
        let grid: Vec<f64> = (0..=400).map(|i| -3.0 + i as f64 * 0.015).collect();
        let sc = bulk_density(0.0, 1.0, g, &grid).unwrap();
        let mp = bulk_density(1.0, 1.0, g, &grid).unwrap();
        let mp_lo = (1.0 - g.sqrt()).powi(2) - 1.0;
        for (i, &x) in grid.iter().enumerate() {
            let semi = ((4.0 * g - x * x).max(0.0)).sqrt() / (2.0 * PI * g);
            assert!((sc[i] - semi).abs() < 1e-3, "semicircle at {x}");
            // the eta-smoothing is visible right next to the hard lower edge
            if (x - mp_lo).abs() > 0.03 {
                assert!((mp[i] - shifted_mp(x, g)).abs() < 1e-3, "MP at {x}");
            }
            let z = Complex64::new(x, DENSITY_ETA);
            let exact = shifted_mp_stieltjes(z, g);
            assert!((law.stieltjes(z).unwrap() - exact).norm() < 1e-7 * (1.0 + exact.norm()));
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let law = bulk_edge(0.0455, 0.01154, 0.5).unwrap();
        let lo = -law.lambda_plus - 0.5;
        let hi = law.lambda_plus + 0.5;
        let k = 4000;
        let h = (hi - lo) / k as f64;
        let mut total = 0.0;
        for i in 0..=k {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == k { 0.5 } else { 1.0 };
            total += w * law.density_at(x, DENSITY_ETA).unwrap();
        }
        assert!((total * h - 1.0).abs() < 1e-2, "mass {}", total * h);
        assert!(law.density_at(law.lambda_plus + 0.06, DENSITY_ETA).unwrap() < 1e-3);
    }

    #[test]
    fn soft_edge_exceeds_semicircle_part() {
        let (a1, nu2, g) = (0.0455, 0.01154, 0.5);
        let law = bulk_edge(a1, nu2, g).unwrap();
        assert!(law.lambda_plus > 2.0 * (g * nu2).sqrt());
        assert!(law.s0 > -1.0 / (a1 * g) && law.s0 < 0.0);
        assert!(law.psi_prime(law.s0).unwrap().abs() < 1e-9 * law.s0.powi(-2));
    }
}
