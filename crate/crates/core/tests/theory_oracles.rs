//! Theory functions against closed forms and independent computations.

use gct_lab::kernels::{hermite_eval, KernelSpec};
use gct_lab::theory::{
    bbp, bulk_density, bulk_edge, lambda_star_kernel, lambda_star_opt, optimal_kernel, psi, psi_prime, spike_forward,
    stieltjes, OptSearch, Regime, SoftFamily,
};
use num_complex::Complex64;
use statrs::function::erf::erfc;
use std::f64::consts::PI;

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Upper Gaussian tail.
fn tail(x: f64) -> f64 {
    0.5 * erfc(x / 2f64.sqrt())
}

/// `E (Z + c)_+`.
fn positive_part_mean(c: f64) -> f64 {
    c * (1.0 - tail(c)) + phi(c)
}

#[test]
fn soft_threshold_coefficients() {
    for t in [0.25, 1.0, 2.0, 3.0] {
        let spec = KernelSpec::soft(t).unwrap();
        // Stein: a1 = E f'(Z), E f He_3 = E f' He_2
        let a1 = 2.0 * tail(t);
        let nu2 = 2.0 * ((1.0 + t * t) * tail(t) - t * phi(t));
        let a3 = 2.0 * t * phi(t) / 6f64.sqrt();
        assert!((spec.a1() - a1).abs() < 1e-10, "t = {t}: a1 {} vs {a1}", spec.a1());
        assert!((spec.nu2 - nu2).abs() < 1e-10, "t = {t}: nu2 {} vs {nu2}", spec.nu2);
        assert!((spec.coeffs[3] - a3).abs() < 1e-10, "t = {t}: a3 {} vs {a3}", spec.coeffs[3]);
        for k in (0..spec.coeffs.len()).step_by(2) {
            assert!(spec.coeffs[k].abs() < 1e-12, "even coefficient {k} of an odd kernel");
        }
    }
}

#[test]
fn soft_tau_matches_closed_form() {
    for &(t, beta, lambda) in &[(2.0, 0.25, 1.6), (1.0, 0.5, 1.9), (3.0, 0.1, 1.3), (0.5, 1.0, 2.5)] {
        let spec = KernelSpec::soft(t).unwrap();
        let x: f64 = (lambda - 1.0) / beta;
        let mean = positive_part_mean(x - t) - positive_part_mean(-x - t);
        let want = beta * (mean - spec.a1() * x);
        let got = spec.tau(beta, lambda);
        assert!((got - want).abs() < 1e-8 * want.abs().max(1.0), "t {t}: {got} vs {want}");
    }
}

#[test]
fn hermite_polynomials_are_orthonormal() {
    // Riemann sum against phi on a wide grid
    let h = 1e-3;
    for j in 0..7 {
        for k in 0..7 {
            let s: f64 = (-12000..=12000)
                .map(|i| {
                    let x = i as f64 * h;
                    hermite_eval(j, x) * hermite_eval(k, x) * phi(x) * h
                })
                .sum();
            let want = if j == k { 1.0 } else { 0.0 };
            assert!((s - want).abs() < 1e-8, "<h{j}, h{k}> = {s}");
        }
    }
}

#[test]
fn identity_kernel_is_bbp_shifted() {
    for &(gamma, lambda) in &[(0.3, 1.2), (0.3, 2.5), (1.0, 1.9), (1.0, 2.0001), (1.7, 3.9)] {
        let r = spike_forward(&KernelSpec::identity(), gamma, 0.4, lambda).unwrap();
        let edge = 1.0 + f64::sqrt(gamma);
        let (eig, cos2) = if lambda > edge {
            let l = lambda - 1.0;
            (lambda + lambda * gamma / l, (1.0 - gamma / (l * l)) / (1.0 + gamma / l))
        } else {
            (edge * edge, 0.0)
        };
        assert!((r.lambda_limit + 1.0 - eig).abs() < 1e-12);
        assert!((r.cos2_limit - cos2).abs() < 1e-12);
        assert_eq!(bbp(gamma, lambda), (eig, cos2));
    }
}

#[test]
fn edge_is_the_critical_value_of_psi() {
    let spec = KernelSpec::soft(1.5).unwrap();
    for gamma in [0.2, 0.5, 1.3] {
        let law = bulk_edge(spec.a1(), spec.nu2, gamma).unwrap();
        let d = psi_prime(law.s0, spec.a1(), spec.nu2, gamma).unwrap();
        assert!(d.abs() < 1e-9, "psi'(s0) = {d}");
        assert!((psi(law.s0, spec.a1(), spec.nu2, gamma).unwrap() - law.lambda_plus).abs() < 1e-12);
        // on the branch that inverts the Stieltjes transform the edge is a minimum
        let h = 1e-3 * law.s0.abs();
        let left = psi(law.s0 - h, spec.a1(), spec.nu2, gamma).unwrap();
        let right = psi(law.s0 + h, spec.a1(), spec.nu2, gamma).unwrap();
        assert!(left > law.lambda_plus && right > law.lambda_plus);
    }
}

#[test]
fn psi_derivative_by_finite_difference() {
    let (a1, nu2, gamma) = (0.6, 0.8, 0.7);
    let law = bulk_edge(a1, nu2, gamma).unwrap();
    let h = 1e-5;
    for i in 1..20 {
        let s = law.s0 * (0.1 + 0.09 * i as f64);
        let fd = (psi(s + h, a1, nu2, gamma).unwrap() - psi(s - h, a1, nu2, gamma).unwrap()) / (2.0 * h);
        let d = psi_prime(s, a1, nu2, gamma).unwrap();
        assert!((fd - d).abs() < 1e-6 * d.abs().max(1.0), "s = {s}: {fd} vs {d}");
    }
}

#[test]
fn stieltjes_inverts_psi_above_the_edge() {
    let (a1, nu2, gamma) = (0.3, 0.5, 0.5);
    let law = bulk_edge(a1, nu2, gamma).unwrap();
    for dz in [0.01, 0.1, 1.0, 5.0] {
        let z = law.lambda_plus + dz;
        let s = stieltjes(Complex64::new(z, 0.0), a1, nu2, gamma).unwrap();
        assert!(s.im.abs() < 1e-12);
        assert!((psi(s.re, a1, nu2, gamma).unwrap() - z).abs() < 1e-9);
        // the Stieltjes transform of a measure on (-inf, z) is negative there
        assert!(s.re < 0.0 && s.re > -1.0 / (z - law.lambda_plus));
    }
}

#[test]
fn density_is_a_probability_measure() {
    for (a1, nu2, gamma) in [(1.0, 1.0, 0.5), (0.5, 0.4, 1.0), (0.0, 1.0, 0.3)] {
        let law = bulk_edge(a1, nu2, gamma).unwrap();
        let lo = -3.0 * (1.0 + gamma) * nu2.sqrt() - 2.0;
        let steps = 6000;
        let h = (law.lambda_plus + 0.05 - lo) / steps as f64;
        let grid: Vec<f64> = (0..=steps).map(|i| lo + i as f64 * h).collect();
        let d = bulk_density(a1, nu2, gamma, &grid).unwrap();
        assert!(d.iter().all(|&x| x >= 0.0));
        let mass: f64 = d.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
        assert!((mass - 1.0).abs() < 1e-2, "({a1}, {nu2}, {gamma}): mass {mass}");
    }
}

#[test]
fn marchenko_pastur_edge_and_wigner_edge() {
    for gamma in [0.1, 0.5, 2.0] {
        let mp = bulk_edge(1.0, 1.0, gamma).unwrap().lambda_plus;
        assert!((mp - (gamma + 2.0 * f64::sqrt(gamma))).abs() < 1e-9);
        let w = bulk_edge(0.0, 2.0, gamma).unwrap().lambda_plus;
        assert!((w - 2.0 * f64::sqrt(2.0 * gamma)).abs() < 1e-9);
    }
}

#[test]
fn wigner_branch_for_even_free_kernel() {
    // pure third Hermite polynomial: a1 = 0, unit norm
    let spec = KernelSpec::hermite(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
    let (gamma, beta) = (0.5, 0.3);
    for lambda in [1.2, 1.5, 2.0] {
        let r = spike_forward(&spec, gamma, beta, lambda).unwrap();
        let tau = beta * ((lambda - 1.0) / beta).powi(3) / 6f64.sqrt();
        assert!((r.tau - tau).abs() < 1e-12);
        let radius = f64::sqrt(gamma);
        if tau > radius {
            assert_eq!(r.regime, Regime::WignerInformative);
            assert!((r.lambda_limit - (tau + gamma / tau)).abs() < 1e-12);
        } else {
            assert_eq!(r.regime, Regime::WignerBulk);
            assert!((r.lambda_limit - 2.0 * radius).abs() < 1e-9);
        }
    }
}

#[test]
fn optimal_kernel_reaches_the_cauchy_schwarz_bound() {
    for &(a1, beta, lambda) in &[(0.5, 0.3, 1.4), (0.8, 1.0, 1.7), (0.2, 0.1, 1.15)] {
        let spec = optimal_kernel(a1, beta, lambda, None).unwrap();
        assert!((spec.nu2 - 1.0).abs() < 1e-12);
        assert!((spec.a1() - a1).abs() < 1e-12);
        let x2 = ((lambda - 1.0) / beta).powi(2);
        let g = beta * (x2.sinh() - x2).sqrt();
        let want = (1.0 - a1 * a1).sqrt() * g;
        let got = spec.tau(beta, lambda);
        assert!((got - want).abs() < 1e-9 * want, "{got} vs {want}");
    }
}

#[test]
fn kernel_transition_separates_regimes() {
    for (spec, gamma, beta) in [
        (KernelSpec::soft(2.0).unwrap(), 0.5, 0.25),
        (KernelSpec::soft(1.0).unwrap(), 1.0, 0.6),
        (KernelSpec::soft(0.5).unwrap(), 1.5, 1.2),
    ] {
        let l = lambda_star_kernel(&spec, gamma, beta).unwrap();
        assert!(l < 1.0 + f64::sqrt(gamma) + 1e-9);
        assert!(spike_forward(&spec, gamma, beta, l + 1e-4).unwrap().informative());
        assert!(!spike_forward(&spec, gamma, beta, l - 1e-4).unwrap().informative());
    }
    // mixed-sign coefficients: monotonicity in lambda is not guaranteed
    assert!(lambda_star_kernel(&KernelSpec::hard(1.5).unwrap(), 0.5, 0.4).is_err());
}

#[test]
fn overlap_vanishes_continuously_at_the_transition() {
    let spec = KernelSpec::soft(2.0).unwrap();
    let l = lambda_star_kernel(&spec, 0.5, 0.25).unwrap();
    let gaps: Vec<f64> = [1e-2, 1e-3, 1e-5]
        .iter()
        .map(|d| {
            let r = spike_forward(&spec, 0.5, 0.25, l + d).unwrap();
            r.lambda_limit - r.bulk.lambda_plus
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] >= 0.0, "{gaps:?}");
}

#[test]
fn soft_curve_lies_just_above_the_optimal_curve() {
    let family = SoftFamily::new(&SoftFamily::default_grid()).unwrap();
    for beta in [0.2, 0.8] {
        let opt = lambda_star_opt(1.0, beta, &OptSearch::default()).unwrap().lambda_star;
        let (soft, t) = family.lambda_star(1.0, beta).unwrap();
        assert!((0.0..0.05).contains(&(soft - opt)), "beta {beta}: soft {soft} (t {t}) opt {opt}");
    }
    let (zero, t) = family.lambda_star(0.5, 50.0).unwrap();
    assert!((zero - (1.0 + f64::sqrt(0.5))).abs() < 0.05 && t < 0.1);
}
