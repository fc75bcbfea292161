//! Property tests over random inputs.

use gct_lab::estimator::{kernel_matrix, recover_support, support_score};
use gct_lab::harness::fmt_float;
use gct_lab::kernels::{soft_threshold, KernelSpec};
use gct_lab::model::{gaussian_matrix, gram, make_spike, spiked_dense, spiked_from_noise, SpikePrior};
use gct_lab::rng::trial_seed;
use gct_lab::theory::{bulk_edge, psi};
use nalgebra::DVector;
use proptest::prelude::*;

fn prior() -> impl Strategy<Value = SpikePrior> {
    prop_oneof![Just(SpikePrior::Rademacher), Just(SpikePrior::UniformShell)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nine_significant_digits(x in prop::num::f64::NORMAL) {
        let s = fmt_float(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-9 * x.abs(), "{x} -> {s}");
        prop_assert!(!s.contains('+'));
    }

    #[test]
    fn soft_threshold_shrinks_toward_zero(x in -50.0..50.0f64, t in 0.0..5.0f64) {
        let y = soft_threshold(x, t);
        prop_assert!(y.abs() <= x.abs());
        prop_assert_eq!(soft_threshold(-x, t), -y);
        prop_assert!((x - y).abs() <= t + 1e-12);
    }

    #[test]
    fn spikes_are_unit_vectors(p in 1usize..300, frac in 0.0..1.0f64, pr in prior(), seed in any::<u64>()) {
        let m = 1 + ((p - 1) as f64 * frac) as usize;
        let v = make_spike(p, m, pr, seed).unwrap();
        prop_assert!((v.entries.norm() - 1.0).abs() < 1e-12);
        prop_assert_eq!(v.support.len(), m);
        prop_assert_eq!(v.entries.iter().filter(|x| **x != 0.0).count(), m);
        prop_assert!(v.support.windows(2).all(|w| w[0] < w[1]));
        if pr == SpikePrior::UniformShell {
            let mags: Vec<f64> = v.support.iter().map(|&i| v.entries[i].abs()).collect();
            let (lo, hi) = mags.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            prop_assert!(hi <= 2.0 * lo + 1e-12);
        }
    }

    #[test]
    fn kernel_matrix_is_symmetric_with_zero_diagonal(p in 2usize..40, t in 0.0..3.0f64, seed in any::<u64>()) {
        let s = gram(&gaussian_matrix(2 * p, p, seed));
        let k = kernel_matrix(&s, 2 * p, &KernelSpec::soft(t).unwrap()).unwrap().k;
        for i in 0..p {
            prop_assert_eq!(k[(i, i)], 0.0);
            for j in 0..i {
                prop_assert_eq!(k[(i, j)], k[(j, i)]);
            }
        }
    }

    #[test]
    fn rank_one_expansion_matches_dense(p in 2usize..30, lambda in 1.0..6.0f64, pr in prior(), seed in any::<u64>()) {
        let m = 1 + (seed % p as u64) as usize;
        let v = make_spike(p, m, pr, seed).unwrap();
        let s = gram(&gaussian_matrix(p + 5, p, seed));
        let fast = spiked_from_noise(s.clone(), &v, lambda, p + 5).y;
        let dense = spiked_dense(&s, &v, lambda);
        prop_assert!((&fast - &dense).abs().max() < 1e-10);
    }

    #[test]
    fn trial_seeds_depend_on_every_coordinate(base in any::<u64>(), a in any::<u64>(), b in any::<u64>(), trial in 0u64..1000) {
        let s = trial_seed(base, &[a, b], trial);
        prop_assert_eq!(s, trial_seed(base, &[a, b], trial));
        prop_assert_ne!(s, trial_seed(base, &[a, b], trial + 1));
        prop_assert_ne!(s, trial_seed(base, &[a.wrapping_add(1), b], trial));
        prop_assert_ne!(s, trial_seed(base ^ 1, &[a, b], trial));
    }

    #[test]
    fn edge_is_minimal_value_of_psi(a1 in 0.05..1.0f64, extra in 0.01..2.0f64, gamma in 0.05..3.0f64, u in 0.01..0.99f64) {
        let nu2 = a1 * a1 + extra;
        let law = bulk_edge(a1, nu2, gamma).unwrap();
        // sample the branch between the pole of the linear part and 0
        let lo = -1.0 / (a1 * gamma);
        let s = lo + u * (0.0 - lo);
        prop_assert!(psi(s, a1, nu2, gamma).unwrap() >= law.lambda_plus - 1e-9 * law.lambda_plus.abs().max(1.0));
    }

    #[test]
    fn support_score_is_bounded(entries in prop::collection::vec(-1.0..1.0f64, 5..60), n in 10usize..5000, seed in any::<u64>()) {
        let p = entries.len();
        let mut u = DVector::from_vec(entries);
        if u.norm() == 0.0 {
            return Ok(());
        }
        u.normalize_mut();
        let est = recover_support(&u, n, 0.375).unwrap();
        let v = make_spike(p, 1 + (seed % p as u64) as usize, SpikePrior::Rademacher, seed).unwrap();
        let score = support_score(&est, &v);
        prop_assert!(score <= 1.0);
        prop_assert!(score >= -((p - v.support.len()) as f64) / v.support.len() as f64);
        prop_assert!(est.empty == est.support.is_empty());
        if !est.empty {
            prop_assert!((est.v_hat.norm() - 1.0).abs() < 1e-12);
        }
    }
}
