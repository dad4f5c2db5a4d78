//! Property-based invariants over randomized inputs.

use proptest::prelude::*;
use qrlof::linalg::Matrix;
use qrlof::projection::{complementary_angle, lof_statistic, weight_matrix};
use qrlof::qreg::{check_loss, fit_linear_quantile, psi};
use qrlof::DataSample;
use std::f64::consts::PI;

fn tau_strategy() -> impl Strategy<Value = f64> {
    (0.02f64..0.98).prop_map(|t| (t * 100.0).round() / 100.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn check_loss_is_nonnegative_and_piecewise_linear(
        r in -1e6f64..1e6,
        tau in tau_strategy(),
    ) {
        let loss = check_loss(r, tau).unwrap();
        prop_assert!(loss >= 0.0);
        let expected = if r > 0.0 { tau * r } else { (tau - 1.0) * r };
        prop_assert!((loss - expected).abs() <= 1e-12 * expected.abs().max(1.0));
        // psi is the slope away from zero
        if r != 0.0 {
            prop_assert_eq!(psi(r, tau).unwrap(), if r > 0.0 { tau } else { tau - 1.0 });
        }
    }

    #[test]
    fn complementary_angle_is_symmetric_and_bounded(
        u in prop::collection::vec(-10.0f64..10.0, 3),
        v in prop::collection::vec(-10.0f64..10.0, 3),
    ) {
        let a = complementary_angle(&u, &v);
        prop_assert!((0.0..=2.0 * PI + 1e-12).contains(&a));
        prop_assert_eq!(a.to_bits(), complementary_angle(&v, &u).to_bits());
        // Scaling either argument by a positive constant changes nothing.
        let u2: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
        prop_assert!((complementary_angle(&u2, &v) - a).abs() <= 1e-12);
    }

    #[test]
    fn fit_sign_counts_hold_for_random_data(
        seed in 0u64..1000,
        tau in tau_strategy(),
    ) {
        let data = random_sample(seed, 23, 2);
        let fit = fit_linear_quantile(&data, tau, true).unwrap();
        let neg = fit.residuals().iter().filter(|&&r| r < 0.0).count() as f64;
        let nonpos = fit.residuals().iter().filter(|&&r| r <= 0.0).count() as f64;
        let n_tau = data.n() as f64 * tau;
        prop_assert!(neg <= n_tau);
        prop_assert!(n_tau <= nonpos);
        // residual recomputation
        for i in 0..data.n() {
            let err = (data.response()[i] - fit.fitted(i) - fit.residuals()[i]).abs();
            prop_assert!(err <= 1e-10);
        }
    }

    #[test]
    fn statistic_is_invariant_under_observation_permutations(
        seed in 0u64..200,
    ) {
        let n = 18;
        let data = random_sample(seed, n, 2);
        let t = statistic_of(&data);
        // deterministic shuffle derived from the seed
        let mut order: Vec<usize> = (0..n).collect();
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        for i in (1..n).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            order.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let x = Matrix::from_fn(n, 2, |i, j| data.covariates().get(order[i], j));
        let y: Vec<f64> = order.iter().map(|&i| data.response()[i]).collect();
        let permuted = DataSample::new(x, y).unwrap();
        let t_perm = statistic_of(&permuted);
        prop_assert!((t - t_perm).abs() <= 1e-10, "{t} vs {t_perm}");
    }

    #[test]
    fn weight_scaling_scales_statistic(
        seed in 0u64..200,
        c in 0.25f64..8.0,
    ) {
        let data = random_sample(seed, 15, 2);
        let fit = fit_linear_quantile(&data, 0.5, true).unwrap();
        let w = weight_matrix(data.covariates()).unwrap();
        let t = lof_statistic(&fit, &w).unwrap().value;
        let tc = lof_statistic(&fit, &w.scaled(c)).unwrap().value;
        prop_assert!((tc - c * t).abs() <= 1e-10 * (c * t).abs().max(1e-12));
    }

    #[test]
    fn report_json_round_trips(
        stat in 0.0f64..10.0,
        tau in tau_strategy(),
        seed in any::<u64>(),
        boot in prop::collection::vec(0.0f64..10.0, 1..40),
    ) {
        let count = boot.iter().filter(|&&t| stat <= t).count();
        let report = qrlof::TestReport {
            statistic: stat,
            p_value: count as f64 / boot.len() as f64,
            tau,
            replications: boot.len(),
            seed,
            statistic_kind: qrlof::StatisticKind::Hz,
            n: 10,
            d_null: 1,
            d_alt: 2,
            bootstrap_statistics: boot,
        };
        let json = qrlof::report::to_json(&report).unwrap();
        let parsed = qrlof::report::test_report_from_json(&json).unwrap();
        prop_assert_eq!(parsed, report);
    }
}

fn random_sample(seed: u64, n: usize, d: usize) -> DataSample {
    // small deterministic xorshift so the strategy stays shrinkable
    let mut state = seed.wrapping_mul(0x2545F4914F6CDD1D).wrapping_add(0x9E3779B97F4A7C15);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let x = Matrix::from_fn(n, d, |_, _| next());
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 + x.row(i).iter().sum::<f64>() + next() - 0.5)
        .collect();
    DataSample::new(x, y).unwrap()
}

fn statistic_of(data: &DataSample) -> f64 {
    let fit = fit_linear_quantile(data, 0.5, true).unwrap();
    let w = weight_matrix(data.covariates()).unwrap();
    lof_statistic(&fit, &w).unwrap().value
}
