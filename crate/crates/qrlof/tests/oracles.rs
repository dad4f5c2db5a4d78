//! Independent oracles for the numerical cores: exhaustive basic-solution
//! enumeration for the quantile fit and direct sphere sampling for the
//! projection statistic. The oracles share no code with the paths they check.

use qrlof::linalg::Matrix;
use qrlof::projection::{lof_statistic, mc_statistic, weight_matrix};
use qrlof::qreg::{check_loss, fit_linear_quantile};
use qrlof::DataSample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Solves a q x q linear system by unpivoted Gauss-Jordan with row swaps on
/// zero pivots; returns `None` for (near-)singular systems.
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let q = b.len();
    for col in 0..q {
        let pivot_row = (col..q).max_by(|&r, &s| {
            a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap()
        })?;
        if a[pivot_row][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in 0..q {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in 0..q {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..q).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum check-loss objective over every exact-fit basic solution: for each
/// q-subset of observations, interpolate it exactly and evaluate the total
/// loss. The optimum of the LP is attained at one of these vertices.
fn brute_force_objective(design: &[Vec<f64>], y: &[f64], tau: f64) -> f64 {
    let n = y.len();
    let q = design[0].len();
    let mut subset: Vec<usize> = (0..q).collect();
    let mut best = f64::INFINITY;
    loop {
        let mut a: Vec<Vec<f64>> = subset.iter().map(|&i| design[i].clone()).collect();
        let mut b: Vec<f64> = subset.iter().map(|&i| y[i]).collect();
        if let Some(theta) = solve_dense(&mut a, &mut b) {
            let objective: f64 = (0..n)
                .map(|i| {
                    let fit: f64 = design[i].iter().zip(&theta).map(|(x, t)| x * t).sum();
                    check_loss(y[i] - fit, tau).unwrap()
                })
                .sum();
            best = best.min(objective);
        }
        // next lexicographic q-subset of {0, ..., n-1}
        let mut k = q;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if subset[k] != k + n - q {
                break;
            }
        }
        subset[k] += 1;
        for j in (k + 1)..q {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

#[test]
fn fit_matches_exhaustive_vertex_enumeration() {
    let tau = 0.25;
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let n = 20;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.random::<f64>(), rng.random::<f64>() * 2.0 - 1.0])
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| 0.5 + r[0] - 2.0 * r[1] + rng.random::<f64>() - 0.5)
        .collect();
    let sample = DataSample::new(Matrix::from_rows(rows.clone()).unwrap(), y.clone()).unwrap();
    let fit = fit_linear_quantile(&sample, tau, true).unwrap();

    let design: Vec<Vec<f64>> = rows.iter().map(|r| {
        let mut d = vec![1.0];
        d.extend_from_slice(r);
        d
    }).collect();
    let oracle = brute_force_objective(&design, &y, tau);
    let gap = (fit.objective() - oracle).abs() / oracle.max(1e-12);
    assert!(gap <= 1e-8, "objective {} vs oracle {oracle}", fit.objective());
    // The LP should never beat the enumeration (it visits the same vertices).
    assert!(fit.objective() >= oracle - 1e-9 * oracle);
}

#[test]
fn fit_matches_enumeration_across_quantiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(217);
    for &tau in &[0.1, 0.5, 0.77] {
        let n = 14;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>()]).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 1.0 - r[0] + 4.0 * (rng.random::<f64>() - 0.5))
            .collect();
        let sample = DataSample::new(Matrix::from_rows(rows.clone()).unwrap(), y.clone()).unwrap();
        let fit = fit_linear_quantile(&sample, tau, true).unwrap();
        let design: Vec<Vec<f64>> = rows.iter().map(|r| vec![1.0, r[0]]).collect();
        let oracle = brute_force_objective(&design, &y, tau);
        assert!(
            (fit.objective() - oracle).abs() <= 1e-8 * oracle.max(1.0),
            "tau={tau}: {} vs {oracle}",
            fit.objective()
        );
    }
}

/// Plain independent sphere sampler for the statistic's defining integral,
/// written without the prefix-sum and batching machinery of the library path.
fn naive_sphere_statistic(
    fit: &qrlof::QuantileFit,
    x: &Matrix,
    draws: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let n = x.rows();
    let d = x.cols();
    let q = fit.q();
    let mut accum = Matrix::zeros(q, q);
    for _ in 0..draws {
        let beta: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        let beta: Vec<f64> = beta.iter().map(|b| b / norm).collect();
        for k in 0..n {
            let u: f64 = (0..d).map(|c| x.get(k, c) * beta[c]).sum();
            let mut r_vec = vec![0.0f64; q];
            for i in 0..n {
                let proj: f64 = (0..d).map(|c| x.get(i, c) * beta[c]).sum();
                if proj <= u {
                    let s = fit.score(i);
                    for a in 0..q {
                        r_vec[a] += s * fit.gradient_row(i)[a];
                    }
                }
            }
            for a in 0..q {
                for b in 0..q {
                    accum.set(a, b, accum.get(a, b) + r_vec[a] * r_vec[b]);
                }
            }
        }
    }
    let d_half = d as f64 / 2.0;
    let surface = 2.0 * std::f64::consts::PI.powf(d_half) / statrs::function::gamma::gamma(d_half);
    let scale = surface / (draws as f64 * n as f64 * n as f64);
    qrlof::linalg::largest_eigenvalue(&accum.scale(scale)).unwrap()
}

#[test]
fn mc_statistic_matches_naive_sphere_sampler() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let n = 20;
    let x = Matrix::from_fn(n, 2, |_, _| rng.random::<f64>());
    let y: Vec<f64> = (0..n)
        .map(|i| 1.0 + x.get(i, 0) + x.get(i, 1) + rng.random::<f64>() - 0.5)
        .collect();
    let sample = DataSample::new(x.clone(), y).unwrap();
    let fit = fit_linear_quantile(&sample, 0.5, true).unwrap();
    let fast = mc_statistic(&fit, &x, 30_000, 999).unwrap();
    let mut oracle_rng = ChaCha8Rng::seed_from_u64(1000);
    let naive = naive_sphere_statistic(&fit, &x, 30_000, &mut oracle_rng);
    // Independent draws, so agreement is statistical.
    assert!(
        (fast - naive).abs() <= 0.06 * naive,
        "fast={fast} naive={naive}"
    );
    // And both should sit near the closed form at d = 2.
    let weights = weight_matrix(&x).unwrap();
    let exact = lof_statistic(&fit, &weights).unwrap().value;
    assert!((fast - exact).abs() <= 0.05 * exact, "fast={fast} exact={exact}");
    assert!((naive - exact).abs() <= 0.06 * exact, "naive={naive} exact={exact}");
}
