//! Check-loss machinery and linear quantile-regression fitting.

mod simplex;

use crate::data::{build_design, DataSample};
use crate::error::{check_tau, QrlofError, Result};
use crate::linalg::{self, Matrix};

/// Check (pinball) loss `rho_tau(r) = tau*r` for `r > 0`, `(tau-1)*r` for
/// `r < 0`, and `0` at `r = 0`.
pub fn check_loss(r: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(check_loss_unchecked(r, tau))
}

#[inline]
pub(crate) fn check_loss_unchecked(r: f64, tau: f64) -> f64 {
    if r > 0.0 {
        tau * r
    } else if r < 0.0 {
        (tau - 1.0) * r
    } else {
        0.0
    }
}

/// Signed residual score `psi(r) = tau*I(r>0) + (tau-1)*I(r<0)`, the
/// derivative of the check loss away from zero. Zero residuals score zero.
pub fn psi(r: f64, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(psi_unchecked(r, tau))
}

#[inline]
pub(crate) fn psi_unchecked(r: f64, tau: f64) -> f64 {
    if r > 0.0 {
        tau
    } else if r < 0.0 {
        tau - 1.0
    } else {
        0.0
    }
}

/// Gradient of the linear model `g(x, theta) = x'theta` in its parameters:
/// the (optionally intercept-augmented) regressor vector, independent of
/// `theta`. The `theta` argument is the hook for future model families and is
/// only checked for dimension.
pub fn model_gradient(x: &[f64], theta: &[f64], with_intercept: bool) -> Result<Vec<f64>> {
    let q = x.len() + usize::from(with_intercept);
    if theta.len() != q {
        return Err(QrlofError::DimensionMismatch(format!(
            "theta has length {} but the design dimension is {q}",
            theta.len()
        )));
    }
    let mut g = Vec::with_capacity(q);
    if with_intercept {
        g.push(1.0);
    }
    g.extend_from_slice(x);
    Ok(g)
}

/// A fitted linear quantile regression at level `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFit {
    tau: f64,
    theta: Vec<f64>,
    residuals: Vec<f64>,
    objective: f64,
    design_has_intercept: bool,
    design: Matrix,
}

impl QuantileFit {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Estimated coefficients; the intercept is first when present.
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Residuals `y_i - x_i'theta` from the basic solution. Observations
    /// interpolated by the optimal basis have residuals that are exactly zero.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Attained value of `sum_i rho_tau(r_i)`.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn design_has_intercept(&self) -> bool {
        self.design_has_intercept
    }

    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    /// Number of fitted parameters.
    pub fn q(&self) -> usize {
        self.theta.len()
    }

    /// Design row `i`, which for the linear family is also the model gradient
    /// at observation `i`.
    pub fn gradient_row(&self, i: usize) -> &[f64] {
        self.design.row(i)
    }

    /// Fitted value `x_i'theta`.
    pub fn fitted(&self, i: usize) -> f64 {
        linalg::dot(self.design.row(i), &self.theta)
    }

    /// `psi(r_i)` at the fit's own quantile level.
    pub fn score(&self, i: usize) -> f64 {
        psi_unchecked(self.residuals[i], self.tau)
    }
}

/// Fits the linear quantile regression of `response` on `covariates`
/// (optionally with an intercept) by exact simplex on the check-loss LP.
pub fn fit_linear_quantile(
    sample: &DataSample,
    tau: f64,
    with_intercept: bool,
) -> Result<QuantileFit> {
    check_tau(tau)?;
    let design = build_design(sample.covariates(), with_intercept);
    let q = design.cols();
    if sample.n() < q {
        return Err(QrlofError::UnderDetermined { n: sample.n(), q });
    }
    if linalg::column_rank(&design, 1e-10) < q {
        return Err(QrlofError::SingularDesign);
    }
    fit_design(design, sample.response(), tau, with_intercept)
}

/// Fits on a pre-built design matrix. Rank and shape checks are the caller's
/// responsibility; bootstrap refits reuse a validated design.
pub(crate) fn fit_design(
    design: Matrix,
    y: &[f64],
    tau: f64,
    design_has_intercept: bool,
) -> Result<QuantileFit> {
    let lp = simplex::solve_check_loss_lp(&design, y, tau)?;
    let objective = lp
        .residuals
        .iter()
        .map(|&r| check_loss_unchecked(r, tau))
        .sum();
    Ok(QuantileFit {
        tau,
        theta: lp.theta,
        residuals: lp.residuals,
        objective,
        design_has_intercept,
        design,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataSample;
    use crate::linalg::Matrix;
    use rand::Rng;

    fn sample_from(rows: Vec<Vec<f64>>, y: Vec<f64>) -> DataSample {
        DataSample::new(Matrix::from_rows(rows).unwrap(), y).unwrap()
    }

    #[test]
    fn check_loss_matches_definition() {
        assert_eq!(check_loss(2.0, 0.5).unwrap(), 1.0);
        assert_eq!(check_loss(-1.0, 0.25).unwrap(), 0.75);
        assert_eq!(check_loss(0.0, 0.9).unwrap(), 0.0);
        assert!(check_loss(1.0, 0.0).is_err());
        assert!(check_loss(1.0, 1.0).is_err());
    }

    #[test]
    fn psi_matches_definition() {
        assert_eq!(psi(1.0, 0.5).unwrap(), 0.5);
        assert_eq!(psi(-3.0, 0.25).unwrap(), -0.75);
        assert_eq!(psi(0.0, 0.75).unwrap(), 0.0);
        assert!(psi(0.0, 1.5).is_err());
    }

    #[test]
    fn psi_is_a_subgradient_of_check_loss() {
        let h = 1e-8;
        for &(r, tau) in &[(1.5, 0.3), (-0.7, 0.3), (2.0, 0.9), (-0.01, 0.1)] {
            let slope = (check_loss(r + h, tau).unwrap() - check_loss(r, tau).unwrap()) / h;
            assert!((slope - psi(r, tau).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn model_gradient_examples() {
        assert_eq!(
            model_gradient(&[3.0, -1.0], &[0.0; 3], true).unwrap(),
            vec![1.0, 3.0, -1.0]
        );
        assert_eq!(
            model_gradient(&[0.0, 0.0], &[0.0; 3], true).unwrap(),
            vec![1.0, 0.0, 0.0]
        );
        assert_eq!(model_gradient(&[5.0], &[0.0], false).unwrap(), vec![5.0]);
        assert!(model_gradient(&[5.0], &[0.0, 0.0], false).is_err());
    }

    #[test]
    fn intercept_only_median_is_the_sample_median() {
        let s = sample_from(vec![vec![0.0], vec![0.0], vec![0.0]], vec![1.0, 2.0, 3.0]);
        // Intercept-only: fit on an empty covariate selection.
        let design = Matrix::from_fn(3, 1, |_, _| 1.0);
        let fit = fit_design(design, s.response(), 0.5, true).unwrap();
        assert_eq!(fit.theta(), &[2.0]);
        assert_eq!(fit.objective(), 1.0);
    }

    #[test]
    fn exact_interpolation_when_n_equals_q() {
        for &tau in &[0.1, 0.5, 0.9] {
            let s = sample_from(vec![vec![0.0], vec![1.0]], vec![0.0, 1.0]);
            let fit = fit_linear_quantile(&s, tau, true).unwrap();
            assert_eq!(fit.theta(), &[0.0, 1.0]);
            assert_eq!(fit.residuals(), &[0.0, 0.0]);
            assert_eq!(fit.objective(), 0.0);
        }
    }

    #[test]
    fn rejects_rank_deficient_design() {
        let s = sample_from(
            vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]],
            vec![1.0, 2.0, 3.0],
        );
        assert!(matches!(
            fit_linear_quantile(&s, 0.5, false),
            Err(QrlofError::SingularDesign)
        ));
    }

    #[test]
    fn rejects_under_determined_fit() {
        let s = sample_from(vec![vec![1.0, 2.0, 3.0]], vec![1.0]);
        assert!(matches!(
            fit_linear_quantile(&s, 0.5, true),
            Err(QrlofError::UnderDetermined { .. })
        ));
    }

    #[test]
    fn residuals_match_recomputation() {
        let mut rng = crate::rng::stream_rng(11, 0);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 1.0 + r[0] - r[1] + rng.random::<f64>() - 0.5)
            .collect();
        let s = sample_from(rows, y.clone());
        let fit = fit_linear_quantile(&s, 0.3, true).unwrap();
        for i in 0..s.n() {
            let pred = fit.fitted(i);
            assert!((y[i] - pred - fit.residuals()[i]).abs() < 1e-10);
        }
        let recomputed: f64 = fit
            .residuals()
            .iter()
            .map(|&r| check_loss_unchecked(r, 0.3))
            .sum();
        assert!((recomputed - fit.objective()).abs() < 1e-10);
    }

    #[test]
    fn sign_counts_satisfy_quantile_optimality() {
        let mut rng = crate::rng::stream_rng(23, 0);
        for &tau in &[0.1, 0.25, 0.5, 0.77] {
            for trial in 0..5 {
                let n = 30 + trial;
                let rows: Vec<Vec<f64>> = (0..n)
                    .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
                    .collect();
                let y: Vec<f64> = rows
                    .iter()
                    .map(|r| 1.0 + 2.0 * r[0] + rng.random::<f64>())
                    .collect();
                let s = sample_from(rows, y);
                let fit = fit_linear_quantile(&s, tau, true).unwrap();
                let neg = fit.residuals().iter().filter(|&&r| r < 0.0).count() as f64;
                let nonpos = fit.residuals().iter().filter(|&&r| r <= 0.0).count() as f64;
                let n_tau = n as f64 * tau;
                assert!(neg <= n_tau && n_tau <= nonpos, "tau={tau} n={n}");
            }
        }
    }

    #[test]
    fn coordinate_perturbations_never_improve_the_objective() {
        let mut rng = crate::rng::stream_rng(5, 0);
        let rows: Vec<Vec<f64>> = (0..25)
            .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 1.0 + r[0] + r[1] + rng.random::<f64>() - 0.5)
            .collect();
        let s = sample_from(rows.clone(), y.clone());
        let tau = 0.25;
        let fit = fit_linear_quantile(&s, tau, true).unwrap();
        let objective_at = |theta: &[f64]| -> f64 {
            (0..s.n())
                .map(|i| {
                    let xi = [1.0, rows[i][0], rows[i][1]];
                    check_loss_unchecked(y[i] - linalg::dot(&xi, theta), tau)
                })
                .sum()
        };
        for k in 0..fit.q() {
            for &delta in &[1e-4, -1e-4] {
                let mut theta = fit.theta().to_vec();
                theta[k] += delta;
                assert!(objective_at(&theta) >= fit.objective() - 1e-10);
            }
        }
    }

    #[test]
    fn response_scaling_scales_fit() {
        let mut rng = crate::rng::stream_rng(9, 0);
        let rows: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.random::<f64>()]).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| 0.5 - r[0] + rng.random::<f64>())
            .collect();
        let lambda = 3.5;
        let scaled: Vec<f64> = y.iter().map(|v| lambda * v).collect();
        let fit = fit_linear_quantile(&sample_from(rows.clone(), y), 0.4, true).unwrap();
        let fit_scaled = fit_linear_quantile(&sample_from(rows, scaled), 0.4, true).unwrap();
        for (a, b) in fit.theta().iter().zip(fit_scaled.theta()) {
            assert!((lambda * a - b).abs() < 1e-9);
        }
        assert!((lambda * fit.objective() - fit_scaled.objective()).abs() < 1e-9);
    }
}
