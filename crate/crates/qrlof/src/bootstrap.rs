//! Wild bootstrap calibration with two-point multipliers.
//!
//! Bootstrap responses are `Y*_i = x_i'theta_hat + w_i |r_i|` with multipliers
//! drawn from the two-point law taking `2(1-tau)` with probability `1-tau`
//! and `-2tau` with probability `tau`, whose tau-quantile is zero. Each
//! replicate refits the null model on `(X, Y*)` and recomputes the chosen
//! statistic, reusing the projection weight matrix of the original sample.
//! The p-value is the share of bootstrap statistics at least as large as the
//! observed one.

use crate::data::{build_design, DataSample};
use crate::error::{check_tau, QrlofError, Result};
use crate::halfspace::hz_statistic;
use crate::linalg::Matrix;
use crate::parallel;
use crate::projection::{lof_statistic, weight_matrix, ProjectionWeightMatrix};
use crate::qreg::{self, QuantileFit};
use crate::rng::stream_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Which statistic the bootstrap calibrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    /// Cumulative sums over projected half-lines.
    Projection,
    /// Componentwise half-space indicators.
    Hz,
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatisticKind::Projection => write!(f, "projection"),
            StatisticKind::Hz => write!(f, "hz"),
        }
    }
}

/// Bootstrap configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    /// Number of bootstrap replications B.
    pub replications: usize,
    pub seed: u64,
    pub statistic: StatisticKind,
    /// Use `(count + 1) / (B + 1)` instead of the plain proportion.
    /// Off by default.
    pub smoothed_p_value: bool,
}

impl BootstrapConfig {
    pub fn new(replications: usize, seed: u64, statistic: StatisticKind) -> Self {
        BootstrapConfig {
            replications,
            seed,
            statistic,
            smoothed_p_value: false,
        }
    }
}

/// Outcome of one bootstrap-calibrated test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub p_value: f64,
    pub tau: f64,
    #[serde(rename = "B")]
    pub replications: usize,
    pub seed: u64,
    pub statistic_kind: StatisticKind,
    pub n: usize,
    pub d_null: usize,
    pub d_alt: usize,
    pub bootstrap_statistics: Vec<f64>,
}

/// One multiplier draw from the two-point law: `2(1-tau)` with probability
/// `1-tau`, `-2tau` with probability `tau`.
pub fn draw_multiplier<R: Rng + ?Sized>(tau: f64, rng: &mut R) -> Result<f64> {
    check_tau(tau)?;
    Ok(draw_multiplier_unchecked(tau, rng))
}

#[inline]
fn draw_multiplier_unchecked<R: Rng + ?Sized>(tau: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if u < tau {
        -2.0 * tau
    } else {
        2.0 * (1.0 - tau)
    }
}

/// Bootstrap responses `Y*_i = fitted_i + w_i |r_i|` with independent
/// multipliers from `rng`.
pub fn bootstrap_response<R: Rng + ?Sized>(fit: &QuantileFit, rng: &mut R) -> Vec<f64> {
    let tau = fit.tau();
    (0..fit.n())
        .map(|i| fit.fitted(i) + draw_multiplier_unchecked(tau, rng) * fit.residuals()[i].abs())
        .collect()
}

/// p-value as the share of bootstrap statistics not smaller than the observed
/// statistic.
pub(crate) fn p_value_from(statistic: f64, bootstrap: &[f64], smoothed: bool) -> f64 {
    let count = bootstrap.iter().filter(|&&t| statistic <= t).count();
    if smoothed {
        (count as f64 + 1.0) / (bootstrap.len() as f64 + 1.0)
    } else {
        count as f64 / bootstrap.len() as f64
    }
}

/// Shared inputs of a bootstrap run: the validated null design, the covariate
/// set the statistics scan for deviations, and the weight matrix when the
/// projection statistic is requested.
pub(crate) struct PreparedTest {
    pub design: Matrix,
    pub x_stat: Matrix,
    pub y: Vec<f64>,
    pub tau: f64,
    pub d_null: usize,
    pub weights: Option<ProjectionWeightMatrix>,
}

impl PreparedTest {
    /// Validates and assembles the inputs. `null_cols` select the covariates
    /// of the fitted null model (always with intercept); `alt_cols` select
    /// the covariates the statistics are evaluated on. A precomputed weight
    /// matrix for the `alt_cols` selection may be supplied for reuse.
    pub fn new(
        sample: &DataSample,
        null_cols: &[usize],
        alt_cols: &[usize],
        tau: f64,
        need_weights: bool,
        weights: Option<ProjectionWeightMatrix>,
    ) -> Result<Self> {
        check_tau(tau)?;
        let null_x = sample.covariates().select_columns(null_cols)?;
        let x_stat = sample.covariates().select_columns(alt_cols)?;
        let design = build_design(&null_x, true);
        let q = design.cols();
        if sample.n() < q {
            return Err(QrlofError::UnderDetermined { n: sample.n(), q });
        }
        if crate::linalg::column_rank(&design, 1e-10) < q {
            return Err(QrlofError::SingularDesign);
        }
        let weights = match (need_weights, weights) {
            (false, _) => None,
            (true, Some(w)) => {
                if w.n() != sample.n() || w.dimension_d != alt_cols.len() {
                    return Err(QrlofError::DimensionMismatch(
                        "supplied weight matrix does not match the alternative covariates".into(),
                    ));
                }
                Some(w)
            }
            (true, None) => Some(weight_matrix(&x_stat)?),
        };
        Ok(PreparedTest {
            design,
            x_stat,
            y: sample.response().to_vec(),
            tau,
            d_null: null_cols.len(),
            weights,
        })
    }

    fn statistic_for(&self, fit: &QuantileFit, kind: StatisticKind) -> Result<f64> {
        match kind {
            StatisticKind::Projection => {
                let weights = self.weights.as_ref().expect("weights prepared");
                Ok(lof_statistic(fit, weights)?.value)
            }
            StatisticKind::Hz => Ok(hz_statistic(fit, &self.x_stat)?.value),
        }
    }

    /// Runs the bootstrap once and reports every requested statistic.
    /// Replicate `b` draws its multipliers from stream `b + 1` of `seed`, so
    /// reports are bit-identical for any thread count, and identical to
    /// running each statistic kind on its own.
    pub fn run(
        &self,
        kinds: &[StatisticKind],
        replications: usize,
        seed: u64,
        smoothed: bool,
    ) -> Result<Vec<TestReport>> {
        if replications == 0 {
            return Err(QrlofError::InvalidConfig(
                "bootstrap replications must be at least 1".into(),
            ));
        }
        if kinds.is_empty() {
            return Err(QrlofError::InvalidConfig(
                "at least one statistic kind is required".into(),
            ));
        }
        let fit = qreg::fit_design(self.design.clone(), &self.y, self.tau, true)?;
        let observed: Vec<f64> = kinds
            .iter()
            .map(|&k| self.statistic_for(&fit, k))
            .collect::<Result<_>>()?;

        let fitted: Vec<f64> = (0..fit.n()).map(|i| fit.fitted(i)).collect();
        let abs_res: Vec<f64> = fit.residuals().iter().map(|r| r.abs()).collect();

        let replicate_stats: Vec<Vec<f64>> =
            parallel::try_map_indexed(replications, |b| -> Result<Vec<f64>> {
                let mut rng = stream_rng(seed, b as u64 + 1);
                let y_star: Vec<f64> = (0..fitted.len())
                    .map(|i| fitted[i] + draw_multiplier_unchecked(self.tau, &mut rng) * abs_res[i])
                    .collect();
                let refit = qreg::fit_design(self.design.clone(), &y_star, self.tau, true)?;
                kinds.iter().map(|&k| self.statistic_for(&refit, k)).collect()
            })?;

        Ok(kinds
            .iter()
            .enumerate()
            .map(|(idx, &kind)| {
                let bootstrap_statistics: Vec<f64> =
                    replicate_stats.iter().map(|s| s[idx]).collect();
                let p_value = p_value_from(observed[idx], &bootstrap_statistics, smoothed);
                TestReport {
                    statistic: observed[idx],
                    p_value,
                    tau: self.tau,
                    replications,
                    seed,
                    statistic_kind: kind,
                    n: self.y.len(),
                    d_null: self.d_null,
                    d_alt: self.x_stat.cols(),
                    bootstrap_statistics,
                }
            })
            .collect())
    }
}

/// Bootstrap-calibrated lack-of-fit test of the linear model on all
/// covariates of `sample`.
pub fn run_test(sample: &DataSample, tau: f64, config: &BootstrapConfig) -> Result<TestReport> {
    let all: Vec<usize> = (0..sample.dim()).collect();
    let prepared = PreparedTest::new(
        sample,
        &all,
        &all,
        tau,
        config.statistic == StatisticKind::Projection,
        None,
    )?;
    let mut reports = prepared.run(
        &[config.statistic],
        config.replications,
        config.seed,
        config.smoothed_p_value,
    )?;
    Ok(reports.remove(0))
}
