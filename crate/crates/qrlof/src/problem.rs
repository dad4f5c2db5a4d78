//! Testing problems with a composite null inside a larger alternative:
//! the null model is fitted on one covariate set while the statistics scan
//! the alternative set for deviations.

use crate::bootstrap::{BootstrapConfig, PreparedTest, StatisticKind, TestReport};
use crate::data::DataSample;
use crate::error::{QrlofError, Result};
use crate::projection::ProjectionWeightMatrix;

/// A testing problem: fit the null on `null_cols`, look for deviations over
/// `alt_cols` (0-based indices into the sample's covariates).
///
/// `null_cols` must be a subset of `alt_cols`; an empty `null_cols` fits an
/// intercept-only (no-effect) null.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub null_cols: Vec<usize>,
    pub alt_cols: Vec<usize>,
    pub tau: f64,
    pub bootstrap: BootstrapConfig,
}

impl ProblemSpec {
    fn validate(&self, dim: usize) -> Result<()> {
        let check = |cols: &[usize], label: &str| -> Result<()> {
            if let Some(&bad) = cols.iter().find(|&&c| c >= dim) {
                return Err(QrlofError::InvalidConfig(format!(
                    "{label} column index {bad} out of range for {dim} covariates"
                )));
            }
            let mut seen = vec![false; dim];
            for &c in cols {
                if seen[c] {
                    return Err(QrlofError::InvalidConfig(format!(
                        "{label} column index {c} repeated"
                    )));
                }
                seen[c] = true;
            }
            Ok(())
        };
        check(&self.null_cols, "null")?;
        check(&self.alt_cols, "alternative")?;
        if self.alt_cols.is_empty() {
            return Err(QrlofError::InvalidConfig(
                "alternative covariate set must not be empty".into(),
            ));
        }
        if !self
            .null_cols
            .iter()
            .all(|c| self.alt_cols.contains(c))
        {
            return Err(QrlofError::InvalidConfig(
                "null covariate set must be contained in the alternative set".into(),
            ));
        }
        Ok(())
    }
}

/// Runs the bootstrap-calibrated test for a problem specification.
pub fn run_problem(sample: &DataSample, problem: &ProblemSpec) -> Result<TestReport> {
    run_problem_impl(sample, problem, None)
}

/// Same as [`run_problem`], reusing a precomputed weight matrix for the
/// alternative covariate set (useful when testing several quantile levels on
/// one dataset).
pub fn run_problem_with_weights(
    sample: &DataSample,
    problem: &ProblemSpec,
    weights: &ProjectionWeightMatrix,
) -> Result<TestReport> {
    run_problem_impl(sample, problem, Some(weights.clone()))
}

fn run_problem_impl(
    sample: &DataSample,
    problem: &ProblemSpec,
    weights: Option<ProjectionWeightMatrix>,
) -> Result<TestReport> {
    problem.validate(sample.dim())?;
    let need_weights = problem.bootstrap.statistic == StatisticKind::Projection;
    let prepared = PreparedTest::new(
        sample,
        &problem.null_cols,
        &problem.alt_cols,
        problem.tau,
        need_weights,
        weights,
    )?;
    let mut reports = prepared.run(
        &[problem.bootstrap.statistic],
        problem.bootstrap.replications,
        problem.bootstrap.seed,
        problem.bootstrap.smoothed_p_value,
    )?;
    Ok(reports.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::run_test;
    use crate::linalg::Matrix;
    use rand::Rng;

    fn sample(seed: u64, n: usize, d: usize) -> DataSample {
        let mut rng = crate::rng::stream_rng(seed, 0);
        let x = Matrix::from_fn(n, d, |_, _| rng.random::<f64>());
        let y: Vec<f64> = (0..n)
            .map(|i| 1.0 + x.row(i).iter().sum::<f64>() + rng.random::<f64>() - 0.5)
            .collect();
        DataSample::new(x, y).unwrap()
    }

    #[test]
    fn full_problem_matches_run_test() {
        let s = sample(21, 25, 3);
        let cfg = BootstrapConfig::new(30, 5, StatisticKind::Projection);
        let problem = ProblemSpec {
            null_cols: vec![0, 1, 2],
            alt_cols: vec![0, 1, 2],
            tau: 0.5,
            bootstrap: cfg,
        };
        let via_problem = run_problem(&s, &problem).unwrap();
        let via_test = run_test(&s, 0.5, &cfg).unwrap();
        assert_eq!(via_problem, via_test);
    }

    #[test]
    fn null_must_be_subset_of_alternative() {
        let s = sample(22, 20, 3);
        let problem = ProblemSpec {
            null_cols: vec![0, 2],
            alt_cols: vec![0, 1],
            tau: 0.5,
            bootstrap: BootstrapConfig::new(10, 1, StatisticKind::Projection),
        };
        assert!(matches!(
            run_problem(&s, &problem),
            Err(QrlofError::InvalidConfig(_))
        ));
    }

    #[test]
    fn composite_problem_reports_both_dimensions() {
        let s = sample(23, 30, 4);
        let problem = ProblemSpec {
            null_cols: vec![0, 1],
            alt_cols: vec![0, 1, 2, 3],
            tau: 0.5,
            bootstrap: BootstrapConfig::new(20, 3, StatisticKind::Projection),
        };
        let report = run_problem(&s, &problem).unwrap();
        assert_eq!(report.d_null, 2);
        assert_eq!(report.d_alt, 4);
        assert_eq!(report.n, 30);
    }

    #[test]
    fn intercept_only_null_is_allowed() {
        let s = sample(24, 25, 2);
        let problem = ProblemSpec {
            null_cols: vec![],
            alt_cols: vec![0, 1],
            tau: 0.5,
            bootstrap: BootstrapConfig::new(15, 2, StatisticKind::Hz),
        };
        let report = run_problem(&s, &problem).unwrap();
        assert_eq!(report.d_null, 0);
        assert!(report.p_value >= 0.0 && report.p_value <= 1.0);
    }

    #[test]
    fn precomputed_weights_do_not_change_the_report() {
        let s = sample(25, 20, 2);
        let problem = ProblemSpec {
            null_cols: vec![0, 1],
            alt_cols: vec![0, 1],
            tau: 0.25,
            bootstrap: BootstrapConfig::new(12, 8, StatisticKind::Projection),
        };
        let w = crate::projection::weight_matrix(s.covariates()).unwrap();
        let direct = run_problem(&s, &problem).unwrap();
        let reused = run_problem_with_weights(&s, &problem, &w).unwrap();
        assert_eq!(direct, reused);
    }
}
