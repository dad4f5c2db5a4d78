//! Simulation laboratory: data-generating models, quantile-centered error
//! laws, and the Monte Carlo experiment runner that turns bootstrap tests
//! into rejection-proportion tables and power curves.

use crate::bootstrap::{BootstrapConfig, PreparedTest, StatisticKind};
use crate::data::DataSample;
use crate::error::{check_tau, QrlofError, Result};
use crate::linalg::Matrix;
use crate::parallel;
use crate::rng::{derive_seed, stream_rng};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use std::fmt;

/// Distribution of the raw error variable Z before quantile centering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorLaw {
    Normal,
    LogNormal,
    /// Exponential with expectation one.
    Exponential,
    ChiSquared {
        df: u32,
    },
    /// Uniform on (-1, 1).
    Uniform,
    /// Standard normal with probability 0.75, N(5, 2) with probability 0.25.
    Mixture,
}

impl fmt::Display for ErrorLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorLaw::Normal => write!(f, "normal"),
            ErrorLaw::LogNormal => write!(f, "lognormal"),
            ErrorLaw::Exponential => write!(f, "exponential"),
            ErrorLaw::ChiSquared { df } => write!(f, "chisq{df}"),
            ErrorLaw::Uniform => write!(f, "uniform"),
            ErrorLaw::Mixture => write!(f, "mixture"),
        }
    }
}

impl ErrorLaw {
    /// The tau-quantile of Z, used to center errors so that
    /// `eps = Z - z_tau` has tau-quantile zero.
    pub fn z_quantile(&self, tau: f64) -> Result<f64> {
        check_tau(tau)?;
        match self {
            ErrorLaw::Normal => Ok(standard_normal().inverse_cdf(tau)),
            ErrorLaw::LogNormal => Ok(standard_normal().inverse_cdf(tau).exp()),
            ErrorLaw::Exponential => Ok(-(1.0 - tau).ln()),
            ErrorLaw::ChiSquared { df } => {
                if *df == 0 {
                    return Err(QrlofError::InvalidModel(
                        "chi-squared error needs df >= 1".into(),
                    ));
                }
                let dist = ChiSquared::new(*df as f64)
                    .map_err(|e| QrlofError::InvalidModel(e.to_string()))?;
                Ok(dist.inverse_cdf(tau))
            }
            ErrorLaw::Uniform => Ok(2.0 * tau - 1.0),
            ErrorLaw::Mixture => Ok(mixture_quantile(tau)),
        }
    }

    fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ErrorLaw::Normal => rng.sample(StandardNormal),
            ErrorLaw::LogNormal => rng.sample::<f64, _>(StandardNormal).exp(),
            ErrorLaw::Exponential => -(1.0 - rng.random::<f64>()).ln(),
            ErrorLaw::ChiSquared { df } => (0..*df)
                .map(|_| rng.sample::<f64, _>(StandardNormal).powi(2))
                .sum(),
            ErrorLaw::Uniform => 2.0 * rng.random::<f64>() - 1.0,
            ErrorLaw::Mixture => {
                // Both branches consume one uniform and one normal so the
                // stream position does not depend on the branch taken.
                let u: f64 = rng.random();
                let z: f64 = rng.sample(StandardNormal);
                if u < 0.75 {
                    z
                } else {
                    5.0 + 2.0 * z
                }
            }
        }
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid parameters")
}

/// Root of `0.75 Phi(z) + 0.25 Phi((z - 5) / 2) = tau` by bisection.
fn mixture_quantile(tau: f64) -> f64 {
    let normal = standard_normal();
    let cdf = |z: f64| 0.75 * normal.cdf(z) + 0.25 * normal.cdf((z - 5.0) / 2.0);
    let mut lo = -40.0f64;
    let mut hi = 60.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < tau {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Error generator producing `eps = Z - z_tau`, whose tau-quantile is zero by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteredError {
    law: ErrorLaw,
    tau: f64,
    z_tau: f64,
}

impl CenteredError {
    pub fn new(law: ErrorLaw, tau: f64) -> Result<Self> {
        let z_tau = law.z_quantile(tau)?;
        Ok(CenteredError { law, tau, z_tau })
    }

    pub fn law(&self) -> ErrorLaw {
        self.law
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.law.sample_z(rng) - self.z_tau
    }
}

/// Deviation shapes added to the linear null, all functions of
/// `l(x) = 1 + x1 + x2` except the quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviationKind {
    /// `(x1^2 + x2^2 + x1 x2) / 3`
    Quadratic,
    /// `5 sin(0.6 pi l(x))`
    Sine,
    /// `8 exp(-0.5 l(x))`
    Exponential,
    /// `6 log |l(x)|`
    Logarithm,
}

impl fmt::Display for DeviationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviationKind::Quadratic => write!(f, "quadratic"),
            DeviationKind::Sine => write!(f, "sine"),
            DeviationKind::Exponential => write!(f, "exponential"),
            DeviationKind::Logarithm => write!(f, "logarithm"),
        }
    }
}

impl DeviationKind {
    fn evaluate(&self, x1: f64, x2: f64) -> f64 {
        let l = 1.0 + x1 + x2;
        match self {
            DeviationKind::Quadratic => (x1 * x1 + x2 * x2 + x1 * x2) / 3.0,
            DeviationKind::Sine => 5.0 * (0.6 * std::f64::consts::PI * l).sin(),
            DeviationKind::Exponential => 8.0 * (-0.5 * l).exp(),
            DeviationKind::Logarithm => 6.0 * l.abs().ln(),
        }
    }
}

/// The benchmark data-generating models, numbered 1-8 on the CLI and in
/// emitted tables.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    /// 1: `Y = 1 + X1 + X2 + eps`, uniform covariates; linear null in both.
    Linear2 { tau: f64, error: ErrorLaw },
    /// 2: `Y = 1 + X1 + ... + X5 + eps`, uniform covariates.
    Linear5 { tau: f64, error: ErrorLaw },
    /// 3: `Y = 1 + X1 + X2 + (X1 + 0.5) eps`, heteroscedastic.
    Hetero2 { tau: f64, error: ErrorLaw },
    /// 4: `Y = 1 + X1 + (X1 + 0.5) eps`, heteroscedastic, one covariate.
    Hetero1 { tau: f64, error: ErrorLaw },
    /// 5: `Y = 1 + (X1 - X2) / 5 + eps`, standard normal covariates, tested
    /// against the no-effect (intercept-only) null.
    NoEffect { tau: f64, error: ErrorLaw },
    /// 6: `Y = 1 + X1 + X2 + c (X1^2 + X2^2 + X1 X2) + eps`, X1 uniform,
    /// X2 standard normal, log-normal error.
    QuadraticDrift { tau: f64, c: f64 },
    /// 7: `Y = 1 + X1 + X2 + h(X) + eps`, X1 uniform, X2 standard normal.
    SmoothDeviation {
        tau: f64,
        deviation: DeviationKind,
        error: ErrorLaw,
    },
    /// 8: `Y = 1 + X1 + X2 + (X1^2 + X1 X2 + X2^2) / 3 + eps` with
    /// `extra_dims` pure-noise covariates present only in the alternative;
    /// odd covariates uniform, even ones standard normal, log-normal error.
    HighDimQuadratic { tau: f64, extra_dims: usize },
}

impl ModelSpec {
    pub fn id(&self) -> u8 {
        match self {
            ModelSpec::Linear2 { .. } => 1,
            ModelSpec::Linear5 { .. } => 2,
            ModelSpec::Hetero2 { .. } => 3,
            ModelSpec::Hetero1 { .. } => 4,
            ModelSpec::NoEffect { .. } => 5,
            ModelSpec::QuadraticDrift { .. } => 6,
            ModelSpec::SmoothDeviation { .. } => 7,
            ModelSpec::HighDimQuadratic { .. } => 8,
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            ModelSpec::Linear2 { tau, .. }
            | ModelSpec::Linear5 { tau, .. }
            | ModelSpec::Hetero2 { tau, .. }
            | ModelSpec::Hetero1 { tau, .. }
            | ModelSpec::NoEffect { tau, .. }
            | ModelSpec::QuadraticDrift { tau, .. }
            | ModelSpec::SmoothDeviation { tau, .. }
            | ModelSpec::HighDimQuadratic { tau, .. } => *tau,
        }
    }

    /// Covariate dimension of the generated (alternative) design.
    pub fn data_dim(&self) -> usize {
        match self {
            ModelSpec::Hetero1 { .. } => 1,
            ModelSpec::Linear5 { .. } => 5,
            ModelSpec::HighDimQuadratic { extra_dims, .. } => 2 + extra_dims,
            _ => 2,
        }
    }

    /// Indices of the covariates entering the fitted null model.
    pub fn null_cols(&self) -> Vec<usize> {
        match self {
            ModelSpec::NoEffect { .. } => Vec::new(),
            ModelSpec::Hetero1 { .. } => vec![0],
            ModelSpec::Linear5 { .. } => vec![0, 1, 2, 3, 4],
            _ => vec![0, 1],
        }
    }

    /// Whether the fitted null model is correctly specified.
    pub fn true_null(&self) -> bool {
        match self {
            ModelSpec::Linear2 { .. }
            | ModelSpec::Linear5 { .. }
            | ModelSpec::Hetero2 { .. }
            | ModelSpec::Hetero1 { .. } => true,
            ModelSpec::QuadraticDrift { c, .. } => *c == 0.0,
            _ => false,
        }
    }

    fn error_generator(&self) -> Result<CenteredError> {
        let (law, tau) = match self {
            ModelSpec::Linear2 { tau, error }
            | ModelSpec::Linear5 { tau, error }
            | ModelSpec::Hetero2 { tau, error }
            | ModelSpec::Hetero1 { tau, error }
            | ModelSpec::NoEffect { tau, error }
            | ModelSpec::SmoothDeviation { tau, error, .. } => (*error, *tau),
            ModelSpec::QuadraticDrift { tau, .. } | ModelSpec::HighDimQuadratic { tau, .. } => {
                (ErrorLaw::LogNormal, *tau)
            }
        };
        CenteredError::new(law, tau)
    }

    /// Compact descriptor used in emitted tables.
    pub fn label(&self) -> String {
        match self {
            ModelSpec::Linear2 {
                error: ErrorLaw::Normal,
                ..
            } => "1".into(),
            ModelSpec::Linear2 { error, .. } => format!("1:{error}"),
            ModelSpec::Linear5 {
                error: ErrorLaw::Normal,
                ..
            } => "2".into(),
            ModelSpec::Linear5 { error, .. } => format!("2:{error}"),
            ModelSpec::Hetero2 {
                error: ErrorLaw::Normal,
                ..
            } => "3".into(),
            ModelSpec::Hetero2 { error, .. } => format!("3:{error}"),
            ModelSpec::Hetero1 {
                error: ErrorLaw::Normal,
                ..
            } => "4".into(),
            ModelSpec::Hetero1 { error, .. } => format!("4:{error}"),
            ModelSpec::NoEffect { error, .. } => format!("5:{error}"),
            ModelSpec::QuadraticDrift { c, .. } => format!("6:c={c}"),
            ModelSpec::SmoothDeviation {
                deviation, error, ..
            } => format!("7:{deviation}:{error}"),
            ModelSpec::HighDimQuadratic { extra_dims, .. } => format!("8:t={extra_dims}"),
        }
    }

    fn draw_covariates<R: Rng + ?Sized>(&self, rng: &mut R, row: &mut [f64]) {
        match self {
            ModelSpec::NoEffect { .. } => {
                for v in row.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
            ModelSpec::QuadraticDrift { .. } | ModelSpec::SmoothDeviation { .. } => {
                row[0] = rng.random();
                row[1] = rng.sample(StandardNormal);
            }
            ModelSpec::HighDimQuadratic { .. } => {
                for (k, v) in row.iter_mut().enumerate() {
                    // 1-based covariate index: odd uniform, even normal.
                    *v = if k % 2 == 0 {
                        rng.random()
                    } else {
                        rng.sample(StandardNormal)
                    };
                }
            }
            _ => {
                for v in row.iter_mut() {
                    *v = rng.random();
                }
            }
        }
    }

    /// Response value for a covariate row and error draw.
    pub(crate) fn assemble_response(&self, x: &[f64], eps: f64) -> f64 {
        match self {
            ModelSpec::Linear2 { .. } => 1.0 + x[0] + x[1] + eps,
            ModelSpec::Linear5 { .. } => 1.0 + x.iter().sum::<f64>() + eps,
            ModelSpec::Hetero2 { .. } => 1.0 + x[0] + x[1] + (x[0] + 0.5) * eps,
            ModelSpec::Hetero1 { .. } => 1.0 + x[0] + (x[0] + 0.5) * eps,
            ModelSpec::NoEffect { .. } => 1.0 + (x[0] - x[1]) / 5.0 + eps,
            ModelSpec::QuadraticDrift { c, .. } => {
                1.0 + x[0] + x[1] + c * (x[0] * x[0] + x[1] * x[1] + x[0] * x[1]) + eps
            }
            ModelSpec::SmoothDeviation { deviation, .. } => {
                1.0 + x[0] + x[1] + deviation.evaluate(x[0], x[1]) + eps
            }
            ModelSpec::HighDimQuadratic { .. } => {
                1.0 + x[0] + x[1] + (x[0] * x[0] + x[0] * x[1] + x[1] * x[1]) / 3.0 + eps
            }
        }
    }
}

/// A generated dataset together with the covariates of its null model and
/// whether that null is correctly specified.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedSample {
    pub sample: DataSample,
    pub null_cols: Vec<usize>,
    pub true_null: bool,
}

/// Draws a dataset of size `n` from a model. Per observation, the covariates
/// are drawn in column order followed by the error draws, so streams are
/// reproducible.
pub fn generate_sample<R: Rng + ?Sized>(
    spec: &ModelSpec,
    n: usize,
    rng: &mut R,
) -> Result<GeneratedSample> {
    let q = spec.null_cols().len() + 1;
    if n < q {
        return Err(QrlofError::InvalidModel(format!(
            "n = {n} is below the {q} parameters of the null design"
        )));
    }
    let error = spec.error_generator()?;
    let d = spec.data_dim();
    let mut data = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    let mut row = vec![0.0f64; d];
    for _ in 0..n {
        spec.draw_covariates(rng, &mut row);
        let eps = error.sample(rng);
        data.extend_from_slice(&row);
        y.push(spec.assemble_response(&row, eps));
    }
    let covariates = Matrix::from_vec(n, d, data)?;
    Ok(GeneratedSample {
        sample: DataSample::new(covariates, y)?,
        null_cols: spec.null_cols(),
        true_null: spec.true_null(),
    })
}

/// A Monte Carlo experiment: repeatedly generate data from a model, run the
/// selected tests, and tally rejections per significance level.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub n: usize,
    pub replications: usize,
    /// Bootstrap settings shared by every replication; the `statistic` field
    /// is ignored in favor of `tests`.
    pub bootstrap: BootstrapConfig,
    pub alphas: Vec<f64>,
    pub tests: Vec<StatisticKind>,
}

impl ExperimentConfig {
    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(QrlofError::InvalidConfig(
                "experiment needs at least one replication".into(),
            ));
        }
        if self.tests.is_empty() {
            return Err(QrlofError::InvalidConfig(
                "experiment needs at least one test".into(),
            ));
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) {
            return Err(QrlofError::InvalidConfig(
                "significance levels must lie strictly between 0 and 1".into(),
            ));
        }
        check_tau(self.model.tau())
    }
}

/// One row of a rejection-proportion table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionRow {
    pub model: String,
    pub test: StatisticKind,
    pub n: usize,
    pub tau: f64,
    pub alpha: f64,
    pub rejections: usize,
    pub replications: usize,
    pub proportion: f64,
    pub seed: u64,
}

/// Rejection proportions per (test, significance level).
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionTable {
    pub rows: Vec<RejectionRow>,
}

impl RejectionTable {
    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }
}

fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| QrlofError::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// p-values for every replication of an experiment; inner vectors align with
/// `config.tests`. Replication `k` derives its seed from
/// `(config.bootstrap.seed, k)`, generates data on stream 0 and spends
/// bootstrap streams `1..=B`, so the run is reproducible for any thread
/// count.
pub fn experiment_pvalues(config: &ExperimentConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let need_weights = config.tests.contains(&StatisticKind::Projection);
    parallel::try_map_indexed(config.replications, |rep| -> Result<Vec<f64>> {
        let rep_seed = derive_seed(config.bootstrap.seed, rep as u64);
        let mut rng = stream_rng(rep_seed, 0);
        let generated = generate_sample(&config.model, config.n, &mut rng)?;
        let alt: Vec<usize> = (0..generated.sample.dim()).collect();
        let prepared = PreparedTest::new(
            &generated.sample,
            &generated.null_cols,
            &alt,
            config.model.tau(),
            need_weights,
            None,
        )?;
        let reports = prepared.run(
            &config.tests,
            config.bootstrap.replications,
            rep_seed,
            config.bootstrap.smoothed_p_value,
        )?;
        Ok(reports.into_iter().map(|r| r.p_value).collect())
    })
}

pub(crate) fn tally_rejections(
    config: &ExperimentConfig,
    pvalues: &[Vec<f64>],
) -> Vec<RejectionRow> {
    let mut rows = Vec::new();
    for (t_idx, &test) in config.tests.iter().enumerate() {
        for &alpha in &config.alphas {
            let rejections = pvalues.iter().filter(|p| p[t_idx] <= alpha).count();
            rows.push(RejectionRow {
                model: config.model.label(),
                test,
                n: config.n,
                tau: config.model.tau(),
                alpha,
                rejections,
                replications: pvalues.len(),
                proportion: rejections as f64 / pvalues.len() as f64,
                seed: config.bootstrap.seed,
            });
        }
    }
    rows
}

/// Runs the experiment and tallies rejection proportions.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RejectionTable> {
    let pvalues = experiment_pvalues(config)?;
    Ok(RejectionTable {
        rows: tally_rejections(config, &pvalues),
    })
}

/// One point of a power-versus-deviation curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerCurvePoint {
    pub model: String,
    pub test: StatisticKind,
    pub n: usize,
    pub tau: f64,
    pub alpha: f64,
    pub c: f64,
    pub rejections: usize,
    pub replications: usize,
    pub proportion: f64,
    pub seed: u64,
}

/// Power of the tests along a grid of deviation sizes `c` for the quadratic
/// drift model. Every grid point reuses the base seed, so the curves share
/// common random numbers.
pub fn power_curve(config: &ExperimentConfig, c_values: &[f64]) -> Result<Vec<PowerCurvePoint>> {
    let ModelSpec::QuadraticDrift { tau, .. } = config.model else {
        return Err(QrlofError::InvalidModel(
            "power curves sweep the deviation size of model 6".into(),
        ));
    };
    if c_values.is_empty() {
        return Err(QrlofError::InvalidConfig(
            "power curve needs at least one c value".into(),
        ));
    }
    let mut points = Vec::new();
    for &c in c_values {
        let mut cfg = config.clone();
        cfg.model = ModelSpec::QuadraticDrift { tau, c };
        let table = run_experiment(&cfg)?;
        points.extend(table.rows.into_iter().map(|row| PowerCurvePoint {
            model: row.model,
            test: row.test,
            n: row.n,
            tau: row.tau,
            alpha: row.alpha,
            c,
            rejections: row.rejections,
            replications: row.replications,
            proportion: row.proportion,
            seed: row.seed,
        }));
    }
    Ok(points)
}

/// Long-format CSV for power curves.
pub fn power_curve_csv(points: &[PowerCurvePoint]) -> Result<String> {
    rows_to_csv(points)
}
