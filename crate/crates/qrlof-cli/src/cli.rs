//! Argument parsing and dispatch.

use clap::{Args, Parser, Subcommand, ValueEnum};
use qrlof::bootstrap::{BootstrapConfig, StatisticKind};
use qrlof::dataset::{csv_headers, load_csv, DatasetFile};
use qrlof::problem::{run_problem, ProblemSpec};
use qrlof::projection::{lof_statistic, mc_statistic, weight_matrix};
use qrlof::qreg::fit_linear_quantile;
use qrlof::report;
use qrlof::sim::{
    generate_sample, power_curve, power_curve_csv, run_experiment, DeviationKind, ErrorLaw,
    ExperimentConfig, ModelSpec,
};
use qrlof::DataSample;
use serde::Serialize;
use std::error::Error;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "qrlof",
    about = "Lack-of-fit tests for linear quantile regression",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one bootstrap-calibrated test on a CSV dataset.
    Test(TestArgs),
    /// Run a Monte Carlo experiment and report rejection proportions.
    Simulate(SimulateArgs),
    /// Cross-check the closed-form statistic against sphere sampling.
    Oracle(OracleArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum StatisticArg {
    Projection,
    Hz,
}

impl From<StatisticArg> for StatisticKind {
    fn from(value: StatisticArg) -> Self {
        match value {
            StatisticArg::Projection => StatisticKind::Projection,
            StatisticArg::Hz => StatisticKind::Hz,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Response column name; defaults to the first column.
    #[arg(long)]
    pub response: Option<String>,
    /// Comma-separated covariate column names, in order; defaults to every
    /// non-response column in file order.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    /// Field delimiter.
    #[arg(long, default_value = ",")]
    pub delimiter: char,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Quantile level of the fitted model.
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Number of bootstrap replications B.
    #[arg(long, default_value_t = 500)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = StatisticArg::Projection)]
    pub statistic: StatisticArg,
    /// 1-based covariate indices of the null model ("all" for every column).
    #[arg(long, default_value = "all")]
    pub null_cols: String,
    /// 1-based covariate indices of the alternative ("all" for every column).
    #[arg(long, default_value = "all")]
    pub alt_cols: String,
    /// Smooth the p-value as (count + 1) / (B + 1).
    #[arg(long)]
    pub smooth: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub out: OutputFormat,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Benchmark model id (1-8).
    #[arg(long)]
    pub model: u8,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Error law for models 1-5 and 7 (normal, lognormal, exponential,
    /// chisq<df>, uniform, mixture).
    #[arg(long)]
    pub error: Option<String>,
    /// Deviation shape for model 7.
    #[arg(long, value_enum)]
    pub deviation: Option<DeviationArg>,
    /// Deviation size c for model 6.
    #[arg(long)]
    pub c: Option<f64>,
    /// Extra noise covariates t for model 8.
    #[arg(long)]
    pub extra_dims: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Monte Carlo replications (desk scale).
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Bootstrap replications B per replication.
    #[arg(long, default_value_t = 200)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated significance levels.
    #[arg(long, value_delimiter = ',', default_values_t = [0.10, 0.05, 0.01])]
    pub alphas: Vec<f64>,
    /// Comma-separated tests to run (projection, hz).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [StatisticArg::Projection])]
    pub tests: Vec<StatisticArg>,
    /// Full study scale: 1000 replications with B = 500.
    #[arg(long)]
    pub full: bool,
    /// Sweep the model-6 deviation size over these values and emit a
    /// long-format power-curve table.
    #[arg(long, value_delimiter = ',')]
    pub curve_c: Vec<f64>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub out: OutputFormat,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum DeviationArg {
    Quadratic,
    Sine,
    Exponential,
    Logarithm,
}

impl From<DeviationArg> for DeviationKind {
    fn from(value: DeviationArg) -> Self {
        match value {
            DeviationArg::Quadratic => DeviationKind::Quadratic,
            DeviationArg::Sine => DeviationKind::Sine,
            DeviationArg::Exponential => DeviationKind::Exponential,
            DeviationArg::Logarithm => DeviationKind::Logarithm,
        }
    }
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// CSV dataset to check; when absent, data are generated from --model.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
    #[arg(long, default_value = ",")]
    pub delimiter: char,
    /// Generator model id when no dataset is given.
    #[arg(long, default_value_t = 1)]
    pub model: u8,
    #[arg(long, default_value_t = 25)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    /// Number of sphere directions for the Monte Carlo integral.
    #[arg(long, default_value_t = 200_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Serialize)]
struct OracleReport {
    lof_statistic: f64,
    mc_statistic: f64,
    ratio: f64,
    draws: usize,
    n: usize,
    d: usize,
    tau: f64,
    seed: u64,
}

pub fn parse() -> Command {
    Cli::parse().command
}

type CliResult<T> = Result<T, Box<dyn Error>>;

pub fn run(command: Command) -> CliResult<String> {
    match command {
        Command::Test(args) => run_test_command(args),
        Command::Simulate(args) => run_simulate_command(args),
        Command::Oracle(args) => run_oracle_command(args),
    }
}

fn load_dataset(args: &DataArgs) -> CliResult<DataSample> {
    let file = resolve_dataset(args)?;
    Ok(load_csv(&file)?)
}

fn resolve_dataset(args: &DataArgs) -> CliResult<DatasetFile> {
    let delimiter = u8::try_from(args.delimiter).map_err(|_| "delimiter must be ASCII")?;
    let headers = csv_headers(&args.data, delimiter)?;
    if headers.is_empty() {
        return Err("dataset has no header row".into());
    }
    let response = args.response.clone().unwrap_or_else(|| headers[0].clone());
    let covariates = if args.covariates.is_empty() {
        headers.iter().filter(|h| **h != response).cloned().collect()
    } else {
        args.covariates.clone()
    };
    Ok(DatasetFile {
        path: args.data.clone(),
        response,
        covariates,
        delimiter,
    })
}

/// Parses "all" or a comma-separated list of 1-based covariate indices.
fn parse_cols(spec: &str, d: usize) -> CliResult<Vec<usize>> {
    let trimmed = spec.trim();
    if trimmed.eq_ignore_ascii_case("all") {
        return Ok((0..d).collect());
    }
    let mut cols = Vec::new();
    for token in trimmed.split(',') {
        let idx: usize = token
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse column index '{token}'"))?;
        if idx == 0 || idx > d {
            return Err(format!("column index {idx} out of range 1..={d}").into());
        }
        cols.push(idx - 1);
    }
    Ok(cols)
}

fn run_test_command(args: TestArgs) -> CliResult<String> {
    let sample = load_dataset(&args.data)?;
    let problem = ProblemSpec {
        null_cols: parse_cols(&args.null_cols, sample.dim())?,
        alt_cols: parse_cols(&args.alt_cols, sample.dim())?,
        tau: args.tau,
        bootstrap: BootstrapConfig {
            replications: args.bootstrap,
            seed: args.seed,
            statistic: args.statistic.into(),
            smoothed_p_value: args.smooth,
        },
    };
    let report = run_problem(&sample, &problem)?;
    Ok(match args.out {
        OutputFormat::Json => format!("{}\n", report::to_json(&report)?),
        OutputFormat::Csv => report::test_report_csv(&report),
    })
}

fn parse_error_law(token: &str) -> CliResult<ErrorLaw> {
    let lower = token.to_ascii_lowercase();
    Ok(match lower.as_str() {
        "normal" => ErrorLaw::Normal,
        "lognormal" => ErrorLaw::LogNormal,
        "exponential" => ErrorLaw::Exponential,
        "uniform" => ErrorLaw::Uniform,
        "mixture" => ErrorLaw::Mixture,
        other => {
            if let Some(df) = other.strip_prefix("chisq") {
                ErrorLaw::ChiSquared {
                    df: df.parse().map_err(|_| format!("bad chisq df in '{token}'"))?,
                }
            } else {
                return Err(format!("unknown error law '{token}'").into());
            }
        }
    })
}

fn build_model(args: &SimulateArgs) -> CliResult<ModelSpec> {
    let tau = args.tau;
    let reject = |flag: &str, model: u8| -> CliResult<()> {
        Err(format!("--{flag} does not apply to model {model}").into())
    };
    if args.c.is_some() && args.model != 6 {
        reject("c", args.model)?;
    }
    if args.extra_dims.is_some() && args.model != 8 {
        reject("extra-dims", args.model)?;
    }
    if args.deviation.is_some() && args.model != 7 {
        reject("deviation", args.model)?;
    }
    if args.error.is_some() && (args.model == 6 || args.model == 8) {
        reject("error", args.model)?;
    }
    let error = match &args.error {
        Some(token) => parse_error_law(token)?,
        None => ErrorLaw::Normal,
    };
    Ok(match args.model {
        1 => ModelSpec::Linear2 { tau, error },
        2 => ModelSpec::Linear5 { tau, error },
        3 => ModelSpec::Hetero2 { tau, error },
        4 => ModelSpec::Hetero1 { tau, error },
        5 => ModelSpec::NoEffect { tau, error },
        6 => ModelSpec::QuadraticDrift {
            tau,
            c: args.c.unwrap_or(1.0),
        },
        7 => ModelSpec::SmoothDeviation {
            tau,
            deviation: args.deviation.unwrap_or(DeviationArg::Quadratic).into(),
            error: match &args.error {
                Some(token) => parse_error_law(token)?,
                None => ErrorLaw::LogNormal,
            },
        },
        8 => ModelSpec::HighDimQuadratic {
            tau,
            extra_dims: args.extra_dims.unwrap_or(0),
        },
        other => return Err(format!("unknown model id {other} (expected 1-8)").into()),
    })
}

fn run_simulate_command(args: SimulateArgs) -> CliResult<String> {
    let model = build_model(&args)?;
    let (reps, bootstrap) = if args.full {
        (1000, 500)
    } else {
        (args.reps, args.bootstrap)
    };
    let config = ExperimentConfig {
        model,
        n: args.n,
        replications: reps,
        bootstrap: BootstrapConfig::new(bootstrap, args.seed, StatisticKind::Projection),
        alphas: args.alphas.clone(),
        tests: args.tests.iter().map(|&t| t.into()).collect(),
    };
    if !args.curve_c.is_empty() {
        let points = power_curve(&config, &args.curve_c)?;
        return Ok(match args.out {
            OutputFormat::Csv => power_curve_csv(&points)?,
            OutputFormat::Json => format!("{}\n", report::to_json(&points)?),
        });
    }
    let table = run_experiment(&config)?;
    Ok(match args.out {
        OutputFormat::Csv => table.to_csv()?,
        OutputFormat::Json => format!("{}\n", report::to_json(&table.rows)?),
    })
}

fn run_oracle_command(args: OracleArgs) -> CliResult<String> {
    let sample = match &args.data {
        Some(path) => {
            let data_args = DataArgs {
                data: path.clone(),
                response: args.response.clone(),
                covariates: args.covariates.clone(),
                delimiter: args.delimiter,
            };
            load_dataset(&data_args)?
        }
        None => {
            let sim_args = SimulateArgs {
                model: args.model,
                tau: args.tau,
                error: None,
                deviation: None,
                c: None,
                extra_dims: None,
                n: args.n,
                reps: 1,
                bootstrap: 1,
                seed: args.seed,
                alphas: vec![0.05],
                tests: vec![StatisticArg::Projection],
                full: false,
                curve_c: vec![],
                out: OutputFormat::Json,
            };
            let model = build_model(&sim_args)?;
            let mut rng = {
                use rand_chacha::rand_core::SeedableRng;
                rand_chacha::ChaCha8Rng::seed_from_u64(args.seed)
            };
            generate_sample(&model, args.n, &mut rng)?.sample
        }
    };
    let fit = fit_linear_quantile(&sample, args.tau, true)?;
    let weights = weight_matrix(sample.covariates())?;
    let exact = lof_statistic(&fit, &weights)?.value;
    let mc = mc_statistic(&fit, sample.covariates(), args.draws, args.seed)?;
    let report = OracleReport {
        lof_statistic: exact,
        mc_statistic: mc,
        ratio: mc / exact,
        draws: args.draws,
        n: sample.n(),
        d: sample.dim(),
        tau: args.tau,
        seed: args.seed,
    };
    Ok(format!("{}\n", report::to_json(&report)?))
}
