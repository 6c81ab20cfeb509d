//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage or input validation errors, 1 on
//! internal errors. Reports go to `out`, diagnostics to `err`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{CommandFactory, Parser, ValueEnum};

use crate::classification::{accuracy_decomposition_with, VarianceConvention};
use crate::data::{ClassificationDataset, RegressionDataset};
use crate::error::Error;
use crate::io::{
    load_classification_csv, load_regression_csv, InputDigest, LoadError, ModeFlags, OracleSection,
    RegressionSchema, ReportDocument,
};
use crate::oracle::{
    mc_accuracy, mc_regression_metric, quad_check, OracleConfig, RegressionMetric,
};
use crate::regression::{mae_report, mae_report_paper_compat, mse_report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Mse,
    Mae,
    Accuracy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemaArg {
    Summary,
    Replicates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Text,
}

/// Noise-aware MSE, MAE and accuracy for measured labels.
///
/// Sigma values are standard deviations, never variances.
#[derive(Debug, Parser)]
#[command(name = "errmetrics", version)]
pub struct Args {
    #[arg(long, value_enum)]
    pub metric: MetricArg,

    /// Input CSV: id,y_hat,y_bar,sigma (summary), id,replicate (replicates) or id,y,p_hat (accuracy).
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, value_enum)]
    pub schema: Option<SchemaArg>,

    /// Predictions CSV (id,y_hat) for the replicates schema.
    #[arg(long)]
    pub predictions: Option<PathBuf>,

    /// Label flip probability q in [0, 0.5]; required for accuracy.
    #[arg(long = "flip-prob", allow_negative_numbers = true)]
    pub flip_prob: Option<f64>,

    /// Decision threshold alpha in (0, 1) [default: 0.5].
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,

    /// Sigma for observations with a single replicate.
    #[arg(long = "fallback-sigma", allow_negative_numbers = true)]
    pub fallback_sigma: Option<f64>,

    /// Run the Monte Carlo oracle with N draws.
    #[arg(long = "mc-check", value_name = "N")]
    pub mc_check: Option<u64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Integrate every observation numerically and report the largest deviation.
    #[arg(long = "quad-check")]
    pub quad_check: bool,

    /// Also report the alternative variance form where one exists.
    #[arg(long = "paper-compat")]
    pub paper_compat: bool,

    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) | CliError::Input(_) => 2,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::EmptyDataset
            | Error::InvalidObservation { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidConfig(_)
            | Error::LengthMismatch { .. } => CliError::Input(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

fn check_flags(args: &Args) -> Result<(), CliError> {
    let usage = |m: &str| Err(CliError::Usage(m.to_string()));
    match args.metric {
        MetricArg::Accuracy => {
            if args.flip_prob.is_none() {
                return usage("--metric accuracy requires --flip-prob");
            }
            if args.schema.is_some() || args.predictions.is_some() || args.fallback_sigma.is_some()
            {
                return usage(
                    "--schema, --predictions and --fallback-sigma apply to regression metrics only",
                );
            }
            if args.quad_check {
                return usage("--quad-check applies to regression metrics only");
            }
        }
        MetricArg::Mse | MetricArg::Mae => {
            if args.flip_prob.is_some() || args.threshold.is_some() {
                return usage("--flip-prob and --threshold apply to --metric accuracy only");
            }
            let replicates = args.schema == Some(SchemaArg::Replicates);
            if replicates && args.predictions.is_none() {
                return usage("--schema replicates requires --predictions");
            }
            if !replicates && args.predictions.is_some() {
                return usage("--predictions requires --schema replicates");
            }
            if !replicates && args.fallback_sigma.is_some() {
                return usage("--fallback-sigma requires --schema replicates");
            }
            if let Some(s) = args.fallback_sigma {
                if !(s.is_finite() && s >= 0.0) {
                    return usage("--fallback-sigma must be finite and >= 0");
                }
            }
        }
    }
    Ok(())
}

fn oracle_config(args: &Args) -> Result<OracleConfig, CliError> {
    let n = args.mc_check.unwrap_or(OracleConfig::default().n_samples);
    OracleConfig::new(n, args.seed).map_err(|e| CliError::Usage(e.to_string()))
}

fn regression_document(args: &Args, ds: &RegressionDataset) -> Result<ReportDocument, CliError> {
    let (metric, report) = match args.metric {
        MetricArg::Mse => (RegressionMetric::Mse, mse_report(ds)?),
        MetricArg::Mae if args.paper_compat => {
            (RegressionMetric::Mae, mae_report_paper_compat(ds)?)
        }
        _ => (RegressionMetric::Mae, mae_report(ds)?),
    };
    let mut oracle = None;
    if args.mc_check.is_some() || args.quad_check {
        let cfg = oracle_config(args)?;
        oracle = Some(OracleSection {
            seed: args.mc_check.map(|_| args.seed),
            monte_carlo: match args.mc_check {
                Some(_) => Some(mc_regression_metric(ds, metric, &cfg)?),
                None => None,
            },
            quadrature: match args.quad_check {
                true => Some(quad_check(ds, metric, &cfg)?),
                false => None,
            },
        });
    }
    Ok(ReportDocument {
        metric: match metric {
            RegressionMetric::Mse => "mse",
            RegressionMetric::Mae => "mae",
        }
        .to_string(),
        classical: report.classical,
        expected: report.corrected.expected,
        variance: report.corrected.variance,
        std: report.corrected.std,
        correction: report.correction,
        mode: ModeFlags {
            sigma_mode: Some(report.mode),
            homoscedastic: Some(ds.is_homoscedastic()),
            paper_compat: args.paper_compat,
            variance_convention: None,
            paper_printed_variance: report.paper_printed_variance,
        },
        oracle,
        input_digest: InputDigest::regression(ds),
    })
}

fn accuracy_document(args: &Args, ds: &ClassificationDataset) -> Result<ReportDocument, CliError> {
    let report = accuracy_decomposition_with(ds, VarianceConvention::OracleConsistent)?;
    let paper_printed_variance = args
        .paper_compat
        .then(|| VarianceConvention::PaperPrinted.variance(ds.q(), ds.len()));
    let oracle = match args.mc_check {
        Some(_) => {
            let cfg = oracle_config(args)?;
            Some(OracleSection {
                seed: Some(args.seed),
                monte_carlo: Some(mc_accuracy(ds, &cfg)?),
                quadrature: None,
            })
        }
        None => None,
    };
    Ok(ReportDocument {
        metric: "accuracy".to_string(),
        classical: report.classical_accuracy,
        expected: report.corrected.expected,
        variance: report.corrected.variance,
        std: report.corrected.std,
        correction: report.corrected.expected - report.classical_accuracy,
        mode: ModeFlags {
            sigma_mode: None,
            homoscedastic: None,
            paper_compat: args.paper_compat,
            variance_convention: Some(report.variance_convention),
            paper_printed_variance,
        },
        oracle,
        input_digest: InputDigest::classification(ds, report.confusion),
    })
}

/// Builds the report for already-parsed arguments.
pub fn execute(args: &Args) -> Result<ReportDocument, CliError> {
    check_flags(args)?;
    match args.metric {
        MetricArg::Accuracy => {
            let q = args.flip_prob.expect("checked");
            let alpha = args.threshold.unwrap_or(0.5);
            let ds = load_classification_csv(&args.input, alpha, q)?;
            accuracy_document(args, &ds)
        }
        MetricArg::Mse | MetricArg::Mae => {
            let schema = match args.schema.unwrap_or(SchemaArg::Summary) {
                SchemaArg::Summary => RegressionSchema::Summary,
                SchemaArg::Replicates => RegressionSchema::Replicates,
            };
            let ds = load_regression_csv(
                &args.input,
                schema,
                args.predictions.as_deref(),
                args.fallback_sigma,
            )?;
            regression_document(args, &ds)
        }
    }
}

fn render(args: &Args, doc: &ReportDocument) -> Result<String, CliError> {
    match args.format {
        FormatArg::Json => doc
            .to_json()
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| CliError::Internal(format!("cannot serialize report: {e}"))),
        FormatArg::Text => Ok(doc.to_text()),
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(args) => args,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    let result = execute(&args).and_then(|doc| render(&args, &doc));
    match result {
        Ok(text) => match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: cannot write report: {e}");
                1
            }
        },
        Err(e) => {
            let code = e.exit_code();
            match &e {
                CliError::Usage(m) => {
                    let usage = Args::command().render_usage();
                    let _ = writeln!(err, "error: {m}\n\n{usage}");
                }
                CliError::Input(m) => {
                    let _ = writeln!(err, "error: {m}");
                }
                CliError::Internal(m) => {
                    let _ = writeln!(err, "internal error: {m}");
                }
            }
            code
        }
    }
}
