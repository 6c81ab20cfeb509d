//! Expected value and variance of MSE, MAE and binary accuracy when the target
//! labels carry measurement errors.
//!
//! Regression labels are modelled as `y_i ~ N(ȳ_i, σ_i²)`; binary labels are
//! flipped independently with probability `q`. Every closed form is paired with
//! an independent oracle (Monte Carlo or quadrature) in [`oracle`].

pub mod classification;
pub mod cli;
pub mod data;
pub mod error;
pub mod io;
pub mod oracle;
pub mod regression;
pub mod special;

pub use classification::{
    accuracy_decomposition, accuracy_with_flipped_labels, expected_accuracy,
    expected_accuracy_with, ClassificationMetricReport, FlipModel, VarianceConvention,
};
pub use data::{
    classical_accuracy, classical_mae, classical_mse, confusion_counts, ClassificationDataset,
    ClassificationObservation, ConfusionCounts, MetricEstimate, RegressionDataset,
    RegressionObservation,
};
pub use error::{Error, Result};
pub use oracle::{OracleConfig, OracleReport};
pub use regression::{
    expected_mae, expected_mse, mae_report, mse_report, paper_compat_variance_mae,
    RegressionMetricReport, SigmaMode,
};
