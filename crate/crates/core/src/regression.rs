//! Expected value and variance of MSE and MAE when every label is Gaussian,
//! `y_i ~ N(y_bar_i, sigma_i^2)`.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::data::{
    classical_mae, classical_mse, compensated_sum, MetricEstimate, RegressionDataset,
};
use crate::error::{Error, Result};
use crate::special::{erf_raw, FoldedNormalParams};

/// Which closed form produced a regression estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    ConstantSigma,
    Heteroscedastic,
}

impl SigmaMode {
    pub fn of(ds: &RegressionDataset) -> Self {
        if ds.is_homoscedastic() {
            SigmaMode::ConstantSigma
        } else {
            SigmaMode::Heteroscedastic
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SigmaMode::ConstantSigma => "constant-sigma",
            SigmaMode::Heteroscedastic => "heteroscedastic",
        }
    }
}

/// Classical metric at the label means next to its noise-corrected moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetricReport {
    pub classical: f64,
    pub corrected: MetricEstimate,
    /// `corrected.expected - classical`
    pub correction: f64,
    pub mode: SigmaMode,
    /// `Var(MAE)` evaluated exactly as printed in the original derivation, when requested.
    pub paper_printed_variance: Option<f64>,
}

/// `E(MSE)` and `Var(MSE)`.
///
/// Homoscedastic datasets go through the non-central chi-square form, everything
/// else through the per-observation sums.
pub fn expected_mse(ds: &RegressionDataset) -> Result<MetricEstimate> {
    if ds.is_homoscedastic() {
        expected_mse_constant_sigma(ds)
    } else {
        expected_mse_general(ds)
    }
}

/// Constant-sigma route: `(M / sigma^2) MSE ~ χ'_M(λ)` with `λ = Σ δ̄_i^2 / sigma^2`, so
/// `E(MSE) = MSE(ȳ) + sigma^2` and `Var(MSE) = 2 sigma^4 / M + 4 sigma^2 Σ δ̄_i^2 / M^2`.
pub fn expected_mse_constant_sigma(ds: &RegressionDataset) -> Result<MetricEstimate> {
    let sigma = ds.common_sigma().ok_or_else(|| {
        Error::InvalidParameter("constant-sigma form needs a homoscedastic dataset".into())
    })?;
    let m = ds.len() as f64;
    let sum_sq = compensated_sum(ds.residuals().map(|r| r * r));
    let sigma2 = sigma * sigma;
    // sigma^2/M * (M + λ) and sigma^4/M^2 * (2M + 4λ), expanded so sigma = 0 needs no division.
    let expected = sum_sq / m + sigma2;
    let variance = 2.0 * sigma2 * sigma2 / m + 4.0 * sigma2 * sum_sq / (m * m);
    MetricEstimate::new(expected, variance)
}

/// Heteroscedastic route: `E(MSE) = (1/M) Σ (δ̄_i^2 + sigma_i^2)` and
/// `Var(MSE) = (2/M^2) Σ sigma_i^4 + (4/M^2) Σ δ̄_i^2 sigma_i^2`.
pub fn expected_mse_general(ds: &RegressionDataset) -> Result<MetricEstimate> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let m = ds.len() as f64;
    let obs = ds.observations();
    let sum_sq = compensated_sum(obs.iter().map(|o| o.residual() * o.residual()));
    let sum_var = compensated_sum(obs.iter().map(|o| o.sigma * o.sigma));
    let sum_var2 = compensated_sum(obs.iter().map(|o| {
        let s2 = o.sigma * o.sigma;
        s2 * s2
    }));
    let sum_cross = compensated_sum(
        obs.iter()
            .map(|o| o.residual() * o.residual() * o.sigma * o.sigma),
    );
    let expected = sum_sq / m + sum_var / m;
    let variance = 2.0 * sum_var2 / m / m + 4.0 * sum_cross / (m * m);
    MetricEstimate::new(expected, variance)
}

/// Per-observation `E|δ_i|` and `Var|δ_i|`; a zero sigma contributes `|δ̄_i|` exactly.
fn abs_residual_moments(residual: f64, sigma: f64) -> Result<(f64, f64)> {
    if sigma == 0.0 {
        return Ok((residual.abs(), 0.0));
    }
    let folded = FoldedNormalParams::new(residual, sigma)?;
    Ok((folded.mean(), folded.variance()?))
}

/// `E(MAE) = (1/M) Σ E|δ_i|` with `|δ_i|` folded normal, and `Var(MAE) = (1/M^2) Σ Var|δ_i|`.
pub fn expected_mae(ds: &RegressionDataset) -> Result<MetricEstimate> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let m = ds.len() as f64;
    let moments = ds
        .observations()
        .iter()
        .map(|o| abs_residual_moments(o.residual(), o.sigma))
        .collect::<Result<Vec<_>>>()?;
    let expected = compensated_sum(moments.iter().map(|&(mean, _)| mean)) / m;
    let variance = compensated_sum(moments.iter().map(|&(_, var)| var)) / (m * m);
    MetricEstimate::new(expected, variance)
}

/// The MAE correction term `Δ(MAE) = E(MAE) - MAE(ȳ)`, summed from per-observation
/// excesses so it stays accurate when it is tiny next to the MAE itself.
pub fn mae_correction(ds: &RegressionDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let excess = ds
        .observations()
        .iter()
        .map(|o| {
            if o.sigma == 0.0 {
                Ok(0.0)
            } else {
                FoldedNormalParams::new(o.residual(), o.sigma).map(|p| p.excess_mean())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(excess) / ds.len() as f64)
}

/// `Var(MAE)` exactly as printed in the source derivation:
/// `(1/M^2) Σ { δ̄^2 + sigma^2 - δ̄ sqrt(2/pi) exp(-δ̄^2/(2 sigma^2)) - δ̄ erf(δ̄/(sqrt(2) sigma)) }`.
///
/// The mean term is not squared there, so this disagrees with the folded-normal
/// variance and with simulation. Kept only to document the discrepancy.
pub fn paper_compat_variance_mae(ds: &RegressionDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let m = ds.len() as f64;
    let terms = ds
        .observations()
        .iter()
        .enumerate()
        .map(|(index, o)| {
            if o.sigma <= 0.0 {
                return Err(Error::InvalidObservation {
                    index,
                    reason: "printed Var(MAE) form divides by sigma; sigma must be > 0".into(),
                });
            }
            let d = o.residual();
            let s = o.sigma;
            Ok(d * d + s * s
                - d * (2.0 / PI).sqrt() * (-d * d / (2.0 * s * s)).exp()
                - d * erf_raw(d / (SQRT_2 * s)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(compensated_sum(terms) / (m * m))
}

pub fn mse_report(ds: &RegressionDataset) -> Result<RegressionMetricReport> {
    let classical = classical_mse(ds)?;
    let corrected = expected_mse(ds)?;
    Ok(RegressionMetricReport {
        classical,
        corrected,
        correction: corrected.expected - classical,
        mode: SigmaMode::of(ds),
        paper_printed_variance: None,
    })
}

pub fn mae_report(ds: &RegressionDataset) -> Result<RegressionMetricReport> {
    let classical = classical_mae(ds)?;
    let corrected = expected_mae(ds)?;
    Ok(RegressionMetricReport {
        classical,
        corrected,
        correction: corrected.expected - classical,
        mode: SigmaMode::of(ds),
        paper_printed_variance: None,
    })
}

/// [`mae_report`] plus the printed-form variance alongside the default one.
pub fn mae_report_paper_compat(ds: &RegressionDataset) -> Result<RegressionMetricReport> {
    let mut report = mae_report(ds)?;
    report.paper_printed_variance = Some(paper_compat_variance_mae(ds)?);
    Ok(report)
}
