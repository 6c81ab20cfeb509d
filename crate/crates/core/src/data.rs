//! Shared data model and the classical, error-ignorant metrics.
//!
//! Residuals are always `y_hat - y_bar`. The corrected formulas only depend on
//! the squared or absolute residual, so the sign convention is not observable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance under which two label standard deviations count as equal.
pub const HOMOSCEDASTIC_RTOL: f64 = 1e-12;

/// Neumaier (improved Kahan) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Compensated sum of an iterator, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// One regression target: model prediction, label mean and label standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionObservation {
    pub y_hat: f64,
    pub y_bar: f64,
    pub sigma: f64,
}

impl RegressionObservation {
    pub fn new(y_hat: f64, y_bar: f64, sigma: f64) -> Result<Self> {
        let obs = Self {
            y_hat,
            y_bar,
            sigma,
        };
        obs.check()
            .map_err(|reason| Error::InvalidObservation { index: 0, reason })?;
        Ok(obs)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !self.y_hat.is_finite() {
            return Err(format!("y_hat must be finite, got {}", self.y_hat));
        }
        if !self.y_bar.is_finite() {
            return Err(format!("y_bar must be finite, got {}", self.y_bar));
        }
        if !self.sigma.is_finite() || self.sigma < 0.0 {
            return Err(format!("sigma must be finite and >= 0, got {}", self.sigma));
        }
        Ok(())
    }

    /// Mean residual `y_hat - y_bar`.
    #[inline]
    pub fn residual(&self) -> f64 {
        self.y_hat - self.y_bar
    }
}

/// An ordered, non-empty set of regression observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    observations: Vec<RegressionObservation>,
    homoscedastic: bool,
}

impl RegressionDataset {
    pub fn new(observations: Vec<RegressionObservation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (index, obs) in observations.iter().enumerate() {
            obs.check()
                .map_err(|reason| Error::InvalidObservation { index, reason })?;
        }
        let first = observations[0].sigma;
        let homoscedastic = observations.iter().all(|o| {
            (o.sigma - first).abs() <= HOMOSCEDASTIC_RTOL * o.sigma.abs().max(first.abs())
        });
        Ok(Self {
            observations,
            homoscedastic,
        })
    }

    /// Builds a dataset from parallel slices of predictions, label means and label stds.
    pub fn from_columns(y_hat: &[f64], y_bar: &[f64], sigma: &[f64]) -> Result<Self> {
        if y_bar.len() != y_hat.len() {
            return Err(Error::LengthMismatch {
                expected: y_hat.len(),
                actual: y_bar.len(),
            });
        }
        if sigma.len() != y_hat.len() {
            return Err(Error::LengthMismatch {
                expected: y_hat.len(),
                actual: sigma.len(),
            });
        }
        let observations = y_hat
            .iter()
            .zip(y_bar)
            .zip(sigma)
            .map(|((&y_hat, &y_bar), &sigma)| RegressionObservation {
                y_hat,
                y_bar,
                sigma,
            })
            .collect();
        Self::new(observations)
    }

    pub fn observations(&self) -> &[RegressionObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// True when every sigma equals the first one within [`HOMOSCEDASTIC_RTOL`].
    pub fn is_homoscedastic(&self) -> bool {
        self.homoscedastic
    }

    /// The shared sigma of a homoscedastic dataset.
    pub fn common_sigma(&self) -> Option<f64> {
        self.homoscedastic.then(|| self.observations[0].sigma)
    }

    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations
            .iter()
            .map(RegressionObservation::residual)
    }
}

/// One binary classification observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationObservation {
    /// True label, `true` for class 1.
    pub label: bool,
    /// Predicted probability of class 1.
    pub p_hat: f64,
}

impl ClassificationObservation {
    pub fn new(label: bool, p_hat: f64) -> Result<Self> {
        let obs = Self { label, p_hat };
        obs.check()
            .map_err(|reason| Error::InvalidObservation { index: 0, reason })?;
        Ok(obs)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !(0.0..=1.0).contains(&self.p_hat) {
            return Err(format!("p_hat must lie in [0, 1], got {}", self.p_hat));
        }
        Ok(())
    }

    /// Predicted class under threshold `alpha`; `p_hat == alpha` predicts class 1.
    #[inline]
    pub fn predicted(&self, alpha: f64) -> bool {
        heaviside(self.p_hat - alpha)
    }

    #[inline]
    pub fn is_correct(&self, alpha: f64) -> bool {
        self.predicted(alpha) == self.label
    }
}

/// Heaviside step with `H(0) = 1`.
#[inline]
pub fn heaviside(x: f64) -> bool {
    x >= 0.0
}

/// Binary classification data with its decision threshold and label-flip probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationDataset {
    observations: Vec<ClassificationObservation>,
    alpha: f64,
    q: f64,
}

impl ClassificationDataset {
    pub fn new(observations: Vec<ClassificationObservation>, alpha: f64, q: f64) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "threshold alpha must lie in (0, 1), got {alpha}"
            )));
        }
        check_flip_probability(q)?;
        for (index, obs) in observations.iter().enumerate() {
            obs.check()
                .map_err(|reason| Error::InvalidObservation { index, reason })?;
        }
        Ok(Self {
            observations,
            alpha,
            q,
        })
    }

    pub fn from_columns(labels: &[bool], p_hat: &[f64], alpha: f64, q: f64) -> Result<Self> {
        if p_hat.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: labels.len(),
                actual: p_hat.len(),
            });
        }
        let observations = labels
            .iter()
            .zip(p_hat)
            .map(|(&label, &p_hat)| ClassificationObservation { label, p_hat })
            .collect();
        Self::new(observations, alpha, q)
    }

    pub fn observations(&self) -> &[ClassificationObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Label-flip probability.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Same observations under a different flip probability.
    pub fn with_flip_probability(&self, q: f64) -> Result<Self> {
        check_flip_probability(q)?;
        Ok(Self { q, ..self.clone() })
    }
}

/// Accepts `q` in `[0, 0.5]`. Above one half the labels are anti-informative and
/// the caller should invert them instead.
pub fn check_flip_probability(q: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::InvalidParameter(format!(
            "flip probability q must lie in [0, 0.5], got {q}"
        )));
    }
    Ok(())
}

/// Expected value and variance of a metric under a noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub expected: f64,
    pub variance: f64,
    pub std: f64,
}

impl MetricEstimate {
    pub fn new(expected: f64, variance: f64) -> Result<Self> {
        if !expected.is_finite() || !variance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "metric estimate must be finite, got ({expected}, {variance})"
            )));
        }
        if variance < 0.0 {
            return Err(Error::NegativeVariance {
                value: variance,
                scale: 0.0,
            });
        }
        Ok(Self {
            expected,
            variance,
            std: variance.sqrt(),
        })
    }

    /// A noiseless metric: the value itself with zero spread.
    pub fn exact(value: f64) -> Self {
        Self {
            expected: value,
            variance: 0.0,
            std: 0.0,
        }
    }
}

/// Confusion-matrix cell counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }

    pub fn incorrect(&self) -> usize {
        self.fp + self.fn_
    }
}

/// Mean of squared residuals.
pub(crate) fn mean_square<I: IntoIterator<Item = f64>>(residuals: I, m: usize) -> f64 {
    compensated_sum(residuals.into_iter().map(|r| r * r)) / m as f64
}

/// Mean of absolute residuals.
pub(crate) fn mean_abs<I: IntoIterator<Item = f64>>(residuals: I, m: usize) -> f64 {
    compensated_sum(residuals.into_iter().map(f64::abs)) / m as f64
}

/// MSE evaluated at the label means.
pub fn classical_mse(ds: &RegressionDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(mean_square(ds.residuals(), ds.len()))
}

/// MAE evaluated at the label means.
pub fn classical_mae(ds: &RegressionDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(mean_abs(ds.residuals(), ds.len()))
}

pub fn confusion_counts(ds: &ClassificationDataset) -> Result<ConfusionCounts> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let alpha = ds.alpha();
    let mut counts = ConfusionCounts::default();
    for obs in ds.observations() {
        match (obs.label, obs.predicted(alpha)) {
            (true, true) => counts.tp += 1,
            (false, false) => counts.tn += 1,
            (false, true) => counts.fp += 1,
            (true, false) => counts.fn_ += 1,
        }
    }
    Ok(counts)
}

/// Fraction of observations whose thresholded prediction matches the label.
pub fn classical_accuracy(ds: &ClassificationDataset) -> Result<f64> {
    let counts = confusion_counts(ds)?;
    Ok(counts.correct() as f64 / ds.len() as f64)
}
