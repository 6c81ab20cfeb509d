//! Accuracy under independent label flips.
//!
//! Each observed label is kept with probability `p = 1 - q` and replaced by its
//! complement with probability `q`, independently across observations.

use serde::{Deserialize, Serialize};

use crate::data::{
    check_flip_probability, classical_accuracy, confusion_counts, ClassificationDataset,
    ConfusionCounts, MetricEstimate,
};
use crate::error::{Error, Result};

/// Largest disagreement tolerated between the two routes to `E(_r a)`.
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipModel {
    q: f64,
}

impl FlipModel {
    pub fn new(q: f64) -> Result<Self> {
        check_flip_probability(q)?;
        Ok(Self { q })
    }

    /// Probability that a label is wrong.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Probability that a label is kept.
    pub fn p(&self) -> f64 {
        1.0 - self.q
    }

    /// Mean of the perturbed label `_r y = y b + (1 - b)(1 - y)`.
    pub fn perturbed_label_mean(&self, label: bool) -> f64 {
        if label {
            self.p()
        } else {
            self.q
        }
    }

    /// Variance of the perturbed label, `pq` for either label value.
    pub fn perturbed_label_variance(&self) -> f64 {
        self.p() * self.q
    }
}

/// How `Var(_r a)` is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceConvention {
    /// `pq / M`: the accuracy averages `M` independent per-observation indicators.
    #[default]
    OracleConsistent,
    /// `pq`, the single-label variance, as printed in the source table.
    PaperPrinted,
}

impl VarianceConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            VarianceConvention::OracleConsistent => "oracle-consistent",
            VarianceConvention::PaperPrinted => "paper-printed",
        }
    }

    pub fn variance(&self, q: f64, m: usize) -> f64 {
        let pq = (1.0 - q) * q;
        match self {
            VarianceConvention::OracleConsistent => pq / m as f64,
            VarianceConvention::PaperPrinted => pq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetricReport {
    pub classical_accuracy: f64,
    pub corrected: MetricEstimate,
    pub confusion: ConfusionCounts,
    /// `E(_r a)` through `(1-q)(TP+TN)/M + q(FP+FN)/M`.
    pub decomposed_expected: f64,
    pub variance_convention: VarianceConvention,
}

/// `E(_r a) = a + q(1 - 2a)` with the default variance `q(1-q)/M`.
pub fn expected_accuracy(ds: &ClassificationDataset) -> Result<MetricEstimate> {
    expected_accuracy_with(ds, VarianceConvention::OracleConsistent)
}

pub fn expected_accuracy_with(
    ds: &ClassificationDataset,
    convention: VarianceConvention,
) -> Result<MetricEstimate> {
    let a = classical_accuracy(ds)?;
    let q = ds.q();
    check_flip_probability(q)?;
    MetricEstimate::new(a + q * (1.0 - 2.0 * a), convention.variance(q, ds.len()))
}

/// `E(_r a)` from the confusion matrix: kept diagonal cells plus flipped
/// off-diagonal cells.
pub fn decomposed_expected_accuracy(counts: &ConfusionCounts, q: f64) -> f64 {
    let m = counts.total() as f64;
    (1.0 - q) * (counts.correct() as f64 / m) + q * (counts.incorrect() as f64 / m)
}

/// Both routes to `E(_r a)` with the confusion counts; fails if they disagree.
pub fn accuracy_decomposition(ds: &ClassificationDataset) -> Result<ClassificationMetricReport> {
    accuracy_decomposition_with(ds, VarianceConvention::OracleConsistent)
}

pub fn accuracy_decomposition_with(
    ds: &ClassificationDataset,
    convention: VarianceConvention,
) -> Result<ClassificationMetricReport> {
    let confusion = confusion_counts(ds)?;
    let corrected = expected_accuracy_with(ds, convention)?;
    let decomposed = decomposed_expected_accuracy(&confusion, ds.q());
    if (decomposed - corrected.expected).abs() > DECOMPOSITION_TOLERANCE {
        return Err(Error::Inconsistent(format!(
            "confusion-matrix route gives {decomposed}, affine route gives {}",
            corrected.expected
        )));
    }
    Ok(ClassificationMetricReport {
        classical_accuracy: confusion.correct() as f64 / ds.len() as f64,
        corrected,
        confusion,
        decomposed_expected: decomposed,
        variance_convention: convention,
    })
}

/// Realized accuracy when label `i` is kept where `keep[i]` is true and inverted
/// otherwise (`keep[i]` is the Bernoulli draw `b_i`).
pub fn accuracy_with_flipped_labels(ds: &ClassificationDataset, keep: &[bool]) -> Result<f64> {
    if keep.len() != ds.len() {
        return Err(Error::LengthMismatch {
            expected: ds.len(),
            actual: keep.len(),
        });
    }
    Ok(correct_after_flips(ds, keep) as f64 / ds.len() as f64)
}

#[inline]
pub(crate) fn correct_after_flips(ds: &ClassificationDataset, keep: &[bool]) -> usize {
    let alpha = ds.alpha();
    ds.observations()
        .iter()
        .zip(keep)
        .filter(|(obs, &b)| {
            let label = if b { obs.label } else { !obs.label };
            obs.predicted(alpha) == label
        })
        .count()
}
