//! Independent ground truth for the closed forms: Monte Carlo simulation of the
//! noise models and adaptive quadrature of the expectation integrals.
//!
//! # Sampling streams
//!
//! Draws are cut into blocks of [`BLOCK_DRAWS`] consecutive draws. Block `k` owns
//! a xoshiro256++ stream obtained by seeding from the 64-bit seed (SplitMix64
//! expansion) and applying `k` jumps of 2^128 steps, so blocks never overlap.
//! Inside a block, draws are consumed in order and each draw visits the
//! observations in index order. Standard normals come from the ziggurat sampler
//! of `rand_distr::StandardNormal`, label flips from `rand::distr::Bernoulli`.
//! Blocks may run on any number of threads; their partial moments are merged in
//! block order, so results depend only on `(seed, n_samples, dataset)`.

use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classification::{accuracy_with_flipped_labels, expected_accuracy};
use crate::data::{
    mean_abs, mean_square, ClassificationDataset, RegressionDataset, RegressionObservation,
};
use crate::error::{Error, Result};
use crate::regression::{expected_mae, expected_mse};
use crate::special::FoldedNormalParams;

/// Draws per independent random stream.
pub const BLOCK_DRAWS: u64 = 1 << 14;

/// Half-width of the quadrature window, in label standard deviations.
pub const QUAD_HALF_WIDTH: f64 = 12.0;

pub const MIN_SAMPLES: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub n_samples: u64,
    pub seed: u64,
    /// Target absolute error of each quadrature.
    pub quad_tolerance: f64,
    /// Bisection depth limit of the adaptive quadrature.
    pub max_quad_depth: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            seed: 0,
            quad_tolerance: 1e-12,
            max_quad_depth: 60,
        }
    }
}

impl OracleConfig {
    pub fn new(n_samples: u64, seed: u64) -> Result<Self> {
        let cfg = Self {
            n_samples,
            seed,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < MIN_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "n_samples must be >= {MIN_SAMPLES}, got {}",
                self.n_samples
            )));
        }
        if !(self.quad_tolerance > 0.0 && self.quad_tolerance <= 1e-3) {
            return Err(Error::InvalidConfig(format!(
                "quad_tolerance must lie in (0, 1e-3], got {}",
                self.quad_tolerance
            )));
        }
        if self.max_quad_depth == 0 {
            return Err(Error::InvalidConfig("max_quad_depth must be >= 1".into()));
        }
        Ok(())
    }
}

/// Oracle estimate of a second moment next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceCheck {
    pub estimate: f64,
    pub standard_error: f64,
    pub closed_form: f64,
    pub z_score: Option<f64>,
}

/// Oracle estimate of an expected value next to its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub estimate: f64,
    /// Zero for deterministic oracles.
    pub standard_error: f64,
    /// Monte Carlo draws, or quadrature subintervals.
    pub n_effective: u64,
    pub closed_form: f64,
    /// `(estimate - closed_form) / standard_error`, when the standard error is positive.
    pub z_score: Option<f64>,
    pub variance: Option<VarianceCheck>,
}

fn z_score(estimate: f64, closed_form: f64, standard_error: f64) -> Option<f64> {
    (standard_error > 0.0).then(|| (estimate - closed_form) / standard_error)
}

fn within(z: Option<f64>, estimate: f64, closed_form: f64, n_se: f64) -> bool {
    match z {
        Some(z) => z.abs() <= n_se,
        None => (estimate - closed_form).abs() <= 1e-12 * closed_form.abs().max(1.0),
    }
}

impl OracleReport {
    /// Mean agrees with the closed form within `n_se` standard errors (exactly,
    /// up to round-off, when the oracle has no spread).
    pub fn mean_agrees(&self, n_se: f64) -> bool {
        within(self.z_score, self.estimate, self.closed_form, n_se)
    }

    pub fn variance_agrees(&self, n_se: f64) -> bool {
        self.variance
            .is_none_or(|v| within(v.z_score, v.estimate, v.closed_form, n_se))
    }

    pub fn agrees(&self, n_se: f64) -> bool {
        self.mean_agrees(n_se) && self.variance_agrees(n_se)
    }
}

/// Running central moments up to fourth order, mergeable across partitions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let mean = self.mean + delta * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + d2 * delta * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        Moments {
            n: self.n + other.n,
            mean,
            m2,
            m3,
            m4,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m2 / (self.n as f64 - 1.0)
    }

    pub fn standard_error_of_mean(&self) -> f64 {
        (self.sample_variance() / self.n as f64).sqrt()
    }

    /// Large-sample standard error of the sample variance,
    /// `sqrt((mu4 - sigma^4 (n-3)/(n-1)) / n)`.
    pub fn standard_error_of_variance(&self) -> f64 {
        if self.n < 4 {
            return 0.0;
        }
        let n = self.n as f64;
        let mu2 = self.m2 / n;
        let mu4 = self.m4 / n;
        ((mu4 - mu2 * mu2 * (n - 3.0) / (n - 1.0)) / n)
            .max(0.0)
            .sqrt()
    }

    fn report(&self, closed_mean: f64, closed_variance: f64) -> OracleReport {
        let se = self.standard_error_of_mean();
        let var = self.sample_variance();
        let var_se = self.standard_error_of_variance();
        OracleReport {
            estimate: self.mean,
            standard_error: se,
            n_effective: self.n,
            closed_form: closed_mean,
            z_score: z_score(self.mean, closed_mean, se),
            variance: Some(VarianceCheck {
                estimate: var,
                standard_error: var_se,
                closed_form: closed_variance,
                z_score: z_score(var, closed_variance, var_se),
            }),
        }
    }
}

/// Starting states of every block stream, in block order.
fn block_streams(seed: u64, n_samples: u64) -> Vec<(u64, Xoshiro256PlusPlus)> {
    let n_blocks = n_samples.div_ceil(BLOCK_DRAWS);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut streams = Vec::with_capacity(n_blocks as usize);
    for k in 0..n_blocks {
        let draws = BLOCK_DRAWS.min(n_samples - k * BLOCK_DRAWS);
        streams.push((draws, rng.clone()));
        rng.jump();
    }
    streams
}

/// Runs `per_block` on every block in parallel and merges the results in block order.
fn run_blocks<T, F, M>(seed: u64, n_samples: u64, per_block: F, merge: M) -> T
where
    T: Send + Default,
    F: Fn(u64, Xoshiro256PlusPlus) -> T + Sync,
    M: Fn(T, T) -> T,
{
    block_streams(seed, n_samples)
        .into_par_iter()
        .map(|(draws, rng)| per_block(draws, rng))
        .collect::<Vec<T>>()
        .into_iter()
        .fold(T::default(), merge)
}

/// Fills `labels` with one realization `y_i = ȳ_i + sigma_i z_i`.
#[inline]
fn draw_labels(obs: &[RegressionObservation], rng: &mut Xoshiro256PlusPlus, labels: &mut [f64]) {
    for (o, y) in obs.iter().zip(labels.iter_mut()) {
        let z: f64 = StandardNormal.sample(rng);
        *y = o.y_bar + o.sigma * z;
    }
}

/// Calls `visit` with every simulated label vector, in draw order. Uses the same
/// streams as [`mc_regression`].
pub fn for_each_label_draw<F: FnMut(&[f64])>(
    ds: &RegressionDataset,
    cfg: &OracleConfig,
    mut visit: F,
) -> Result<()> {
    cfg.validate()?;
    let obs = ds.observations();
    let mut labels = vec![0.0; obs.len()];
    for (draws, mut rng) in block_streams(cfg.seed, cfg.n_samples) {
        for _ in 0..draws {
            draw_labels(obs, &mut rng, &mut labels);
            visit(&labels);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressionMetric {
    Mse,
    Mae,
}

/// Monte Carlo reports for both regression metrics from one set of draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionOracle {
    pub mse: OracleReport,
    pub mae: OracleReport,
}

impl RegressionOracle {
    pub fn metric(&self, metric: RegressionMetric) -> &OracleReport {
        match metric {
            RegressionMetric::Mse => &self.mse,
            RegressionMetric::Mae => &self.mae,
        }
    }
}

/// Simulates the label noise and evaluates MSE and MAE on every realization.
pub fn mc_regression(ds: &RegressionDataset, cfg: &OracleConfig) -> Result<RegressionOracle> {
    cfg.validate()?;
    let obs = ds.observations();
    let m = obs.len();
    let (mse, mae) = run_blocks(
        cfg.seed,
        cfg.n_samples,
        |draws, mut rng| {
            let mut labels = vec![0.0; m];
            let mut residuals = vec![0.0; m];
            let mut mse = Moments::default();
            let mut mae = Moments::default();
            for _ in 0..draws {
                draw_labels(obs, &mut rng, &mut labels);
                for ((r, o), y) in residuals.iter_mut().zip(obs).zip(&labels) {
                    *r = o.y_hat - y;
                }
                mse.push(mean_square(residuals.iter().copied(), m));
                mae.push(mean_abs(residuals.iter().copied(), m));
            }
            (mse, mae)
        },
        |(a_mse, a_mae), (b_mse, b_mae)| (a_mse.merge(&b_mse), a_mae.merge(&b_mae)),
    );
    let closed_mse = expected_mse(ds)?;
    let closed_mae = expected_mae(ds)?;
    Ok(RegressionOracle {
        mse: mse.report(closed_mse.expected, closed_mse.variance),
        mae: mae.report(closed_mae.expected, closed_mae.variance),
    })
}

pub fn mc_regression_metric(
    ds: &RegressionDataset,
    metric: RegressionMetric,
    cfg: &OracleConfig,
) -> Result<OracleReport> {
    mc_regression(ds, cfg).map(|r| *r.metric(metric))
}

/// Simulates independent label flips and evaluates the realized accuracy.
pub fn mc_accuracy(ds: &ClassificationDataset, cfg: &OracleConfig) -> Result<OracleReport> {
    cfg.validate()?;
    let keep_dist = Bernoulli::new(1.0 - ds.q())
        .map_err(|e| Error::InvalidParameter(format!("flip probability: {e}")))?;
    let m = ds.len();
    let moments = run_blocks(
        cfg.seed,
        cfg.n_samples,
        |draws, mut rng| {
            let mut keep = vec![true; m];
            let mut acc = Moments::default();
            for _ in 0..draws {
                for b in keep.iter_mut() {
                    *b = keep_dist.sample(&mut rng);
                }
                let realized = accuracy_with_flipped_labels(ds, &keep)
                    .expect("flip vector has the dataset length");
                acc.push(realized);
            }
            acc
        },
        |a, b| a.merge(&b),
    );
    let closed = expected_accuracy(ds)?;
    Ok(moments.report(closed.expected, closed.variance))
}

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error_bound: f64,
    /// Accepted subintervals.
    pub intervals: u64,
}

// 15-point Kronrod abscissae on [0, 1] (the last is the centre) and weights;
// Gauss 7-point weights for the odd-indexed abscissae and the centre.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss-Kronrod 7/15 panel: (Kronrod value, error estimate, ∫|f|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_centre = f(centre);
    let mut res_g = f_centre * WG[3];
    let mut res_k = f_centre * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(centre - x);
        let f2 = f(centre + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (f_centre - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let res_k = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = (res_k - res_g * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (res_k, err, res_abs)
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]` by recursive bisection.
///
/// A panel is accepted when its error estimate is below its share of `tolerance`
/// (proportional to its width) or when the estimate is at the round-off floor.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tolerance: f64,
    max_depth: u32,
) -> Result<Quadrature> {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        tolerance: f64,
        depth: u32,
        max_depth: u32,
        out: &mut Quadrature,
    ) -> std::result::Result<(), f64> {
        let (value, err, res_abs) = gk15(f, a, b);
        let round_off = 50.0 * f64::EPSILON * res_abs;
        if err <= tolerance || err <= round_off {
            out.value += value;
            out.error_bound += err;
            out.intervals += 1;
            return Ok(());
        }
        if depth >= max_depth {
            return Err(err);
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tolerance, depth + 1, max_depth, out)?;
        recurse(f, mid, b, 0.5 * tolerance, depth + 1, max_depth, out)
    }

    let mut out = Quadrature {
        value: 0.0,
        error_bound: 0.0,
        intervals: 0,
    };
    recurse(f, a, b, tolerance, 0, max_depth, &mut out).map_err(|achieved| {
        Error::QuadratureDiverged {
            tolerance,
            max_depth,
            achieved,
        }
    })?;
    Ok(out)
}

/// Integrates `f` over consecutive segments split at `breaks`, sharing the tolerance
/// in proportion to segment width.
fn integrate_segments<F: Fn(f64) -> f64>(
    f: &F,
    breaks: &[f64],
    tolerance: f64,
    max_depth: u32,
) -> Result<Quadrature> {
    let total = breaks[breaks.len() - 1] - breaks[0];
    let mut out = Quadrature {
        value: 0.0,
        error_bound: 0.0,
        intervals: 0,
    };
    for w in breaks.windows(2) {
        let q = integrate(f, w[0], w[1], tolerance * (w[1] - w[0]) / total, max_depth)?;
        out.value += q.value;
        out.error_bound += q.error_bound;
        out.intervals += q.intervals;
    }
    Ok(out)
}

#[inline]
fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn require_positive_sigma(obs: &RegressionObservation) -> Result<()> {
    if obs.sigma > 0.0 && obs.sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "quadrature needs sigma > 0, got {}",
            obs.sigma
        )))
    }
}

/// `∫ (y - ŷ)^2 N(y; ȳ, sigma^2) dy` over `ȳ ± 12 sigma`, with details.
///
/// Integrated in the standardized variable `z = (y - ȳ)/sigma`.
pub fn quad_sq_residual(obs: &RegressionObservation, cfg: &OracleConfig) -> Result<Quadrature> {
    cfg.validate()?;
    require_positive_sigma(obs)?;
    let (d, s) = (obs.residual(), obs.sigma);
    let f = |z: f64| {
        let r = s * z - d;
        r * r * std_normal_pdf(z)
    };
    integrate_segments(
        &f,
        &[-QUAD_HALF_WIDTH, QUAD_HALF_WIDTH],
        cfg.quad_tolerance,
        cfg.max_quad_depth,
    )
}

/// `∫ |y - ŷ| N(y; ȳ, sigma^2) dy` over `ȳ ± 12 sigma`, with details. With `split_at_kink`
/// the range is cut at `y = ŷ` so neither piece contains the corner of `|·|`.
pub fn quad_abs_residual(
    obs: &RegressionObservation,
    cfg: &OracleConfig,
    split_at_kink: bool,
) -> Result<Quadrature> {
    cfg.validate()?;
    require_positive_sigma(obs)?;
    let (d, s) = (obs.residual(), obs.sigma);
    let f = |z: f64| (s * z - d).abs() * std_normal_pdf(z);
    let kink = d / s;
    let breaks: Vec<f64> = if split_at_kink && kink.abs() < QUAD_HALF_WIDTH {
        vec![-QUAD_HALF_WIDTH, kink, QUAD_HALF_WIDTH]
    } else {
        vec![-QUAD_HALF_WIDTH, QUAD_HALF_WIDTH]
    };
    integrate_segments(&f, &breaks, cfg.quad_tolerance, cfg.max_quad_depth)
}

/// Quadrature estimate of `E[(y - ŷ)^2]`.
pub fn quad_expected_sq_residual(obs: &RegressionObservation, cfg: &OracleConfig) -> Result<f64> {
    quad_sq_residual(obs, cfg).map(|q| q.value)
}

/// Quadrature estimate of `E|y - ŷ|`, split at the kink.
pub fn quad_expected_abs_residual(obs: &RegressionObservation, cfg: &OracleConfig) -> Result<f64> {
    quad_abs_residual(obs, cfg, true).map(|q| q.value)
}

/// Per-observation comparison of quadrature against the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadCheck {
    pub max_abs_deviation: f64,
    /// Observations integrated.
    pub checked: usize,
    /// Observations with zero sigma, which have nothing to integrate.
    pub skipped: usize,
}

pub fn quad_check(
    ds: &RegressionDataset,
    metric: RegressionMetric,
    cfg: &OracleConfig,
) -> Result<QuadCheck> {
    cfg.validate()?;
    let mut check = QuadCheck {
        max_abs_deviation: 0.0,
        checked: 0,
        skipped: 0,
    };
    for obs in ds.observations() {
        if obs.sigma == 0.0 {
            check.skipped += 1;
            continue;
        }
        let (quad, closed) = match metric {
            RegressionMetric::Mse => (
                quad_expected_sq_residual(obs, cfg)?,
                obs.residual() * obs.residual() + obs.sigma * obs.sigma,
            ),
            RegressionMetric::Mae => (
                quad_expected_abs_residual(obs, cfg)?,
                FoldedNormalParams::new(obs.residual(), obs.sigma)?.mean(),
            ),
        };
        check.max_abs_deviation = check.max_abs_deviation.max((quad - closed).abs());
        check.checked += 1;
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(OracleConfig::new(999, 1).is_err());
        assert!(OracleConfig::new(1000, 1).is_ok());
        let bad_tol = OracleConfig {
            quad_tolerance: 1e-2,
            ..OracleConfig::default()
        };
        assert!(bad_tol.validate().is_err());
        let zero_tol = OracleConfig {
            quad_tolerance: 0.0,
            ..OracleConfig::default()
        };
        assert!(zero_tol.validate().is_err());
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| ((i * 37 % 101) as f64).sqrt() - 3.0)
            .collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut left = Moments::default();
        let mut right = Moments::default();
        xs[..313].iter().for_each(|&x| left.push(x));
        xs[313..].iter().for_each(|&x| right.push(x));
        let merged = left.merge(&right);
        assert_eq!(merged.count(), all.count());
        assert!((merged.mean() - all.mean()).abs() < 1e-12);
        assert!((merged.m2 - all.m2).abs() < 1e-9 * all.m2);
        assert!((merged.m3 - all.m3).abs() < 1e-9 * all.m3.abs().max(1.0));
        assert!((merged.m4 - all.m4).abs() < 1e-9 * all.m4);
    }

    #[test]
    fn moments_of_constant_have_no_spread() {
        let mut m = Moments::default();
        for _ in 0..100 {
            m.push(0.3);
        }
        let merged = m.merge(&m);
        assert_eq!(merged.mean(), 0.3);
        assert_eq!(merged.sample_variance(), 0.0);
        assert_eq!(merged.standard_error_of_mean(), 0.0);
    }

    #[test]
    fn gk15_is_exact_for_polynomials() {
        let q = integrate(&|x: f64| x.powi(6) - 2.0 * x, 0.0, 2.0, 1e-12, 10).unwrap();
        assert!((q.value - (128.0 / 7.0 - 4.0)).abs() < 1e-12);
        assert_eq!(q.intervals, 1);
    }

    #[test]
    fn quadrature_reports_unreachable_tolerance() {
        let f = |x: f64| if x < 0.3 { 0.0 } else { 1.0 };
        let err = integrate(&f, 0.0, 1.0, 1e-12, 3).unwrap_err();
        assert!(matches!(
            err,
            Error::QuadratureDiverged { max_depth: 3, .. }
        ));
    }

    #[test]
    fn block_streams_cover_all_draws() {
        let streams = block_streams(7, 3 * BLOCK_DRAWS + 5);
        assert_eq!(streams.len(), 4);
        assert_eq!(
            streams.iter().map(|(d, _)| d).sum::<u64>(),
            3 * BLOCK_DRAWS + 5
        );
        assert_eq!(streams[3].0, 5);
    }
}
