//! Shared test helpers: a double-double reference for erf/erfc and random
//! dataset generators.
#![allow(dead_code)]

use std::ops::{Add, Div, Mul, Neg, Sub};

use errmetrics::oracle::integrate;
use errmetrics::{ClassificationDataset, RegressionDataset};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, about 32 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

// Low words are the rounding errors of the f64 constants.
const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.3190468138462996e-17,
};
const PI: Dd = Dd {
    hi: std::f64::consts::PI,
    lo: 1.2246467991473532e-16,
};

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn from_pair((hi, lo): (f64, f64)) -> Self {
        Dd { hi, lo }
    }

    fn scale(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi == 0.0 {
            return Dd::new(0.0);
        }
        let s = Dd::new(self.hi.sqrt());
        s + (self - s * s) / (s * Dd::new(2.0))
    }

    pub fn exp(self) -> Self {
        if self.hi < -745.0 {
            return Dd::new(0.0);
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::new(k)).scale(-10);
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for n in 1..40 {
            term = term * r / Dd::new(n as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        // Split the power of two so subnormal results keep their low bits as long as possible.
        let k = k as i32;
        let half = k / 2;
        sum.scale(half).scale(k - half)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::from_pair(quick_two_sum(s, e + f))
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::from_pair(quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi)))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        Dd::from_pair(quick_two_sum(q1, q2)) + Dd::new(q3)
    }
}

/// Above this the continued fraction is used for erfc.
const SERIES_LIMIT: f64 = 3.0;
const CF_TERMS: usize = 4000;

fn inv_sqrt_pi() -> Dd {
    Dd::ONE / PI.sqrt()
}

/// erf(x) for 0 <= x < SERIES_LIMIT via the all-positive series
/// `2/√π e^{-x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!`.
fn erf_series(x: Dd) -> Dd {
    if x.hi == 0.0 {
        return Dd::new(0.0);
    }
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 1.0;
    loop {
        term = term * x2 * Dd::new(2.0) / Dd::new(2.0 * n + 1.0);
        sum = sum + term;
        if term.hi <= 1e-34 * sum.hi {
            break;
        }
        n += 1.0;
    }
    sum * Dd::new(2.0) * inv_sqrt_pi() * (-x2).exp()
}

/// erfc(x) for x >= SERIES_LIMIT via the Laplace continued fraction, evaluated
/// backwards from a fixed depth.
fn erfc_cf(x: Dd) -> Dd {
    let mut t = x;
    for n in (1..=CF_TERMS).rev() {
        t = x + Dd::new(n as f64 / 2.0) / t;
    }
    (-(x * x)).exp() * inv_sqrt_pi() / t
}

pub fn erf_dd(x: f64) -> Dd {
    let a = Dd::new(x.abs());
    let v = if x.abs() < SERIES_LIMIT {
        erf_series(a)
    } else {
        Dd::ONE - erfc_cf(a)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

pub fn erfc_dd(x: f64) -> Dd {
    erfc_of(Dd::new(x))
}

fn erfc_of(x: Dd) -> Dd {
    let a = if x.hi < 0.0 { -x } else { x };
    let v = if a.hi < SERIES_LIMIT {
        Dd::ONE - erf_series(a)
    } else {
        erfc_cf(a)
    };
    if x.hi < 0.0 {
        Dd::new(2.0) - v
    } else {
        v
    }
}

/// Φ(x) = erfc(-x/√2)/2 with the scaling done in double-double.
pub fn normal_cdf_dd(x: f64) -> Dd {
    let t = -Dd::new(x) / Dd::new(2.0).sqrt();
    erfc_of(t) * Dd::new(0.5)
}

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Moments of |X| for X ~ N(μ, σ²) by quadrature over the standard normal density,
/// split at the fold.
pub fn folded_quadrature(mu: f64, sigma: f64) -> (f64, f64) {
    let density = |z: f64| (-0.5 * z * z).exp() / std::f64::consts::TAU.sqrt();
    let kink = -mu / sigma;
    let mut pts = vec![-12.0 + kink.min(0.0), 12.0 + kink.max(0.0)];
    if kink.abs() < 12.0 {
        pts.insert(1, kink);
    }
    let mut first = 0.0;
    let mut second = 0.0;
    for w in pts.windows(2) {
        first += integrate(
            &|z: f64| (mu + sigma * z).abs() * density(z),
            w[0],
            w[1],
            1e-13,
            50,
        )
        .unwrap()
        .value;
        second += integrate(
            &|z: f64| (mu + sigma * z).powi(2) * density(z),
            w[0],
            w[1],
            1e-13,
            50,
        )
        .unwrap()
        .value;
    }
    (first, second - first * first)
}

/// Exact mean and variance of the accuracy over all 2^M flip vectors, accumulated
/// in double-double so the oracle itself sits well below the 1e-14 tolerance.
pub fn enumerate_flips(ds: &ClassificationDataset) -> (f64, f64) {
    let m = ds.len();
    let q = Dd::new(ds.q());
    let p = Dd::ONE - q;
    let correct: Vec<bool> = ds
        .observations()
        .iter()
        .map(|o| (o.p_hat >= ds.alpha()) == o.label)
        .collect();
    let mut mean = Dd::new(0.0);
    let mut second = Dd::new(0.0);
    for mask in 0u32..(1 << m) {
        let mut weight = Dd::ONE;
        let mut hits = 0usize;
        for (i, &c) in correct.iter().enumerate() {
            let flipped = mask >> i & 1 == 1;
            weight = weight * if flipped { q } else { p };
            // A flipped label turns a hit into a miss and vice versa.
            if c != flipped {
                hits += 1;
            }
        }
        let acc = Dd::new(hits as f64) / Dd::new(m as f64);
        mean = mean + weight * acc;
        second = second + weight * acc * acc;
    }
    (mean.to_f64(), (second - mean * mean).to_f64())
}

/// Heteroscedastic dataset: ȳ ∈ [-5, 5], ŷ - ȳ ∈ [-2, 2], σ ∈ [0.1, 2].
pub fn random_regression(rng: &mut impl Rng, m: usize) -> RegressionDataset {
    let mut y_hat = Vec::with_capacity(m);
    let mut y_bar = Vec::with_capacity(m);
    let mut sigma = Vec::with_capacity(m);
    for _ in 0..m {
        let bar = rng.random_range(-5.0..5.0);
        y_bar.push(bar);
        y_hat.push(bar + rng.random_range(-2.0..2.0));
        sigma.push(rng.random_range(0.1..2.0));
    }
    RegressionDataset::from_columns(&y_hat, &y_bar, &sigma).unwrap()
}

pub fn random_classification(
    rng: &mut impl Rng,
    m: usize,
    alpha: f64,
    q: f64,
) -> ClassificationDataset {
    let labels: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
    let p_hat: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..=1.0)).collect();
    ClassificationDataset::from_columns(&labels, &p_hat, alpha, q).unwrap()
}

/// 17 of 20 correct at α = 0.5 (TP 9, TN 8, FP 2, FN 1).
pub fn accuracy_085(q: f64) -> ClassificationDataset {
    let mut labels = vec![true; 10];
    labels.extend([false; 10]);
    let mut p_hat = vec![0.9; 9];
    p_hat.push(0.1);
    p_hat.extend([0.2; 8]);
    p_hat.extend([0.8; 2]);
    ClassificationDataset::from_columns(&labels, &p_hat, 0.5, q).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// Every file in `fixtures/malformed`: metric to load it with, the data row the
/// error must cite (if any), and a fragment of the message.
pub const MALFORMED: &[(&str, &str, Option<usize>, &str)] = &[
    ("negative_sigma.csv", "mse", Some(3), "sigma must be >= 0"),
    ("nan_value.csv", "mse", Some(2), "non-finite"),
    ("infinite_value.csv", "mae", Some(2), "non-finite"),
    ("missing_header.csv", "mse", None, "line 1"),
    ("duplicate_id.csv", "mse", Some(3), "duplicate id 'a'"),
    ("non_numeric.csv", "mse", Some(2), "non-numeric value 'abc'"),
    (
        "decimal_comma.csv",
        "mse",
        Some(1),
        "non-numeric value '1,5'",
    ),
    (
        "ragged_row.csv",
        "mae",
        Some(2),
        "expected 4 fields, found 3",
    ),
    (
        "empty_cell.csv",
        "mse",
        Some(2),
        "missing value in column 'y_bar'",
    ),
    (
        "unknown_column.csv",
        "mse",
        None,
        "unexpected column 'variance'",
    ),
    ("missing_column.csv", "mse", None, "missing column 'sigma'"),
    ("empty_data.csv", "mse", None, "empty dataset"),
    ("empty_file.csv", "mae", None, "missing header"),
    (
        "class_bad_label.csv",
        "accuracy",
        Some(2),
        "label y must be 0 or 1",
    ),
    (
        "class_p_out_of_range.csv",
        "accuracy",
        Some(3),
        "p_hat must lie in [0, 1]",
    ),
    ("class_empty.csv", "accuracy", None, "empty dataset"),
];
