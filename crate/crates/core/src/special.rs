//! Error function, normal CDF, and the folded-normal and non-central
//! chi-square moments.
//!
//! `erf` and `erfc` follow the FreeBSD msun `s_erf.c` rational approximations:
//!
//! ```text
//! Copyright (C) 1993 by Sun Microsystems, Inc. All rights reserved.
//!
//! Developed at SunPro, a Sun Microsystems, Inc. business.
//! Permission to use, copy, modify, and distribute this
//! software is freely granted, provided that this notice
//! is preserved.
//! ```
//!
//! The argument range is split into `[0, 0.84375)`, `[0.84375, 1.25)`,
//! `[1.25, 1/0.35)` and `[1/0.35, 28)`. Each piece uses its own rational
//! approximation; the two tail pieces approximate `x * exp(x^2) * erfc(x)` so
//! `erfc` keeps full relative precision until it underflows.

// Coefficients are kept digit-for-digit as published.
#![allow(clippy::excessive_precision)]

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ERX: f64 = 8.45062911510467529297e-01;
const EFX8: f64 = 1.02703333676410069053e+00;

// erf on [0, 0.84375)
const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];

// erf on [0.84375, 1.25)
const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];

// erfc on [1.25, 1/0.35)
const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];

// erfc on [1/0.35, 28)
const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

/// Horner evaluation of `c[0] + c[1] z + ...`.
#[inline]
fn poly(z: f64, c: &[f64]) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * z + k)
}

/// Horner evaluation of `1 + c[0] z + c[1] z^2 + ...`.
#[inline]
fn poly1(z: f64, c: &[f64]) -> f64 {
    1.0 + z * poly(z, c)
}

/// `erf(x) - x` scaled, i.e. `R(x^2)` with `erf(x) = x + x R(x^2)` on `|x| < 0.84375`.
#[inline]
fn small_ratio(x: f64) -> f64 {
    let z = x * x;
    poly(z, &PP) / poly1(z, &QQ)
}

/// `erf(|x|) - ERX` on `0.84375 <= |x| < 1.25`.
#[inline]
fn near_one(ax: f64) -> f64 {
    let s = ax - 1.0;
    poly(s, &PA) / poly1(s, &QA)
}

/// `erfc(ax)` for `1.25 <= ax < 28`.
fn erfc_tail(ax: f64) -> f64 {
    let s = 1.0 / (ax * ax);
    let r_over_s = if ax < 1.0 / 0.35 {
        poly(s, &RA) / poly1(s, &SA)
    } else {
        poly(s, &RB) / poly1(s, &SB)
    };
    // Split x^2 so the large part of the exponent is exact.
    let z = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
    (-z * z - 0.5625).exp() * ((z - ax) * (z + ax) + r_over_s).exp() / ax
}

/// Unchecked error function; NaN propagates.
pub(crate) fn erf_raw(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.84375 {
        if ax < f64::powi(2.0, -28) {
            return 0.125 * (8.0 * x + EFX8 * x);
        }
        return x + x * small_ratio(x);
    }
    let y = if ax < 1.25 {
        ERX + near_one(ax)
    } else if ax < 6.0 {
        1.0 - erfc_tail(ax)
    } else {
        1.0
    };
    if x.is_sign_negative() {
        -y
    } else {
        y
    }
}

/// Unchecked complementary error function; NaN propagates.
pub(crate) fn erfc_raw(x: f64) -> f64 {
    let ax = x.abs();
    let negative = x.is_sign_negative();
    if ax < 0.84375 {
        if ax < f64::powi(2.0, -56) {
            return 1.0 - x;
        }
        let y = small_ratio(x);
        if negative || ax < 0.25 {
            return 1.0 - (x + x * y);
        }
        return 0.5 - (x - 0.5 + x * y);
    }
    if ax < 1.25 {
        let p = near_one(ax);
        return if negative {
            1.0 + ERX + p
        } else {
            1.0 - ERX - p
        };
    }
    if ax < 28.0 {
        let tail = erfc_tail(ax);
        return if negative { 2.0 - tail } else { tail };
    }
    if negative {
        2.0
    } else {
        0.0
    }
}

fn finite(function: &'static str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite { function, value: x })
    }
}

/// Error function. Odd to the bit; saturates to `±1` for `|x| >= 6`.
pub fn erf(x: f64) -> Result<f64> {
    finite("erf", x).map(erf_raw)
}

/// Complementary error function `1 - erf(x)`, accurate in relative terms for large `x`.
pub fn erfc(x: f64) -> Result<f64> {
    finite("erfc", x).map(erfc_raw)
}

pub(crate) fn normal_cdf_raw(x: f64) -> f64 {
    0.5 * erfc_raw(-x / SQRT_2)
}

/// Standard normal CDF `Φ(x) = (1 + erf(x/√2)) / 2`.
///
/// Evaluated as `erfc(-x/√2) / 2` so the lower tail keeps relative precision.
pub fn normal_cdf(x: f64) -> Result<f64> {
    finite("normal_cdf", x).map(normal_cdf_raw)
}

/// Parameters of the folded normal distribution `|X|`, `X ~ N(mu, sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldedNormalParams {
    mu: f64,
    sigma: f64,
}

impl FoldedNormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "folded normal location must be finite, got {mu}"
            )));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "folded normal scale must be finite and > 0, got {sigma}"
            )));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `E|X| - |mu|`, the excess of the folded mean over the unfolded magnitude.
    ///
    /// Never negative. Computed directly in the tail so the MAE correction keeps
    /// absolute precision when `|mu| >> sigma`.
    pub fn excess_mean(&self) -> f64 {
        let (abs_mu, sigma) = (self.mu.abs(), self.sigma);
        let t = abs_mu / (SQRT_2 * sigma);
        let gauss = sigma * (2.0 / PI).sqrt() * (-t * t).exp();
        if t < 1.0 {
            let mean = gauss + abs_mu * erf_raw(t);
            (mean - abs_mu).max(0.0)
        } else {
            (gauss - abs_mu * erfc_raw(t)).max(0.0)
        }
    }

    /// `E|X| = sigma sqrt(2/pi) exp(-mu^2 / (2 sigma^2)) + mu erf(mu / (sqrt(2) sigma))`.
    pub fn mean(&self) -> f64 {
        let (abs_mu, sigma) = (self.mu.abs(), self.sigma);
        let t = abs_mu / (SQRT_2 * sigma);
        if t < 1.0 {
            sigma * (2.0 / PI).sqrt() * (-t * t).exp() + abs_mu * erf_raw(t)
        } else {
            abs_mu + self.excess_mean()
        }
    }

    /// `Var|X| = mu^2 + sigma^2 - (E|X|)^2`, rearranged as
    /// `sigma^2 - d (2|mu| + d)` with `d = E|X| - |mu|` to avoid cancelling `mu^2`.
    pub fn variance(&self) -> Result<f64> {
        let sigma2 = self.sigma * self.sigma;
        let excess = self.excess_mean();
        let var = sigma2 - excess * (2.0 * self.mu.abs() + excess);
        guard_variance(var, sigma2)
    }
}

/// Clamps tiny negative round-off to zero; rejects anything below `-1e-12 * scale`.
pub(crate) fn guard_variance(var: f64, scale: f64) -> Result<f64> {
    if var >= 0.0 {
        Ok(var)
    } else if var >= -1e-12 * scale {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance { value: var, scale })
    }
}

pub fn folded_normal_mean(p: &FoldedNormalParams) -> f64 {
    p.mean()
}

pub fn folded_normal_variance(p: &FoldedNormalParams) -> Result<f64> {
    p.variance()
}

/// Parameters of the non-central chi-square distribution `χ'_k(λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoncentralChiSquareParams {
    dof: u32,
    lambda: f64,
}

impl NoncentralChiSquareParams {
    pub fn new(dof: u32, lambda: f64) -> Result<Self> {
        if dof == 0 {
            return Err(Error::InvalidParameter(
                "chi-square degrees of freedom must be >= 1".into(),
            ));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noncentrality must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self { dof, lambda })
    }

    pub fn dof(&self) -> u32 {
        self.dof
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `k + λ`
    pub fn mean(&self) -> f64 {
        f64::from(self.dof) + self.lambda
    }

    /// `2k + 4λ`
    pub fn variance(&self) -> f64 {
        2.0 * f64::from(self.dof) + 4.0 * self.lambda
    }
}

pub fn noncentral_chisq_mean(p: &NoncentralChiSquareParams) -> f64 {
    p.mean()
}

pub fn noncentral_chisq_variance(p: &NoncentralChiSquareParams) -> f64 {
    p.variance()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_basic_values() {
        assert_eq!(erf(0.0).unwrap(), 0.0);
        assert!((erf(1.0).unwrap() - 0.842700792949715).abs() < 1e-15);
        assert_eq!(erf(7.0).unwrap(), 1.0);
        assert_eq!(erf(-30.0).unwrap(), -1.0);
    }

    #[test]
    fn erf_is_odd_bitwise() {
        for &x in &[1e-30, 1e-9, 0.3, 0.84375, 1.0, 1.3, 2.9, 4.2, 5.999, 6.5] {
            assert_eq!(erf(-x).unwrap().to_bits(), (-erf(x).unwrap()).to_bits());
        }
    }

    #[test]
    fn erfc_values() {
        assert_eq!(erfc(0.0).unwrap(), 1.0);
        let v = erfc(5.0).unwrap();
        assert!(((v - 1.5374597944280349e-12) / v).abs() < 1e-12);
        assert_eq!(erfc(30.0).unwrap(), 0.0);
        assert_eq!(erfc(-30.0).unwrap(), 2.0);
    }

    #[test]
    fn non_finite_inputs_are_errors() {
        assert!(erf(f64::NAN).is_err());
        assert!(erfc(f64::INFINITY).is_err());
        assert!(normal_cdf(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0).unwrap(), 0.5);
        assert!((normal_cdf(1.959963985).unwrap() - 0.975).abs() < 1e-9);
        for &x in &[0.1, 0.7, 1.5, 3.0, 8.0] {
            let s = normal_cdf(x).unwrap() + normal_cdf(-x).unwrap();
            assert!((s - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn folded_normal_examples() {
        let half = FoldedNormalParams::new(0.0, 1.0).unwrap();
        assert!((half.mean() - 0.797884560802865).abs() < 1e-15);
        assert!((half.variance().unwrap() - 0.363380227632418).abs() < 1e-15);

        let sharp = FoldedNormalParams::new(10.0, 1e-6).unwrap();
        assert!((sharp.mean() - 10.0).abs() < 1e-12);

        let far = FoldedNormalParams::new(10.0, 1e-3).unwrap();
        let var = far.variance().unwrap();
        assert!(((var - 1e-6) / 1e-6).abs() < 1e-12);

        let unit = FoldedNormalParams::new(1.0, 1.0).unwrap();
        assert!((unit.mean() - 1.16663).abs() < 1e-5);
        assert!((unit.variance().unwrap() - 0.63897).abs() < 1e-5);
    }

    #[test]
    fn folded_normal_rejects_bad_scale() {
        assert!(FoldedNormalParams::new(1.0, 0.0).is_err());
        assert!(FoldedNormalParams::new(1.0, -1.0).is_err());
        assert!(FoldedNormalParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn variance_guard() {
        assert_eq!(guard_variance(-1e-14, 1.0).unwrap(), 0.0);
        assert!(guard_variance(-1e-6, 1.0).is_err());
    }

    #[test]
    fn chi_square_moments() {
        let c = |k, l| NoncentralChiSquareParams::new(k, l).unwrap();
        assert_eq!(c(5, 0.0).mean(), 5.0);
        assert_eq!(c(1, 4.0).mean(), 5.0);
        assert_eq!(c(3, 2.5).mean(), 5.5);
        assert_eq!(c(1, 0.0).variance(), 2.0);
        assert_eq!(c(5, 0.0).variance(), 10.0);
        assert_eq!(c(2, 3.0).variance(), 16.0);
        assert!(NoncentralChiSquareParams::new(0, 1.0).is_err());
        assert!(NoncentralChiSquareParams::new(1, -1.0).is_err());
    }
}
