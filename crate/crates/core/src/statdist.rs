//! Scalar distribution functions: standard normal CDF and quantile, and the
//! chi-square upper tail through the regularized incomplete gamma function.
//!
//! Everything here is a pure function. Probabilities are clamped to `[0, 1]`
//! after evaluation. The log-scale variants exist so that S-values stay
//! finite even when a tail area underflows `f64`.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-17;
const TINY: f64 = 1e-300;

/// Degrees of freedom of a chi-square reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct ChiSquareDf(u32);

impl ChiSquareDf {
    pub fn new(df: u32) -> Result<Self> {
        if df == 0 {
            return Err(Error::Domain("chi-square df must be at least 1".into()));
        }
        Ok(Self(df))
    }

    pub const ONE: ChiSquareDf = ChiSquareDf(1);

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for ChiSquareDf {
    type Error = Error;
    fn try_from(df: u32) -> Result<Self> {
        Self::new(df)
    }
}

impl From<ChiSquareDf> for u32 {
    fn from(df: ChiSquareDf) -> u32 {
        df.0
    }
}

#[inline]
pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Φ(z) without input validation; infinite arguments map to 0 or 1.
#[inline]
pub(crate) fn norm_cdf(z: f64) -> f64 {
    clamp_prob(0.5 * libm::erfc(-z / std::f64::consts::SQRT_2))
}

#[inline]
pub(crate) fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal cumulative distribution function.
pub fn std_normal_cdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::InvalidInput(format!("normal cdf argument {z} is not finite")));
    }
    Ok(norm_cdf(z))
}

/// Inverse of [`std_normal_cdf`] on the open unit interval.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("normal quantile needs 0 < p < 1, got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut z = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p);
    // Newton polish; the lower tail is refined on the relative scale.
    for _ in 0..4 {
        let dens = norm_pdf(z);
        if dens <= 0.0 {
            break;
        }
        let step = if z < 0.0 {
            (norm_cdf(z) - p) / dens
        } else {
            (norm_cdf(-z) - (1.0 - p)) / -dens
        };
        z -= step;
        if step.abs() < 1e-16 * z.abs().max(1.0) {
            break;
        }
    }
    Ok(z)
}

/// ln Γ(df/2) for a positive integer df, from the exact factorial and
/// half-integer product formulas.
fn ln_gamma_half_df(df: u32) -> f64 {
    if df % 2 == 0 {
        let k = df / 2;
        (2..k).map(|i| (i as f64).ln()).sum()
    } else {
        let k = (df - 1) / 2;
        0.5 * PI.ln() + (1..=k).map(|i| (i as f64 - 0.5).ln()).sum::<f64>()
    }
}

/// Lower regularized gamma P(a, x) by its power series; valid for x < a + 1.
fn gamma_p_series(a: f64, x: f64, ln_gamma_a: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma_a).exp()
}

/// ln Q(a, x) from the Lentz continued fraction; valid for x ≥ a + 1.
fn ln_gamma_q_cf(a: f64, x: f64, ln_gamma_a: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    -x + a * x.ln() - ln_gamma_a + h.ln()
}

fn check_chi2_arg(d: f64) -> Result<()> {
    if d.is_nan() || d < 0.0 {
        return Err(Error::Domain(format!("chi-square statistic must be >= 0, got {d}")));
    }
    Ok(())
}

/// Natural log of Pr(χ²_df ≥ d). Stays finite far beyond the point where
/// the tail area itself underflows.
pub fn chi2_upper_tail_ln(d: f64, df: ChiSquareDf) -> Result<f64> {
    check_chi2_arg(d)?;
    if d == 0.0 {
        return Ok(0.0);
    }
    if d.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let a = f64::from(df.get()) / 2.0;
    let x = d / 2.0;
    let lga = ln_gamma_half_df(df.get());
    if x < a + 1.0 {
        let p = gamma_p_series(a, x, lga);
        Ok((-p.min(1.0)).ln_1p())
    } else {
        Ok(ln_gamma_q_cf(a, x, lga).min(0.0))
    }
}

/// Pr(χ²_df ≥ d), the upper tail of the chi-square distribution.
pub fn chi2_upper_tail(d: f64, df: ChiSquareDf) -> Result<f64> {
    let a = f64::from(df.get()) / 2.0;
    check_chi2_arg(d)?;
    if d == 0.0 {
        return Ok(1.0);
    }
    let x = d / 2.0;
    if x < a + 1.0 && x.is_finite() {
        let p = gamma_p_series(a, x, ln_gamma_half_df(df.get()));
        return Ok(clamp_prob(1.0 - p));
    }
    Ok(clamp_prob(chi2_upper_tail_ln(d, df)?.exp()))
}

/// ln(1 − Φ(x)), the log upper normal tail, accurate for large positive x.
pub fn ln_std_normal_sf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    let q = chi2_upper_tail_ln(x * x, ChiSquareDf::ONE).expect("square is nonnegative");
    if x >= 0.0 {
        q - LN_2
    } else {
        (-0.5 * q.exp()).ln_1p()
    }
}

/// ln of exp(a) + exp(b) without overflow or underflow.
pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}
