//! The normal-mean engine: P-values for point, interval, half-line and
//! nonequivalence hypotheses about the mean of normal data with known σ.
//!
//! Two families of P-values live side by side. *Divergence* P-values rank the
//! standardized squared distance from μ̂ to the hypothesis region in a 1 df
//! χ² distribution, so they equal 1 whenever μ̂ lies in the region and can
//! only grow when the region grows. *Decision* P-values (the Hodges-Lehmann
//! UMPU interval P-value and TOST) come from size-α rejection rules instead.

mod methods;
mod transforms;

use serde::{Deserialize, Serialize};

use crate::divergence::project_interval;
use crate::error::{Error, Result};
use crate::serde_ext::extended_f64;
use crate::statdist::{chi2_upper_tail, chi2_upper_tail_ln, ln_add_exp, ln_std_normal_sf, norm_cdf, ChiSquareDf};

pub use methods::{p_value_methods, DivergenceMethod, HlUmpuMethod, PValueMethod, TostMethod};
pub use transforms::{bf_bound_from_nats, bf_bound_uncapped, bf_lower_bound, coin_toss_equivalent, svalue};

/// Sufficient statistics for the normal-mean model with known σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSummary {
    pub mean_hat: f64,
    pub sigma: f64,
    pub n: u64,
}

impl GaussianSummary {
    pub fn new(mean_hat: f64, sigma: f64, n: u64) -> Result<Self> {
        let s = Self { mean_hat, sigma, n };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean_hat.is_finite() {
            return Err(Error::InvalidInput("sample mean must be finite".into()));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        Ok(())
    }

    /// √n/σ, the inverse standard error of μ̂.
    pub fn precision_scale(&self) -> f64 {
        (self.n as f64).sqrt() / self.sigma
    }

    /// d(m; μ̂) = (n/σ²)(μ̂ − m)².
    pub fn divergence_to(&self, m: f64) -> f64 {
        let z = (self.mean_hat - m) * self.precision_scale();
        z * z
    }
}

/// Hypothesis H about the mean μ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisRegion {
    /// μ = m.
    Point { m: f64 },
    /// m_L ≤ μ ≤ m_U; either end may be infinite.
    Interval {
        #[serde(with = "extended_f64")]
        lo: f64,
        #[serde(with = "extended_f64")]
        hi: f64,
    },
    /// μ ≤ m.
    AtMost { m: f64 },
    /// μ ≥ m.
    AtLeast { m: f64 },
    /// μ ≤ m_L or μ ≥ m_U (complement of the open equivalence interval).
    Nonequivalence { lo: f64, hi: f64 },
}

impl HypothesisRegion {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        let h = Self::Interval { lo, hi };
        h.validate()?;
        Ok(h)
    }

    pub fn nonequivalence(lo: f64, hi: f64) -> Result<Self> {
        let h = Self::Nonequivalence { lo, hi };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Point { m } | Self::AtMost { m } | Self::AtLeast { m } => {
                if !m.is_finite() {
                    return Err(Error::InvalidInput("hypothesized value must be finite".into()));
                }
            }
            Self::Interval { lo, hi } => {
                if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                    return Err(Error::InvalidInput(format!("invalid interval [{lo}, {hi}]")));
                }
            }
            Self::Nonequivalence { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                    return Err(Error::InvalidInput(format!(
                        "nonequivalence bounds need finite lo < hi, got ({lo}, {hi})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Closed convex hull [m_L, m_U] for the connected kinds.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Point { m } => Some((m, m)),
            Self::Interval { lo, hi } => Some((lo, hi)),
            Self::AtMost { m } => Some((f64::NEG_INFINITY, m)),
            Self::AtLeast { m } => Some((m, f64::INFINITY)),
            Self::Nonequivalence { .. } => None,
        }
    }

    pub fn contains(&self, mu: f64) -> bool {
        match *self {
            Self::Nonequivalence { lo, hi } => mu <= lo || mu >= hi,
            _ => {
                let (lo, hi) = self.bounds().expect("connected region");
                lo <= mu && mu <= hi
            }
        }
    }
}

/// Which P-value definition produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PValueKind {
    #[serde(rename = "divergence")]
    Divergence,
    #[serde(rename = "hl")]
    HlUmpu,
    #[serde(rename = "tost")]
    Tost,
}

/// A P-value together with its divergence and information transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValueReport {
    pub p: f64,
    pub method: PValueKind,
    /// Standardized squared distance from μ̂ to the hypothesis region.
    pub divergence_value: f64,
    /// Binary S-value in bits.
    #[serde(with = "extended_f64")]
    pub s2: f64,
    /// Natural-log S-value in nats.
    #[serde(with = "extended_f64")]
    pub se: f64,
    pub bf_lower: f64,
}

/// P-values below this are reported as exactly 0.
pub const P_UNDERFLOW: f64 = 1e-320;

impl PValueReport {
    /// Builds a report from a directly computed `p` and its natural log,
    /// taking the S-values from the log so they survive underflow of `p`.
    pub(crate) fn new(method: PValueKind, p: f64, ln_p: f64, divergence_value: f64) -> Self {
        let p = if p < P_UNDERFLOW { 0.0 } else { p.clamp(0.0, 1.0) };
        let ln_p = ln_p.min(0.0);
        let se = if ln_p == 0.0 { 0.0 } else { -ln_p };
        let s2 = se / std::f64::consts::LN_2;
        let bf_lower = if se <= 1.0 { 1.0 } else { bf_bound_from_nats(se) };
        Self { p, method, divergence_value, s2, se, bf_lower }
    }
}

fn divergence_report(d: f64) -> Result<PValueReport> {
    let p = chi2_upper_tail(d, ChiSquareDf::ONE)?;
    let ln_p = chi2_upper_tail_ln(d, ChiSquareDf::ONE)?;
    Ok(PValueReport::new(PValueKind::Divergence, p, ln_p, d))
}

/// Two-sided P-value for H: μ = m, from d_m = (n/σ²)(μ̂ − m)² on 1 df.
pub fn point_p(s: &GaussianSummary, m: f64) -> Result<PValueReport> {
    s.validate()?;
    if !m.is_finite() {
        return Err(Error::InvalidInput("hypothesized value must be finite".into()));
    }
    divergence_report(s.divergence_to(m))
}

/// Divergence P-value p_M for a point, interval or half-line: the two-sided
/// P-value at the point of the region closest to μ̂, i.e. the largest p_m
/// over the region.
pub fn interval_divergence_p(s: &GaussianSummary, h: &HypothesisRegion) -> Result<PValueReport> {
    s.validate()?;
    h.validate()?;
    let (lo, hi) = h
        .bounds()
        .ok_or_else(|| Error::Unsupported("use nonequivalence_divergence_p for nonequivalence regions".into()))?;
    let nearest = project_interval(s.mean_hat, lo, hi)?;
    divergence_report(s.divergence_to(nearest))
}

/// Divergence P-value for H: μ ≤ m_L or μ ≥ m_U. Equals 1 when μ̂ is in H,
/// otherwise the two-sided P-value at the nearer endpoint (m_U on ties).
pub fn nonequivalence_divergence_p(s: &GaussianSummary, h: &HypothesisRegion) -> Result<PValueReport> {
    s.validate()?;
    h.validate()?;
    let HypothesisRegion::Nonequivalence { lo, hi } = *h else {
        return Err(Error::Unsupported("nonequivalence_divergence_p needs a nonequivalence region".into()));
    };
    let mu = s.mean_hat;
    if mu <= lo || mu >= hi {
        return divergence_report(0.0);
    }
    let nearer = if mu - lo < hi - mu { lo } else { hi };
    divergence_report(s.divergence_to(nearer))
}

/// ln Φ(x).
fn ln_norm_cdf(x: f64) -> f64 {
    ln_std_normal_sf(-x)
}

/// Size at either endpoint of the symmetric two-cutoff rule that rejects when
/// |μ̂ − c̄|·√n/σ ≥ `z`, for an interval of standardized half-width `zh`.
pub fn hl_size(z: f64, zh: f64) -> f64 {
    (norm_cdf(-z - zh) + norm_cdf(zh - z)).min(1.0)
}

/// Hodges-Lehmann UMPU P-value for a finite interval or point.
///
/// With s = √n/σ, centre c̄, half-width h, z = |μ̂ − c̄|·s and zh = h·s:
/// `p = Φ(−z − zh) + 1 − Φ(z − zh)`, the size of the smallest equal-tailed
/// two-cutoff rejection region whose boundary reaches μ̂. For μ̂ outside the
/// interval this is the mean of the two endpoint two-sided P-values.
pub fn hl_umpu_p(s: &GaussianSummary, h: &HypothesisRegion) -> Result<PValueReport> {
    s.validate()?;
    h.validate()?;
    let (lo, hi) = match *h {
        HypothesisRegion::Point { m } => (m, m),
        HypothesisRegion::Interval { lo, hi } if lo.is_finite() && hi.is_finite() => (lo, hi),
        _ => {
            return Err(Error::Unsupported(
                "the HL UMPU P-value needs a point or a finite interval".into(),
            ))
        }
    };
    let scale = s.precision_scale();
    let centre = 0.5 * (lo + hi);
    let z = (s.mean_hat - centre).abs() * scale;
    let zh = 0.5 * (hi - lo) * scale;
    let p = hl_size(z, zh);
    let ln_p = ln_add_exp(ln_norm_cdf(-z - zh), ln_norm_cdf(zh - z)).min(0.0);

    #[cfg(debug_assertions)]
    if z >= zh {
        let mean_endpoint = 0.5 * (2.0 * norm_cdf(-(z - zh)) + 2.0 * norm_cdf(-(z + zh)));
        debug_assert!((p - mean_endpoint).abs() <= 1e-12, "exterior identity failed: {p} vs {mean_endpoint}");
    }

    let d = s.divergence_to(project_interval(s.mean_hat, lo, hi)?);
    Ok(PValueReport::new(PValueKind::HlUmpu, p, ln_p, d))
}

/// TOST P-value for the nonequivalence hypothesis μ ≤ m_L or μ ≥ m_U:
/// max(p_L, p_U) of the two one-sided tests.
pub fn tost_p(s: &GaussianSummary, lo: f64, hi: f64) -> Result<PValueReport> {
    s.validate()?;
    let h = HypothesisRegion::nonequivalence(lo, hi)?;
    let scale = s.precision_scale();
    let z_lo = (s.mean_hat - lo) * scale;
    let z_hi = (s.mean_hat - hi) * scale;
    let (p_l, ln_l) = (norm_cdf(-z_lo), ln_norm_cdf(-z_lo));
    let (p_u, ln_u) = (norm_cdf(z_hi), ln_norm_cdf(z_hi));
    let d = nonequivalence_divergence_p(s, &h)?.divergence_value;
    Ok(PValueReport::new(PValueKind::Tost, p_l.max(p_u), ln_l.max(ln_u), d))
}

/// Critical standardized distance t with `hl_size(t, zh) = alpha`: the HL
/// rule rejects when |μ̂ − c̄|·√n/σ ≥ t.
pub fn hl_critical_distance(zh: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || !(zh >= 0.0) || !zh.is_finite() {
        return Err(Error::Domain(format!("need 0 < alpha < 1 and zh >= 0, got alpha={alpha}, zh={zh}")));
    }
    let (mut lo, mut hi) = (0.0, zh + 40.0);
    if hl_size(0.0, zh) <= alpha {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hl_size(mid, zh) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
