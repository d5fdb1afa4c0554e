//! Seeded Monte Carlo for the sampling distribution of random P-values under
//! the normal-mean model.
//!
//! Replication `i` draws its sample mean from its own ChaCha8 stream
//! (key from `seed`, stream id `i`), so output does not depend on how rayon
//! schedules the work. Normal variates come from inverse-CDF transformation of
//! one open-interval uniform per replication.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypotest::{hl_critical_distance, p_value_methods, GaussianSummary, HypothesisRegion, PValueMethod};
use crate::statdist::{norm_cdf, std_normal_quantile};

pub const DEFAULT_THRESHOLDS: [f64; 5] = [0.01, 0.025, 0.05, 0.10, 0.20];

fn default_thresholds() -> Vec<f64> {
    DEFAULT_THRESHOLDS.to_vec()
}

fn default_method() -> String {
    "divergence".into()
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mu_true: f64,
    pub sigma: f64,
    pub n: u64,
    pub hypothesis: HypothesisRegion,
    #[serde(default = "default_method")]
    pub method: String,
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.mu_true.is_finite() {
            return Err(Error::InvalidInput("mu_true must be finite".into()));
        }
        GaussianSummary::new(self.mu_true, self.sigma, self.n)?;
        if self.reps == 0 {
            return Err(Error::InvalidInput("reps must be at least 1".into()));
        }
        if self.thresholds.iter().any(|t| !(*t >= 0.0 && *t <= 1.0)) {
            return Err(Error::InvalidInput("thresholds must lie in [0, 1]".into()));
        }
        self.hypothesis.validate()?;
        // One trial evaluation catches method/region combinations that do not apply.
        let s = GaussianSummary::new(self.mu_true, self.sigma, self.n)?;
        p_value_methods().get(&self.method)?.p_value(&s, &self.hypothesis)?;
        Ok(())
    }

    fn sorted_thresholds(&self) -> Vec<f64> {
        let mut t = self.thresholds.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

/// Standard normal variate for replication `index`.
pub fn normal_draw(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let bits = rng.next_u64() >> 11;
    let u = (bits as f64 + 0.5) / (1u64 << 53) as f64;
    std_normal_quantile(u).expect("uniform lies in the open unit interval")
}

fn sample_mean(mu: f64, se: f64, seed: u64, index: u64) -> f64 {
    mu + se * normal_draw(seed, index)
}

/// One P-value per replication, in replication order.
pub fn simulate_p_values(config: &SimConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let registry = p_value_methods();
    let method = registry.get(&config.method)?;
    let se = config.sigma / (config.n as f64).sqrt();
    (0..config.reps)
        .into_par_iter()
        .map(|i| {
            let s = GaussianSummary::new(sample_mean(config.mu_true, se, config.seed, i), config.sigma, config.n)?;
            Ok(method.p_value(&s, &config.hypothesis)?.p)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionRate {
    pub threshold: f64,
    pub count: u64,
    pub rate: f64,
    pub mc_se: f64,
}

fn rejection_rate(p_sorted: &[f64], threshold: f64) -> RejectionRate {
    let count = p_sorted.partition_point(|&p| p <= threshold) as u64;
    let reps = p_sorted.len() as f64;
    let rate = count as f64 / reps;
    RejectionRate { threshold, count, rate, mc_se: (rate * (1.0 - rate) / reps).sqrt() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub reps: u64,
    pub mass_at_one: f64,
    pub mass_at_one_mc_se: f64,
    pub conditional_count: u64,
    /// KS distance between the P-values below 1 and uniform(0, 1).
    pub ks_conditional: f64,
    /// 1% critical value 1.63/√m for the conditional sample.
    pub ks_critical_1pct: f64,
    pub median_p: f64,
    pub rejection_rates: Vec<RejectionRate>,
}

/// Kolmogorov-Smirnov distance of a sorted sample from uniform(0, 1).
pub fn ks_uniform(sorted: &[f64]) -> f64 {
    let m = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0f64, |d, (i, &u)| {
        let u = u.clamp(0.0, 1.0);
        d.max((i as f64 + 1.0) / m - u).max(u - i as f64 / m)
    })
}

/// Aggregates simulated P-values. Only sorted data is used, so the result
/// does not depend on the order of `p`.
pub fn summarize(p: &[f64], thresholds: &[f64]) -> SimReport {
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    let reps = sorted.len();
    let below = sorted.partition_point(|&v| v < 1.0);
    let at_one = (reps - below) as f64 / reps as f64;
    let conditional = &sorted[..below];
    let median_p = if reps % 2 == 1 {
        sorted[reps / 2]
    } else {
        0.5 * (sorted[reps / 2 - 1] + sorted[reps / 2])
    };
    SimReport {
        reps: reps as u64,
        mass_at_one: at_one,
        mass_at_one_mc_se: (at_one * (1.0 - at_one) / reps as f64).sqrt(),
        conditional_count: below as u64,
        ks_conditional: if below == 0 { 0.0 } else { ks_uniform(conditional) },
        ks_critical_1pct: if below == 0 { f64::INFINITY } else { 1.63 / (below as f64).sqrt() },
        median_p,
        rejection_rates: thresholds.iter().map(|&t| rejection_rate(&sorted, t)).collect(),
    }
}

/// Simulates the P-value distribution for one configuration.
pub fn sample_p_distribution(config: &SimConfig) -> Result<SimReport> {
    let p = simulate_p_values(config)?;
    Ok(summarize(&p, &config.sorted_thresholds()))
}

/// A base configuration crossed with lists of true means and sample sizes.
/// An empty list keeps the base value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeGrid {
    pub base: SimConfig,
    #[serde(default)]
    pub mu_true: Vec<f64>,
    #[serde(default)]
    pub n: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizePowerRow {
    pub mu_true: f64,
    pub n: u64,
    pub rejection_rates: Vec<RejectionRate>,
}

/// Empirical Pr(p ≤ threshold) for every (μ_t, n) cell, all cells sharing
/// the base seed.
pub fn size_power(grid: &SizeGrid) -> Result<Vec<SizePowerRow>> {
    let mus = if grid.mu_true.is_empty() { vec![grid.base.mu_true] } else { grid.mu_true.clone() };
    let ns = if grid.n.is_empty() { vec![grid.base.n] } else { grid.n.clone() };
    let mut rows = Vec::with_capacity(mus.len() * ns.len());
    for &mu_true in &mus {
        for &n in &ns {
            let cfg = SimConfig { mu_true, n, ..grid.base.clone() };
            let report = sample_p_distribution(&cfg)?;
            rows.push(SizePowerRow { mu_true, n, rejection_rates: report.rejection_rates });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub alt: f64,
    pub interval: HypothesisRegion,
    pub sigma: f64,
    pub n: u64,
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub alpha: f64,
    pub reps: u64,
    pub power_hl: f64,
    pub power_hl_mc_se: f64,
    pub power_divergence: f64,
    pub power_divergence_mc_se: f64,
}

fn finite_bounds(h: &HypothesisRegion) -> Result<(f64, f64)> {
    match *h {
        HypothesisRegion::Point { m } => Ok((m, m)),
        HypothesisRegion::Interval { lo, hi } if lo.is_finite() && hi.is_finite() => Ok((lo, hi)),
        _ => Err(Error::InvalidInput("power comparison needs a point or finite interval".into())),
    }
}

/// Rejection rates of "p_HL ≤ α" and "p_M ≤ α" under μ_t = alt, both rules
/// applied to the same draws.
pub fn power_comparison(config: &PowerConfig) -> Result<PowerReport> {
    finite_bounds(&config.interval)?;
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1), got {}", config.alpha)));
    }
    let base = SimConfig {
        mu_true: config.alt,
        sigma: config.sigma,
        n: config.n,
        hypothesis: config.interval,
        method: "hl".into(),
        reps: config.reps,
        seed: config.seed,
        thresholds: vec![config.alpha],
    };
    let hl = sample_p_distribution(&base)?.rejection_rates[0];
    let div = sample_p_distribution(&SimConfig { method: "divergence".into(), ..base })?.rejection_rates[0];
    Ok(PowerReport {
        alpha: config.alpha,
        reps: config.reps,
        power_hl: hl.rate,
        power_hl_mc_se: hl.mc_se,
        power_divergence: div.rate,
        power_divergence_mc_se: div.mc_se,
    })
}

/// Exact rejection probabilities (HL, divergence) at level α for a finite
/// interval when μ_t = alt.
pub fn analytic_power(alt: f64, interval: &HypothesisRegion, sigma: f64, n: u64, alpha: f64) -> Result<(f64, f64)> {
    let (lo, hi) = finite_bounds(interval)?;
    let s = GaussianSummary::new(alt, sigma, n)?.precision_scale();
    let zh = 0.5 * (hi - lo) * s;
    let shift = (alt - 0.5 * (lo + hi)) * s;
    let t = hl_critical_distance(zh, alpha)?;
    let hl = norm_cdf(shift - t) + norm_cdf(-shift - t);
    let c = std_normal_quantile(1.0 - alpha / 2.0)?;
    let div = norm_cdf(shift - zh - c) + norm_cdf(-shift - zh - c);
    Ok((hl.min(1.0), div.min(1.0)))
}

/// The alternative above the interval at which the level-α HL test has
/// power `target`.
pub fn calibrate_alt_for_hl_power(interval: &HypothesisRegion, sigma: f64, n: u64, alpha: f64, target: f64) -> Result<f64> {
    let (_, hi) = finite_bounds(interval)?;
    let se = sigma / (n as f64).sqrt();
    let power = |alt: f64| analytic_power(alt, interval, sigma, n, alpha).map(|p| p.0);
    if !(target > power(hi)? && target < 1.0) {
        return Err(Error::Domain(format!("target power {target} is not attainable above the interval")));
    }
    let (mut a, mut b) = (hi, hi + se);
    while power(b)? < target {
        a = b;
        b += 2.0 * (b - hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if power(mid)? < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Checks a method name against the P-value registry.
pub fn lookup_method(name: &str) -> Result<&'static str> {
    let reg = p_value_methods();
    let method: &dyn PValueMethod = reg.get(name)?;
    Ok(method.name())
}
