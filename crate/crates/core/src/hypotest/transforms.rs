//! Transforms of a P-value: S-values, the Bayes-factor bound and the
//! coin-toss reading of a binary S-value.

use crate::error::{Error, Result};

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("P-value must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Surprisal −log_base(p). Returns `f64::INFINITY` for p = 0.
pub fn svalue(p: f64, base: f64) -> Result<f64> {
    check_p(p)?;
    if !(base > 1.0) || !base.is_finite() {
        return Err(Error::Domain(format!("S-value base must be a finite number > 1, got {base}")));
    }
    if p == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((-p.ln() / base.ln()).max(0.0))
}

/// −e·p·ln(p) without the cap at 1; peaks at exactly 1 when p = 1/e.
pub fn bf_bound_uncapped(p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    Ok(-std::f64::consts::E * p * p.ln())
}

/// The same bound written through the natural-log S-value, s·exp(1 − s).
pub fn bf_bound_from_nats(s_e: f64) -> f64 {
    if s_e.is_infinite() {
        return 0.0;
    }
    s_e * (1.0 - s_e).exp()
}

/// Lower bound on the Bayes factor for the tested hypothesis: −e·p·ln(p)
/// for p ≤ 1/e, capped at 1 above that.
pub fn bf_lower_bound(p: f64) -> Result<f64> {
    check_p(p)?;
    if p >= (-1.0f64).exp() {
        return Ok(1.0);
    }
    bf_bound_uncapped(p).map(|b| b.min(1.0))
}

/// Number of consecutive heads carrying the same information as a binary
/// S-value: the S-value rounded half-to-even.
pub fn coin_toss_equivalent(s2: f64) -> Result<u64> {
    if !s2.is_finite() || s2 < 0.0 {
        return Err(Error::Domain(format!("S-value must be finite and >= 0, got {s2}")));
    }
    Ok(s2.round_ties_even() as u64)
}
