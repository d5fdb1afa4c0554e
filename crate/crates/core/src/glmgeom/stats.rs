use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::family::GlmFamily;
use super::fit::{FitResult, GlmProblem};
use crate::divergence::{self, Anchor};
use crate::error::{Error, Result};
use crate::statdist::{chi2_upper_tail, ChiSquareDf};

/// Goodness-of-fit statistics against the saturated reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    pub pearson: f64,
    pub neyman: f64,
    pub deviance: f64,
    pub df: usize,
    pub p_pearson: f64,
    pub p_neyman: f64,
    pub p_deviance: f64,
}

/// Upper chi-square tail, with df = 0 (nothing left to test) mapped to 1.
pub(crate) fn tail_or_one(stat: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Ok(1.0);
    }
    let df = u32::try_from(df).map_err(|_| Error::InvalidInput("df too large".into()))?;
    chi2_upper_tail(stat, ChiSquareDf::new(df)?)
}

fn saturated_reference(problem: &GlmProblem, baseline: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    if let Some(b) = baseline {
        problem.family.validate_mean(b).map_err(|e| {
            Error::InvalidInput(format!("baseline must lie strictly inside the mean space: {e}"))
        })?;
        return Ok(b.clone());
    }
    let y = &problem.response;
    let degenerate = match &problem.family {
        GlmFamily::GaussianKnownCov { .. } => None,
        GlmFamily::PoissonLog => y.iter().position(|v| *v <= 0.0),
        GlmFamily::BinomialLogit { trials } => y.iter().zip(trials).position(|(v, t)| *v <= 0.0 || *v >= *t),
    };
    if let Some(i) = degenerate {
        return Err(Error::InvalidFamilyPoint {
            family: problem.family.name(),
            reason: format!(
                "response {} at index {i} sits on the boundary, so saturated-reference statistics \
                 are undefined; supply a positive baseline vector as the saturated reference",
                y[i]
            ),
        });
    }
    Ok(y.clone())
}

/// Pearson, Neyman and deviance fit statistics of `fit` with df = n − k.
///
/// `baseline`, when given, replaces the response as the saturated reference.
pub fn fit_statistics(problem: &GlmProblem, fit: &FitResult, baseline: Option<&DVector<f64>>) -> Result<FitStatistics> {
    if !fit.converged {
        return Err(Error::NonConvergence { iterations: fit.iterations });
    }
    let mu = fit.mu_vec();
    problem.family.check_len(mu.len())?;
    if mu.len() != problem.n() {
        return Err(Error::DimensionMismatch { expected: problem.n(), got: mu.len() });
    }
    let reference = saturated_reference(problem, baseline)?;
    let at_mu = problem.family.covariance_at(&mu, Anchor::Theta)?;
    let at_ref = problem.family.covariance_at(&reference, Anchor::Lambda)?;
    let pearson = divergence::ssd(&reference, &mu, &at_mu)?;
    let neyman = divergence::ssd(&mu, &reference, &at_ref)?;
    let deviance = divergence::deviance(&mu, &reference, &problem.family)?;
    let df = problem.n().saturating_sub(problem.k());
    Ok(FitStatistics {
        pearson,
        neyman,
        deviance,
        df,
        p_pearson: tail_or_one(pearson, df)?,
        p_neyman: tail_or_one(neyman, df)?,
        p_deviance: tail_or_one(deviance, df)?,
    })
}
