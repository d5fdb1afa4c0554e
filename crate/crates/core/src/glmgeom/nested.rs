//! Divergence of a restricted model M from its embedding model A.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fit::{FitResult, GlmProblem};
use super::stats::tail_or_one;
use crate::divergence::{self, Anchor};
use crate::error::{Error, Result};
use crate::linalg;
use crate::registry::{Named, Registry};

/// Column-space containment tolerance for the nesting check.
pub const NESTING_TOLERANCE: f64 = 1e-8;

/// Where the Wald statistic evaluates cov(B_A).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaldAnchor {
    /// Expected information at β_A.
    #[default]
    Embedding,
    /// Expected information at the restricted estimate β_M.
    Restricted,
}

/// Both fits plus the designs they came from.
pub struct NestedFits<'a> {
    pub problem: &'a GlmProblem,
    pub design_a: &'a DMatrix<f64>,
    pub fit_a: &'a FitResult,
    pub design_m: &'a DMatrix<f64>,
    pub fit_m: &'a FitResult,
    pub wald_anchor: WaldAnchor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedComparison {
    pub method: String,
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
}

/// One way of measuring how far μ_A is from the restricted model.
pub trait NestedTest: Named + Send + Sync {
    fn statistic(&self, fits: &NestedFits<'_>) -> Result<f64>;
}

/// Deviance (likelihood-ratio) statistic dev(μ_M; μ_A).
pub struct LikelihoodRatio;

impl Named for LikelihoodRatio {
    fn name(&self) -> &'static str {
        "lr"
    }
}

impl NestedTest for LikelihoodRatio {
    fn statistic(&self, f: &NestedFits<'_>) -> Result<f64> {
        divergence::deviance(&f.fit_m.mu_vec(), &f.fit_a.mu_vec(), &f.problem.family)
    }
}

/// Score statistic SSD(μ_A; μ_M), metric anchored at μ_M.
pub struct Score;

impl Named for Score {
    fn name(&self) -> &'static str {
        "score"
    }
}

impl NestedTest for Score {
    fn statistic(&self, f: &NestedFits<'_>) -> Result<f64> {
        let mu_m = f.fit_m.mu_vec();
        let metric = f.problem.family.covariance_at(&mu_m, Anchor::Theta)?;
        divergence::ssd(&f.fit_a.mu_vec(), &mu_m, &metric)
    }
}

/// Wald statistic (β_A − β_M)ᵀ cov(B_A)⁻¹ (β_A − β_M), with β_M expressed
/// in the embedding model's coordinates.
pub struct Wald;

impl Named for Wald {
    fn name(&self) -> &'static str {
        "wald"
    }
}

impl NestedTest for Wald {
    fn statistic(&self, f: &NestedFits<'_>) -> Result<f64> {
        let beta_a = f.fit_a.beta_vec();
        let eta_m = f.design_m * f.fit_m.beta_vec();
        let (beta_m_in_a, rel) = linalg::least_squares(f.design_a, &eta_m)?;
        if rel > NESTING_TOLERANCE {
            return Err(Error::NotNested);
        }
        let anchor = match f.wald_anchor {
            WaldAnchor::Embedding => f.fit_a.mu_vec(),
            WaldAnchor::Restricted => f.fit_m.mu_vec(),
        };
        let w = f.problem.family.information_weights(&anchor)?;
        let info = f.design_a.transpose() * w * f.design_a;
        let delta = beta_a - beta_m_in_a;
        Ok((delta.transpose() * info * &delta)[(0, 0)].max(0.0))
    }
}

/// Registry holding `lr`, `score` and `wald`.
pub fn nested_tests() -> Registry<dyn NestedTest> {
    let mut reg: Registry<dyn NestedTest> = Registry::empty("nested-model statistic");
    reg.register(Box::new(LikelihoodRatio)).register(Box::new(Score)).register(Box::new(Wald));
    reg
}

/// Compares already-fitted nested models with the given statistic.
pub fn nested_compare(fits: &NestedFits<'_>, test: &dyn NestedTest) -> Result<NestedComparison> {
    let (a, m) = (fits.design_a, fits.design_m);
    if a.nrows() != fits.problem.n() || m.nrows() != fits.problem.n() {
        return Err(Error::DimensionMismatch { expected: fits.problem.n(), got: a.nrows().min(m.nrows()) });
    }
    if m.ncols() > a.ncols() || !linalg::column_space_contains(a, m, NESTING_TOLERANCE)? {
        return Err(Error::NotNested);
    }
    let df = a.ncols() - m.ncols();
    let statistic = test.statistic(fits)?;
    Ok(NestedComparison {
        method: test.name().to_string(),
        statistic,
        df,
        p: tail_or_one(statistic, df)?,
    })
}

/// Fits A and M to the problem's response with `principle`, then compares.
pub fn fit_and_compare(
    problem_a: &GlmProblem,
    design_m: &DMatrix<f64>,
    method: &str,
    principle: &str,
    wald_anchor: WaldAnchor,
) -> Result<(FitResult, FitResult, NestedComparison)> {
    let tests = nested_tests();
    let test = tests.get(method)?;
    let fit_a = super::fit(problem_a, principle)?;
    let problem_m = problem_a.with_design(design_m.clone())?;
    let fit_m = super::fit(&problem_m, principle)?;
    let fits = NestedFits {
        problem: problem_a,
        design_a: &problem_a.design,
        fit_a: &fit_a,
        design_m,
        fit_m: &fit_m,
        wald_anchor,
    };
    let cmp = nested_compare(&fits, test)?;
    Ok((fit_a, fit_m, cmp))
}

