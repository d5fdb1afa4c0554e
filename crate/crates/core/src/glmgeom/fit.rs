//! Fitting principles for canonical-link GLMs.
//!
//! Each principle minimizes a different divergence between the data and the
//! model's mean space:
//!
//! * `ml`: the deviance dev(μ; y), i.e. maximum likelihood, solved by IRLS;
//! * `pearson`: the Pearson statistic SSD(y; μ) with the metric moving with μ;
//! * `gls`: the Neyman statistic SSD(μ; y) with the metric frozen at y.
//!
//! For the Gaussian family with known covariance all three reduce to the
//! same generalized least-squares projection.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::family::GlmFamily;
use crate::divergence::{self, Anchor, MeanPoint, MetricSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::registry::{Named, Registry};

/// Response, design and family for one fit.
#[derive(Debug, Clone)]
pub struct GlmProblem {
    pub family: GlmFamily,
    pub design: DMatrix<f64>,
    pub response: DVector<f64>,
    pub offset: Option<DVector<f64>>,
}

impl GlmProblem {
    pub fn new(family: GlmFamily, design: DMatrix<f64>, response: DVector<f64>) -> Result<Self> {
        if design.nrows() != response.len() {
            return Err(Error::DimensionMismatch { expected: response.len(), got: design.nrows() });
        }
        if design.ncols() == 0 || design.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("design must have at least one finite column".into()));
        }
        family.validate_response(&response)?;
        Ok(Self { family, design, response, offset: None })
    }

    pub fn with_offset(mut self, offset: DVector<f64>) -> Result<Self> {
        if offset.len() != self.response.len() {
            return Err(Error::DimensionMismatch { expected: self.response.len(), got: offset.len() });
        }
        self.offset = Some(offset);
        Ok(self)
    }

    /// Same family, design and offset with a different response vector.
    pub fn with_response(&self, response: DVector<f64>) -> Result<Self> {
        let mut p = Self::new(self.family.clone(), self.design.clone(), response)?;
        p.offset = self.offset.clone();
        Ok(p)
    }

    /// Same family, response and offset with a different design.
    pub fn with_design(&self, design: DMatrix<f64>) -> Result<Self> {
        let mut p = Self::new(self.family.clone(), design, self.response.clone())?;
        p.offset = self.offset.clone();
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.response.len()
    }

    pub fn k(&self) -> usize {
        self.design.ncols()
    }

    pub fn linear_predictor(&self, beta: &DVector<f64>) -> DVector<f64> {
        let eta = &self.design * beta;
        match &self.offset {
            Some(o) => eta + o,
            None => eta,
        }
    }

    pub fn mean(&self, beta: &DVector<f64>) -> MeanPoint {
        self.family.inverse_link(&self.linear_predictor(beta))
    }

    /// Absolute tolerance for score certificates, scaled to the data.
    pub fn score_tolerance(&self) -> f64 {
        let xty = self.design.abs().transpose() * self.response.abs();
        1e-10 * (1.0 + xty.amax())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Relative objective change treated as stagnation.
    pub relative_tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { max_iterations: 100, relative_tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    pub mu: Vec<f64>,
    pub principle: String,
    pub iterations: usize,
    pub converged: bool,
    /// Minimized divergence for the declared principle.
    pub objective: f64,
    /// Max-norm of the principle's score equations at the solution.
    pub score_norm: f64,
}

impl FitResult {
    pub fn beta_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta)
    }

    pub fn mu_vec(&self) -> MeanPoint {
        DVector::from_column_slice(&self.mu)
    }
}

/// A principle for choosing μ in the model's mean space.
pub trait FitPrinciple: Named + Send + Sync {
    /// The divergence minimized over μ = μ(β).
    fn objective(&self, problem: &GlmProblem, mu: &MeanPoint) -> Result<f64>;

    /// Objective, gradient and Hessian (or a positive-definite surrogate)
    /// with respect to β.
    fn local_model(&self, problem: &GlmProblem, beta: &DVector<f64>) -> Result<LocalModel>;

    /// Left-hand side of the score equations; zero at a solution.
    fn score(&self, problem: &GlmProblem, mu: &MeanPoint) -> Result<DVector<f64>>;

    fn fit(&self, problem: &GlmProblem, config: &FitConfig) -> Result<FitResult> {
        if let GlmFamily::GaussianKnownCov { cov } = &problem.family {
            return gaussian_fit(self.name(), problem, cov);
        }
        self.prepare(problem)?;
        let start = starting_beta(problem)?;
        newton_minimize(self, problem, start, config)
    }

    /// Checks run before iterating.
    fn prepare(&self, _problem: &GlmProblem) -> Result<()> {
        Ok(())
    }
}

pub struct LocalModel {
    pub objective: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn gaussian_fit(name: &'static str, problem: &GlmProblem, cov: &DMatrix<f64>) -> Result<FitResult> {
    let metric = MetricSpec::new(cov.clone(), Anchor::Theta)?;
    let target = match &problem.offset {
        Some(o) => &problem.response - o,
        None => problem.response.clone(),
    };
    let proj = divergence::project_linear(&target, &problem.design, &metric)?;
    // Recover β from the fitted linear predictor.
    let (beta, _) = linalg::least_squares(&problem.design, &proj.minimizer)?;
    let mu = problem.mean(&beta);
    let score = problem.design.transpose() * metric.solve_vec(&(&problem.response - &mu));
    Ok(FitResult {
        beta: beta.iter().copied().collect(),
        mu: mu.iter().copied().collect(),
        principle: name.to_string(),
        iterations: 1,
        converged: true,
        objective: proj.value,
        score_norm: max_abs(&score),
    })
}

/// Least squares of the link-transformed, slightly smoothed response.
fn starting_beta(problem: &GlmProblem) -> Result<DVector<f64>> {
    let y = &problem.response;
    let mu0 = match &problem.family {
        GlmFamily::BinomialLogit { trials } => {
            DVector::from_iterator(y.len(), y.iter().zip(trials).map(|(v, t)| t * (v + 0.5) / (t + 1.0)))
        }
        _ => y.map(|v| v + 0.5),
    };
    let mut z = problem.family.link(&mu0);
    if let Some(o) = &problem.offset {
        z -= o;
    }
    Ok(linalg::least_squares(&problem.design, &z)?.0)
}

/// Damped Newton iteration with step halving; for the deviance objective and
/// canonical links this is exactly IRLS.
fn newton_minimize<P: FitPrinciple + ?Sized>(
    principle: &P,
    problem: &GlmProblem,
    mut beta: DVector<f64>,
    config: &FitConfig,
) -> Result<FitResult> {
    let tol = problem.score_tolerance();
    let mut model = principle.local_model(problem, &beta)?;
    let mut stalls = 0;
    for iter in 0..=config.max_iterations {
        let mut mu = problem.mean(&beta);
        let mut score_norm = max_abs(&principle.score(problem, &mu)?);
        if score_norm <= tol || stalls >= 2 {
            // One more full step; near the optimum it squares the residual score.
            if let Some((b, m, norm)) = polish(principle, problem, &beta, &model, score_norm) {
                (beta, model, score_norm) = (b, m, norm);
                mu = problem.mean(&beta);
            }
            if drifted_to_boundary(&problem.family, &mu) {
                // The estimate does not exist (e.g. separation or an all-zero group).
                return Err(Error::NonConvergence { iterations: iter });
            }
            return Ok(FitResult {
                beta: beta.iter().copied().collect(),
                mu: mu.iter().copied().collect(),
                principle: principle.name().to_string(),
                iterations: iter,
                converged: true,
                objective: model.objective,
                score_norm,
            });
        }
        if iter == config.max_iterations {
            break;
        }
        let step = solve_newton(&model)?;
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let cand = &beta + &step * t;
            if let Ok(m) = principle.local_model(problem, &cand) {
                if m.objective.is_finite() && m.objective <= model.objective * (1.0 + 1e-15) + 1e-300 {
                    accepted = Some((cand, m));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, m)) = accepted else {
            stalls = 2;
            continue;
        };
        let rel = (model.objective - m.objective).abs() / (m.objective.abs() + 0.1);
        stalls = if rel < config.relative_tolerance { stalls + 1 } else { 0 };
        beta = cand;
        model = m;
    }
    Err(Error::NonConvergence { iterations: config.max_iterations })
}

fn polish<P: FitPrinciple + ?Sized>(
    principle: &P,
    problem: &GlmProblem,
    beta: &DVector<f64>,
    model: &LocalModel,
    score_norm: f64,
) -> Option<(DVector<f64>, LocalModel, f64)> {
    let cand = beta + solve_newton(model).ok()?;
    let m = principle.local_model(problem, &cand).ok()?;
    let norm = max_abs(&principle.score(problem, &problem.mean(&cand)).ok()?);
    (m.objective.is_finite() && norm < score_norm).then_some((cand, m, norm))
}

fn drifted_to_boundary(family: &GlmFamily, mu: &MeanPoint) -> bool {
    const EDGE: f64 = 1e-10;
    match family {
        GlmFamily::GaussianKnownCov { .. } => false,
        GlmFamily::PoissonLog => mu.iter().any(|m| *m < EDGE),
        GlmFamily::BinomialLogit { trials } => {
            mu.iter().zip(trials).any(|(m, t)| m / t < EDGE || m / t > 1.0 - EDGE)
        }
    }
}

fn solve_newton(model: &LocalModel) -> Result<DVector<f64>> {
    let h = (&model.hessian + model.hessian.transpose()) * 0.5;
    let chol = linalg::gram_factor(h)?;
    Ok(-chol.solve(&model.gradient))
}

/// Per-observation values, first and second η-derivatives → β-space model.
fn assemble(problem: &GlmProblem, objective: f64, d1: DVector<f64>, d2: DVector<f64>) -> LocalModel {
    let x = &problem.design;
    let gradient = x.transpose() * d1;
    let mut xw = x.clone();
    for (i, w) in d2.iter().enumerate() {
        xw.row_mut(i).scale_mut(*w);
    }
    LocalModel { objective, gradient, hessian: x.transpose() * xw }
}

/// Maximum likelihood (minimum deviance), fit by IRLS.
pub struct MaximumLikelihood;

impl Named for MaximumLikelihood {
    fn name(&self) -> &'static str {
        "ml"
    }
}

impl FitPrinciple for MaximumLikelihood {
    fn objective(&self, problem: &GlmProblem, mu: &MeanPoint) -> Result<f64> {
        problem.family.deviance(mu, &problem.response)
    }

    fn local_model(&self, problem: &GlmProblem, beta: &DVector<f64>) -> Result<LocalModel> {
        let mu = problem.mean(beta);
        let objective = self.objective(problem, &mu)?;
        let w = problem.family.mean_derivative(&mu);
        let d1 = (&mu - &problem.response) * 2.0;
        Ok(assemble(problem, objective, d1, w * 2.0))
    }

    fn score(&self, problem: &GlmProblem, mu: &MeanPoint) -> Result<DVector<f64>> {
        let resid = &problem.response - mu;
        Ok(match &problem.family {
            GlmFamily::GaussianKnownCov { cov } => {
                problem.design.transpose() * MetricSpec::new(cov.clone(), Anchor::Theta)?.solve_vec(&resid)
            }
            _ => problem.design.transpose() * resid,
        })
    }
}

/// Minimum Pearson χ²: minimizes Σ (y−μ)²/V(μ).
///
/// Both non-Gaussian families admit the decomposition
/// `(y−μ)²/V(μ) = y²/μ + (t−y)²/(t−μ) − t` (binomial) or `y²/μ + μ − 2y`
/// (Poisson), which is convex in the canonical parameter.
pub struct MinimumPearson;

impl MinimumPearson {
    fn pieces(problem: &GlmProblem, mu: &MeanPoint) -> Result<(f64, DVector<f64>, DVector<f64>)> {
        problem.family.validate_mean(mu)?;
        let y = &problem.response;
        let n = y.len();
        let mut obj = 0.0;
        let mut d1 = DVector::zeros(n);
        let mut d2 = DVector::zeros(n);
        match &problem.family {
            GlmFamily::PoissonLog => {
                for i in 0..n {
                    let (m, v) = (mu[i], y[i]);
                    obj += (v - m) * (v - m) / m;
                    d1[i] = m - v * v / m;
                    d2[i] = m + v * v / m;
                }
            }
            GlmFamily::BinomialLogit { trials } => {
                for i in 0..n {
                    let t = trials[i];
                    let (pi, p) = (mu[i] / t, y[i] / t);
                    let odds = pi / (1.0 - pi);
                    obj += t * (p - pi) * (p - pi) / (pi * (1.0 - pi));
                    let a = (1.0 - p) * (1.0 - p) * odds;
                    let b = p * p / odds;
                    d1[i] = t * (a - b);
                    d2[i] = t * (a + b);
                }
            }
            GlmFamily::GaussianKnownCov { .. } => unreachable!("gaussian fits are closed form"),
        }
        Ok((obj, d1, d2))
    }
}

impl Named for MinimumPearson {
    fn name(&self) -> &'static str {
        "pearson"
    }
}

impl FitPrinciple for MinimumPearson {
    fn objective(&self, problem: &GlmProblem, mu: &MeanPoint) -> Result<f64> {
        let metric = problem.family.covariance_at(mu, Anchor::Theta)?;
        divergence::ssd(&problem.response, mu, &metric)
    }

    fn local_model(&self, problem: &GlmProblem, beta: &DVector<f64>) -> Result<LocalModel> {
        let mu = problem.mean(beta);
        let (obj, d1, d2) = Self::pieces(problem, &mu)?;
        Ok(assemble(problem, obj, d1, d2))
    }

    fn score(&self, problem: &GlmProblem, mu: &MeanPoint) -> Result<DVector<f64>> {
        if let GlmFamily::GaussianKnownCov { .. } = problem.family {
            return MaximumLikelihood.score(problem, mu);
        }
        let (_, d1, _) = Self::pieces(problem, mu)?;
        Ok(problem.design.transpose() * d1)
    }
}

/// Generalized least squares with the metric frozen at the data: minimizes
/// the Neyman statistic Σ (μ−y)²/V(y).
pub struct NeymanGls;

impl NeymanGls {
    fn data_variance(problem: &GlmProblem) -> Result<DVector<f64>> {
        let y = &problem.response;
        let v: Vec<f64> = match &problem.family {
            GlmFamily::PoissonLog => y.iter().copied().collect(),
            GlmFamily::BinomialLogit { trials } => y.iter().zip(trials).map(|(v, t)| v * (t - v) / t).collect(),
            GlmFamily::GaussianKnownCov { cov } => cov.diagonal().iter().copied().collect(),
        };
        if let Some(i) = v.iter().position(|x| !(*x > 0.0)) {
            return Err(Error::InvalidFamilyPoint {
                family: problem.family.name(),
                reason: format!(
                    "metric anchored at the data is singular (response {} at index {i}); \
                     GLS needs every count strictly inside its range",
                    y[i]
                ),
            });
        }
        Ok(DVector::from_vec(v))
    }

    /// μ'(η) and μ''(η) for the canonical links.
    fn link_derivatives(problem: &GlmProblem, mu: &MeanPoint) -> (DVector<f64>, DVector<f64>) {
        let d1 = problem.family.mean_derivative(mu);
        let d2 = match &problem.family {
            GlmFamily::BinomialLogit { trials } => DVector::from_iterator(
                mu.len(),
                mu.iter().zip(trials).zip(d1.iter()).map(|((m, t), g)| g * (1.0 - 2.0 * m / t)),
            ),
            GlmFamily::PoissonLog => d1.clone(),
            GlmFamily::GaussianKnownCov { .. } => DVector::zeros(mu.len()),
        };
        (d1, d2)
    }
}

impl Named for NeymanGls {
    fn name(&self) -> &'static str {
        "gls"
    }
}

impl FitPrinciple for NeymanGls {
    fn prepare(&self, problem: &GlmProblem) -> Result<()> {
        Self::data_variance(problem).map(|_| ())
    }

    fn objective(&self, problem: &GlmProblem, mu: &MeanPoint) -> Result<f64> {
        let metric = problem.family.covariance_at(&problem.response, Anchor::Lambda);
        let metric = match metric {
            Ok(m) => m,
            Err(_) => MetricSpec::diagonal(Self::data_variance(problem)?.as_slice(), Anchor::Lambda)?,
        };
        divergence::ssd(mu, &problem.response, &metric)
    }

    fn local_model(&self, problem: &GlmProblem, beta: &DVector<f64>) -> Result<LocalModel> {
        let v = Self::data_variance(problem)?;
        let mu = problem.mean(beta);
        problem.family.validate_mean(&mu)?;
        let (g1, g2) = Self::link_derivatives(problem, &mu);
        let r = &mu - &problem.response;
        let obj = r.iter().zip(v.iter()).map(|(a, b)| a * a / b).sum();
        let d1 = DVector::from_iterator(r.len(), (0..r.len()).map(|i| 2.0 * r[i] * g1[i] / v[i]));
        let full = DVector::from_iterator(r.len(), (0..r.len()).map(|i| 2.0 * (g1[i] * g1[i] + r[i] * g2[i]) / v[i]));
        let model = assemble(problem, obj, d1.clone(), full);
        if linalg::gram_factor(model.hessian.clone()).is_ok() {
            return Ok(model);
        }
        // Gauss-Newton surrogate where the full Hessian is indefinite.
        let gn = DVector::from_iterator(r.len(), (0..r.len()).map(|i| 2.0 * g1[i] * g1[i] / v[i]));
        Ok(assemble(problem, obj, d1, gn))
    }

    fn score(&self, problem: &GlmProblem, mu: &MeanPoint) -> Result<DVector<f64>> {
        if let GlmFamily::GaussianKnownCov { .. } = problem.family {
            return MaximumLikelihood.score(problem, mu);
        }
        let v = Self::data_variance(problem)?;
        let (g1, _) = Self::link_derivatives(problem, mu);
        let w = DVector::from_iterator(mu.len(), (0..mu.len()).map(|i| g1[i] * (problem.response[i] - mu[i]) / v[i]));
        Ok(problem.design.transpose() * w)
    }
}

/// Registry holding `ml`, `pearson` and `gls`.
pub fn fit_principles() -> Registry<dyn FitPrinciple> {
    let mut reg: Registry<dyn FitPrinciple> = Registry::empty("fitting principle");
    reg.register(Box::new(MaximumLikelihood))
        .register(Box::new(MinimumPearson))
        .register(Box::new(NeymanGls));
    reg
}

/// Fits `problem` under the named principle with default settings.
pub fn fit(problem: &GlmProblem, principle: &str) -> Result<FitResult> {
    fit_principles().get(principle)?.fit(problem, &FitConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn intercept(n: usize) -> DMatrix<f64> {
        DMatrix::from_element(n, 1, 1.0)
    }

    #[test]
    fn poisson_intercept_mle_is_mean() {
        let p = GlmProblem::new(GlmFamily::PoissonLog, intercept(2), col(&[1.0, 3.0])).unwrap();
        let f = fit(&p, "ml").unwrap();
        assert!(f.converged);
        assert!((f.beta[0] - 2f64.ln()).abs() < 1e-12);
        assert!((f.mu_vec() - col(&[2.0, 2.0])).amax() < 1e-12);
    }

    #[test]
    fn saturated_fit_reproduces_data() {
        let y = col(&[2.0, 5.0, 1.0]);
        for principle in ["ml", "pearson", "gls"] {
            let p = GlmProblem::new(GlmFamily::PoissonLog, DMatrix::identity(3, 3), y.clone()).unwrap();
            let f = fit(&p, principle).unwrap();
            assert!((f.mu_vec() - &y).amax() < 1e-9, "{principle}");
            assert!(f.objective < 1e-12);
        }
    }

    #[test]
    fn gaussian_principles_coincide() {
        let fam = GlmFamily::gaussian(DMatrix::identity(2, 2)).unwrap();
        let p = GlmProblem::new(fam, intercept(2), col(&[1.0, -1.0])).unwrap();
        for principle in ["ml", "pearson", "gls"] {
            let f = fit(&p, principle).unwrap();
            assert!(f.beta[0].abs() < 1e-15);
            assert!(f.mu_vec().amax() < 1e-15);
        }
    }

    #[test]
    fn score_certificates() {
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0]);
        let y = col(&[1.0, 3.0, 2.0, 6.0, 9.0]);
        let p = GlmProblem::new(GlmFamily::PoissonLog, x.clone(), y).unwrap();
        let reg = fit_principles();
        for name in reg.names() {
            let principle = reg.get(name).unwrap();
            let f = principle.fit(&p, &FitConfig::default()).unwrap();
            let s = principle.score(&p, &f.mu_vec()).unwrap();
            assert!(s.amax() <= p.score_tolerance(), "{name}: {}", s.amax());
            let xt_resid = x.transpose() * (&p.response - f.mu_vec());
            if name == "ml" {
                assert!(xt_resid.amax() <= 1e-10 * 30.0);
            }
        }
    }

    #[test]
    fn pearson_fit_is_a_minimum() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let fam = GlmFamily::binomial(vec![10.0; 4]).unwrap();
        let p = GlmProblem::new(fam, x, col(&[2.0, 3.0, 7.0, 6.0])).unwrap();
        let f = fit(&p, "pearson").unwrap();
        let best = MinimumPearson.objective(&p, &f.mu_vec()).unwrap();
        assert!((best - f.objective).abs() < 1e-12);
        for db in [[1e-4, 0.0], [0.0, -1e-4], [-1e-4, 1e-4]] {
            let b = f.beta_vec() + col(&db);
            let other = MinimumPearson.objective(&p, &p.mean(&b)).unwrap();
            assert!(other > best);
        }
        // differs from the MLE on this instance
        let ml = fit(&p, "ml").unwrap();
        assert!((ml.beta_vec() - f.beta_vec()).amax() > 1e-4);
    }

    #[test]
    fn gls_rejects_zero_counts() {
        let p = GlmProblem::new(GlmFamily::PoissonLog, intercept(3), col(&[0.0, 2.0, 3.0])).unwrap();
        assert!(matches!(fit(&p, "gls"), Err(Error::InvalidFamilyPoint { .. })));
        assert!(fit(&p, "ml").is_ok());
    }

    #[test]
    fn separation_does_not_converge() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, -2.0, 1.0, -1.0, 1.0, 1.0, 1.0, 2.0]);
        let fam = GlmFamily::binomial(vec![1.0; 4]).unwrap();
        let p = GlmProblem::new(fam, x, col(&[0.0, 0.0, 1.0, 1.0])).unwrap();
        let err = fit(&p, "ml").unwrap_err();
        assert!(err.is_numerical(), "{err:?}");
    }

    #[test]
    fn rank_deficient_design() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let p = GlmProblem::new(GlmFamily::PoissonLog, x, col(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(fit(&p, "ml").unwrap_err(), Error::SingularDesign);
    }

    #[test]
    fn unknown_principle() {
        let p = GlmProblem::new(GlmFamily::PoissonLog, intercept(2), col(&[1.0, 3.0])).unwrap();
        assert!(matches!(fit(&p, "bayes"), Err(Error::UnknownStrategy { .. })));
    }
}
