use nalgebra::{DMatrix, DVector};

use crate::divergence::{Anchor, MeanPoint, MetricSpec};
use crate::error::{Error, Result};
use crate::linalg;

/// Exponential-family response model with its canonical link.
///
/// Binomial means are expected counts in `(0, trials)`; with one trial per
/// row they are probabilities.
#[derive(Debug, Clone, PartialEq)]
pub enum GlmFamily {
    /// Normal responses with a known covariance and identity link.
    GaussianKnownCov { cov: DMatrix<f64> },
    /// Poisson counts with log link.
    PoissonLog,
    /// Binomial counts with logit link.
    BinomialLogit { trials: Vec<f64> },
}

impl GlmFamily {
    pub fn gaussian(cov: DMatrix<f64>) -> Result<Self> {
        linalg::spd_factor(&cov)?;
        Ok(Self::GaussianKnownCov { cov })
    }

    pub fn binomial(trials: Vec<f64>) -> Result<Self> {
        if trials.iter().any(|t| !(*t >= 1.0) || !t.is_finite() || t.fract() != 0.0) {
            return Err(Error::InvalidInput("binomial trials must be integers >= 1".into()));
        }
        Ok(Self::BinomialLogit { trials })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussianKnownCov { .. } => "gaussian",
            Self::PoissonLog => "poisson",
            Self::BinomialLogit { .. } => "binomial",
        }
    }

    /// Required length of mean vectors, when the family fixes one.
    pub fn fixed_len(&self) -> Option<usize> {
        match self {
            Self::GaussianKnownCov { cov } => Some(cov.nrows()),
            Self::PoissonLog => None,
            Self::BinomialLogit { trials } => Some(trials.len()),
        }
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        match self.fixed_len() {
            Some(m) if m != n => Err(Error::DimensionMismatch { expected: m, got: n }),
            _ => Ok(()),
        }
    }

    fn bad_point(&self, reason: String) -> Error {
        Error::InvalidFamilyPoint { family: self.name(), reason }
    }

    /// Checks that `mu` lies in the open mean space.
    pub fn validate_mean(&self, mu: &MeanPoint) -> Result<()> {
        self.check_len(mu.len())?;
        for (i, &m) in mu.iter().enumerate() {
            let ok = match self {
                Self::GaussianKnownCov { .. } => m.is_finite(),
                Self::PoissonLog => m > 0.0 && m.is_finite(),
                Self::BinomialLogit { trials } => m > 0.0 && m < trials[i],
            };
            if !ok {
                return Err(self.bad_point(format!("mean {m} at index {i} is outside the open mean space")));
            }
        }
        Ok(())
    }

    /// Checks that `y` is a possible observation (closure of the mean space).
    pub fn validate_response(&self, y: &DVector<f64>) -> Result<()> {
        self.check_len(y.len())?;
        for (i, &v) in y.iter().enumerate() {
            let ok = match self {
                Self::GaussianKnownCov { .. } => v.is_finite(),
                Self::PoissonLog => v >= 0.0 && v.is_finite(),
                Self::BinomialLogit { trials } => v >= 0.0 && v <= trials[i],
            };
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "response {v} at index {i} is invalid for the {} family",
                    self.name()
                )));
            }
        }
        Ok(())
    }

    /// Var(Y_i) at mean `mu` for the diagonal families.
    fn variance_diag(&self, mu: &MeanPoint) -> Vec<f64> {
        match self {
            Self::GaussianKnownCov { cov } => cov.diagonal().iter().copied().collect(),
            Self::PoissonLog => mu.iter().copied().collect(),
            Self::BinomialLogit { trials } => {
                mu.iter().zip(trials).map(|(m, t)| m * (t - m) / t).collect()
            }
        }
    }

    /// cov(Y; point) as a metric anchored at the given argument.
    pub fn covariance_at(&self, point: &MeanPoint, anchor: Anchor) -> Result<MetricSpec> {
        match self {
            Self::GaussianKnownCov { cov } => {
                self.check_len(point.len())?;
                MetricSpec::new(cov.clone(), anchor)
            }
            _ => {
                self.validate_mean(point)?;
                MetricSpec::diagonal(&self.variance_diag(point), anchor)
            }
        }
    }

    pub fn link(&self, mu: &MeanPoint) -> DVector<f64> {
        match self {
            Self::GaussianKnownCov { .. } => mu.clone(),
            Self::PoissonLog => mu.map(f64::ln),
            Self::BinomialLogit { trials } => {
                DVector::from_iterator(mu.len(), mu.iter().zip(trials).map(|(m, t)| (m / (t - m)).ln()))
            }
        }
    }

    pub fn inverse_link(&self, eta: &DVector<f64>) -> MeanPoint {
        match self {
            Self::GaussianKnownCov { .. } => eta.clone(),
            Self::PoissonLog => eta.map(f64::exp),
            Self::BinomialLogit { trials } => DVector::from_iterator(
                eta.len(),
                eta.iter().zip(trials).map(|(e, t)| {
                    if *e >= 0.0 {
                        t / (1.0 + (-e).exp())
                    } else {
                        let z = e.exp();
                        t * z / (1.0 + z)
                    }
                }),
            ),
        }
    }

    /// dμ/dη at `mu`; for canonical links this equals the variance function.
    pub fn mean_derivative(&self, mu: &MeanPoint) -> DVector<f64> {
        match self {
            Self::GaussianKnownCov { .. } => DVector::from_element(mu.len(), 1.0),
            _ => DVector::from_vec(self.variance_diag(mu)),
        }
    }

    /// Weight matrix W with cov(β̂) = (XᵀWX)⁻¹ at `mu`.
    pub(crate) fn information_weights(&self, mu: &MeanPoint) -> Result<DMatrix<f64>> {
        match self {
            Self::GaussianKnownCov { cov } => {
                let f = linalg::spd_factor(cov)?;
                Ok(f.inverse())
            }
            _ => {
                self.validate_mean(mu)?;
                Ok(DMatrix::from_diagonal(&DVector::from_vec(self.variance_diag(mu))))
            }
        }
    }

    /// dev(θ; λ) = 2·KLD of the θ-indexed distribution from the λ-indexed one.
    pub fn deviance(&self, theta: &MeanPoint, lambda: &MeanPoint) -> Result<f64> {
        self.validate_mean(theta)?;
        self.check_len(lambda.len())?;
        let d = match self {
            Self::GaussianKnownCov { cov } => {
                let metric = MetricSpec::new(cov.clone(), Anchor::Theta)?;
                metric.quad_form(&(lambda - theta))?
            }
            Self::PoissonLog => {
                let mut acc = 0.0;
                for (&t, &l) in theta.iter().zip(lambda.iter()) {
                    if !(l >= 0.0) || !l.is_finite() {
                        return Err(self.bad_point(format!("reference mean {l} is negative")));
                    }
                    acc += xlogy_ratio(l, t) - (l - t);
                }
                2.0 * acc
            }
            Self::BinomialLogit { trials } => {
                let mut acc = 0.0;
                for ((&t, &l), &n) in theta.iter().zip(lambda.iter()).zip(trials) {
                    if !(l >= 0.0 && l <= n) {
                        return Err(self.bad_point(format!("reference mean {l} is outside [0, {n}]")));
                    }
                    acc += xlogy_ratio(l, t) + xlogy_ratio(n - l, n - t);
                }
                2.0 * acc
            }
        };
        Ok(d.max(0.0))
    }
}

/// x·ln(x/y) with 0·ln(0/y) = 0.
fn xlogy_ratio(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}
