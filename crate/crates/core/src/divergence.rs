//! Divergences on mean space and projections onto hypothesis regions.
//!
//! Two divergences are provided: the standardized sum of squared deviations
//! [`ssd`], whose metric must be anchored explicitly by the caller, and the
//! family [`deviance`] (twice the Kullback-Leibler divergence). Projections
//! minimize a divergence over an interval or a linear span.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glmgeom::GlmFamily;
use crate::linalg;

/// A candidate mean vector (μ, λ or θ).
pub type MeanPoint = DVector<f64>;

/// Which argument of a divergence supplies the covariance scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// Scaling evaluated at the first argument λ.
    Lambda,
    /// Scaling evaluated at the second argument θ.
    Theta,
}

/// A positive-definite covariance used as the metric of an SSD, held
/// together with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    cov: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    anchor: Anchor,
}

impl MetricSpec {
    pub fn new(cov: DMatrix<f64>, anchor: Anchor) -> Result<Self> {
        let factor = linalg::spd_factor(&cov)?;
        Ok(Self { cov, factor, anchor })
    }

    /// Diagonal metric from per-coordinate variances.
    pub fn diagonal(variances: &[f64], anchor: Anchor) -> Result<Self> {
        if variances.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(variances)), anchor)
    }

    pub fn identity(dim: usize, anchor: Anchor) -> Self {
        Self::new(DMatrix::identity(dim, dim), anchor).expect("identity is positive definite")
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn anchor(&self) -> Anchor {
        self.anchor
    }

    /// vᵀ Σ⁻¹ v through the triangular factor.
    pub fn quad_form(&self, v: &DVector<f64>) -> Result<f64> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        let w = self
            .factor
            .l_dirty()
            .solve_lower_triangular(v)
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(w.norm_squared().max(0.0))
    }

    /// Σ⁻¹ B.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.factor.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Ssd,
    KldDeviance,
}

/// A minimized divergence together with its minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub value: f64,
    pub minimizer: MeanPoint,
    pub kind: DivergenceKind,
}

fn check_same_len(a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("mean points must be finite".into()));
    }
    Ok(())
}

/// Squared Σ-standardized Euclidean distance (λ−θ)ᵀ Σ⁻¹ (λ−θ).
pub fn ssd(lambda: &MeanPoint, theta: &MeanPoint, metric: &MetricSpec) -> Result<f64> {
    check_same_len(lambda, theta)?;
    metric.quad_form(&(lambda - theta))
}

/// Twice the Kullback-Leibler divergence of the θ-indexed distribution from
/// the λ-indexed one, `dev(θ; λ)`.
///
/// Uses 0·ln(0) = 0, so λ may sit on the closure of the mean space while θ
/// must be interior.
pub fn deviance(theta: &MeanPoint, lambda: &MeanPoint, family: &GlmFamily) -> Result<f64> {
    check_same_len(theta, lambda)?;
    family.deviance(theta, lambda)
}

/// Closest point of `[lo, hi]` to `x`; either end may be infinite.
pub fn project_interval(x: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo.is_nan() || hi.is_nan() || x.is_nan() {
        return Err(Error::InvalidInput("interval projection got NaN".into()));
    }
    if lo > hi {
        return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
    }
    Ok(x.clamp(lo, hi))
}

/// Σ⁻¹-orthogonal projection of `y` onto the column span of `design`.
pub fn project_linear(y: &MeanPoint, design: &DMatrix<f64>, metric: &MetricSpec) -> Result<DivergenceReport> {
    if design.nrows() != y.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), got: design.nrows() });
    }
    if metric.dim() != y.len() {
        return Err(Error::DimensionMismatch { expected: y.len(), got: metric.dim() });
    }
    if design.ncols() == 0 || design.ncols() > design.nrows() {
        return Err(Error::SingularDesign);
    }
    let weighted = metric.solve(design);
    let gram = design.transpose() * &weighted;
    let gram = (&gram + gram.transpose()) * 0.5;
    let chol = linalg::gram_factor(gram)?;
    let beta = chol.solve(&(weighted.transpose() * y));
    let minimizer = design * beta;
    let value = ssd(y, &minimizer, metric)?;
    Ok(DivergenceReport { value, minimizer, kind: DivergenceKind::Ssd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn ssd_examples() {
        let id = MetricSpec::identity(2, Anchor::Theta);
        assert_eq!(ssd(&v(&[1.0, 2.0]), &v(&[1.0, 2.0]), &id).unwrap(), 0.0);
        assert_eq!(ssd(&v(&[1.0, -1.0]), &v(&[0.0, 0.0]), &id).unwrap(), 2.0);
        let m = MetricSpec::new(DMatrix::from_element(1, 1, 4.0), Anchor::Theta).unwrap();
        assert!((ssd(&v(&[2.0]), &v(&[0.0]), &m).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ssd_errors() {
        let id = MetricSpec::identity(2, Anchor::Theta);
        assert!(matches!(
            ssd(&v(&[1.0]), &v(&[0.0, 0.0]), &id),
            Err(Error::DimensionMismatch { .. })
        ));
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(MetricSpec::new(bad, Anchor::Theta).unwrap_err(), Error::NotPositiveDefinite);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(MetricSpec::new(asym, Anchor::Theta).is_err());
    }

    #[test]
    fn deviance_examples() {
        let pois = GlmFamily::PoissonLog;
        assert_eq!(deviance(&v(&[2.0, 3.0]), &v(&[2.0, 3.0]), &pois).unwrap(), 0.0);
        let d = deviance(&v(&[2.0, 2.0]), &v(&[1.0, 3.0]), &pois).unwrap();
        assert!((d - 1.046_496_287_529_095_7).abs() < 1e-12);
        let gauss = GlmFamily::gaussian(DMatrix::identity(2, 2)).unwrap();
        let d = deviance(&v(&[0.0, 0.0]), &v(&[1.0, -1.0]), &gauss).unwrap();
        assert!((d - 2.0).abs() < 1e-15);
    }

    #[test]
    fn deviance_zero_convention_and_errors() {
        let pois = GlmFamily::PoissonLog;
        // λ = 0 contributes 2θ.
        let d = deviance(&v(&[1.5]), &v(&[0.0]), &pois).unwrap();
        assert!((d - 3.0).abs() < 1e-15);
        assert!(matches!(
            deviance(&v(&[0.0]), &v(&[1.0]), &pois),
            Err(Error::InvalidFamilyPoint { .. })
        ));
    }

    #[test]
    fn poisson_deviance_is_asymmetric() {
        let pois = GlmFamily::PoissonLog;
        let a = v(&[1.0, 3.0]);
        let b = v(&[2.0, 2.0]);
        let ab = deviance(&a, &b, &pois).unwrap();
        let ba = deviance(&b, &a, &pois).unwrap();
        assert!((ab - ba).abs() > 1e-3);
    }

    #[test]
    fn interval_projection() {
        assert_eq!(project_interval(2.5, -1.0, 1.0).unwrap(), 1.0);
        assert_eq!(project_interval(0.0, -1.0, 1.0).unwrap(), 0.0);
        assert_eq!(project_interval(-3.0, -1.0, f64::INFINITY).unwrap(), -1.0);
        assert!(project_interval(0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn linear_projection_examples() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let id = MetricSpec::identity(2, Anchor::Theta);
        let r = project_linear(&v(&[1.0, -1.0]), &x, &id).unwrap();
        assert!(r.minimizer.norm() < 1e-15);
        assert!((r.value - 2.0).abs() < 1e-14);
        let r = project_linear(&v(&[1.0, 3.0]), &x, &id).unwrap();
        assert!((r.minimizer - v(&[2.0, 2.0])).norm() < 1e-14);
        assert!((r.value - 2.0).abs() < 1e-14);
        let r = project_linear(&v(&[4.0, 4.0]), &x, &id).unwrap();
        assert!(r.value.abs() < 1e-14);
        assert!((r.minimizer - v(&[4.0, 4.0])).norm() < 1e-14);
    }

    #[test]
    fn linear_projection_rank_deficient() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let id = MetricSpec::identity(3, Anchor::Theta);
        assert_eq!(project_linear(&v(&[1.0, 2.0, 3.0]), &x, &id).unwrap_err(), Error::SingularDesign);
    }

    fn spd(n: usize, seed: &[f64]) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |i, j| seed[(i * n + j) % seed.len()]);
        a.transpose() * a + DMatrix::identity(n, n) * 0.5
    }

    proptest! {
        #[test]
        fn projection_residual_is_metric_orthogonal(
            ys in prop::collection::vec(-5.0f64..5.0, 5),
            xs in prop::collection::vec(-2.0f64..2.0, 10),
            ss in prop::collection::vec(-1.0f64..1.0, 25),
        ) {
            let y = DVector::from_vec(ys);
            let mut x = DMatrix::from_column_slice(5, 2, &xs);
            x.set_column(0, &DVector::from_element(5, 1.0));
            let metric = MetricSpec::new(spd(5, &ss), Anchor::Theta).unwrap();
            if let Ok(r) = project_linear(&y, &x, &metric) {
                let resid = &y - &r.minimizer;
                let score = x.transpose() * metric.solve_vec(&resid);
                prop_assert!(score.amax() <= 1e-10 * (1.0 + y.amax()));
                prop_assert!(r.value >= 0.0);
            }
        }

        #[test]
        fn nested_spans_give_larger_divergence(
            ys in prop::collection::vec(-5.0f64..5.0, 6),
            xs in prop::collection::vec(-2.0f64..2.0, 18),
            ss in prop::collection::vec(-1.0f64..1.0, 36),
        ) {
            let y = DVector::from_vec(ys);
            let big = DMatrix::from_column_slice(6, 3, &xs);
            let small = big.columns(0, 2).into_owned();
            let metric = MetricSpec::new(spd(6, &ss), Anchor::Theta).unwrap();
            if let (Ok(a), Ok(m)) = (project_linear(&y, &big, &metric), project_linear(&y, &small, &metric)) {
                prop_assert!(m.value >= a.value - 1e-10 * (1.0 + a.value));
            }
        }

        #[test]
        fn nested_intervals_give_larger_divergence(
            x in -10.0f64..10.0, c in -5.0f64..5.0, w1 in 0.0f64..3.0, extra in 0.0f64..3.0,
        ) {
            let inner = project_interval(x, c - w1, c + w1).unwrap();
            let outer = project_interval(x, c - w1 - extra, c + w1 + extra).unwrap();
            prop_assert!((x - inner).powi(2) >= (x - outer).powi(2));
        }

        #[test]
        fn ssd_nonnegative_zero_iff_equal(a in prop::collection::vec(-5.0f64..5.0, 3)) {
            let p = DVector::from_vec(a);
            let id = MetricSpec::identity(3, Anchor::Lambda);
            prop_assert_eq!(ssd(&p, &p, &id).unwrap(), 0.0);
            let q = &p + DVector::from_element(3, 1e-3);
            prop_assert!(ssd(&p, &q, &id).unwrap() > 0.0);
        }
    }
}
