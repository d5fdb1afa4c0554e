use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::divergence::{Anchor, MetricSpec};
use crate::error::{Error, Result};
use crate::statdist::{chi2_upper_tail, ChiSquareDf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheffeResult {
    /// n·ȳᵀΣ⁻¹ȳ, the squared standardized distance of ȳ from the origin.
    pub statistic: f64,
    pub df: u32,
    pub p_joint: f64,
    pub p_components: Vec<f64>,
}

/// Simultaneous P-value for μ = 0 from J-variate normal means with known
/// covariance, alongside the J single-component P-values.
pub fn scheffe_simultaneous(ybar: &[f64], sigma: &DMatrix<f64>, n: u64) -> Result<ScheffeResult> {
    let j = ybar.len();
    if j == 0 {
        return Err(Error::InvalidInput("empty mean vector".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    if sigma.nrows() != j || sigma.ncols() != j {
        return Err(Error::DimensionMismatch { expected: j, got: sigma.nrows() });
    }
    if ybar.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("means must be finite".into()));
    }
    let metric = MetricSpec::new(sigma.clone(), Anchor::Theta)?;
    let y = DVector::from_column_slice(ybar);
    let nf = n as f64;
    let statistic = nf * metric.quad_form(&y)?;
    let df = u32::try_from(j).map_err(|_| Error::InvalidInput("too many components".into()))?;
    let p_joint = chi2_upper_tail(statistic, ChiSquareDf::new(df)?)?;
    let p_components = (0..j)
        .map(|i| chi2_upper_tail(nf * ybar[i] * ybar[i] / sigma[(i, i)], ChiSquareDf::ONE))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScheffeResult { statistic, df, p_joint, p_components })
}
