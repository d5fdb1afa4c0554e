//! P-value functions, S-value curves and π-compatibility intervals, obtained
//! by scanning a scalar target parameter β.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypotest::{p_value_methods, point_p, GaussianSummary, HypothesisRegion, PValueMethod};
use crate::serde_ext::extended_f64;

/// Source of the P-value p(β) for the model M_β.
///
/// Implementations must be pure: the same β always gives the same P-value,
/// whatever thread asks.
pub trait CompatEngine: Send + Sync {
    fn p_value(&self, beta: f64) -> Result<f64>;

    /// Location of the maximum of p(β).
    fn estimate(&self) -> f64;

    /// Natural step length in β (a standard error).
    fn scale(&self) -> f64;
}

/// H_β: μ = β under the normal-mean model.
pub struct NormalMeanEngine {
    pub summary: GaussianSummary,
}

impl CompatEngine for NormalMeanEngine {
    fn p_value(&self, beta: f64) -> Result<f64> {
        Ok(point_p(&self.summary, beta)?.p)
    }

    fn estimate(&self) -> f64 {
        self.summary.mean_hat
    }

    fn scale(&self) -> f64 {
        1.0 / self.summary.precision_scale()
    }
}

/// H_β: β − w ≤ μ ≤ β + w, evaluated with a registered P-value method.
/// With the `hl` method this gives the decision-based region, with
/// `divergence` the compatibility region, so the two can be compared.
pub struct IntervalEngine {
    pub summary: GaussianSummary,
    pub half_width: f64,
    method: Box<dyn PValueMethod>,
}

impl IntervalEngine {
    pub fn new(summary: GaussianSummary, half_width: f64, method: &str) -> Result<Self> {
        summary.validate()?;
        if !(half_width >= 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidInput(format!("half-width must be finite and >= 0, got {half_width}")));
        }
        let method: Box<dyn PValueMethod> = match method {
            "divergence" => Box::new(crate::hypotest::DivergenceMethod),
            "hl" => Box::new(crate::hypotest::HlUmpuMethod),
            other => {
                // Surfaces the registry's error for unknown names.
                p_value_methods().get(other)?;
                return Err(Error::Unsupported(format!("method `{other}` does not apply to intervals")));
            }
        };
        Ok(Self { summary, half_width, method })
    }
}

impl CompatEngine for IntervalEngine {
    fn p_value(&self, beta: f64) -> Result<f64> {
        let h = HypothesisRegion::interval(beta - self.half_width, beta + self.half_width)?;
        Ok(self.method.p_value(&self.summary, &h)?.p)
    }

    fn estimate(&self) -> f64 {
        self.summary.mean_hat
    }

    fn scale(&self) -> f64 {
        1.0 / self.summary.precision_scale()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl GridSpec {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.steps < 2 || !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid needs finite lo < hi and steps >= 2, got [{}, {}] x {}",
                self.lo, self.hi, self.steps
            )));
        }
        let last = (self.steps - 1) as f64;
        let mut pts: Vec<f64> =
            (0..self.steps).map(|i| self.lo + (self.hi - self.lo) * (i as f64) / last).collect();
        pts[self.steps - 1] = self.hi;
        if pts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("grid is too fine to be strictly increasing".into()));
        }
        Ok(pts)
    }
}

/// p(β) and its binary S-value on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatCurve {
    pub grid: Vec<f64>,
    pub p: Vec<f64>,
    pub s2: Vec<f64>,
}

impl CompatCurve {
    /// CSV with header `beta,p,s2`, 17 significant digits per number.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("beta,p,s2\n");
        for i in 0..self.grid.len() {
            out.push_str(&format!("{},{},{}\n", fmt_sci(self.grid[i]), fmt_sci(self.p[i]), fmt_sci(self.s2[i])));
        }
        out
    }
}

/// Scientific notation with 17 significant digits; `inf` for infinities.
pub fn fmt_sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Evaluates p(β) on the grid (in parallel; output is order-stable).
pub fn pvalue_function(engine: &dyn CompatEngine, grid: &GridSpec) -> Result<CompatCurve> {
    let pts = grid.points()?;
    let p = pts.par_iter().map(|&b| engine.p_value(b)).collect::<Result<Vec<_>>>()?;
    let s2 = p.iter().map(|&v| if v == 0.0 { f64::INFINITY } else { (-v.log2()).max(0.0) }).collect();
    Ok(CompatCurve { grid: pts, p, s2 })
}

/// The closed π-compatibility set {β : p(β) ≥ π}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatInterval {
    pub pi: f64,
    #[serde(with = "extended_f64")]
    pub lo: f64,
    #[serde(with = "extended_f64")]
    pub hi: f64,
    pub empty: bool,
}

impl CompatInterval {
    pub fn contains(&self, beta: f64) -> bool {
        !self.empty && self.lo <= beta && beta <= self.hi
    }
}

const TARGET_TOL: f64 = 1e-10;

/// Walks from the peak in `direction` (±1) to the last β with p(β) ≥ π.
fn flank(engine: &dyn CompatEngine, pi: f64, direction: f64) -> Result<f64> {
    let peak = engine.estimate();
    let step = engine.scale();
    let at = |offset: f64| engine.p_value(peak + direction * offset);
    let mut inside = 0.0;
    let mut outside = step;
    loop {
        if at(outside)? < pi {
            break;
        }
        inside = outside;
        outside *= 2.0;
        if !(peak + direction * outside).is_finite() {
            return Ok(direction * f64::INFINITY);
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (inside + outside);
        if mid <= inside || mid >= outside {
            break;
        }
        let p = at(mid)?;
        if p >= pi {
            inside = mid;
            if p - pi <= TARGET_TOL && outside - inside <= 1e-13 * inside.max(step) {
                break;
            }
        } else {
            outside = mid;
        }
    }
    Ok(peak + direction * inside)
}

/// π-compatibility interval for a unimodal engine, endpoints located by
/// bisection on each flank.
///
/// The set reported is closed ({β : p(β) ≥ π}); the strict-inequality set
/// differs from it only at the two endpoints.
pub fn compatibility_interval(engine: &dyn CompatEngine, pi: f64) -> Result<CompatInterval> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::Domain(format!("pi must lie in (0, 1), got {pi}")));
    }
    let peak = engine.estimate();
    if pi > engine.p_value(peak)? {
        return Ok(CompatInterval { pi, lo: peak, hi: peak, empty: true });
    }
    let lo = flank(engine, pi, -1.0)?;
    let hi = flank(engine, pi, 1.0)?;
    Ok(CompatInterval { pi, lo, hi, empty: false })
}
