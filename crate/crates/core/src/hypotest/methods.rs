use super::{
    hl_umpu_p, interval_divergence_p, nonequivalence_divergence_p, tost_p, GaussianSummary, HypothesisRegion,
    PValueReport,
};
use crate::error::{Error, Result};
use crate::registry::{Named, Registry};

/// A P-value definition for hypotheses about a normal mean.
pub trait PValueMethod: Named + Send + Sync {
    fn p_value(&self, s: &GaussianSummary, h: &HypothesisRegion) -> Result<PValueReport>;
}

/// Divergence (max-p) P-values; handles every region kind.
pub struct DivergenceMethod;

impl Named for DivergenceMethod {
    fn name(&self) -> &'static str {
        "divergence"
    }
}

impl PValueMethod for DivergenceMethod {
    fn p_value(&self, s: &GaussianSummary, h: &HypothesisRegion) -> Result<PValueReport> {
        match h {
            HypothesisRegion::Nonequivalence { .. } => nonequivalence_divergence_p(s, h),
            _ => interval_divergence_p(s, h),
        }
    }
}

/// Hodges-Lehmann UMPU decision P-value; points and finite intervals.
pub struct HlUmpuMethod;

impl Named for HlUmpuMethod {
    fn name(&self) -> &'static str {
        "hl"
    }
}

impl PValueMethod for HlUmpuMethod {
    fn p_value(&self, s: &GaussianSummary, h: &HypothesisRegion) -> Result<PValueReport> {
        hl_umpu_p(s, h)
    }
}

/// Two one-sided tests; nonequivalence regions only.
pub struct TostMethod;

impl Named for TostMethod {
    fn name(&self) -> &'static str {
        "tost"
    }
}

impl PValueMethod for TostMethod {
    fn p_value(&self, s: &GaussianSummary, h: &HypothesisRegion) -> Result<PValueReport> {
        match *h {
            HypothesisRegion::Nonequivalence { lo, hi } => tost_p(s, lo, hi),
            _ => Err(Error::Unsupported("TOST applies to nonequivalence hypotheses only".into())),
        }
    }
}

/// Registry holding `divergence`, `hl` and `tost`.
pub fn p_value_methods() -> Registry<dyn PValueMethod> {
    let mut reg: Registry<dyn PValueMethod> = Registry::empty("P-value method");
    reg.register(Box::new(DivergenceMethod))
        .register(Box::new(HlUmpuMethod))
        .register(Box::new(TostMethod));
    reg
}
