//! Divergence geometry for canonical-link GLMs: fitting principles, fit
//! statistics against the saturated model, nested-model comparisons and
//! simultaneous P-values.

mod family;
mod fit;
mod nested;
mod scheffe;
mod stats;

pub use family::GlmFamily;
pub use fit::{
    fit, fit_principles, FitConfig, FitPrinciple, FitResult, GlmProblem, LocalModel, MaximumLikelihood,
    MinimumPearson, NeymanGls,
};
pub use nested::{
    fit_and_compare, nested_compare, nested_tests, LikelihoodRatio, NestedComparison, NestedFits, NestedTest,
    Score, Wald, WaldAnchor, NESTING_TOLERANCE,
};
pub use scheffe::{scheffe_simultaneous, ScheffeResult};
pub use stats::{fit_statistics, FitStatistics};
