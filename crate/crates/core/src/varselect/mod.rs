//! Variable-selection statistics and the rainfall-source decision.

mod correlation;
mod regression;
mod shapiro;
mod sources;

pub use correlation::spearman;
pub use regression::{
    aic_linear, lmg_importance, stepwise_bidirectional, RegressionData, StepMove, StepwiseResult, RSS_FLOOR,
};
pub use shapiro::{shapiro_wilk, NormalityResult};
pub use sources::{compare_sources, write_source_report, SourceDecision, VariableEvidence, DEFAULT_ALPHA};
