//! Gating, membership selection and combination of bagged base models.

mod combine;
mod gate;
mod select;
mod spec;
mod stacker;

pub use combine::{combine_simple, combine_weighted, combine_with_weights, score_weights};
pub use gate::{gate_models, overfit_index, GateConfig, GateDecision, GateOutcome, GateVerdict};
pub use select::{select_members, write_audit_log, AuditStep, Phase, Selection, SELECTION_RULE, TIE_TOLERANCE};
pub use spec::{
    build_spec, combine_columns, members_for, oof_columns, predict_ensemble, select_formulas, Combiner, EnsembleConfig,
    EnsembleMode, EnsembleSpec, MemberRef,
};
pub use stacker::{train_stacker, Stacker, StackerConfig};
