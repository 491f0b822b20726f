//! Out-of-sample metrics, drought classes and report tables.

mod metrics;
mod report;

pub use metrics::{
    accuracy, auroc_binary, classify_vci3m, compute_metrics, drought_auroc, drought_exact_agreement, error_metrics,
    moderate_extreme_recall, r2, r2_determination, DroughtClass, ErrorMetrics, MetricsRecord, MAPE_FLOOR,
};
pub use report::{emit_report, evaluate, Approach, ApproachResult, OVERALL};
