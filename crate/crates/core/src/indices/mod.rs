//! Derived modelling variables and the supervised dataset.

pub mod catalog;
mod standardized;
mod supervised;
mod transform;
mod variables;

pub use catalog::{
    precip_name, precipitation_entries, Category, Derivation, SourceTag, StdDistribution, VariableCatalog,
    VariableEntry, PRECIP_ROLES, TARGET,
};
pub use standardized::{
    fit_gamma, fit_log_logistic, fit_standardized_index, pwm_alpha, SlotDiagnostic, SlotParams, SpiFit, MIN_FIT_OBS,
    Z_CLAMP,
};
pub use supervised::{build_supervised, build_supervised_columns, SupervisedDataset};
pub use transform::{lag, relative_range, rolling_mean, FitWindow, RelativeRangeParams, Slotting};
pub use variables::{build_variable_set, fit_variable_transforms, in_sample_windows, IndexConfig, VariableFits};

/// Base column names in input tables.
pub mod base {
    pub const NDVI: &str = "NDVI";
    /// Last intra-month (dekadal) NDVI value.
    pub const NDVI_DEKAD: &str = "NDVI_DEKAD";
    /// Rainfall estimate from the primary source.
    pub const RFE: &str = "RFE";
    /// Rainfall estimate from the alternate source.
    pub const RFE_ALT: &str = "RFE_ALT";
    pub const LST: &str = "LST";
    pub const EVT: &str = "EVT";
    pub const PET: &str = "PET";

    pub const ALL: [&str; 7] = [NDVI, NDVI_DEKAD, RFE, RFE_ALT, LST, EVT, PET];
}
