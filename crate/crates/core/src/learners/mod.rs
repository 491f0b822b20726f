//! Base learners: RPROP networks and ε-SVR, bagged over repeated 70:30 splits.

mod ann;
mod bagged;
mod grid;
mod registry;
mod scaler;
mod svr;

pub use ann::{train_ann, train_rprop, AnnHyper, Network, RpropHyper, TrainOutcome, MIN_ANN_ROWS};
pub use bagged::{
    bagged_fit, bagged_fit_with_folds, BaggedModel, FoldPlan, LearnerConfig, Replicate, ReplicateModel, Technique,
};
pub use grid::{default_grid, grid_search_svr, singleton_vegetation, GridPoint, GridResult};
pub use registry::{load_model, model_file_name, save_model, ModelRegistry, MODEL_FORMAT, MODEL_VERSION};
pub use scaler::{fit_scaler, MinMax, Scaler};
pub use svr::{kernel_matrix, rbf, solve_smo, train_svr, EpsilonUnits, SmoSolution, SvrHyper, SvrModel};
