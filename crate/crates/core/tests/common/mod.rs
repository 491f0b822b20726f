#![allow(dead_code)]

pub mod oracles;

use vcistack::data::{generate_synthetic, holdout_starts, SplitPlan, SynthConfig};
use vcistack::indices::{
    base, build_supervised, build_variable_set, fit_variable_transforms, in_sample_windows, IndexConfig, SourceTag,
    SupervisedDataset, VariableCatalog,
};

pub fn catalog() -> VariableCatalog {
    VariableCatalog::study(SourceTag::Tamsat, base::RFE, true)
}

/// In-sample and out-of-sample supervised rows of a default synthetic panel.
pub fn synthetic_split(seed: u64) -> (SupervisedDataset, SupervisedDataset) {
    let table = generate_synthetic(&SynthConfig { seed, ..SynthConfig::default() }).unwrap();
    let plan = SplitPlan { seed, ..SplitPlan::default() };
    let starts = holdout_starts(&table, &plan).unwrap();
    let cat = catalog();
    let windows = in_sample_windows(&table, &starts).unwrap();
    let fits = fit_variable_transforms(&table, &cat, &windows, &IndexConfig::default()).unwrap();
    let vars = build_variable_set(&table, &cat, &fits).unwrap();
    let ds = build_supervised(&vars, &cat, 1).unwrap();
    ds.split_by_target(&starts).unwrap()
}

/// Desk-check sized run: two units, two repeats, short ANN schedule.
pub fn small_config(out: &std::path::Path, seed: u64) -> vcistack::pipeline::RunConfig {
    let overrides: Vec<String> = [
        "split.repeats=2",
        "synth.units=2",
        "synth.months=168",
        "learners.ann.rprop.max_epochs=200",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([format!("seed={seed}"), format!("out={:?}", out.display().to_string())])
    .collect();
    vcistack::pipeline::RunConfig::from_toml_with("", &overrides).unwrap()
}

/// Content hash of one run subdirectory.
pub fn dir_hash(root: &std::path::Path, dir: &str) -> String {
    vcistack::pipeline::content_hash(root, &[dir.into()]).unwrap().unwrap()
}

/// Scales every out-of-sample value of `column` in `unit`, leaving in-sample
/// rows untouched.
pub fn perturb_holdout(
    table: &vcistack::data::TimeSeriesTable,
    plan: &SplitPlan,
    unit: &str,
    column: &str,
) -> vcistack::data::TimeSeriesTable {
    let starts = holdout_starts(table, plan).unwrap();
    let vals = table
        .column(column)
        .unwrap()
        .iter()
        .zip(table.keys())
        .map(|(v, k)| match v {
            Some(x) if k.unit == unit && k.month >= starts[unit] => Some(x * 1.3 + 0.01),
            other => *other,
        })
        .collect();
    table.clone().with_column(column, vals).unwrap()
}
