use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::store::{content_hash, io_err, read_supervised, read_text, sha256_hex, write_supervised, write_text};
use crate::data::{emit_table, generate_synthetic, holdout_starts, load_table, LoadOptions, Schema, TimeSeriesTable};
use crate::ensemble::{
    build_spec, gate_models, predict_ensemble, select_formulas, write_audit_log, EnsembleMode, EnsembleSpec,
};
use crate::error::{Error, Result};
use crate::evalreport::{emit_report, evaluate, Approach};
use crate::indices::{
    base, build_supervised, build_variable_set, fit_variable_transforms, in_sample_windows, precip_name,
    precipitation_entries, SourceTag, SupervisedDataset, VariableCatalog, PRECIP_ROLES,
};
use crate::learners::{
    bagged_fit_with_folds, default_grid, grid_search_svr, singleton_vegetation, BaggedModel, FoldPlan, ModelRegistry,
    Technique,
};
use crate::modelspace::{enumerate_constrained, read_formula_list, write_formula_list, ModelFormula};
use crate::varselect::{compare_sources, write_source_report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Indices,
    SelectVars,
    Enumerate,
    Train,
    Gate,
    Prune,
    Ensemble,
    Evaluate,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Ingest,
        Stage::Indices,
        Stage::SelectVars,
        Stage::Enumerate,
        Stage::Train,
        Stage::Gate,
        Stage::Prune,
        Stage::Ensemble,
        Stage::Evaluate,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Indices => "indices",
            Stage::SelectVars => "select-vars",
            Stage::Enumerate => "enumerate",
            Stage::Train => "train",
            Stage::Gate => "gate",
            Stage::Prune => "prune",
            Stage::Ensemble => "ensemble",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
        }
    }

    /// Directory (relative to the run root) holding the stage's outputs.
    pub fn dir(self) -> &'static str {
        match self {
            Stage::Ingest => "data",
            Stage::Indices => "indices",
            Stage::SelectVars => "varselect",
            Stage::Enumerate => "formulas",
            Stage::Train => "models",
            Stage::Gate => "gate",
            Stage::Prune => "prune",
            Stage::Ensemble => "ensemble",
            Stage::Evaluate => "evaluation",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub root: PathBuf,
    pub run_id: String,
    pub stages: Vec<(Stage, StageStatus)>,
}

impl RunSummary {
    pub fn status(&self, stage: Stage) -> Option<StageStatus> {
        self.stages.iter().find(|(s, _)| *s == stage).map(|(_, st)| *st)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Marker {
    stage: String,
    input_hash: String,
    output_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    run_id: String,
    seed: u64,
    config_digest: String,
    input_hash: String,
    stages: BTreeMap<String, String>,
}

pub const MANIFEST: &str = "manifest.toml";
pub const CONFIG_COPY: &str = "config.toml";

struct Ctx<'a> {
    cfg: &'a RunConfig,
    root: PathBuf,
}

impl Ctx<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn fresh_dir(&self, stage: Stage) -> Result<PathBuf> {
        let dir = self.path(stage.dir());
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(dir)
    }

    fn in_sample(&self) -> Result<SupervisedDataset> {
        read_supervised(&self.path("indices/in_sample.csv"), self.cfg.lead)
    }

    fn registry(&self) -> Result<ModelRegistry> {
        ModelRegistry::load(&self.path("models"))
    }

    fn lines(&self, rel: &str) -> Result<Vec<String>> {
        Ok(read_text(&self.path(rel))?.lines().map(String::from).collect())
    }

    fn modes(&self) -> Vec<EnsembleMode> {
        let techs = &self.cfg.learners.techniques;
        EnsembleMode::ALL
            .into_iter()
            .filter(|m| m.techniques().iter().all(|t| techs.contains(t)))
            .collect()
    }
}

fn input_schema() -> Schema {
    let optional = [base::NDVI_DEKAD, base::RFE_ALT];
    base::ALL.iter().fold(Schema::new(), |s, n| {
        if optional.contains(n) {
            s.optional(n)
        } else {
            s.required(n)
        }
    })
}

fn load_run_table(path: &Path) -> Result<TimeSeriesTable> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    load_table(f, &Schema::any(&base::ALL), LoadOptions::default())
}

/// Hash of what the ingest stage reads: the input file bytes, or the
/// synthetic generator settings.
fn input_hash(cfg: &RunConfig) -> Result<String> {
    match &cfg.input {
        Some(p) => Ok(sha256_hex(&fs::read(p).map_err(io_err(p))?)),
        None => {
            let text = toml::to_string(&cfg.synth_config()).map_err(|e| Error::Config(e.to_string()))?;
            Ok(sha256_hex(format!("synthetic\n{text}").as_bytes()))
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogInfo {
    dekadal_input: bool,
    alt_source: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct SourceChoice {
    source: SourceTag,
    rain_column: String,
    compared: bool,
}

fn full_catalog(info: &CatalogInfo) -> Result<VariableCatalog> {
    let cat = VariableCatalog::study(SourceTag::Tamsat, base::RFE, info.dekadal_input);
    if info.alt_source {
        cat.extended(precipitation_entries(SourceTag::Chirps, base::RFE_ALT))
    } else {
        Ok(cat)
    }
}

fn study_catalog(ctx: &Ctx) -> Result<VariableCatalog> {
    let info: CatalogInfo = from_toml(&ctx.path("indices/catalog.toml"))?;
    let choice: SourceChoice = from_toml(&ctx.path("varselect/decision.toml"))?;
    Ok(VariableCatalog::study(choice.source, &choice.rain_column, info.dekadal_input))
}

fn from_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    toml::from_str(&read_text(path)?).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

fn to_toml<T: Serialize>(value: &T) -> Result<String> {
    toml::to_string(value).map_err(|e| Error::Data(e.to_string()))
}

fn stage_ingest(ctx: &Ctx) -> Result<()> {
    let table = match &ctx.cfg.input {
        Some(p) => {
            let f = fs::File::open(p).map_err(io_err(p))?;
            let opts = LoadOptions {
                interpolate_short_gaps: ctx.cfg.interpolate_short_gaps,
            };
            load_table(f, &input_schema(), opts)?
        }
        None => generate_synthetic(&ctx.cfg.synth_config())?,
    };
    ctx.cfg.split_plan().validate_against(&table)?;
    let dir = ctx.fresh_dir(Stage::Ingest)?;
    let path = dir.join("table.csv");
    let f = fs::File::create(&path).map_err(io_err(&path))?;
    emit_table(&table, f)
}

fn stage_indices(ctx: &Ctx) -> Result<()> {
    let table = load_run_table(&ctx.path("data/table.csv"))?;
    let info = CatalogInfo {
        dekadal_input: table.has_column(base::NDVI_DEKAD),
        alt_source: table.has_column(base::RFE_ALT),
    };
    let catalog = full_catalog(&info)?;
    let starts = holdout_starts(&table, &ctx.cfg.split_plan())?;
    let windows = in_sample_windows(&table, &starts)?;
    let fits = fit_variable_transforms(&table, &catalog, &windows, &ctx.cfg.indices)?;
    let warnings = fits.standardization_warnings();
    for w in &warnings {
        log::warn!("standardized index drift: {w}");
    }
    let vars = build_variable_set(&table, &catalog, &fits)?;
    let ds = build_supervised(&vars, &catalog, ctx.cfg.lead)?;
    let (inside, outside) = ds.split_by_target(&starts)?;
    if inside.n_rows() == 0 || outside.n_rows() == 0 {
        return Err(Error::Data("empty in-sample or out-of-sample partition".into()));
    }

    let dir = ctx.fresh_dir(Stage::Indices)?;
    let path = dir.join("variables.csv");
    emit_table(&vars, fs::File::create(&path).map_err(io_err(&path))?)?;
    write_text(&dir.join("fits.toml"), &to_toml(&fits)?)?;
    write_text(&dir.join("catalog.toml"), &to_toml(&info)?)?;
    let mut text = String::new();
    for w in &warnings {
        text.push_str(w);
        text.push('\n');
    }
    write_text(&dir.join("warnings.txt"), &text)?;
    let mut starts_csv = String::from("unit,holdout_start\n");
    for (u, m) in &starts {
        starts_csv.push_str(&format!("{u},{m}\n"));
    }
    write_text(&dir.join("holdout_starts.csv"), &starts_csv)?;
    write_supervised(&dir.join("in_sample.csv"), &inside)?;
    write_supervised(&dir.join("holdout.csv"), &outside)
}

fn stage_select_vars(ctx: &Ctx) -> Result<()> {
    let ds = ctx.in_sample()?;
    let info: CatalogInfo = from_toml(&ctx.path("indices/catalog.toml"))?;
    let dir = ctx.fresh_dir(Stage::SelectVars)?;
    let primary = SourceChoice {
        source: SourceTag::Tamsat,
        rain_column: base::RFE.to_string(),
        compared: false,
    };
    let choice = if info.alt_source && ctx.cfg.varselect.compare_sources {
        let names = |s: SourceTag| PRECIP_ROLES.iter().map(|r| precip_name(s, r)).collect::<Vec<_>>();
        let (a, b) = (names(SourceTag::Tamsat), names(SourceTag::Chirps));
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let b: Vec<&str> = b.iter().map(String::as_str).collect();
        let d = compare_sources(&ds, (SourceTag::Tamsat, &a), (SourceTag::Chirps, &b), ctx.cfg.varselect.alpha)?;
        let path = dir.join("sources.csv");
        write_source_report(&d, fs::File::create(&path).map_err(io_err(&path))?)?;
        if d.tie {
            log::warn!("rainfall sources tie on mean Spearman; keeping {}", d.chosen);
        }
        SourceChoice {
            source: d.chosen,
            rain_column: if d.chosen == SourceTag::Chirps { base::RFE_ALT } else { base::RFE }.to_string(),
            compared: true,
        }
    } else {
        primary
    };
    write_text(&dir.join("decision.toml"), &to_toml(&choice)?)
}

fn stage_enumerate(ctx: &Ctx) -> Result<()> {
    let catalog = study_catalog(ctx)?;
    let formulas = enumerate_constrained(&catalog, ctx.cfg.lead)?;
    let dir = ctx.fresh_dir(Stage::Enumerate)?;
    write_text(&dir.join("formulas.txt"), &write_formula_list(&formulas))?;
    let mut w = csv::Writer::from_path(dir.join("catalog.csv"))?;
    w.write_record(["variable", "category", "source", "lineage"])?;
    for e in catalog.entries() {
        w.write_record([e.name.clone(), e.category.to_string(), e.source.to_string(), e.lineage()])?;
    }
    w.flush().map_err(io_err(&dir))
}

fn formulas(ctx: &Ctx) -> Result<Vec<ModelFormula>> {
    read_formula_list(&study_catalog(ctx)?, &read_text(&ctx.path("formulas/formulas.txt"))?)
}

fn stage_train(ctx: &Ctx) -> Result<()> {
    let ds = ctx.in_sample()?;
    let formulas = formulas(ctx)?;
    let folds = FoldPlan::new(&ds, &ctx.cfg.split_plan())?;
    let mut learner = ctx.cfg.learners.learner_config();
    let dir = ctx.fresh_dir(Stage::Train)?;
    if ctx.cfg.learners.grid_search && ctx.cfg.learners.techniques.contains(&Technique::Svr) {
        let grid = default_grid();
        let probe = singleton_vegetation(&formulas);
        let res = grid_search_svr(&ds, &probe, &folds, &learner.svr, &grid)?;
        let mut text = String::from("c,epsilon,gamma_scale,mean_val_r2\n");
        for (p, s) in grid.iter().zip(&res.scores) {
            text.push_str(&format!("{},{},{},{s:.6}\n", p.c, p.epsilon, p.gamma_scale));
        }
        write_text(&dir.join("grid.csv"), &text)?;
        log::info!("grid search picked {:?} (mean validation R² {:.4})", res.best, res.best_score);
        learner.svr = res.best.apply(&learner.svr);
    }
    let jobs: Vec<(&ModelFormula, Technique)> = formulas
        .iter()
        .flat_map(|f| ctx.cfg.learners.techniques.iter().map(move |t| (f, *t)))
        .collect();
    let models = jobs
        .par_iter()
        .map(|(f, t)| bagged_fit_with_folds(f, *t, &ds, &folds, &learner))
        .collect::<Result<Vec<BaggedModel>>>()?;
    log::info!("trained {} bagged models", models.len());
    ModelRegistry {
        keys: ds.keys.clone(),
        models,
    }
    .save(&dir)
}

fn stage_gate(ctx: &Ctx) -> Result<()> {
    let registry = ctx.registry()?;
    let outcome = gate_models(&registry.models, &ctx.cfg.ensemble.gate, Technique::Ann)?;
    let dir = ctx.fresh_dir(Stage::Gate)?;
    let mut w = csv::Writer::from_path(dir.join("decisions.csv"))?;
    w.write_record(["formula_id", "formula", "train_r2", "val_r2", "overfit_index", "verdict"])?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for d in &outcome.decisions {
        let verdict = d.verdict.label().to_string();
        *counts.entry(verdict.clone()).or_default() += 1;
        w.write_record([
            d.formula_id.clone(),
            d.formula.clone(),
            format!("{:.6}", d.train_r2),
            format!("{:.6}", d.val_r2),
            format!("{:.6}", d.overfit_index),
            verdict,
        ])?;
    }
    w.flush().map_err(io_err(&dir))?;
    write_text(&dir.join("ranked.txt"), &lines(&outcome.ranked))?;
    let mut summary = format!("total,{}\n", outcome.total);
    for k in ["kept", "below_cutoff", "overfit"] {
        summary.push_str(&format!("{k},{}\n", counts.get(k).copied().unwrap_or(0)));
    }
    write_text(&dir.join("summary.csv"), &summary)?;
    log::info!("gate kept {} of {} formulas", outcome.ranked.len(), outcome.total);
    Ok(())
}

fn lines(items: &[String]) -> String {
    items.iter().map(|s| format!("{s}\n")).collect()
}

fn stage_prune(ctx: &Ctx) -> Result<()> {
    let registry = ctx.registry()?;
    let ds = ctx.in_sample()?;
    let ranked = ctx.lines("gate/ranked.txt")?;
    let (selection, members) = select_formulas(&registry, &ds, &ranked, ctx.cfg.ensemble.batch)?;
    let labels: Vec<String> = ranked
        .iter()
        .map(|id| registry.get(id, Technique::Ann).map_or(id.clone(), |m| m.formula.clone()))
        .collect();
    let dir = ctx.fresh_dir(Stage::Prune)?;
    let path = dir.join("audit.csv");
    write_audit_log(&selection, &labels, fs::File::create(&path).map_err(io_err(&path))?)?;
    write_text(&dir.join("members.txt"), &lines(&members))?;
    log::info!("selected {} of {} gated formulas (R² {:.4})", members.len(), ranked.len(), selection.r2);
    Ok(())
}

fn stage_ensemble(ctx: &Ctx) -> Result<()> {
    let registry = ctx.registry()?;
    let ds = ctx.in_sample()?;
    let members = ctx.lines("prune/members.txt")?;
    let jobs: Vec<_> = ctx
        .modes()
        .into_iter()
        .flat_map(|m| ctx.cfg.combiners.iter().map(move |c| (m, *c)))
        .collect();
    let specs = jobs
        .par_iter()
        .map(|&(mode, combiner)| {
            build_spec(mode, combiner, &members, &registry, &ds, &ctx.cfg.ensemble.stacker, ctx.cfg.seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let dir = ctx.fresh_dir(Stage::Ensemble)?;
    for s in &specs {
        write_text(&dir.join(format!("{}.toml", s.name())), &s.to_manifest()?)?;
    }
    write_text(&dir.join("index.txt"), &lines(&specs.iter().map(EnsembleSpec::name).collect::<Vec<_>>()))
}

/// Highest validation R², then fewer predictors, then registry order.
pub fn champion<'a>(registry: &'a ModelRegistry, technique: Technique) -> Option<&'a BaggedModel> {
    let mut best: Option<&BaggedModel> = None;
    for m in registry.models.iter().filter(|m| m.technique == technique) {
        let better = match best {
            None => true,
            Some(b) => m.val_r2 > b.val_r2 || (m.val_r2 == b.val_r2 && m.predictors.len() < b.predictors.len()),
        };
        if better {
            best = Some(m);
        }
    }
    best
}

fn stage_evaluate(ctx: &Ctx) -> Result<()> {
    let registry = ctx.registry()?;
    let holdout = read_supervised(&ctx.path("indices/holdout.csv"), ctx.cfg.lead)?;
    let mut columns: Vec<(Approach, Vec<f64>)> = Vec::new();
    let mut champions = String::from("technique,formula_id,formula,val_r2\n");
    for &t in &ctx.cfg.learners.techniques {
        let m = champion(&registry, t).ok_or_else(|| Error::Data(format!("no {t} models in the registry")))?;
        champions.push_str(&format!("{t},{},{},{:.6}\n", m.formula_id, m.formula, m.val_r2));
        columns.push((Approach::new(&format!("{t}-champion"), ""), m.predict_dataset(&holdout)?));
    }
    let names = ctx.lines("ensemble/index.txt")?;
    let mut specs = Vec::new();
    for n in &names {
        specs.push(EnsembleSpec::from_manifest(&read_text(&ctx.path(&format!("ensemble/{n}.toml")))?)?);
    }
    for combiner in &ctx.cfg.combiners {
        for s in specs.iter().filter(|s| s.combiner == *combiner) {
            let p = predict_ensemble(s, &registry, &holdout)?;
            columns.push((Approach::new(s.combiner.label(), s.mode.label()), p));
        }
    }
    let dir = ctx.fresh_dir(Stage::Evaluate)?;
    write_text(&dir.join("champions.csv"), &champions)?;
    let mut w = csv::Writer::from_path(dir.join("approaches.csv"))?;
    w.write_record(["column", "approach", "ensemble"])?;
    for (a, _) in &columns {
        w.write_record([a.name(), a.kind.clone(), a.ensemble.clone()])?;
    }
    w.flush().map_err(io_err(&dir))?;
    let mut w = csv::Writer::from_path(dir.join("predictions.csv"))?;
    let mut header = vec!["unit".to_string(), "month".to_string(), "target_month".to_string(), "actual".to_string()];
    header.extend(columns.iter().map(|(a, _)| a.name()));
    w.write_record(&header)?;
    for i in 0..holdout.n_rows() {
        let mut rec = vec![
            holdout.keys[i].unit.clone(),
            holdout.keys[i].month.to_string(),
            holdout.target_months[i].to_string(),
            holdout.targets[i].to_string(),
        ];
        rec.extend(columns.iter().map(|(_, p)| p[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(&dir))
}

fn stage_report(ctx: &Ctx) -> Result<()> {
    let holdout = read_supervised(&ctx.path("indices/holdout.csv"), ctx.cfg.lead)?;
    let mut r = csv::Reader::from_path(ctx.path("evaluation/approaches.csv"))?;
    let approaches: Vec<(String, Approach)> = r
        .records()
        .map(|rec| rec.map(|rec| (rec[0].to_string(), Approach::new(&rec[1], &rec[2]))))
        .collect::<std::result::Result<_, _>>()?;
    let mut r = csv::Reader::from_path(ctx.path("evaluation/predictions.csv"))?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for rec in r.records() {
        let rec = rec?;
        for (j, c) in cols.iter_mut().enumerate().skip(4) {
            c.push(rec[j].parse().map_err(|_| Error::Data(format!("bad prediction {:?}", &rec[j])))?);
        }
    }
    let inputs = approaches
        .into_iter()
        .map(|(col, a)| {
            let j = header
                .iter()
                .position(|h| *h == col)
                .ok_or_else(|| Error::MissingColumn(format!("{col} in predictions.csv")))?;
            Ok((a, cols[j].clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let results = evaluate(&holdout, inputs)?;
    let dir = ctx.fresh_dir(Stage::Report)?;
    emit_report(&dir, &holdout, &results)?;
    fs::copy(ctx.path("prune/audit.csv"), dir.join("selection_audit.csv")).map_err(io_err(&dir))?;
    let gate = read_text(&ctx.path("gate/summary.csv"))?;
    let mut funnel = String::from("step,count\n");
    funnel.push_str(&format!("formulas,{}\n", ctx.lines("formulas/formulas.txt")?.len()));
    for line in gate.lines() {
        funnel.push_str(&format!("gate_{line}\n"));
    }
    funnel.push_str(&format!("members,{}\n", ctx.lines("prune/members.txt")?.len()));
    write_text(&dir.join("funnel.csv"), &funnel)?;
    let mut text = String::from("approach,ensemble,overall_r2\n");
    for res in &results {
        let r2 = res.overall().r2.map(|v| format!("{v:.6}")).unwrap_or_default();
        text.push_str(&format!("{},{},{r2}\n", res.approach.kind, res.approach.ensemble));
    }
    write_text(&dir.join("summary.csv"), &text)
}

fn run_stage(stage: Stage, ctx: &Ctx) -> Result<()> {
    match stage {
        Stage::Ingest => stage_ingest(ctx),
        Stage::Indices => stage_indices(ctx),
        Stage::SelectVars => stage_select_vars(ctx),
        Stage::Enumerate => stage_enumerate(ctx),
        Stage::Train => stage_train(ctx),
        Stage::Gate => stage_gate(ctx),
        Stage::Prune => stage_prune(ctx),
        Stage::Ensemble => stage_ensemble(ctx),
        Stage::Evaluate => stage_evaluate(ctx),
        Stage::Report => stage_report(ctx),
    }
}

fn val<T: Serialize>(v: &T) -> Result<toml::Value> {
    toml::Value::try_from(v).map_err(|e| Error::Config(e.to_string()))
}

/// The slice of the configuration a stage reads. Stages rerun when it or
/// any upstream output changes.
fn stage_settings(cfg: &RunConfig, stage: Stage) -> Result<String> {
    let mut t = toml::Table::new();
    let mut put = |k: &str, v: toml::Value| {
        t.insert(k.to_string(), v);
    };
    put("lead", val(&cfg.lead)?);
    match stage {
        Stage::Ingest => {
            put("interpolate_short_gaps", val(&cfg.interpolate_short_gaps)?);
            put("split", val(&cfg.split)?);
        }
        Stage::Indices => {
            put("split", val(&cfg.split)?);
            put("indices", val(&cfg.indices)?);
        }
        Stage::SelectVars => put("varselect", val(&cfg.varselect)?),
        Stage::Enumerate | Stage::Report => {}
        Stage::Train => {
            put("seed", val(&cfg.seed)?);
            put("split", val(&cfg.split)?);
            put("learners", val(&cfg.learners)?);
        }
        Stage::Gate => put("gate", val(&cfg.ensemble.gate)?),
        Stage::Prune => put("batch", val(&cfg.ensemble.batch)?),
        Stage::Ensemble => {
            put("seed", val(&cfg.seed)?);
            put("techniques", val(&cfg.learners.techniques)?);
            put("combiners", val(&cfg.combiners)?);
            put("stacker", val(&cfg.ensemble.stacker)?);
        }
        Stage::Evaluate => {
            put("techniques", val(&cfg.learners.techniques)?);
            put("combiners", val(&cfg.combiners)?);
        }
    }
    to_toml(&t)
}

fn marker_path(root: &Path, stage: Stage) -> PathBuf {
    root.join("stages").join(format!("{}.done", stage.name()))
}

pub fn resume_command(cfg: &RunConfig, stage: Stage) -> String {
    let out = cfg.out.display();
    format!("vcistack {} --config {out}/{CONFIG_COPY} --out {out}", stage.name())
}

/// Runs every stage up to and including `until`, skipping stages whose
/// marker matches both the current inputs and the files on disk.
pub fn run_pipeline(cfg: &RunConfig, until: Stage) -> Result<RunSummary> {
    cfg.validate()?;
    let root = cfg.out.clone();
    fs::create_dir_all(root.join("stages")).map_err(io_err(&root))?;
    write_text(&root.join(CONFIG_COPY), &cfg.to_toml()?)?;
    let digest = cfg.digest()?;
    let input = input_hash(cfg)?;
    let run_id = sha256_hex(format!("{digest}\n{input}").as_bytes())[..16].to_string();
    let ctx = Ctx { cfg, root: root.clone() };
    let mut upstream = String::new();
    let mut stages = Vec::new();
    let mut outputs = BTreeMap::new();
    for stage in Stage::ALL.into_iter().filter(|s| *s <= until) {
        let mut key = format!("{stage}\n{}\n", stage_settings(cfg, stage)?);
        if stage == Stage::Ingest {
            key.push_str(&input);
        }
        key.push_str(&upstream);
        let input_hash = sha256_hex(key.as_bytes());
        let dirs = [PathBuf::from(stage.dir())];
        let marker = marker_path(&root, stage);
        let current = content_hash(&root, &dirs)?;
        let done = match (fs::read_to_string(&marker).ok(), &current) {
            (Some(text), Some(cur)) => toml::from_str::<Marker>(&text)
                .map(|m| m.input_hash == input_hash && &m.output_hash == cur)
                .unwrap_or(false),
            _ => false,
        };
        let output_hash = if done {
            log::info!("stage {stage}: up to date, skipped");
            stages.push((stage, StageStatus::Skipped));
            current.expect("checked above")
        } else {
            let _ = fs::remove_file(&marker);
            log::info!("stage {stage}: running");
            run_stage(stage, &ctx).map_err(|e| Error::Stage {
                stage: stage.name().to_string(),
                resume: resume_command(cfg, stage),
                source: Box::new(e),
            })?;
            let h = content_hash(&root, &dirs)?
                .ok_or_else(|| Error::Data(format!("stage {stage} produced no outputs")))?;
            let m = Marker {
                stage: stage.name().to_string(),
                input_hash: input_hash.clone(),
                output_hash: h.clone(),
            };
            write_text(&marker, &to_toml(&m)?)?;
            stages.push((stage, StageStatus::Ran));
            h
        };
        upstream.push_str(&format!("\n{stage} {output_hash}"));
        outputs.insert(stage.name().to_string(), output_hash);
    }
    let manifest = Manifest {
        run_id: run_id.clone(),
        seed: cfg.seed,
        config_digest: digest,
        input_hash: input,
        stages: outputs,
    };
    write_text(&root.join(MANIFEST), &to_toml(&manifest)?)?;
    Ok(RunSummary { root, run_id, stages })
}
