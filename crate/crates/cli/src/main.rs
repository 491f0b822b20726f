use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vcistack::data::{emit_table, generate_synthetic};
use vcistack::error::{Error, Result};
use vcistack::indices::{base, SourceTag, VariableCatalog};
use vcistack::modelspace::{enumerate_constrained, write_formula_list};
use vcistack::pipeline::{run_pipeline, RunConfig, Stage, StageStatus};

#[derive(Parser, Debug)]
#[command(name = "vcistack", version, about = "Over-produce, gate, prune and stack VCI3M forecasters")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set split.repeats=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for training and prediction. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log stage progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic input table.
    Synth {
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    Ingest,
    Indices,
    SelectVars,
    /// Enumerate the constrained formulas.
    Enumerate {
        /// Print the formulas of a built-in catalog instead of running the stage.
        #[arg(long, value_parser = ["default"])]
        catalog: Option<String>,
    },
    Train,
    Gate {
        #[arg(long)]
        r2_min: Option<f64>,
        #[arg(long)]
        overfit_tol: Option<f64>,
    },
    Prune,
    Ensemble,
    Evaluate,
    Report,
    /// Run every stage.
    Run,
}

fn load_config(g: &Global, extra: &[String]) -> Result<RunConfig> {
    let text = match &g.config {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = g.overrides.clone();
    if let Some(s) = g.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(o) = &g.out {
        overrides.push(format!("out={}", toml_quote(&o.display().to_string())));
    }
    overrides.extend_from_slice(extra);
    RunConfig::from_toml_with(&text, &overrides)
}

fn toml_quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn stage_of(cmd: &Command) -> Option<Stage> {
    Some(match cmd {
        Command::Ingest => Stage::Ingest,
        Command::Indices => Stage::Indices,
        Command::SelectVars => Stage::SelectVars,
        Command::Enumerate { .. } => Stage::Enumerate,
        Command::Train => Stage::Train,
        Command::Gate { .. } => Stage::Gate,
        Command::Prune => Stage::Prune,
        Command::Ensemble => Stage::Ensemble,
        Command::Evaluate => Stage::Evaluate,
        Command::Report | Command::Run => Stage::Report,
        Command::Synth { .. } => return None,
    })
}

fn print_gate(cfg: &RunConfig) -> Result<()> {
    let path = cfg.out.join("gate/decisions.csv");
    let mut r = csv::Reader::from_path(&path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut kept = 0;
    let mut dropped = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Data(e.to_string()))?;
        if &rec[5] == "kept" {
            kept += 1;
        } else {
            dropped.push(format!("dropped {} {} (train {}, val {})", &rec[5], &rec[1], &rec[2], &rec[3]));
        }
    }
    println!("total {}", kept + dropped.len());
    println!("kept {kept}");
    for line in dropped {
        println!("{line}");
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("threads: {e}")))?;
    }
    match &cli.command {
        Command::Synth { output } => {
            let cfg = load_config(&cli.global, &[])?;
            let table = generate_synthetic(&cfg.synth_config())?;
            match output {
                Some(p) => {
                    let f = fs::File::create(p).map_err(|e| Error::Data(format!("{}: {e}", p.display())))?;
                    emit_table(&table, f)
                }
                None => emit_table(&table, std::io::stdout().lock()),
            }
        }
        Command::Enumerate { catalog: Some(_) } => {
            let cfg = load_config(&cli.global, &[])?;
            let cat = VariableCatalog::study(SourceTag::Tamsat, base::RFE, true);
            print!("{}", write_formula_list(&enumerate_constrained(&cat, cfg.lead)?));
            Ok(())
        }
        cmd => {
            let mut extra = Vec::new();
            if let Command::Gate { r2_min, overfit_tol } = cmd {
                extra.extend(r2_min.map(|v| format!("ensemble.gate.r2_min={v:?}")));
                extra.extend(overfit_tol.map(|v| format!("ensemble.gate.overfit_tolerance={v:?}")));
            }
            let cfg = load_config(&cli.global, &extra)?;
            let until = stage_of(cmd).expect("stage subcommand");
            let summary = run_pipeline(&cfg, until)?;
            for (stage, status) in &summary.stages {
                let s = match status {
                    StageStatus::Ran => "ran",
                    StageStatus::Skipped => "up to date",
                };
                eprintln!("{stage}: {s}");
            }
            if matches!(cmd, Command::Gate { .. }) {
                print_gate(&cfg)?;
            }
            if matches!(cmd, Command::Enumerate { .. }) {
                print!("{}", fs::read_to_string(cfg.out.join("formulas/formulas.txt")).map_err(|e| Error::Data(e.to_string()))?);
            }
            eprintln!("run {} in {}", summary.run_id, summary.root.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
