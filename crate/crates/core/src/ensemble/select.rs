use std::io::Write;

use serde::{Deserialize, Serialize};

use super::combine::combine_simple;
use crate::error::{Error, Result};
use crate::stats::squared_pearson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Start,
    Backward,
    Forward,
    Revert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditStep {
    pub step: usize,
    pub phase: Phase,
    pub action: String,
    pub members: usize,
    pub r2: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Indices into the ranked input, in rank order.
    pub members: Vec<usize>,
    pub r2: f64,
    pub log: Vec<AuditStep>,
}

pub const SELECTION_RULE: &str = "backward: drop the lowest-ranked batch while simple-average R2 stays at or above the \
running best; on the first drop below it, re-add that batch one model at a time in rank order, keeping a model when R2 \
does not decrease; fall back to the best backward set if the result is below it";

/// R² differences below this count as ties (rounding of the mean).
pub const TIE_TOLERANCE: f64 = 1e-12;

fn score(cols: &[Vec<f64>], members: &[usize], target: &[f64]) -> Result<f64> {
    let picked: Vec<Vec<f64>> = members.iter().map(|&i| cols[i].clone()).collect();
    Ok(squared_pearson(&combine_simple(&picked)?, target))
}

fn ranks(members: &[usize]) -> String {
    match (members.first(), members.last()) {
        (Some(a), Some(b)) if a == b => format!("rank {}", a + 1),
        (Some(a), Some(b)) => format!("ranks {}-{}", a + 1, b + 1),
        _ => String::new(),
    }
}

/// Backward-forward membership search on prediction columns ranked best
/// first, scored by the simple-average R² against `target`.
pub fn select_members(cols: &[Vec<f64>], target: &[f64], batch: usize) -> Result<Selection> {
    if batch == 0 {
        return Err(Error::Config("selection batch must be at least 1".into()));
    }
    if cols.is_empty() {
        return Err(Error::Data("no candidate members".into()));
    }
    if cols.iter().any(|c| c.len() != target.len()) {
        return Err(Error::Data("candidate predictions are not aligned with the target".into()));
    }
    let mut log = Vec::new();
    let mut push = |phase, action: String, members: usize, r2, accepted| {
        log.push(AuditStep {
            step: log.len(),
            phase,
            action,
            members,
            r2,
            accepted,
        })
    };
    let mut current: Vec<usize> = (0..cols.len()).collect();
    let mut best = score(cols, &current, target)?;
    let mut best_set = current.clone();
    push(Phase::Start, "all candidates".into(), current.len(), best, true);
    let mut dropped_below = None;
    while current.len() > batch {
        let removed = current.split_off(current.len() - batch);
        let r = score(cols, &current, target)?;
        let ok = r >= best - TIE_TOLERANCE;
        push(Phase::Backward, format!("drop {}", ranks(&removed)), current.len(), r, ok);
        if ok {
            best = r;
            best_set = current.clone();
        } else {
            dropped_below = Some(removed);
            break;
        }
    }
    let mut r_now = score(cols, &current, target)?;
    if let Some(removed) = dropped_below {
        for m in removed {
            let mut trial = current.clone();
            trial.push(m);
            let r = score(cols, &trial, target)?;
            let keep = r >= r_now - TIE_TOLERANCE;
            push(Phase::Forward, format!("restore rank {}", m + 1), trial.len(), r, keep);
            if keep {
                current = trial;
                r_now = r;
            }
        }
        if r_now < best - TIE_TOLERANCE {
            current = best_set;
            r_now = best;
            push(Phase::Revert, "back to best backward set".into(), current.len(), r_now, true);
        }
    }
    Ok(Selection {
        members: current,
        r2: r_now,
        log,
    })
}

/// CSV audit log with the selection rule as a leading comment line.
pub fn write_audit_log<W: Write>(sel: &Selection, labels: &[String], mut sink: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: "audit log".into(),
        source: e,
    };
    writeln!(sink, "# {SELECTION_RULE}").map_err(io)?;
    let mut w = csv::Writer::from_writer(&mut sink);
    w.write_record(["step", "phase", "action", "members", "r2", "accepted"])?;
    for s in &sel.log {
        w.write_record([
            s.step.to_string(),
            serde_plain_phase(s.phase).to_string(),
            s.action.clone(),
            s.members.to_string(),
            format!("{:.6}", s.r2),
            s.accepted.to_string(),
        ])?;
    }
    w.write_record(["final", "", "", &sel.members.len().to_string(), &format!("{:.6}", sel.r2), ""])?;
    for &m in &sel.members {
        let label = labels.get(m).cloned().unwrap_or_else(|| format!("#{m}"));
        w.write_record(["member", "", &label, &(m + 1).to_string(), "", ""])?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

fn serde_plain_phase(p: Phase) -> &'static str {
    match p {
        Phase::Start => "start",
        Phase::Backward => "backward",
        Phase::Forward => "forward",
        Phase::Revert => "revert",
    }
}
