//! Convergence studies: a reference run, a family of coarser runs, relative
//! errors at the final time and their average orders.

use std::collections::BTreeMap;
use std::str::FromStr;

use nlsfem::convergence::{compute_relative_errors, EocRow, EocTable};
use nlsfem::stepper::{Snapshots, TimeGrid};
use nlsfem::FeField;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::run::{initial_value, operators, run_from, InitSummary, RunOutcome, RunStats};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyMode {
    /// `τ^rel = h^rel` on every level.
    Coupled,
    /// Fixed `τ^rel`, refined levels.
    Space,
    /// Fixed level, refined `τ^rel`.
    Time,
}

impl FromStr for StudyMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(Self::Coupled),
            "space" | "space-only" => Ok(Self::Space),
            "time" | "time-only" => Ok(Self::Time),
            _ => Err(CliError::config(format!("unknown study mode `{s}`"))),
        }
    }
}

/// One study run: mesh level and `τ^rel`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RunSpec {
    pub level: u32,
    pub tau_rel: f64,
}

pub fn plan(mode: StudyMode, cfg: &RunConfig) -> Vec<RunSpec> {
    let s = &cfg.study;
    match mode {
        StudyMode::Coupled => s
            .levels
            .iter()
            .map(|&level| RunSpec { level, tau_rel: 2f64.powi(-(level as i32)) })
            .collect(),
        StudyMode::Space => s.levels.iter().map(|&level| RunSpec { level, tau_rel: s.space_tau_rel }).collect(),
        StudyMode::Time => s
            .time_tau_rels
            .iter()
            .map(|&tau_rel| RunSpec { level: s.time_level, tau_rel })
            .collect(),
    }
}

/// Final state of the reference run plus what is needed to measure errors.
#[derive(Debug)]
pub struct Reference {
    pub outcome: RunOutcome,
}

impl Reference {
    pub fn final_state(&self) -> &FeField {
        &self.outcome.evolution.final_state
    }

    pub fn stats(&self) -> &RunStats {
        &self.outcome.stats
    }
}

pub fn compute_reference(cfg: &RunConfig) -> Result<Reference> {
    let level = cfg.study.reference_level;
    let grid = TimeGrid::from_tau(cfg.model.horizon, cfg.study.reference_tau)?;
    let ops = operators(&cfg.model, level)?;
    let (u0, init) = initial_value(cfg, ops.mesh())?;
    let outcome = run_from(cfg, ops, u0, init, &grid, None, &Snapshots::FinalOnly)?;
    log::info!("reference level {level}: {} steps", grid.len());
    Ok(Reference { outcome })
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum RunRecord {
    Ok {
        spec: RunSpec,
        stats: RunStats,
        errors: [Option<f64>; 4],
    },
    Failed {
        spec: RunSpec,
        error: String,
    },
}

/// Everything needed to reproduce a study table.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub mode: StudyMode,
    pub config: &'a RunConfig,
    pub columns: [&'static str; 4],
    pub reference: &'a RunStats,
    pub reference_tau: f64,
    pub runs: Vec<RunRecord>,
    pub eoc: [Option<f64>; 4],
    pub complete: bool,
}

#[derive(Debug)]
pub struct StudyOutcome {
    pub mode: StudyMode,
    pub table: EocTable,
    pub records: Vec<RunRecord>,
}

impl StudyOutcome {
    pub fn manifest<'a>(&'a self, cfg: &'a RunConfig, reference: &'a Reference) -> Manifest<'a> {
        Manifest {
            mode: self.mode,
            config: cfg,
            columns: ["err_re_l2", "err_im_l2", "err_re_h1", "err_im_h1"],
            reference: reference.stats(),
            reference_tau: cfg.study.reference_tau,
            runs: self.records.clone(),
            eoc: self.table.eoc,
            complete: self.table.complete,
        }
    }
}

/// Runs every configuration of `mode` and measures it against `reference`.
/// Failed runs are recorded and leave the table incomplete.
pub fn run_convergence(mode: StudyMode, cfg: &RunConfig, reference: &Reference) -> Result<StudyOutcome> {
    let specs = plan(mode, cfg);
    let ref_level = cfg.study.reference_level;
    if specs.is_empty() {
        return Err(CliError::config("study plan is empty"));
    }
    for s in &specs {
        if s.level >= ref_level || 2.0 / 3.0 * s.tau_rel <= cfg.study.reference_tau {
            return Err(CliError::config(format!(
                "reference (level {ref_level}, tau {}) must be strictly finer than the run at level {}, tau_rel {}",
                cfg.study.reference_tau, s.level, s.tau_rel
            )));
        }
    }

    // initial values are shared by runs on the same level
    let mut levels: Vec<u32> = specs.iter().map(|s| s.level).collect();
    levels.sort_unstable();
    levels.dedup();
    let pool = thread_pool(cfg.study.threads)?;
    let initial: BTreeMap<u32, Result<(FeField, InitSummary)>> = pool.install(|| {
        levels
            .par_iter()
            .map(|&level| {
                let init = operators(&cfg.model, level).and_then(|ops| initial_value(cfg, ops.mesh()));
                (level, init)
            })
            .collect()
    });

    let ref_ops = &reference.outcome.ops;
    let results: Vec<Result<(RunStats, [Option<f64>; 4])>> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let (u0, init) = match &initial[&spec.level] {
                    Ok(v) => v.clone(),
                    Err(e) => return Err(CliError::config(e.to_string())),
                };
                let ops = operators(&cfg.model, spec.level)?;
                let grid = TimeGrid::from_tau_rel(cfg.model.horizon, spec.tau_rel)?;
                let out = run_from(cfg, ops, u0, init, &grid, Some(spec.tau_rel), &Snapshots::FinalOnly)?;
                let e = compute_relative_errors(
                    reference.final_state(),
                    &out.evolution.final_state,
                    ref_ops.mesh(),
                    ref_ops.mass(),
                    ref_ops.stiffness(),
                )?;
                Ok((out.stats, e.as_array()))
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut complete = true;
    for (spec, res) in specs.into_iter().zip(results) {
        match res {
            Ok((stats, errors)) => {
                rows.push(EocRow {
                    h_rel: stats.h_rel,
                    tau_rel: spec.tau_rel,
                    errors: nlsfem::convergence::RelativeErrors {
                        re_l2: errors[0],
                        im_l2: errors[1],
                        re_h1: errors[2],
                        im_h1: errors[3],
                    },
                });
                records.push(RunRecord::Ok { spec, stats, errors });
            }
            Err(e) => {
                log::error!("study run at level {} failed: {e}", spec.level);
                complete = false;
                records.push(RunRecord::Failed { spec, error: e.to_string() });
            }
        }
    }
    Ok(StudyOutcome {
        mode,
        table: EocTable::new(rows, complete),
        records,
    })
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plans() {
        let cfg = RunConfig::default();
        let c = plan(StudyMode::Coupled, &cfg);
        assert_eq!(c.iter().map(|s| s.level).collect::<Vec<_>>(), [2, 3, 4, 5]);
        assert_eq!(c[3].tau_rel, 1.0 / 32.0);
        assert!(plan(StudyMode::Space, &cfg).iter().all(|s| s.tau_rel == 1.0 / 64.0));
        let t = plan(StudyMode::Time, &cfg);
        assert_eq!(t.len(), 5);
        assert!(t.iter().all(|s| s.level == 5));
        assert_eq!(t[0].tau_rel, 0.25);
        assert_eq!("space-only".parse::<StudyMode>().unwrap(), StudyMode::Space);
        assert!("both".parse::<StudyMode>().is_err());
    }
}
