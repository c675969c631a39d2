//! Ground-state and evolution drivers behind the `groundstate` and `evolve`
//! subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nlsfem::assembly::WithGradient;
use nlsfem::groundstate::{dngf_solve, project_initial, DngfConfig, GroundState, InitialValue};
use nlsfem::quadrature::Quadrature;
use nlsfem::stepper::{evolve, Evolution, Operators, Snapshots, TimeGrid};
use nlsfem::{FeField, Mesh};
use serde::Serialize;

use crate::config::{InitConfig, ModelConfig, RunConfig};
use crate::csv::conservation_csv;
use crate::error::{CliError, Result};
use crate::field_io::{read_field, write_field};

pub fn operators(model: &ModelConfig, level: u32) -> Result<Operators> {
    let spec = model.to_spec()?;
    let mesh = Mesh::uniform(spec.domain, level)?;
    Ok(Operators::new(mesh, spec, Quadrature::degree4())?)
}

/// Ground-state problem of a config: the one named by `init`, or the run
/// model itself with default flow settings.
pub fn ground_state_problem(cfg: &RunConfig) -> (ModelConfig, DngfConfig) {
    match &cfg.init {
        InitConfig::GroundState { model, dngf } => (model.clone(), *dngf),
        _ => (cfg.model.clone(), DngfConfig::default()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateSummary {
    pub level: u32,
    pub mu: f64,
    pub energy: f64,
    pub mass: f64,
    pub iterations: usize,
    pub final_flow_step: f64,
    pub last_increment: f64,
    pub min_nodal_value: f64,
    pub max_nodal_value: f64,
}

impl GroundStateSummary {
    pub fn new(ops: &Operators, gs: &GroundState) -> Result<Self> {
        let re = gs.state.real_part();
        Ok(Self {
            level: ops.mesh().level(),
            mu: gs.mu,
            energy: gs.energy,
            mass: ops.mass_of(&gs.state)?,
            iterations: gs.iterations,
            final_flow_step: gs.flow_step,
            last_increment: gs.last_increment,
            min_nodal_value: re.iter().copied().fold(0.0, f64::min),
            max_nodal_value: re.iter().copied().fold(0.0, f64::max),
        })
    }
}

pub fn compute_ground_state(model: &ModelConfig, dngf: &DngfConfig, level: u32) -> Result<(Operators, GroundState)> {
    let ops = operators(model, level)?;
    let gs = dngf_solve(&ops, dngf)?;
    Ok((ops, gs))
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitSummary {
    Ritz,
    GroundState(GroundStateSummary),
    FieldFile { path: PathBuf, level: u32 },
}

/// Discrete initial value of `cfg` on `mesh`.
pub fn initial_value(cfg: &RunConfig, mesh: &Mesh) -> Result<(FeField, InitSummary)> {
    match &cfg.init {
        InitConfig::Ritz { function } => {
            let f = WithGradient {
                value: |p: [f64; 2]| function.value(p),
                gradient: |p: [f64; 2]| function.gradient(p),
            };
            Ok((project_initial(InitialValue::Function(&f), mesh)?, InitSummary::Ritz))
        }
        InitConfig::GroundState { model, dngf } => {
            let (gops, gs) = compute_ground_state(model, dngf, mesh.level())?;
            let summary = GroundStateSummary::new(&gops, &gs)?;
            Ok((gs.state, InitSummary::GroundState(summary)))
        }
        InitConfig::FieldFile { path } => {
            let (src_mesh, field) = read_field(path)?;
            if src_mesh.domain() != mesh.domain() {
                return Err(CliError::config("initial field lives on a different domain"));
            }
            if src_mesh.level() > mesh.level() {
                return Err(CliError::config("initial field is finer than the run mesh"));
            }
            let level = src_mesh.level();
            Ok((
                project_initial(InitialValue::Field(&field), mesh)?,
                InitSummary::FieldFile { path: path.clone(), level },
            ))
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunStats {
    pub level: u32,
    pub h_rel: f64,
    pub tau_rel: Option<f64>,
    pub tau: f64,
    pub steps: usize,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub max_fp_iters: usize,
    pub total_fp_iters: usize,
    pub max_residual: f64,
    pub init: InitSummary,
}

impl RunStats {
    fn new(ops: &Operators, grid: &TimeGrid, tau_rel: Option<f64>, evo: &Evolution, init: InitSummary) -> Self {
        let rows = &evo.log.rows;
        Self {
            level: ops.mesh().level(),
            h_rel: ops.mesh().h_rel(),
            tau_rel,
            tau: grid.step(1),
            steps: grid.len(),
            mass_drift: evo.log.mass_drift(),
            energy_drift: evo.log.energy_drift(),
            max_fp_iters: rows.iter().map(|r| r.fp_iters).max().unwrap_or(0),
            total_fp_iters: rows.iter().map(|r| r.fp_iters).sum(),
            max_residual: rows.iter().map(|r| r.residual).fold(0.0, f64::max),
            init,
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub ops: Operators,
    pub evolution: Evolution,
    pub stats: RunStats,
}

/// Evolves the initial value of `cfg` on `level` over `grid`.
pub fn run_on_grid(cfg: &RunConfig, level: u32, grid: &TimeGrid, tau_rel: Option<f64>, snapshots: &Snapshots) -> Result<RunOutcome> {
    let ops = operators(&cfg.model, level)?;
    let (u0, init) = initial_value(cfg, ops.mesh())?;
    run_from(cfg, ops, u0, init, grid, tau_rel, snapshots)
}

pub fn run_from(
    cfg: &RunConfig,
    ops: Operators,
    u0: FeField,
    init: InitSummary,
    grid: &TimeGrid,
    tau_rel: Option<f64>,
    snapshots: &Snapshots,
) -> Result<RunOutcome> {
    let stepper = cfg.solver.to_stepper()?;
    let evolution = evolve(&u0, grid, &ops, &stepper, snapshots)?;
    let stats = RunStats::new(&ops, grid, tau_rel, &evolution, init);
    Ok(RunOutcome { ops, evolution, stats })
}

#[derive(Debug, Serialize)]
pub struct GroundStateReport<'a> {
    pub config: &'a RunConfig,
    pub model: ModelConfig,
    pub dngf: DngfConfig,
    pub result: GroundStateSummary,
    pub field: PathBuf,
    pub elapsed_seconds: f64,
}

/// `groundstate`: writes the field and a `<out>.json` report next to it.
pub fn groundstate_command(cfg: &RunConfig, out: &Path) -> Result<GroundStateSummary> {
    let start = Instant::now();
    let (model, dngf) = ground_state_problem(cfg);
    let (ops, gs) = compute_ground_state(&model, &dngf, cfg.mesh_level)?;
    write_field(out, ops.mesh(), &gs.state)?;
    let result = GroundStateSummary::new(&ops, &gs)?;
    let report = GroundStateReport {
        config: cfg,
        model,
        dngf,
        result: result.clone(),
        field: out.to_owned(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&sibling_json(out), &report)?;
    Ok(result)
}

#[derive(Debug, Serialize)]
pub struct SnapshotEntry {
    pub step: usize,
    pub time: f64,
    pub file: String,
}

#[derive(Debug, Serialize)]
pub struct EvolveReport<'a> {
    pub config: &'a RunConfig,
    pub stats: RunStats,
    pub snapshots: Vec<SnapshotEntry>,
    pub final_field: String,
    pub log: String,
    pub elapsed_seconds: f64,
}

/// `evolve`: conservation log, requested snapshots, the final state and a
/// JSON report, all inside `out_dir`.
pub fn evolve_command(cfg: &RunConfig, out_dir: &Path) -> Result<RunStats> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Output {
        path: out_dir.to_owned(),
        source,
    })?;
    let grid = cfg.time_grid()?;
    let snaps = Snapshots::At(cfg.outputs.snapshot_times.clone());
    let outcome = run_on_grid(cfg, cfg.mesh_level, &grid, Some(cfg.tau_rel), &snaps)?;
    let mesh = outcome.ops.mesh();

    write_text(&out_dir.join(&cfg.outputs.log), &conservation_csv(&outcome.evolution.log))?;
    let mut snapshots = Vec::new();
    for (i, (step, time, u)) in outcome.evolution.snapshots.iter().enumerate() {
        let file = format!("{}_{i}.field", cfg.outputs.field_prefix);
        write_field(&out_dir.join(&file), mesh, u)?;
        snapshots.push(SnapshotEntry { step: *step, time: *time, file });
    }
    let final_field = "final.field".to_owned();
    write_field(&out_dir.join(&final_field), mesh, &outcome.evolution.final_state)?;
    let report = EvolveReport {
        config: cfg,
        stats: outcome.stats.clone(),
        snapshots,
        final_field,
        log: cfg.outputs.log.clone(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&out_dir.join(&cfg.outputs.report), &report)?;
    Ok(outcome.stats)
}

pub fn sibling_json(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.to_owned(),
        source,
    })
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_text(path, &text)
}
