//! JSON run configuration.
//!
//! Every field has a default, and the defaults describe the disorder
//! experiment: `−½Δ + V_d + 20|u|²` on `[-6, 6]²` up to `T = 1`, started from
//! the ground state of `−½Δ + V_d + ½|x|² + 10|u|²`.

use std::path::{Path, PathBuf};

use nlsfem::groundstate::DngfConfig;
use nlsfem::model::{ModelSpec, NonlinearitySpec, PotentialSpec};
use nlsfem::stepper::{LinearSolver, StepperConfig, TimeGrid};
use nlsfem::{Rect, C64};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    Constant { value: f64 },
    Harmonic { center: [f64; 2], weight: f64 },
    DisorderSine,
    Sum { terms: Vec<PotentialConfig> },
}

impl PotentialConfig {
    pub fn to_spec(&self) -> Result<PotentialSpec> {
        Ok(match self {
            Self::Zero => PotentialSpec::Zero,
            Self::Constant { value } => {
                if !(*value >= 0.0 && value.is_finite()) {
                    return Err(CliError::config("constant potential must be finite and nonnegative"));
                }
                PotentialSpec::Constant(*value)
            }
            Self::Harmonic { center, weight } => {
                if !(*weight >= 0.0 && weight.is_finite()) {
                    return Err(CliError::config("harmonic weight must be finite and nonnegative"));
                }
                PotentialSpec::Harmonic {
                    center: *center,
                    weight: *weight,
                }
            }
            Self::DisorderSine => PotentialSpec::DisorderSine,
            Self::Sum { terms } => PotentialSpec::Sum(terms.iter().map(Self::to_spec).collect::<Result<_>>()?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum NonlinearityConfig {
    None,
    Cubic { beta: f64 },
    /// `γ(ρ) = Σ coeffs[k] ρ^k`, `coeffs[0]` must be zero
    Polynomial { coeffs: Vec<f64> },
}

impl NonlinearityConfig {
    pub fn to_spec(&self) -> Result<NonlinearitySpec> {
        let spec = match self {
            Self::None => NonlinearitySpec::none(),
            Self::Cubic { beta } => NonlinearitySpec::cubic(*beta),
            Self::Polynomial { coeffs } => NonlinearitySpec::polynomial(coeffs.clone()),
        };
        spec.validate(1.0)?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// `[x0, y0, x1, y1]`
    pub domain: [f64; 4],
    pub kinetic: f64,
    pub potential: PotentialConfig,
    pub nonlinearity: NonlinearityConfig,
    pub horizon: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            domain: [-6.0, -6.0, 6.0, 6.0],
            kinetic: 0.5,
            potential: PotentialConfig::DisorderSine,
            nonlinearity: NonlinearityConfig::Cubic { beta: 20.0 },
            horizon: 1.0,
        }
    }
}

impl ModelConfig {
    /// Model whose normalized energy minimizer is the default initial value.
    pub fn disorder_ground_state() -> Self {
        Self {
            potential: PotentialConfig::Sum {
                terms: vec![
                    PotentialConfig::DisorderSine,
                    PotentialConfig::Harmonic {
                        center: [0.0, 0.0],
                        weight: 0.5,
                    },
                ],
            },
            nonlinearity: NonlinearityConfig::Cubic { beta: 10.0 },
            ..Self::default()
        }
    }

    pub fn to_spec(&self) -> Result<ModelSpec> {
        let [x0, y0, x1, y1] = self.domain;
        let spec = ModelSpec {
            domain: Rect::new(x0, y0, x1, y1)?,
            kinetic: self.kinetic,
            potential: self.potential.to_spec()?,
            nonlinearity: self.nonlinearity.to_spec()?,
            horizon: self.horizon,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Closed-form functions usable as Ritz-projected initial data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum FunctionConfig {
    /// `a · exp(−|x − c|² / (2 w²) + i p·x)`
    Gaussian {
        center: [f64; 2],
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        momentum: [f64; 2],
    },
}

fn one() -> f64 {
    1.0
}

impl FunctionConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { width, amplitude, .. } => {
                if !(*width > 0.0 && width.is_finite() && amplitude.is_finite()) {
                    return Err(CliError::config("gaussian width must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, p: [f64; 2]) -> C64 {
        match *self {
            Self::Gaussian {
                center,
                width,
                amplitude,
                momentum,
            } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                let env = amplitude * (-(dx * dx + dy * dy) / (2.0 * width * width)).exp();
                C64::from_polar(env, momentum[0] * p[0] + momentum[1] * p[1])
            }
        }
    }

    pub fn gradient(&self, p: [f64; 2]) -> [C64; 2] {
        match *self {
            Self::Gaussian {
                center, width, momentum, ..
            } => {
                let v = self.value(p);
                let w2 = width * width;
                [
                    v * C64::new(-(p[0] - center[0]) / w2, momentum[0]),
                    v * C64::new(-(p[1] - center[1]) / w2, momentum[1]),
                ]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InitConfig {
    Ritz {
        function: FunctionConfig,
    },
    GroundState {
        #[serde(default = "ModelConfig::disorder_ground_state")]
        model: ModelConfig,
        #[serde(default)]
        dngf: DngfConfig,
    },
    /// A field file on the run mesh or a coarser nested one.
    FieldFile {
        path: PathBuf,
    },
}

impl Default for InitConfig {
    fn default() -> Self {
        Self::GroundState {
            model: ModelConfig::disorder_ground_state(),
            dngf: DngfConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub snapshot_times: Vec<f64>,
    /// Snapshot `i` is written to `<field_prefix>_<i>.field`.
    pub field_prefix: String,
    pub log: String,
    pub report: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            snapshot_times: Vec::new(),
            field_prefix: "snapshot".into(),
            log: "conservation.csv".into(),
            report: "report.json".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub linear_solver: LinearSolver,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = StepperConfig::default();
        Self {
            fp_tol: d.fp_tol,
            fp_max_iter: d.fp_max_iter,
            linear_solver: d.linear_solver,
        }
    }
}

impl SolverConfig {
    pub fn to_stepper(self) -> Result<StepperConfig> {
        let cfg = StepperConfig {
            fp_tol: self.fp_tol,
            fp_max_iter: self.fp_max_iter,
            linear_solver: self.linear_solver,
            perturbation: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Refinement plan for convergence studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Levels of the coupled and space-only studies.
    pub levels: Vec<u32>,
    /// Fixed τ^rel of the space-only study.
    pub space_tau_rel: f64,
    /// Fixed level of the time-only study.
    pub time_level: u32,
    pub time_tau_rels: Vec<f64>,
    pub reference_level: u32,
    /// Absolute reference step size.
    pub reference_tau: f64,
    /// Worker threads; 0 lets the pool decide. Results do not depend on it.
    pub threads: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            levels: vec![2, 3, 4, 5],
            space_tau_rel: 2f64.powi(-6),
            time_level: 5,
            time_tau_rels: (2..=6).map(|k| 2f64.powi(-k)).collect(),
            reference_level: 6,
            reference_tau: 1e-2,
            threads: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub mesh_level: u32,
    pub tau_rel: f64,
    pub init: InitConfig,
    pub outputs: OutputConfig,
    pub seed: u64,
    pub solver: SolverConfig,
    pub study: StudyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            mesh_level: 5,
            tau_rel: 2f64.powi(-5),
            init: InitConfig::default(),
            outputs: OutputConfig::default(),
            seed: 0,
            solver: SolverConfig::default(),
            study: StudyConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Input {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.to_spec()?;
        if !(self.tau_rel > 0.0 && self.tau_rel.is_finite()) {
            return Err(CliError::config("tau_rel must be positive"));
        }
        if self.mesh_level > 10 {
            return Err(CliError::config("mesh_level must be at most 10"));
        }
        match &self.init {
            InitConfig::Ritz { function } => function.validate()?,
            InitConfig::GroundState { model, dngf } => {
                let gm = model.to_spec()?;
                if gm.domain != self.model.to_spec()?.domain {
                    return Err(CliError::config("ground-state model must share the run domain"));
                }
                dngf.validate()?;
            }
            InitConfig::FieldFile { .. } => {}
        }
        let h = self.model.horizon;
        if self.outputs.snapshot_times.iter().any(|t| !(*t >= 0.0 && *t <= h)) {
            return Err(CliError::config("snapshot times must lie in [0, horizon]"));
        }
        self.solver.to_stepper()?;
        let s = &self.study;
        if !(s.reference_tau > 0.0) || s.space_tau_rel <= 0.0 || s.time_tau_rels.iter().any(|t| !(*t > 0.0)) {
            return Err(CliError::config("study step sizes must be positive"));
        }
        if s.reference_level > 10 {
            return Err(CliError::config("reference_level must be at most 10"));
        }
        Ok(())
    }

    /// Equidistant grid with `τ = (2/3) τ^rel` rounded to land on the horizon.
    pub fn time_grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::from_tau_rel(self.model.horizon, self.tau_rel)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_the_disorder_experiment() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let m = cfg.model.to_spec().unwrap();
        assert_eq!(m.kinetic, 0.5);
        assert_eq!(m.potential.eval([1.5, 1.5]), 7.0);
        assert_eq!(cfg.time_grid().unwrap().len(), 48);
    }

    #[test]
    fn round_trips_through_json() {
        let mut cfg = RunConfig::default();
        cfg.init = InitConfig::Ritz {
            function: FunctionConfig::Gaussian {
                center: [1.0, 0.0],
                width: 0.7,
                amplitude: 2.0,
                momentum: [0.5, -1.0],
            },
        };
        cfg.solver.linear_solver = LinearSolver::Iterative { tol: 1e-13, max_iter: 500 };
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"tau_rel": 0}"#,
            r#"{"model": {"kinetic": -1}}"#,
            r#"{"model": {"domain": [0, 0, 0, 1]}}"#,
            r#"{"unknown": 1}"#,
            r#"{"outputs": {"snapshot_times": [2.0]}}"#,
            r#"{"init": {"kind": "ground_state", "dngf": {"flow_step": -1}}}"#,
            r#"{"solver": {"fp_tol": 0}}"#,
        ] {
            let err = RunConfig::from_json(text).unwrap_err();
            assert_eq!(err.exit_code(), crate::error::EXIT_CONFIG, "{text}: {err}");
        }
    }

    #[test]
    fn gaussian_gradient_matches_difference_quotient() {
        let f = FunctionConfig::Gaussian {
            center: [0.3, -0.2],
            width: 0.8,
            amplitude: 1.5,
            momentum: [1.0, 2.0],
        };
        let p = [0.4, 0.1];
        let g = f.gradient(p);
        let d = 1e-6;
        let fx = (f.value([p[0] + d, p[1]]) - f.value([p[0] - d, p[1]])) / (2.0 * d);
        let fy = (f.value([p[0], p[1] + d]) - f.value([p[0], p[1] - d])) / (2.0 * d);
        assert!((g[0] - fx).norm() < 1e-8 && (g[1] - fy).norm() < 1e-8);
    }
}
