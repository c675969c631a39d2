//! Ground states by the discrete normalized gradient flow.
//!
//! Each outer step solves the backward-Euler system
//!
//! ```text
//! (M/τ_g + κK + W + N_γ(φᵏ)) φ̃ = M φᵏ / τ_g,    φᵏ⁺¹ = φ̃ / ‖φ̃‖
//! ```
//!
//! with `N_γ(φᵏ)` the mass matrix weighted by `γ(|φᵏ|²)`. Fixed points satisfy
//! the discrete nonlinear eigenproblem `(κK + W + N_γ(φ)) φ = μ M φ` with
//! `‖φ‖ = 1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{assemble_nonlinear_matrix, ritz_project, PointFunction};
use crate::field::FeField;
use crate::linsolve::BandLu;
use crate::math::sqrt;
use crate::mesh::{prolongate, Mesh};
use crate::stepper::Operators;
use crate::{Error, Result, C64};

/// Allowed step-size halvings per outer step when the energy increases.
const MAX_HALVINGS: usize = 20;
/// Nodal values of smaller magnitude are treated as roundoff when fixing signs.
const NEGATIVE_ROUNDOFF: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum SeedProfile {
    /// `exp(−|x − c|² / (2 w²))` around the domain center `c`.
    Gaussian { width: f64 },
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DngfConfig {
    pub flow_step: f64,
    /// Stop when the nodal sup-norm increment drops below this value.
    pub stop_tol: f64,
    pub max_outer: usize,
    pub seed: SeedProfile,
}

impl Default for DngfConfig {
    fn default() -> Self {
        Self {
            flow_step: 0.1,
            stop_tol: 1e-10,
            max_outer: 100_000,
            seed: SeedProfile::Gaussian { width: 1.0 },
        }
    }
}

impl DngfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.flow_step > 0.0 && self.flow_step.is_finite()) {
            return Err(Error::param("flow_step", "must be positive"));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::param("stop_tol", "must be positive"));
        }
        if self.max_outer == 0 {
            return Err(Error::param("max_outer", "must be at least 1"));
        }
        if let SeedProfile::Gaussian { width } = self.seed {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::param("seed.width", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    /// Real and of unit mass, signed so that its nodal sum is positive. On
    /// coarse meshes the discrete minimizer itself has small negative values
    /// near the boundary; only roundoff-sized ones are clipped.
    pub state: FeField,
    /// `(κ⟨Kφ, φ⟩ + ⟨Wφ, φ⟩ + ∫γ(|φ|²)|φ|²) / ‖φ‖²`; the Rayleigh quotient for linear models.
    pub mu: f64,
    pub energy: f64,
    pub iterations: usize,
    /// Flow step in use at the end, after any halvings.
    pub flow_step: f64,
    /// Energy of the seed followed by the energy after every accepted outer step.
    pub energy_history: Vec<f64>,
    pub last_increment: f64,
}

fn as_field(ops: &Operators, v: &[f64]) -> FeField {
    FeField::from_real(ops.mesh(), v)
}

fn normalize(ops: &Operators, v: &mut [f64]) -> Result<()> {
    let norm = sqrt(ops.mass().quadratic_form_real(v));
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Precondition("gradient flow iterate has zero or non-finite mass"));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

/// Normalized seed for the flow.
pub fn seed(ops: &Operators, profile: SeedProfile) -> Result<FeField> {
    let mesh = ops.mesh();
    let c = mesh.domain().center();
    let mut v: Vec<f64> = (0..mesh.num_dofs())
        .map(|d| {
            let p = mesh.nodes()[mesh.node_of_dof(d)];
            match profile {
                SeedProfile::Gaussian { width } => {
                    let r2 = (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]);
                    crate::math::exp(-r2 / (2.0 * width * width))
                }
                SeedProfile::Constant => 1.0,
            }
        })
        .collect();
    normalize(ops, &mut v)?;
    Ok(as_field(ops, &v))
}

/// System matrix values of `M/τ_g + κK + W + N_γ(φ)`.
fn flow_matrix(ops: &Operators, phi: &[f64], tau: f64) -> Vec<f64> {
    let mut a: Vec<f64> = ops
        .mass()
        .values()
        .iter()
        .zip(ops.hamiltonian().values())
        .map(|(m, h)| m / tau + h)
        .collect();
    if !ops.model().nonlinearity.is_linear() {
        let c: Vec<C64> = phi.iter().map(|&x| C64::new(x, 0.0)).collect();
        let n = assemble_nonlinear_matrix(
            ops.mesh(),
            ops.quadrature(),
            ops.pattern().clone(),
            &c,
            &c,
            &ops.model().nonlinearity,
        );
        a.iter_mut().zip(n.values()).for_each(|(a, n)| *a += n);
    }
    a
}

/// One outer step from `phi` with flow step `tau`.
pub fn dngf_step(ops: &Operators, phi: &FeField, tau: f64) -> Result<FeField> {
    phi.check_mesh(ops.mesh())?;
    let v = phi.real_part();
    let next = step_real(ops, &v, tau, None)?;
    Ok(as_field(ops, &next))
}

fn step_real(ops: &Operators, phi: &[f64], tau: f64, lu: Option<&BandLu<f64>>) -> Result<Vec<f64>> {
    let rhs: Vec<f64> = ops.mass().mul_vec(phi).into_iter().map(|x| x / tau).collect();
    let mut next = match lu {
        Some(lu) => lu.solve(&rhs),
        None => BandLu::factor(ops.pattern(), &flow_matrix(ops, phi, tau))?.solve(&rhs),
    };
    normalize(ops, &mut next)?;
    Ok(next)
}

/// Chemical potential of a unit-mass real field.
pub fn chemical_potential(ops: &Operators, phi: &FeField) -> Result<f64> {
    phi.check_mesh(ops.mesh())?;
    let v = phi.real_part();
    let a = flow_matrix(ops, &v, f64::INFINITY);
    let av: Vec<f64> = (0..v.len())
        .map(|i| ops.pattern().row(i).map(|k| a[k] * v[ops.pattern().cols()[k]]).sum())
        .collect();
    let num: f64 = av.iter().zip(&v).map(|(a, b)| a * b).sum();
    Ok(num / ops.mass().quadratic_form_real(&v))
}

/// Runs the flow from the configured seed until the sup-norm increment
/// falls below `stop_tol`.
pub fn dngf_solve(ops: &Operators, cfg: &DngfConfig) -> Result<GroundState> {
    cfg.validate()?;
    if ops.mesh().num_dofs() == 0 {
        return Err(Error::Precondition("mesh has no interior dofs"));
    }
    let linear = ops.model().nonlinearity.is_linear();
    let mut tau = cfg.flow_step;
    let mut phi = seed(ops, cfg.seed)?.real_part();
    let mut e = ops.energy_of(&as_field(ops, &phi))?;
    let mut history = vec![e];
    let mut linear_lu = if linear {
        Some(BandLu::factor(ops.pattern(), &flow_matrix(ops, &phi, tau))?)
    } else {
        None
    };
    let mut increment = f64::INFINITY;
    for it in 1..=cfg.max_outer {
        let mut halvings = 0;
        let (next, e_next) = loop {
            let next = step_real(ops, &phi, tau, linear_lu.as_ref())?;
            let e_next = ops.energy_of(&as_field(ops, &next))?;
            if e_next <= e + 1e-12 * e.abs().max(1.0) {
                break (next, e_next);
            }
            if halvings == MAX_HALVINGS {
                return Err(Error::FlowEnergyIncrease { halvings });
            }
            halvings += 1;
            tau *= 0.5;
            log::debug!("energy increased at outer step {it}; flow step halved to {tau:e}");
            if linear {
                linear_lu = Some(BandLu::factor(ops.pattern(), &flow_matrix(ops, &phi, tau))?);
            }
        };
        increment = next.iter().zip(&phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        phi = next;
        e = e_next;
        history.push(e);
        if increment < cfg.stop_tol {
            let state = fix_sign(ops, &phi);
            let mu = chemical_potential(ops, &state)?;
            let energy = ops.energy_of(&state)?;
            return Ok(GroundState {
                state,
                mu,
                energy,
                iterations: it,
                flow_step: tau,
                energy_history: history,
                last_increment: increment,
            });
        }
    }
    Err(Error::FlowNotConverged { iterations: cfg.max_outer, increment })
}

fn fix_sign(ops: &Operators, phi: &[f64]) -> FeField {
    let sign = if phi.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
    let mut v: Vec<f64> = phi.iter().map(|x| sign * x).collect();
    let mut worst = 0.0f64;
    for x in &mut v {
        if *x < 0.0 {
            if -*x < NEGATIVE_ROUNDOFF {
                *x = 0.0;
            } else {
                worst = worst.max(-*x);
            }
        }
    }
    if worst > 0.0 {
        log::info!("ground state has negative nodal values down to {:e}", -worst);
    }
    as_field(ops, &v)
}

/// Source of a discrete initial value.
pub enum InitialValue<'a> {
    /// A field on the target mesh or a coarser nested one.
    Field(&'a FeField),
    Function(&'a dyn PointFunction),
}

impl core::fmt::Debug for InitialValue<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::Field(u) => f.debug_tuple("Field").field(u).finish(),
            Self::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Discrete initial value on `mesh`: exact prolongation of a nested field or
/// the Ritz projection of a function.
pub fn project_initial(source: InitialValue<'_>, mesh: &Mesh) -> Result<FeField> {
    match source {
        InitialValue::Field(u) => {
            let coarse = Mesh::uniform(u.domain(), u.level())?;
            prolongate(&coarse, u, mesh)
        }
        InitialValue::Function(v) => ritz_project(mesh, v),
    }
}
