//! Crank-Nicolson time stepping with the divided-difference nonlinearity.
//!
//! One step solves
//!
//! ```text
//! [M + iτ/2 (κK + W + N(uⁿ, uⁿ⁻¹))] uⁿ = [M − iτ/2 (κK + W + N(uⁿ, uⁿ⁻¹))] uⁿ⁻¹ + iτ M Fⁿ
//! ```
//!
//! where `N` is the mass matrix weighted by `G(|uⁿ|², |uⁿ⁻¹|²)`. The
//! dependence of `N` on `uⁿ` is resolved by Picard iteration. At a converged
//! iterate the discrete mass and energy of the unperturbed scheme are exactly
//! invariant, up to the iteration tolerance.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{assemble_mass, assemble_nonlinear_matrix, assemble_stiffness, assemble_weighted_mass};
use crate::field::FeField;
use crate::linsolve::{cocg, BandLu};
use crate::math::{exp, round, sqrt};
use crate::mesh::Mesh;
use crate::model::{energy, ModelSpec};
use crate::quadrature::Quadrature;
use crate::sparse::{complex_combination, CsrMatrix, Pattern};
use crate::{Error, Result, C64};

/// Time points `0 = t₀ < t₁ < … < t_N = T`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// `steps` equal steps on `[0, horizon]`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param("horizon", "must be positive"));
        }
        let times = (0..=steps).map(|n| horizon * n as f64 / steps.max(1) as f64).collect();
        if steps == 0 {
            return Ok(Self { times: vec![0.0] });
        }
        Ok(Self { times })
    }

    /// Equidistant grid with `N = round(T/τ)` steps for `τ = 2/3 · τ_rel`; the
    /// step is then adjusted to land on `T`.
    pub fn from_tau_rel(horizon: f64, tau_rel: f64) -> Result<Self> {
        if !(tau_rel > 0.0 && tau_rel.is_finite()) {
            return Err(Error::param("tau_rel", "must be positive"));
        }
        Self::from_tau(horizon, 2.0 / 3.0 * tau_rel)
    }

    /// Equidistant grid with `N = round(T/τ)` steps, at least one.
    pub fn from_tau(horizon: f64, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param("tau", "must be positive"));
        }
        let steps = round(horizon / tau).max(1.0) as usize;
        Self::uniform(horizon, steps)
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return Err(Error::param("times", "must start at 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::param("times", "must be strictly increasing"));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Number of steps `N`.
    pub fn len(&self) -> usize {
        self.times.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("grid is never empty")
    }

    /// `τ_n = t_n − t_{n−1}` for `n = 1..=N`.
    pub fn step(&self, n: usize) -> f64 {
        self.times[n] - self.times[n - 1]
    }

    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.windows(2).map(|w| w[1] - w[0])
    }

    /// `max τ / min τ`, 1 for an empty grid.
    pub fn quasi_uniformity(&self) -> f64 {
        let (lo, hi) = self
            .steps()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), t| (lo.min(t), hi.max(t)));
        if hi == 0.0 {
            1.0
        } else {
            hi / lo
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum LinearSolver {
    /// Banded LU, refactored in every Picard iteration.
    SparseDirect,
    /// Jacobi-preconditioned COCG warm-started from the previous iterate.
    Iterative { tol: f64, max_iter: usize },
}

#[derive(Clone, Debug)]
pub struct StepperConfig {
    /// Relative tolerance for both the increment and the residual.
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub linear_solver: LinearSolver,
    /// Perturbations `F¹, …, F^N`; step `n` uses entry `n − 1`.
    pub perturbation: Option<Arc<[FeField]>>,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            fp_tol: 1e-12,
            fp_max_iter: 50,
            linear_solver: LinearSolver::SparseDirect,
            perturbation: None,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fp_tol > 0.0) {
            return Err(Error::param("fp_tol", "must be positive"));
        }
        if self.fp_max_iter == 0 {
            return Err(Error::param("fp_max_iter", "must be at least 1"));
        }
        if let LinearSolver::Iterative { tol, max_iter } = self.linear_solver {
            if !(tol > 0.0) || max_iter == 0 {
                return Err(Error::param("linear_solver", "iterative tolerance and budget must be positive"));
            }
        }
        Ok(())
    }
}

/// Matrices of a model on a mesh, assembled once.
#[derive(Debug)]
pub struct Operators {
    mesh: Mesh,
    model: ModelSpec,
    quad: Quadrature,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    potential: CsrMatrix,
    // κK + W
    hamiltonian: CsrMatrix,
    mass_lu: BandLu<f64>,
}

impl Operators {
    pub fn new(mesh: Mesh, model: ModelSpec, quad: Quadrature) -> Result<Self> {
        model.validate()?;
        if mesh.domain() != model.domain {
            return Err(Error::IncompatibleMesh("mesh and model domains differ"));
        }
        let mass = assemble_mass(&mesh);
        let stiffness = assemble_stiffness(&mesh);
        let potential = assemble_weighted_mass(&mesh, &model.potential, &quad);
        let hamiltonian = potential.add_scaled(model.kinetic, &stiffness)?;
        let mass_lu = BandLu::factor(mass.pattern(), mass.values())?;
        Ok(Self {
            mesh,
            model,
            quad,
            mass,
            stiffness,
            potential,
            hamiltonian,
            mass_lu,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Potential-weighted mass matrix.
    pub fn potential(&self) -> &CsrMatrix {
        &self.potential
    }

    /// `κK + W`.
    pub fn hamiltonian(&self) -> &CsrMatrix {
        &self.hamiltonian
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        self.mass.pattern()
    }

    /// `‖r‖_{M⁻¹} = sqrt(r* M⁻¹ r)`, the norm of `r` as a functional on the L² space.
    pub fn dual_norm(&self, r: &[C64]) -> f64 {
        let re: Vec<f64> = r.iter().map(|c| c.re).collect();
        let im: Vec<f64> = r.iter().map(|c| c.im).collect();
        let sre = self.mass_lu.solve(&re);
        let sim = self.mass_lu.solve(&im);
        let s: f64 = re.iter().zip(&sre).map(|(a, b)| a * b).sum::<f64>()
            + im.iter().zip(&sim).map(|(a, b)| a * b).sum::<f64>();
        sqrt(s.max(0.0))
    }

    /// `‖u‖_{L²}`.
    pub fn l2_norm(&self, u: &[C64]) -> f64 {
        sqrt(self.mass.quadratic_form(u).max(0.0))
    }

    pub fn mass_of(&self, u: &FeField) -> Result<f64> {
        crate::model::mass(u, &self.mass)
    }

    pub fn energy_of(&self, u: &FeField) -> Result<f64> {
        energy(u, &self.mesh, &self.model, &self.stiffness, &self.potential, &self.quad)
    }

    fn nonlinear_matrix(&self, a: &[C64], b: &[C64]) -> Option<CsrMatrix> {
        if self.model.nonlinearity.is_linear() {
            return None;
        }
        Some(assemble_nonlinear_matrix(
            &self.mesh,
            &self.quad,
            self.pattern().clone(),
            a,
            b,
            &self.model.nonlinearity,
        ))
    }
}

/// Diagnostics of one time step.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepStats {
    pub iterations: usize,
    /// Relative L² increment of the last Picard update.
    pub increment: f64,
    /// Relative dual-norm residual of the returned iterate.
    pub residual: f64,
    pub linear_iterations: usize,
}

fn axpy_sum(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `M(u − u_prev) + iτ/2 A (u + u_prev) − iτ M F`.
fn residual(ops: &Operators, a: &[C64], tau: f64, u: &[C64], u_prev: &[C64], mf: Option<&[C64]>) -> Vec<C64> {
    let diff: Vec<C64> = u.iter().zip(u_prev).map(|(x, y)| x - y).collect();
    let sum = axpy_sum(u, u_prev);
    let m_diff = ops.mass.mul_complex(&diff);
    let a_sum = mul_complex_values(ops.pattern(), a, &sum);
    let half = C64::new(0.0, 0.5 * tau);
    let mut r: Vec<C64> = m_diff.iter().zip(&a_sum).map(|(m, a)| m + half * a).collect();
    if let Some(mf) = mf {
        let s = C64::new(0.0, tau);
        for (r, f) in r.iter_mut().zip(mf) {
            *r -= s * f;
        }
    }
    r
}

fn mul_complex_values(pattern: &Pattern, values: &[C64], x: &[C64]) -> Vec<C64> {
    (0..pattern.dim())
        .map(|i| {
            pattern
                .row(i)
                .fold(C64::new(0.0, 0.0), |acc, k| acc + values[k] * x[pattern.cols()[k]])
        })
        .collect()
}

/// Real operator `κK + W + N` as complex values on the common pattern.
fn operator_values(ops: &Operators, nonlinear: Option<&CsrMatrix>) -> Vec<C64> {
    let mut a: Vec<C64> = ops.hamiltonian.values().iter().map(|&v| C64::new(v, 0.0)).collect();
    if let Some(n) = nonlinear {
        for (a, v) in a.iter_mut().zip(n.values()) {
            a.re += v;
        }
    }
    a
}

/// Advances `u_prev` by one step of length `tau`. A negative `tau` runs the
/// scheme backwards.
pub fn cn_step(
    u_prev: &FeField,
    tau: f64,
    ops: &Operators,
    cfg: &StepperConfig,
    perturbation: Option<&FeField>,
) -> Result<(FeField, StepStats)> {
    cn_step_indexed(u_prev, tau, ops, cfg, perturbation, 0)
}

fn cn_step_indexed(
    u_prev: &FeField,
    tau: f64,
    ops: &Operators,
    cfg: &StepperConfig,
    perturbation: Option<&FeField>,
    step: usize,
) -> Result<(FeField, StepStats)> {
    u_prev.check_mesh(&ops.mesh)?;
    if !(tau != 0.0 && tau.is_finite()) {
        return Err(Error::param("tau", "must be nonzero and finite"));
    }
    if let Some(f) = perturbation {
        f.check_mesh(&ops.mesh)?;
    }
    let up = u_prev.coeffs();
    let n = up.len();
    if n == 0 {
        return Ok((u_prev.clone(), StepStats { iterations: 0, increment: 0.0, residual: 0.0, linear_iterations: 0 }));
    }
    let mf = perturbation.map(|f| ops.mass.mul_complex(f.coeffs()));
    let prev_norm = ops.l2_norm(up);
    let linear = ops.model.nonlinearity.is_linear();

    let mut u = up.to_vec();
    let mut nonlinear = ops.nonlinear_matrix(&u, up);
    let mut increment = f64::INFINITY;
    let mut linear_iterations = 0;
    for k in 0..=cfg.fp_max_iter {
        let a = operator_values(ops, nonlinear.as_ref());
        if k > 0 {
            let r = residual(ops, &a, tau, &u, up, mf.as_deref());
            let scale = prev_norm.max(ops.l2_norm(&u)).max(f64::MIN_POSITIVE);
            let res = ops.dual_norm(&r) / scale;
            // a linear step is exact after one solve
            if linear || (increment <= cfg.fp_tol && res <= cfg.fp_tol) {
                let increment = if linear { 0.0 } else { increment };
                let stats = StepStats { iterations: k, increment, residual: res, linear_iterations };
                return Ok((FeField::from_coeffs(&ops.mesh, u), stats));
            }
            if k == cfg.fp_max_iter {
                return Err(Error::StepFailure { step, iterations: k, increment, residual: res });
            }
        }
        // system M + iτ/2 A and right-hand side (M − iτ/2 A) u_prev + iτ M F
        let half = C64::new(0.0, 0.5 * tau);
        let (pattern, mut sys) = complex_combination(&[(C64::new(1.0, 0.0), &ops.mass)])?;
        for (s, a) in sys.iter_mut().zip(&a) {
            *s += half * a;
        }
        let m_up = ops.mass.mul_complex(up);
        let a_up = mul_complex_values(&pattern, &a, up);
        let mut rhs: Vec<C64> = m_up.iter().zip(&a_up).map(|(m, a)| m - half * a).collect();
        if let Some(mf) = &mf {
            let s = C64::new(0.0, tau);
            for (r, f) in rhs.iter_mut().zip(mf) {
                *r += s * f;
            }
        }
        let next = match cfg.linear_solver {
            LinearSolver::SparseDirect => BandLu::factor(&pattern, &sys)?.solve(&rhs),
            LinearSolver::Iterative { tol, max_iter } => {
                let (x, its) = cocg(&pattern, &sys, &rhs, Some(&u), tol, max_iter)?;
                linear_iterations += its;
                x
            }
        };
        let diff: Vec<C64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        let scale = prev_norm.max(ops.l2_norm(&next)).max(f64::MIN_POSITIVE);
        increment = ops.l2_norm(&diff) / scale;
        u = next;
        nonlinear = ops.nonlinear_matrix(&u, up);
        debug_assert_eq!(u.len(), n);
    }
    unreachable!("the loop returns at k == fp_max_iter")
}

/// One row of a [`ConservationLog`].
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LogRow {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub fp_iters: usize,
    pub residual: f64,
}

/// Mass and energy after every step, including `t = 0`.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConservationLog {
    pub rows: Vec<LogRow>,
}

impl ConservationLog {
    pub const CSV_HEADER: &'static str = "step,time,mass,energy,fp_iters,residual";

    /// `max_n |mass_n − mass_0| / mass_0` (absolute drift if `mass_0 = 0`).
    pub fn mass_drift(&self) -> f64 {
        drift(self.rows.iter().map(|r| r.mass))
    }

    pub fn energy_drift(&self) -> f64 {
        drift(self.rows.iter().map(|r| r.energy))
    }
}

fn drift(mut values: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = values.next() else { return 0.0 };
    let worst = values.fold(0.0f64, |w, v| w.max((v - first).abs()));
    if first.abs() > 0.0 {
        worst / first.abs()
    } else {
        worst
    }
}

/// Which states [`evolve`] keeps.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum Snapshots {
    #[default]
    FinalOnly,
    /// The grid states nearest to each requested time.
    At(Vec<f64>),
    All,
}

#[derive(Clone, Debug)]
pub struct Evolution {
    /// `(step, time, state)`, ordered by step.
    pub snapshots: Vec<(usize, f64, FeField)>,
    pub log: ConservationLog,
    pub final_state: FeField,
}

/// Applies [`cn_step`] for `n = 1, …, N`.
pub fn evolve(
    u0: &FeField,
    grid: &TimeGrid,
    ops: &Operators,
    cfg: &StepperConfig,
    snapshots: &Snapshots,
) -> Result<Evolution> {
    cfg.validate()?;
    u0.check_mesh(&ops.mesh)?;
    if let Some(f) = &cfg.perturbation {
        if f.len() < grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), found: f.len() });
        }
    }
    let times = grid.times();
    let mut keep = vec![false; times.len()];
    match snapshots {
        Snapshots::FinalOnly => {}
        Snapshots::All => keep.iter_mut().for_each(|k| *k = true),
        Snapshots::At(requested) => {
            for &t in requested {
                let nearest = (0..times.len())
                    .min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs()))
                    .expect("grid is never empty");
                keep[nearest] = true;
            }
        }
    }

    let mut log = ConservationLog::default();
    let mut out = Vec::new();
    let mut u = u0.clone();
    log.rows.push(LogRow {
        step: 0,
        time: 0.0,
        mass: ops.mass_of(&u)?,
        energy: ops.energy_of(&u)?,
        fp_iters: 0,
        residual: 0.0,
    });
    if keep[0] {
        out.push((0, 0.0, u.clone()));
    }
    for n in 1..times.len() {
        let f = cfg.perturbation.as_ref().map(|f| &f[n - 1]);
        let (next, stats) = cn_step_indexed(&u, grid.step(n), ops, cfg, f, n)?;
        u = next;
        log.rows.push(LogRow {
            step: n,
            time: times[n],
            mass: ops.mass_of(&u)?,
            energy: ops.energy_of(&u)?,
            fp_iters: stats.iterations,
            residual: stats.residual,
        });
        log::debug!("step {n}: {} iterations, residual {:e}", stats.iterations, stats.residual);
        if keep[n] {
            out.push((n, times[n], u.clone()));
        }
    }
    Ok(Evolution { snapshots: out, log, final_state: u })
}

/// Both sides of `‖u^N‖² ≤ e⁴ (‖u⁰‖² + T Σ τ_n ‖Fⁿ‖²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the perturbation stability bound for a completed run, reading
/// `‖u^N‖²` from the last log row.
pub fn check_stability_bound(
    log: &ConservationLog,
    u0: &FeField,
    perturbation: &[FeField],
    grid: &TimeGrid,
    mass_matrix: &CsrMatrix,
) -> Result<StabilityReport> {
    let lhs = log.rows.last().ok_or(Error::Precondition("empty conservation log"))?.mass;
    let mut forcing = 0.0;
    for (n, tau) in grid.steps().enumerate() {
        if let Some(f) = perturbation.get(n) {
            forcing += tau * crate::model::mass(f, mass_matrix)?;
        }
    }
    let rhs = exp(4.0) * (crate::model::mass(u0, mass_matrix)? + grid.horizon() * forcing);
    Ok(StabilityReport { lhs, rhs, holds: lhs <= rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NonlinearitySpec, PotentialSpec};
    use crate::Rect;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(nl: NonlinearitySpec, potential: PotentialSpec, kinetic: f64) -> ModelSpec {
        ModelSpec {
            domain: Rect::centered_square(6.0).unwrap(),
            kinetic,
            potential,
            nonlinearity: nl,
            horizon: 1.0,
        }
    }

    fn ops(level: u32, m: ModelSpec) -> Operators {
        let mesh = Mesh::uniform(m.domain, level).unwrap();
        Operators::new(mesh, m, Quadrature::degree4()).unwrap()
    }

    fn gaussian(ops: &Operators, amp: f64) -> FeField {
        let f = ops.mesh().interpolate(|p| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            C64::from_polar(amp * (-r2 / 4.0).exp(), 0.3 * p[0])
        });
        f
    }

    fn random_field(ops: &Operators, seed: u64) -> FeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..ops.mesh().num_dofs())
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        FeField::from_coeffs(ops.mesh(), c)
    }

    fn dense(a: &CsrMatrix) -> DMatrix<C64> {
        let n = a.dim();
        DMatrix::from_fn(n, n, |i, j| C64::new(a.get(i, j), 0.0))
    }

    #[test]
    fn grids() {
        let g = TimeGrid::from_tau_rel(1.0, 1.0 / 32.0).unwrap();
        assert_eq!(g.len(), 48);
        assert!((g.horizon() - 1.0).abs() < 1e-15);
        assert!((g.quasi_uniformity() - 1.0).abs() < 1e-9);
        let g = TimeGrid::from_tau(1.0, 0.01).unwrap();
        assert_eq!(g.len(), 100);
        let g = TimeGrid::from_times(vec![0.0, 0.1, 0.4]).unwrap();
        assert!((g.quasi_uniformity() - 3.0).abs() < 1e-12);
        assert!(TimeGrid::from_times(vec![0.0, 0.1, 0.1]).is_err());
        assert!(TimeGrid::from_times(vec![0.1, 0.2]).is_err());
        assert_eq!(TimeGrid::uniform(1.0, 0).unwrap().len(), 0);
    }

    #[test]
    fn zero_state_stays_zero() {
        let o = ops(3, model(NonlinearitySpec::cubic(20.0), PotentialSpec::DisorderSine, 0.5));
        let (u, _) = cn_step(&FeField::zeros(o.mesh()), 0.1, &o, &StepperConfig::default(), None).unwrap();
        assert!(u.coeffs().iter().all(|c| *c == C64::new(0.0, 0.0)));
    }

    #[test]
    fn linear_step_matches_dense_cayley() {
        let o = ops(3, model(NonlinearitySpec::none(), PotentialSpec::Zero, 1.0));
        let u0 = random_field(&o, 1);
        let tau = 0.05;
        let (u1, stats) = cn_step(&u0, tau, &o, &StepperConfig::default(), None).unwrap();
        assert_eq!(stats.iterations, 1);
        let m = dense(o.mass());
        let k = dense(o.stiffness());
        let s = C64::new(0.0, tau / 2.0);
        let lhs = &m + &k * s;
        let rhs = (&m - &k * s) * DVector::from_column_slice(u0.coeffs());
        let oracle = lhs.lu().solve(&rhs).unwrap();
        let err = u1.coeffs().iter().zip(oracle.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn cubic_step_conserves_mass_and_energy() {
        let o = ops(3, model(NonlinearitySpec::cubic(20.0), PotentialSpec::DisorderSine, 0.5));
        let u0 = gaussian(&o, 0.5);
        let (u1, stats) = cn_step(&u0, 0.05, &o, &StepperConfig::default(), None).unwrap();
        assert!(stats.iterations > 1 && stats.residual <= 1e-12);
        let (m0, m1) = (o.mass_of(&u0).unwrap(), o.mass_of(&u1).unwrap());
        let (e0, e1) = (o.energy_of(&u0).unwrap(), o.energy_of(&u1).unwrap());
        assert!((m1 - m0).abs() <= 1e-11 * m0, "{m0} {m1}");
        assert!((e1 - e0).abs() <= 1e-9 * e0, "{e0} {e1}");
    }

    #[test]
    fn iterative_solver_agrees_with_direct() {
        let o = ops(3, model(NonlinearitySpec::cubic(5.0), PotentialSpec::DisorderSine, 0.5));
        let u0 = gaussian(&o, 0.5);
        let direct = cn_step(&u0, 0.05, &o, &StepperConfig::default(), None).unwrap().0;
        let cfg = StepperConfig {
            linear_solver: LinearSolver::Iterative { tol: 1e-14, max_iter: 500 },
            ..StepperConfig::default()
        };
        let (iter, stats) = cn_step(&u0, 0.05, &o, &cfg, None).unwrap();
        assert!(stats.linear_iterations > 0);
        let d = o.l2_norm(&iter.sub(&direct).unwrap().into_coeffs());
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn steps_are_time_reversible() {
        for nl in [NonlinearitySpec::none(), NonlinearitySpec::cubic(10.0)] {
            let o = ops(3, model(nl, PotentialSpec::DisorderSine, 0.5));
            let u0 = gaussian(&o, 0.5);
            let cfg = StepperConfig::default();
            let (u1, _) = cn_step(&u0, 0.05, &o, &cfg, None).unwrap();
            let (back, _) = cn_step(&u1, -0.05, &o, &cfg, None).unwrap();
            let err = o.l2_norm(&back.sub(&u0).unwrap().into_coeffs());
            assert!(err < 1e-10, "{err}");
        }
    }

    #[test]
    fn evolve_is_step_composition() {
        let o = ops(3, model(NonlinearitySpec::none(), PotentialSpec::DisorderSine, 0.5));
        let u0 = random_field(&o, 2);
        let grid = TimeGrid::uniform(0.5, 5).unwrap();
        let cfg = StepperConfig::default();
        let run = evolve(&u0, &grid, &o, &cfg, &Snapshots::All).unwrap();
        let mut u = u0.clone();
        for n in 1..=5 {
            u = cn_step(&u, grid.step(n), &o, &cfg, None).unwrap().0;
            assert_eq!(run.snapshots[n].2.coeffs(), u.coeffs());
        }
        assert_eq!(run.final_state.coeffs(), u.coeffs());
        assert_eq!(run.log.rows.len(), 6);

        let empty = evolve(&u0, &TimeGrid::uniform(1.0, 0).unwrap(), &o, &cfg, &Snapshots::All).unwrap();
        assert_eq!(empty.log.rows.len(), 1);
        assert_eq!(empty.snapshots.len(), 1);
    }

    #[test]
    fn snapshots_at_requested_times() {
        let o = ops(2, model(NonlinearitySpec::cubic(1.0), PotentialSpec::Zero, 1.0));
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let run = evolve(&gaussian(&o, 1.0), &grid, &o, &StepperConfig::default(), &Snapshots::At(vec![0.0, 0.52, 1.0]))
            .unwrap();
        let steps: Vec<usize> = run.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(steps, vec![0, 5, 10]);
    }

    #[test]
    fn stability_bound_with_random_forcing() {
        let o = ops(3, model(NonlinearitySpec::cubic(20.0), PotentialSpec::DisorderSine, 0.5));
        let u0 = gaussian(&o, 0.5);
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let forcing: Vec<FeField> = (0..16)
            .map(|n| {
                let f = random_field(&o, 100 + n);
                let norm = o.l2_norm(f.coeffs());
                f.scaled(C64::new(1.0 / norm, 0.0))
            })
            .collect();
        let cfg = StepperConfig { perturbation: Some(forcing.clone().into()), ..StepperConfig::default() };
        let run = evolve(&u0, &grid, &o, &cfg, &Snapshots::FinalOnly).unwrap();
        let report = check_stability_bound(&run.log, &u0, &forcing, &grid, o.mass()).unwrap();
        assert!(report.holds, "{report:?}");
        assert!((report.rhs - 4f64.exp() * (o.mass_of(&u0).unwrap() + 1.0)).abs() < 1e-9 * report.rhs);

        // doubling F scales the forcing part by four
        let doubled: Vec<FeField> = forcing.iter().map(|f| f.scaled(C64::new(2.0, 0.0))).collect();
        let r2 = check_stability_bound(&run.log, &u0, &doubled, &grid, o.mass()).unwrap();
        let base = 4f64.exp() * o.mass_of(&u0).unwrap();
        assert!(((r2.rhs - base) - 4.0 * (report.rhs - base)).abs() < 1e-9 * r2.rhs);

        let free = evolve(&u0, &grid, &o, &StepperConfig::default(), &Snapshots::FinalOnly).unwrap();
        assert!(check_stability_bound(&free.log, &u0, &[], &grid, o.mass()).unwrap().holds);
    }

    #[test]
    fn rejects_bad_input() {
        let o = ops(2, model(NonlinearitySpec::none(), PotentialSpec::Zero, 1.0));
        let u0 = FeField::zeros(o.mesh());
        assert!(cn_step(&u0, 0.0, &o, &StepperConfig::default(), None).is_err());
        let other = Mesh::uniform(o.mesh().domain(), 3).unwrap();
        assert!(cn_step(&FeField::zeros(&other), 0.1, &o, &StepperConfig::default(), None).is_err());
        let cfg = StepperConfig { fp_max_iter: 0, ..StepperConfig::default() };
        assert!(evolve(&u0, &TimeGrid::uniform(1.0, 1).unwrap(), &o, &cfg, &Snapshots::FinalOnly).is_err());
    }

    #[test]
    fn picard_budget_exhaustion_is_reported() {
        let o = ops(3, model(NonlinearitySpec::cubic(20.0), PotentialSpec::Zero, 0.5));
        let u0 = gaussian(&o, 2.0);
        let cfg = StepperConfig { fp_max_iter: 2, ..StepperConfig::default() };
        let err = cn_step(&u0, 0.2, &o, &cfg, None).unwrap_err();
        assert!(matches!(err, Error::StepFailure { iterations: 2, .. }));
    }
}
