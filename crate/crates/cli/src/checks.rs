//! The `check` suites. Each check returns a named outcome with a JSON payload
//! of the measured quantities; a suite passes when all of its checks do.
//!
//! The oracles use dense `nalgebra` factorizations and their own element
//! formulas, so they share no solver code with the library.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use nlsfem::analysis::{check_fm_cond3, check_gm_lipschitz, check_half_identity, check_truncation_consistency, SampleReport};
use nlsfem::assembly::{l2_distance, ritz_project, WithGradient};
use nlsfem::convergence::{compute_eoc, compute_relative_errors};
use nlsfem::groundstate::{dngf_solve, DngfConfig};
use nlsfem::model::{ModelSpec, NonlinearitySpec, PotentialSpec};
use nlsfem::quadrature::Quadrature;
use nlsfem::stepper::{cn_step, check_stability_bound, evolve, Operators, Snapshots, StepperConfig, TimeGrid};
use nlsfem::{FeField, Mesh, Rect, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Identities,
    Stability,
    Oracles,
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identities" => Ok(Self::Identities),
            "stability" => Ok(Self::Stability),
            "oracles" => Ok(Self::Oracles),
            _ => Err(CliError::config(format!("unknown check suite `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub details: Value,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, passed: bool, details: Value) -> Self {
        Self {
            name: name.into(),
            passed,
            details,
        }
    }

    fn from_samples(name: impl Into<String>, report: &SampleReport) -> Self {
        Self::new(name, report.passed(), serde_json::to_value(report).expect("report serializes"))
    }

    fn from_error(name: impl Into<String>, e: impl std::fmt::Display) -> Self {
        Self::new(name, false, json!({ "error": e.to_string() }))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let checks = match suite {
        Suite::Identities => identities(seed),
        Suite::Stability => stability(seed),
        Suite::Oracles => oracles(seed),
    };
    SuiteReport {
        suite,
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

fn collect(name: &str, r: std::result::Result<CheckOutcome, impl std::fmt::Display>) -> CheckOutcome {
    r.unwrap_or_else(|e| CheckOutcome::from_error(name, e))
}

// ---------------------------------------------------------------- identities

pub const IDENTITY_SAMPLES: usize = 100_000;

/// Error columns of three refinement studies (four decimals) and the average
/// orders printed beside them.
pub const PRINTED_STUDIES: [(&str, &[[f64; 4]], [f64; 4]); 3] = [
    (
        "coupled",
        &[
            [0.7157, 0.7603, 0.9929, 0.8506],
            [0.1753, 0.2370, 0.4045, 0.4379],
            [0.0236, 0.0338, 0.0881, 0.0935],
            [0.0050, 0.0069, 0.0205, 0.0217],
        ],
        [2.38, 2.26, 1.86, 1.76],
    ),
    (
        "space",
        &[
            [0.5571, 1.1710, 0.7954, 1.1367],
            [0.2063, 0.2415, 0.4562, 0.4780],
            [0.0259, 0.0297, 0.1006, 0.1061],
            [0.0015, 0.0017, 0.0195, 0.0206],
        ],
        [2.85, 3.15, 1.78, 1.93],
    ),
    (
        "time",
        &[
            [0.3629, 0.5156, 0.5020, 0.5665],
            [0.1088, 0.1451, 0.1696, 0.1832],
            [0.0269, 0.0356, 0.0471, 0.0506],
            [0.0050, 0.0069, 0.0205, 0.0217],
            [0.0015, 0.0017, 0.0195, 0.0206],
        ],
        [1.98, 2.06, 1.17, 1.20],
    ),
];

pub fn check_eoc_arithmetic() -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut studies = Vec::new();
    for (name, rows, printed) in PRINTED_STUDIES {
        let mut computed = [0.0; 4];
        for c in 0..4 {
            let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            computed[c] = compute_eoc(&col).unwrap_or(f64::NAN);
            worst = worst.max((computed[c] - printed[c]).abs());
        }
        studies.push(json!({ "study": name, "printed": printed, "computed": computed }));
    }
    CheckOutcome::new(
        "eoc_arithmetic",
        worst <= 0.01,
        json!({ "tolerance": 0.01, "worst_deviation": worst, "studies": studies }),
    )
}

pub fn identities(seed: u64) -> Vec<CheckOutcome> {
    let mut out = vec![CheckOutcome::from_samples(
        "half_identity",
        &check_half_identity(IDENTITY_SAMPLES, 4.0, seed),
    )];
    let cases: Vec<(f64, f64)> = [1.0, 20.0].iter().flat_map(|&b| [(b, 1.0), (b, 2.0)]).collect();
    let lipschitz: Vec<CheckOutcome> = cases
        .par_iter()
        .enumerate()
        .map(|(i, &(beta, m))| {
            let name = format!("gm_lipschitz beta={beta} M={m}");
            collect(
                &name,
                check_gm_lipschitz(&NonlinearitySpec::cubic(beta), m, IDENTITY_SAMPLES, seed.wrapping_add(i as u64 + 1))
                    .map(|r| CheckOutcome::from_samples(name.clone(), &r)),
            )
        })
        .collect();
    out.extend(lipschitz);
    out.push(collect(
        "fm_cond3_fit beta=1 M=1",
        check_fm_cond3(&NonlinearitySpec::cubic(1.0), 1.0, 10_000, seed.wrapping_add(10)).map(|r| {
            let finite = r.fitted.is_some_and(|c| c.iter().all(|v| v.is_finite()));
            let mut o = CheckOutcome::from_samples("fm_cond3_fit beta=1 M=1", &r);
            o.passed &= finite;
            o
        }),
    ));
    out.push(collect(
        "truncation_consistency beta=20 M=2",
        check_truncation_consistency(&NonlinearitySpec::cubic(20.0), 2.0, 10_000, seed.wrapping_add(11))
            .map(|r| CheckOutcome::from_samples("truncation_consistency beta=20 M=2", &r)),
    ));
    out.push(check_eoc_arithmetic());
    out
}

// ---------------------------------------------------------------- stability

pub const STABILITY_RUNS: usize = 20;
pub const STABILITY_LEVEL: u32 = 3;
pub const STABILITY_STEPS: usize = 16;

fn random_field(rng: &mut impl Rng, mesh: &Mesh, amplitude: f64) -> FeField {
    let coeffs = (0..mesh.num_dofs())
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amplitude)
        .collect();
    FeField::from_coeffs(mesh, coeffs)
}

fn gaussian(center: [f64; 2], width: f64, amplitude: f64) -> impl Fn([f64; 2]) -> C64 {
    move |p| {
        let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
        C64::new(amplitude * (-r2 / (2.0 * width * width)).exp(), 0.0)
    }
}

/// One perturbed run: returns its parameters and both sides of the bound.
pub fn perturbed_run(seed: u64, run: u64, forcing: bool) -> Result<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    let beta = rng.gen_range(0.0..=20.0);
    let model = ModelSpec {
        nonlinearity: NonlinearitySpec::cubic(beta),
        ..ModelSpec::disorder_dynamics()
    };
    let mesh = Mesh::uniform(model.domain, STABILITY_LEVEL)?;
    let center = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    let width = rng.gen_range(0.8..2.0);
    let amplitude = rng.gen_range(0.1..0.6);
    let u0 = mesh.interpolate(gaussian(center, width, amplitude));
    let f_amp = if forcing { rng.gen_range(0.0..2.0) } else { 0.0 };
    let perturbation: Arc<[FeField]> = (0..STABILITY_STEPS).map(|_| random_field(&mut rng, &mesh, f_amp)).collect();
    let grid = TimeGrid::uniform(model.horizon, STABILITY_STEPS)?;
    let ops = Operators::new(mesh, model, Quadrature::degree4())?;
    let cfg = StepperConfig {
        perturbation: Some(perturbation.clone()),
        ..StepperConfig::default()
    };
    let evo = evolve(&u0, &grid, &ops, &cfg, &Snapshots::FinalOnly)?;
    let report = check_stability_bound(&evo.log, &u0, &perturbation, &grid, ops.mass())?;
    Ok(json!({
        "run": run,
        "beta": beta,
        "forcing_amplitude": f_amp,
        "lhs": report.lhs,
        "rhs": report.rhs,
        "holds": report.holds,
        "max_fp_iters": evo.log.rows.iter().map(|r| r.fp_iters).max(),
    }))
}

pub fn stability(seed: u64) -> Vec<CheckOutcome> {
    let runs: Vec<Result<Value>> = (0..STABILITY_RUNS as u64)
        .into_par_iter()
        .map(|r| perturbed_run(seed, r, true))
        .collect();
    let mut passed = true;
    let mut details = Vec::new();
    for r in runs {
        match r {
            Ok(v) => {
                passed &= v["holds"].as_bool() == Some(true);
                details.push(v);
            }
            Err(e) => {
                passed = false;
                details.push(json!({ "error": e.to_string() }));
            }
        }
    }
    let unforced = collect(
        "stability_unforced",
        perturbed_run(seed, STABILITY_RUNS as u64, false)
            .map(|v| CheckOutcome::new("stability_unforced", v["holds"].as_bool() == Some(true), v)),
    );
    vec![
        CheckOutcome::new("stability_perturbed", passed, json!({ "runs": details })),
        unforced,
    ]
}

// ---------------------------------------------------------------- oracles

pub const ORACLE_LEVEL: u32 = 3;

fn dense(m: &nlsfem::sparse::CsrMatrix) -> DMatrix<f64> {
    let n = m.dim();
    DMatrix::from_row_slice(n, n, &m.to_dense())
}

fn domain() -> Rect {
    Rect::centered_square(6.0).expect("valid square")
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// One linear step against the dense Cayley transform
/// `(M + iτ/2 H)⁻¹ (M − iτ/2 H)`.
pub fn oracle_cayley(seed: u64) -> Result<CheckOutcome> {
    let model = ModelSpec {
        nonlinearity: NonlinearitySpec::none(),
        ..ModelSpec::disorder_dynamics()
    };
    let mesh = Mesh::uniform(model.domain, ORACLE_LEVEL)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0 = random_field(&mut rng, &mesh, 1.0);
    let ops = Operators::new(mesh, model, Quadrature::degree4())?;
    let tau = 0.05;
    let (u1, _) = cn_step(&u0, tau, &ops, &StepperConfig::default(), None)?;

    let m = dense(ops.mass()).map(|v| C64::new(v, 0.0));
    let h = dense(ops.hamiltonian()).map(|v| C64::new(v, 0.0));
    let half = C64::new(0.0, tau / 2.0);
    let lhs = &m + &h * half;
    let rhs = (&m - &h * half) * DVector::from_column_slice(u0.coeffs());
    let expected = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CliError::CheckFailed("dense Cayley system is singular".into()))?;
    let diff = max_diff(u1.coeffs(), expected.as_slice());
    let scale = u0.max_abs();
    Ok(CheckOutcome::new(
        "oracle_cayley_step",
        diff <= 1e-10 * scale.max(1.0),
        json!({ "level": ORACLE_LEVEL, "tau": tau, "max_abs_diff": diff, "tolerance": 1e-10 }),
    ))
}

/// Linear ground state against the smallest generalized eigenpair of `(H, M)`.
pub fn oracle_eigenpair() -> Result<CheckOutcome> {
    let model = ModelSpec {
        nonlinearity: NonlinearitySpec::none(),
        ..ModelSpec::disorder_ground_state()
    };
    let mesh = Mesh::uniform(model.domain, ORACLE_LEVEL)?;
    let ops = Operators::new(mesh, model, Quadrature::degree4())?;
    let gs = dngf_solve(&ops, &DngfConfig::default())?;

    let m = dense(ops.mass());
    let h = dense(ops.hamiltonian());
    let l = m
        .clone()
        .cholesky()
        .ok_or_else(|| CliError::CheckFailed("mass matrix is not positive definite".into()))?
        .l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| CliError::CheckFailed("Cholesky factor is singular".into()))?;
    let reduced = &l_inv * &h * l_inv.transpose();
    let eig = nalgebra::SymmetricEigen::new((&reduced + reduced.transpose()) * 0.5);
    let (imin, lambda) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty spectrum");
    let mut v = l_inv.transpose() * eig.eigenvectors.column(imin);
    v /= (v.transpose() * &m * &v)[0].sqrt();
    let re = DVector::from_iterator(gs.state.len(), gs.state.coeffs().iter().map(|c| c.re));
    if v.dot(&re) < 0.0 {
        v = -v;
    }
    let vec_diff = (&v - &re).amax();
    let mu_diff = (gs.mu - lambda).abs();
    Ok(CheckOutcome::new(
        "oracle_linear_ground_state",
        mu_diff <= 1e-8,
        json!({
            "level": ORACLE_LEVEL,
            "mu": gs.mu,
            "lambda_min": lambda,
            "abs_diff": mu_diff,
            "tolerance": 1e-8,
            "eigenvector_max_diff": vec_diff,
            "flow_iterations": gs.iterations,
        }),
    ))
}

/// P1 stiffness with all nodes numbered, assembled from edge vectors.
fn dense_full_stiffness(mesh: &Mesh) -> DMatrix<f64> {
    let n = mesh.num_nodes();
    let mut k = DMatrix::zeros(n, n);
    for tri in mesh.triangles() {
        let p = tri.map(|v| mesh.nodes()[v]);
        let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        // ∇λ_i is the opposite edge rotated by 90°, divided by twice the area
        let grad: Vec<[f64; 2]> = (0..3)
            .map(|i| {
                let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
                [(a[1] - b[1]) / area2, (b[0] - a[0]) / area2]
            })
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                k[(tri[i], tri[j])] += 0.5 * area2.abs() * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]);
            }
        }
    }
    k
}

/// Ritz projection of a nodal function by a dense solve with the interior
/// block of the stiffness matrix.
fn dense_ritz(mesh: &Mesh, nodal: &[C64]) -> Option<Vec<C64>> {
    let k = dense_full_stiffness(mesh);
    let interior: Vec<usize> = (0..mesh.num_dofs()).map(|d| mesh.node_of_dof(d)).collect();
    let kii = DMatrix::from_fn(interior.len(), interior.len(), |a, b| k[(interior[a], interior[b])]);
    let lu = kii.lu();
    let solve = |part: fn(&C64) -> f64| {
        let v = DVector::from_iterator(nodal.len(), nodal.iter().map(part));
        let load = &k * v;
        lu.solve(&DVector::from_iterator(interior.len(), interior.iter().map(|&i| load[i])))
    };
    let re = solve(|c| c.re)?;
    let im = solve(|c| c.im)?;
    Some(re.iter().zip(im.iter()).map(|(&a, &b)| C64::new(a, b)).collect())
}

pub fn oracle_ritz() -> Result<CheckOutcome> {
    let mesh = Mesh::uniform(domain(), ORACLE_LEVEL)?;
    let f = |p: [f64; 2]| C64::new((p[0] * 0.4).sin() * (p[1] * 0.3).cos() + 0.1 * p[0], (p[0] * p[1] * 0.05).cos());
    let got = ritz_project(&mesh, &f)?;
    let nodal: Vec<C64> = mesh.nodes().iter().map(|&p| f(p)).collect();
    let expected = dense_ritz(&mesh, &nodal).ok_or_else(|| CliError::CheckFailed("dense stiffness is singular".into()))?;
    let diff = max_diff(got.coeffs(), &expected);
    Ok(CheckOutcome::new(
        "oracle_ritz_projection",
        diff <= 1e-10,
        json!({ "level": ORACLE_LEVEL, "max_abs_diff": diff, "tolerance": 1e-10 }),
    ))
}

pub fn oracle_idempotence(seed: u64) -> Result<CheckOutcome> {
    let mesh = Mesh::uniform(domain(), ORACLE_LEVEL)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let u = random_field(&mut rng, &mesh, 1.0);
    let nodal = u.nodal_values(&mesh);
    let f = |p: [f64; 2]| mesh.evaluate_nodal(&nodal, p);
    let pu = ritz_project(&mesh, &f)?;
    let ppu = ritz_project(&mesh, &|p: [f64; 2]| mesh.evaluate_nodal(&pu.nodal_values(&mesh), p))?;
    let diff = max_diff(pu.coeffs(), u.coeffs()).max(max_diff(ppu.coeffs(), pu.coeffs()));
    Ok(CheckOutcome::new(
        "oracle_ritz_idempotence",
        diff <= 1e-12,
        json!({ "level": ORACLE_LEVEL, "max_abs_diff": diff, "tolerance": 1e-12 }),
    ))
}

/// Value of a coarse nodal field at a fine node of a nested uniform mesh,
/// from the two-triangle split of each cell.
fn coarse_value(coarse: &Mesh, nodal: &[C64], fine_level: u32, i: usize, j: usize) -> C64 {
    let r = 1usize << (fine_level - coarse.level());
    let n = coarse.cells_per_side();
    let (ci, cj) = ((i / r).min(n - 1), (j / r).min(n - 1));
    let s = (i - ci * r) as f64 / r as f64;
    let t = (j - cj * r) as f64 / r as f64;
    let v = |a: usize, b: usize| nodal[coarse.node_index(ci + a, cj + b)];
    if s >= t {
        v(0, 0) + (v(1, 0) - v(0, 0)) * s + (v(1, 1) - v(1, 0)) * t
    } else {
        v(0, 0) + (v(1, 1) - v(0, 1)) * s + (v(0, 1) - v(0, 0)) * t
    }
}

/// Relative errors between fields on levels 3 and 5 against dense norms.
pub fn oracle_relative_errors(seed: u64) -> Result<CheckOutcome> {
    let coarse = Mesh::uniform(domain(), 3)?;
    let fine = Mesh::uniform(domain(), 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let uc = random_field(&mut rng, &coarse, 1.0);
    let uf = random_field(&mut rng, &fine, 1.0);
    let fine_ops = Operators::new(
        fine.clone(),
        ModelSpec {
            potential: PotentialSpec::Zero,
            ..ModelSpec::disorder_dynamics()
        },
        Quadrature::degree4(),
    )?;
    let got = compute_relative_errors(&uf, &uc, &fine, fine_ops.mass(), fine_ops.stiffness())?;

    let nodal = uc.nodal_values(&coarse);
    let n = fine.cells_per_side();
    let mut full = vec![C64::new(0.0, 0.0); fine.num_nodes()];
    for j in 0..=n {
        for i in 0..=n {
            full[fine.node_index(i, j)] = coarse_value(&coarse, &nodal, fine.level(), i, j);
        }
    }
    let e: Vec<C64> = (0..fine.num_dofs()).map(|d| uf.coeffs()[d] - full[fine.node_of_dof(d)]).collect();
    let m = dense(fine_ops.mass());
    let k = dense(fine_ops.stiffness());
    let form = |a: &DMatrix<f64>, part: fn(&C64) -> f64, v: &[C64]| {
        let x = DVector::from_iterator(v.len(), v.iter().map(part));
        (x.transpose() * a * &x)[0].sqrt()
    };
    let r = |a: &DMatrix<f64>, part: fn(&C64) -> f64| form(a, part, &e) / form(a, part, uf.coeffs());
    let expected = [r(&m, |c| c.re), r(&m, |c| c.im), r(&k, |c| c.re), r(&k, |c| c.im)];
    let diff = got
        .as_array()
        .iter()
        .zip(expected)
        .map(|(g, e)| g.map_or(f64::INFINITY, |g| (g - e).abs()))
        .fold(0.0, f64::max);
    Ok(CheckOutcome::new(
        "oracle_relative_errors",
        diff <= 1e-12,
        json!({ "levels": [3, 5], "computed": got.as_array(), "dense": expected, "max_abs_diff": diff, "tolerance": 1e-12 }),
    ))
}

/// `‖v − P_h v‖_{L²}` on levels 3, 4, 5 for a smooth `v` vanishing on the
/// boundary; consecutive ratios must lie in `[3.5, 4.5]`.
pub fn projection_decay() -> Result<CheckOutcome> {
    let k = PI / 12.0;
    let v = WithGradient {
        value: move |p: [f64; 2]| C64::new((k * p[0]).cos() * (k * p[1]).cos() * (1.0 + 0.3 * (2.0 * k * p[0]).sin()), 0.0),
        gradient: move |p: [f64; 2]| {
            let (cx, sx, cy, sy) = ((k * p[0]).cos(), (k * p[0]).sin(), (k * p[1]).cos(), (k * p[1]).sin());
            let b = 1.0 + 0.3 * (2.0 * k * p[0]).sin();
            let db = 0.6 * k * (2.0 * k * p[0]).cos();
            [C64::new((-k * sx * b + cx * db) * cy, 0.0), C64::new(-k * cx * sy * b, 0.0)]
        },
    };
    let mut errors = Vec::new();
    for level in 3..=5 {
        let mesh = Mesh::uniform(domain(), level)?;
        let p = ritz_project(&mesh, &v)?;
        errors.push(l2_distance(&mesh, &v, &p, &Quadrature::degree6())?);
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(CheckOutcome::new(
        "ritz_l2_decay",
        ratios.iter().all(|r| (3.5..=4.5).contains(r)),
        json!({ "levels": [3, 4, 5], "errors": errors, "ratios": ratios, "band": [3.5, 4.5] }),
    ))
}

pub fn oracles(seed: u64) -> Vec<CheckOutcome> {
    let jobs: Vec<(&str, Box<dyn Fn() -> Result<CheckOutcome> + Send + Sync>)> = vec![
        ("oracle_cayley_step", Box::new(move || oracle_cayley(seed))),
        ("oracle_linear_ground_state", Box::new(oracle_eigenpair)),
        ("oracle_ritz_projection", Box::new(oracle_ritz)),
        ("oracle_ritz_idempotence", Box::new(move || oracle_idempotence(seed))),
        ("oracle_relative_errors", Box::new(move || oracle_relative_errors(seed))),
        ("ritz_l2_decay", Box::new(projection_decay)),
    ];
    jobs.par_iter().map(|(name, job)| collect(name, job())).collect()
}
