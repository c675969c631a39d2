//! Continuous model data: potential, nonlinearity, kinetic coefficient and
//! horizon, plus the discrete mass and energy functionals.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::assembly::{triangle_area, values_at_quadrature};
use crate::field::FeField;
use crate::math::{floor, sin};
use crate::mesh::{Mesh, Rect};
use crate::quadrature::Quadrature;
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Relative gap below which a custom divided difference falls back to the
/// midpoint derivative.
pub const DIVIDED_DIFFERENCE_SWITCH: f64 = 1e-8;

pub type PointMap = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PotentialSpec {
    Zero,
    Constant(f64),
    /// `weight · |x − center|²`
    Harmonic { center: [f64; 2], weight: f64 },
    /// `⌊5 + 2 sin(πx/3) sin(πy/3)⌋`, piecewise constant with values in 3..=7.
    DisorderSine,
    Sum(Vec<PotentialSpec>),
    Custom(PointMap),
}

impl PotentialSpec {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::Harmonic { center, weight } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                weight * (dx * dx + dy * dy)
            }
            Self::DisorderSine => floor(5.0 + 2.0 * sin(PI * p[0] / 3.0) * sin(PI * p[1] / 3.0)),
            Self::Sum(terms) => terms.iter().map(|t| t.eval(p)).sum(),
            Self::Custom(f) => f(p),
        }
    }
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("Zero"),
            Self::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Self::Harmonic { center, weight } => f
                .debug_struct("Harmonic")
                .field("center", center)
                .field("weight", weight)
                .finish(),
            Self::DisorderSine => f.write_str("DisorderSine"),
            Self::Sum(t) => f.debug_tuple("Sum").field(t).finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Clone)]
pub enum Nonlinearity {
    None,
    /// `γ(ρ) = β ρ`, the Gross-Pitaevskii case.
    Cubic { beta: f64 },
    /// `γ(ρ) = Σ_k c_k ρ^k` with `c_0 = 0`.
    Polynomial { coeffs: Vec<f64> },
    /// `γ` and its antiderivative `Γ` given as closures.
    Custom { gamma: ScalarMap, antiderivative: ScalarMap },
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("None"),
            Self::Cubic { beta } => f.debug_struct("Cubic").field("beta", beta).finish(),
            Self::Polynomial { coeffs } => f.debug_struct("Polynomial").field("coeffs", coeffs).finish(),
            Self::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NonlinearitySpec {
    pub kind: Nonlinearity,
    /// Growth exponent `q` of the Lipschitz bound; informational only.
    pub growth_exponent: Option<f64>,
}

impl NonlinearitySpec {
    pub fn none() -> Self {
        Self {
            kind: Nonlinearity::None,
            growth_exponent: None,
        }
    }

    pub fn cubic(beta: f64) -> Self {
        Self {
            kind: Nonlinearity::Cubic { beta },
            growth_exponent: Some(1.0),
        }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self {
            kind: Nonlinearity::Polynomial { coeffs },
            growth_exponent: None,
        }
    }

    pub fn custom<G, A>(gamma: G, antiderivative: A) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        A: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: Nonlinearity::Custom {
                gamma: Arc::new(gamma),
                antiderivative: Arc::new(antiderivative),
            },
            growth_exponent: None,
        }
    }

    pub fn is_linear(&self) -> bool {
        match &self.kind {
            Nonlinearity::None => true,
            Nonlinearity::Cubic { beta } => *beta == 0.0,
            Nonlinearity::Polynomial { coeffs } => coeffs.iter().all(|&c| c == 0.0),
            Nonlinearity::Custom { .. } => false,
        }
    }

    pub fn gamma(&self, rho: f64) -> f64 {
        match &self.kind {
            Nonlinearity::None => 0.0,
            Nonlinearity::Cubic { beta } => beta * rho,
            Nonlinearity::Polynomial { coeffs } => horner(coeffs, rho),
            Nonlinearity::Custom { gamma, .. } => gamma(rho),
        }
    }

    /// `Γ(ρ) = ∫_0^ρ γ`.
    pub fn antiderivative(&self, rho: f64) -> f64 {
        match &self.kind {
            Nonlinearity::None => 0.0,
            Nonlinearity::Cubic { beta } => 0.5 * beta * rho * rho,
            Nonlinearity::Polynomial { coeffs } => {
                let integrated: Vec<f64> = core::iter::once(0.0)
                    .chain(coeffs.iter().enumerate().map(|(k, c)| c / (k + 1) as f64))
                    .collect();
                horner(&integrated, rho)
            }
            Nonlinearity::Custom { antiderivative, .. } => antiderivative(rho),
        }
    }

    /// `(γ, γ', γ'')` at `rho`. Closed forms are differentiated exactly,
    /// custom closures by central differences (unchecked here).
    pub fn derivatives(&self, rho: f64) -> [f64; 3] {
        match &self.kind {
            Nonlinearity::None => [0.0; 3],
            Nonlinearity::Cubic { beta } => [beta * rho, *beta, 0.0],
            Nonlinearity::Polynomial { coeffs } => {
                let d1: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
                let d2: Vec<f64> = d1.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
                [horner(coeffs, rho), horner(&d1, rho), horner(&d2, rho)]
            }
            Nonlinearity::Custom { .. } => {
                let h = 1e-4 * rho.abs().max(1.0);
                finite_difference_derivatives(|s| self.gamma(s), rho, h)
            }
        }
    }

    /// The divided difference `(Γ(t1) − Γ(t2)) / (t1 − t2)`, continuously
    /// extended by `γ(t1)` on the diagonal.
    ///
    /// Polynomial nonlinearities use the expanded quotient, which has no
    /// cancellation. Custom closures switch to `γ((t1 + t2)/2)` once
    /// `|t1 − t2| ≤ 1e-8 · max(1, t1, t2)`. Both forms are symmetric in
    /// their arguments bit for bit.
    pub fn divided(&self, t1: f64, t2: f64) -> f64 {
        match &self.kind {
            Nonlinearity::None => 0.0,
            Nonlinearity::Cubic { beta } => 0.5 * beta * (t1 + t2),
            Nonlinearity::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c / (k + 1) as f64 * complete_homogeneous(k, t1, t2))
                .sum(),
            Nonlinearity::Custom { .. } => divided_with_switch(t1, t2, |s| self.antiderivative(s), |s| self.gamma(s)),
        }
    }

    /// Spot checks `γ(0) = 0`, `Γ(0) = 0`, `γ ≥ 0` and monotone `Γ` on `[0, rho_max]`.
    pub fn validate(&self, rho_max: f64) -> Result<()> {
        match &self.kind {
            Nonlinearity::Cubic { beta } if !(*beta >= 0.0 && beta.is_finite()) => {
                return Err(Error::param("beta", "must be finite and nonnegative"))
            }
            Nonlinearity::Polynomial { coeffs } if coeffs.first().is_some_and(|&c| c != 0.0) => {
                return Err(Error::param("coeffs", "constant coefficient must vanish"))
            }
            _ => {}
        }
        if self.gamma(0.0) != 0.0 || self.antiderivative(0.0) != 0.0 {
            return Err(Error::UnsupportedNonlinearity("γ(0) and Γ(0) must vanish"));
        }
        let samples = 257;
        let mut prev = 0.0f64;
        for k in 0..=samples {
            let rho = rho_max * k as f64 / samples as f64;
            let g = self.gamma(rho);
            let big = self.antiderivative(rho);
            if !(g.is_finite() && big.is_finite()) {
                return Err(Error::UnsupportedNonlinearity("non-finite values"));
            }
            if g < 0.0 {
                return Err(Error::UnsupportedNonlinearity("γ must be nonnegative"));
            }
            if big < prev - 1e-12 * prev.abs().max(1.0) {
                return Err(Error::UnsupportedNonlinearity("Γ must be nondecreasing"));
            }
            prev = big;
        }
        Ok(())
    }
}

/// Free-function form of [`NonlinearitySpec::divided`].
pub fn g_divided(t1: f64, t2: f64, nl: &NonlinearitySpec) -> f64 {
    nl.divided(t1, t2)
}

pub(crate) fn divided_with_switch(t1: f64, t2: f64, big: impl Fn(f64) -> f64, small: impl Fn(f64) -> f64) -> f64 {
    let scale = 1.0f64.max(t1).max(t2);
    if (t1 - t2).abs() > DIVIDED_DIFFERENCE_SWITCH * scale {
        (big(t1) - big(t2)) / (t1 - t2)
    } else {
        small(0.5 * (t1 + t2))
    }
}

pub(crate) fn finite_difference_derivatives(f: impl Fn(f64) -> f64, x: f64, h: f64) -> [f64; 3] {
    // one-sided near the origin, the closures are only defined on [0, ∞)
    let c = x.max(2.0 * h);
    let (fm2, fm, f0, fp, fp2) = (f(c - 2.0 * h), f(c - h), f(c), f(c + h), f(c + 2.0 * h));
    let d1 = (fm2 - 8.0 * fm + 8.0 * fp - fp2) / (12.0 * h);
    let d2 = (-fm2 + 16.0 * fm - 30.0 * f0 + 16.0 * fp - fp2) / (12.0 * h * h);
    [f(x), d1 + d2 * (x - c), d2]
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn powi(x: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, _| acc * x)
}

// Σ_{j=0}^{k} t1^j t2^{k−j}, summed over symmetric pairs so that swapping the
// arguments gives the same bits.
fn complete_homogeneous(k: usize, t1: f64, t2: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..=k / 2 {
        let a = powi(t1, j) * powi(t2, k - j);
        if 2 * j == k {
            s += a;
        } else {
            let b = powi(t2, j) * powi(t1, k - j);
            s += a + b;
        }
    }
    s
}

#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub domain: Rect,
    /// Coefficient `κ > 0` of `−κΔ`.
    pub kinetic: f64,
    pub potential: PotentialSpec,
    pub nonlinearity: NonlinearitySpec,
    /// Final time `T > 0`.
    pub horizon: f64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if !(self.kinetic > 0.0 && self.kinetic.is_finite()) {
            return Err(Error::param("kinetic", "must be positive"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::param("horizon", "must be positive"));
        }
        Ok(())
    }

    /// `i ∂t u = −½Δu + V u + 20|u|²u` on `[-6, 6]²` up to `T = 1`, with the
    /// disorder potential.
    pub fn disorder_dynamics() -> Self {
        Self {
            domain: Rect::centered_square(6.0).expect("valid square"),
            kinetic: 0.5,
            potential: PotentialSpec::DisorderSine,
            nonlinearity: NonlinearitySpec::cubic(20.0),
            horizon: 1.0,
        }
    }

    /// Energy `½∫|∇v|² + ∫(V + ½|x|²)|v|² + 5∫|v|⁴` whose constrained minimizer
    /// is the initial value of [`ModelSpec::disorder_dynamics`].
    pub fn disorder_ground_state() -> Self {
        Self {
            potential: PotentialSpec::Sum(vec![
                PotentialSpec::DisorderSine,
                PotentialSpec::Harmonic {
                    center: [0.0, 0.0],
                    weight: 0.5,
                },
            ]),
            nonlinearity: NonlinearitySpec::cubic(10.0),
            ..Self::disorder_dynamics()
        }
    }
}

/// `conj(c)ᵀ M c`.
pub fn mass(field: &FeField, mass_matrix: &CsrMatrix) -> Result<f64> {
    if field.len() != mass_matrix.dim() {
        return Err(Error::DimensionMismatch {
            expected: mass_matrix.dim(),
            found: field.len(),
        });
    }
    Ok(field.quadratic_form(mass_matrix))
}

/// `∫ Γ(|u|²)` with the given rule.
pub fn nonlinear_energy(mesh: &Mesh, field: &FeField, nl: &NonlinearitySpec, quad: &Quadrature) -> f64 {
    if nl.is_linear() {
        return 0.0;
    }
    let nq = quad.len();
    let values = values_at_quadrature(mesh, quad, field.coeffs());
    let mut e = 0.0;
    for t in 0..mesh.triangles().len() {
        let area = triangle_area(&mesh.triangle_coords(t));
        for (q, w) in quad.weights().iter().enumerate() {
            e += w * area * nl.antiderivative(values[t * nq + q].norm_sqr());
        }
    }
    e
}

/// `κ (∇u, ∇u) + (V u, u) + ∫ Γ(|u|²)`.
pub fn energy(
    field: &FeField,
    mesh: &Mesh,
    model: &ModelSpec,
    stiffness: &CsrMatrix,
    potential: &CsrMatrix,
    quad: &Quadrature,
) -> Result<f64> {
    field.check_mesh(mesh)?;
    Ok(model.kinetic * field.quadratic_form(stiffness)
        + field.quadratic_form(potential)
        + nonlinear_energy(mesh, field, &model.nonlinearity, quad))
}
