//! P1 assembly on [`Mesh`]es.
//!
//! Mass and stiffness matrices are integrated exactly from closed-form
//! element matrices. Potential and nonlinear terms are integrated with a
//! [`Quadrature`] rule, sampling the coefficient pointwise at the quadrature
//! nodes. Boundary nodes are eliminated; the `*_full` variants keep every
//! node and exist for consistency checks.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::field::FeField;
use crate::linsolve::BandLu;
use crate::mesh::Mesh;
use crate::model::{NonlinearitySpec, PotentialSpec};
use crate::quadrature::Quadrature;
use crate::sparse::{CsrMatrix, Pattern};
use crate::{Result, C64};

/// A function that can be sampled pointwise, optionally with its gradient.
pub trait PointFunction {
    fn value(&self, p: [f64; 2]) -> C64;

    fn gradient(&self, _p: [f64; 2]) -> Option<[C64; 2]> {
        None
    }
}

impl<F: Fn([f64; 2]) -> C64> PointFunction for F {
    fn value(&self, p: [f64; 2]) -> C64 {
        self(p)
    }
}

/// Pairs a value closure with its gradient closure.
#[derive(Clone, Copy, Debug)]
pub struct WithGradient<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> PointFunction for WithGradient<F, G>
where
    F: Fn([f64; 2]) -> C64,
    G: Fn([f64; 2]) -> [C64; 2],
{
    fn value(&self, p: [f64; 2]) -> C64 {
        (self.value)(p)
    }

    fn gradient(&self, p: [f64; 2]) -> Option<[C64; 2]> {
        Some((self.gradient)(p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Numbering {
    Interior,
    AllNodes,
}

fn local_dofs(mesh: &Mesh, t: usize, numbering: Numbering) -> [Option<usize>; 3] {
    match numbering {
        Numbering::Interior => mesh.triangle_dofs(t),
        Numbering::AllNodes => mesh.triangles()[t].map(Some),
    }
}

fn pattern_for(mesh: &Mesh, numbering: Numbering) -> Arc<Pattern> {
    let n = match numbering {
        Numbering::Interior => mesh.num_dofs(),
        Numbering::AllNodes => mesh.num_nodes(),
    };
    let mut rows = vec![Vec::new(); n];
    for t in 0..mesh.triangles().len() {
        let dofs = local_dofs(mesh, t, numbering);
        for a in dofs.iter().flatten() {
            for b in dofs.iter().flatten() {
                rows[*a].push(*b);
            }
        }
    }
    Arc::new(Pattern::from_rows(rows))
}

/// Sparsity of P1 operators on the interior dofs.
pub fn sparsity(mesh: &Mesh) -> Arc<Pattern> {
    pattern_for(mesh, Numbering::Interior)
}

pub fn triangle_area(c: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]))
}

/// Gradients of the barycentric coordinates (constant on the triangle).
pub fn barycentric_gradients(c: &[[f64; 2]; 3]) -> [[f64; 2]; 3] {
    let det = 2.0 * triangle_area(c);
    [
        [(c[1][1] - c[2][1]) / det, (c[2][0] - c[1][0]) / det],
        [(c[2][1] - c[0][1]) / det, (c[0][0] - c[2][0]) / det],
        [(c[0][1] - c[1][1]) / det, (c[1][0] - c[0][0]) / det],
    ]
}

/// `(area / 12) · [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn element_mass(c: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let a = triangle_area(c) / 12.0;
    let mut m = [[a; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 2.0 * a;
    }
    m
}

pub fn element_stiffness(c: &[[f64; 2]; 3]) -> [[f64; 3]; 3] {
    let area = triangle_area(c);
    let g = barycentric_gradients(c);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

// Local matrices are symmetric bit for bit and (i,j), (j,i) receive the same
// contributions in the same order, so the result is exactly symmetric.
fn assemble_with<E>(mesh: &Mesh, numbering: Numbering, pattern: Arc<Pattern>, mut element: E) -> CsrMatrix
where
    E: FnMut(usize) -> [[f64; 3]; 3],
{
    let mut a = CsrMatrix::zeros(pattern.clone());
    let values = a.values_mut();
    for t in 0..mesh.triangles().len() {
        let dofs = local_dofs(mesh, t, numbering);
        if dofs.iter().all(Option::is_none) {
            continue;
        }
        let ke = element(t);
        for (i, di) in dofs.iter().enumerate() {
            let Some(di) = *di else { continue };
            for (j, dj) in dofs.iter().enumerate() {
                let Some(dj) = *dj else { continue };
                let k = pattern.position(di, dj).expect("entry in P1 pattern");
                values[k] += ke[i][j];
            }
        }
    }
    a
}

pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    assemble_with(mesh, Numbering::Interior, sparsity(mesh), |t| {
        element_mass(&mesh.triangle_coords(t))
    })
}

/// Mass matrix over every node, boundary included.
pub fn assemble_mass_full(mesh: &Mesh) -> CsrMatrix {
    assemble_with(mesh, Numbering::AllNodes, pattern_for(mesh, Numbering::AllNodes), |t| {
        element_mass(&mesh.triangle_coords(t))
    })
}

pub fn assemble_stiffness(mesh: &Mesh) -> CsrMatrix {
    assemble_with(mesh, Numbering::Interior, sparsity(mesh), |t| {
        element_stiffness(&mesh.triangle_coords(t))
    })
}

/// Stiffness matrix over every node, boundary included.
pub fn assemble_stiffness_full(mesh: &Mesh) -> CsrMatrix {
    assemble_with(mesh, Numbering::AllNodes, pattern_for(mesh, Numbering::AllNodes), |t| {
        element_stiffness(&mesh.triangle_coords(t))
    })
}

/// `Σ_T Σ_q w_q |T| ω(T, q) φ_i(x_q) φ_j(x_q)` on the given pattern, with the
/// weight supplied per triangle and quadrature node.
pub fn assemble_weighted<W>(mesh: &Mesh, quad: &Quadrature, pattern: Arc<Pattern>, mut weight: W) -> CsrMatrix
where
    W: FnMut(usize, usize) -> f64,
{
    assemble_with(mesh, Numbering::Interior, pattern, |t| {
        let area = triangle_area(&mesh.triangle_coords(t));
        let mut ke = [[0.0; 3]; 3];
        for (q, (lam, w)) in quad.points().iter().zip(quad.weights()).enumerate() {
            let s = w * area * weight(t, q);
            for i in 0..3 {
                for j in i..3 {
                    ke[i][j] += s * lam[i] * lam[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..i {
                ke[i][j] = ke[j][i];
            }
        }
        ke
    })
}

/// Potential-weighted mass matrix `(V u, v)`. Negative potential samples are
/// reported through `log::warn!` but do not abort assembly.
pub fn assemble_weighted_mass(mesh: &Mesh, potential: &PotentialSpec, quad: &Quadrature) -> CsrMatrix {
    let mut negative = 0usize;
    let a = assemble_weighted(mesh, quad, sparsity(mesh), |t, q| {
        let x = quad.map_point(q, &mesh.triangle_coords(t));
        let v = potential.eval(x);
        if v < 0.0 {
            negative += 1;
        }
        v
    });
    if negative > 0 {
        log::warn!("potential is negative at {negative} quadrature nodes");
    }
    a
}

/// Values of a field at every quadrature node, laid out as `t * nq + q`.
pub fn values_at_quadrature(mesh: &Mesh, quad: &Quadrature, field: &[C64]) -> Vec<C64> {
    let nq = quad.len();
    let mut out = Vec::with_capacity(mesh.triangles().len() * nq);
    for t in 0..mesh.triangles().len() {
        let dofs = mesh.triangle_dofs(t);
        let local = dofs.map(|d| d.map_or(C64::new(0.0, 0.0), |d| field[d]));
        for lam in quad.points() {
            out.push(local[0] * lam[0] + local[1] * lam[1] + local[2] * lam[2]);
        }
    }
    out
}

/// Matrix of `(G(|a|², |b|²) u, v)` with `G` the divided-difference kernel.
pub fn assemble_nonlinear_matrix(
    mesh: &Mesh,
    quad: &Quadrature,
    pattern: Arc<Pattern>,
    a: &[C64],
    b: &[C64],
    nl: &NonlinearitySpec,
) -> CsrMatrix {
    let nq = quad.len();
    let av = values_at_quadrature(mesh, quad, a);
    let bv = values_at_quadrature(mesh, quad, b);
    assemble_weighted(mesh, quad, pattern, |t, q| {
        let k = t * nq + q;
        nl.divided(av[k].norm_sqr(), bv[k].norm_sqr())
    })
}

/// Load vector `(G(|a|², |b|²) m, φ_i)`.
pub fn assemble_nonlinear_vector(
    mesh: &Mesh,
    a: &FeField,
    b: &FeField,
    m: &FeField,
    nl: &NonlinearitySpec,
    quad: &Quadrature,
) -> Result<Vec<C64>> {
    a.check_mesh(mesh)?;
    b.check_mesh(mesh)?;
    m.check_mesh(mesh)?;
    let nq = quad.len();
    let av = values_at_quadrature(mesh, quad, a.coeffs());
    let bv = values_at_quadrature(mesh, quad, b.coeffs());
    let mv = values_at_quadrature(mesh, quad, m.coeffs());
    let mut out = vec![C64::new(0.0, 0.0); mesh.num_dofs()];
    for t in 0..mesh.triangles().len() {
        let dofs = mesh.triangle_dofs(t);
        if dofs.iter().all(Option::is_none) {
            continue;
        }
        let area = triangle_area(&mesh.triangle_coords(t));
        for (q, (lam, w)) in quad.points().iter().zip(quad.weights()).enumerate() {
            let k = t * nq + q;
            let g = nl.divided(av[k].norm_sqr(), bv[k].norm_sqr());
            let s = mv[k] * (w * area * g);
            for (i, d) in dofs.iter().enumerate() {
                if let Some(d) = d {
                    out[*d] += s * lam[i];
                }
            }
        }
    }
    Ok(out)
}

/// Ritz projection: `(∇(v − P v), ∇w) = 0` for all `w` in the P1 space.
///
/// When `v` provides a gradient the load `∫ ∇v · ∇φ_i` is integrated with the
/// degree-4 rule; otherwise `v` is interpolated at all nodes and the
/// interpolant is projected.
pub fn ritz_project(mesh: &Mesh, v: &dyn PointFunction) -> Result<FeField> {
    let n = mesh.num_dofs();
    if n == 0 {
        return Ok(FeField::zeros(mesh));
    }
    let stiffness = assemble_stiffness(mesh);
    let probe = mesh.nodes()[mesh.node_of_dof(0)];
    let load: Vec<C64> = if v.gradient(probe).is_some() {
        let quad = Quadrature::degree4();
        let mut load = vec![C64::new(0.0, 0.0); n];
        for t in 0..mesh.triangles().len() {
            let dofs = mesh.triangle_dofs(t);
            if dofs.iter().all(Option::is_none) {
                continue;
            }
            let c = mesh.triangle_coords(t);
            let area = triangle_area(&c);
            let g = barycentric_gradients(&c);
            let mut mean_grad = [C64::new(0.0, 0.0); 2];
            for (q, w) in quad.weights().iter().enumerate() {
                let grad = v.gradient(quad.map_point(q, &c)).unwrap_or_default();
                mean_grad[0] += grad[0] * (w * area);
                mean_grad[1] += grad[1] * (w * area);
            }
            for (i, d) in dofs.iter().enumerate() {
                if let Some(d) = d {
                    load[*d] += mean_grad[0] * g[i][0] + mean_grad[1] * g[i][1];
                }
            }
        }
        load
    } else {
        let full = assemble_stiffness_full(mesh);
        let nodal: Vec<C64> = mesh.nodes().iter().map(|&p| v.value(p)).collect();
        let kv = full.mul_complex(&nodal);
        (0..n).map(|d| kv[mesh.node_of_dof(d)]).collect()
    };
    let lu = BandLu::factor(stiffness.pattern(), stiffness.values())?;
    let re = lu.solve(&load.iter().map(|c| c.re).collect::<Vec<_>>());
    let im = lu.solve(&load.iter().map(|c| c.im).collect::<Vec<_>>());
    Ok(FeField::from_coeffs(
        mesh,
        re.into_iter().zip(im).map(|(r, i)| C64::new(r, i)).collect(),
    ))
}

/// `‖v − u_h‖_{L²}` by elementwise quadrature.
pub fn l2_distance(mesh: &Mesh, v: &dyn PointFunction, u: &FeField, quad: &Quadrature) -> Result<f64> {
    u.check_mesh(mesh)?;
    let uq = values_at_quadrature(mesh, quad, u.coeffs());
    let nq = quad.len();
    let mut s = 0.0;
    for t in 0..mesh.triangles().len() {
        let c = mesh.triangle_coords(t);
        let area = triangle_area(&c);
        for (q, w) in quad.weights().iter().enumerate() {
            s += w * area * (v.value(quad.map_point(q, &c)) - uq[t * nq + q]).norm_sqr();
        }
    }
    Ok(crate::math::sqrt(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn mesh(level: u32) -> Mesh {
        Mesh::uniform(Rect::centered_square(6.0).unwrap(), level).unwrap()
    }

    #[test]
    fn level_zero_is_empty() {
        assert_eq!(assemble_mass(&mesh(0)).dim(), 0);
        assert_eq!(assemble_stiffness(&mesh(0)).dim(), 0);
    }

    #[test]
    fn element_matrices_on_reference_triangle() {
        let s = 0.75;
        let tri = [[0.0, 0.0], [s, 0.0], [0.0, s]];
        let m = element_mass(&tri);
        let k = element_stiffness(&tri);
        let expected_k = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                let em = s * s / 24.0 * if i == j { 2.0 } else { 1.0 };
                assert_relative_eq!(m[i][j], em, max_relative = 1e-15);
                assert!((k[i][j] - expected_k[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn full_mass_sums_to_area() {
        for level in 0..=5 {
            let total: f64 = assemble_mass_full(&mesh(level)).values().iter().sum();
            assert_relative_eq!(total, 144.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn full_stiffness_annihilates_constants() {
        for level in 0..=6 {
            let k = assemble_stiffness_full(&mesh(level));
            assert!(k.row_sums().iter().all(|s| s.abs() < 1e-12), "level {level}");
        }
    }

    #[test]
    fn operators_are_exactly_symmetric() {
        let m = mesh(4);
        let quad = Quadrature::degree4();
        assert!(assemble_mass(&m).is_symmetric());
        assert!(assemble_stiffness(&m).is_symmetric());
        assert!(assemble_weighted_mass(&m, &PotentialSpec::DisorderSine, &quad).is_symmetric());
        let f = m.interpolate(|p| C64::new(p[0].cos(), p[1] * 0.1));
        let nl = NonlinearitySpec::cubic(20.0);
        let n = assemble_nonlinear_matrix(&m, &quad, sparsity(&m), f.coeffs(), f.coeffs(), &nl);
        assert!(n.is_symmetric());
    }

    #[test]
    fn rayleigh_quotient_approximates_first_eigenvalue() {
        let m = mesh(5);
        let f = m.interpolate(|p| C64::new((PI * (p[0] + 6.0) / 12.0).sin() * (PI * (p[1] + 6.0) / 12.0).sin(), 0.0));
        let rq = f.quadratic_form(&assemble_stiffness(&m)) / f.quadratic_form(&assemble_mass(&m));
        let exact = 2.0 * (PI / 12.0).powi(2);
        assert!((rq - exact).abs() / exact < 0.02, "{rq} vs {exact}");
        assert!(rq >= exact * (1.0 - 1e-12));
    }

    #[test]
    fn weighted_mass_consistency() {
        let m = mesh(3);
        let quad = Quadrature::degree4();
        let zero = assemble_weighted_mass(&m, &PotentialSpec::Zero, &quad);
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let one = assemble_weighted_mass(&m, &PotentialSpec::Constant(1.0), &quad);
        let mass = assemble_mass(&m);
        for (a, b) in one.values().iter().zip(mass.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn nonlinear_vector_vanishes_for_zero_or_linear() {
        let m = mesh(3);
        let quad = Quadrature::degree4();
        let z = FeField::zeros(&m);
        let v = assemble_nonlinear_vector(&m, &z, &z, &z, &NonlinearitySpec::cubic(20.0), &quad).unwrap();
        assert!(v.iter().all(|c| c.norm() == 0.0));
        let f = m.interpolate(|p| C64::new(1.0 + p[0], p[1]));
        let v = assemble_nonlinear_vector(&m, &f, &f, &f, &NonlinearitySpec::none(), &quad).unwrap();
        assert!(v.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn nonlinear_vector_is_exact_for_cubic_p1_inputs() {
        let m = mesh(3);
        let nl = NonlinearitySpec::cubic(3.0);
        let f = m.interpolate(|p| C64::new((0.7 * p[0]).sin() + 0.2, (0.3 * p[1]).cos() * p[0] * 0.1));
        let g = m.interpolate(|p| C64::new(0.1 * p[1], 1.0 - 0.05 * p[0] * p[1]));
        let lo = assemble_nonlinear_vector(&m, &f, &g, &f, &nl, &Quadrature::degree4()).unwrap();
        let hi = assemble_nonlinear_vector(&m, &f, &g, &f, &nl, &Quadrature::degree6()).unwrap();
        let scale = hi.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (a, b) in lo.iter().zip(&hi) {
            assert!((a - b).norm() <= 1e-13 * scale);
        }
    }

    #[test]
    fn ritz_projection_reproduces_discrete_functions() {
        let m = mesh(3);
        let f = m.interpolate(|p| C64::new((36.0 - p[0] * p[0]) * 0.01, p[1]));
        let nodal = f.nodal_values(&m);
        let v = |p: [f64; 2]| m.evaluate_nodal(&nodal, p);
        let proj = ritz_project(&m, &v).unwrap();
        for (a, b) in proj.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
