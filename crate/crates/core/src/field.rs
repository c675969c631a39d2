use alloc::vec;
use alloc::vec::Vec;

use crate::mesh::{Mesh, Rect};
use crate::sparse::CsrMatrix;
use crate::{Error, Result, C64};

/// Complex P1 coefficients on the interior nodes of a [`Mesh`].
#[derive(Clone, Debug, PartialEq)]
pub struct FeField {
    domain: Rect,
    level: u32,
    coeffs: Vec<C64>,
}

impl FeField {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self::from_coeffs(mesh, vec![C64::new(0.0, 0.0); mesh.num_dofs()])
    }

    /// Panics if the coefficient count does not match the mesh.
    pub fn from_coeffs(mesh: &Mesh, coeffs: Vec<C64>) -> Self {
        assert_eq!(coeffs.len(), mesh.num_dofs(), "coefficient count");
        Self {
            domain: mesh.domain(),
            level: mesh.level(),
            coeffs,
        }
    }

    pub fn try_from_coeffs(mesh: &Mesh, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != mesh.num_dofs() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_dofs(),
                found: coeffs.len(),
            });
        }
        Ok(Self::from_coeffs(mesh, coeffs))
    }

    pub fn from_real(mesh: &Mesh, values: &[f64]) -> Self {
        Self::from_coeffs(mesh, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    pub fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.domain != mesh.domain() || self.level != mesh.level() {
            return Err(Error::IncompatibleMesh("field belongs to a different mesh"));
        }
        Ok(())
    }

    pub fn same_space(&self, other: &FeField) -> Result<()> {
        if self.domain != other.domain || self.level != other.level {
            return Err(Error::IncompatibleMesh("fields live on different meshes"));
        }
        Ok(())
    }

    /// Values at every mesh node, zero on the boundary.
    pub fn nodal_values(&self, mesh: &Mesh) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); mesh.num_nodes()];
        for (dof, &c) in self.coeffs.iter().enumerate() {
            out[mesh.node_of_dof(dof)] = c;
        }
        out
    }

    pub fn real_part(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    pub fn imag_part(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.im).collect()
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
            ..self.clone()
        }
    }

    pub fn sub(&self, other: &FeField) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
            ..self.clone()
        })
    }

    /// `conj(c)ᵀ A c` for a real symmetric `A`; the imaginary part vanishes.
    pub fn quadratic_form(&self, a: &CsrMatrix) -> f64 {
        a.quadratic_form(&self.coeffs)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}
