//! Relative errors against a reference solution and experimental orders of
//! convergence.

use alloc::vec::Vec;

use crate::field::FeField;
use crate::math::{log2, sqrt};
use crate::mesh::{prolongate, Mesh};
use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Relative L² and H¹-seminorm errors of the real and imaginary parts.
/// An entry is `None` when the reference part has zero norm.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RelativeErrors {
    pub re_l2: Option<f64>,
    pub im_l2: Option<f64>,
    pub re_h1: Option<f64>,
    pub im_h1: Option<f64>,
}

impl RelativeErrors {
    pub fn as_array(&self) -> [Option<f64>; 4] {
        [self.re_l2, self.im_l2, self.re_h1, self.im_h1]
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| sqrt(num.max(0.0)) / sqrt(den))
}

/// Prolongates `u` to the mesh of `u_ref` and measures the error there with
/// the reference mesh's mass and stiffness matrices.
pub fn compute_relative_errors(
    u_ref: &FeField,
    u: &FeField,
    reference_mesh: &Mesh,
    mass: &CsrMatrix,
    stiffness: &CsrMatrix,
) -> Result<RelativeErrors> {
    u_ref.check_mesh(reference_mesh)?;
    if u.domain() != u_ref.domain() {
        return Err(Error::IncompatibleMesh("different domains"));
    }
    let coarse = Mesh::uniform(u.domain(), u.level())?;
    let up = prolongate(&coarse, u, reference_mesh)?;
    let e = up.sub(u_ref)?;
    let (er, ei) = (e.real_part(), e.imag_part());
    let (rr, ri) = (u_ref.real_part(), u_ref.imag_part());
    Ok(RelativeErrors {
        re_l2: ratio(mass.quadratic_form_real(&er), mass.quadratic_form_real(&rr)),
        im_l2: ratio(mass.quadratic_form_real(&ei), mass.quadratic_form_real(&ri)),
        re_h1: ratio(stiffness.quadratic_form_real(&er), stiffness.quadratic_form_real(&rr)),
        im_h1: ratio(stiffness.quadratic_form_real(&ei), stiffness.quadratic_form_real(&ri)),
    })
}

/// Mean of `log₂(e_i / e_{i+1})` over consecutive pairs, for halving mesh or
/// step sizes.
pub fn compute_eoc(errors: &[f64]) -> Result<f64> {
    compute_eoc_with_ratio(errors, 2.0)
}

/// Mean of `log(e_i / e_{i+1}) / log(ratio)`.
pub fn compute_eoc_with_ratio(errors: &[f64], refinement_ratio: f64) -> Result<f64> {
    if errors.len() < 2 {
        return Err(Error::param("errors", "need at least two values"));
    }
    if errors.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::param("errors", "must be positive and finite"));
    }
    if !(refinement_ratio > 1.0) {
        return Err(Error::param("refinement_ratio", "must exceed 1"));
    }
    let scale = log2(refinement_ratio);
    let sum: f64 = errors.windows(2).map(|w| log2(w[0] / w[1])).sum();
    Ok(sum / (errors.len() - 1) as f64 / scale)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EocRow {
    pub h_rel: f64,
    pub tau_rel: f64,
    pub errors: RelativeErrors,
}

/// Error rows of a study and the average order of each column.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EocTable {
    pub rows: Vec<EocRow>,
    /// Orders of `re_l2, im_l2, re_h1, im_h1`; `None` when undefined.
    pub eoc: [Option<f64>; 4],
    /// False when some study runs failed and their rows are missing.
    pub complete: bool,
}

impl EocTable {
    pub const CSV_HEADER: &'static str = "h_rel,tau_rel,err_re_l2,err_im_l2,err_re_h1,err_im_h1";

    pub fn new(rows: Vec<EocRow>, complete: bool) -> Self {
        let mut eoc = [None; 4];
        for (c, slot) in eoc.iter_mut().enumerate() {
            let column: Option<Vec<f64>> = rows.iter().map(|r| r.errors.as_array()[c]).collect();
            *slot = column.and_then(|v| compute_eoc(&v).ok());
        }
        Self { rows, eoc, complete }
    }
}
