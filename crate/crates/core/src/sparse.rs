//! Compressed sparse row storage for the real symmetric finite element
//! operators. Complex systems are formed from linear combinations of these
//! with complex scalars.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result, C64};

/// Row pointers and sorted column indices, shared between matrices that
/// live on the same mesh.
#[derive(Debug, PartialEq, Eq)]
pub struct Pattern {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
}

impl Pattern {
    /// Builds a pattern from per-row (unsorted, possibly duplicated) columns.
    pub fn from_rows(rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(&r);
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols }
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> core::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    /// Storage position of entry `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row(i);
        self.cols[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.dim())
            .flat_map(|i| self.cols[self.row(i)].iter().map(move |&j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<Pattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    pub fn from_values(pattern: Arc<Pattern>, values: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.nnz() {
            return Err(Error::DimensionMismatch {
                expected: pattern.nnz(),
                found: values.len(),
            });
        }
        Ok(Self { pattern, values })
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        Arc::ptr_eq(&self.pattern, &other.pattern) || self.pattern == other.pattern
    }

    /// `self + s · other` on a shared pattern.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> Result<CsrMatrix> {
        if !self.same_pattern(other) {
            return Err(Error::IncompatibleMesh("matrices with different sparsity"));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        Ok(Self {
            pattern: self.pattern.clone(),
            values,
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                self.pattern
                    .row(i)
                    .map(|k| self.values[k] * x[self.pattern.cols[k]])
                    .sum()
            })
            .collect()
    }

    pub fn mul_complex(&self, x: &[C64]) -> Vec<C64> {
        (0..self.dim())
            .map(|i| {
                self.pattern
                    .row(i)
                    .fold(C64::new(0.0, 0.0), |acc, k| acc + x[self.pattern.cols[k]] * self.values[k])
            })
            .collect()
    }

    /// Real part of `conj(x)ᵀ A x`; exact Hermitian forms have no imaginary part.
    pub fn quadratic_form(&self, x: &[C64]) -> f64 {
        let ax = self.mul_complex(x);
        x.iter().zip(&ax).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn quadratic_form_real(&self, x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        x.iter().zip(&ax).map(|(a, b)| a * b).sum()
    }

    /// `conj(x)ᵀ A y`.
    pub fn inner(&self, x: &[C64], y: &[C64]) -> C64 {
        let ay = self.mul_complex(y);
        x.iter().zip(&ay).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim()).all(|i| {
            self.pattern.row(i).all(|k| {
                let j = self.pattern.cols[k];
                self.pattern
                    .position(j, i)
                    .is_some_and(|kt| self.values[kt].to_bits() == self.values[k].to_bits())
            })
        })
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.pattern.row(i).map(|k| self.values[k]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    /// Dense row-major copy, for small test problems.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for k in self.pattern.row(i) {
                d[i * n + self.pattern.cols[k]] = self.values[k];
            }
        }
        d
    }
}

/// `Σ_k s_k A_k` as complex values on the common pattern of the `A_k`.
pub fn complex_combination(terms: &[(C64, &CsrMatrix)]) -> Result<(Arc<Pattern>, Vec<C64>)> {
    let first = terms.first().ok_or(Error::Precondition("empty combination"))?.1;
    let mut values = vec![C64::new(0.0, 0.0); first.pattern.nnz()];
    for (s, a) in terms {
        if !first.same_pattern(a) {
            return Err(Error::IncompatibleMesh("matrices with different sparsity"));
        }
        for (v, &x) in values.iter_mut().zip(&a.values) {
            *v += s * x;
        }
    }
    Ok((first.pattern.clone(), values))
}
