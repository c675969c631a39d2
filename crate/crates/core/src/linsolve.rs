//! Linear solvers for the systems arising in the time stepper and the
//! gradient flow.
//!
//! The systems have the form `M + i s H` (complex symmetric with Hermitian
//! part `M` positive definite) or are real symmetric positive definite. Both
//! classes admit Gaussian elimination without pivoting, so a banded LU
//! factorization in the lexicographic dof ordering is used as the direct
//! solver. [`cocg`] is the iterative alternative.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::sparse::Pattern;
use crate::{Error, Result, C64};

/// Field operations the band factorization needs.
pub trait Scalar:
    Copy
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const ZERO: Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for C64 {
    const ZERO: Self = C64 { re: 0.0, im: 0.0 };
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// In-place LU factors of a band matrix with equal lower and upper bandwidth.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    n: usize,
    bw: usize,
    // row i holds columns i-bw ..= i+bw
    data: Vec<T>,
}

impl<T: Scalar> BandLu<T> {
    pub fn factor(pattern: &Pattern, values: &[T]) -> Result<Self> {
        if values.len() != pattern.nnz() {
            return Err(Error::DimensionMismatch {
                expected: pattern.nnz(),
                found: values.len(),
            });
        }
        let n = pattern.dim();
        let bw = pattern.bandwidth();
        let width = 2 * bw + 1;
        let mut data = vec![T::ZERO; n * width];
        for i in 0..n {
            for k in pattern.row(i) {
                let j = pattern.cols()[k];
                data[i * width + (j + bw - i)] = values[k];
            }
        }
        let mut lu = Self { n, bw, data };
        lu.eliminate()?;
        Ok(lu)
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, bw) = (self.n, self.bw);
        let width = 2 * bw + 1;
        for k in 0..n {
            let pivot = self.data[k * width + bw];
            if pivot.modulus() == 0.0 || !pivot.modulus().is_finite() {
                return Err(Error::ZeroPivot { row: k });
            }
            let end = (k + bw + 1).min(n);
            let len = end - k - 1;
            let (head, tail) = self.data.split_at_mut((k + 1) * width);
            let pivot_row = &head[k * width + bw + 1..k * width + bw + 1 + len];
            for i in (k + 1)..end {
                let row = &mut tail[(i - k - 1) * width..(i - k) * width];
                let ik = k + bw - i;
                if row[ik] == T::ZERO {
                    continue;
                }
                let l = row[ik] / pivot;
                row[ik] = l;
                for (a, &b) in row[ik + 1..ik + 1 + len].iter_mut().zip(pivot_row) {
                    *a = *a - l * b;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let (n, bw) = (self.n, self.bw);
        let width = 2 * bw + 1;
        assert_eq!(x.len(), n);
        for i in 0..n {
            let start = i.saturating_sub(bw);
            let mut s = x[i];
            for j in start..i {
                s = s - self.data[i * width + (j + bw - i)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let end = (i + bw + 1).min(n);
            let mut s = x[i];
            for j in (i + 1)..end {
                s = s - self.data[i * width + (j + bw - i)] * x[j];
            }
            x[i] = s / self.data[i * width + bw];
        }
    }
}

/// Conjugate orthogonal conjugate gradients for complex symmetric systems,
/// Jacobi preconditioned. Returns the solution and the iteration count.
pub fn cocg(
    pattern: &Pattern,
    values: &[C64],
    b: &[C64],
    x0: Option<&[C64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<C64>, usize)> {
    let n = pattern.dim();
    let matvec = |x: &[C64]| -> Vec<C64> {
        (0..n)
            .map(|i| {
                pattern
                    .row(i)
                    .fold(C64::new(0.0, 0.0), |acc, k| acc + values[k] * x[pattern.cols()[k]])
            })
            .collect()
    };
    let bilinear = |x: &[C64], y: &[C64]| -> C64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let norm = |x: &[C64]| -> f64 { crate::math::sqrt(x.iter().map(|c| c.norm_sqr()).sum()) };

    let inv_diag: Vec<C64> = (0..n)
        .map(|i| {
            let d = pattern.position(i, i).map_or(C64::new(0.0, 0.0), |k| values[k]);
            if d.norm_sqr() == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(1.0, 0.0) / d
            }
        })
        .collect();

    let bnorm = norm(b);
    let mut x = x0.map_or_else(|| vec![C64::new(0.0, 0.0); n], <[C64]>::to_vec);
    if bnorm == 0.0 {
        return Ok((vec![C64::new(0.0, 0.0); n], 0));
    }
    let ax = matvec(&x);
    let mut r: Vec<C64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    if norm(&r) <= tol * bnorm {
        return Ok((x, 0));
    }
    let mut z: Vec<C64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rho = bilinear(&r, &z);
    for it in 1..=max_iter {
        let ap = matvec(&p);
        let pap = bilinear(&p, &ap);
        if pap.norm_sqr() == 0.0 {
            break;
        }
        let alpha = rho / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm(&r) / bnorm;
        if res <= tol {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rho_new = bilinear(&r, &z);
        if rho.norm_sqr() == 0.0 {
            break;
        }
        let beta = rho_new / rho;
        rho = rho_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let ax = matvec(&x);
    let res = norm(&b.iter().zip(&ax).map(|(b, a)| b - a).collect::<Vec<_>>()) / bnorm;
    Err(Error::IterativeNotConverged {
        iterations: max_iter,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::sync::Arc;

    // 1D Laplacian-like tridiagonal pattern
    fn tridiag(n: usize) -> Arc<Pattern> {
        Arc::new(Pattern::from_rows(
            (0..n)
                .map(|i| {
                    let mut r = vec![i];
                    if i > 0 {
                        r.push(i - 1);
                    }
                    if i + 1 < n {
                        r.push(i + 1);
                    }
                    r
                })
                .collect(),
        ))
    }

    fn complex_system(p: &Pattern) -> Vec<C64> {
        let n = p.dim();
        (0..n)
            .flat_map(|i| {
                p.cols()[p.row(i)]
                    .iter()
                    .map(move |&j| {
                        if i == j {
                            C64::new(4.0, 2.0 + i as f64 * 0.1)
                        } else {
                            C64::new(1.0, -0.5)
                        }
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    }

    fn apply(p: &Pattern, v: &[C64], x: &[C64]) -> Vec<C64> {
        (0..p.dim())
            .map(|i| p.row(i).map(|k| v[k] * x[p.cols()[k]]).sum())
            .collect()
    }

    #[test]
    fn band_lu_solves_complex_system() {
        let p = tridiag(12);
        let v = complex_system(&p);
        let x_true: Vec<C64> = (0..12).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let b = apply(&p, &v, &x_true);
        let lu = BandLu::factor(&p, &v).unwrap();
        let x = lu.solve(&b);
        for (a, e) in x.iter().zip(&x_true) {
            assert!((a - e).norm() < 1e-12);
        }
    }

    #[test]
    fn band_lu_reports_zero_pivot() {
        let p = tridiag(3);
        let v = vec![0.0; p.nnz()];
        assert!(matches!(BandLu::<f64>::factor(&p, &v), Err(Error::ZeroPivot { row: 0 })));
    }

    #[test]
    fn cocg_matches_direct() {
        let p = tridiag(30);
        let v = complex_system(&p);
        let b: Vec<C64> = (0..30).map(|i| C64::new(1.0, i as f64 * 0.01)).collect();
        let direct = BandLu::factor(&p, &v).unwrap().solve(&b);
        let (it, n) = cocg(&p, &v, &b, None, 1e-13, 200).unwrap();
        assert!(n > 0);
        for (a, e) in it.iter().zip(&direct) {
            assert!((a - e).norm() < 1e-11);
        }
    }

    #[test]
    fn cocg_reports_stall() {
        let p = tridiag(30);
        let v = complex_system(&p);
        let b = vec![C64::new(1.0, 0.0); 30];
        assert!(matches!(
            cocg(&p, &v, &b, None, 1e-15, 1),
            Err(Error::IterativeNotConverged { iterations: 1, .. })
        ));
    }
}
