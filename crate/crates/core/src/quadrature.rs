//! Symmetric quadrature rules on triangles in barycentric coordinates.

use alloc::vec::Vec;

use crate::math::sqrt;

/// Weights sum to one; multiply by the element area when integrating.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadrature {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: u32,
}

impl Quadrature {
    /// 6-point rule exact for polynomials of degree 4 (Strang-Fix).
    pub fn degree4() -> Self {
        let s = sqrt(38.0 - 44.0 * sqrt(2.0 / 5.0));
        let a1 = (8.0 - sqrt(10.0) + s) / 18.0;
        let a2 = (8.0 - sqrt(10.0) - s) / 18.0;
        let t = sqrt(213125.0 - 53320.0 * sqrt(10.0));
        let w1 = (620.0 + t) / 3720.0;
        let w2 = (620.0 - t) / 3720.0;
        let mut q = Self::empty(4);
        q.push_orbit3(a1, w1);
        q.push_orbit3(a2, w2);
        q
    }

    /// 12-point rule exact for polynomials of degree 6 (Dunavant).
    pub fn degree6() -> Self {
        let mut q = Self::empty(6);
        q.push_orbit3(0.249_286_745_170_910, 0.116_786_275_726_379);
        q.push_orbit3(0.063_089_014_491_502, 0.050_844_906_370_207);
        let (a, b) = (0.310_352_451_033_784, 0.053_145_049_844_817);
        let c = 1.0 - a - b;
        let w = 0.082_851_075_618_374;
        for p in [[a, b, c], [b, c, a], [c, a, b], [a, c, b], [c, b, a], [b, a, c]] {
            q.points.push(p);
            q.weights.push(w);
        }
        q
    }

    /// Vertex rule, exact for degree 1.
    pub fn vertices() -> Self {
        let w = 1.0 / 3.0;
        Self {
            points: alloc::vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            weights: alloc::vec![w, w, w],
            degree: 1,
        }
    }

    fn empty(degree: u32) -> Self {
        Self {
            points: Vec::new(),
            weights: Vec::new(),
            degree,
        }
    }

    // points (a, a, 1 - 2a) and permutations
    fn push_orbit3(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b], [a, b, a], [b, a, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn map_point(&self, q: usize, tri: &[[f64; 2]; 3]) -> [f64; 2] {
        let l = self.points[q];
        [
            l[0] * tri[0][0] + l[1] * tri[1][0] + l[2] * tri[2][0],
            l[0] * tri[0][1] + l[1] * tri[1][1] + l[2] * tri[2][1],
        ]
    }
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::degree4()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    // ∫_T λ1^a λ2^b λ3^c / |T| = 2 a! b! c! / (a+b+c+2)!
    fn check_exactness(q: &Quadrature, tol: f64) {
        let d = q.degree();
        for a in 0..=d {
            for b in 0..=(d - a) {
                for c in 0..=(d - a - b) {
                    let exact = 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2);
                    let approx: f64 = q
                        .points()
                        .iter()
                        .zip(q.weights())
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    assert!((approx - exact).abs() < tol, "monomial ({a},{b},{c}): {approx} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn degree4_is_exact() {
        let q = Quadrature::degree4();
        assert_eq!(q.len(), 6);
        assert!(q.weights().iter().all(|&w| w > 0.0));
        check_exactness(&q, 1e-15);
    }

    #[test]
    fn degree6_is_exact() {
        let q = Quadrature::degree6();
        assert_eq!(q.len(), 12);
        assert!(q.weights().iter().all(|&w| w > 0.0));
        check_exactness(&q, 5e-15);
    }

    #[test]
    fn degree4_is_not_exact_for_degree5() {
        let q = Quadrature::degree4();
        let approx: f64 = q.points().iter().zip(q.weights()).map(|(p, w)| w * p[0].powi(5)).sum();
        let exact = 2.0 * 120.0 / 5040.0;
        assert!((approx - exact).abs() > 1e-6);
    }
}
