//! Bounded extension `γ_M` of a nonlinearity beyond amplitude `M`.
//!
//! `γ_M = γ` on `[0, θ]` with `θ = max(M², γ(M²))`, a quintic Hermite blend on
//! `[θ, 2θ]` matching value, slope and curvature of `γ` at `θ` and reaching a
//! flat tail at `2θ`, and constant beyond. The tail value is
//! `γ(θ) + θ γ'(θ)/2` clipped to `[0, 2γ(θ)]`; for linear `γ` this keeps the
//! blend monotone with slope at most `γ'(θ)`.

use crate::math::sqrt;
use crate::model::{divided_with_switch, finite_difference_derivatives, Nonlinearity, NonlinearitySpec};
use crate::{Error, Result};

/// Grid used for the sup norms `‖γ^{(k)}‖_{L∞(0, M²)}`.
const SUP_SAMPLES: usize = 4096;

#[derive(Clone, Debug)]
pub struct TruncationSpec {
    nl: NonlinearitySpec,
    m: f64,
    theta: f64,
    tail: f64,
    // γ_M(θ + θ x) = Σ_k poly[k] x^k on x ∈ [0, 1]
    poly: [f64; 6],
    big_gamma_theta: f64,
    blend_integral: f64,
    sup_norms: [f64; 3],
}

impl TruncationSpec {
    pub fn new(nl: &NonlinearitySpec, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::param("M", "must be positive"));
        }
        let m2 = m * m;
        let theta = m2.max(nl.gamma(m2));
        let [g0, g1, g2] = match nl.kind {
            Nonlinearity::Custom { .. } => checked_custom_derivatives(nl, theta)?,
            _ => nl.derivatives(theta),
        };
        let tail = (g0 + 0.5 * theta * g1).clamp(0.0, 2.0 * g0.max(0.0));
        let d0 = theta * g1;
        let s0 = theta * theta * g2;
        // quintic Hermite basis with zero slope and curvature at x = 1
        let h0 = [1.0, 0.0, 0.0, -10.0, 15.0, -6.0];
        let h1 = [0.0, 1.0, 0.0, -6.0, 8.0, -3.0];
        let h2 = [0.0, 0.0, 0.5, -1.5, 1.5, -0.5];
        let h3 = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
        let mut poly = [0.0; 6];
        for k in 0..6 {
            poly[k] = g0 * h0[k] + d0 * h1[k] + s0 * h2[k] + tail * h3[k];
        }
        let blend_integral = theta * (0..6).map(|k| poly[k] / (k + 1) as f64).sum::<f64>();

        let mut sup_norms = [0.0f64; 3];
        for i in 0..=SUP_SAMPLES {
            let s = m2 * i as f64 / SUP_SAMPLES as f64;
            let d = nl.derivatives(s);
            for k in 0..3 {
                sup_norms[k] = sup_norms[k].max(d[k].abs());
            }
        }

        Ok(Self {
            nl: nl.clone(),
            m,
            theta,
            tail,
            poly,
            big_gamma_theta: nl.antiderivative(theta),
            blend_integral,
            sup_norms,
        })
    }

    pub fn radius(&self) -> f64 {
        self.m
    }

    /// Upper end of the interval where `γ_M = γ`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tail_value(&self) -> f64 {
        self.tail
    }

    pub fn nonlinearity(&self) -> &NonlinearitySpec {
        &self.nl
    }

    /// `γ^{M,k} = ‖γ^{(k)}‖_{L∞(0, M²)}` for `k = 0, 1, 2` (sampled).
    pub fn sup_norm(&self, k: usize) -> f64 {
        self.sup_norms[k]
    }

    pub fn gamma(&self, s: f64) -> f64 {
        if s <= self.theta {
            self.nl.gamma(s)
        } else if s >= 2.0 * self.theta {
            self.tail
        } else {
            let x = (s - self.theta) / self.theta;
            self.poly.iter().rev().fold(0.0, |acc, c| acc * x + c)
        }
    }

    /// `Γ_M(s) = ∫_0^s γ_M`, integrated piecewise in closed form.
    pub fn antiderivative(&self, s: f64) -> f64 {
        if s <= self.theta {
            self.nl.antiderivative(s)
        } else if s >= 2.0 * self.theta {
            self.big_gamma_theta + self.blend_integral + self.tail * (s - 2.0 * self.theta)
        } else {
            let x = (s - self.theta) / self.theta;
            let integral = self
                .poly
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + c / (k + 1) as f64)
                * x;
            self.big_gamma_theta + self.theta * integral
        }
    }

    /// `G_M(t1, t2)`: divided difference of `Γ_M`, `γ_M` on the diagonal.
    pub fn divided(&self, t1: f64, t2: f64) -> f64 {
        // Γ_M = Γ up to θ, where the untruncated kernel may have a closed form
        if t1.max(t2) <= self.theta {
            return self.nl.divided(t1, t2);
        }
        divided_with_switch(t1, t2, |s| self.antiderivative(s), |s| self.gamma(s))
    }

    /// Amplitude `√θ` up to which `γ_M` agrees with `γ`.
    pub fn agreement_radius(&self) -> f64 {
        sqrt(self.theta)
    }
}

fn checked_custom_derivatives(nl: &NonlinearitySpec, at: f64) -> Result<[f64; 3]> {
    let h = 1e-3 * at.abs().max(1.0);
    let coarse = finite_difference_derivatives(|s| nl.gamma(s), at, h);
    let fine = finite_difference_derivatives(|s| nl.gamma(s), at, 0.5 * h);
    if !fine.iter().all(|v| v.is_finite()) {
        return Err(Error::UnsupportedNonlinearity("derivatives are not finite"));
    }
    for k in 1..3 {
        let tol = 1e-3 * (1.0 + fine[k].abs());
        if (coarse[k] - fine[k]).abs() > tol {
            return Err(Error::UnsupportedNonlinearity("γ is not smooth at the truncation threshold"));
        }
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cubic_threshold_and_agreement() {
        let t = TruncationSpec::new(&NonlinearitySpec::cubic(20.0), 2.0).unwrap();
        assert_eq!(t.theta(), 80.0);
        for i in 0..=800 {
            let s = i as f64 * 0.1;
            assert_eq!(t.gamma(s), 20.0 * s);
        }
    }

    #[test]
    fn tail_is_constant() {
        for nl in [
            NonlinearitySpec::cubic(1.0),
            NonlinearitySpec::cubic(20.0),
            NonlinearitySpec::polynomial(vec![0.0, 1.0, 0.5]),
        ] {
            let t = TruncationSpec::new(&nl, 1.5).unwrap();
            let a = t.gamma(2.0 * t.theta());
            for k in 1..50 {
                assert_eq!(t.gamma(2.0 * t.theta() + k as f64 * 3.7), a);
            }
        }
    }

    #[test]
    fn blend_is_c2() {
        let nl = NonlinearitySpec::polynomial(vec![0.0, 1.0, 0.5]);
        let t = TruncationSpec::new(&nl, 1.0).unwrap();
        let th = t.theta();
        let e = 1e-6 * th;
        for s in [th, 2.0 * th] {
            let left = finite_difference_derivatives(|x| t.gamma(x), s - 3.0 * e, e);
            let right = finite_difference_derivatives(|x| t.gamma(x), s + 3.0 * e, e);
            assert!((t.gamma(s - 1e-12) - t.gamma(s + 1e-12)).abs() < 1e-9);
            assert!((left[1] - right[1]).abs() < 1e-3, "slope jump at {s}");
        }
    }

    #[test]
    fn sup_bound_sampled() {
        for nl in [NonlinearitySpec::cubic(1.0), NonlinearitySpec::cubic(20.0)] {
            for m in [0.5, 1.0, 2.0] {
                let t = TruncationSpec::new(&nl, m).unwrap();
                let bound = 2.0 * nl.gamma(t.theta()) * (1.0 + 1e-9);
                let mut rng = ChaCha8Rng::seed_from_u64(3);
                for _ in 0..100_000 {
                    let s = rng.gen_range(0.0..4.0 * t.theta());
                    assert!(t.gamma(s).abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn cubic_blend_slope_never_exceeds_beta() {
        let t = TruncationSpec::new(&NonlinearitySpec::cubic(1.0), 1.0).unwrap();
        let th = t.theta();
        for i in 0..1000 {
            let s = th + th * i as f64 / 1000.0;
            let d = (t.gamma(s + 1e-7) - t.gamma(s)) / 1e-7;
            assert!(d <= 1.0 + 1e-6 && d >= -1e-6);
        }
    }

    #[test]
    fn antiderivative_matches_numerical_integral() {
        let t = TruncationSpec::new(&NonlinearitySpec::polynomial(vec![0.0, 2.0, 1.0]), 1.2).unwrap();
        let upper = 3.0 * t.theta();
        let n = 200_000;
        let h = upper / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let a = i as f64 * h;
            // Simpson on each panel
            acc += h / 6.0 * (t.gamma(a) + 4.0 * t.gamma(a + 0.5 * h) + t.gamma(a + h));
            if (i + 1) % 20_000 == 0 {
                let s = (i + 1) as f64 * h;
                assert!((acc - t.antiderivative(s)).abs() < 1e-9 * (1.0 + acc), "s = {s}");
            }
        }
    }

    #[test]
    fn kinked_custom_is_rejected() {
        // kink at ρ = 1 = θ for M = 1
        let nl = NonlinearitySpec::custom(
            |r| if r < 1.0 { r } else { 2.0 * r - 1.0 },
            |r| if r < 1.0 { 0.5 * r * r } else { r * r - r + 0.5 },
        );
        assert!(matches!(TruncationSpec::new(&nl, 1.0), Err(Error::UnsupportedNonlinearity(_))));
        let smooth = NonlinearitySpec::custom(|r| r, |r| 0.5 * r * r);
        assert!(TruncationSpec::new(&smooth, 1.0).is_ok());
    }

    #[test]
    fn rejects_nonpositive_radius() {
        assert!(TruncationSpec::new(&NonlinearitySpec::cubic(1.0), 0.0).is_err());
    }

    #[test]
    fn truncated_kernel_agrees_below_threshold() {
        let nl = NonlinearitySpec::cubic(20.0);
        let t = TruncationSpec::new(&nl, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let a = rng.gen_range(0.0..1.0);
            let b = rng.gen_range(0.0..1.0);
            assert_eq!(t.divided(a, b), nl.divided(a, b));
        }
    }
}
