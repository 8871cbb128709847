//! Kernel profiles for proximity graphs: non-increasing, compactly supported
//! on `[0, 1]`, normalized so `∫_{R^m} η(|x|) dx = 1` in the declared
//! intrinsic dimension.
//!
//! Two moments are carried along: the radial surface moment
//! `α_η = ∫ η(r) r^{m+1} dr` and the directional second moment
//! `σ_η = ∫_{R^m} η(|x|) (x·e)² dx = ω_{m-1} α_η / m`. Graph weights divide
//! by `σ_η ε²`, which is the scaling under which the graph Laplacian spectrum
//! matches the weighted continuum operator (checked against analytic spectra
//! in the acceptance suite).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    /// `η(t) ∝ (1 - t)_+`, Lipschitz.
    Tent,
    /// `η(t) ∝ 1_{[0,1]}`. Not Lipschitz; offered for comparison runs only,
    /// outside the guarantees that assume a Lipschitz profile.
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelProfile {
    pub shape: KernelShape,
    /// Intrinsic dimension m (declared, not estimated).
    pub dim: usize,
    /// Normalization constant c with η(t) = c · profile(t).
    pub normalization: f64,
    /// α_η = ∫_0^∞ η(r) r^{m+1} dr.
    pub alpha: f64,
    /// σ_η = ω_{m-1} α_η / m, the directional second moment.
    pub sigma: f64,
}

/// Surface area of the unit sphere `S^{m-1}` in `R^m`.
pub fn unit_sphere_area(m: usize) -> f64 {
    // ω_{m-1} = 2 π^{m/2} / Γ(m/2), via the half-integer gamma recurrence
    let mut gamma = if m.is_multiple_of(2) {
        1.0 // Γ(1)
    } else {
        std::f64::consts::PI.sqrt() // Γ(1/2)
    };
    let mut x = if m.is_multiple_of(2) { 1.0 } else { 0.5 };
    while x < m as f64 / 2.0 - 1e-9 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(m as f64 / 2.0) / gamma
}

impl KernelProfile {
    pub fn new(shape: KernelShape, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidKernel(
                "intrinsic dimension must be positive".into(),
            ));
        }
        let m = dim as f64;
        let omega = unit_sphere_area(dim);
        let (normalization, alpha) = match shape {
            KernelShape::Tent => {
                // ∫ (1-r) r^{m-1} dr over [0,1] = 1/(m(m+1))
                let c = m * (m + 1.0) / omega;
                (c, c / ((m + 2.0) * (m + 3.0)))
            }
            KernelShape::Indicator => {
                let c = m / omega;
                (c, c / (m + 2.0))
            }
        };
        Ok(KernelProfile {
            shape,
            dim,
            normalization,
            alpha,
            sigma: omega * alpha / m,
        })
    }

    pub fn tent(dim: usize) -> Result<Self> {
        Self::new(KernelShape::Tent, dim)
    }

    pub fn indicator(dim: usize) -> Result<Self> {
        Self::new(KernelShape::Indicator, dim)
    }

    /// η(t).
    pub fn eval(&self, t: f64) -> f64 {
        if !(0.0..1.0).contains(&t) {
            return 0.0;
        }
        match self.shape {
            KernelShape::Tent => self.normalization * (1.0 - t),
            KernelShape::Indicator => self.normalization,
        }
    }

    /// η_ε(r) = η(r/ε) / ε^m.
    pub fn eval_scaled(&self, r: f64, epsilon: f64) -> f64 {
        self.eval(r / epsilon) / epsilon.powi(self.dim as i32)
    }

    // midpoint rule: exact through the indicator's jump at the support edge
    fn radial_moment(&self, power: i32) -> f64 {
        let n = 1 << 16;
        let h = 1.0 / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let r = (i as f64 + 0.5) * h;
            acc += self.eval(r) * r.powi(power);
        }
        acc * h
    }

    /// `∫_{R^m} η(|x|) dx` by radial quadrature; equals 1 for a valid profile.
    pub fn mass_by_radial_quadrature(&self) -> f64 {
        unit_sphere_area(self.dim) * self.radial_moment(self.dim as i32 - 1)
    }

    /// α_η by radial quadrature, to cross-check the closed form.
    pub fn alpha_by_radial_quadrature(&self) -> f64 {
        self.radial_moment(self.dim as i32 + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn profiles_are_normalized() {
        for m in 1..=3 {
            for shape in [KernelShape::Tent, KernelShape::Indicator] {
                let k = KernelProfile::new(shape, m).unwrap();
                let mass = k.mass_by_radial_quadrature();
                assert!((mass - 1.0).abs() < 1e-8, "m={m} {shape:?}: mass {mass}");
                let alpha = k.alpha_by_radial_quadrature();
                assert!(
                    (alpha - k.alpha).abs() < 1e-10,
                    "m={m}: {alpha} vs {}",
                    k.alpha
                );
            }
        }
    }

    #[test]
    fn tent_is_nonincreasing_with_compact_support() {
        let k = KernelProfile::tent(2).unwrap();
        let mut prev = f64::INFINITY;
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let v = k.eval(t);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert_eq!(k.eval(1.0), 0.0);
        assert_eq!(k.eval(1.5), 0.0);
    }

    #[test]
    fn scaled_kernel_at_origin() {
        let k = KernelProfile::tent(1).unwrap();
        let eps = 0.05;
        assert!((k.eval_scaled(0.0, eps) - k.normalization / eps).abs() < 1e-12);
    }

    #[test]
    fn sigma_relates_to_alpha() {
        for m in 1..=3 {
            let k = KernelProfile::tent(m).unwrap();
            let expect = unit_sphere_area(m) * k.alpha / m as f64;
            assert!((k.sigma - expect).abs() < 1e-14);
        }
    }
}
