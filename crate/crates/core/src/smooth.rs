//! The smoothed sign `σ_τ` and its split into convex and concave parts.
//!
//! With `u = z / τ`:
//!
//! ```text
//! σ(z)  = ½·√((u+1)² + 1) − ½·√((u−1)² + 1)
//! σ∪(z) = ½·√((u+1)² + 1)          (convex)
//! σ∩(z) = −½·√((u−1)² + 1)         (concave)
//! ```
//!
//! `σ` is odd, strictly increasing and maps onto `(−1, 1)`; it approaches
//! `sign` as `τ → 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothSign {
    tau: f64,
}

impl SmoothSign {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "temperature must be positive and finite, got {tau}"
            )));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `σ_τ(z)`, evaluated as `2u / (A + B)` to avoid cancellation for large `|z|`.
    pub fn value(&self, z: f64) -> f64 {
        let u = z / self.tau;
        let a = sqrt((u + 1.0) * (u + 1.0) + 1.0);
        let b = sqrt((u - 1.0) * (u - 1.0) + 1.0);
        2.0 * u / (a + b)
    }

    pub fn convex_part(&self, z: f64) -> f64 {
        let u = z / self.tau + 1.0;
        0.5 * sqrt(u * u + 1.0)
    }

    pub fn concave_part(&self, z: f64) -> f64 {
        let u = z / self.tau - 1.0;
        -0.5 * sqrt(u * u + 1.0)
    }

    pub fn convex_derivative(&self, z: f64) -> f64 {
        let u = z / self.tau + 1.0;
        u / (2.0 * self.tau * sqrt(u * u + 1.0))
    }

    pub fn concave_derivative(&self, z: f64) -> f64 {
        let u = z / self.tau - 1.0;
        -u / (2.0 * self.tau * sqrt(u * u + 1.0))
    }

    pub fn convex_second_derivative(&self, z: f64) -> f64 {
        let u = z / self.tau + 1.0;
        let r = u * u + 1.0;
        1.0 / (2.0 * self.tau * self.tau * r * sqrt(r))
    }

    pub fn concave_second_derivative(&self, z: f64) -> f64 {
        let u = z / self.tau - 1.0;
        let r = u * u + 1.0;
        -1.0 / (2.0 * self.tau * self.tau * r * sqrt(r))
    }

    pub fn derivative(&self, z: f64) -> f64 {
        self.convex_derivative(z) + self.concave_derivative(z)
    }

    pub fn second_derivative(&self, z: f64) -> f64 {
        self.convex_second_derivative(z) + self.concave_second_derivative(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        for tau in [0.01, 0.2, 1.0, 7.0] {
            assert_eq!(SmoothSign::new(tau).unwrap().value(0.0), 0.0);
        }
    }

    #[test]
    fn unit_input_at_unit_temperature() {
        // ½(√5 − 1)
        let s = SmoothSign::new(1.0).unwrap();
        assert!((s.value(1.0) - 0.5 * (sqrt(5.0) - 1.0)).abs() < 1e-15);
        assert!((s.value(1.0) - 0.618_033_988_749_895).abs() < 1e-12);
    }

    #[test]
    fn saturates_for_large_input() {
        let s = SmoothSign::new(1.0).unwrap();
        assert!((s.value(1e6) - 1.0).abs() < 1e-5);
        assert!(s.value(1e6) < 1.0);
    }

    #[test]
    fn rejects_nonpositive_temperature() {
        assert!(SmoothSign::new(0.0).is_err());
        assert!(SmoothSign::new(-1.0).is_err());
        assert!(SmoothSign::new(f64::NAN).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = SmoothSign::new(0.3).unwrap();
        let h = 1e-6;
        for z in [-2.0, -0.31, 0.0, 0.05, 0.7, 3.0] {
            let fd = (s.convex_part(z + h) - s.convex_part(z - h)) / (2.0 * h);
            assert!((fd - s.convex_derivative(z)).abs() < 1e-7);
            let fd = (s.concave_part(z + h) - s.concave_part(z - h)) / (2.0 * h);
            assert!((fd - s.concave_derivative(z)).abs() < 1e-7);
            let fd = (s.convex_derivative(z + h) - s.convex_derivative(z - h)) / (2.0 * h);
            assert!((fd - s.convex_second_derivative(z)).abs() < 1e-6);
            let fd = (s.concave_derivative(z + h) - s.concave_derivative(z - h)) / (2.0 * h);
            assert!((fd - s.concave_second_derivative(z)).abs() < 1e-6);
        }
    }
}
