//! Floating-point scalar abstraction and the shared tolerance record.
//!
//! All numerical code in this crate is generic over [`Real`], which is
//! implemented for `f32` and `f64`. Concrete aliases at the crate root fix
//! `f64` as the default precision.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt::{Debug, Display};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + num_traits::Signed
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Default validation tolerance (Hermiticity, PSD, trace checks).
    fn default_tol() -> Self;

    /// Lossy conversion from `f64` literals.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    /// Conversion from array/index sizes.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize conversion")
    }

    /// One sample from the standard normal distribution.
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    fn default_tol() -> Self {
        1e-10
    }
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample::<f64, _>(StandardNormal)
    }
}

impl Real for f32 {
    fn default_tol() -> Self {
        1e-4
    }
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample::<f32, _>(StandardNormal)
    }
}

/// Complex scalar over the generic real type.
pub type C<T> = Complex<T>;

/// Base-2 logarithm with the `0 log 0 = 0` convention.
pub fn xlog2x<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else {
        x * x.log2()
    }
}

/// Binary entropy `h(x) = -x log x - (1-x) log(1-x)` (base 2), `h(0)=h(1)=0`.
pub fn binary_entropy<T: Real>(x: T) -> T {
    -xlog2x(x) - xlog2x(T::one() - x)
}

/// Centralized tolerance constants. Validation errors report the tolerance
/// that was violated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances<T> {
    /// Allowed Hermiticity defect, `max |a_ij - conj(a_ji)|`.
    pub hermiticity: T,
    /// Allowed negative part of eigenvalues of nominally PSD operators.
    pub psd: T,
    /// Allowed deviation of traces and norms from their nominal value.
    pub trace: T,
    /// Eigenvalues below this are treated as exact zeros when classifying
    /// spectra (typical sequences, pseudo-inverses).
    pub spectral_zero: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        let t = T::default_tol();
        Tolerances {
            hermiticity: t,
            psd: t,
            trace: t,
            spectral_zero: T::of(1e-12).max(T::epsilon() * T::of(64.0)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(0.0f64), 0.0);
        assert_eq!(binary_entropy(1.0f64), 0.0);
        assert!((binary_entropy(0.5f64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn default_tolerances() {
        let t: Tolerances<f64> = Tolerances::default();
        assert_eq!(t.hermiticity, 1e-10);
        let t32: Tolerances<f32> = Tolerances::default();
        assert_eq!(t32.hermiticity, 1e-4);
    }
}
