//! Scalar abstraction shared by every metric in the crate.
//!
//! All ranking and POTH computations are written against [`Scalar`], which is
//! implemented for `f32` and `f64`. The standard normal CDF is evaluated
//! through the complementary error function from `libm` (a port of the
//! FreeBSD msun routines, accurate to about one ulp), using
//! `Φ(z) = erfc(-z / √2) / 2`. Working through `erfc` keeps the lower tail
//! accurate in relative terms and gives `Φ(z) + Φ(-z) = 1` to rounding.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point type usable by the ranking metrics.
pub trait Scalar:
    Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Standard normal cumulative distribution function.
    fn std_normal_cdf(self) -> Self;

    /// One draw from N(0, 1).
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossless for `f64`, widening for `f32`.
    fn to_f64_lossy(self) -> f64;

    /// Converts an `f64` literal, rounding when the target is narrower.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("finite literal")
    }

    /// A validation tolerance: `base`, widened to a few hundred ulps for
    /// narrow types where `base` is below the attainable precision.
    fn tolerance(base: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(256.0);
        Self::lit(base).max(floor)
    }

    fn from_count(count: usize) -> Self {
        Self::from_usize(count).expect("count representable as float")
    }
}

impl Scalar for f64 {
    fn std_normal_cdf(self) -> Self {
        0.5 * libm::erfc(-self * std::f64::consts::FRAC_1_SQRT_2)
    }

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn std_normal_cdf(self) -> Self {
        0.5 * libm::erfcf(-self * std::f32::consts::FRAC_1_SQRT_2)
    }

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn to_f64_lossy(self) -> f64 {
        f64::from(self)
    }
}
