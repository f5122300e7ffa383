//! Numeric abstractions shared by the weighting, scoring and metric code.
//!
//! Weight propagation and evidence assembly only need an ordered field, so they
//! run unchanged on `f32`, `f64` or exact rationals. Okapi scoring needs a
//! logarithm and is therefore bound to [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// An ordered numeric field: `f32`, `f64`, or `num_rational::Ratio<i64>`.
pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    /// `numer / denom`, exact for rationals.
    fn ratio(numer: u32, denom: u32) -> Self {
        Self::from_u32(numer).expect("u32 fits every scalar")
            / Self::from_u32(denom).expect("u32 fits every scalar")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Larger of two values; `self` wins ties and incomparable pairs.
    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl<T> Scalar for T where
    T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// A floating point scalar.
pub trait Real: Scalar + Float {}

impl<T> Real for T where T: Scalar + Float {}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn ratio_is_exact_for_rationals() {
        let tenth: Ratio<i64> = Scalar::ratio(1, 10);
        assert_eq!(tenth, Ratio::new(1, 10));
        let half: f64 = Scalar::ratio(1, 2);
        assert_eq!(half, 0.5);
    }

    #[test]
    fn max_of_prefers_larger() {
        assert_eq!(2.0f32.max_of(3.0), 3.0);
        assert_eq!(Ratio::new(1i64, 3).max_of(Ratio::new(1, 4)), Ratio::new(1, 3));
    }
}
