//! Numeric traits shared by the QUBO model and the solvers.
//!
//! QUBO storage, evaluation and search only need signed ring arithmetic and a
//! total-enough order, so they run over integers (exact) as well as floats.
//! Building objectives from traffic data needs real arithmetic on top.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Signed};

/// Coefficient type of a QUBO matrix.
pub trait Scalar:
    Signed + Copy + PartialOrd + Sum + Debug + Display + Send + Sync + 'static
{
    /// Magnitude used for relative-gap reporting.
    fn to_f64_lossy(self) -> f64;
}

macro_rules! impl_scalar_int {
    ($($t:ty),*) => {$(
        impl Scalar for $t {
            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }
        }
    )*};
}

impl_scalar_int!(i32, i64, i128);

impl Scalar for f32 {
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

/// Real-valued scalar: what the objective builders require.
pub trait Real: Scalar + Float + FromPrimitive {}

impl<T: Scalar + Float + FromPrimitive> Real for T {}

/// Converts an `f64` constant into `T`.
///
/// Panics only if `T` cannot represent a finite `f64`, which does not happen
/// for `f32`/`f64`.
#[inline]
pub(crate) fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("finite f64 representable in Real scalar")
}
