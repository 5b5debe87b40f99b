use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating point type the toolkit computes in: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssignOps + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every value used as a literal in this crate
    /// is representable (possibly rounded) in `f32`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to float")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }

    /// `log(exp(a) + exp(b))` without overflow.
    #[inline]
    fn log_add_exp(a: Self, b: Self) -> Self {
        if a == Self::neg_infinity() {
            return b;
        }
        if b == Self::neg_infinity() {
            return a;
        }
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        hi + (lo - hi).exp().ln_1p()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Log-sum-exp of an iterator of log values; empty input gives `-inf`.
pub(crate) fn log_sum_exp<T: Scalar, I: IntoIterator<Item = T>>(values: I) -> T {
    let v: Vec<T> = values.into_iter().collect();
    let m = v.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() || !m.is_finite() {
        return m;
    }
    let s = v.iter().fold(T::zero(), |acc, &x| acc + (x - m).exp());
    m + s.ln()
}
