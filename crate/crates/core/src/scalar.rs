//! Scalar abstraction shared by every numerical module.
//!
//! All physics and numerics are written against [`Real`], which is
//! implemented for `f32` and `f64`. Special functions that `num-traits`
//! does not provide are routed through `libm`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Euler Gamma function.
    fn gamma(self) -> Self;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals in `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn from_i64_lossy(n: i64) -> Self {
        Self::from_i64(n).expect("i64 representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    #[inline]
    fn gamma(self) -> Self {
        libm::tgammaf(self)
    }
}

impl Real for f64 {
    #[inline]
    fn gamma(self) -> Self {
        libm::tgamma(self)
    }
}

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// length of the input, so the result is reproducible bit for bit.
pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        return xs.iter().fold(T::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Streaming pairwise accumulator for equal-length vectors.
///
/// Items pushed in a fixed order are merged like a binary counter, so the
/// final sum has the same association tree as [`pairwise_sum`] applied
/// element-wise, while memory stays logarithmic in the number of items.
#[derive(Debug, Clone)]
pub struct PairwiseAccumulator<T> {
    // levels[k] holds the sum of a block of 2^k consecutive items, if present.
    levels: Vec<Option<Vec<T>>>,
    count: usize,
    len: usize,
}

impl<T: Real> PairwiseAccumulator<T> {
    pub fn new(len: usize) -> Self {
        Self { levels: Vec::new(), count: 0, len }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, item: Vec<T>) {
        assert_eq!(item.len(), self.len, "accumulator item length mismatch");
        let mut carry = item;
        let mut level = 0;
        loop {
            if level == self.levels.len() {
                self.levels.push(None);
            }
            match self.levels[level].take() {
                None => {
                    self.levels[level] = Some(carry);
                    break;
                }
                Some(mut prev) => {
                    for (p, c) in prev.iter_mut().zip(&carry) {
                        *p += *c;
                    }
                    carry = prev;
                    level += 1;
                }
            }
        }
        self.count += 1;
    }

    /// Sum of everything pushed so far (zeros if empty).
    pub fn total(&self) -> Vec<T> {
        let mut out: Option<Vec<T>> = None;
        for block in self.levels.iter().flatten() {
            out = Some(match out {
                None => block.clone(),
                Some(mut acc) => {
                    // Higher levels hold earlier items; add in that order.
                    for (a, b) in acc.iter_mut().zip(block) {
                        *a = *b + *a;
                    }
                    acc
                }
            });
        }
        out.unwrap_or_else(|| vec![T::zero(); self.len])
    }
}
