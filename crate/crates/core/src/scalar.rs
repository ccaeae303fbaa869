//! Floating-point scalar abstraction and log-domain arithmetic.
//!
//! Everything in the dynamic programming engine is carried as natural
//! logarithms of non-negative weights. `-inf` stands for an exact zero.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the engine can be instantiated with (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; panics only on NaN-producing inputs for
    /// exotic scalar types, never for `f32`/`f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("scalar conversion from f64")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar conversion to f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

/// `ln(exp(x) + exp(y))` as `max + ln1p(exp(-|x - y|))`.
#[inline]
pub fn ln_add_exp<T: Real>(x: T, y: T) -> T {
    if x == T::neg_infinity() {
        return y;
    }
    if y == T::neg_infinity() {
        return x;
    }
    if x >= y {
        x + (y - x).exp().ln_1p()
    } else {
        y + (x - y).exp().ln_1p()
    }
}

/// Log of the sum of exponentials of a slice; `-inf` when empty.
pub fn ln_sum_exp<T: Real>(values: &[T]) -> T {
    let mut acc = LogSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Streaming log-sum-exp accumulator.
///
/// Keeps the running maximum and the sum of `exp(x - max)`, so each term
/// costs one exponential. Rescales when a new maximum arrives.
#[derive(Clone, Copy, Debug)]
pub struct LogSum<T> {
    max: T,
    scaled: T,
}

impl<T: Real> Default for LogSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> LogSum<T> {
    pub fn new() -> Self {
        Self {
            max: T::neg_infinity(),
            scaled: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        if x == T::neg_infinity() {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + T::one();
            self.max = x;
        } else {
            self.scaled = self.scaled + (x - self.max).exp();
        }
    }

    #[inline]
    pub fn value(&self) -> T {
        if self.max == T::neg_infinity() {
            T::neg_infinity()
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Relative difference of two log-domain quantities, treating equal
/// infinities as identical. Used by the exactness checks.
pub fn log_rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if !a.is_finite() || !b.is_finite() {
        return f64::INFINITY;
    }
    (a - b).abs() / b.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_exp_matches_direct() {
        let a = 0.3_f64.ln();
        let b = 0.2_f64.ln();
        assert!((ln_add_exp(a, b) - 0.5_f64.ln()).abs() < 1e-15);
        assert_eq!(ln_add_exp(f64::NEG_INFINITY, b), b);
        assert_eq!(ln_add_exp(a, f64::NEG_INFINITY), a);
        assert_eq!(
            ln_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn far_below_underflow() {
        // exp(-9000) underflows, the log-domain sum must not.
        let x = -9000.0_f64;
        assert!((ln_add_exp(x, x) - (x + 2f64.ln())).abs() < 1e-9);
        let mut acc = LogSum::new();
        acc.add(x);
        acc.add(x - 1.0);
        acc.add(x + 1.0);
        let direct = x + (1.0 + (-1.0f64).exp() + 1.0f64.exp()).ln();
        assert!((acc.value() - direct).abs() < 1e-9);
    }

    #[test]
    fn sum_exp_empty_and_f32() {
        assert_eq!(ln_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
        let v = ln_sum_exp(&[0.0f32, 0.0, 0.0, 0.0]);
        assert!((v - 4f32.ln()).abs() < 1e-6);
    }
}
