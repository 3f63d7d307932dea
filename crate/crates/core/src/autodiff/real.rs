use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar type that the network, the problems and the losses are generic over.
///
/// Implemented by `f64`, by the tape variable [`super::Var`] and by
/// [`super::Jet2`] over any of those.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn from_f64(v: f64) -> Self;

    /// Plain floating-point value, dropping any derivative information.
    fn value(&self) -> f64;

    fn tanh(self) -> Self;
    fn exp(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn cosh(self) -> Self;
    fn sinh(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn sech(self) -> Self {
        Self::from_f64(1.0) / self.cosh()
    }

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

/// Hyperbolic tangent in branch-free arithmetic, so that loops over it
/// vectorise. Every tanh in the crate goes through this function, which keeps
/// the scalar, jet, tape and batched paths bit-identical.
///
/// Rational approximations after Cephes: `x + x^3 P(x^2)/Q(x^2)` below
/// 0.625, `1 - 2 / (e^{2|x|} + 1)` above. Within 2 ulp of the correctly
/// rounded value.
#[inline]
pub fn tanh(x: f64) -> f64 {
    const P: [f64; 3] = [-9.643_991_794_250_523e-1, -9.928_772_310_019_185e1, -1.614_687_684_417_084_5e3];
    const Q: [f64; 3] = [1.128_116_784_916_329_3e2, 2.235_488_390_601_004_6e3, 4.844_063_053_251_255e3];
    let a = x.abs();
    let z = x * x;
    let p = (P[0] * z + P[1]) * z + P[2];
    let q = ((z + Q[0]) * z + Q[1]) * z + Q[2];
    let small = (x + x * z * (p / q)).copysign(x);
    // tanh(22) rounds to 1
    let e = exp_reduced(2.0 * a.min(22.0));
    let large = (1.0 - 2.0 / (e + 1.0)).copysign(x);
    // NaN takes the first branch and propagates
    if !(a >= 0.625) {
        small
    } else {
        large
    }
}

/// `e^y` for `0 <= y <= 44`.
#[inline]
fn exp_reduced(y: f64) -> f64 {
    const P: [f64; 3] = [1.261_771_930_748_105_9e-4, 3.029_944_077_074_419_6e-2, 1.0];
    const Q: [f64; 4] = [3.001_985_051_386_644_5e-6, 2.524_483_403_496_841e-3, 2.272_655_482_081_550_3e-1, 2.0];
    const C1: f64 = 6.931_457_519_531_25e-1;
    const C2: f64 = 1.428_606_820_309_417_2e-6;
    let n = (y * std::f64::consts::LOG2_E + 0.5).floor();
    let r = y - n * C1 - n * C2;
    let rr = r * r;
    let px = r * ((P[0] * rr + P[1]) * rr + P[2]);
    let qx = ((Q[0] * rr + Q[1]) * rr + Q[2]) * rr + Q[3];
    let m = 1.0 + 2.0 * (px / (qx - px));
    m * f64::from_bits(((n as i64 + 1023) as u64) << 52)
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn tanh(self) -> Self {
        tanh(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    #[inline]
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}
