//! Double-double arithmetic.
//!
//! A [`Dd`] is an unevaluated sum `hi + lo` of two `f64` with `|lo| <= ulp(hi)/2`,
//! giving roughly 106 bits of significand. The elementary functions here are
//! written for the needs of the sine-product kernels: `sin(pi x)` and
//! `cos(pi x)` with exact reduction by the period, `exp` and `ln`.
//!
//! Error model used throughout the crate: every arithmetic operation has a
//! relative error below [`DD_OP_REL_ERR`] and every elementary function below
//! [`DD_FN_REL_ERR`] (both deliberately loose compared with the observed
//! 2^-104 level).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

/// Relative error bound for one double-double arithmetic operation.
pub const DD_OP_REL_ERR: f64 = 1.0 / (1u128 << 102) as f64;
/// Relative error bound for one double-double elementary function call.
pub const DD_FN_REL_ERR: f64 = 1.0 / (1u128 << 98) as f64;

#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

/// Multiplies `x` by `2^e` without intermediate overflow for moderate `e`.
pub fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= f64::from_bits(((1023 + 1000) as u64) << 52);
        e -= 1000;
    }
    while e < -1000 {
        x *= f64::from_bits(((1023 - 1000) as u64) << 52);
        e += 1000;
    }
    x * f64::from_bits(((1023 + e) as u64) << 52)
}

/// Binary exponent `e` with `x = m * 2^e`, `m` in `[0.5, 1)`, for finite nonzero `x`.
pub fn frexp_exp(x: f64) -> i64 {
    let bits = x.abs().to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal
        let m = x.abs() * f64::from_bits(((1023 + 64) as u64) << 52);
        frexp_exp(m) - 64
    } else {
        raw - 1022
    }
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const HALF: Dd = Dd { hi: 0.5, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };
    pub const LN2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };
    pub const NEG_INFINITY: Dd = Dd {
        hi: f64::NEG_INFINITY,
        lo: 0.0,
    };

    #[inline]
    pub const fn new(hi: f64, lo: f64) -> Dd {
        Dd { hi, lo }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact for every `u64`.
    pub fn from_u64(x: u64) -> Dd {
        let hi = x as f64;
        let lo = (x as i128 - hi as i128) as f64;
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn from_i64(x: i64) -> Dd {
        let hi = x as f64;
        let lo = (x as i128 - hi as i128) as f64;
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    /// Rounds a `u128` to double-double (exact below 2^106).
    pub fn from_u128(x: u128) -> Dd {
        let hi = x as f64;
        // hi may round up past x; the signed difference is below 2^75 and
        // needs to be split once more.
        let diff = x as i128 - hi as u128 as i128;
        let mid = diff as f64;
        let rest = (diff - mid as i128) as f64;
        let (s, e) = quick_two_sum(hi, mid);
        let (s, e2) = quick_two_sum(s, e + rest);
        Dd { hi: s, lo: e2 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_sign_negative(self) -> bool {
        self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0)
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let (p, e) = two_prod(q1, b);
        let (s, f) = two_sum(self.hi, -p);
        let f = f - e + self.lo;
        let q2 = (s + f) / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }

    /// Exact scaling by a power of two.
    #[inline]
    pub fn ldexp(self, e: i64) -> Dd {
        Dd {
            hi: ldexp(self.hi, e),
            lo: ldexp(self.lo, e),
        }
    }

    #[inline]
    pub fn sqr(self) -> Dd {
        self * self
    }

    pub fn recip(self) -> Dd {
        Dd::ONE / self
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let y = self.hi.sqrt();
        let (p, e) = two_prod(y, y);
        let r = (self - Dd { hi: p, lo: e }).hi;
        let (hi, lo) = quick_two_sum(y, r / (2.0 * y));
        Dd { hi, lo }
    }

    /// Nearest integer (ties away from zero on the `hi` part).
    pub fn round(self) -> Dd {
        let hi = self.hi.round();
        if hi == self.hi {
            let lo = self.lo.round();
            let (hi, lo) = quick_two_sum(hi, lo);
            Dd { hi, lo }
        } else if (hi - self.hi).abs() == 0.5 && self.lo != 0.0 {
            // hi sits exactly on .5, lo decides.
            let hi = if self.lo > 0.0 {
                self.hi.ceil()
            } else {
                self.hi.floor()
            };
            Dd { hi, lo: 0.0 }
        } else {
            Dd { hi, lo: 0.0 }
        }
    }

    pub fn floor(self) -> Dd {
        let hi = self.hi.floor();
        if hi == self.hi {
            let lo = self.lo.floor();
            let (hi, lo) = quick_two_sum(hi, lo);
            Dd { hi, lo }
        } else {
            Dd { hi, lo: 0.0 }
        }
    }

    /// `sin(pi * self)`.
    pub fn sin_pi(self) -> Dd {
        let (r, k) = reduce_half(self);
        let s = sin_pi_reduced(r);
        if k & 1 == 1 {
            -s
        } else {
            s
        }
    }

    /// `cos(pi * self)`.
    pub fn cos_pi(self) -> Dd {
        let (r, k) = reduce_half(self);
        let c = cos_pi_reduced(r);
        if k & 1 == 1 {
            -c
        } else {
            c
        }
    }

    /// `(sin(pi x), cos(pi x))` sharing one reduction.
    pub fn sin_cos_pi(self) -> (Dd, Dd) {
        let (r, k) = reduce_half(self);
        let s = sin_pi_reduced(r);
        let c = cos_pi_reduced(r);
        if k & 1 == 1 {
            (-s, -c)
        } else {
            (s, c)
        }
    }

    /// `cot(pi x)`; infinite at integers.
    pub fn cot_pi(self) -> Dd {
        let (s, c) = self.sin_cos_pi();
        if s.hi == 0.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        c / s
    }

    pub fn sin(self) -> Dd {
        (self / Dd::PI).sin_pi()
    }

    pub fn cos(self) -> Dd {
        (self / Dd::PI).cos_pi()
    }

    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ONE;
        }
        const SQUARINGS: i32 = 9;
        let m = (self.hi / Dd::LN2.hi).round();
        let r = (self - Dd::LN2.mul_f64(m)).ldexp(-(SQUARINGS as i64));
        // expm1(r) by Taylor, |r| < 7e-4
        let mut s = r;
        let mut p = r;
        let mut k = 2.0;
        loop {
            p = (p * r).div_f64(k);
            s += p;
            if p.hi.abs() <= 1e-36 * s.hi.abs() || k > 40.0 {
                break;
            }
            k += 1.0;
        }
        for _ in 0..SQUARINGS {
            // expm1(2y) = 2 expm1(y) + expm1(y)^2
            s = s.ldexp(1) + s.sqr();
        }
        (s + Dd::ONE).ldexp(m as i64)
    }

    /// Natural logarithm; `-inf` at zero, NaN below.
    pub fn ln(self) -> Dd {
        if self.hi < 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        if self.hi == 0.0 {
            return Dd::NEG_INFINITY;
        }
        if self.hi == 1.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        // split off the binary exponent so exp() stays in range
        let e = frexp_exp(self.hi);
        let m = self.ldexp(-e);
        let y = Dd::from_f64(m.hi.ln());
        let y = y + m * (-y).exp() - Dd::ONE;
        y + Dd::LN2.mul_f64(e as f64)
    }

    /// `ln(1 + self)` accurate for small arguments.
    pub fn ln_1p(self) -> Dd {
        if self.hi.abs() > 0.25 {
            return (Dd::ONE + self).ln();
        }
        // Newton on expm1: y <- y - (expm1(y) - x)/(1 + expm1(y))
        let y = Dd::from_f64(self.hi.ln_1p());
        let em1 = y.exp_m1();
        y - (em1 - self) / (em1 + Dd::ONE)
    }

    /// `exp(self) - 1` accurate for small arguments.
    pub fn exp_m1(self) -> Dd {
        if self.hi.abs() > 0.25 {
            return self.exp() - Dd::ONE;
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        let mut s = self;
        let mut p = self;
        let mut k = 2.0;
        loop {
            p = (p * self).div_f64(k);
            s += p;
            if p.hi.abs() <= 1e-36 * s.hi.abs() || k > 60.0 {
                break;
            }
            k += 1.0;
        }
        s
    }

    pub fn powi(self, n: i32) -> Dd {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut n = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc *= base;
            }
            base = base.sqr();
            n >>= 1;
        }
        acc
    }
}

/// Reduces `x` to `r` in `[-1/2, 1/2]` with `x = r + k`, `k` an integer.
fn reduce_half(x: Dd) -> (Dd, i64) {
    let k = x.round();
    let r = x - k;
    // k fits in i64 for every argument this crate produces
    let ki = k.hi as i64 + k.lo as i64;
    (r, ki)
}

fn inv_factorials() -> &'static [Dd] {
    static TABLE: OnceLock<Vec<Dd>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut v = Vec::with_capacity(40);
        let mut f = Dd::ONE;
        v.push(Dd::ONE);
        for k in 1..40 {
            f = f.div_f64(k as f64);
            v.push(f);
        }
        v
    })
}

/// Taylor series of `sin(y)` for `|y| <= pi/4`.
fn sin_taylor(y: Dd) -> Dd {
    let inv = inv_factorials();
    let y2 = y.sqr();
    let mut p = y;
    let mut s = y;
    let mut k = 3;
    loop {
        p = -(p * y2);
        let term = p * inv[k];
        s += term;
        if term.hi.abs() <= 1e-35 * s.hi.abs() || k + 2 >= inv.len() {
            break;
        }
        k += 2;
    }
    s
}

/// Taylor series of `cos(y)` for `|y| <= pi/4`.
fn cos_taylor(y: Dd) -> Dd {
    let inv = inv_factorials();
    let y2 = y.sqr();
    let mut p = Dd::ONE;
    let mut s = Dd::ONE;
    let mut k = 2;
    loop {
        p = -(p * y2);
        let term = p * inv[k];
        s += term;
        if term.hi.abs() <= 1e-35 || k + 2 >= inv.len() {
            break;
        }
        k += 2;
    }
    s
}

/// `sin(pi r)` for `|r| <= 1/2`.
fn sin_pi_reduced(r: Dd) -> Dd {
    let neg = r.is_sign_negative();
    let a = r.abs();
    let s = if a.hi <= 0.25 {
        sin_taylor(Dd::PI * a)
    } else {
        cos_taylor(Dd::PI * (Dd::HALF - a))
    };
    if neg {
        -s
    } else {
        s
    }
}

/// `cos(pi r)` for `|r| <= 1/2`.
fn cos_pi_reduced(r: Dd) -> Dd {
    let a = r.abs();
    if a.hi <= 0.25 {
        cos_taylor(Dd::PI * a)
    } else {
        sin_taylor(Dd::PI * (Dd::HALF - a))
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

impl AddAssign for Dd {
    #[inline]
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    #[inline]
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    #[inline]
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd::from_f64(x)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Sums a slice with a fixed pairwise tree, so the rounding pattern depends
/// only on the slice length.
pub fn pairwise_sum(xs: &[Dd]) -> Dd {
    match xs.len() {
        0 => Dd::ZERO,
        1 => xs[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// A double-double with a separate binary exponent, for long products whose
/// magnitude leaves the `f64` range.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledDd {
    pub mant: Dd,
    pub exp2: i64,
}

impl Default for ScaledDd {
    fn default() -> Self {
        ScaledDd::ONE
    }
}

impl ScaledDd {
    pub const ONE: ScaledDd = ScaledDd {
        mant: Dd::ONE,
        exp2: 0,
    };

    #[inline]
    pub fn mul_dd(&mut self, x: Dd) {
        self.mant *= x;
        let a = self.mant.hi.abs();
        if !(1e-200..=1e200).contains(&a) && a != 0.0 && a.is_finite() {
            self.normalize();
        }
    }

    pub fn mul(&mut self, other: ScaledDd) {
        self.mant *= other.mant;
        self.exp2 += other.exp2;
        self.normalize();
    }

    fn normalize(&mut self) {
        if self.mant.hi == 0.0 || !self.mant.hi.is_finite() {
            return;
        }
        let e = frexp_exp(self.mant.hi);
        self.mant = self.mant.ldexp(-e);
        self.exp2 += e;
    }

    pub fn is_zero(&self) -> bool {
        self.mant.hi == 0.0
    }

    /// Natural log of the absolute value.
    pub fn ln_abs(&self) -> Dd {
        self.mant.abs().ln() + Dd::LN2.mul_f64(self.exp2 as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, b: Dd, rel: f64) -> bool {
        let d = (a - b).abs().to_f64();
        d <= rel * b.abs().to_f64().max(1e-300)
    }

    // pi from Machin's formula, independent of the stored constant
    fn machin_pi() -> Dd {
        fn atan_inv(n: f64) -> Dd {
            let x = Dd::ONE.div_f64(n);
            let x2 = x.sqr();
            let mut p = x;
            let mut s = x;
            let mut k = 1.0;
            loop {
                p = -(p * x2);
                k += 2.0;
                let t = p.div_f64(k);
                s += t;
                if t.hi.abs() < 1e-40 {
                    break;
                }
            }
            s
        }
        (atan_inv(5.0).mul_f64(4.0) - atan_inv(239.0)).mul_f64(4.0)
    }

    #[test]
    fn pi_constant_matches_machin() {
        assert!(close(Dd::PI, machin_pi(), 1e-31));
    }

    #[test]
    fn ln2_constant_roundtrips() {
        assert!(close(Dd::LN2.exp(), Dd::from_f64(2.0), 1e-30));
        assert!(close(Dd::from_f64(2.0).ln(), Dd::LN2, 1e-30));
    }

    #[test]
    fn sqrt_squares_back() {
        for x in [2.0, 5.0, 0.3, 1e-10, 12345.678] {
            let r = Dd::from_f64(x).sqrt();
            assert!(close(r.sqr(), Dd::from_f64(x), 1e-31), "{x}");
        }
    }

    #[test]
    fn sin_cos_pythagoras_and_special_points() {
        for i in 0..200 {
            let x = Dd::from_f64(-3.0 + i as f64 * 0.0371);
            let (s, c) = x.sin_cos_pi();
            let one = s.sqr() + c.sqr();
            assert!((one - Dd::ONE).abs().hi < 1e-30);
        }
        assert!(close(Dd::from_f64(1.0 / 6.0).sin_pi(), Dd::HALF, 1e-15));
        assert!(Dd::from_f64(1.0).sin_pi().abs().hi < 1e-30);
        assert!(close(Dd::from_f64(0.5).sin_pi(), Dd::ONE, 1e-32));
        // sin(pi/4)^2 = 1/2 to full precision
        assert!(close(Dd::from_f64(0.25).sin_pi().sqr(), Dd::HALF, 1e-31));
    }

    #[test]
    fn small_argument_sine_keeps_relative_precision() {
        let x = Dd::from_f64(1e-9);
        let s = x.sin_pi();
        // sin(y) = y - y^3/6, y = pi 1e-9
        let y = Dd::PI * x;
        let expected = y - y * y * y.div_f64(6.0);
        assert!(close(s, expected, 1e-30));
    }

    #[test]
    fn exp_ln_roundtrip() {
        for x in [1e-20, 0.001, 0.5, 1.0, 1.5, 7.25, 1e10, 1e-200] {
            let d = Dd::from_f64(x);
            assert!(close(d.ln().exp(), d, 1e-29), "{x}");
        }
        for x in [-600.0, -3.5, -1e-12, 0.0, 2.0, 500.0] {
            let d = Dd::from_f64(x);
            let back = d.exp().ln();
            assert!((back - d).abs().hi <= 1e-29 * x.abs().max(1.0), "{x}");
        }
    }

    #[test]
    fn ln_1p_small() {
        let x = Dd::from_f64(1e-12);
        let l = x.ln_1p();
        let series = x - x.sqr().mul_f64(0.5) + x.sqr() * x.div_f64(3.0);
        assert!(close(l, series, 1e-30));
    }

    #[test]
    fn u128_conversion_exact_below_2_106() {
        let x: u128 = (1u128 << 105) + 12345678901234567;
        let d = Dd::from_u128(x);
        let back = d.hi as u128 as i128 + d.lo as i128;
        assert_eq!(back as u128, x);
    }

    #[test]
    fn scaled_product_survives_underflow() {
        let mut p = ScaledDd::ONE;
        for _ in 0..5000 {
            p.mul_dd(Dd::from_f64(1e-3));
        }
        let expected = Dd::from_f64(1e-3).ln().mul_f64(5000.0);
        assert!(close(p.ln_abs(), expected, 1e-28));
    }
}
