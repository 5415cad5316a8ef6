//! Fixed-point representation of the golden rotation `w = (sqrt 5 - 1)/2`,
//! the fractional parts `{r w}`, and the auxiliary sequences
//!
//! ```text
//! s_nt    = 2 sin pi (t/F_n - w^n ([t F_{n-1}]/F_n - 1/2))
//! xi_nt   = [t F_{n-1}]/F_n - 1/2      (0 when F_n | t)
//! xi_inf  = {t w} - 1/2
//! h_nt    = cot(pi t/F_n) sin(pi w^n xi_nt)   (F_n does not divide t)
//! ```
//!
//! `[x]` is the least non-negative residue modulo `F_n`. Note that `s_nt` uses
//! the raw residue expression even when `F_n | t`, which is where it differs
//! from `xi_nt`.
//!
//! Fractional parts are held as `P`-bit integers, so `{r w}` for every `r` is
//! the exact residue `r * m mod 2^P` of the rounded mantissa `m` of `w`; the
//! only error is the `(r + 1) 2^-P` inherited from rounding `w`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::fibcore::{fib_u64, FibTable};

pub const OMEGA_F64: f64 = 0.618_033_988_749_894_8;

/// Largest renormalisation level for which `F_n` and the residue arithmetic
/// fit in machine integers.
pub const MAX_LEVEL: u32 = 92;

/// Guard bits used while building `w` and its powers.
const GUARD_BITS: u32 = 64;

/// Fixed-point budget: errors at or above `2^-16` mean the precision is spent.
pub const ERR_BUDGET: f64 = 1.0 / 65536.0;

/// A `P`-bit fixed-point fraction in `[0, 1)` with an absolute error bound of
/// `err_ulps * 2^-P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedFrac {
    pub mantissa: BigUint,
    pub bits: u32,
    pub err_ulps: u128,
}

impl FixedFrac {
    pub fn new(mantissa: BigUint, bits: u32, err_ulps: u128) -> Result<Self> {
        if mantissa.bits() > bits as u64 {
            return Err(Error::InvalidArgument(format!(
                "mantissa does not fit in {bits} fractional bits"
            )));
        }
        Ok(FixedFrac {
            mantissa,
            bits,
            err_ulps,
        })
    }

    pub fn zero(bits: u32) -> Self {
        FixedFrac {
            mantissa: BigUint::zero(),
            bits,
            err_ulps: 0,
        }
    }

    /// `num/den mod 1`, rounded down, with a one-ulp error bound.
    pub fn from_ratio(num: &BigInt, den: &BigUint, bits: u32) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let one = BigInt::one() << bits;
        let den = BigInt::from(den.clone());
        let scaled = num * &one;
        let floor = num_integer::Integer::div_floor(&scaled, &den);
        let m = num_integer::Integer::mod_floor(&floor, &one);
        let exact = num_integer::Integer::mod_floor(&scaled, &den).is_zero();
        Ok(FixedFrac {
            mantissa: m.to_biguint().expect("non-negative after mod_floor"),
            bits,
            err_ulps: if exact { 0 } else { 1 },
        })
    }

    /// Parses a decimal string such as `-0.0123` or `1e-5` and returns the
    /// value reduced mod 1 together with the signed value itself.
    pub fn parse_decimal(s: &str, bits: u32) -> Result<(Self, BigRational)> {
        let q = parse_decimal_rational(s)?;
        let f = FixedFrac::from_ratio(q.numer(), &q.denom().to_biguint().unwrap(), bits)?;
        Ok((f, q))
    }

    /// Absolute error bound.
    pub fn err(&self) -> f64 {
        self.err_ulps as f64 * crate::dd::ldexp(1.0, -(self.bits as i64))
    }

    pub fn to_dd(&self) -> Dd {
        let limbs = self.mantissa.to_u64_digits();
        limbs_to_dd(&limbs, self.bits)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_dd().to_f64()
    }

    /// Distance to the nearest integer, and whether the value is in the upper
    /// half `[1/2, 1)`.
    pub fn dist_to_int(&self) -> (Dd, bool) {
        let mut w = RotationWalker::from_parts(&self.mantissa, &BigUint::zero(), self.bits);
        w.current_dist()
    }

    /// `(self + other) mod 1`.
    pub fn add_mod(&self, other: &FixedFrac) -> FixedFrac {
        assert_eq!(self.bits, other.bits, "mismatched precision");
        let one = BigUint::one() << self.bits;
        FixedFrac {
            mantissa: (&self.mantissa + &other.mantissa) % one,
            bits: self.bits,
            err_ulps: self.err_ulps + other.err_ulps,
        }
    }

    /// Representative in `[-1/2, 1/2)`.
    pub fn signed_dd(&self) -> Dd {
        let (d, upper) = self.dist_to_int();
        if upper {
            -d
        } else {
            d
        }
    }
}

/// Parses `[+-]digits[.digits][e[+-]digits]` exactly.
pub fn parse_decimal_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::InvalidArgument(format!("not a decimal number: {s:?}"));
    let s = s.trim();
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10u32);
    let mut q = if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        q = -q;
    }
    Ok(q)
}

fn window128(limbs: &[u64], lo: usize) -> u128 {
    let li = lo / 64;
    let off = lo % 64;
    let get = |i: usize| limbs.get(i).copied().unwrap_or(0) as u128;
    let a = get(li) | (get(li + 1) << 64);
    if off == 0 {
        a
    } else {
        (a >> off) | (get(li + 2) << (128 - off))
    }
}

fn highest_bit(limbs: &[u64]) -> Option<usize> {
    for (i, &l) in limbs.iter().enumerate().rev() {
        if l != 0 {
            return Some(i * 64 + 63 - l.leading_zeros() as usize);
        }
    }
    None
}

/// Converts a `bits`-bit fraction (little-endian limbs) to double-double with
/// relative error below `2^-105`.
pub(crate) fn limbs_to_dd(limbs: &[u64], bits: u32) -> Dd {
    match highest_bit(limbs) {
        None => Dd::ZERO,
        Some(h) => {
            let lo = h.saturating_sub(127);
            let w = window128(limbs, lo);
            Dd::from_u128(w).ldexp(lo as i64 - bits as i64)
        }
    }
}

/// Steps through `{theta + r w}` exactly in `P`-bit integer arithmetic.
#[derive(Clone, Debug)]
pub struct RotationWalker {
    cur: Vec<u64>,
    step: Vec<u64>,
    scratch: Vec<u64>,
    bits: u32,
    top_mask: u64,
}

impl RotationWalker {
    fn from_parts(start: &BigUint, step: &BigUint, bits: u32) -> Self {
        let n = bits.div_ceil(64) as usize;
        let mut cur = start.to_u64_digits();
        cur.resize(n, 0);
        let mut st = step.to_u64_digits();
        st.resize(n, 0);
        let rem = bits % 64;
        let top_mask = if rem == 0 {
            u64::MAX
        } else {
            (1u64 << rem) - 1
        };
        RotationWalker {
            cur,
            step: st,
            scratch: vec![0; n],
            bits,
            top_mask,
        }
    }

    pub fn new(start: &FixedFrac, step: &FixedFrac) -> Self {
        assert_eq!(start.bits, step.bits, "mismatched precision");
        Self::from_parts(&start.mantissa, &step.mantissa, start.bits)
    }

    /// `value <- (value + step) mod 1`.
    #[inline]
    pub fn advance(&mut self) {
        let mut carry = 0u64;
        for (c, &s) in self.cur.iter_mut().zip(self.step.iter()) {
            let (a, o1) = c.overflowing_add(s);
            let (b, o2) = a.overflowing_add(carry);
            *c = b;
            carry = (o1 | o2) as u64;
        }
        if let Some(last) = self.cur.last_mut() {
            *last &= self.top_mask;
        }
    }

    #[inline]
    fn is_upper(&self) -> bool {
        let top = self.bits as usize - 1;
        (self.cur[top / 64] >> (top % 64)) & 1 == 1
    }

    /// Current value in `[0, 1)`.
    pub fn current_dd(&self) -> Dd {
        limbs_to_dd(&self.cur, self.bits)
    }

    /// Distance `d` in `[0, 1/2]` of the current value to the nearest integer
    /// and whether the value lies in `[1/2, 1)`.
    #[inline]
    pub fn current_dist(&mut self) -> (Dd, bool) {
        if self.is_upper() {
            // 1 - x in two's complement
            let mut carry = 1u64;
            for (s, &c) in self.scratch.iter_mut().zip(self.cur.iter()) {
                let (v, o) = (!c).overflowing_add(carry);
                *s = v;
                carry = o as u64;
            }
            if let Some(last) = self.scratch.last_mut() {
                *last &= self.top_mask;
            }
            (limbs_to_dd(&self.scratch, self.bits), true)
        } else {
            (limbs_to_dd(&self.cur, self.bits), false)
        }
    }

    pub fn current_fixed(&self) -> FixedFrac {
        FixedFrac {
            mantissa: BigUint::from_slice(
                &self
                    .cur
                    .iter()
                    .flat_map(|&l| [l as u32, (l >> 32) as u32])
                    .collect::<Vec<_>>(),
            ),
            bits: self.bits,
            err_ulps: 0,
        }
    }

    /// Adds the current mantissa into a wide accumulator (little-endian limbs).
    #[inline]
    pub fn accumulate(&self, acc: &mut [u64]) {
        let mut carry = 0u64;
        for (i, a) in acc.iter_mut().enumerate() {
            let c = self.cur.get(i).copied().unwrap_or(0);
            let (x, o1) = a.overflowing_add(c);
            let (y, o2) = x.overflowing_add(carry);
            *a = y;
            carry = (o1 | o2) as u64;
        }
    }

    pub fn same_position(&self, other: &FixedFrac) -> bool {
        self.current_fixed().mantissa == other.mantissa
    }
}

/// Integer square root by Newton's iteration.
pub fn isqrt(n: &BigUint) -> BigUint {
    if n.is_zero() {
        return BigUint::zero();
    }
    let mut x = BigUint::one() << (n.bits().div_ceil(2));
    loop {
        let y = (&x + n / &x) >> 1u32;
        if y >= x {
            return x;
        }
        x = y;
    }
}

/// Immutable context: `w` to `P` bits, cached powers `w^n` and double-double
/// copies of both.
#[derive(Debug)]
pub struct GoldenCtx {
    bits: u32,
    omega: FixedFrac,
    /// `powers[n - 1] = w^n`
    powers: Vec<FixedFrac>,
    powers_dd: Vec<Dd>,
    omega_dd: Dd,
    fibs: &'static FibTable,
}

impl GoldenCtx {
    /// Builds `w` from the integer square root of `5 * 2^(2P')` and fills the
    /// power cache up to `n_max`.
    pub fn new(bits: u32, n_max: u32) -> Result<Self> {
        if bits < 64 {
            return Err(Error::PrecisionTooLow { bits });
        }
        if bits > 1 << 16 {
            return Err(Error::InvalidArgument(format!(
                "precision of {bits} bits is beyond the supported 65536"
            )));
        }
        let n_max = n_max.max(1);
        let wide = bits + GUARD_BITS;
        let one_wide = BigUint::one() << wide;
        let sqrt5 = isqrt(&(BigUint::from(5u32) << (2 * wide)));
        let omega_wide = (&sqrt5 - &one_wide) >> 1u32;
        let round =
            |x: &BigUint| -> BigUint { (x + (BigUint::one() << (GUARD_BITS - 1))) >> GUARD_BITS };
        let omega = FixedFrac {
            mantissa: round(&omega_wide),
            bits,
            err_ulps: 1,
        };
        let mut powers = Vec::with_capacity(n_max as usize);
        let mut p = omega_wide.clone();
        for _ in 0..n_max {
            powers.push(FixedFrac {
                mantissa: round(&p),
                bits,
                err_ulps: 1,
            });
            p = (&p * &omega_wide) >> wide;
        }
        let powers_dd = powers.iter().map(FixedFrac::to_dd).collect();
        let omega_dd = omega.to_dd();
        Ok(GoldenCtx {
            bits,
            omega,
            powers,
            powers_dd,
            omega_dd,
            fibs: FibTable::global(),
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn omega(&self) -> &FixedFrac {
        &self.omega
    }

    pub fn omega_dd(&self) -> Dd {
        self.omega_dd
    }

    pub fn fibs(&self) -> &FibTable {
        self.fibs
    }

    /// Highest `n` with `w^n` cached.
    pub fn n_max(&self) -> u32 {
        self.powers.len() as u32
    }

    /// Highest level supported by the sequence operations.
    pub fn max_level(&self) -> u32 {
        self.n_max().min(MAX_LEVEL)
    }

    pub fn check_level(&self, n: u32) -> Result<()> {
        if n == 0 || n > self.max_level() {
            Err(Error::LevelOutOfRange {
                n,
                max: self.max_level(),
            })
        } else {
            Ok(())
        }
    }

    /// `w^n` for `1 <= n <= n_max`.
    pub fn omega_pow(&self, n: u32) -> Result<&FixedFrac> {
        if n == 0 || n > self.n_max() {
            return Err(Error::LevelOutOfRange {
                n,
                max: self.n_max(),
            });
        }
        Ok(&self.powers[n as usize - 1])
    }

    pub fn omega_pow_dd(&self, n: u32) -> Result<Dd> {
        if n == 0 {
            return Ok(Dd::ONE);
        }
        self.omega_pow(n)?;
        Ok(self.powers_dd[n as usize - 1])
    }

    /// `F_n` as a machine integer (levels up to [`MAX_LEVEL`]).
    pub fn fib(&self, n: u32) -> u64 {
        fib_u64(n).expect("level checked against MAX_LEVEL")
    }

    /// `{r w}` with error bound `(r + 1) 2^-P`.
    pub fn frac_r_omega(&self, r: u128) -> Result<FixedFrac> {
        let err_ulps = r + 1;
        let err = err_ulps as f64 * crate::dd::ldexp(1.0, -(self.bits as i64));
        if err >= ERR_BUDGET {
            return Err(Error::PrecisionExhausted {
                context: format!("{{r w}} for r = {r}"),
                err,
            });
        }
        let one = BigUint::one() << self.bits;
        Ok(FixedFrac {
            mantissa: (&self.omega.mantissa * BigUint::from(r)) % one,
            bits: self.bits,
            err_ulps,
        })
    }

    /// Walker positioned at `{start w}`, stepping by `w`.
    pub fn walker(&self, start: u128) -> Result<RotationWalker> {
        let f = self.frac_r_omega(start)?;
        Ok(RotationWalker::new(&f, &self.omega))
    }

    /// Walker positioned at `{theta + start w}`.
    pub fn walker_from_phase(&self, theta: &FixedFrac, start: u128) -> Result<RotationWalker> {
        let f = self.frac_r_omega(start)?.add_mod(theta);
        Ok(RotationWalker::new(&f, &self.omega))
    }

    /// Absolute error of `{r w}` for every `r <= r_max`.
    pub fn frac_err(&self, r_max: u128) -> f64 {
        (r_max + 1) as f64 * crate::dd::ldexp(1.0, -(self.bits as i64))
    }

    /// `xi_inf(t) = {t w} - 1/2`.
    pub fn xi_inf(&self, t: u128) -> Result<Dd> {
        Ok(self.frac_r_omega(t)?.to_dd() - Dd::HALF)
    }

    /// Least non-negative residue `[t F_{n-1}] mod F_n`.
    pub fn residue(&self, n: u32, t: i64) -> Result<u64> {
        self.check_level(n)?;
        Ok(SeqParams::new(self, n)?.residue(t))
    }

    /// `xi_nt` as an exact rational.
    pub fn xi_n(&self, n: u32, t: i64) -> Result<BigRational> {
        let p = SeqParams::new(self, n)?;
        let res = p.residue(t);
        if res == 0 && t.rem_euclid(p.f as i64) == 0 {
            return Ok(BigRational::zero());
        }
        Ok(BigRational::new(
            BigInt::from(2 * res as i128 - p.f as i128),
            BigInt::from(2 * p.f as i128),
        ))
    }

    pub fn s_nt(&self, n: u32, t: i64) -> Result<Dd> {
        Ok(SeqParams::new(self, n)?.s(t))
    }

    pub fn h_nt(&self, n: u32, t: i64) -> Result<Dd> {
        SeqParams::new(self, n)?.h(t)
    }

    pub fn seq_term(&self, n: u32, t: i64) -> Result<SeqTerm> {
        let p = SeqParams::new(self, n)?;
        let h = p.h(t).ok();
        Ok(SeqTerm {
            n,
            t,
            s: p.s(t),
            xi: self.xi_n(n, t)?,
            h,
        })
    }
}

/// Convenience constructor mirroring [`GoldenCtx::new`].
pub fn make_ctx(bits: u32, n_max: u32) -> Result<GoldenCtx> {
    GoldenCtx::new(bits, n_max)
}

/// One term of the auxiliary sequences at level `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeqTerm {
    pub n: u32,
    pub t: i64,
    pub s: Dd,
    pub xi: BigRational,
    /// `None` when `F_n | t`.
    pub h: Option<Dd>,
}

impl SeqTerm {
    pub fn xi_f64(&self) -> f64 {
        self.xi.to_f64().unwrap_or(f64::NAN)
    }
}

/// Per-level constants for the hot loops over `t`.
#[derive(Clone, Copy, Debug)]
pub struct SeqParams {
    pub n: u32,
    /// `F_n`
    pub f: u64,
    /// `F_{n-1}`
    pub g: u64,
    /// `w^n`
    pub wn: Dd,
    f_dd: Dd,
}

impl SeqParams {
    pub fn new(ctx: &GoldenCtx, n: u32) -> Result<Self> {
        ctx.check_level(n)?;
        let f = ctx.fib(n);
        Ok(SeqParams {
            n,
            f,
            g: ctx.fib(n - 1),
            wn: ctx.omega_pow_dd(n)?,
            f_dd: Dd::from_u64(f),
        })
    }

    #[inline]
    pub fn residue(&self, t: i64) -> u64 {
        ((t as i128 * self.g as i128).rem_euclid(self.f as i128)) as u64
    }

    /// `xi_nt` as a double-double; 0 when `F_n | t`.
    #[inline]
    pub fn xi(&self, t: i64) -> Dd {
        if t.rem_euclid(self.f as i64) == 0 {
            return Dd::ZERO;
        }
        let res = self.residue(t);
        Dd::from_i64(2 * res as i64 - self.f as i64) / self.f_dd.mul_f64(2.0)
    }

    /// Argument of the sine in `s_nt`, in units of `pi`.
    #[inline]
    pub fn s_arg(&self, t: i64) -> Dd {
        let res = self.residue(t);
        let num = Dd::from_i64(2 * t) - self.wn * Dd::from_i64(2 * res as i64 - self.f as i64);
        num / self.f_dd.mul_f64(2.0)
    }

    #[inline]
    pub fn s(&self, t: i64) -> Dd {
        self.s_arg(t).sin_pi().mul_f64(2.0)
    }

    /// `s_n0 = 2 sin(pi w^n / 2)`.
    pub fn s0(&self) -> Dd {
        self.wn.mul_f64(0.5).sin_pi().mul_f64(2.0)
    }

    /// `2 sin(pi t / F_n)`.
    #[inline]
    pub fn rational_sine(&self, t: i64) -> Dd {
        (Dd::from_i64(t) / self.f_dd).sin_pi().mul_f64(2.0)
    }

    #[inline]
    pub fn h(&self, t: i64) -> Result<Dd> {
        if t.rem_euclid(self.f as i64) == 0 {
            return Err(Error::UndefinedIndex { n: self.n, t });
        }
        let cot = (Dd::from_i64(t) / self.f_dd).cot_pi();
        Ok(cot * (self.wn * self.xi(t)).sin_pi())
    }
}

/// Weight of term `r` under the generalised-bounds convention: the overlap of
/// `[r, r + 1)` with `[lower, upper + 1)`. Integer bounds give the ordinary
/// inclusive range `lower..=upper`; `upper = k + 1/2` adds half of term `k + 1`.
fn term_weights(lower: f64, upper: f64) -> Option<(i64, i64)> {
    let hi = upper + 1.0;
    if !(hi > lower) {
        return None;
    }
    Some((lower.floor() as i64, hi.ceil() as i64 - 1))
}

fn weight(r: i64, lower: f64, upper: f64) -> f64 {
    let a = (r as f64).max(lower);
    let b = ((r + 1) as f64).min(upper + 1.0);
    (b - a).max(0.0)
}

/// Generalised sum with real bounds (step-function integral).
pub fn gen_sum<F: Fn(i64) -> Dd>(series: F, lower: f64, upper: f64) -> Dd {
    let Some((first, last)) = term_weights(lower, upper) else {
        return Dd::ZERO;
    };
    let mut s = Dd::ZERO;
    for r in first..=last {
        let w = weight(r, lower, upper);
        if w == 0.0 {
            continue;
        }
        let a = series(r);
        s += if w == 1.0 { a } else { a.mul_f64(w) };
    }
    s
}

/// Log of the generalised product `exp(integral of log f)`.
pub fn gen_log_prod<F: Fn(i64) -> Dd + Sync>(series: F, lower: f64, upper: f64) -> Result<Dd> {
    let Some((first, last)) = term_weights(lower, upper) else {
        return Ok(Dd::ZERO);
    };
    // full-weight interior runs through the block-parallel product
    let mut full_first = first;
    let mut full_last = last;
    let mut partial = Vec::new();
    if weight(first, lower, upper) < 1.0 {
        partial.push(first);
        full_first += 1;
    }
    if full_last >= full_first && weight(full_last, lower, upper) < 1.0 {
        partial.push(full_last);
        full_last -= 1;
    }
    let mut log = Dd::ZERO;
    if full_last >= full_first {
        let bad = std::sync::atomic::AtomicI64::new(i64::MAX);
        let l = crate::parallel::par_log_product(full_first as u64, full_last as u64 + 1, |r| {
            let a = series(r as i64);
            if a.hi <= 0.0 {
                bad.fetch_min(r as i64, std::sync::atomic::Ordering::Relaxed);
                Dd::ONE
            } else {
                a
            }
        });
        let b = bad.load(std::sync::atomic::Ordering::Relaxed);
        if b != i64::MAX {
            return Err(Error::NonPositiveTerm { index: b });
        }
        log += l;
    }
    for r in partial {
        let w = weight(r, lower, upper);
        if w == 0.0 {
            continue;
        }
        let a = series(r);
        if a.hi <= 0.0 {
            return Err(Error::NonPositiveTerm { index: r });
        }
        log += a.ln().mul_f64(w);
    }
    Ok(log)
}

/// Generalised product with real bounds.
pub fn gen_prod<F: Fn(i64) -> Dd + Sync>(series: F, lower: f64, upper: f64) -> Result<Dd> {
    Ok(gen_log_prod(series, lower, upper)?.exp())
}

/// `|x|` of a rational as `f64`.
pub fn rational_abs_f64(x: &BigRational) -> f64 {
    x.abs().to_f64().unwrap_or(f64::NAN)
}
