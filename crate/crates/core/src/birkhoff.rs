//! Sums along the golden rotation: the partial sums
//! `S_nt(theta) = sum_{r=1}^t sin pi (w^n ({theta + r w} - 1/2))`, centred
//! fractional-part sums at convergent denominators, cotangent sums, the
//! Birkhoff sum `S_k = 2 log P_k`, and the closed-form sine sums and products
//! used as an executable identity suite.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dd::{ldexp, pairwise_sum, Dd, DD_FN_REL_ERR};
use crate::error::{Error, Result};
use crate::fibcore::{fib_u64, zeckendorf};
use crate::goldenangle::{limbs_to_dd, FixedFrac, GoldenCtx, OMEGA_F64};
use crate::parallel::par_map_blocks;
use crate::sudler::sudler_p;

/// `K` in `|S_nt| < K w^n (ln t + 1)`.
pub fn partial_sum_constant() -> f64 {
    1.5 * std::f64::consts::PI / (2.0 + OMEGA_F64).ln() + 1.0
}

/// Partial sums `S_nt(theta)` for `t = 1..=t_max`.
#[derive(Clone, Debug)]
pub struct SumSeries {
    pub n: u32,
    pub theta: FixedFrac,
    /// `values[t - 1] = S_nt`
    pub values: Vec<Dd>,
    pub err: f64,
}

fn sum_term_err(ctx: &GoldenCtx, n: u32, r_max: u64, theta: &FixedFrac) -> Result<f64> {
    let wn = ctx.omega_pow_dd(n)?.hi;
    let delta = ctx.frac_err(r_max as u128) + theta.err();
    Ok(std::f64::consts::PI * wn * delta + 4.0 * DD_FN_REL_ERR * wn)
}

fn check_theta(ctx: &GoldenCtx, theta: &FixedFrac) -> Result<()> {
    if theta.bits != ctx.bits() {
        return Err(Error::InvalidArgument(format!(
            "phase has {} bits, context has {}",
            theta.bits,
            ctx.bits()
        )));
    }
    Ok(())
}

/// `sum_{r = start}^{start + len - 1} sin pi (w^n ({theta + r w} - 1/2))`.
fn segment_sum(ctx: &GoldenCtx, wn: Dd, theta: &FixedFrac, start: u64, len: u64) -> Result<Dd> {
    let mut w = ctx.walker_from_phase(theta, start as u128)?;
    let mut s = Dd::ZERO;
    for _ in 0..len {
        s += (wn * (w.current_dd() - Dd::HALF)).sin_pi();
        w.advance();
    }
    Ok(s)
}

pub fn partial_sums(ctx: &GoldenCtx, n: u32, t_max: u64, theta: &FixedFrac) -> Result<SumSeries> {
    check_theta(ctx, theta)?;
    let wn = ctx.omega_pow_dd(n)?;
    ctx.frac_r_omega(t_max as u128 + 1)?;
    let parts = par_map_blocks(1, t_max + 1, |a, b| -> Result<Vec<Dd>> {
        let mut w = ctx.walker_from_phase(theta, a as u128)?;
        let mut s = Dd::ZERO;
        let mut out = Vec::with_capacity((b - a) as usize);
        for _ in a..b {
            s += (wn * (w.current_dd() - Dd::HALF)).sin_pi();
            out.push(s);
            w.advance();
        }
        Ok(out)
    });
    let mut values = Vec::with_capacity(t_max as usize);
    let mut offset = Dd::ZERO;
    for p in parts {
        let p = p?;
        let last = *p.last().expect("blocks are non-empty");
        values.extend(p.into_iter().map(|v| offset + v));
        offset += last;
    }
    let err = t_max as f64 * sum_term_err(ctx, n, t_max, theta)?;
    Ok(SumSeries {
        n,
        theta: theta.clone(),
        values,
        err,
    })
}

/// `S_nt(theta)` by direct summation.
pub fn s_nt(ctx: &GoldenCtx, n: u32, t: u64, theta: &FixedFrac) -> Result<Dd> {
    check_theta(ctx, theta)?;
    if t == 0 {
        return Ok(Dd::ZERO);
    }
    let wn = ctx.omega_pow_dd(n)?;
    ctx.frac_r_omega(t as u128 + 1)?;
    let parts = par_map_blocks(1, t + 1, |a, b| segment_sum(ctx, wn, theta, a, b - a));
    let parts: Result<Vec<Dd>> = parts.into_iter().collect();
    Ok(pairwise_sum(&parts?))
}

/// `S_nt(theta)` through the Zeckendorf digits of `t`:
/// `sum_s b_s S_{n, F_s}(theta + t_s w)` with `t_s = sum_{u > s} b_u F_u`.
pub fn s_nt_split(ctx: &GoldenCtx, n: u32, t: u64, theta: &FixedFrac) -> Result<Dd> {
    check_theta(ctx, theta)?;
    let wn = ctx.omega_pow_dd(n)?;
    let z = zeckendorf(t as u128);
    let mut total = Dd::ZERO;
    for s in z.indices() {
        let ts = z.offset_above(s) as u64;
        let phase = ctx.frac_r_omega(ts as u128)?.add_mod(theta);
        let len = fib_u64(s).expect("index below t");
        total += segment_sum(ctx, wn, &phase, 1, len)?;
    }
    Ok(total)
}

/// Scan of `|S_nt|` over `1 <= t <= F_n - 1` at phase 0.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialSumReport {
    pub n: u32,
    /// `max_t |S_nt| / (w^n (ln t + 1))`
    pub max_ratio: f64,
    pub arg_max_ratio: u64,
    /// The constant `K` the ratio is compared against.
    pub k_const: f64,
    /// Largest `|S_nt| - (3/2) pi w^n F_L(t)` (negative when the length
    /// bound holds outright).
    pub max_length_excess: f64,
    /// Largest `|direct - split|`.
    pub max_split_dev: f64,
    pub err: f64,
}

impl PartialSumReport {
    pub fn ratio_bound_holds(&self) -> bool {
        self.max_ratio < self.k_const
    }
}

pub fn partial_sum_report(ctx: &GoldenCtx, n: u32) -> Result<PartialSumReport> {
    ctx.check_level(n)?;
    let f = ctx.fib(n);
    if f < 2 {
        return Err(Error::InvalidArgument("need F_n >= 2".into()));
    }
    let theta = FixedFrac::zero(ctx.bits());
    let series = partial_sums(ctx, n, f - 1, &theta)?;
    let wn = ctx.omega_pow_dd(n)?.to_f64();
    let splits: Result<Vec<f64>> = (1..f)
        .into_par_iter()
        .map(|t| {
            let s = s_nt_split(ctx, n, t, &theta)?;
            Ok((s - series.values[t as usize - 1]).abs().to_f64())
        })
        .collect();
    let max_split_dev = splits?.into_iter().fold(0.0, f64::max);
    let mut max_ratio = 0.0;
    let mut arg = 1;
    let mut excess = f64::NEG_INFINITY;
    for (i, v) in series.values.iter().enumerate() {
        let t = i as u64 + 1;
        let a = v.abs().to_f64();
        let ratio = a / (wn * ((t as f64).ln() + 1.0));
        if ratio > max_ratio {
            max_ratio = ratio;
            arg = t;
        }
        let fl = zeckendorf(t as u128).length as f64;
        excess = excess.max(a - 1.5 * std::f64::consts::PI * wn * fl);
    }
    Ok(PartialSumReport {
        n,
        max_ratio,
        arg_max_ratio: arg,
        k_const: partial_sum_constant(),
        max_length_excess: excess,
        max_split_dev,
        err: series.err,
    })
}

/// Rotation angle for centred fractional-part sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Angle {
    Golden,
    Rational { p: u64, q: u64 },
}

/// `sum_{i=1}^q ({theta + i alpha} - 1/2)` with its error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscrepancySum {
    pub q: u64,
    pub value: Dd,
    pub err: f64,
}

impl DiscrepancySum {
    pub fn within_three_halves(&self) -> bool {
        self.value.abs().to_f64() + self.err < 1.5
    }
}

/// Denominators of the continued-fraction convergents of `p/q`.
pub fn convergent_denominators(p: u64, q: u64) -> Vec<u64> {
    // the integer part does not affect denominators
    let (mut a, mut b) = (q, p % q);
    let (mut k_prev, mut k) = (0u64, 1u64);
    let mut out = vec![1];
    while b != 0 {
        let c = a / b;
        let next = c * k + k_prev;
        k_prev = k;
        k = next;
        out.push(k);
        let r = a % b;
        a = b;
        b = r;
    }
    out.dedup();
    out
}

fn big_to_dd(x: &BigInt, bits: u32) -> Dd {
    let (sign, mag) = x.to_u64_digits();
    let v = limbs_to_dd(&mag, bits);
    if sign == Sign::Minus {
        -v
    } else {
        v
    }
}

pub fn frac_sum_convergent(
    ctx: &GoldenCtx,
    q: u64,
    alpha: Angle,
    theta: &FixedFrac,
) -> Result<DiscrepancySum> {
    check_theta(ctx, theta)?;
    let bits = ctx.bits();
    match alpha {
        Angle::Golden => {
            let is_fib = (1..=crate::fibcore::MAX_U64_INDEX).any(|i| fib_u64(i) == Some(q));
            if q == 0 || !is_fib {
                return Err(Error::NotAConvergent { q });
            }
            ctx.frac_r_omega(q as u128 + 1)?;
            let limbs = bits as usize / 64 + 3;
            let parts = par_map_blocks(1, q + 1, |a, b| -> Result<Vec<u64>> {
                let mut w = ctx.walker_from_phase(theta, a as u128)?;
                let mut acc = vec![0u64; limbs];
                for _ in a..b {
                    w.accumulate(&mut acc);
                    w.advance();
                }
                Ok(acc)
            });
            let mut total = BigUint::zero();
            for p in parts {
                let p = p?;
                total += BigUint::from_slice(
                    &p.iter()
                        .flat_map(|&l| [l as u32, (l >> 32) as u32])
                        .collect::<Vec<_>>(),
                );
            }
            let centred = BigInt::from(total) - (BigInt::from(q) << (bits - 1));
            let ulps = (q as f64 + 1.0) * (q as f64 + 2.0) / 2.0 + q as f64 * theta.err_ulps as f64;
            Ok(DiscrepancySum {
                q,
                value: big_to_dd(&centred, bits),
                err: ulps * ldexp(1.0, -(bits as i64)),
            })
        }
        Angle::Rational { p, q: den } => {
            if den == 0 || p.gcd(&den) != 1 {
                return Err(Error::InvalidArgument(format!(
                    "{p}/{den} is not in lowest terms"
                )));
            }
            if !convergent_denominators(p, den).contains(&q) {
                return Err(Error::NotAConvergent { q });
            }
            // {theta + i p/den} = ((m den + i p 2^P) mod (den 2^P)) / (den 2^P)
            let one = BigUint::one() << bits;
            let modulus = BigUint::from(den) * &one;
            let base = &theta.mantissa * BigUint::from(den);
            let step = BigUint::from(p) * &one;
            let mut cur = base % &modulus;
            let mut total = BigUint::zero();
            for _ in 0..q {
                cur = (cur + &step) % &modulus;
                total += &cur;
            }
            // total / (den 2^P) - q/2, scaled to 2^-P
            let num: BigInt =
                BigInt::from(total) * 2u32 - BigInt::from(q) * BigInt::from(modulus.clone());
            let den2: BigInt = BigInt::from(den) * 2u32;
            let (quot, rem) = num.div_rem(&den2);
            let v = big_to_dd(&quot, bits) + big_to_dd(&rem, bits) / Dd::from_u64(den * 2);
            Ok(DiscrepancySum {
                q,
                value: v,
                err: q as f64 * theta.err() + 4.0 * DD_FN_REL_ERR,
            })
        }
    }
}

/// `sum_{r=1}^{F_n} cot pi r w` against its enclosure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CotSum {
    pub n: u32,
    pub sum: Dd,
    /// `w^n` times the sum.
    pub normalized: f64,
    pub lower: f64,
    pub upper: f64,
    pub err: f64,
}

impl CotSum {
    pub fn within_enclosure(&self) -> bool {
        self.normalized - self.err > self.lower && self.normalized + self.err < self.upper
    }
}

/// Per-term `cot(pi {r w})` values for `r` in `[a, b)`, with the smallest
/// distance to an integer seen.
fn cot_terms(ctx: &GoldenCtx, a: u64, b: u64, squared: bool) -> Result<(Vec<Dd>, f64)> {
    let mut w = ctx.walker(a as u128)?;
    let mut out = Vec::with_capacity((b - a) as usize);
    let mut min_d = f64::INFINITY;
    for _ in a..b {
        let (d, upper) = w.current_dist();
        if d.hi == 0.0 {
            return Err(Error::PrecisionExhausted {
                context: "cotangent argument rounds to an integer".into(),
                err: ctx.frac_err(b as u128),
            });
        }
        min_d = min_d.min(d.hi);
        let c = d.cot_pi();
        out.push(if squared {
            c.sqr()
        } else if upper {
            -c
        } else {
            c
        });
        w.advance();
    }
    Ok((out, min_d))
}

fn cot_err(ctx: &GoldenCtx, terms: u64, min_d: f64, squared: bool) -> Result<f64> {
    let delta = ctx.frac_err(terms as u128);
    if delta >= min_d / 4.0 {
        return Err(Error::PrecisionExhausted {
            context: "cotangent sum".into(),
            err: delta / min_d,
        });
    }
    // d/dx cot(pi x) = -pi / sin^2(pi x), |cot| < 1/(pi d)
    let deriv = 1.0 / (std::f64::consts::PI * min_d * min_d);
    let per = if squared {
        2.0 * deriv / (std::f64::consts::PI * min_d)
    } else {
        deriv
    };
    let mag = if squared {
        1.0 / (std::f64::consts::PI * min_d).powi(2)
    } else {
        1.0 / (std::f64::consts::PI * min_d)
    };
    Ok(terms as f64 * (per * delta + 8.0 * DD_FN_REL_ERR * mag))
}

fn cot_sum_raw(ctx: &GoldenCtx, terms: u64, squared: bool) -> Result<(Dd, f64)> {
    ctx.frac_r_omega(terms as u128 + 1)?;
    let parts = par_map_blocks(1, terms + 1, |a, b| -> Result<(Dd, f64)> {
        let (v, m) = cot_terms(ctx, a, b, squared)?;
        Ok((pairwise_sum(&v), m))
    });
    let mut sums = Vec::new();
    let mut min_d = f64::INFINITY;
    for p in parts {
        let (s, m) = p?;
        sums.push(s);
        min_d = min_d.min(m);
    }
    let err = cot_err(ctx, terms, min_d, squared)?;
    Ok((pairwise_sum(&sums), err))
}

/// Half-width term of the cotangent enclosure: `(1/pi)((1 + w^2n)/sqrt5 + w)`.
pub fn cot_enclosure_wide(n: u32) -> f64 {
    let w2n = OMEGA_F64.powi(2 * n as i32);
    ((1.0 + w2n) / 5f64.sqrt() + OMEGA_F64) / std::f64::consts::PI
}

pub fn cot_sum(ctx: &GoldenCtx, n: u32) -> Result<CotSum> {
    if n < 2 {
        return Err(Error::InvalidArgument("cotangent sum needs n >= 2".into()));
    }
    ctx.check_level(n)?;
    let f = ctx.fib(n);
    let (sum, err) = cot_sum_raw(ctx, f, false)?;
    let wn = ctx.omega_pow_dd(n)?;
    let wide = cot_enclosure_wide(n);
    let narrow = 1.0 / std::f64::consts::PI;
    let (lower, upper) = if n % 2 == 1 {
        (-wide, narrow)
    } else {
        (-narrow, wide)
    };
    Ok(CotSum {
        n,
        sum,
        normalized: (wn * sum).to_f64(),
        lower,
        upper,
        err: err * wn.hi,
    })
}

/// `sum_{r=1}^{F_n} cot^2 pi r w` next to three upper bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cot2Sum {
    pub n: u32,
    pub sum: Dd,
    pub err: f64,
    /// `F_n^2/6 + (1 + w^2)/(pi^2 w^2n)`, as printed at the end of the chain.
    pub printed_bound: f64,
    /// `2 sum_{s=1}^{floor(F_n/2)} (F_n/(pi s))^2 + (pi w^n)^-2 + (pi w^(n-1))^-2`,
    /// the intermediate line of the same chain.
    pub chain_bound: f64,
    /// `F_n^2/3 + (1 + w^2)/(pi^2 w^2n)`, the chain's middle line bounded
    /// with `sum 1/s^2 < pi^2/6`.
    pub corrected_bound: f64,
}

impl Cot2Sum {
    pub fn printed_holds(&self) -> bool {
        self.sum.to_f64() + self.err < self.printed_bound
    }

    pub fn chain_holds(&self) -> bool {
        self.sum.to_f64() + self.err < self.chain_bound
    }

    pub fn corrected_holds(&self) -> bool {
        self.sum.to_f64() + self.err < self.corrected_bound
    }
}

pub fn cot2_sum(ctx: &GoldenCtx, n: u32) -> Result<Cot2Sum> {
    if n < 4 {
        return Err(Error::InvalidArgument("cot^2 sum needs n >= 4".into()));
    }
    ctx.check_level(n)?;
    let f = ctx.fib(n);
    let (sum, err) = cot_sum_raw(ctx, f, true)?;
    let pi = std::f64::consts::PI;
    let ff = f as f64;
    let w = OMEGA_F64;
    let tail = (1.0 + w * w) / (pi * pi * w.powi(2 * n as i32));
    let mut chain = 0.0;
    for s in 1..=(f / 2) {
        chain += (ff / (pi * s as f64)).powi(2);
    }
    chain = 2.0 * chain + (pi * w.powi(n as i32)).powi(-2) + (pi * w.powi(n as i32 - 1)).powi(-2);
    Ok(Cot2Sum {
        n,
        sum,
        err,
        printed_bound: ff * ff / 6.0 + tail,
        chain_bound: chain,
        corrected_bound: ff * ff / 3.0 + tail,
    })
}

/// `(-1)^n sum_{r=1}^k cot pi r w` for `k = 1..F_n - 1`.
pub fn cot_profile(ctx: &GoldenCtx, n: u32) -> Result<Vec<(u64, Dd)>> {
    if n < 3 {
        return Err(Error::InvalidArgument(
            "cotangent profile needs n >= 3".into(),
        ));
    }
    ctx.check_level(n)?;
    let f = ctx.fib(n);
    ctx.frac_r_omega(f as u128)?;
    let parts = par_map_blocks(1, f, |a, b| cot_terms(ctx, a, b, false));
    let sign = if n.is_multiple_of(2) {
        Dd::ONE
    } else {
        -Dd::ONE
    };
    let mut out = Vec::with_capacity(f as usize);
    let mut run = Dd::ZERO;
    let mut k = 1u64;
    let mut min_d = f64::INFINITY;
    for p in parts {
        let (terms, m) = p?;
        min_d = min_d.min(m);
        for c in terms {
            run += c;
            out.push((k, sign * run));
            k += 1;
        }
    }
    cot_err(ctx, f, min_d, false)?;
    Ok(out)
}

/// `S_k = 2 log P_k`.
pub fn birkhoff_s(ctx: &GoldenCtx, k: u64) -> Result<Dd> {
    Ok(sudler_p(ctx, k)?.log_value.mul_f64(2.0))
}

fn half_sine(x: Dd) -> Result<Dd> {
    let s = x.mul_f64(0.5).sin();
    if s.abs().hi < 1e-300 {
        return Err(Error::SingularAngle(format!(
            "x = {} is a multiple of 2 pi",
            x.to_f64()
        )));
    }
    Ok(s)
}

/// `sum_{k=1}^n sin(theta + k x)` in closed form.
pub fn lagrange_sin_sum(theta: Dd, x: Dd, n: u64) -> Result<Dd> {
    let s = half_sine(x)?;
    let nh = Dd::from_u64(n) + Dd::HALF;
    Ok(((theta + x.mul_f64(0.5)).cos() - (theta + nh * x).cos()) / s.mul_f64(2.0))
}

/// `sum_{k=1}^n cos(theta + k x)` in closed form.
pub fn lagrange_cos_sum(theta: Dd, x: Dd, n: u64) -> Result<Dd> {
    let s = half_sine(x)?;
    let nh = Dd::from_u64(n) + Dd::HALF;
    Ok(((theta + nh * x).sin() - (theta + x.mul_f64(0.5)).sin()) / s.mul_f64(2.0))
}

/// `sum_{k=1}^n k sin(theta + k x)` in closed form.
pub fn lagrange_k_sin_sum(theta: Dd, x: Dd, n: u64) -> Result<Dd> {
    let s = half_sine(x)?;
    let nd = Dd::from_u64(n);
    let nh = nd + Dd::HALF;
    let num = (theta + nd * x).sin() - theta.sin() - (nd * (theta + nh * x).cos() * s).mul_f64(2.0);
    Ok(num / s.sqr().mul_f64(4.0))
}

/// Direct sums for the closed forms above: `(sum sin, sum cos, sum k sin)`.
pub fn direct_sums(theta: Dd, x: Dd, n: u64) -> (Dd, Dd, Dd) {
    let mut s = Dd::ZERO;
    let mut c = Dd::ZERO;
    let mut ks = Dd::ZERO;
    for k in 1..=n {
        let a = theta + Dd::from_u64(k) * x;
        let (sk, ck) = (a / Dd::PI).sin_cos_pi();
        s += sk;
        c += ck;
        ks += sk * Dd::from_u64(k);
    }
    (s, c, ks)
}

/// Largest relative deviation seen for one identity.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub cases: u64,
    pub max_rel_dev: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    pub n_max: u64,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.max_rel_dev)
            .fold(0.0, f64::max)
    }

    pub fn all_within(&self, tol: f64) -> bool {
        self.checks.iter().all(|c| c.max_rel_dev <= tol)
    }
}

const IDENTITY_NAMES: [&str; 12] = [
    "sine sum closed form",
    "cosine sum closed form",
    "weighted sine sum closed form",
    "shifted sine product 2 sin(n phi)",
    "cotangent sum n cot(n phi)",
    "cosine product, odd n",
    "cosine product, even n",
    "doubled sine product, odd n",
    "doubled sine product, even n",
    "prod 2 sin(pi r/n) = n",
    "prod 2 sin(2 pi r/n), odd n",
    "prod 2 sin(2 pi r/n), r != n/2, even n",
];

fn rel_dev(lhs: Dd, rhs: Dd, scale: f64) -> f64 {
    (lhs - rhs).abs().to_f64() / rhs.abs().to_f64().max(scale)
}

fn sign(e: u64) -> Dd {
    if e.is_multiple_of(2) {
        Dd::ONE
    } else {
        -Dd::ONE
    }
}

/// Deviations for one `n`, in the order of [`IDENTITY_NAMES`].
fn identities_for(n: u64, samples: usize, rng: &mut ChaCha8Rng) -> [f64; 12] {
    let mut dev = [0.0f64; 12];
    let nd = Dd::from_u64(n);
    for _ in 0..samples {
        // Lagrange sums: theta, x in radians, x away from multiples of 2 pi
        let theta = Dd::from_f64(rng.gen_range(-3.0..3.0));
        let x = loop {
            let x = Dd::from_f64(rng.gen_range(0.01..6.27));
            if x.mul_f64(0.5).sin().abs().hi > 1e-2 {
                break x;
            }
        };
        let (s, c, ks) = direct_sums(theta, x, n);
        let scale = n as f64;
        dev[0] = dev[0].max(rel_dev(lagrange_sin_sum(theta, x, n).unwrap(), s, scale));
        dev[1] = dev[1].max(rel_dev(lagrange_cos_sum(theta, x, n).unwrap(), c, scale));
        dev[2] = dev[2].max(rel_dev(
            lagrange_k_sin_sum(theta, x, n).unwrap(),
            ks,
            scale * scale,
        ));

        // products: phi = pi u, avoiding zeros of either side
        let u = loop {
            let u = Dd::from_f64(rng.gen_range(0.0..1.0));
            let nu = nd * u;
            let far = |v: Dd| (v - v.round()).abs().hi > 1e-3;
            if far(nu)
                && far(nu + Dd::HALF)
                && far(nu.mul_f64(0.5))
                && far(u.mul_f64(n as f64 / 2.0))
            {
                break u;
            }
        };
        let step = Dd::ONE / nd;
        let mut p_sin = Dd::ONE;
        let mut p_cos = Dd::ONE;
        let mut p_dbl = Dd::ONE;
        let mut cots = Dd::ZERO;
        for r in 0..n {
            let a = u + Dd::from_u64(r) * step;
            let (sa, ca) = a.sin_cos_pi();
            p_sin *= sa.mul_f64(2.0);
            p_cos *= ca.mul_f64(2.0);
            cots += ca / sa;
            p_dbl *= (a + Dd::from_u64(r) * step).sin_pi().mul_f64(2.0);
        }
        let (snu, cnu) = (nd * u).sin_cos_pi();
        dev[3] = dev[3].max(rel_dev(p_sin, snu.mul_f64(2.0), 0.0));
        let cot_scale: f64 = (0..n)
            .map(|r| (u + Dd::from_u64(r) * step).cot_pi().abs().to_f64())
            .sum();
        dev[4] = dev[4].max(rel_dev(cots, nd * (cnu / snu), cot_scale));
        if n % 2 == 1 {
            let sg = sign((n - 1) / 2);
            dev[5] = dev[5].max(rel_dev(p_cos, sg * cnu.mul_f64(2.0), 0.0));
            dev[7] = dev[7].max(rel_dev(p_dbl, sg * snu.mul_f64(2.0), 0.0));
        } else {
            let sg = sign(n / 2);
            dev[6] = dev[6].max(rel_dev(p_cos, sg * snu.mul_f64(2.0), 0.0));
            dev[8] = dev[8].max(rel_dev(p_dbl, sg * (Dd::ONE - cnu).mul_f64(2.0), 0.0));
        }
    }

    // limiting evaluations at phi = 0
    let mut p1 = Dd::ONE;
    let mut p2 = Dd::ONE;
    for r in 1..n {
        p1 *= (Dd::from_u64(r) / nd).sin_pi().mul_f64(2.0);
        if 2 * r != n {
            p2 *= (Dd::from_u64(2 * r) / nd).sin_pi().mul_f64(2.0);
        }
    }
    dev[9] = rel_dev(p1, nd, 0.0);
    if n % 2 == 1 {
        dev[10] = rel_dev(p2, sign((n - 1) / 2) * nd, 0.0);
    } else {
        dev[11] = rel_dev(p2, sign(n / 2 - 1) * nd.sqr().mul_f64(0.25), 0.0);
    }
    dev
}

/// Checks every closed-form sum and product for `2 <= n <= n_max` at
/// `samples` random phases per `n`. Deterministic for a given seed.
pub fn identity_suite(n_max: u64, samples: usize, seed: u64) -> Result<IdentityReport> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(
            "identity suite needs n_max >= 2".into(),
        ));
    }
    let rows: Vec<(u64, [f64; 12])> = (2..=n_max)
        .into_par_iter()
        .map(|n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n.wrapping_mul(0x9e37_79b9_7f4a_7c15));
            (n, identities_for(n, samples, &mut rng))
        })
        .collect();
    let mut checks: Vec<IdentityCheck> = IDENTITY_NAMES
        .iter()
        .map(|&name| IdentityCheck {
            name,
            cases: 0,
            max_rel_dev: 0.0,
        })
        .collect();
    for (n, dev) in rows {
        for (i, d) in dev.iter().enumerate() {
            let applies = match i {
                5 | 7 | 10 => n % 2 == 1,
                6 | 8 | 11 => n % 2 == 0,
                _ => true,
            };
            if applies {
                let per_n = if i >= 9 { 1 } else { samples as u64 };
                checks[i].cases += per_n;
                checks[i].max_rel_dev = checks[i].max_rel_dev.max(*d);
            }
        }
    }
    Ok(IdentityReport { n_max, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> GoldenCtx {
        GoldenCtx::new(192, 40).unwrap()
    }

    #[test]
    fn empty_and_single_sums() {
        let c = ctx();
        let z = FixedFrac::zero(192);
        assert_eq!(s_nt(&c, 5, 0, &z).unwrap(), Dd::ZERO);
        let one = s_nt(&c, 5, 1, &z).unwrap().to_f64();
        let expect = (std::f64::consts::PI * OMEGA_F64.powi(5) * (OMEGA_F64 - 0.5)).sin();
        assert!((one - expect).abs() < 1e-16);
    }

    #[test]
    fn split_agrees_with_direct() {
        let c = ctx();
        let z = FixedFrac::zero(192);
        let series = partial_sums(&c, 10, 54, &z).unwrap();
        for t in 1..=55u64 {
            let d = s_nt(&c, 10, t, &z).unwrap();
            let s = s_nt_split(&c, 10, t, &z).unwrap();
            assert!((d - s).abs().hi < 1e-25, "t={t}");
            if t <= 54 {
                assert!((series.values[t as usize - 1] - d).abs().hi < 1e-25);
            }
        }
    }

    #[test]
    fn half_angle_discrepancy() {
        let c = ctx();
        let z = FixedFrac::zero(192);
        let d = frac_sum_convergent(&c, 2, Angle::Rational { p: 1, q: 2 }, &z).unwrap();
        assert_eq!(d.value.to_f64(), -0.5);
        assert!(matches!(
            frac_sum_convergent(&c, 3, Angle::Rational { p: 1, q: 2 }, &z),
            Err(Error::NotAConvergent { q: 3 })
        ));
        assert!(matches!(
            frac_sum_convergent(&c, 4, Angle::Golden, &z),
            Err(Error::NotAConvergent { q: 4 })
        ));
    }

    #[test]
    fn golden_discrepancy_small_q_by_hand() {
        let c = ctx();
        let z = FixedFrac::zero(192);
        let d = frac_sum_convergent(&c, 5, Angle::Golden, &z).unwrap();
        let mut s = 0.0;
        for i in 1..=5 {
            s += (i as f64 * OMEGA_F64).fract() - 0.5;
        }
        assert!((d.value.to_f64() - s).abs() < 1e-14);
        assert!(d.within_three_halves());
    }

    #[test]
    fn convergents_of_fraction() {
        assert_eq!(convergent_denominators(1, 2), vec![1, 2]);
        assert_eq!(convergent_denominators(3, 5), vec![1, 2, 5]);
        assert_eq!(convergent_denominators(8, 13), vec![1, 2, 3, 5, 13]);
    }

    #[test]
    fn cot_sum_single_term() {
        let c = ctx();
        let s = cot_sum(&c, 2).unwrap();
        let e = 1.0 / (std::f64::consts::PI * OMEGA_F64).tan();
        assert!((s.sum.to_f64() - e).abs() < 1e-14);
        assert!(s.within_enclosure());
    }

    #[test]
    fn cot2_n4_term_by_term() {
        let c = ctx();
        let s = cot2_sum(&c, 4).unwrap();
        let mut e = 0.0;
        for r in 1..=3 {
            e += 1.0 / (std::f64::consts::PI * r as f64 * OMEGA_F64).tan().powi(2);
        }
        assert!((s.sum.to_f64() - e).abs() < 1e-12);
        assert!(s.chain_holds() && s.corrected_holds());
    }

    #[test]
    fn cot_profile_matches_total() {
        let c = ctx();
        let n = 9;
        let prof = cot_profile(&c, n).unwrap();
        let total = cot_sum(&c, n).unwrap().sum;
        let f = c.fib(n);
        let last_term = (c.frac_r_omega(f as u128).unwrap().to_dd()).cot_pi();
        let expect = -(total - last_term);
        assert!((prof.last().unwrap().1 - expect).abs().hi < 1e-20);
        assert_eq!(prof.len() as u64, f - 1);
        let first = -(c.omega_dd().cot_pi());
        assert!((prof[0].1 - first).abs().hi < 1e-25);
    }

    #[test]
    fn lagrange_examples() {
        let pi = Dd::PI;
        let v = lagrange_sin_sum(Dd::ZERO, pi.mul_f64(0.5), 2).unwrap();
        assert!((v - Dd::ONE).abs().hi < 1e-30);
        let k = lagrange_k_sin_sum(Dd::ZERO, pi, 1).unwrap();
        assert!(k.abs().hi < 1e-30);
        assert!(matches!(
            lagrange_sin_sum(Dd::ZERO, Dd::ZERO, 3),
            Err(Error::SingularAngle(_))
        ));
    }

    #[test]
    fn identity_suite_small() {
        let r = identity_suite(30, 4, 7).unwrap();
        assert!(r.all_within(1e-25), "{r:?}");
        assert!(r.checks.iter().all(|c| c.cases > 0));
    }
}
