//! Sudler's product `P_k(w) = prod_{r=1}^k |2 sin pi r w|`, its Fibonacci
//! subsequence `Q_n = P_{F_n}`, and the factorisation
//!
//! ```text
//! Q_n = A_n B_n C_n
//! A_n = 2 F_n sin(pi w^n)
//! B_n = prod_{t=1}^{F_n - 1} s_nt / (2 sin(pi t / F_n))
//! C_n = prod_{t=1}^{(F_n - 1)/2} (1 - s_n0^2 / s_nt^2)   (generalised bounds)
//! ```
//!
//! Every product is accumulated in the log domain, block by block.

use num_integer::Integer;

use crate::dd::{pairwise_sum, Dd, ScaledDd, DD_FN_REL_ERR, DD_OP_REL_ERR};
use crate::error::{Error, Result};
use crate::goldenangle::{gen_log_prod, FixedFrac, GoldenCtx, SeqParams};
use crate::parallel::{par_log_product, par_map_blocks, BLOCK};

/// Largest acceptable log error for a reported product.
pub const MAX_LOG_ERR: f64 = 1e-9;

/// `ln` of a product with a bound on the absolute error of the log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductResult {
    pub k: u64,
    pub log_value: Dd,
    pub value: f64,
    pub err: f64,
}

impl ProductResult {
    pub fn from_log(k: u64, log_value: Dd, err: f64) -> Self {
        let value = if log_value.hi == f64::NEG_INFINITY {
            0.0
        } else {
            log_value.exp().to_f64()
        };
        ProductResult {
            k,
            log_value,
            value,
            err,
        }
    }

    pub fn zero(k: u64) -> Self {
        ProductResult {
            k,
            log_value: Dd::NEG_INFINITY,
            value: 0.0,
            err: 0.0,
        }
    }

    pub fn one() -> Self {
        ProductResult::from_log(0, Dd::ZERO, 0.0)
    }

    pub fn log_f64(&self) -> f64 {
        self.log_value.to_f64()
    }

    fn checked(self, context: impl FnOnce() -> String) -> Result<Self> {
        if !(self.err <= MAX_LOG_ERR) {
            return Err(Error::PrecisionExhausted {
                context: context(),
                err: self.err,
            });
        }
        Ok(self)
    }
}

/// A derived real quantity with its log and error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub log_value: Dd,
    pub value: f64,
    pub err: f64,
}

/// Raw output of a block-parallel pass over `|2 sin pi {theta + r w}|`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct WalkOut {
    pub log: Dd,
    pub min_d: f64,
    pub zero: bool,
    /// Absolute error of every fixed-point argument.
    pub delta: f64,
}

impl WalkOut {
    /// Log error: argument error propagated through `ln sin` plus rounding.
    pub fn err(&self, terms: u64, blocks: u64) -> f64 {
        if terms == 0 {
            return 0.0;
        }
        let arg = if self.min_d > 0.0 {
            terms as f64 * self.delta / self.min_d
        } else {
            f64::INFINITY
        };
        let round = terms as f64 * (4.0 * DD_FN_REL_ERR + 2.0 * DD_OP_REL_ERR)
            + blocks as f64 * DD_FN_REL_ERR * (self.log.hi.abs() + 1.0);
        arg + round
    }
}

/// `sum_{r in [start, end)} ln |2 sin pi {theta + r w}|`.
pub(crate) fn rotation_log_sum(
    ctx: &GoldenCtx,
    phase: Option<&FixedFrac>,
    start: u64,
    end: u64,
) -> Result<WalkOut> {
    let theta_ulps = phase.map_or(0, |p| p.err_ulps);
    // budget check on the largest index
    let top = ctx.frac_r_omega(end.max(1) as u128)?;
    let delta = (top.err_ulps + theta_ulps) as f64 * crate::dd::ldexp(1.0, -(ctx.bits() as i64));
    let parts = par_map_blocks(start, end, |a, b| -> Result<(Dd, f64, bool)> {
        let mut w = match phase {
            Some(p) => ctx.walker_from_phase(p, a as u128)?,
            None => ctx.walker(a as u128)?,
        };
        let mut prod = ScaledDd::ONE;
        let mut min_d = f64::INFINITY;
        let mut zero = false;
        for _ in a..b {
            let (d, _) = w.current_dist();
            if d.hi == 0.0 {
                zero = true;
            }
            min_d = min_d.min(d.hi);
            prod.mul_dd(d.sin_pi().mul_f64(2.0));
            w.advance();
        }
        Ok((if zero { Dd::ZERO } else { prod.ln_abs() }, min_d, zero))
    });
    let mut logs = Vec::with_capacity(parts.len());
    let mut min_d = f64::INFINITY;
    let mut zero = false;
    for p in parts {
        let (l, m, z) = p?;
        logs.push(l);
        min_d = min_d.min(m);
        zero |= z;
    }
    Ok(WalkOut {
        log: if zero {
            Dd::NEG_INFINITY
        } else {
            pairwise_sum(&logs)
        },
        min_d,
        zero,
        delta,
    })
}

fn block_count(terms: u64) -> u64 {
    terms.div_ceil(BLOCK)
}

/// `prod_{r in [start, end)} |2 sin pi (theta + r w)|` with error bound.
pub fn phase_product(
    ctx: &GoldenCtx,
    theta: Option<&FixedFrac>,
    start: u64,
    end: u64,
) -> Result<ProductResult> {
    let terms = end.saturating_sub(start);
    if terms == 0 {
        return Ok(ProductResult::one());
    }
    let out = rotation_log_sum(ctx, theta, start, end)?;
    if out.zero || out.delta >= out.min_d / 2.0 {
        return Err(Error::PrecisionExhausted {
            context: format!("sine product over [{start}, {end}) passes within rounding of a zero"),
            err: out.delta,
        });
    }
    ProductResult::from_log(terms, out.log, out.err(terms, block_count(terms)))
        .checked(|| format!("sine product over [{start}, {end})"))
}

/// `P_k(w)`.
pub fn sudler_p(ctx: &GoldenCtx, k: u64) -> Result<ProductResult> {
    let mut r = phase_product(ctx, None, 1, k + 1)?;
    r.k = k;
    Ok(r)
}

/// `P_n(p/q)` from exact residues `r p mod q`; zero once `n >= q`.
pub fn sudler_p_rational(p: i64, q: u64, n: u64) -> Result<ProductResult> {
    if q == 0 || p <= 0 || p as u64 >= q {
        return Err(Error::InvalidArgument(format!(
            "need 0 < p < q, got p = {p}, q = {q}"
        )));
    }
    if (p as u64).gcd(&q) != 1 {
        return Err(Error::NotLowestTerms { p, q });
    }
    if n >= q {
        return Ok(ProductResult::zero(n));
    }
    let qd = Dd::from_u64(q);
    let pm = p as u64;
    let log = par_log_product(1, n + 1, |r| {
        let res = ((r as u128 * pm as u128) % q as u128) as u64;
        let m = res.min(q - res);
        (Dd::from_u64(m) / qd).sin_pi().mul_f64(2.0)
    });
    let err = n as f64 * (4.0 * DD_FN_REL_ERR + 2.0 * DD_OP_REL_ERR)
        + block_count(n) as f64 * DD_FN_REL_ERR * (log.hi.abs() + 1.0);
    Ok(ProductResult::from_log(n, log, err))
}

/// `Q_n = P_{F_n}`.
pub fn q_n(ctx: &GoldenCtx, n: u32) -> Result<ProductResult> {
    ctx.check_level(n)?;
    sudler_p(ctx, ctx.fib(n))
}

fn power_err(ctx: &GoldenCtx, n: u32) -> f64 {
    // one ulp of w^n relative to w^n
    crate::dd::ldexp(1.0, -(ctx.bits() as i64)) / crate::goldenangle::OMEGA_F64.powi(n as i32)
}

/// `A_n = 2 F_n sin(pi w^n)`.
pub fn a_n(ctx: &GoldenCtx, n: u32) -> Result<ProductResult> {
    ctx.check_level(n)?;
    let p = SeqParams::new(ctx, n)?;
    let v = (p.wn.sin_pi() * Dd::from_u64(p.f)).mul_f64(2.0);
    Ok(ProductResult::from_log(
        1,
        v.ln(),
        power_err(ctx, n) + 4.0 * DD_FN_REL_ERR,
    ))
}

fn seq_err(ctx: &GoldenCtx, p: &SeqParams, terms: u64) -> f64 {
    // each sine argument carries ~2^-104 absolute error and a w^n error of
    // one ulp, both amplified by at most F_n / 2 (the smallest argument is
    // of order 1/F_n)
    let abs_arg = 16.0 * DD_OP_REL_ERR + power_err(ctx, p.n) * p.wn.hi;
    terms as f64 * (abs_arg * p.f as f64 * 4.0 + 4.0 * DD_FN_REL_ERR)
        + block_count(terms) as f64 * DD_FN_REL_ERR
}

/// `B_n`, empty (`= 1`) while `F_n <= 1`.
pub fn b_n(ctx: &GoldenCtx, n: u32) -> Result<ProductResult> {
    ctx.check_level(n)?;
    let p = SeqParams::new(ctx, n)?;
    if p.f <= 1 {
        return Ok(ProductResult::one());
    }
    let terms = p.f - 1;
    let log = par_log_product(1, p.f, |t| {
        let t = t as i64;
        p.s(t) / p.rational_sine(t)
    });
    ProductResult::from_log(terms, log, seq_err(ctx, &p, terms)).checked(|| format!("B_{n}"))
}

/// `B*_n = prod_{t=1}^{F_n - 1} (1 - h_nt)`.
pub fn b_star(ctx: &GoldenCtx, n: u32) -> Result<ProductResult> {
    ctx.check_level(n)?;
    let p = SeqParams::new(ctx, n)?;
    if p.f <= 1 {
        return Ok(ProductResult::one());
    }
    let terms = p.f - 1;
    let log = par_log_product(1, p.f, |t| {
        Dd::ONE - p.h(t as i64).expect("t is not a multiple of F_n")
    });
    ProductResult::from_log(terms, log, seq_err(ctx, &p, terms)).checked(|| format!("B*_{n}"))
}

/// `C_n` as the generalised product over `1 <= t <= (F_n - 1)/2`. For even
/// `F_n` the self-paired middle term `t = F_n / 2` carries exponent 1/2.
pub fn c_n(ctx: &GoldenCtx, n: u32) -> Result<ProductResult> {
    ctx.check_level(n)?;
    let p = SeqParams::new(ctx, n)?;
    if p.f <= 1 {
        return Ok(ProductResult::one());
    }
    let s0sq = p.s0().sqr();
    let upper = (p.f as f64 - 1.0) / 2.0;
    let log = gen_log_prod(|t| Dd::ONE - s0sq / p.s(t).sqr(), 1.0, upper)?;
    let terms = p.f / 2;
    ProductResult::from_log(terms, log, 4.0 * seq_err(ctx, &p, terms)).checked(|| format!("C_{n}"))
}

/// Truncation of the limiting product for `C_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CLimit {
    pub terms: u64,
    /// `prod_{t <= T} (1 - 1/u_t^2)`, `u_t = 2 sqrt5 t - 2({t w} - 1/2)`
    pub log_value: Dd,
    pub value: f64,
    /// Square of the same product.
    pub squared: f64,
    /// `1/u_1^2`
    pub first_inverse_square: f64,
    /// Every factor lies in `(0, 1)`, so partial products decrease.
    pub factors_in_unit_interval: bool,
    pub err: f64,
}

impl CLimit {
    /// Literature value for the limit, used only for comparison.
    pub const QUOTED: f64 = 0.928;

    /// Which of the two forms is closer to the quoted value.
    pub fn closer_form(&self) -> &'static str {
        if (self.value - Self::QUOTED).abs() <= (self.squared - Self::QUOTED).abs() {
            "unsquared"
        } else {
            "squared"
        }
    }
}

pub fn c_infinity_trunc(ctx: &GoldenCtx, terms: u64) -> Result<CLimit> {
    if terms == 0 {
        return Err(Error::InvalidArgument("need at least one term".into()));
    }
    let two_sqrt5 = Dd::from_f64(20.0).sqrt();
    ctx.frac_r_omega(terms as u128)?;
    let parts = par_map_blocks(1, terms + 1, |a, b| -> Result<(Dd, bool)> {
        let mut w = ctx.walker(a as u128)?;
        let mut prod = ScaledDd::ONE;
        let mut ok = true;
        for t in a..b {
            let xi = w.current_dd() - Dd::HALF;
            let u = two_sqrt5 * Dd::from_u64(t) - xi.mul_f64(2.0);
            let f = Dd::ONE - u.sqr().recip();
            ok &= f.hi > 0.0 && f.hi < 1.0;
            prod.mul_dd(f);
            w.advance();
        }
        Ok((prod.ln_abs(), ok))
    });
    let mut logs = Vec::new();
    let mut ok = true;
    for p in parts {
        let (l, o) = p?;
        logs.push(l);
        ok &= o;
    }
    let log = pairwise_sum(&logs);
    let u1 = two_sqrt5 - (ctx.xi_inf(1)?).mul_f64(2.0);
    let value = log.exp().to_f64();
    Ok(CLimit {
        terms,
        log_value: log,
        value,
        squared: log.mul_f64(2.0).exp().to_f64(),
        first_inverse_square: u1.sqr().recip().to_f64(),
        factors_in_unit_interval: ok,
        err: terms as f64 * 8.0 * DD_FN_REL_ERR + ctx.frac_err(terms as u128),
    })
}

/// `Q_n` next to `A_n B_n C_n`, each from its own code path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decomposition {
    pub n: u32,
    pub a: ProductResult,
    pub b: ProductResult,
    pub c: ProductResult,
    pub q: ProductResult,
    /// `Q - A B C`
    pub residual: f64,
    /// `Q / (A B C) - 1`
    pub rel_residual: f64,
    /// Combined log error of the four factors.
    pub err: f64,
}

pub fn decompose(ctx: &GoldenCtx, n: u32) -> Result<Decomposition> {
    let q = q_n(ctx, n)?;
    let a = a_n(ctx, n)?;
    let b = b_n(ctx, n)?;
    let c = c_n(ctx, n)?;
    let diff = q.log_value - a.log_value - b.log_value - c.log_value;
    let rel = diff.exp_m1().to_f64();
    Ok(Decomposition {
        n,
        a,
        b,
        c,
        q,
        residual: rel * (a.log_value + b.log_value + c.log_value).exp().to_f64(),
        rel_residual: rel,
        err: q.err + a.err + b.err + c.err,
    })
}

/// `P_{F_n - 1} / F_n`, computed directly (not as `Q_n / A_n`).
pub fn ratio_pfn_minus1(ctx: &GoldenCtx, n: u32) -> Result<Estimate> {
    if n < 2 {
        return Err(Error::InvalidArgument("ratio needs n >= 2".into()));
    }
    ctx.check_level(n)?;
    let f = ctx.fib(n);
    let p = sudler_p(ctx, f - 1)?;
    let log = p.log_value - Dd::from_u64(f).ln();
    Ok(Estimate {
        log_value: log,
        value: log.exp().to_f64(),
        err: p.err + DD_FN_REL_ERR,
    })
}

/// Visits `ln P_k` for `k = first, first + stride, ...` up to `k_max` in one
/// pass, in increasing `k`. Returns the log error bound of the last value.
pub fn prefix_logs<F: FnMut(u64, Dd)>(
    ctx: &GoldenCtx,
    first: u64,
    k_max: u64,
    stride: u64,
    mut emit: F,
) -> Result<f64> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    if first == 0 || first > k_max {
        return Ok(0.0);
    }
    ctx.frac_r_omega(k_max as u128 + 1)?;
    let delta = ctx.frac_err(k_max as u128);
    const CHUNK: u64 = 64 * BLOCK;
    let wanted = |k: u64| k >= first && (k - first).is_multiple_of(stride);
    let mut prefix = ScaledDd::ONE;
    let mut min_d = f64::INFINITY;
    let mut start = 1u64;
    while start <= k_max {
        let end = (start + CHUNK).min(k_max + 1);
        let parts = par_map_blocks(start, end, |a, b| -> Result<_> {
            let mut w = ctx.walker(a as u128)?;
            let mut prod = ScaledDd::ONE;
            let mut marks = Vec::new();
            let mut md = f64::INFINITY;
            for k in a..b {
                let (d, _) = w.current_dist();
                md = md.min(d.hi);
                prod.mul_dd(d.sin_pi().mul_f64(2.0));
                if wanted(k) {
                    marks.push((k, prod));
                }
                w.advance();
            }
            Ok((prod, marks, md))
        });
        for part in parts {
            let (total, marks, md) = part?;
            min_d = min_d.min(md);
            for (k, partial) in marks {
                let mut v = prefix;
                v.mul(partial);
                emit(k, v.ln_abs());
            }
            prefix.mul(total);
        }
        start = end;
    }
    if delta >= min_d / 2.0 {
        return Err(Error::PrecisionExhausted {
            context: format!("prefix products up to k = {k_max}"),
            err: delta,
        });
    }
    let err = k_max as f64 * (delta / min_d + 6.0 * DD_FN_REL_ERR);
    if err > MAX_LOG_ERR {
        return Err(Error::PrecisionExhausted {
            context: format!("prefix products up to k = {k_max}"),
            err,
        });
    }
    Ok(err)
}

/// One sample of the product profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfilePoint {
    pub k: u64,
    pub p: f64,
    pub log_p: f64,
}

/// `P_k` for `k = 1, 1 + stride, ...` up to `F_{n_max}`.
pub fn profile(ctx: &GoldenCtx, n_max: u32, stride: u64) -> Result<Vec<ProfilePoint>> {
    ctx.check_level(n_max)?;
    let mut out = Vec::new();
    prefix_logs(ctx, 1, ctx.fib(n_max), stride, |k, l| {
        out.push(ProfilePoint {
            k,
            p: l.exp().to_f64(),
            log_p: l.to_f64(),
        })
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goldenangle::OMEGA_F64;
    use std::f64::consts::PI;

    fn ctx() -> GoldenCtx {
        GoldenCtx::new(192, 40).unwrap()
    }

    #[test]
    fn small_products() {
        let c = ctx();
        let p0 = sudler_p(&c, 0).unwrap();
        assert_eq!(p0.value, 1.0);
        let p1 = sudler_p(&c, 1).unwrap();
        assert!((p1.value - 2.0 * (PI * OMEGA_F64).sin()).abs() < 1e-15);
        // brute force in f64 for a short product
        let mut b = 1.0;
        for r in 1..=50 {
            b *= (2.0 * (PI * r as f64 * OMEGA_F64).sin()).abs();
        }
        let p = sudler_p(&c, 50).unwrap();
        assert!((p.value / b - 1.0).abs() < 1e-11);
    }

    #[test]
    fn rational_examples() {
        assert!((sudler_p_rational(1, 5, 4).unwrap().value - 5.0).abs() < 1e-12);
        assert_eq!(sudler_p_rational(1, 5, 5).unwrap().value, 0.0);
        assert!((sudler_p_rational(1, 2, 1).unwrap().value - 2.0).abs() < 1e-15);
        assert_eq!(
            sudler_p_rational(2, 4, 1).unwrap_err(),
            Error::NotLowestTerms { p: 2, q: 4 }
        );
    }

    #[test]
    fn empty_factors_at_low_levels() {
        let c = ctx();
        for n in [1, 2] {
            assert_eq!(b_n(&c, n).unwrap().value, 1.0);
            assert_eq!(c_n(&c, n).unwrap().value, 1.0);
        }
        let d = decompose(&c, 1).unwrap();
        assert!(d.rel_residual.abs() < 1e-28);
    }

    #[test]
    fn decomposition_small_levels() {
        let c = ctx();
        for n in 1..=16 {
            let d = decompose(&c, n).unwrap();
            assert!(d.rel_residual.abs() < 1e-20, "n={n}: {}", d.rel_residual);
            if n >= 3 {
                assert!(d.c.value > 0.0 && d.c.value < 1.0);
            }
        }
    }

    #[test]
    fn ratio_identity() {
        let c = ctx();
        for n in 2..=15 {
            let r = ratio_pfn_minus1(&c, n).unwrap();
            let q = q_n(&c, n).unwrap();
            let a = a_n(&c, n).unwrap();
            let lhs = r.log_value + a.log_value;
            assert!((lhs - q.log_value).abs().hi < 1e-20);
        }
        assert_eq!(ratio_pfn_minus1(&c, 2).unwrap().value, 1.0);
    }

    #[test]
    fn profile_hits_fibonacci_values() {
        let c = ctx();
        let prof = profile(&c, 12, 1).unwrap();
        assert_eq!(prof.len() as u64, c.fib(12));
        for n in 2..=12 {
            let k = c.fib(n);
            let q = q_n(&c, n).unwrap();
            assert!((prof[k as usize - 1].log_p - q.log_f64()).abs() < 1e-13);
        }
        let strided = profile(&c, 12, 7).unwrap();
        assert_eq!(strided[1].k, 8);
        assert_eq!(strided[1].log_p, prof[7].log_p);
    }

    #[test]
    fn climit_small() {
        let c = ctx();
        let l = c_infinity_trunc(&c, 1000).unwrap();
        assert!(l.factors_in_unit_interval);
        assert!(l.value > 0.862 && l.value < 1.0);
        assert!(l.first_inverse_square < 0.056);
    }
}
