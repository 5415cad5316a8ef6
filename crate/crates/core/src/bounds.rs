//! Inequality checks, perturbed products `prod_{r=1}^{F_n} |2 sin pi (r w + a)|`,
//! the Zeckendorf split of `P_k`, and the power-law scan of `ln P_k / ln k`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dd::{ldexp, pairwise_sum, Dd, DD_FN_REL_ERR};
use crate::error::{Error, Result};
use crate::fibcore::{fib_u64, zeckendorf};
use crate::goldenangle::{FixedFrac, GoldenCtx, OMEGA_F64};
use crate::parallel::par_map_blocks;
use crate::sudler::{phase_product, prefix_logs, q_n, sudler_p, ProductResult};

/// Outcome of a strict two-sided inequality scan.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub points: u64,
    pub violations: u64,
    /// Smallest gap on the lower side.
    pub min_lower_gap: f64,
    /// Smallest gap on the upper side.
    pub min_upper_gap: f64,
}

impl InequalityReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// `2x/pi < sin x < x` on a midpoint grid of `(0, pi/2)`, at `x = 1e-6`,
/// and at `samples` random points.
pub fn convex_sine_check(samples: u64, seed: u64) -> InequalityReport {
    let half_pi = Dd::PI.mul_f64(0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<Dd> = (0..samples)
        .map(|i| half_pi * Dd::from_f64((i as f64 + 0.5) / samples as f64))
        .collect();
    xs.push(Dd::from_f64(1e-6));
    for _ in 0..samples {
        let u: f64 = rng.gen_range(0.0..1.0);
        if u > 0.0 {
            xs.push(half_pi * Dd::from_f64(u));
        }
    }
    let two_over_pi = Dd::from_f64(2.0) / Dd::PI;
    let mut r = InequalityReport {
        points: xs.len() as u64,
        violations: 0,
        min_lower_gap: f64::INFINITY,
        min_upper_gap: f64::INFINITY,
    };
    for x in xs {
        let s = x.sin();
        let lo = (s - two_over_pi * x).to_f64();
        let hi = (x - s).to_f64();
        if !(lo > 0.0 && hi > 0.0) {
            r.violations += 1;
        }
        r.min_lower_gap = r.min_lower_gap.min(lo);
        r.min_upper_gap = r.min_upper_gap.min(hi);
    }
    r
}

/// `1 - A < prod (1 + a_t) < 1/(1 - A)` for one sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProdBoundsReport {
    pub a_sum: f64,
    pub product: f64,
    pub lower: f64,
    pub upper: f64,
    /// `A = 0`: the bounds collapse to equalities and strictness is not checked.
    pub degenerate: bool,
    /// Exactly one non-zero term and it is negative: the lower bound is
    /// attained, so only `<=` can hold there.
    pub lower_attained: bool,
    pub holds: bool,
}

pub fn prod_bounds_check(a: &[f64]) -> Result<ProdBoundsReport> {
    if let Some(x) = a.iter().find(|x| !(x.abs() < 1.0)) {
        return Err(Error::PreconditionViolated(format!(
            "term {x} has |a_t| >= 1"
        )));
    }
    let big_a = a.iter().fold(Dd::ZERO, |s, x| s + Dd::from_f64(x.abs()));
    if !(big_a.hi < 1.0) {
        return Err(Error::PreconditionViolated(format!(
            "sum of |a_t| is {} >= 1",
            big_a.to_f64()
        )));
    }
    let prod = a
        .iter()
        .fold(Dd::ONE, |p, x| p * (Dd::ONE + Dd::from_f64(*x)));
    let lower = Dd::ONE - big_a;
    let upper = lower.recip();
    let nonzero: Vec<f64> = a.iter().copied().filter(|x| *x != 0.0).collect();
    let degenerate = nonzero.is_empty();
    let lower_attained = nonzero.len() == 1 && nonzero[0] < 0.0;
    let holds = degenerate
        || ((if lower_attained {
            (prod - lower).hi >= 0.0
        } else {
            (prod - lower).hi > 0.0
        }) && (upper - prod).hi > 0.0);
    Ok(ProdBoundsReport {
        a_sum: big_a.to_f64(),
        product: prod.to_f64(),
        lower: lower.to_f64(),
        upper: upper.to_f64(),
        degenerate,
        lower_attained,
        holds,
    })
}

/// Random admissible sequences for [`prod_bounds_check`].
pub fn random_admissible(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<f64> {
    let len = rng.gen_range(2..=max_len.max(2));
    let budget: f64 = rng.gen_range(0.01..0.999);
    let w: Vec<f64> = (0..len).map(|_| rng.gen_range(0.001..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter()
        .map(|x| {
            let v = x / total * budget;
            if rng.gen_bool(0.5) {
                v
            } else {
                -v
            }
        })
        .collect()
}

/// `ln(1 + x) >= x - x^2` for `x > -0.683`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLowerReport {
    pub points: u64,
    pub violations: u64,
    /// Bracket of the root of `ln(1 + x) - x + x^2` in `(-1, -1/2)`.
    pub root_lo: f64,
    pub root_hi: f64,
    pub f_at_zero: f64,
    pub f_at_minus_half: f64,
}

impl LogLowerReport {
    pub fn root_below_threshold(&self) -> bool {
        self.root_hi < -0.683
    }

    pub fn holds(&self) -> bool {
        self.violations == 0 && self.root_below_threshold()
    }
}

fn log_gap(x: Dd) -> Dd {
    x.ln_1p() - x + x.sqr()
}

pub fn log_lower_check(grid: u64) -> LogLowerReport {
    let lo = -0.683;
    let hi = 10.0;
    let mut violations = 0;
    for i in 1..=grid {
        let x = Dd::from_f64(lo + (hi - lo) * i as f64 / grid as f64);
        let g = log_gap(x);
        // equality only at 0
        if g.hi < 0.0 || (g.hi == 0.0 && x.hi != 0.0) {
            violations += 1;
        }
    }
    let (mut a, mut b) = (Dd::from_f64(-0.99), Dd::from_f64(-0.5));
    while (b - a).hi > 1e-12 {
        let m = (a + b).mul_f64(0.5);
        if log_gap(m).hi < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    LogLowerReport {
        points: grid,
        violations,
        root_lo: a.to_f64(),
        root_hi: b.to_f64(),
        f_at_zero: log_gap(Dd::ZERO).to_f64(),
        f_at_minus_half: log_gap(Dd::from_f64(-0.5)).to_f64(),
    }
}

/// A signed perturbation `a`, held both as its residue mod 1 (for the
/// rotation) and as a signed double-double.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedPhase {
    pub phase: FixedFrac,
    pub value: Dd,
}

impl SignedPhase {
    pub fn zero(bits: u32) -> Self {
        SignedPhase {
            phase: FixedFrac::zero(bits),
            value: Dd::ZERO,
        }
    }

    pub fn from_rational(q: &BigRational, bits: u32) -> Result<Self> {
        let phase = FixedFrac::from_ratio(q.numer(), &q.denom().to_biguint().unwrap(), bits)?;
        // signed value from the rounded residue plus the integer part
        let floor = q.floor().to_integer();
        let v = phase.to_dd() + big_int_dd(&floor);
        Ok(SignedPhase { phase, value: v })
    }

    pub fn parse(s: &str, bits: u32) -> Result<Self> {
        let q = crate::goldenangle::parse_decimal_rational(s)?;
        Self::from_rational(&q, bits)
    }

    /// `+- w^k` from the context's power cache.
    pub fn omega_power(ctx: &GoldenCtx, k: u32, negative: bool) -> Result<Self> {
        let p = ctx.omega_pow(k)?.clone();
        let v = ctx.omega_pow_dd(k)?;
        if negative {
            let one = BigUint::one() << ctx.bits();
            Ok(SignedPhase {
                phase: FixedFrac {
                    mantissa: one - &p.mantissa,
                    bits: p.bits,
                    err_ulps: p.err_ulps,
                },
                value: -v,
            })
        } else {
            Ok(SignedPhase { phase: p, value: v })
        }
    }

    /// `t w^k` for `t` in `[-1, 1]`, rounded to the context precision.
    pub fn scaled_omega_power(ctx: &GoldenCtx, k: u32, t: f64) -> Result<Self> {
        let p = ctx.omega_pow(k)?;
        // t as an exact dyadic rational
        let scale = 1u64 << 52;
        let num = (t * scale as f64).round() as i64;
        let m = BigInt::from(p.mantissa.clone()) * BigInt::from(num);
        let den = BigUint::from(scale) << ctx.bits();
        let q = BigRational::new(m, BigInt::from(den));
        Self::from_rational(&q, ctx.bits())
    }
}

fn big_int_dd(x: &BigInt) -> Dd {
    let s = x.to_string();
    let v: f64 = s.parse().unwrap_or(0.0);
    let hi = Dd::from_f64(v);
    // integer parts here are tiny; the correction keeps exactness when they are not
    let rest = x - BigInt::from(v as i64);
    if rest.is_zero() {
        hi
    } else {
        hi + Dd::from_f64(rest.to_string().parse().unwrap_or(0.0))
    }
}

/// Perturbed product at level `n` in two forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbedProduct {
    pub n: u32,
    pub alpha: f64,
    /// `prod_{r=1}^{F_n} |2 sin pi (r w + a)|` evaluated directly.
    pub direct: ProductResult,
    /// `Q_n`
    pub base: ProductResult,
    /// `ln Q_n + sum ln |cos pi a + cot pi r w sin pi a|`
    pub factored_log: Dd,
    /// `direct / Q_n`
    pub ratio: f64,
    /// `|ln direct - factored_log|`
    pub agreement: f64,
}

/// `e^{w (1/sqrt5 + w)}`, the explicit upper constant for `direct / Q_n`.
pub fn perturbed_upper_constant() -> f64 {
    (OMEGA_F64 * (1.0 / 5f64.sqrt() + OMEGA_F64)).exp()
}

fn correction_log(ctx: &GoldenCtx, n: u32, alpha: Dd) -> Result<Dd> {
    let f = ctx.fib(n);
    let (sa, ca) = (alpha).sin_cos_pi();
    ctx.frac_r_omega(f as u128 + 1)?;
    let parts = par_map_blocks(1, f + 1, |a, b| -> Result<Dd> {
        let mut w = ctx.walker(a as u128)?;
        let mut p = crate::dd::ScaledDd::ONE;
        for _ in a..b {
            let (d, upper) = w.current_dist();
            let c = if upper { -d.cot_pi() } else { d.cot_pi() };
            p.mul_dd(ca + c * sa);
            w.advance();
        }
        Ok(p.ln_abs())
    });
    let logs: Result<Vec<Dd>> = parts.into_iter().collect();
    Ok(pairwise_sum(&logs?))
}

/// Requires `n >= 2` and `|a| <= w^{n+1}`.
pub fn perturbed_product(ctx: &GoldenCtx, n: u32, alpha: &SignedPhase) -> Result<PerturbedProduct> {
    if n < 2 {
        return Err(Error::PreconditionViolated(
            "the perturbed product is only bounded for n >= 2".into(),
        ));
    }
    ctx.check_level(n + 1)?;
    let limit = ctx.omega_pow_dd(n + 1)?;
    let slack = ldexp(2.0, -(ctx.bits() as i64));
    if alpha.value.abs().to_f64() > limit.to_f64() + slack {
        return Err(Error::OutOfRange {
            alpha: format!("{}", alpha.value.to_f64()),
            limit: limit.to_f64(),
        });
    }
    let f = ctx.fib(n);
    let direct = phase_product(ctx, Some(&alpha.phase), 1, f + 1)?;
    let base = q_n(ctx, n)?;
    let factored_log = base.log_value + correction_log(ctx, n, alpha.value)?;
    Ok(PerturbedProduct {
        n,
        alpha: alpha.value.to_f64(),
        direct,
        base,
        factored_log,
        ratio: (direct.log_value - base.log_value).exp().to_f64(),
        agreement: (direct.log_value - factored_log).abs().to_f64(),
    })
}

/// The `n = 1`, `a = w^2` case, where the single factor is `|2 sin pi|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CounterExample {
    pub alpha: f64,
    /// Upper bound on the product, from the fixed-point residue of `w + w^2`.
    pub value_bound: f64,
    /// `w + w^2` rounds to within a few ulps of 1.
    pub sum_is_one: bool,
}

pub fn perturbed_counterexample(ctx: &GoldenCtx) -> Result<CounterExample> {
    let w = ctx.omega();
    let w2 = ctx.omega_pow(2)?;
    let one = BigInt::one() << ctx.bits();
    let diff = BigInt::from(w.mantissa.clone()) + BigInt::from(w2.mantissa.clone()) - one;
    let ulps = diff.abs() + BigInt::from(w.err_ulps + w2.err_ulps);
    let d: f64 = ulps.to_string().parse().unwrap_or(f64::INFINITY);
    let dist = d * ldexp(1.0, -(ctx.bits() as i64));
    Ok(CounterExample {
        alpha: OMEGA_F64 * OMEGA_F64,
        value_bound: 2.0 * std::f64::consts::PI * dist,
        sum_is_one: diff.abs() <= BigInt::from(4),
    })
}

/// Extremes of `direct / Q_n` over the endpoints `a = +-w^{n+1}` and
/// `interior` random points between them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbedScan {
    pub cases: u64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub max_agreement: f64,
    pub upper_constant: f64,
}

impl PerturbedScan {
    /// Empirical `L` with `direct / Q_n >= e^{-L}`.
    pub fn lower_constant(&self) -> f64 {
        -self.min_ratio.ln()
    }
}

pub fn perturbed_scan(
    ctx: &GoldenCtx,
    levels: std::ops::RangeInclusive<u32>,
    interior: usize,
    seed: u64,
) -> Result<PerturbedScan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = PerturbedScan {
        cases: 0,
        min_ratio: f64::INFINITY,
        max_ratio: 0.0,
        min_value: f64::INFINITY,
        max_value: 0.0,
        max_agreement: 0.0,
        upper_constant: perturbed_upper_constant(),
    };
    for n in levels {
        let mut alphas = vec![
            SignedPhase::omega_power(ctx, n + 1, false)?,
            SignedPhase::omega_power(ctx, n + 1, true)?,
            SignedPhase::zero(ctx.bits()),
        ];
        for _ in 0..interior {
            alphas.push(SignedPhase::scaled_omega_power(
                ctx,
                n + 1,
                rng.gen_range(-1.0..1.0),
            )?);
        }
        for a in &alphas {
            let p = perturbed_product(ctx, n, a)?;
            s.cases += 1;
            s.min_ratio = s.min_ratio.min(p.ratio);
            s.max_ratio = s.max_ratio.max(p.ratio);
            s.min_value = s.min_value.min(p.direct.value);
            s.max_value = s.max_value.max(p.direct.value);
            s.max_agreement = s.max_agreement.max(p.agreement);
        }
    }
    Ok(s)
}

/// One factor of the Zeckendorf split of `P_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub s: u32,
    /// `k_s = sum_{u > s} b_u F_u`
    pub offset: u64,
    /// Representative of `k_s w` mod 1 in `[-1/2, 1/2)`.
    pub alpha: f64,
    /// `w^{s+1}`
    pub alpha_limit: f64,
    pub factor: ProductResult,
}

impl Segment {
    pub fn alpha_within_limit(&self) -> bool {
        self.alpha.abs() < self.alpha_limit
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitReport {
    pub k: u64,
    pub direct: ProductResult,
    pub segments: Vec<Segment>,
    pub split_log: Dd,
    /// `|split / direct - 1|`
    pub rel_dev: f64,
}

pub fn split_product(ctx: &GoldenCtx, k: u64) -> Result<SplitReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("split needs k >= 1".into()));
    }
    let direct = sudler_p(ctx, k)?;
    let z = zeckendorf(k as u128);
    let mut segments = Vec::new();
    let mut logs = Vec::new();
    for s in z.indices() {
        let offset = z.offset_above(s) as u64;
        let phase = ctx.frac_r_omega(offset as u128)?;
        let len = fib_u64(s).expect("index below k");
        let factor = phase_product(ctx, Some(&phase), 1, len + 1)?;
        logs.push(factor.log_value);
        segments.push(Segment {
            s,
            offset,
            alpha: phase.signed_dd().to_f64(),
            alpha_limit: OMEGA_F64.powi(s as i32 + 1),
            factor,
        });
    }
    let split_log = pairwise_sum(&logs);
    Ok(SplitReport {
        k,
        direct,
        segments,
        split_log,
        rel_dev: (split_log - direct.log_value).exp_m1().abs().to_f64(),
    })
}

/// Extremes of `ln P_k / ln k` over `2 <= k <= k_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawReport {
    pub k_max: u64,
    pub k1_emp: f64,
    pub k2_emp: f64,
    pub argmin: u64,
    pub argmax: u64,
    pub err: f64,
}

/// Runs the scan, handing every `(k, ln P_k / ln k)` to `emit`.
pub fn power_law_scan_with<F: FnMut(u64, f64)>(
    ctx: &GoldenCtx,
    k_max: u64,
    mut emit: F,
) -> Result<PowerLawReport> {
    if k_max < 2 {
        return Err(Error::InvalidArgument("scan needs k_max >= 2".into()));
    }
    let mut r = PowerLawReport {
        k_max,
        k1_emp: f64::INFINITY,
        k2_emp: f64::NEG_INFINITY,
        argmin: 0,
        argmax: 0,
        err: 0.0,
    };
    let err = prefix_logs(ctx, 2, k_max, 1, |k, l| {
        let v = (l / Dd::from_u64(k).ln()).to_f64();
        if v < r.k1_emp {
            r.k1_emp = v;
            r.argmin = k;
        }
        if v > r.k2_emp {
            r.k2_emp = v;
            r.argmax = k;
        }
        emit(k, v);
    })?;
    r.err = err / 2f64.ln() + DD_FN_REL_ERR;
    Ok(r)
}

pub fn power_law_scan(ctx: &GoldenCtx, k_max: u64) -> Result<PowerLawReport> {
    power_law_scan_with(ctx, k_max, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> GoldenCtx {
        GoldenCtx::new(192, 40).unwrap()
    }

    #[test]
    fn convex_sine_examples() {
        let x = std::f64::consts::FRAC_PI_4;
        assert!(0.5 < x.sin() && x.sin() < x);
        let r = convex_sine_check(1000, 1);
        assert!(r.holds());
        assert!(r.min_upper_gap > 0.0);
    }

    #[test]
    fn prod_bounds_examples() {
        let r = prod_bounds_check(&[0.1, -0.1]).unwrap();
        assert!((r.product - 0.99).abs() < 1e-15);
        assert!((r.lower - 0.8).abs() < 1e-15 && (r.upper - 1.25).abs() < 1e-15);
        assert!(r.holds);
        let z = prod_bounds_check(&[0.0, 0.0, 0.0]).unwrap();
        assert!(z.degenerate && z.holds && z.product == 1.0);
        let one = prod_bounds_check(&[-0.1, 0.0]).unwrap();
        assert!(one.lower_attained && one.holds);
        assert!(matches!(
            prod_bounds_check(&[0.6, 0.5]),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn log_lower_examples() {
        let r = log_lower_check(10_000);
        assert!(r.holds());
        assert_eq!(r.f_at_zero, 0.0);
        assert!(r.f_at_minus_half > 0.0);
        assert!(r.root_lo > -0.684 && r.root_hi < -0.683);
        assert!(r.root_hi - r.root_lo < 1e-6);
    }

    #[test]
    fn perturbed_zero_is_q() {
        let c = ctx();
        let p = perturbed_product(&c, 8, &SignedPhase::zero(192)).unwrap();
        assert_eq!(p.direct.log_value, p.base.log_value);
        assert!(p.agreement < 1e-25);
    }

    #[test]
    fn perturbed_endpoints_agree_with_factored_form() {
        let c = ctx();
        for n in 2..12 {
            for neg in [false, true] {
                let a = SignedPhase::omega_power(&c, n + 1, neg).unwrap();
                let p = perturbed_product(&c, n, &a).unwrap();
                assert!(p.agreement < 1e-25, "n={n}");
                assert!(p.ratio < perturbed_upper_constant());
            }
        }
        let big = SignedPhase::omega_power(&c, 5, false).unwrap();
        assert!(matches!(
            perturbed_product(&c, 8, &big),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            perturbed_product(&c, 1, &SignedPhase::zero(192)),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn counterexample_vanishes() {
        let c = ctx();
        let ce = perturbed_counterexample(&c).unwrap();
        assert!(ce.sum_is_one);
        assert!(ce.value_bound < 1e-50);
    }

    #[test]
    fn split_examples() {
        let c = ctx();
        let r = split_product(&c, 7).unwrap();
        assert_eq!(r.segments.len(), 2);
        assert!(r.rel_dev < 1e-12);
        let single = split_product(&c, 89).unwrap();
        assert_eq!(single.segments.len(), 1);
        let q = q_n(&c, 11).unwrap();
        assert!((single.split_log - q.log_value).abs().hi < 1e-28);
        for k in 1..300 {
            let r = split_product(&c, k).unwrap();
            assert!(r.rel_dev < 1e-12);
            assert!(r.segments.iter().all(Segment::alpha_within_limit));
        }
    }

    #[test]
    fn power_law_small() {
        let c = ctx();
        let r = power_law_scan(&c, 1000).unwrap();
        assert_eq!(r.argmax, 2);
        assert!(r.k2_emp >= 1.0);
        let r2 = power_law_scan(&c, 2000).unwrap();
        assert!(r2.k1_emp <= r.k1_emp && r2.k2_emp >= r.k2_emp);
    }

    #[test]
    fn signed_phase_parsing() {
        let a = SignedPhase::parse("-0.001", 192).unwrap();
        assert!((a.value.to_f64() + 0.001).abs() < 1e-18);
        assert!((a.phase.to_f64() - 0.999).abs() < 1e-15);
        let q = BigRational::new(BigInt::from(3), BigInt::from(8));
        let b = SignedPhase::from_rational(&q, 192).unwrap();
        assert_eq!(b.value.to_f64(), 0.375);
    }
}
