//! Invariant suite behind `sudler verify`.
//!
//! Each row names the check, the result it exercises and the outcome. Rows
//! marked as known defects test a statement that is expected to fail at
//! the tested sizes; they are reported but do not fail the suite.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::birkhoff::{
    cot2_sum, cot_sum, frac_sum_convergent, identity_suite, partial_sum_report, Angle,
};
use crate::bounds::{
    convex_sine_check, log_lower_check, perturbed_counterexample, perturbed_scan,
    perturbed_upper_constant, power_law_scan, prod_bounds_check, random_admissible, split_product,
};
use crate::dd::Dd;
use crate::error::Result;
use crate::fibcore::{fib, fib_mod_inverse, fib_u64, zeckendorf};
use crate::goldenangle::{FixedFrac, GoldenCtx, SeqParams, MAX_LEVEL};
use crate::sudler::{
    c_infinity_trunc, c_n, decompose, prefix_logs, q_n, ratio_pfn_minus1, sudler_p,
    sudler_p_rational,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    KnownDefect,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::KnownDefect => "KNOWN-DEFECT",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub module: &'static str,
    pub name: &'static str,
    /// The result being exercised, in words.
    pub anchor: &'static str,
    pub status: Status,
    pub detail: String,
}

struct Suite {
    rows: Vec<CheckRow>,
}

impl Suite {
    fn add(
        &mut self,
        module: &'static str,
        name: &'static str,
        anchor: &'static str,
        defect: bool,
        check: impl FnOnce() -> Result<(bool, String)>,
    ) {
        let (status, detail) = match check() {
            Ok((true, d)) => (Status::Pass, d),
            Ok((false, d)) if defect => (Status::KnownDefect, d),
            Ok((false, d)) => (Status::Fail, d),
            Err(e) => (Status::Fail, e.to_string()),
        };
        self.rows.push(CheckRow {
            module,
            name,
            anchor,
            status,
            detail,
        });
    }
}

/// True when no row failed outright.
pub fn suite_passes(rows: &[CheckRow]) -> bool {
    rows.iter().all(|r| r.status != Status::Fail)
}

/// Random phase in `[0, 1)` at `bits` bits.
pub fn random_phase(rng: &mut ChaCha8Rng, bits: u32) -> FixedFrac {
    let words: Vec<u32> = (0..bits.div_ceil(32)).map(|_| rng.gen()).collect();
    let m = BigUint::from_slice(&words) % (BigUint::one() << bits);
    FixedFrac::new(m, bits, 0).expect("mantissa below one")
}

fn sz(level: Level, quick: u64, full: u64) -> u64 {
    match level {
        Level::Quick => quick,
        Level::Full => full,
    }
}

pub fn run_suite(level: Level, seed: u64, bits: u32) -> Result<Vec<CheckRow>> {
    let ctx = GoldenCtx::new(bits, MAX_LEVEL + 2)?;
    let mut s = Suite { rows: Vec::new() };
    fibcore_checks(&mut s, level);
    golden_checks(&mut s, &ctx, level, seed);
    sudler_checks(&mut s, &ctx, level, seed);
    birkhoff_checks(&mut s, &ctx, level, seed);
    bounds_checks(&mut s, &ctx, level, seed);
    Ok(s.rows)
}

fn fibcore_checks(s: &mut Suite, level: Level) {
    let n_max = sz(level, 200, 1000) as u32;
    s.add(
        "fibcore",
        "cassini",
        "Cassini identity F_{n+1}F_{n-1} - F_n^2 = (-1)^n",
        false,
        || {
            let bad = (1..n_max).find(|&n| {
                let lhs = BigInt::from(fib(n + 1) * fib(n - 1)) - BigInt::from(fib(n) * fib(n));
                lhs != BigInt::from(if n % 2 == 0 { 1 } else { -1 })
            });
            Ok((bad.is_none(), format!("n < {n_max}, first failure {bad:?}")))
        },
    );
    s.add(
        "fibcore",
        "binet",
        "closed form F_n = (w^-n - (-w)^n)/sqrt5",
        false,
        || {
            let c = GoldenCtx::new(128, 61)?;
            let sqrt5 = Dd::from_f64(5.0).sqrt();
            let mut worst: f64 = 0.0;
            for n in 1..=60u32 {
                let wn = c.omega_pow_dd(n)?;
                let alt = if n % 2 == 0 { wn } else { -wn };
                let b = (wn.recip() - alt) / sqrt5;
                worst = worst.max((b - Dd::from_u64(fib_u64(n).unwrap())).abs().to_f64());
            }
            Ok((worst < 1e-6, format!("max |error| {worst:.3e} for n <= 60")))
        },
    );
    let z_max = sz(level, 10_000, 100_000);
    s.add(
        "fibcore",
        "zeckendorf",
        "unique non-adjacent Fibonacci digits",
        false,
        || {
            let bad = (0..=z_max as u128).find(|&n| {
                let z = zeckendorf(n);
                let idx = z.indices();
                z.reconstruct() != n
                    || idx.windows(2).any(|w| w[0] - w[1] < 2)
                    || idx.last().is_some_and(|&i| i < 2)
            });
            Ok((
                bad.is_none(),
                format!("n <= {z_max}, first failure {bad:?}"),
            ))
        },
    );
    s.add(
        "fibcore",
        "mod-inverse",
        "F_{n-1}^{-1} mod F_n in closed form",
        false,
        || {
            let bad = (3..=40u32).find(|&n| {
                let m = BigInt::from(fib(n));
                let e = BigInt::from(fib(n - 1)).extended_gcd(&m);
                BigInt::from(fib_mod_inverse(n)) != e.x.mod_floor(&m)
            });
            Ok((
                bad.is_none(),
                format!("3 <= n <= 40, first failure {bad:?}"),
            ))
        },
    );
}

fn golden_checks(s: &mut Suite, ctx: &GoldenCtx, level: Level, seed: u64) {
    let per_max = sz(level, 12, 15) as u32;
    s.add(
        "goldenangle",
        "periodicity",
        "period F_n of s, xi and h",
        false,
        || {
            for n in 2..=per_max {
                let p = SeqParams::new(ctx, n)?;
                let f = p.f as i64;
                for t in -f..f {
                    let same_s = (p.s(t + f).abs() - p.s(t).abs()).abs().hi < 1e-28;
                    let same_xi = ctx.xi_n(n, t + f)? == ctx.xi_n(n, t)?;
                    let same_h = match (p.h(t), p.h(t + f)) {
                        (Ok(a), Ok(b)) => (a - b).abs().hi <= 1e-28 * (1.0 + a.abs().hi),
                        (Err(_), Err(_)) => true,
                        _ => false,
                    };
                    if !(same_s && same_xi && same_h) {
                        return Ok((false, format!("n = {n}, t = {t}")));
                    }
                }
            }
            Ok((true, format!("2 <= n <= {per_max}, two periods")))
        },
    );
    s.add(
        "goldenangle",
        "oddness",
        "xi and s odd, h even in t",
        false,
        || {
            for n in 2..=12 {
                let p = SeqParams::new(ctx, n)?;
                for t in 1..p.f as i64 {
                    let xi_odd = ctx.xi_n(n, -t)? == -ctx.xi_n(n, t)?;
                    let s_odd = (p.s(-t) + p.s(t)).abs().hi < 1e-28;
                    let h_even = (p.h(-t)? - p.h(t)?).abs().hi <= 1e-28 * (1.0 + p.h(t)?.abs().hi);
                    if !(xi_odd && s_odd && h_even) {
                        return Ok((false, format!("n = {n}, t = {t}")));
                    }
                }
            }
            Ok((true, "2 <= n <= 12, all t".into()))
        },
    );
    s.add(
        "goldenangle",
        "xi-range",
        "|xi_nt| < 1/2 and |xi_inf t| < 1/2",
        false,
        || {
            let half = num_rational::BigRational::new(BigInt::one(), BigInt::from(2));
            for n in 2..=15 {
                for t in 1..ctx.fib(n) as i64 {
                    if ctx.xi_n(n, t)?.abs() >= half {
                        return Ok((false, format!("n = {n}, t = {t}")));
                    }
                }
            }
            for t in 1..=10_000u128 {
                if ctx.xi_inf(t)?.abs().hi >= 0.5 {
                    return Ok((false, format!("xi_inf at t = {t}")));
                }
            }
            Ok((true, "n <= 15 exhaustive, xi_inf for t <= 10^4".into()))
        },
    );
    s.add(
        "goldenangle",
        "minimality",
        "min_t s_nt = s_n0, attained only at t = 0",
        false,
        || {
            for n in 3..=15 {
                let p = SeqParams::new(ctx, n)?;
                let s0 = p.s0();
                if (p.s(0) - s0).abs().hi > 1e-30 {
                    return Ok((false, format!("s_n0 mismatch at n = {n}")));
                }
                if let Some(t) = (1..p.f as i64).find(|&t| !(p.s(t) > s0)) {
                    return Ok((false, format!("n = {n}, t = {t}")));
                }
            }
            Ok((true, "3 <= n <= 15".into()))
        },
    );
    s.add(
        "goldenangle",
        "drift",
        "|xi_nt - xi_inf t| < w^n for t <= F_{n-1}",
        false,
        || {
            for n in 2..=20 {
                let p = SeqParams::new(ctx, n)?;
                for t in 1..=p.g as i64 {
                    if (p.xi(t) - ctx.xi_inf(t as u128)?).abs() >= p.wn {
                        return Ok((false, format!("n = {n}, t = {t}")));
                    }
                }
            }
            Ok((true, "2 <= n <= 20".into()))
        },
    );
    s.add(
        "goldenangle",
        "fixed-point",
        "{r w} error model against a 512-bit reference",
        false,
        || {
            let lo = GoldenCtx::new(192, 4)?;
            let hi = GoldenCtx::new(512, 4)?;
            let f40 = fib_u64(40).unwrap();
            let bound = lo.frac_err(f40 as u128);
            if bound >= crate::dd::ldexp(1.0, -160) {
                return Ok((false, format!("err bound {bound:e} >= 2^-160")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rs: Vec<u128> = (0..200).map(|_| rng.gen_range(1..=f40) as u128).collect();
            rs.extend([1, f40 as u128]);
            for r in rs {
                let a = lo.frac_r_omega(r)?;
                let b = hi.frac_r_omega(r)?;
                let diff =
                    (BigInt::from(a.mantissa.clone()) << 320u32) - BigInt::from(b.mantissa.clone());
                // compare on the circle
                let one = BigInt::one() << 512u32;
                let d = diff.abs().min(&one - diff.abs());
                let allowed = (BigInt::from(a.err_ulps) << 320u32) + BigInt::from(b.err_ulps);
                if d > allowed {
                    return Ok((false, format!("r = {r}")));
                }
            }
            Ok((true, format!("r <= F_40, bound {bound:.3e}")))
        },
    );
}

fn sudler_checks(s: &mut Suite, ctx: &GoldenCtx, level: Level, seed: u64) {
    let top = sz(level, 25, 30) as u32;
    s.add(
        "sudler",
        "multiplicativity",
        "P_{k+1} = P_k |2 sin pi (k+1) w|",
        false,
        || {
            let k_max = ctx.fib(top);
            let mut logs = Vec::with_capacity(k_max as usize + 1);
            prefix_logs(ctx, 1, k_max, 1, |_, l| logs.push(l))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples = sz(level, 1000, 10_000);
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let k = rng.gen_range(1..k_max);
                let (d, _) = ctx.frac_r_omega(k as u128 + 1)?.dist_to_int();
                let step = d.sin_pi().mul_f64(2.0).ln();
                worst = worst.max(
                    (logs[k as usize] - logs[k as usize - 1] - step)
                        .abs()
                        .to_f64(),
                );
            }
            for _ in 0..5 {
                let k = rng.gen_range(1..k_max.min(200_000));
                let a = sudler_p(ctx, k)?;
                let b = sudler_p(ctx, k + 1)?;
                let (d, _) = ctx.frac_r_omega(k as u128 + 1)?.dist_to_int();
                let step = d.sin_pi().mul_f64(2.0).ln();
                worst = worst.max((b.log_value - a.log_value - step).abs().to_f64());
            }
            Ok((
                worst < 1e-9,
                format!("{samples} k <= F_{top}, max log dev {worst:.2e}"),
            ))
        },
    );
    s.add(
        "sudler",
        "decomposition",
        "Q_n = A_n B_n C_n",
        false,
        || {
            let mut worst: f64 = 0.0;
            for n in 1..=top {
                worst = worst.max(decompose(ctx, n)?.rel_residual.abs());
            }
            Ok((
                worst < 1e-9,
                format!("1 <= n <= {top}, max rel residual {worst:.2e}"),
            ))
        },
    );
    s.add(
        "sudler",
        "c-range",
        "C_1 = C_2 = 1 and 0 < C_n < 1 for n >= 3",
        false,
        || {
            for n in 1..=top {
                let v = c_n(ctx, n)?.value;
                let ok = if n <= 2 { v == 1.0 } else { v > 0.0 && v < 1.0 };
                if !ok {
                    return Ok((false, format!("C_{n} = {v}")));
                }
            }
            Ok((true, format!("n <= {top}")))
        },
    );
    let terms = sz(level, 10_000, 1_000_000);
    s.add(
        "sudler",
        "c-limit",
        "limit of C_n decreasing and above 0.862",
        false,
        || {
            let c = c_infinity_trunc(ctx, terms)?;
            let c20 = c_n(ctx, 20)?.value;
            let ok = c.factors_in_unit_interval && c.value > 0.862 && (c20 - c.value).abs() < 1e-2;
            Ok((
                ok,
                format!(
                    "T = {terms}: {:.8} (squared {:.8}, closer to 0.928: {}), C_20 = {c20:.8}",
                    c.value,
                    c.squared,
                    c.closer_form()
                ),
            ))
        },
    );
    s.add(
        "sudler",
        "q-cauchy",
        "Q_n settles for 20 <= n <= top",
        false,
        || {
            let last = q_n(ctx, top)?.value;
            let mut worst: f64 = 0.0;
            let mut inside = true;
            for n in 20..=top {
                let v = q_n(ctx, n)?.value;
                worst = worst.max((v - last).abs());
                inside &= v > 2.35 && v < 2.46;
            }
            Ok((
                worst < 0.02 && inside && (last - 2.407).abs() < 0.05,
                format!("Q_{top} = {last:.10}, max |Q_n - Q_{top}| {worst:.2e}"),
            ))
        },
    );
    let q_max = sz(level, 300, 2000);
    s.add(
        "sudler",
        "rational-product",
        "P_{q-1}(1/q) = q",
        false,
        || {
            let mut worst: f64 = 0.0;
            for q in 2..=q_max {
                let p = sudler_p_rational(1, q, q - 1)?;
                worst = worst.max((p.log_value - Dd::from_u64(q).ln()).exp_m1().abs().to_f64());
            }
            Ok((
                worst < 1e-12,
                format!("q <= {q_max}, max rel dev {worst:.2e}"),
            ))
        },
    );
    s.add(
        "sudler",
        "ratio-form",
        "P_{F_n-1}/F_n approaches c sqrt5/(2 pi)",
        false,
        || {
            let r = ratio_pfn_minus1(ctx, top)?;
            let c = q_n(ctx, top)?.value;
            let fwd = c * 5f64.sqrt() / (2.0 * std::f64::consts::PI);
            let alt = c / (2.0 * std::f64::consts::PI * 5f64.sqrt());
            Ok((
                (r.value - fwd).abs() < 1e-3,
                format!(
                    "ratio {:.8}, c sqrt5/2pi {fwd:.8}, c/(2pi sqrt5) {alt:.8}",
                    r.value
                ),
            ))
        },
    );
    s.add(
        "sudler",
        "upper-accumulation",
        "S_{F_n - 1}/ln F_n near 2",
        false,
        || {
            let f = ctx.fib(top);
            let v = 2.0 * sudler_p(ctx, f - 1)?.log_f64() / (f as f64).ln();
            Ok(((v - 2.0).abs() < 0.1, format!("n = {top}: {v:.6}")))
        },
    );
    s.add(
        "sudler",
        "lower-accumulation",
        "S_{F_n}/ln F_n near 0",
        true,
        || {
            let f = ctx.fib(top);
            let v = 2.0 * q_n(ctx, top)?.log_f64() / (f as f64).ln();
            Ok((
                v.abs() < 0.1,
                format!("n = {top}: {v:.6}, decays like 1/ln F_n"),
            ))
        },
    );
}

fn birkhoff_checks(s: &mut Suite, ctx: &GoldenCtx, level: Level, seed: u64) {
    s.add(
        "birkhoff",
        "split-sums",
        "S_nt equals its Zeckendorf split",
        false,
        || {
            let mut worst: f64 = 0.0;
            for n in 3..=15 {
                worst = worst.max(partial_sum_report(ctx, n)?.max_split_dev);
            }
            Ok((worst < 1e-12, format!("3 <= n <= 15, max dev {worst:.2e}")))
        },
    );
    let top = sz(level, 14, 18) as u32;
    s.add(
        "birkhoff",
        "partial-sum-bound",
        "|S_nt| < K w^n (ln t + 1)",
        false,
        || {
            let mut worst: f64 = 0.0;
            let mut k = 0.0;
            for n in 8..=top {
                let r = partial_sum_report(ctx, n)?;
                if !r.ratio_bound_holds() || r.max_split_dev >= 1e-12 {
                    return Ok((false, format!("n = {n}: ratio {:.4}", r.max_ratio)));
                }
                worst = worst.max(r.max_ratio);
                k = r.k_const;
            }
            Ok((
                true,
                format!("8 <= n <= {top}, max ratio {worst:.4} < K = {k:.4}"),
            ))
        },
    );
    let thetas = sz(level, 20, 1000);
    s.add(
        "birkhoff",
        "discrepancy",
        "|sum ({theta + i w} - 1/2)| < 3/2 at q = F_k",
        false,
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..thetas {
                let th = random_phase(&mut rng, ctx.bits());
                for k in 2..=25 {
                    let d = frac_sum_convergent(ctx, ctx.fib(k), Angle::Golden, &th)?;
                    if !d.within_three_halves() {
                        return Ok((false, format!("q = F_{k}")));
                    }
                    worst = worst.max(d.value.abs().to_f64());
                }
            }
            Ok((
                true,
                format!("{thetas} phases, q = F_2..F_25, max {worst:.4}"),
            ))
        },
    );
    s.add(
        "birkhoff",
        "cot-enclosure",
        "w^n sum cot pi r w inside its odd/even enclosure",
        false,
        || {
            let mut prev_sign = 0.0;
            for n in 2..=25 {
                let c = cot_sum(ctx, n)?;
                let sign = c.normalized.signum();
                let expected = if n % 2 == 1 { 1.0 } else { -1.0 };
                if !c.within_enclosure()
                    || c.normalized.abs() > 0.71
                    || sign != expected
                    || sign == prev_sign
                {
                    return Ok((false, format!("n = {n}: {:.6}", c.normalized)));
                }
                prev_sign = sign;
            }
            Ok((true, "2 <= n <= 25, alternating signs".into()))
        },
    );
    s.add(
        "birkhoff",
        "cot2-chain",
        "cot^2 sum below the chain's intermediate bound",
        false,
        || {
            let bad =
                (4..=18).find(|&n| cot2_sum(ctx, n).map(|c| !c.chain_holds()).unwrap_or(true));
            Ok((
                bad.is_none(),
                format!("4 <= n <= 18, first failure {bad:?}"),
            ))
        },
    );
    s.add(
        "birkhoff",
        "cot2-printed",
        "cot^2 sum below F_n^2/6 + (1 + w^2)/(pi^2 w^2n)",
        true,
        || {
            let fails: Vec<u32> = (4..=18)
                .filter(|&n| cot2_sum(ctx, n).map(|c| !c.printed_holds()).unwrap_or(true))
                .collect();
            let corrected = (4..=18).all(|n| {
                cot2_sum(ctx, n)
                    .map(|c| c.corrected_holds())
                    .unwrap_or(false)
            });
            Ok((
                fails.is_empty(),
                format!("fails for n in {fails:?}; with F_n^2/3 holds everywhere: {corrected}"),
            ))
        },
    );
    let (n_max, samples) = (sz(level, 60, 200), sz(level, 5, 20) as usize);
    s.add(
        "birkhoff",
        "identities",
        "closed-form trigonometric sums and products",
        false,
        || {
            let r = identity_suite(n_max, samples, seed)?;
            Ok((
                r.all_within(1e-11),
                format!("n <= {n_max}, worst rel dev {:.2e}", r.worst()),
            ))
        },
    );
}

fn bounds_checks(s: &mut Suite, ctx: &GoldenCtx, level: Level, seed: u64) {
    s.add(
        "bounds",
        "convex-sine",
        "2x/pi < sin x < x on (0, pi/2)",
        false,
        || {
            let r = convex_sine_check(sz(level, 10_000, 1_000_000), seed);
            Ok((r.holds(), format!("{} points", r.points)))
        },
    );
    s.add(
        "bounds",
        "prod-bounds",
        "1 - A < prod (1 + a_t) < 1/(1 - A)",
        false,
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cases = sz(level, 10_000, 200_000);
            for _ in 0..cases {
                let a = random_admissible(&mut rng, 12);
                if !prod_bounds_check(&a)?.holds {
                    return Ok((false, format!("{a:?}")));
                }
            }
            Ok((true, format!("{cases} random sequences")))
        },
    );
    s.add(
        "bounds",
        "log-lower",
        "ln(1 + x) >= x - x^2 for x > -0.683",
        false,
        || {
            let r = log_lower_check(sz(level, 100_000, 2_000_000));
            Ok((
                r.holds() && r.root_hi - r.root_lo < 1e-6,
                format!("root in [{:.9}, {:.9}]", r.root_lo, r.root_hi),
            ))
        },
    );
    let top = sz(level, 12, 20) as u32;
    s.add("bounds", "perturbed", "perturbed product / Q_n within [e^-L, e^{w(1/sqrt5 + w)}]", false, || {
        let mut mins = Vec::new();
        let mut max_ratio: f64 = 0.0;
        for n in 4..=top {
            let r = perturbed_scan(ctx, n..=n, 30, seed ^ n as u64)?;
            if r.max_agreement > 1e-20 {
                return Ok((false, format!("factored form off by {:.2e} at n = {n}", r.max_agreement)));
            }
            mins.push(r.min_ratio);
            max_ratio = max_ratio.max(r.max_ratio);
        }
        let min = mins.iter().copied().fold(f64::INFINITY, f64::min);
        let stable = mins.windows(2).all(|w| (w[0] - w[1]).abs() < 0.05 * w[1]);
        let upper = perturbed_upper_constant();
        Ok((
            min > 0.0 && stable && max_ratio < upper,
            format!("4 <= n <= {top}: ratio in [{min:.5}, {max_ratio:.5}], L = {:.5}, upper {upper:.5}", -min.ln()),
        ))
    });
    s.add(
        "bounds",
        "perturbed-n1",
        "n = 1 excluded: |2 sin pi(w + w^2)| = 0",
        false,
        || {
            let c = perturbed_counterexample(ctx)?;
            Ok((
                c.sum_is_one && c.value_bound < 1e-40,
                format!("value <= {:.2e}", c.value_bound),
            ))
        },
    );
    let k_max = sz(level, 1000, 10_000);
    s.add(
        "bounds",
        "split-product",
        "P_k as a product over Zeckendorf segments",
        false,
        || {
            let mut worst: f64 = 0.0;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f25 = ctx.fib(25);
            let ks = (1..=k_max).chain((0..sz(level, 10, 100)).map(|_| rng.gen_range(1..=f25)));
            for k in ks {
                let r = split_product(ctx, k)?;
                if !r.segments.iter().all(|g| g.alpha_within_limit()) {
                    return Ok((false, format!("segment phase too large at k = {k}")));
                }
                worst = worst.max(r.rel_dev);
            }
            Ok((
                worst < 1e-10,
                format!("k <= {k_max} and random k <= F_25, max rel dev {worst:.2e}"),
            ))
        },
    );
    let scan_n = sz(level, 16, 20) as u32;
    s.add(
        "bounds",
        "power-law-upper",
        "ln P_k / ln k has sup >= 1",
        false,
        || {
            let r = power_law_scan(ctx, ctx.fib(scan_n))?;
            let mut prev = power_law_scan(ctx, ctx.fib(scan_n - 4))?;
            let mut monotone = true;
            for m in [scan_n - 2, scan_n] {
                let cur = power_law_scan(ctx, ctx.fib(m))?;
                monotone &= cur.k1_emp <= prev.k1_emp && cur.k2_emp >= prev.k2_emp;
                prev = cur;
            }
            Ok((
                r.k2_emp >= 1.0 && monotone,
                format!("k <= F_{scan_n}: max {:.6} at k = {}", r.k2_emp, r.argmax),
            ))
        },
    );
    s.add(
        "bounds",
        "power-law-lower",
        "ln P_k / ln k has inf <= 0",
        true,
        || {
            let r = power_law_scan(ctx, ctx.fib(scan_n))?;
            Ok((
                r.k1_emp <= 0.0,
                format!("k <= F_{scan_n}: min {:.6} at k = {}", r.k1_emp, r.argmin),
            ))
        },
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_phase_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = random_phase(&mut rng, 192);
            assert!(p.mantissa < BigUint::one() << 192u32);
        }
    }
}
