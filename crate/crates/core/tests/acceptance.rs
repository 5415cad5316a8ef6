//! Acceptance criteria 1-12. Prints one PASS/FAIL line per criterion and
//! exits nonzero only when a criterion outside `EXPECTED_FAILURES` fails.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sudler_lab::birkhoff::{
    cot2_sum, cot_sum, frac_sum_convergent, identity_suite, partial_sum_report, Angle,
};
use sudler_lab::bounds::{
    convex_sine_check, log_lower_check, power_law_scan, prod_bounds_check, random_admissible,
    split_product,
};
use sudler_lab::dd::Dd;
use sudler_lab::goldenangle::MAX_LEVEL;
use sudler_lab::sudler::{a_n, b_n, c_infinity_trunc, c_n, q_n, sudler_p, sudler_p_rational};
use sudler_lab::verify::random_phase;
use sudler_lab::GoldenCtx;

/// Criteria whose statements do not hold at the prescribed sizes.
const EXPECTED_FAILURES: [u32; 3] = [5, 6, 9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rational_exactness() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut log_dev: f64 = 0.0;
    for q in 2..=2000u64 {
        let p = sudler_p_rational(1, q, q - 1).expect("valid rational");
        worst = worst.max((p.value - q as f64).abs() / q as f64);
        log_dev = log_dev.max((p.log_value - Dd::from_u64(q).ln()).abs().to_f64());
    }
    let el = t.elapsed();
    outcome(
        worst < 1e-12 && el < Duration::from_secs(10),
        format!(
            "q <= 2000, max rel dev {worst:.2e} (log dev {log_dev:.2e}), {:.2} s",
            el.as_secs_f64()
        ),
    )
}

fn decomposition(ctx: &GoldenCtx) -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut log_dev: f64 = 0.0;
    for n in 1..=30 {
        let q = q_n(ctx, n).unwrap();
        let abc = a_n(ctx, n).unwrap().log_value
            + b_n(ctx, n).unwrap().log_value
            + c_n(ctx, n).unwrap().log_value;
        let product = abc.exp().to_f64();
        worst = worst.max((q.value - product).abs() / q.value);
        log_dev = log_dev.max((q.log_value - abc).abs().to_f64());
    }
    let el = t.elapsed();
    outcome(
        worst < 1e-9 && el < Duration::from_secs(60),
        format!(
            "1 <= n <= 30, max |Q - ABC|/Q {worst:.2e} (log dev {log_dev:.2e}), {:.2} s",
            el.as_secs_f64()
        ),
    )
}

fn subsequence(ctx: &GoldenCtx) -> Outcome {
    let qs: Vec<f64> = (20..=30).map(|n| q_n(ctx, n).unwrap().value).collect();
    let inside = qs.iter().all(|&q| q > 2.35 && q < 2.46);
    let diffs: Vec<f64> = qs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let half = diffs.len() / 2;
    let early = diffs[..half].iter().sum::<f64>() / half as f64;
    let late = diffs[half..].iter().sum::<f64>() / (diffs.len() - half) as f64;
    let last = *qs.last().unwrap();
    outcome(
        inside && late < early && (last - 2.407).abs() < 0.05,
        format!(
            "Q_20..Q_30 in [{:.7}, {:.7}], mean step {early:.2e} then {late:.2e}, Q_30 = {last:.9}",
            qs.iter().copied().fold(f64::INFINITY, f64::min),
            qs.iter().copied().fold(0.0, f64::max)
        ),
    )
}

fn c_limit(ctx: &GoldenCtx) -> Outcome {
    let c = c_infinity_trunc(ctx, 1_000_000).unwrap();
    let c20 = c_n(ctx, 20).unwrap().value;
    // factors in (0,1): partial products decrease from the first factor down
    // to the final value, so both ends bound every partial product
    let first = 1.0 - c.first_inverse_square;
    let pass = c.factors_in_unit_interval
        && first < 1.0
        && c.value > 0.862
        && (c20 - c.value).abs() < 1e-2;
    outcome(
        pass,
        format!(
            "T = 10^6: {:.8}, squared {:.8}, C_20 = {c20:.8}, matching form for 0.928: {}",
            c.value,
            c.squared,
            c.closer_form()
        ),
    )
}

fn accumulation(ctx: &GoldenCtx) -> Outcome {
    let n = 28;
    let f = ctx.fib(n);
    let ln_f = (f as f64).ln();
    let low = 2.0 * q_n(ctx, n).unwrap().log_f64() / ln_f;
    let high = 2.0 * sudler_p(ctx, f - 1).unwrap().log_f64() / ln_f;
    outcome(
        low.abs() < 0.1 && (high - 2.0).abs() < 0.1,
        format!("n = 28: S_F/ln F = {low:.6} (target 0), S_(F-1)/ln F = {high:.6} (target 2)"),
    )
}

fn cotangent(ctx: &GoldenCtx) -> Outcome {
    let enclosures = (2..=25).all(|n| cot_sum(ctx, n).unwrap().within_enclosure());
    let cot2: Vec<_> = (4..=18).map(|n| cot2_sum(ctx, n).unwrap()).collect();
    let cot2_fail: Vec<u32> = cot2
        .iter()
        .filter(|c| !c.printed_holds())
        .map(|c| c.n)
        .collect();
    let chain = cot2.iter().all(|c| c.chain_holds() && c.corrected_holds());
    outcome(
        enclosures && cot2_fail.is_empty(),
        format!(
            "enclosures hold: {enclosures}; cot^2 bound fails for n in {cot2_fail:?}; \
             intermediate and F_n^2/3 bounds hold: {chain}"
        ),
    )
}

fn discrepancy(ctx: &GoldenCtx) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for _ in 0..1000 {
        let th = random_phase(&mut rng, ctx.bits());
        for k in 2..=25 {
            let d = frac_sum_convergent(ctx, ctx.fib(k), Angle::Golden, &th).unwrap();
            pass &= d.within_three_halves();
            worst = worst.max(d.value.abs().to_f64());
        }
    }
    outcome(
        pass,
        format!("q = F_2..F_25 x 1000 phases, max |sum| {worst:.5}"),
    )
}

fn partial_sums(ctx: &GoldenCtx) -> Outcome {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut split: f64 = 0.0;
    for n in 8..=18 {
        let r = partial_sum_report(ctx, n).unwrap();
        pass &= r.ratio_bound_holds() && r.max_split_dev < 1e-12;
        worst = worst.max(r.max_ratio);
        split = split.max(r.max_split_dev);
    }
    outcome(
        pass,
        format!("8 <= n <= 18, max |S_nt|/(w^n (ln t + 1)) = {worst:.4}, split dev {split:.2e}"),
    )
}

fn power_law(ctx: &GoldenCtx) -> Outcome {
    let r = power_law_scan(ctx, ctx.fib(20)).unwrap();
    let mut split: f64 = 0.0;
    for k in 1..=10_000 {
        split = split.max(split_product(ctx, k).unwrap().rel_dev);
    }
    outcome(
        r.k1_emp <= 0.0 && r.k2_emp >= 1.0 && split < 1e-10,
        format!(
            "k <= F_20: K1_emp = {:.6} at k = {}, K2_emp = {:.6} at k = {}; split dev {split:.2e}",
            r.k1_emp, r.argmin, r.k2_emp, r.argmax
        ),
    )
}

fn identities() -> Outcome {
    let r = identity_suite(200, 20, 11).unwrap();
    outcome(
        r.all_within(1e-11),
        format!("n <= 200, 20 phases each, worst rel dev {:.2e}", r.worst()),
    )
}

fn inequalities() -> Outcome {
    let sine = convex_sine_check(200_000, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let prod = (0..100_000).all(|_| {
        prod_bounds_check(&random_admissible(&mut rng, 12))
            .unwrap()
            .holds
    });
    let log = log_lower_check(1_000_000);
    outcome(
        sine.holds() && prod && log.holds(),
        format!(
            "convex sine {}, product bounds {prod}, log bound {} with root in [{:.9}, {:.9}]",
            sine.holds(),
            log.holds(),
            log.root_lo,
            log.root_hi
        ),
    )
}

fn reproducibility() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_sudler");
    let cases: [&[&str]; 3] = [
        &["profile", "18", "--stride", "3"],
        &["cotprofile", "16"],
        &["scan", "20000"],
    ];
    let mut pass = true;
    let mut sizes = Vec::new();
    for args in cases {
        let outs: Vec<Vec<u8>> = ["1", "4", "8"]
            .iter()
            .map(|w| {
                let o = Command::new(exe)
                    .args(args)
                    .args(["--workers", w, "--seed", "3", "--precision", "192"])
                    .output()
                    .expect("binary runs");
                assert!(o.status.success());
                o.stdout
            })
            .collect();
        pass &= outs.windows(2).all(|w| w[0] == w[1]);
        sizes.push(outs[0].len());
    }
    outcome(
        pass,
        format!("profile, cotprofile, scan at 1/4/8 workers, bytes {sizes:?}"),
    )
}

fn main() {
    let ctx = GoldenCtx::new(192, MAX_LEVEL + 2).unwrap();
    type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (1, "rational exactness", Box::new(rational_exactness)),
        (
            2,
            "decomposition identity",
            Box::new(|| decomposition(&ctx)),
        ),
        (3, "subsequence convergence", Box::new(|| subsequence(&ctx))),
        (4, "limit of C_n", Box::new(|| c_limit(&ctx))),
        (5, "accumulation points", Box::new(|| accumulation(&ctx))),
        (6, "cotangent enclosures", Box::new(|| cotangent(&ctx))),
        (7, "discrepancy bound", Box::new(|| discrepancy(&ctx))),
        (8, "partial-sum bound", Box::new(|| partial_sums(&ctx))),
        (9, "power-law envelope", Box::new(|| power_law(&ctx))),
        (10, "identity suite", Box::new(identities)),
        (11, "inequality toolkit", Box::new(inequalities)),
        (12, "reproducibility", Box::new(reproducibility)),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in &criteria {
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && EXPECTED_FAILURES.contains(id) {
            " (expected)"
        } else {
            ""
        };
        println!("criterion {id:>2} {name}: {tag}{note} | {}", o.detail);
        if !o.pass && !EXPECTED_FAILURES.contains(id) {
            unexpected.push(*id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
