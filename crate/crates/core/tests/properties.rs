use proptest::prelude::*;

use sudler_lab::bounds::{prod_bounds_check, split_product};
use sudler_lab::dd::Dd;
use sudler_lab::fibcore::zeckendorf;
use sudler_lab::sudler::{sudler_p, sudler_p_rational};
use sudler_lab::GoldenCtx;

fn ctx() -> &'static GoldenCtx {
    static C: std::sync::OnceLock<GoldenCtx> = std::sync::OnceLock::new();
    C.get_or_init(|| GoldenCtx::new(192, 60).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zeckendorf_roundtrip(n in 0u128..1u128 << 100) {
        let z = zeckendorf(n);
        prop_assert_eq!(z.reconstruct(), n);
        let idx = z.indices();
        prop_assert!(idx.windows(2).all(|w| w[0] >= w[1] + 2));
    }

    #[test]
    fn product_step(k in 1u64..50_000) {
        let a = sudler_p(ctx(), k).unwrap();
        let b = sudler_p(ctx(), k + 1).unwrap();
        let (d, _) = ctx().frac_r_omega(k as u128 + 1).unwrap().dist_to_int();
        let step = d.sin_pi().mul_f64(2.0).ln();
        prop_assert!((b.log_value - a.log_value - step).abs().hi < 1e-20);
    }

    #[test]
    fn split_matches_direct(k in 1u64..200_000) {
        let r = split_product(ctx(), k).unwrap();
        prop_assert!(r.rel_dev < 1e-10);
        prop_assert!(r.segments.iter().all(|s| s.alpha_within_limit()));
    }

    #[test]
    fn rational_full_product(q in 2u64..3000, p in 1u64..3000) {
        prop_assume!(p < q && num_integer::gcd(p, q) == 1);
        let r = sudler_p_rational(p as i64, q, q - 1).unwrap();
        prop_assert!((r.log_value - Dd::from_u64(q).ln()).abs().hi < 1e-12);
    }

    #[test]
    fn product_bounds_hold(a in proptest::collection::vec(-0.2f64..0.2, 2..5)) {
        prop_assert!(prod_bounds_check(&a).unwrap().holds);
    }
}
