use dixiecup::limitdist::{gumbel_normalization, lambda_functional, limit_cdf, Law};
use dixiecup::moments::{expectation, mgf, normalized_rising_integral, rising_moment, second_rising, survival_product, variance};
use dixiecup::simulate::{exact_small, ks_statistic, run_mc};
use dixiecup::special::{erlang_cdf, erlang_survival, gumbel_cdf, ln_factorial, partial_exp_sum};
use dixiecup::{build_model, CouponModel, SequenceFamily};
use proptest::prelude::*;

fn weights(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..5.0, 1..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn survival_in_open_unit_interval(m in 1u32..60, y in 1e-3f64..700.0) {
        let q = erlang_survival(m, y);
        prop_assert!(q > 0.0);
        prop_assert!(q < 1.0 || erlang_cdf(m, y) > 0.0);
    }

    #[test]
    fn survival_slope_is_negative(m in 1u32..20, y in 0.05f64..60.0) {
        // d/dy Q(m, y) = -y^{m-1} e^{-y} / (m-1)!
        let h = 1e-5 * y;
        // difference the smaller of Q and 1 - Q to avoid cancellation
        let fd = if erlang_survival(m, y) < 0.5 {
            (erlang_survival(m, y + h) - erlang_survival(m, y - h)) / (2.0 * h)
        } else {
            -(erlang_cdf(m, y + h) - erlang_cdf(m, y - h)) / (2.0 * h)
        };
        let exact = -((m - 1) as f64 * y.ln() - y - ln_factorial(m - 1)).exp();
        prop_assert!(fd < 0.0 || exact.abs() < 1e-12);
        prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs() + 1e-12);
    }

    #[test]
    fn survival_increases_with_shape(m in 1u32..40, y in 1e-2f64..200.0) {
        let (q0, q1) = (erlang_survival(m, y), erlang_survival(m + 1, y));
        prop_assert!(q0 < q1 || erlang_cdf(m, y) > erlang_cdf(m + 1, y));
    }

    #[test]
    fn survival_matches_naive_sum(m in 1u32..=10, y in 0.0f64..=30.0) {
        let naive = (-y).exp() * partial_exp_sum(m, y);
        prop_assert!((erlang_survival(m, y) - naive).abs() <= 1e-13 * naive);
    }

    #[test]
    fn product_is_monotone(a in weights(6), m in 1u32..=3, t0 in 0.0f64..20.0, dt in 0.0f64..5.0) {
        let model = CouponModel::from_probs(&a).unwrap();
        prop_assert!(survival_product(&model, m, t0 + dt) >= survival_product(&model, m, t0));
    }

    #[test]
    fn extra_coupon_lowers_product(p in 0.2f64..3.0, n in 1usize..30, m in 1u32..=3, t in 0.0f64..200.0) {
        let fam = SequenceFamily::Zipf { p };
        let small = build_model(&fam, n).unwrap();
        let big = build_model(&fam, n + 1).unwrap();
        prop_assert!(survival_product(&big, m, t) <= survival_product(&small, m, t) + 1e-15);
    }

    #[test]
    fn second_rising_dominates(a in weights(5), m in 1u32..=3) {
        let model = CouponModel::from_probs(&a).unwrap();
        let e = expectation(&model, m, 1e-9).unwrap();
        let s = second_rising(&model, m, 1e-9).unwrap();
        let v = variance(&model, m, 1e-9).unwrap();
        prop_assert!(s.value + s.abs_error >= e.value * e.value + e.value - 1e-6);
        prop_assert!(v.value >= -v.abs_error);
    }

    #[test]
    fn mgf_decreases_in_z(a in weights(5), m in 1u32..=3, z in 1.01f64..6.0, dz in 0.05f64..3.0) {
        let model = CouponModel::from_probs(&a).unwrap();
        let g0 = mgf(&model, m, z, 1e-11).unwrap().value;
        let g1 = mgf(&model, m, z + dz, 1e-11).unwrap().value;
        prop_assert!(g0 > 0.0 && g0 < 1.0);
        prop_assert!(g1 < g0);
    }

    #[test]
    fn normalized_integral_scales(a in weights(6), m in 1u32..=3, r in 1u32..=2, s in 0.1f64..10.0) {
        let scaled: Vec<f64> = a.iter().map(|x| x * s).collect();
        let e1 = normalized_rising_integral(&a, m, r, 1e-10).unwrap();
        let e2 = normalized_rising_integral(&scaled, m, r, 1e-10 / s.powi(r as i32)).unwrap();
        let want = e1.value / s.powi(r as i32);
        prop_assert!((e2.value - want).abs() <= e2.abs_error + e1.abs_error / s.powi(r as i32) + 1e-12 * want);
    }

    #[test]
    fn rescaled_weights_give_same_model(a in weights(5), s in 0.1f64..10.0, m in 1u32..=2) {
        let scaled: Vec<f64> = a.iter().map(|x| x * s).collect();
        let e1 = expectation(&CouponModel::from_probs(&a).unwrap(), m, 1e-9).unwrap();
        let e2 = expectation(&CouponModel::from_probs(&scaled).unwrap(), m, 1e-9).unwrap();
        prop_assert!((e1.value - e2.value).abs() <= 1e-8 * e1.value.max(1.0));
    }

    #[test]
    fn limit_laws_are_monotone(m in 1u32..=6, p in 0.0f64..3.0, y in -20.0f64..20.0, dy in 0.0f64..5.0) {
        let gumbel = Law::Gumbel { m };
        for law in [gumbel, Law::SlowDecayGumbel { m, p }] {
            prop_assert!(limit_cdf(&law, y + dy).unwrap() >= limit_cdf(&law, y).unwrap());
        }
        let shifted = gumbel_cdf(y + ln_factorial(m - 1), 1);
        let gap = (limit_cdf(&gumbel, y).unwrap() - shifted).abs();
        prop_assert!(gap < 1e-15);
    }

    #[test]
    fn lambda_strictly_decreasing(n in 10usize..400, m in 1u32..=3, y in -2.0f64..5.0, dy in 0.01f64..2.0) {
        let fam = SequenceFamily::Zipf { p: 0.5 };
        let model = build_model(&fam, n).unwrap();
        let z = gumbel_normalization(&fam, m, n).unwrap();
        let a = lambda_functional(&model, m, z.b, z.k, y).unwrap();
        let b = lambda_functional(&model, m, z.b, z.k, y + dy).unwrap();
        prop_assert!(b < a);
    }

    #[test]
    fn resharding_leaves_samples_unchanged(seed in any::<u64>(), shards in 1usize..9, n in 1usize..12, m in 1u32..=3) {
        let model = build_model(&SequenceFamily::Zipf { p: 0.7 }, n).unwrap();
        let a = run_mc(&model, m, 300, seed, 1).unwrap();
        let b = run_mc(&model, m, 300, seed, shards).unwrap();
        prop_assert_eq!(&a.raw, &b.raw);
        prop_assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        prop_assert_eq!(a.variance.to_bits(), b.variance.to_bits());
        prop_assert!(a.raw.iter().all(|&t| t >= m as u64 * n as u64));
    }

    #[test]
    fn ks_of_exact_quantiles(n in 1usize..500) {
        let xs: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let r = ks_statistic(&xs, |x| x, "uniform").unwrap();
        prop_assert!((r.statistic - 0.5 / n as f64).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&r.statistic));
    }
}

fn small_grid() -> Vec<Vec<f64>> {
    vec![vec![1.0], vec![0.5, 0.5], vec![1.0 / 3.0, 2.0 / 3.0], vec![0.2, 0.3, 0.5]]
}

#[test]
fn rising_moments_agree_with_exact_chain() {
    for p in small_grid() {
        let model = CouponModel::from_probs(&p).unwrap();
        for m in 1..=3 {
            let exact = exact_small(&model, m).unwrap();
            let r1 = rising_moment(&model, m, 1, 1e-9).unwrap();
            let r2 = rising_moment(&model, m, 2, 1e-9).unwrap();
            assert!((r1.value - exact.expectation).abs() <= r1.abs_error + 1e-12);
            assert!((r2.value - exact.second_rising).abs() <= r2.abs_error + 1e-11);
            for z in [1.5, 2.0, 4.0] {
                let g = mgf(&model, m, z, 1e-11).unwrap();
                assert!((g.value - exact.pgf_at(z).unwrap()).abs() <= g.abs_error + 1e-13);
            }
        }
    }
}

#[test]
fn expectation_grows_with_sets_and_coupons() {
    for fam in [SequenceFamily::Zipf { p: 0.5 }, SequenceFamily::Power { p: 1.0 }, SequenceFamily::Constant] {
        for n in 1..=4 {
            let model = build_model(&fam, n).unwrap();
            let bigger = build_model(&fam, n + 1).unwrap();
            for m in 1..=3 {
                let e = exact_small(&model, m).unwrap().expectation;
                let q = expectation(&model, m, 1e-9).unwrap().value;
                assert!((e - q).abs() < 1e-8);
                assert!(exact_small(&model, m + 1).unwrap().expectation > e);
                assert!(exact_small(&bigger, m).unwrap().expectation > e);
            }
        }
    }
}

#[test]
fn monte_carlo_agrees_with_exact_chain() {
    for (k, p) in small_grid().into_iter().enumerate() {
        let model = CouponModel::from_probs(&p).unwrap();
        for m in 1..=3 {
            let exact = exact_small(&model, m).unwrap();
            let d = run_mc(&model, m, 100_000, 1000 + k as u64 * 10 + m as u64, 4).unwrap();
            let sd = (exact.variance / 1e5).sqrt();
            assert!((d.mean - exact.expectation).abs() <= 4.0 * sd + 1e-12, "{p:?} m={m}");
        }
    }
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let fam = SequenceFamily::Zipf { p: 0.5 };
    for n in [10usize, 100] {
        let model = build_model(&fam, n).unwrap();
        for m in 1..=2 {
            let q = expectation(&model, m, 1e-6).unwrap();
            let d = run_mc(&model, m, 20_000, 77 + n as u64 + m as u64, 4).unwrap();
            let bound = 4.0 * (d.variance / 20_000.0).sqrt() + q.abs_error;
            assert!((d.mean - q.value).abs() <= bound, "n={n} m={m}: {} vs {}", d.mean, q.value);
        }
    }
}
