//! Property tests over the public API.

use aci_core::algorithms::{convex_combination, is_active, pinball, pinball_subgradient, saocp_lifetime, Aci, SfOgd};
use aci_core::constructors::{empirical_quantile, quantile_interval, quantile_radius, NonconformityScoreStore};
use aci_core::metrics::{best_fixed_theta, cumulative_loss, regret, strongly_adaptive_regret};
use aci_core::{run_stream, ConstructorKind, IntervalConstructor, TargetLevel};
use proptest::prelude::*;

fn level() -> impl Strategy<Value = TargetLevel> {
    (0.02f64..0.98).prop_map(|a| TargetLevel::new(a).unwrap())
}

proptest! {
    #[test]
    fn pinball_is_nonnegative_and_convex(theta in -5.0f64..5.0, other in -5.0f64..5.0, r in 0.0f64..5.0, a in level()) {
        prop_assert!(pinball(theta, r, a) >= 0.0);
        let mid = 0.5 * (theta + other);
        prop_assert!(pinball(mid, r, a) <= 0.5 * (pinball(theta, r, a) + pinball(other, r, a)) + 1e-12);
    }

    #[test]
    fn subgradient_inequality(theta in -5.0f64..5.0, other in -5.0f64..5.0, r in 0.0f64..5.0, a in level()) {
        let g = pinball_subgradient(r > theta, a);
        prop_assert!(pinball(other, r, a) >= pinball(theta, r, a) + g * (other - theta) - 1e-12);
    }

    #[test]
    fn aci_long_run_coverage(ys in prop::collection::vec(-3.0f64..3.0, 50..400), gamma in 0.01f64..1.0, a in level()) {
        let t = ys.len() as f64;
        let mut aci = Aci::new(a, gamma, a.get(), IntervalConstructor::new(ConstructorKind::Quantile));
        let steps = run_stream(&mut aci, ys.iter().map(|y| (0.0, *y))).unwrap();
        let covered = steps.iter().filter(|s| s.covered()).count() as f64;
        let d = 2.0 + 1e-9;
        prop_assert!((covered / t - a.get()).abs() <= (d + gamma) / (gamma * t));
    }

    #[test]
    fn quantile_matches_sort(scores in prop::collection::vec(0.0f64..10.0, 1..40), theta in -0.2f64..1.2) {
        let store = NonconformityScoreStore::from_scores(scores.clone());
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let want = if theta <= 0.0 {
            f64::NEG_INFINITY
        } else if theta > 1.0 {
            f64::INFINITY
        } else {
            let k = (1..=n).find(|&k| k as f64 / n as f64 >= theta).unwrap();
            sorted[k - 1]
        };
        prop_assert_eq!(empirical_quantile(theta, &store), want);
    }

    #[test]
    fn quantile_radius_is_smallest_covering_level(
        scores in prop::collection::vec(0.0f64..3.0, 1..30),
        mu in -1.0f64..1.0,
        resid in -4.0f64..4.0,
    ) {
        let store = NonconformityScoreStore::from_scores(scores.clone());
        let n = scores.len();
        let y = mu + resid;
        let r = quantile_radius(mu, y, &store);
        let covers = |theta: f64| quantile_interval(mu, theta, &store).contains(y);
        prop_assert!(covers(r));
        if r <= 1.0 {
            let below = (r * n as f64).round() as usize;
            if below > 0 {
                prop_assert!(!covers((below - 1) as f64 / n as f64));
            }
        } else {
            prop_assert!(!covers(1.0));
        }
    }

    #[test]
    fn best_fixed_beats_every_radius(radii in prop::collection::vec(0.0f64..5.0, 1..60), a in level()) {
        let (theta, loss) = best_fixed_theta(&radii, a).unwrap();
        prop_assert!((cumulative_loss(theta, &radii, a) - loss).abs() < 1e-9);
        for r in &radii {
            prop_assert!(loss <= cumulative_loss(*r, &radii, a) + 1e-9);
        }
    }

    #[test]
    fn sa_regret_dominates_prefix_windows(
        pairs in prop::collection::vec((-1.0f64..2.0, 0.0f64..1.0), 2..40),
        a in level(),
    ) {
        let (thetas, radii): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let n = thetas.len();
        prop_assert_eq!(strongly_adaptive_regret(&thetas, &radii, a, n).unwrap(), regret(&thetas, &radii, a).unwrap());
        let m = n / 2 + 1;
        let sa = strongly_adaptive_regret(&thetas, &radii, a, m).unwrap();
        for start in 0..=n - m {
            let r = regret(&thetas[start..start + m], &radii[start..start + m], a).unwrap();
            prop_assert!(sa >= r - 1e-12);
        }
    }

    #[test]
    fn convex_combination_stays_in_hull(
        values in prop::collection::vec(-10.0f64..10.0, 1..10),
        raw in prop::collection::vec(0.0f64..1.0, 10),
    ) {
        let w: Vec<f64> = raw[..values.len()].iter().map(|w| w + 1e-6).collect();
        let c = convex_combination(&values, &w);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(c >= lo && c <= hi);
    }

    #[test]
    fn sfogd_is_translation_free_in_prediction(ys in prop::collection::vec(-2.0f64..2.0, 10..100), shift in -5.0f64..5.0) {
        let make = || SfOgd::new(TargetLevel::new(0.9).unwrap(), 0.5, 0.1, IntervalConstructor::new(ConstructorKind::Linear));
        let mut a = make();
        let mut b = make();
        let sa = run_stream(&mut a, ys.iter().map(|y| (0.0, *y))).unwrap();
        let sb = run_stream(&mut b, ys.iter().map(|y| (shift, shift + *y))).unwrap();
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert_eq!(x.theta, y.theta);
            prop_assert_eq!(x.err, y.err);
        }
    }

    #[test]
    fn lifetime_matches_activity(birth in 1usize..3000, t in 1usize..6000, g in 1usize..20) {
        let brute = t >= birth && t - birth < saocp_lifetime(birth, g);
        prop_assert_eq!(is_active(birth, t, g), brute);
    }
}
