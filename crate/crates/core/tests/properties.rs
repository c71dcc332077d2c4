use proptest::prelude::*;

use softbound_core::metrics::{aggregate, auc, ise, MetricTrace, TracePoint};
use softbound_core::preference::{plackett_luce_likelihood, BoundsPosterior, FeedbackEvent, FeedbackKind, PreferenceConfig};
use softbound_core::query::{sparsify, submodular_value, CoverageInstance};
use softbound_core::sensitivity::expected_improvement;
use softbound_core::shf::{
    scalarize, shf_utility, utility_ratio, ReferenceScale, Scalarizer, ShfParams, SoftHardBounds,
};

fn params() -> impl Strategy<Value = ShfParams> {
    (0.0..=1.0f64, 1.05..4.0f64).prop_map(|(beta, zeta)| ShfParams {
        beta,
        zeta,
        ..ShfParams::default()
    })
}

fn bound_pair() -> impl Strategy<Value = (f64, f64)> {
    (0.0..0.9f64, 0.01..1.0f64).prop_map(|(h, gap)| (h, (h + gap * (1.0 - h)).max(h + 1e-3)))
}

fn simplex(l: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, l).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    })
}

fn trace(values: Vec<f64>) -> MetricTrace {
    let points = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| TracePoint {
            unit: i as u32 + 1,
            utility_ratio: v,
        })
        .collect();
    MetricTrace::new("m", 0, points).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shf_is_nondecreasing(p in params(), (h, s) in bound_pair(), a in -0.5..3.0f64, b in -0.5..3.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(shf_utility(lo, h, s, &p).unwrap() <= shf_utility(hi, h, s, &p).unwrap());
    }

    #[test]
    fn shf_is_continuous_above_the_hard_bound(p in params(), (h, s) in bound_pair()) {
        let tau = h + p.zeta * (s - h);
        for edge in [s, tau] {
            let l = shf_utility(edge - 1e-12, h, s, &p).unwrap();
            let r = shf_utility(edge + 1e-12, h, s, &p).unwrap();
            prop_assert!((l - r).abs() < 1e-9, "jump at {}: {} vs {}", edge, l, r);
        }
    }

    #[test]
    fn scalarize_drops_as_a_deviation_grows(
        lambda in simplex(3),
        u in prop::collection::vec(0.0..1.25f64, 3),
        i in 0usize..3,
        step in 0.0..0.5f64,
    ) {
        let s = Scalarizer::new(lambda, &ShfParams::default(), 0.05).unwrap();
        let mut worse = u.clone();
        worse[i] -= step;
        prop_assert!(scalarize(&worse, &s) <= scalarize(&u, &s));
    }

    #[test]
    fn ratio_stays_in_unit_interval(
        lambda in simplex(2),
        reference in prop::collection::vec(prop::collection::vec(0.0..1.25f64, 2), 2..20),
        candidates in prop::collection::vec(prop::collection::vec(-0.5..1.25f64, 2), 0..6),
    ) {
        let s = Scalarizer::new(lambda, &ShfParams::default(), 0.05).unwrap();
        let values = reference.iter().map(|u| scalarize(u, &s));
        let Some(scale) = ReferenceScale::from_values(values, s.utility_floor) else {
            return Ok(());
        };
        if scale.shifted_best() <= 0.0 {
            return Ok(());
        }
        let r = utility_ratio(&candidates, &scale, &s).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        let all = utility_ratio(&reference, &scale, &s).unwrap();
        prop_assert!((all - 1.0).abs() < 1e-12);
    }

    #[test]
    fn best_point_survives_a_constant_shift(values in prop::collection::vec(-2.0..0.0f64, 1..12), c in -5.0..5.0f64) {
        let argmax = |v: &[f64]| (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
        let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
        prop_assert_eq!(argmax(&values), argmax(&shifted));
    }

    #[test]
    fn plackett_luce_ignores_shifts(u in prop::collection::vec(-3.0..3.0f64, 2..6), c in -40.0..40.0f64) {
        let ranking: Vec<usize> = (0..u.len()).rev().collect();
        let shifted: Vec<f64> = u.iter().map(|v| v + c).collect();
        let a = plackett_luce_likelihood(&u, &ranking);
        let b = plackett_luce_likelihood(&shifted, &ranking);
        prop_assert!((a - b).abs() < 1e-10);
        prop_assert!(a > 0.0 && a <= 1.0);
    }

    #[test]
    fn bound_updates_keep_hard_below_soft(
        soft in prop::collection::vec(0.3..1.0f64, 2),
        gaps in prop::collection::vec(0.05..0.3f64, 2),
        dim in 0usize..2,
        kind in prop::sample::select(vec![FeedbackKind::HardTightened, FeedbackKind::HardRelaxed, FeedbackKind::SoftAdjusted]),
        new in 0.0..1.0f64,
    ) {
        let hard: Vec<f64> = soft.iter().zip(&gaps).map(|(s, g)| s - g).collect();
        let config = PreferenceConfig::default();
        let prior = SoftHardBounds::new(soft, hard).unwrap();
        let post = BoundsPosterior::new(&prior, config.bound_prior_variance);
        let event = FeedbackEvent::bound(kind, dim, 0.5, new, 2);
        let next = post.update(&event, &config).unwrap().means();
        for l in 0..2 {
            prop_assert!(next.hard()[l] + config.min_bound_gap <= next.soft()[l] + 1e-12);
            prop_assert!((0.0..=1.0).contains(&next.hard()[l]) && (0.0..=1.0).contains(&next.soft()[l]));
        }
    }

    #[test]
    fn ei_grows_with_mean_and_spread(m in -2.0..2.0f64, s in 0.01..2.0f64, inc in -2.0..2.0f64, dm in 0.0..1.0f64, ds in 0.0..1.0f64) {
        let base = expected_improvement(m, s, inc);
        prop_assert!(base >= 0.0);
        prop_assert!(expected_improvement(m + dm, s, inc) >= base - 1e-12);
        prop_assert!(expected_improvement(m, s + ds, inc) >= base - 1e-12);
        prop_assert!(base >= (m - inc).max(0.0) - 1e-12);
    }

    #[test]
    fn coverage_is_monotone_and_submodular(
        lambda in simplex(2),
        d in prop::collection::vec(prop::collection::vec(0.0..1.25f64, 2), 3..10),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 4),
    ) {
        let s = Scalarizer::new(lambda, &ShfParams::default(), 0.05).unwrap();
        let pick = |i: usize| d[picks[i].index(d.len())].clone();
        let c = vec![pick(0)];
        let c1 = vec![pick(0), pick(1)];
        let f = |set: &[Vec<f64>]| submodular_value(set, &d, &s);
        prop_assert!(f(&c) <= f(&c1) + 1e-12);
        let x = pick(2);
        let gain_small = f(&[c.clone(), vec![x.clone()]].concat()) - f(&c);
        let gain_large = f(&[c1.clone(), vec![x]].concat()) - f(&c1);
        prop_assert!(gain_small >= gain_large - 1e-12);
    }

    #[test]
    fn sparse_cover_respects_its_budget(
        scores in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 8), 1..5),
        k in 1usize..4,
    ) {
        let instance = CoverageInstance::new(scores).unwrap();
        let sel = sparsify(&instance, k).unwrap();
        prop_assert!(sel.indices.len() as f64 <= instance.psi() * k as f64 + 1e-9 || sel.indices.len() == 1);
    }

    #[test]
    fn auc_respects_pointwise_dominance(pairs in prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64), 2..12)) {
        let hi: Vec<f64> = pairs.iter().map(|(a, b)| a.max(*b)).collect();
        let lo: Vec<f64> = pairs.iter().map(|(a, b)| a.min(*b)).collect();
        prop_assert!(auc(&trace(hi)).unwrap() >= auc(&trace(lo)).unwrap());
    }

    #[test]
    fn aggregation_ignores_seed_order(
        runs in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 5), 2..6),
        rotate in 0usize..6,
    ) {
        let traces: Vec<MetricTrace> = runs
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut t = trace(v.clone());
                t.seed = i as u64;
                t
            })
            .collect();
        let mut shuffled = traces.clone();
        let n = shuffled.len();
        shuffled.rotate_left(rotate % n);
        let a = aggregate(&traces).unwrap();
        let b = aggregate(&shuffled).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.unit, y.unit);
            prop_assert!((x.mean - y.mean).abs() < 1e-12 && (x.se - y.se).abs() < 1e-12);
        }
    }

    #[test]
    fn ise_lies_in_unit_interval(flags in prop::collection::vec(any::<bool>(), 1..15)) {
        match ise(&flags) {
            Ok(v) => prop_assert!(v > 0.0 && v <= 1.0),
            Err(_) => prop_assert!(flags.iter().all(|f| !f)),
        }
    }
}
