use coupled_entropy::algebra::CouplingContext;
use coupled_entropy::distributions::CoupledDistribution;
use coupled_entropy::escort::*;
use proptest::collection::vec;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn escort_is_normalized(w in vec(0f64..1.0, 1..40), q in 0f64..6.0) {
        prop_assume!(w.iter().any(|&x| x > 1e-6));
        let p = DiscreteDist::from_weights(w, 1).unwrap();
        let e = escort_discrete(&p, q).unwrap();
        prop_assert!((e.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn uniform_is_escort_fixed_point(n in 1usize..100, q in 0f64..6.0) {
        let u = DiscreteDist::uniform(n, 1).unwrap();
        let e = escort_discrete(&u, q).unwrap();
        for (a, b) in e.probs().iter().zip(u.probs()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }
}

#[test]
fn gpd_ie_mean_is_scale() {
    for k in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
        let d = CoupledDistribution::exponential(0.0, 0.8, k).unwrap();
        assert!((ie_moment(&d, 1).unwrap() - 0.8).abs() <= 1e-6, "k={k}");
    }
}

#[test]
fn empirical_ie_moments_converge() {
    let cases = [
        (CoupledDistribution::exponential(0.0, 1.0, 0.5).unwrap(), 1, 1.0),
        (CoupledDistribution::gaussian(0.0, 1.0, 0.5).unwrap(), 2, 2.0),
        (CoupledDistribution::weibull(0.0, 1.0, 0.3).unwrap(), 1, 2.0),
    ];
    for (d, m, alpha) in cases {
        let exact = ie_moment(&d, m).unwrap();
        let ctx = CouplingContext::new(d.kappa(), alpha, 1).unwrap();
        let err = |n: usize| {
            // average over a few seeds so that one lucky small sample cannot win
            (0..4u64)
                .map(|s| (ie_moment_empirical(&d.sample(n, 100 + s).unwrap(), &d, m, &ctx).unwrap() - exact).abs())
                .sum::<f64>()
        };
        let (small, large) = (err(10_000), err(100_000));
        assert!(large < small, "{:?}: {small} -> {large}", d.family());
    }
}
