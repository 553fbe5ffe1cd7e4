use proptest::prelude::*;

use perflaw::calibration::{fit, infer_gamma, FitSample};
use perflaw::law::{
    adjust_high_score, predict_dense, unstable_discount, DenseArch, RegressionWeights, TrainingSpec,
};
use perflaw::planner::{search_architectures, GridRange, SearchConstraints};

const W: RegressionWeights = RegressionWeights::PUBLISHED;

prop_compose! {
    fn dense_arch()(n in 1u32..=160, h_blocks in 2u32..=128, ratio in 1.0f64..5.0, s in 0.1f64..600.0)
        -> DenseArch {
        let h = h_blocks * 128;
        let d = ((h as f64) * ratio) as u32;
        DenseArch::new(n, h, d, s).unwrap()
    }
}

proptest! {
    #[test]
    fn discount_in_unit_interval(arch in dense_arch(), gamma in 0.0f64..5.0) {
        let u = unstable_discount(&arch.with_gamma(gamma)).unwrap();
        prop_assert!((0.0..=1.0).contains(&u));
        if gamma == 0.0 {
            prop_assert_eq!(u, 1.0);
        }
    }

    #[test]
    fn discount_monotone_in_gamma(arch in dense_arch(), g in 0.01f64..3.0, dg in 0.01f64..1.0) {
        let lo = unstable_discount(&arch.with_gamma(g)).unwrap();
        let hi = unstable_discount(&arch.with_gamma(g + dg)).unwrap();
        prop_assert!(hi <= lo);
        if lo > 1e-300 && lo < 1.0 {
            prop_assert!(hi < lo);
        }
    }

    #[test]
    fn score_monotone_in_tokens(arch in dense_arch(), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let (t1, t2) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(t2 - t1 > 1e-6);
        let cap = arch.param_count;
        let score = |t: f64| predict_dense(&arch, &TrainingSpec::new(t).unwrap(), &W).map(|p| p.raw_score);
        if let (Ok(lo), Ok(hi)) = (score(t1 * cap), score(t2 * cap)) {
            prop_assert!(hi > lo);
            prop_assert_eq!(score(cap * 3.0).unwrap(), score(cap).unwrap());
        }
    }

    #[test]
    fn adjustment_is_monotone_and_bounded(x in -50.0f64..500.0, dx in 0.0f64..10.0) {
        let (a, b) = (adjust_high_score(x), adjust_high_score(x + dx));
        prop_assert!(b >= a);
        prop_assert!(a <= 100.0);
        if x <= 90.0 {
            prop_assert_eq!(a, x);
        }
    }

    #[test]
    fn gamma_inference_inverts_prediction(arch in dense_arch(), t in 0.05f64..20.0, gamma in 0.0f64..3.0) {
        let train = TrainingSpec::new(t).unwrap();
        if let Ok(p) = predict_dense(&arch.with_gamma(gamma), &train, &W) {
            prop_assume!(p.raw_score < 90.0);
            let est = infer_gamma(&arch, &train, &W, p.raw_score).unwrap();
            prop_assert!(est.feasible);
            prop_assert!((est.gamma.unwrap() - gamma).abs() < 1e-6);
        }
    }

    #[test]
    fn fit_recovers_arbitrary_weights(
        slopes in prop::array::uniform4(-20.0f64..20.0),
        b in -50.0f64..50.0,
        seed in 0u64..1000,
    ) {
        let truth = RegressionWeights::from_slopes(slopes, b);
        let samples = synthetic(&truth, seed, |i| 1.0 + (i % 4) as f64);
        let got = fit(&samples).unwrap().weights;
        for (g, w) in got.slopes().iter().zip(truth.slopes()) {
            prop_assert!((g - w).abs() < 1e-6, "{g} vs {w}");
        }
        prop_assert!((got.b - truth.b).abs() < 1e-6);
    }

    #[test]
    fn doubling_weights_leaves_fit_unchanged(seed in 0u64..1000, noise in 0.1f64..3.0) {
        let truth = RegressionWeights::PUBLISHED;
        let mut samples = synthetic(&truth, seed, |i| 0.5 + (i % 5) as f64);
        for (i, s) in samples.iter_mut().enumerate() {
            s.target += noise * ((i * 7919 % 13) as f64 - 6.0) / 6.0;
        }
        let once = fit(&samples).unwrap().weights;
        for s in samples.iter_mut() {
            s.weight *= 2.0;
        }
        let twice = fit(&samples).unwrap().weights;
        for (a, b) in once.slopes().iter().zip(twice.slopes()) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn search_respects_budget(budget in 1.0f64..80.0) {
        let c = SearchConstraints {
            max_params: budget,
            token_budget: 10.0,
            gamma: 1.0,
            layers: GridRange::new(8, 96, 8),
            hidden: GridRange::new(1024, 8192, 1024),
            ffn: GridRange::new(2048, 28672, 2048),
            vocab_size: None,
            moe: None,
        };
        if let Ok(hits) = search_architectures(&c, &W, 20) {
            for h in hits {
                prop_assert!(h.estimated_params <= budget);
            }
        }
    }
}

/// Noiseless samples on a spread of realistic feature vectors.
fn synthetic(truth: &RegressionWeights, seed: u64, weight: impl Fn(usize) -> f64) -> Vec<FitSample> {
    (0..24)
        .map(|i| {
            let k = (i as u64).wrapping_mul(6364136223846793005).wrapping_add(seed) % 1000;
            let x = k as f64 / 1000.0;
            let features = [
                2.5 + 2.3 * x + 0.1 * (i as f64).sin(),
                7.0 + 2.5 * ((i * 3 % 7) as f64 / 7.0),
                8.0 + 3.0 * ((i * 5 % 11) as f64 / 11.0),
                -1.0 + 4.0 * ((i * 7 % 13) as f64 / 13.0) + 0.05 * x,
            ];
            let mut s = FitSample {
                features,
                target: 0.0,
                weight: weight(i),
            };
            s.target = s.predict(truth);
            s
        })
        .collect()
}
