mod oracle;

use oracle::Q;
use pauc_push::roc::{
    logistic_losses, pauc_estimate, pnorm_push_loss, roc_curve, zero_one_push_loss, PaucSpec,
    TiePolicy,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TS: [(i64, i64); 4] = [(1, 10), (1, 5), (1, 2), (1, 1)];

fn t_pair(i: usize) -> (f64, Q) {
    let (a, b) = TS[i];
    (a as f64 / b as f64, Q::new(a, b))
}

#[test]
fn strict_estimate_matches_pair_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..500 {
        let (scores, labels) = oracle::random_scores(&mut rng, 20);
        let (t, tq) = t_pair(case % 4);
        let got = pauc_estimate(&scores, &labels, &PaucSpec::strict(t).unwrap())
            .unwrap()
            .value;
        assert_eq!(
            got,
            oracle::pauc_strict(&scores, &labels, tq),
            "case {case}: {scores:?} {labels:?}"
        );
    }
}

#[test]
fn half_credit_estimate_matches_roc_area() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut straddles = 0;
    for case in 0..500 {
        let (scores, labels) = oracle::random_scores(&mut rng, 20);
        let (t, tq) = t_pair(case % 4);
        let r = pauc_estimate(&scores, &labels, &PaucSpec::half_credit(t).unwrap()).unwrap();
        assert_eq!(
            r.value,
            oracle::pauc_roc_area(&scores, &labels, tq),
            "case {case}"
        );
        if r.threshold_ties() {
            straddles += 1;
        } else {
            // without a tie block across the threshold it is the pair sum
            assert_eq!(
                r.value,
                oracle::pauc_half_pairs(&scores, &labels, tq),
                "case {case}"
            );
        }
    }
    assert!(straddles > 20, "generator should exercise threshold ties");
}

#[test]
fn full_range_equals_mann_whitney() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (scores, labels) = oracle::random_scores(&mut rng, 20);
        let mw = oracle::mann_whitney_auc(&scores, &labels);
        let p = pauc_estimate(&scores, &labels, &PaucSpec::half_credit(1.0).unwrap())
            .unwrap()
            .value;
        let auc = roc_curve(&scores, &labels).unwrap().auc;
        assert!((p - mw).abs() <= 1e-12);
        assert!((auc - mw).abs() <= 1e-12);
    }
}

#[test]
fn roc_curve_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let (scores, labels) = oracle::random_scores(&mut rng, 15);
        let r = roc_curve(&scores, &labels).unwrap();
        assert_eq!(r.points[0], (0.0, 0.0));
        assert_eq!(*r.points.last().unwrap(), (1.0, 1.0));
        for w in r.points.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }
}

fn scores_and_labels() -> impl Strategy<Value = (Vec<f64>, Vec<i8>)> {
    (1usize..15, 1usize..15).prop_flat_map(|(j, k)| {
        (
            prop::collection::vec((-8i32..8).prop_map(|v| v as f64 * 0.25), j + k),
            Just(j),
            Just(k),
        )
            .prop_map(|(s, j, k)| (s, [vec![1i8; j], vec![-1i8; k]].concat()))
    })
}

proptest! {
    #[test]
    fn value_in_range_and_monotone_in_t((scores, labels) in scores_and_labels(), policy in prop_oneof![Just(TiePolicy::Strict), Just(TiePolicy::HalfCredit)]) {
        let mut prev = 0.0;
        for i in 1..=20 {
            let t = i as f64 / 20.0;
            let v = pauc_estimate(&scores, &labels, &PaucSpec::new(t, policy).unwrap()).unwrap().value;
            prop_assert!(v >= 0.0 && v <= t + 1e-15);
            prop_assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn rank_invariance((scores, labels) in scores_and_labels(), t in 0.05f64..1.0, p in 1.0f64..4.0) {
        let transformed: Vec<f64> = scores.iter().map(|&s| (0.7 * s).exp() * 3.0 - 11.0).collect();
        for policy in [TiePolicy::Strict, TiePolicy::HalfCredit] {
            let spec = PaucSpec::new(t, policy).unwrap();
            prop_assert_eq!(
                pauc_estimate(&scores, &labels, &spec).unwrap().value,
                pauc_estimate(&transformed, &labels, &spec).unwrap().value
            );
            prop_assert_eq!(
                zero_one_push_loss(&scores, &labels, &spec).unwrap(),
                zero_one_push_loss(&transformed, &labels, &spec).unwrap()
            );
        }
        prop_assert_eq!(
            pnorm_push_loss(&scores, &labels, p).unwrap(),
            pnorm_push_loss(&transformed, &labels, p).unwrap()
        );
    }

    #[test]
    fn pauc_gain_never_raises_push_loss(
        base in prop::collection::vec(-3.0f64..3.0, 24),
        noise in prop::collection::vec(-0.5f64..0.5, 24),
        t in 0.1f64..1.0,
    ) {
        let labels = [vec![1i8; 12], vec![-1i8; 12]].concat();
        let perturbed: Vec<f64> = base.iter().zip(&noise).map(|(a, b)| a + b).collect();
        let spec = PaucSpec::strict(t).unwrap();
        let d_pauc = pauc_estimate(&perturbed, &labels, &spec).unwrap().value
            - pauc_estimate(&base, &labels, &spec).unwrap().value;
        let d_loss = zero_one_push_loss(&perturbed, &labels, &spec).unwrap() as i64
            - zero_one_push_loss(&base, &labels, &spec).unwrap() as i64;
        if d_pauc > 0.0 {
            prop_assert!(d_loss <= 0);
        }
    }

    #[test]
    fn logistic_upper_bounds_zero_one(
        scores in prop::collection::vec(-20.0f64..20.0, 1..40),
        w in 1.0f64..30.0,
        seed in any::<u64>(),
    ) {
        let labels: Vec<i8> = (0..scores.len()).map(|i| if (seed >> (i % 64)) & 1 == 1 { 1 } else { -1 }).collect();
        let l = logistic_losses(&scores, &labels, w).unwrap();
        prop_assert!(l.logistic / std::f64::consts::LN_2 >= l.zero_one);
    }
}
