use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssl_rate_lab::bounds::{kl_two_point, le_cam_two_point_floor, pi_c_sl_floor, pinsker_tv_bound, rich_family_floor};
use ssl_rate_lab::eval::exact::ExactEngine;
use ssl_rate_lab::eval::minimax::{bayes_test_error, bayes_test_minimax_lower_bound};
use ssl_rate_lab::learners::{erm_learner, majority_count_learner, SharedLearner};
use ssl_rate_lab::mixture::{mixture_exact_risk, Component, MixtureProblem};
use ssl_rate_lab::problem::{HypothesisClass, RichFamilyParams, Sign, TwoPointParams};
use ssl_rate_lab::verify::oracle::{mixture_risk_bruteforce, tv_bruteforce};

#[test]
fn single_draw_tv_respects_pinsker() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (a, b) = (rng.gen_range(0.001..0.499), rng.gen_range(0.001..0.499));
        let p = TwoPointParams::new(a, b, Sign::Plus).unwrap();
        let tv = tv_bruteforce(&p.to_distribution(), &p.flipped().to_distribution(), 1, 0).unwrap();
        assert!(tv <= pinsker_tv_bound(kl_two_point(a, b, 1, 0).unwrap()) + 1e-15);
    }
}

#[test]
fn le_cam_floor_is_below_the_exact_test_error() {
    let e = ExactEngine::default();
    for &a in &[0.005, 0.02, 0.08, 0.2] {
        for &b in &[0.005, 0.02, 0.08, 0.2] {
            let p = TwoPointParams::new(a, b, Sign::Plus).unwrap();
            for (ell, u) in [(1, 0), (8, 8), (32, 0), (16, 256)] {
                let err = bayes_test_error(&e, &p.to_distribution(), &p.flipped().to_distribution(), ell, u).unwrap();
                assert!(le_cam_two_point_floor(a, b, ell, u) <= err + 1e-15, "({a}, {b}) at ({ell}, {u})");
            }
        }
    }
}

#[test]
fn pi_c_floor_is_consistent_with_exact_testing() {
    let e = ExactEngine::default();
    let class = HypothesisClass::two_point();
    for &c in &[0.02, 0.05, 0.1, 0.2] {
        for &ell in &[4u64, 8, 16, 32, 64] {
            let p = TwoPointParams::new(c, c, Sign::Plus).unwrap();
            let exact =
                bayes_test_minimax_lower_bound(&e, &p.to_distribution(), &p.flipped().to_distribution(), &class, ell, 0)
                    .unwrap();
            let floor = pi_c_sl_floor(c, ell).unwrap();
            assert!(exact >= floor, "c = {c}, ell = {ell}: {exact} < {floor}");
        }
    }
}

#[test]
fn rich_floor_is_below_the_exact_rich_test() {
    let e = ExactEngine::default();
    for &(c, cp) in &[(1.0, 1.0), (0.5, 0.4), (0.3, 0.05)] {
        for &ell in &[2u64, 4, 8, 16] {
            let rich = RichFamilyParams::new(c, cp, RichFamilyParams::proof_alpha(c, ell)).unwrap();
            let (p, m) = rich.pair();
            let exact = bayes_test_minimax_lower_bound(&e, &p, &m, &rich.class(), ell, 0).unwrap();
            let floor = rich_family_floor(c, cp, ell).unwrap();
            assert!(exact >= floor * (1.0 - 1e-12), "({c}, {cp}) at {ell}: {exact} < {floor}");
        }
    }
}

fn finite(a: f64, b: f64, sign: Sign, learner: SharedLearner) -> Component {
    Component::Finite { dist: TwoPointParams::new(a, b, sign).unwrap().to_distribution(), learner }
}

#[test]
fn mixture_engine_matches_raw_sequence_oracle() {
    let e = ExactEngine::default();
    let erm = erm_learner(HypothesisClass::two_point()).unwrap();
    let cases = [
        (finite(0.1, 0.2, Sign::Plus, majority_count_learner()), finite(0.3, 0.05, Sign::Minus, erm.clone())),
        (finite(0.25, 0.25, Sign::Minus, erm.clone()), finite(0.05, 0.4, Sign::Plus, majority_count_learner())),
    ];
    for (a, b) in cases {
        let (Component::Finite { dist: pa, learner: la }, Component::Finite { dist: pb, learner: lb }) = (&a, &b) else {
            unreachable!()
        };
        for (ell, u) in [(1, 0), (2, 1), (3, 2), (2, 3)] {
            let brute = mixture_risk_bruteforce(pa, la.as_ref(), pb, lb.as_ref(), ell, u).unwrap();
            let mix = MixtureProblem { a: a.clone(), b: b.clone() };
            let exact = mixture_exact_risk(&e, &mix, ell, u).unwrap();
            assert!((brute - exact).abs() <= 1e-14, "({ell}, {u}): {brute} vs {exact}");
        }
    }
}
