//! Property tests for the invariants of channels, maps, witnesses and
//! verdicts. Random matrices are drawn from a ChaCha stream seeded by
//! proptest, so shrinking acts on the seed.

mod common;

use backflow::certify::perpendicular_increase;
use backflow::channels::generalized_classical_channel;
use backflow::classify;
use backflow::dynamics::{constant_unitary, mix};
use backflow::numerics::{c, kron, max_abs, CMatrix, RMatrix3};
use backflow::sampling;
use backflow::verdict::PointMargin;
use backflow::witness::{self, TwoQubitBloch};
use backflow::{
    BlochAffine, Channel, DynamicalMap, MixtureComponent, MixtureSpec, Status, TimeGrid, Verdict,
};
use common::Family;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn grid() -> TimeGrid {
    TimeGrid::new(0.0, 2.0, 21).unwrap()
}

fn status_strategy() -> impl Strategy<Value = Status> {
    prop_oneof![
        Just(Status::Pass),
        Just(Status::Fail),
        Just(Status::Indeterminate)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn mixing_commutes_with_application(seed in any::<u64>(), w in proptest::collection::vec(0.05f64..1.0, 1..4)) {
        let mut r = rng(seed);
        let total: f64 = w.iter().sum();
        let weights: Vec<f64> = w.iter().map(|x| x / total).collect();
        let d = 2 + (seed % 2) as usize;
        let channels: Vec<Channel> = weights.iter().map(|_| sampling::random_channel(&mut r, d)).collect();
        let comps = channels.iter().map(|ch| MixtureComponent::new(DynamicalMap::constant(ch.clone(), grid()))).collect();
        let mixed = mix(&MixtureSpec::new(weights.clone(), comps).unwrap()).unwrap().at(1.0).unwrap();
        let rho = sampling::random_state(&mut r, d);
        let mut expected = CMatrix::zeros(d, d);
        for (p, ch) in weights.iter().zip(&channels) {
            expected += ch.apply(&rho).unwrap() * c(*p, 0.0);
        }
        prop_assert!(max_abs(&(mixed.apply(&rho).unwrap() - expected)) < 1e-12);
    }

    #[test]
    fn choi_and_bloch_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ch = sampling::random_channel(&mut r, 2);
        let back = ch.bloch().unwrap().to_channel().unwrap();
        prop_assert!(max_abs(&(back.choi() - ch.choi())) < 1e-12);
        let from_choi = Channel::from_choi(ch.choi().clone()).unwrap();
        prop_assert!(max_abs(&(from_choi.superoperator() - ch.superoperator())) < 1e-12);
        let state = witness::choi_state(&ch).unwrap();
        prop_assert!(max_abs(&(state.to_density() - witness::choi_density(&ch))) < 1e-12);
        let again = TwoQubitBloch::from_density(&state.to_density()).unwrap();
        prop_assert!((again.t - state.t).amax() < 1e-12 && (again.s - state.s).amax() < 1e-12);
    }

    #[test]
    fn witness_is_local_unitary_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rho = witness::choi_density(&sampling::random_channel(&mut r, 2));
        let u = kron(&sampling::random_unitary(&mut r, 2), &sampling::random_unitary(&mut r, 2));
        let rotated = &u * &rho * u.adjoint();
        let x0 = witness::x_functional(&TwoQubitBloch::from_density(&rho).unwrap()).unwrap();
        let x1 = witness::x_functional(&TwoQubitBloch::from_density(&rotated).unwrap()).unwrap();
        prop_assert!((x0 - x1).abs() < 1e-10);
    }

    #[test]
    fn generalized_classical_channels_are_not_refuted(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = sampling::random_stochastic(&mut r, 2);
        let basis = sampling::random_basis(&mut r, 2);
        let ch = generalized_classical_channel(&m, &basis, &sampling::random_unitary(&mut r, 2)).unwrap();
        let x = witness::x_functional(&witness::choi_state(&ch).unwrap()).unwrap();
        prop_assert!(x <= 1.0 + 1e-10, "X = {}", x);
    }

    #[test]
    fn elementary_margin_ignores_output_frame(seed in any::<u64>()) {
        let mut r = rng(seed);
        let fam = Family::random(&mut r, seed % 2 == 0, true);
        let map = fam.map(grid());
        let basis = sampling::random_basis(&mut r, 2);
        let rotated = map.conjugated(&constant_unitary(sampling::random_unitary(&mut r, 2))).unwrap();
        let v0 = classify::check_elementary(&map, &basis, &Default::default()).unwrap();
        let v1 = classify::check_elementary(&rotated, &basis, &Default::default()).unwrap();
        prop_assert!((v0.margin - v1.margin).abs() < 1e-8, "{} vs {}", v0.margin, v1.margin);
        prop_assert_eq!(v0.status, v1.status);
    }

    #[test]
    fn perpendicular_increase_is_antipodal(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = RMatrix3::from_fn(|_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
        let delta = a + a.transpose();
        let n = sampling::random_unit_vector(&mut r);
        prop_assert!((perpendicular_increase(&delta, &n) - perpendicular_increase(&delta, &-n)).abs() < 1e-12);
    }

    #[test]
    fn bloch_map_contracts_trace_distance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ch = sampling::random_channel(&mut r, 2);
        let BlochAffine { t, .. } = ch.bloch().unwrap();
        let dm = sampling::random_bloch_vector(&mut r) - sampling::random_bloch_vector(&mut r);
        prop_assert!((t * dm).norm() <= dm.norm() + 1e-12);
    }

    #[test]
    fn verdict_fold_invariants(
        margins in proptest::collection::vec((-1.0f64..1.0, status_strategy()), 1..40),
        tolerance in 0.0f64..0.5,
    ) {
        let points: Vec<PointMargin> = margins
            .iter()
            .enumerate()
            .map(|(i, &(margin, status))| PointMargin { time: i as f64, margin, status, direction: None })
            .collect();
        let v = Verdict::from_points(points.clone(), tolerance, None);
        let max = points.iter().map(|p| p.margin).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(v.margin, max);
        let worst = points.iter().fold(Status::Pass, |s, p| s.worst(p.status));
        prop_assert_eq!(v.status, worst);
        prop_assert_eq!(v.witness_point.is_some(), v.status != Status::Pass);
        if v.failed() {
            let t = v.witness_point.as_ref().unwrap().time.unwrap();
            let p = &points[t as usize];
            prop_assert_eq!(p.status, Status::Fail);
            prop_assert!(points.iter().filter(|q| q.status == Status::Fail).all(|q| q.margin <= p.margin));
        }
        let single = Verdict::single(max, tolerance, None);
        prop_assert_eq!(single.passed(), max <= tolerance);
        let both = Verdict::all_of(&[("a", &v), ("b", &single)]);
        prop_assert_eq!(both.status, v.status.worst(single.status));
        prop_assert!(both.margin >= v.margin - v.tolerance && both.margin >= single.margin - single.tolerance);
    }
}
