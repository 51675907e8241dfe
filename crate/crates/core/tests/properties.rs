mod common;

use optomech::dynamics::decohere;
use optomech::gaussian::{change_basis, log_negativity, partial_trace};
use optomech::measurement::{measure_position, OutcomePolicy, PulseEvent};
use optomech::{BasisMap, GaussianState, SystemParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn state(seed: u64) -> GaussianState {
    common::random_state(&mut ChaCha8Rng::seed_from_u64(seed), 2, 40.0, 1.2)
}

prop_compose! {
    fn params()(
        omega2 in 0.3..8.0f64,
        log_q in 1.0..8.0f64,
        n_th1 in 0.0..1e3f64,
        n_th2 in 0.0..1e3f64,
        chi1 in 0.0..5.0f64,
        chi2 in 0.0..5.0f64,
    ) -> SystemParams {
        SystemParams {
            omega2,
            n_th1,
            n_th2,
            chi1,
            chi2,
            ..SystemParams::default().with_q(10f64.powf(log_q))
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn channels_keep_states_physical(seed in any::<u64>(), p in params(), t in 0.0..20.0f64) {
        let s = state(seed);
        let m = measure_position(&s, &p, &PulseEvent::from_params(&p, t)).unwrap().0;
        prop_assert!(m.is_bona_fide());
        prop_assert!(decohere(&s, t, &p).unwrap().is_bona_fide());
        prop_assert!(partial_trace(&s, &[0]).unwrap().is_bona_fide());
    }

    #[test]
    fn entanglement_is_local_invariant(seed in any::<u64>(), r in 0.0..1.5f64) {
        let s = state(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let local = BasisMap::local(
            &common::local_symplectic(&mut rng, r),
            &common::local_symplectic(&mut rng, r),
        ).unwrap();
        let e0 = log_negativity(&s).unwrap();
        let e1 = log_negativity(&change_basis(&s, &local).unwrap()).unwrap();
        prop_assert!((e0 - e1).abs() < 1e-8, "{} vs {}", e0, e1);
        prop_assert!(e0 >= 0.0);
    }

    #[test]
    fn measurement_never_reduces_purity(seed in any::<u64>(), p in params(), t in 0.0..10.0f64) {
        let s = state(seed);
        let m = measure_position(&s, &p, &PulseEvent::from_params(&p, t)).unwrap().0;
        prop_assert!(m.cov().determinant() <= s.cov().determinant() * (1.0 + 1e-9));
    }

    #[test]
    fn covariance_ignores_outcome(seed in any::<u64>(), p in params(), y in -50.0..50.0f64) {
        let s = state(seed);
        let pulse = PulseEvent::from_params(&p, 0.4);
        let a = measure_position(&s, &p, &pulse).unwrap().0;
        let b = measure_position(&s, &p, &pulse.with_outcome(OutcomePolicy::Fixed(y))).unwrap().0;
        prop_assert!(common::rel_diff(a.cov(), b.cov()) < 1e-12);
    }

    #[test]
    fn basis_round_trip(seed in any::<u64>()) {
        let s = state(seed);
        let m = BasisMap::collective(2);
        let back = change_basis(&change_basis(&s, &m).unwrap(), &m.inverse()).unwrap();
        prop_assert!(common::rel_diff(back.cov(), s.cov()) < 1e-12);
    }
}
