//! Randomized structural properties.

use std::sync::Arc;

use orbit_localize::localize::{fourier_value, invariance_checks, OrbitSpec};
use orbit_localize::verify::split_conditions_hold;
use orbit_localize::fixedpoints::split_positive_system;
use orbit_localize::{AlgebraSpec, Family};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec(family: Family, n: usize) -> OrbitSpec {
    let lambda: Vec<f64> = [1.0, 0.7, 0.45][..n - 1].to_vec();
    OrbitSpec::with_defaults(Arc::new(AlgebraSpec::build(family, n).unwrap()), &lambda).unwrap()
}

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Su), Just(Family::SlReal)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_is_antisymmetric_and_killing_symmetric(f in family(), n in 2usize..=4, seed in any::<u64>()) {
        let alg = AlgebraSpec::build(f, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = alg.random_element(&mut rng, 1.0);
        let y = alg.random_element(&mut rng, 1.0);
        let xy = alg.bracket(&x, &y).unwrap();
        let yx = alg.bracket(&y, &x).unwrap();
        prop_assert!(xy.add(&yx).norm() < 1e-12);
        let b1 = alg.killing_form(&x, &y).unwrap();
        let b2 = alg.killing_form(&y, &x).unwrap();
        prop_assert!((b1 - b2).norm() < 1e-12);
        prop_assert!(b1.im.abs() < 1e-12);
    }

    #[test]
    fn fourier_value_is_ad_invariant(f in family(), n in 2usize..=3, seed in any::<u64>()) {
        let s = spec(f, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = s.algebra().random_element(&mut rng, 1.0);
        let g = s.algebra().random_group_element(&mut rng, 0.4, 3);
        if let Ok(r) = invariance_checks(&s, &x, &g) {
            if r.ad_difference.is_some() {
                prop_assert!(r.max_difference() < 1e-8, "{r:?}");
            }
        }
    }

    #[test]
    fn global_sign_flip_negates_split_values(n in 2usize..=3, seed in any::<u64>()) {
        let s = spec(Family::SlReal, n);
        let flipped = s.with_s0(-s.s0()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = s.algebra().random_element(&mut rng, 1.0);
        if let (Ok(a), Ok(b)) = (fourier_value(&s, &x), fourier_value(&flipped, &x)) {
            prop_assert!((a.total + b.total).norm() <= 1e-12 * a.total.norm().max(1.0));
        }
    }

    #[test]
    fn split_of_positive_system_satisfies_conditions(coords in proptest::collection::vec(-2.0f64..2.0, 3)) {
        let s = spec(Family::SlReal, 4);
        let x = s.cartan_element(&coords).unwrap();
        prop_assume!(s.algebra().is_regular_semisimple(&x).unwrap_or(false));
        let xc = s.cartan().coords_of(&x).unwrap();
        let pos = s.cartan().positive_roots();
        let (lower, upper) = split_positive_system(s.cartan(), &xc, &pos);
        prop_assert_eq!(lower.len() + upper.len(), pos.len());
        prop_assert!(split_conditions_hold(s.cartan(), &xc, &pos, &lower, &upper));
    }
}
