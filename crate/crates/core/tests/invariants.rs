mod common;

use common::invariants;
use proptest::prelude::*;
use qtherm_core::quench::{infer_temperature, SolverRoute};
use qtherm_core::{
    build_profile, scan_positions, Boundary, DetectorConfig, GeometryKind, GeometrySpec,
    QuenchOptions, QuenchSetup, Sites,
};

fn profile_strategy() -> impl Strategy<Value = (GeometrySpec, usize)> {
    (1usize..=8, prop::bool::ANY).prop_flat_map(|(half, periodic)| {
        let l = 2 * half;
        let boundary = if periodic {
            Boundary::Periodic
        } else {
            Boundary::Open
        };
        let bonds = boundary.bond_count(l);
        (prop::collection::vec(0.2f64..1.5, bonds), 1..=l).prop_map(move |(amplitudes, site)| {
            (
                GeometrySpec::new(GeometryKind::Custom { amplitudes }, l, boundary),
                site,
            )
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn quench_invariants(
        (spec, site) in profile_strategy(),
        g in 0.0f64..0.5,
        mu in 0.1f64..1.5,
    ) {
        let p = build_profile(&spec).unwrap();
        let r = invariants::check(&p, site, g, mu);
        let bad = invariants::violations(&r, false);
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn temperature_round_trip(n0 in 1e-12f64..0.999_999, mu in 0.05f64..3.0) {
        let t = infer_temperature(n0, mu).unwrap();
        let back = 1.0 / (1.0 + (t.beta * mu).exp());
        prop_assert!((back - n0).abs() <= 1e-12 * n0.max(1e-3));
        prop_assert!((t.beta * t.temperature - 1.0).abs() < 1e-12 || t.beta == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn update_matches_dense_route((spec, site) in profile_strategy(), g in -0.8f64..0.8, mu in 0.1f64..1.5) {
        let p = build_profile(&spec).unwrap();
        let fast = QuenchSetup::new(&p, mu, QuenchOptions { zero_modes: qtherm_core::ZeroModePolicy::Half, ..Default::default() }).unwrap();
        let dense = QuenchSetup::new(&p, mu, QuenchOptions {
            zero_modes: qtherm_core::ZeroModePolicy::Half,
            solver: SolverRoute::Dense,
            ..Default::default()
        }).unwrap();
        let a = fast.attach(site, g).unwrap();
        let b = dense.attach(site, g).unwrap();
        for (x, y) in a.energies().iter().zip(b.energies()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let times = [0.0, 0.3, 2.0, 17.0];
        for (x, y) in a.series(&times).values.iter().zip(&b.series(&times).values) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn scans_commute_with_permutation(seed in 0u64..1000, dt in 0.05f64..0.5) {
        let p = build_profile(&GeometrySpec::rindler(12, dt)).unwrap();
        let det = DetectorConfig::new(1, 0.1, 0.5);
        let mut sites: Vec<usize> = (1..=12).collect();
        let forward = scan_positions(&p, &det, &Sites::List(sites.clone()), QuenchOptions::default()).unwrap();
        // deterministic shuffle from the seed
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        for i in (1..sites.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            sites.swap(i, (state >> 33) as usize % (i + 1));
        }
        let shuffled = scan_positions(&p, &det, &Sites::List(sites.clone()), QuenchOptions::default()).unwrap();
        for (s, r) in sites.iter().zip(&shuffled) {
            prop_assert_eq!(r, &forward[s - 1]);
        }
    }

    #[test]
    fn paper_profiles_are_non_negative(half in 1usize..200, dt in 0.001f64..0.1, alpha in 0.5f64..1.0, amp in 0.0f64..1.0) {
        let l = 2 * half;
        for spec in [
            GeometrySpec::rindler(l, dt),
            GeometrySpec::rainbow(l, alpha),
            GeometrySpec::sinusoidal(l, 1.0, amp),
            GeometrySpec::affine(l, 0.6, 0.4),
        ] {
            let p = build_profile(&spec).unwrap();
            prop_assert!(p.amplitudes().iter().all(|&t| t >= 0.0));
            prop_assert!((1..=l).all(|x| p.site_hopping(x) >= 0.0));
        }
    }
}
