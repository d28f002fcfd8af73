mod common;

use proptest::prelude::*;
use rand::RngCore;

use sinai_lab::engine::{build_chain, evolve, reflected_nu, BoundaryMode};
use sinai_lab::env::{make_env, EnvSpec, Medium, Site};
use sinai_lab::landscape::{h_extrema, Eps, PathWindow, Side};
use sinai_lab::montecarlo::coupling::{run_coupling, CouplingPlan, Trace};
use sinai_lab::montecarlo::{simulate_product, ProductConfig};
use sinai_lab::rng;

fn spec_strategy() -> impl Strategy<Value = EnvSpec> {
    prop_oneof![
        (0.05f64..0.499, any::<u64>()).prop_map(|(p, s)| EnvSpec::two_point(p, s)),
        (0.1f64..3.0, any::<u64>()).prop_map(|(hw, s)| EnvSpec::log_uniform(hw, 0.5 / (1.0 + hw.exp()), s)),
    ]
}

fn path_strategy() -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(-3i32..=3, 1..=60), 1u32..8).prop_map(|(steps, h)| {
        let mut x = 0.0;
        let w = steps
            .into_iter()
            .map(|s| {
                x += s as f64;
                x
            })
            .collect();
        (w, h as f64)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omega_respects_ellipticity(spec in spec_strategy(), tag in 0u64..16, a in -5000i64..5000) {
        let env = make_env(spec, tag).unwrap();
        let e0 = env.epsilon0();
        for x in a..a + 200 {
            let w = env.omega_at(x);
            prop_assert!(e0 <= w && w <= 1.0 - e0, "omega({x}) = {w}, eps0 = {e0}");
        }
    }

    #[test]
    fn potential_increments_are_log_rho(spec in spec_strategy(), tag in 0u64..16, a in -3000i64..3000) {
        let env = make_env(spec, tag).unwrap();
        prop_assert_eq!(env.potential(0), 0.0);
        for x in a..a + 200 {
            let inc = env.potential(x) - env.potential(x - 1);
            let scale = 1.0 + env.potential(x).abs();
            prop_assert!((inc - env.log_rho(x)).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn environments_are_deterministic(spec in spec_strategy(), tag in 0u64..16, a in -2000i64..0, b in 0i64..2000) {
        let e1 = make_env(spec, tag).unwrap();
        let e2 = make_env(spec, tag).unwrap();
        // Query the second in the opposite order.
        let rev: Vec<f64> = (a..=b).rev().map(|x| e2.potential(x)).collect();
        let fwd: Vec<f64> = (a..=b).map(|x| e1.potential(x)).collect();
        let back: Vec<f64> = rev.into_iter().rev().collect();
        prop_assert_eq!(fwd.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), back.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(e1.omega_range(a, b), e2.omega_range(a, b));
    }

    #[test]
    fn extrema_alternate_and_clear_h((w, h) in path_strategy()) {
        let d = h_extrema(&PathWindow::new(0, w.clone()).unwrap(), h).unwrap();
        for pair in d.extrema.windows(2) {
            prop_assert!(pair[0].site < pair[1].site);
            prop_assert_eq!(pair[1].kind, pair[0].kind.flip());
        }
        for s in d.slopes.iter().filter(|s| s.certified) {
            prop_assert!(s.height >= h && s.excess >= 0.0);
        }
    }

    #[test]
    fn extrema_match_brute_force((w, h) in path_strategy()) {
        prop_assert!(common::extrema_agree(&w, h));
    }

    #[test]
    fn certified_extrema_shrink_with_h((w, h) in path_strategy()) {
        let path = PathWindow::new(0, w).unwrap();
        let low = h_extrema(&path, h).unwrap().certified().count();
        let high = h_extrema(&path, h + 2.0).unwrap().certified().count();
        prop_assert!(high <= low);
    }

    #[test]
    fn mass_is_conserved(spec in spec_strategy(), half in 1i64..40, y in -5i64..5, steps in 0u64..400, absorbing in any::<bool>()) {
        let env = make_env(spec, 0).unwrap();
        let mode = if absorbing { BoundaryMode::Absorbing } else { BoundaryMode::Reflecting };
        let chain = build_chain(&env, y - half, y + half, mode).unwrap();
        let d = evolve(&chain, &chain.point(y).unwrap(), steps);
        prop_assert!((d.in_window() + d.leaked() - 1.0).abs() <= 1e-12);
        let (lo, hi) = d.window();
        for x in lo..=hi {
            let m = d.at(x);
            prop_assert!(m >= 0.0);
            if (x - y - steps as Site).rem_euclid(2) != 0 {
                prop_assert_eq!(m, 0.0);
            }
        }
    }

    #[test]
    fn meeting_counts_are_deterministic_and_nondecreasing(seed in any::<u64>(), m in 0usize..3, r in 1usize..3) {
        let cfg = ProductConfig::new(m, r, r, EnvSpec::two_point(0.3, 0), 2000, 6, seed);
        let a = simulate_product(&cfg).unwrap();
        let b = simulate_product(&cfg).unwrap();
        prop_assert_eq!(&a, &b);
        for row in a.meets.iter().chain(&a.returns) {
            prop_assert!(row.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn mixed_parity_never_meets(seed in any::<u64>(), shift in 0i64..5) {
        let mut cfg = ProductConfig::new(1, 1, 1, EnvSpec::two_point(0.3, 0), 2000, 4, seed);
        cfg.starts = vec![0, 2 * shift + 1];
        let stats = simulate_product(&cfg).unwrap();
        prop_assert!(stats.meets.iter().flatten().all(|&c| c == 0));
    }

    #[test]
    fn coupling_stays_locked(spec in spec_strategy(), k in 3i64..15, seed in any::<u64>(), trial in 0u64..1000) {
        let env = make_env(spec, 0).unwrap();
        let (lo, hi) = (-2 * k, 2 * k);
        let plan = CouplingPlan {
            n: 1500,
            eps: Eps::default(),
            side: Side::Right,
            b_hat: 0,
            x_hat: [lo, 0, hi],
            lo,
            hi,
            l_minus: lo / 2,
            l_plus: hi / 2,
            nu: reflected_nu(&env, lo, hi).unwrap(),
        };
        let mut tr = Trace::default();
        let o = run_coupling(&env, &plan, 0, &[500, 1500], seed, trial, Some(&mut tr));
        prop_assert_eq!(tr.z.len(), 1501);
        prop_assert!(tr.z_hat.iter().all(|&x| (lo..=hi).contains(&x)));
        if let Some(m) = o.tau_meet {
            if let Some(e) = o.tau_exit {
                prop_assert!(e > m);
            }
            let end = o.tau_exit.unwrap_or(1501) as usize;
            for i in m as usize..end {
                prop_assert_eq!(tr.z[i], tr.z_hat[i]);
            }
        } else {
            prop_assert!(o.tau_exit.is_none());
        }
        prop_assert_eq!(o.z_at, vec![tr.z[500], tr.z[1500]]);
    }

    #[test]
    fn streams_are_addressed_by_key(parts in prop::collection::vec(any::<u64>(), 1..5)) {
        let a = rng::stream(&parts).next_u64();
        let b = rng::stream(&parts).next_u64();
        prop_assert_eq!(a, b);
        let mut other = parts.clone();
        *other.last_mut().unwrap() ^= 1;
        prop_assert_ne!(rng::key(&parts), rng::key(&other));
    }
}
