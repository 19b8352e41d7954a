mod common;

use std::collections::BTreeSet;

use mstab_core::anquiver::make_linear;
use mstab_core::klattice::{kappa_hat, simple_twist_data, twist_by_class};
use mstab_core::limits::{extract_limit, plumbing_ray};
use mstab_core::number::{q, qf, Cx, Gauss};
use mstab_core::strata::{adjacency_poset, census, enumerate_graphs, enumerate_unlabeled, EnhancedLevelGraph};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn c_act_is_additive_on_msc(seed in any::<u64>(), n in 2usize..=4, a in -24i64..=24, b in -24i64..=24) {
        let mut r = common::rng(seed);
        let depth = (seed % n as u64) as usize;
        let m = common::random_msc(&mut r, n, depth.min(2));
        let (la, lb) = (Gauss::real(qf(a, 12)), Gauss::real(qf(b, 12)));
        let lhs = m.c_act(&la.add(&lb)).unwrap();
        let rhs = m.c_act(&lb).unwrap().c_act(&la).unwrap();
        prop_assert!(lhs.equivalent(&rhs).unwrap());
        prop_assert_eq!(lhs.vanishing_chain(), m.vanishing_chain());
    }

    #[test]
    fn plumbing_gives_valid_data(seed in any::<u64>(), n in 2usize..=4, re in 0i64..=8, im in -12i64..=-1) {
        let mut r = common::rng(seed);
        let m = common::random_msc(&mut r, n, 1 + (seed % 2) as usize % (n - 1).max(1));
        let taus: Vec<_> = (0..m.depth()).map(|i| Some(Gauss::new(qf(re + i as i64, 4), qf(im - 2 * i as i64, 2)))).collect();
        let p = m.plumb(&taus).unwrap();
        prop_assert_eq!(p.depth(), 0);
        p.check().unwrap();
        prop_assert!(p.to_honest().is_some());
        // plumbing only the deepest level keeps the rest of the chain
        if m.depth() == 2 {
            let partial = m.plumb(&[None, taus[1].clone()]).unwrap();
            prop_assert_eq!(partial.depth(), 1);
        }
    }

    #[test]
    fn imaginary_plumbing_scales_the_lower_level(seed in any::<u64>(), n in 2usize..=4, im in -6i64..=-1) {
        let mut r = common::rng(seed);
        let m = common::random_msc(&mut r, n, 1);
        let tau = Gauss::new(q(0), q(im));
        let p = m.plumb(&[Some(tau.clone())]).unwrap();
        prop_assert!(p.top.same_as(&m.top));
        let k = Cx::rotation(&tau);
        let z0 = m.level_values(0).unwrap();
        let z1 = m.level_values(1).unwrap();
        let zp = p.level_values(0).unwrap();
        for l in m.quotient_labels(0) {
            prop_assert!(zp[&l].approx_eq(&z0[&l], 0.0), "quotient simple {} moved", l);
        }
        for (l, z) in &z1 {
            let want = &k * z;
            prop_assert!(zp[l].approx_eq(&want, 1e-12 * want.abs_f64().max(1.0)));
        }
    }

    #[test]
    fn plumbing_ray_limit_roundtrip(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = common::rng(seed);
        let depth = (seed % 3) as usize % n;
        let m = common::random_msc(&mut r, n, depth);
        let fam = plumbing_ray(&m).unwrap();
        let out = extract_limit(&m.top, &fam).unwrap();
        prop_assert!(out.msc.equivalent(&m).unwrap());
        let again = extract_limit(&m.top, &fam).unwrap();
        prop_assert_eq!(format!("{:?}", again.msc), format!("{:?}", out.msc));
    }

    #[test]
    fn defect_is_bounded(seed in any::<u64>(), n in 3usize..=4, lre in 0i64..=5, tre in 0i64..=5, lim in -4i64..=4, tim in -16i64..=-2) {
        prop_assume!(lre + tre < 12);
        let mut r = common::rng(seed);
        let m = common::random_msc(&mut r, n, 1);
        let lam = Gauss::new(qf(lre, 12), qf(lim, 4));
        let tau = Gauss::new(qf(tre, 12), qf(tim, 4));
        let d = m.commutation_defect(&lam, &tau).unwrap();
        prop_assert!(d.max_simple_defect <= d.bound * (1.0 + 1e-9) + 1e-300, "{} > {}", d.max_simple_defect, d.bound);
        let d0 = m.commutation_defect(&Gauss::new(q(0), qf(lim, 4)), &tau).unwrap();
        prop_assert!(d0.zero_certified);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn double_tilt_is_inverse_twist(seed in any::<u64>(), n in 2usize..=4, depth in 0usize..=3) {
        let mut r = common::rng(seed);
        let h = common::random_heart(&mut r, n, depth);
        let qv = make_linear(n).unwrap();
        for s in &h.simples {
            let twice = h.forward_tilt(s.label).unwrap().forward_tilt(s.label).unwrap();
            let inv = twist_by_class(&qv, &s.class, -1).unwrap();
            for t in &h.simples {
                prop_assert_eq!(twice.class_of(t.label).unwrap(), &inv.apply(&t.class));
            }
            let back = h.forward_tilt(s.label).unwrap().backward_tilt(s.label).unwrap();
            prop_assert_eq!(back.canonical_key(), h.canonical_key());
        }
    }
}

#[test]
fn graphs_validate_and_enhancements_are_forced() {
    for n in 1..=6 {
        for g in enumerate_graphs(n, 3) {
            g.validate().unwrap();
            let below = g.zeros_below();
            for e in &g.edges {
                assert!(e.kappa >= 2);
                assert_eq!(e.kappa as usize, below[e.lower] + 2, "{}", g.labeled_key());
            }
        }
    }
}

#[test]
fn cover_kappa_hat_matches_twist_data() {
    for n in 1..=6 {
        for g in enumerate_graphs(n, 2) {
            let c = g.double_cover();
            for ce in &c.edges {
                let k = g.edges[ce.over].kappa as usize;
                assert_eq!(ce.kappa_hat as u64, kappa_hat(k - 3), "{}", g.labeled_key());
            }
            let data = simple_twist_data(&g.rho()).unwrap();
            let from_data: BTreeSet<u64> = data.levels.iter().flat_map(|l| l.kappa_hat.clone()).collect();
            let from_cover: BTreeSet<u64> = c.edges.iter().map(|e| e.kappa_hat as u64).collect();
            assert_eq!(from_data, from_cover, "{}", g.labeled_key());
        }
    }
}

#[test]
fn poset_rank_is_depth() {
    for n in 2..=4 {
        let mut gs = vec![EnhancedLevelGraph::smooth(n)];
        gs.extend(enumerate_graphs(n, 3));
        let p = adjacency_poset(&gs, false).unwrap();
        for (g, r) in gs.iter().zip(&p.ranks) {
            assert_eq!(*r, g.depth());
        }
        for (hi, lo, passages) in &p.relations {
            assert_eq!(p.ranks[*hi], p.ranks[*lo] + passages.len());
        }
    }
}

#[test]
fn graphs_of_random_msc_validate() {
    let mut r = common::rng(11);
    for i in 0..60 {
        let n = 2 + i % 4;
        let m = common::random_msc(&mut r, n, i % 3 % n);
        let g = EnhancedLevelGraph::from_msc(&m).unwrap();
        g.validate().unwrap();
        assert_eq!(g.depth(), m.depth());
        assert_eq!(g.rho(), m.type_rho());
    }
}

#[test]
fn c_act_through_cyclic_vanishing_quiver() {
    // the second rotation lifts quotient tilts past a vanishing ext-quiver with an
    // oriented 3-cycle
    let seed = 5400518061090899550u64;
    let mut r = common::rng(seed);
    let m = common::random_msc(&mut r, 4, 2);
    let a = m.c_act(&Gauss::real(qf(-13, 12))).unwrap().c_act(&Gauss::real(qf(5, 12))).unwrap();
    let b = m.c_act(&Gauss::real(qf(-8, 12))).unwrap();
    assert!(a.equivalent(&b).unwrap());
}

#[test]
fn unlabeled_enumeration_matches_labeled_quotient() {
    for (n, levels) in [(2, 2), (3, 3), (4, 4), (5, 2)] {
        let direct: BTreeSet<String> = enumerate_unlabeled(n, levels).iter().map(|g| g.unlabeled_key()).collect();
        let quotient: BTreeSet<String> = census(n, levels).into_iter().map(|e| e.key).collect();
        assert_eq!(direct, quotient, "n={n}");
    }
}
