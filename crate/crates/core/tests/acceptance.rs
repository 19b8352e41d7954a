//! One pass/fail line per acceptance criterion.

mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use mstab_core::anquiver::make_linear;
use mstab_core::hearts::{interval_hearts, Direction, Heart};
use mstab_core::klattice::{check_braid_relations, simple_twist_data, twist_by_class, word_matrix, BraidWord, TwistMatrix};
use mstab_core::limits::{extract_limit, plumbing_ray, LaurentCharge, Laurent};
use mstab_core::multiscale::MultiScaleStab;
use mstab_core::number::{q, qf, Cx, Gauss};
use mstab_core::stability::StabilityCondition;
use mstab_core::strata::{adjacency_poset, census, enumerate_unlabeled, EnhancedLevelGraph};
use rand::Rng;

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn a2_family(h: &Heart) -> LaurentCharge {
    let vals = BTreeMap::from([(1, Laurent::parse("-1+it").unwrap()), (2, Laurent::parse("1+it").unwrap())]);
    LaurentCharge::new(h, vals).unwrap()
}

fn limit_of_a2_family() -> Check {
    let h = Heart::standard(2).unwrap();
    let out = extract_limit(&h, &a2_family(&h)).map_err(|e| e.to_string())?;
    let m = &out.msc;
    let classes: BTreeMap<u32, Vec<i64>> = m.top.simples.iter().map(|s| (s.label, s.class.clone())).collect();
    ensure(classes == BTreeMap::from([(2, vec![0, -1]), (1, vec![1, 1])]), || format!("top heart {classes:?}"))?;
    ensure(m.depth() == 1 && m.vanishing_labels(1) == vec![1], || "vanishing chain is not <E>".into())?;
    let z0 = m.level_values(0).unwrap();
    ensure(z0[&1].is_zero().unwrap() && !z0[&2].is_zero().unwrap(), || "quotient charge not on S2[1]".into())?;
    let u = out.unrotated.ok_or("no unrotated limit")?;
    let reference = MultiScaleStab::validate(
        m.top.clone(),
        &[BTreeMap::from([(1, Cx::zero()), (2, Cx::from_i64(-1, 0))]), BTreeMap::from([(1, Cx::from_i64(-1, 0))])],
    )
    .unwrap();
    ensure(u.equivalent(&reference).unwrap(), || "unrotated limit not equivalent to Z0(S2[1]) = -1".into())?;
    // the reported rotation takes the unrotated datum to the returned one
    let rotated = u.c_act(&Gauss::real(out.lambda.clone())).unwrap();
    ensure(rotated.equivalent(m).unwrap(), || "rotation does not relate the two outputs".into())
}

fn a2_k_theory() -> Check {
    let qv = make_linear(2).unwrap();
    let c = word_matrix(&qv, &BraidWord::parse("(1 2)^3").unwrap()).unwrap();
    ensure(c == TwistMatrix::identity(2).neg(), || format!("(t1 t2)^3 = {:?}", c.rows))?;
    let t2 = word_matrix(&qv, &BraidWord::generator(2)).unwrap();
    let id = TwistMatrix::identity(2);
    let nil: Vec<Vec<i64>> = (0..2).map(|i| (0..2).map(|j| t2.rows[i][j] - id.rows[i][j]).collect()).collect();
    let sq: Vec<Vec<i64>> = (0..2).map(|i| (0..2).map(|j| (0..2).map(|k| nil[i][k] * nil[k][j]).sum()).collect()).collect();
    ensure(t2 != id && sq == vec![vec![0, 0], vec![0, 0]], || format!("t2 = {:?} is not unipotent", t2.rows))?;
    // a single off-diagonal entry of absolute value one, as in [[1,1],[0,1]] up to transpose
    let off: Vec<i64> = vec![t2.rows[0][1], t2.rows[1][0]];
    ensure(off.iter().map(|x| x.abs()).sum::<i64>() == 1, || format!("shape {:?}", t2.rows))
}

fn braid_shadow() -> Check {
    for n in 1..=5 {
        for qv in make_linear(n).unwrap().mutation_ball(3).unwrap() {
            let bad = check_braid_relations(&qv).unwrap();
            ensure(bad.is_empty(), || format!("n={n} {:?}: {bad:?}", qv.arrows))?;
        }
    }
    Ok(())
}

fn hearts_within(n: usize, depth: usize) -> Vec<Heart> {
    let h0 = Heart::standard(n).unwrap();
    let mut seen = BTreeSet::from([h0.canonical_key()]);
    let mut out = vec![h0.clone()];
    let mut queue = VecDeque::from([(h0, 0)]);
    while let Some((h, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for l in h.labels() {
            for dir in [Direction::Forward, Direction::Backward] {
                let t = h.tilt(l, dir).unwrap();
                if seen.insert(t.canonical_key()) {
                    out.push(t.clone());
                    queue.push_back((t, d + 1));
                }
            }
        }
    }
    out
}

fn tilt_algebra() -> Check {
    for n in 1..=4 {
        let qv = make_linear(n).unwrap();
        for h in hearts_within(n, 3) {
            for s in &h.simples {
                let twice = h.forward_tilt(s.label).unwrap().forward_tilt(s.label).unwrap();
                let inv = twist_by_class(&qv, &s.class, -1).unwrap();
                for t in &h.simples {
                    let got = twice.class_of(t.label).unwrap();
                    ensure(got == &inv.apply(&t.class), || format!("n={n} double tilt at {} moved {}", s.label, t.label))?;
                }
                let fb = h.forward_tilt(s.label).unwrap().backward_tilt(s.label).unwrap();
                ensure(fb.canonical_key() == h.canonical_key(), || format!("n={n} forward/backward at {}", s.label))?;
            }
        }
    }
    Ok(())
}

/// Torsion classes of the standard A2 heart: subsets of {S1, S2, E} closed under
/// quotients and extensions, where `0 -> S2 -> E -> S1 -> 0`.
fn a2_torsion_classes() -> usize {
    let (s1, s2, e) = (1, 2, 4);
    (0..8u32)
        .filter(|&t| {
            let has = |x| t & x != 0;
            let quotients = !has(e) || has(s1);
            let extensions = !(has(s1) && has(s2)) || has(e);
            quotients && extensions
        })
        .count()
}

fn intermediate_hearts() -> Check {
    let hs = interval_hearts(&Heart::standard(2).unwrap()).unwrap();
    let oracle = a2_torsion_classes();
    ensure(hs.len() == 5 && oracle == 5, || format!("{} hearts, oracle {oracle}", hs.len()))?;
    // the published list, with the two simples relabelled (opposite arrow convention)
    let swap = |c: [i64; 2]| vec![c[1], c[0]];
    let listed: BTreeSet<BTreeSet<Vec<i64>>> = [
        [[1, 0], [0, 1]],
        [[-1, 0], [0, -1]],
        [[-1, 0], [1, 1]],
        [[1, 0], [0, -1]],
        [[0, 1], [-1, -1]],
    ]
    .into_iter()
    .map(|p| p.into_iter().map(swap).collect())
    .collect();
    let ours: BTreeSet<BTreeSet<Vec<i64>>> =
        hs.iter().map(|h| h.simples.iter().map(|s| s.class.clone()).collect()).collect();
    ensure(ours == listed, || format!("{ours:?}"))
}

fn plumbing_roundtrip() -> Check {
    let mut r = common::rng(2024);
    for i in 0..100 {
        let n = r.gen_range(2..=4);
        let depth = r.gen_range(0..=2usize.min(n - 1));
        let m = common::random_msc(&mut r, n, depth);
        let out = extract_limit(&m.top, &plumbing_ray(&m).unwrap()).map_err(|e| format!("instance {i}: {e}"))?;
        ensure(out.msc.equivalent(&m).unwrap(), || format!("instance {i} (n={n}, L={depth}) not recovered"))?;
    }
    Ok(())
}

fn commutation_defect() -> Check {
    let mut r = common::rng(7);
    let mut count = 0;
    while count < 100 {
        let n = r.gen_range(3..=4);
        let m = common::random_msc(&mut r, n, 1);
        let lre = r.gen_range(0..12);
        let tre = r.gen_range(0..12 - lre);
        let lam = Gauss::new(qf(lre, 12), qf(r.gen_range(-8..=8), 4));
        let tau = Gauss::new(qf(tre, 12), qf(r.gen_range(-40..=-4), 4));
        let d = m.commutation_defect(&lam, &tau).map_err(|e| format!("instance {count}: {e}"))?;
        ensure(d.max_simple_defect <= d.bound * (1.0 + 1e-9), || {
            format!("instance {count}: defect {} > bound {}", d.max_simple_defect, d.bound)
        })?;
        let imaginary = Gauss::new(q(0), lam.im.clone());
        let d0 = m.commutation_defect(&imaginary, &tau).map_err(|e| e.to_string())?;
        ensure(d0.zero_certified, || format!("instance {count}: nonzero defect for imaginary lambda"))?;
        count += 1;
    }
    Ok(())
}

fn strata_census() -> Check {
    let start = Instant::now();
    let c2 = census(2, 3);
    ensure(c2.len() == 1 && c2[0].labeled_count == 3 && c2[0].levels == 1, || format!("n=2: {c2:?}"))?;
    let c3 = census(3, 3);
    let one: Vec<_> = c3.iter().filter(|e| e.levels == 1).collect();
    let by_kappa: BTreeMap<Vec<u32>, (usize, u64)> = one.iter().map(|e| (e.kappas.clone(), (e.labeled_count, e.prongs))).collect();
    let want = BTreeMap::from([(vec![5], (4, 5)), (vec![4], (6, 4)), (vec![4, 4], (3, 16))]);
    ensure(one.len() == 3 && by_kappa == want, || format!("n=3 single-level types {by_kappa:?}"))?;
    ensure(c3.iter().all(|e| e.levels <= 2), || "n=3 has a three-level graph".into())?;

    // codimension-two incidences between unlabeled types
    let mut reps = vec![EnhancedLevelGraph::smooth(3)];
    reps.extend(c3.iter().map(|e| e.representative.clone()));
    let p = adjacency_poset(&reps, true).unwrap();
    let name = |g: &EnhancedLevelGraph| match (g.depth(), g.kappas().as_slice()) {
        (1, [5]) => "D1",
        (1, [4]) => "D2",
        (1, [4, 4]) => "D3",
        (2, [4, 5]) => "chain",
        (2, [4, 4]) => "slanted cherry",
        _ => "other",
    };
    let mut incid: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (i, g) in reps.iter().enumerate() {
        if g.depth() == 2 {
            for j in p.covers(i) {
                incid.entry(name(g)).or_default().insert(name(&reps[j]));
            }
        }
    }
    let want = BTreeMap::from([("chain", BTreeSet::from(["D1", "D2"])), ("slanted cherry", BTreeSet::from(["D2", "D3"]))]);
    ensure(incid == want, || format!("incidences {incid:?}"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1.0, || format!("census took {secs:.3}s"))
}

fn twist_data_integrality() -> Check {
    for n in 1..=8 {
        for g in enumerate_unlabeled(n, n) {
            let data = simple_twist_data(&g.rho()).map_err(|e| e.to_string())?;
            for lvl in &data.levels {
                for (&k, &e) in lvl.kappa_hat.iter().zip(&lvl.exponents) {
                    ensure(lvl.ell % k == 0 && lvl.ell / k == e, || format!("rho {:?}", g.rho()))?;
                }
            }
            let cover = g.double_cover();
            for ce in &cover.edges {
                let size = g.edges[ce.over].kappa as usize - 3;
                ensure(u64::from(ce.kappa_hat) == mstab_core::klattice::kappa_hat(size), || {
                    format!("{}: cover edge kappa_hat {}", g.labeled_key(), ce.kappa_hat)
                })?;
            }
            let from_data: BTreeSet<u64> = data.levels.iter().flat_map(|l| l.kappa_hat.clone()).collect();
            let from_cover: BTreeSet<u64> = cover.edges.iter().map(|e| u64::from(e.kappa_hat)).collect();
            ensure(from_data == from_cover, || format!("{}: {from_data:?} vs {from_cover:?}", g.labeled_key()))?;
        }
    }
    Ok(())
}

fn c_action() -> Check {
    let mut r = common::rng(99);
    for i in 0..40 {
        let n = r.gen_range(2..=4);
        let h = common::random_heart(&mut r, n, 2);
        let vals: BTreeMap<u32, Cx> = h.labels().into_iter().map(|l| (l, common::random_charge(&mut r).to_cx())).collect();
        let s = StabilityCondition::from_values(h.clone(), &vals).unwrap();
        let (a, b) = (Gauss::real(qf(r.gen_range(-18..=18), 12)), Gauss::real(qf(r.gen_range(-18..=18), 12)));
        let lhs = s.c_act(&a.add(&b)).unwrap();
        let rhs = s.c_act(&b).unwrap().c_act(&a).unwrap();
        ensure(lhs.heart.same_as(&rhs.heart), || format!("instance {i}: additivity hearts"))?;
        // labels may differ between the two tilt paths; compare as functions on K
        let same_charge = |x: &StabilityCondition, y: &StabilityCondition| {
            (0..n).all(|k| {
                let mut e = vec![0; n];
                e[k] = 1;
                x.charge(&e).unwrap().approx_eq(&y.charge(&e).unwrap(), 0.0)
            })
        };
        ensure(same_charge(&lhs, &rhs), || format!("instance {i}: additivity charges"))?;
        let one = s.c_act(&Gauss::real(q(1))).unwrap();
        ensure(one.heart.same_as(&h.shift(1)), || format!("instance {i}: lambda = 1 is not the shift"))?;
        let two = s.c_act(&Gauss::real(q(2))).unwrap();
        ensure(two.heart.same_as(&h.shift(2)) && two.heart.provenance.shift == h.provenance.shift + 2, || {
            format!("instance {i}: lambda = 2 is not [2]")
        })?;
        ensure(same_charge(&two, &s), || format!("instance {i}: lambda = 2 moved charges"))?;

        let depth = r.gen_range(1..=2usize.min(n - 1));
        let m = common::random_msc(&mut r, n, depth);
        let lam = Gauss::real(qf(r.gen_range(-18..=18), 12));
        let am = m.c_act(&lam).unwrap();
        ensure(am.vanishing_chain() == m.vanishing_chain(), || format!("instance {i}: chain changed"))?;
        let rot = Cx::rotation(&lam);
        // level charges are functions on K-classes; the hearts themselves may tilt
        for k in 0..=depth {
            let (before, after) = (&m.levels[k].charge, &am.levels[k].charge);
            for c in before.basis() {
                let want = &rot * &before.eval(c).unwrap();
                let got = after.eval(c).map_err(|e| format!("instance {i}: {e}"))?;
                ensure(got.approx_eq(&want, 0.0), || format!("instance {i}: level {k} class {c:?}"))?;
            }
        }
        let back = am.c_act(&Gauss::real(-lam.re.clone())).unwrap();
        ensure(back.equivalent(&m).unwrap(), || format!("instance {i}: msc additivity"))?;
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("limit of the A2 family (-1+it, 1+it)", limit_of_a2_family),
        ("A2 K-theory: (t1 t2)^3 = -I, t2 unipotent", a2_k_theory),
        ("braid relations within mutation distance 3, n <= 5", braid_shadow),
        ("double tilt is the inverse twist; forward/backward inverse", tilt_algebra),
        ("five intermediate hearts for A2", intermediate_hearts),
        ("plumbing ray limit roundtrip, 100 instances", plumbing_roundtrip),
        ("commutation defect within bound, 100 instances", commutation_defect),
        ("strata census for n = 2, 3", strata_census),
        ("twist data integrality and cover kappa-hat, n <= 8", twist_data_integrality),
        ("C-action coherence", c_action),
    ];
    let mut failed = vec![];
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(()) => println!("criterion {:>2}: PASS  {name} ({secs:.2}s)", k + 1),
            Err(e) => {
                println!("criterion {:>2}: FAIL  {name}: {e}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
