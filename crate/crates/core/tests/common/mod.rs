#![allow(dead_code)]

use std::collections::BTreeMap;

use mstab_core::hearts::Heart;
use mstab_core::multiscale::MultiScaleStab;
use mstab_core::number::{qf, Cx, Gauss};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A Gaussian rational in the semi-closed upper half-plane.
pub fn random_charge(r: &mut StdRng) -> Gauss {
    let den = r.gen_range(1..=4);
    if r.gen_bool(0.15) {
        Gauss::real(qf(-r.gen_range(1..=6), den))
    } else {
        Gauss::new(qf(r.gen_range(-6..=6), den), qf(r.gen_range(1..=6), den))
    }
}

pub fn random_heart(r: &mut StdRng, n: usize, tilts: usize) -> Heart {
    let mut h = Heart::standard(n).unwrap();
    for _ in 0..tilts {
        let l = *h.labels().choose(r).unwrap();
        h = if r.gen_bool(0.5) { h.forward_tilt(l).unwrap() } else { h.backward_tilt(l).unwrap() };
    }
    h
}

/// A valid multi-scale datum of depth exactly `depth` with Gaussian-rational charges
/// on a randomly tilted A_n heart; retries until validation succeeds.
pub fn random_msc(r: &mut StdRng, n: usize, depth: usize) -> MultiScaleStab {
    assert!(depth < n || depth == 0);
    loop {
        let tilts = r.gen_range(0..=2);
        let top = random_heart(r, n, tilts);
        let mut labels = top.labels();
        let mut chain = vec![labels.clone()];
        for step in 0..depth {
            labels.shuffle(r);
            let k = r.gen_range(depth - step..labels.len());
            labels.truncate(k);
            labels.sort();
            chain.push(labels.clone());
        }
        let mut levels = vec![];
        for (i, lv) in chain.iter().enumerate() {
            let deeper = chain.get(i + 1);
            let vals: BTreeMap<u32, Cx> = lv
                .iter()
                .map(|&l| {
                    let z = if deeper.is_some_and(|d| d.contains(&l)) { Cx::zero() } else { random_charge(r).to_cx() };
                    (l, z)
                })
                .collect();
            levels.push(vals);
        }
        if let Ok(m) = MultiScaleStab::validate(top, &levels) {
            return m;
        }
    }
}

/// A Gaussian rational with components `num/den`, `num` drawn from `range`.
pub fn gauss_in(r: &mut StdRng, re: (i64, i64), im: (i64, i64), den: i64) -> Gauss {
    Gauss::new(qf(r.gen_range(re.0..=re.1), den), qf(r.gen_range(im.0..=im.1), den))
}
