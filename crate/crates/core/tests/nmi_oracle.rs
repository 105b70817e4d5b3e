//! LFK-NMI checked against a direct evaluation over membership bit vectors,
//! in nats, with the probability tables counted element by element.

use std::collections::BTreeSet;

use memestream::eval::{lfk_nmi, Cover};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.ln()
    }
}

fn direct(a: &[Vec<bool>], b: &[Vec<bool>], n: usize) -> f64 {
    let cond = |x: &[Vec<bool>], y: &[Vec<bool>]| -> f64 {
        let mut sum = 0.0;
        for xk in x {
            let ones = xk.iter().filter(|v| **v).count() as f64 / n as f64;
            let hx = plogp(ones) + plogp(1.0 - ones);
            if hx == 0.0 {
                continue;
            }
            let mut best = f64::INFINITY;
            for yl in y {
                let mut t = [[0usize; 2]; 2];
                for i in 0..n {
                    t[xk[i] as usize][yl[i] as usize] += 1;
                }
                let p = |i: usize, j: usize| t[i][j] as f64 / n as f64;
                if plogp(p(1, 1)) + plogp(p(0, 0)) > plogp(p(0, 1)) + plogp(p(1, 0)) {
                    let joint = plogp(p(0, 0)) + plogp(p(0, 1)) + plogp(p(1, 0)) + plogp(p(1, 1));
                    let hy = plogp(p(0, 1) + p(1, 1)) + plogp(p(0, 0) + p(1, 0));
                    best = best.min(joint - hy);
                }
            }
            sum += if best.is_finite() { best / hx } else { 1.0 };
        }
        if x.is_empty() {
            0.0
        } else {
            sum / x.len() as f64
        }
    };
    1.0 - 0.5 * (cond(a, b) + cond(b, a))
}

fn random_cover(rng: &mut ChaCha8Rng, universe: usize) -> Vec<BTreeSet<usize>> {
    let k = rng.gen_range(1..=6);
    (0..k)
        .map(|_| {
            let p = rng.gen_range(0.1..0.6);
            let mut s: BTreeSet<usize> = (0..universe).filter(|_| rng.gen_bool(p)).collect();
            if s.is_empty() {
                s.insert(rng.gen_range(0..universe));
            }
            s
        })
        .collect()
}

fn to_cover(sets: &[BTreeSet<usize>]) -> Cover {
    Cover::new(sets.iter().enumerate().map(|(i, s)| (format!("c{i}"), s.iter().map(|e| format!("e{e}")).collect())))
}

fn bits(sets: &[BTreeSet<usize>], universe: &[usize]) -> Vec<Vec<bool>> {
    sets.iter().map(|s| universe.iter().map(|e| s.contains(e)).collect()).collect()
}

#[test]
fn agrees_with_direct_formula_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let n = rng.gen_range(2..=30);
        let a = random_cover(&mut rng, n);
        let b = random_cover(&mut rng, n);
        let universe: Vec<usize> = a.iter().chain(&b).flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let expected = direct(&bits(&a, &universe), &bits(&b, &universe), universe.len());
        let got = lfk_nmi(&to_cover(&a), &to_cover(&b));
        assert!((got - expected.clamp(0.0, 1.0)).abs() <= 1e-9, "{got} vs {expected}");
        assert_eq!(lfk_nmi(&to_cover(&a), &to_cover(&a)), 1.0);
    }
}

#[test]
fn moved_element_example() {
    let a = vec![BTreeSet::from([1, 2, 3, 4]), BTreeSet::from([5, 6, 7, 8])];
    let b = vec![BTreeSet::from([1, 2, 3]), BTreeSet::from([4, 5, 6, 7, 8])];
    let u: Vec<usize> = (1..=8).collect();
    let expected = direct(&bits(&a, &u), &bits(&b, &u), 8);
    let got = lfk_nmi(&to_cover(&a), &to_cover(&b));
    assert!(got > 0.0 && got < 1.0);
    assert!((got - expected).abs() <= 1e-9);
}

fn cover_strategy() -> impl Strategy<Value = Vec<BTreeSet<usize>>> {
    prop::collection::vec(prop::collection::btree_set(0usize..30, 1..20), 1..=6)
}

proptest! {
    #[test]
    fn symmetric_bounded_and_permutation_invariant(a in cover_strategy(), b in cover_strategy(), rot in 0usize..6) {
        let (ca, cb) = (to_cover(&a), to_cover(&b));
        let v = lfk_nmi(&ca, &cb);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((v - lfk_nmi(&cb, &ca)).abs() <= 1e-12);
        prop_assert_eq!(lfk_nmi(&ca, &ca), 1.0);
        let mut shuffled = a.clone();
        let r = rot % shuffled.len();
        shuffled.rotate_left(r);
        shuffled.reverse();
        prop_assert!((lfk_nmi(&to_cover(&shuffled), &cb) - v).abs() <= 1e-12);
        // Renaming elements consistently changes nothing either.
        let renamed = |s: &[BTreeSet<usize>]| -> Vec<BTreeSet<usize>> {
            s.iter().map(|c| c.iter().map(|e| 29 - e).collect()).collect()
        };
        prop_assert!((lfk_nmi(&to_cover(&renamed(&a)), &to_cover(&renamed(&b))) - v).abs() <= 1e-12);
    }
}
