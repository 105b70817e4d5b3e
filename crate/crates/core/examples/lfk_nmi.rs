use std::collections::BTreeSet;

use memestream::eval::{compare_exact, lfk_nmi, Cover};

fn cover(sets: &[&[u32]]) -> Cover {
    Cover::new(
        sets.iter()
            .enumerate()
            .map(|(i, s)| (format!("c{i}"), s.iter().map(|e| e.to_string()).collect::<BTreeSet<_>>())),
    )
}

fn main() {
    let planted = cover(&[&[1, 2, 3, 4], &[5, 6, 7, 8]]);
    let moved = cover(&[&[1, 2, 3], &[4, 5, 6, 7, 8]]);
    let overlapping = cover(&[&[1, 2, 3, 4, 5], &[4, 5, 6, 7, 8]]);
    let unrelated = cover(&[&[1, 3, 5, 7], &[2, 4, 6, 8]]);
    for (name, c) in [("same", &planted), ("one moved", &moved), ("overlapping", &overlapping), ("unrelated", &unrelated)] {
        println!("{name:<12} {:.6}", lfk_nmi(&planted, c));
    }
    print!("{}", compare_exact(&planted, &moved).report());
}
