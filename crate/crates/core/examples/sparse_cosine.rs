use memestream::protomeme::{cosine, vec_add, SparseVector};

fn main() -> memestream::Result<()> {
    let a = SparseVector::from_pairs([("w:ram", 2.0), ("w:win", 1.0), ("w:vcu", 1.0)]);
    let b = SparseVector::from_pairs([("w:ram", 1.0), ("w:lose", 3.0)]);
    println!("cos(a, b) = {:.4}", cosine(&a, &b));
    println!("cos(a, a) = {:.4}", cosine(&a, &a));

    // Centroids are kept as sums; cosine is scale invariant so no division is needed.
    let mut sum = vec_add(&a, &b);
    println!("|a + b|^2 = {}", sum.norm_sq());
    sum.sub_assign(&b)?;
    assert_eq!(sum, a);
    println!("after removing b: {:?}", sum.sorted());
    Ok(())
}
