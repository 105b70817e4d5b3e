//! Running mean and deviation of similarity values, and the outlier test.

use memestream::cluster::OnlineStats;

fn main() -> memestream::Result<()> {
    let mut stats = OnlineStats::default();
    for sim in [0.42, 0.51, 0.38, 0.47, 0.55, 0.44, 0.49] {
        stats.add(sim)?;
    }
    println!("n={} mean={:.4} sigma={:.4}", stats.count, stats.mean, stats.sigma());
    let nsigma = 2.0;
    println!("threshold at {nsigma} sigma: {:.4}", stats.threshold(nsigma));
    for sim in [0.30, 0.36, 0.45] {
        println!("sim {sim:.2} outlier={}", stats.is_outlier(sim, nsigma));
    }
    Ok(())
}
