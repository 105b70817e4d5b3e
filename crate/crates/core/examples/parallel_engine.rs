//! The worker/coordinator engine against the sequential clusterer.

use memestream::cluster::{Params, SequentialClusterer};
use memestream::eval::{compare_exact, lfk_nmi, Cover};
use memestream::ingest::{bucket_all, synth_stream, SynthConfig};
use memestream::parallel::{run_parallel, Bootstrap, EngineConfig, Strategy};

fn main() -> memestream::Result<()> {
    let (tweets, _) = synth_stream(&SynthConfig {
        tweets_total: 4000,
        duration: 1440,
        ..Default::default()
    })?;
    let params = Params::default();
    let steps = bucket_all(tweets, params.step_seconds)?;

    let mut seq = SequentialClusterer::new(params.clone())?;
    for s in &steps {
        seq.process_step(s)?;
    }
    let reference = Cover::from_snapshots(&seq.state.snapshots());

    for (workers, batch, deterministic) in [(1, 1, true), (4, 40, true), (4, 40, false)] {
        let cfg = EngineConfig {
            params: params.clone(),
            workers,
            batch_size: batch,
            strategy: Strategy::ClusterDelta,
            deterministic,
            ..Default::default()
        };
        let out = run_parallel(&steps[3..], &cfg, Bootstrap::run(&steps[..3], &params)?)?;
        let cover = Cover::from_snapshots(&out.state.snapshots());
        let agg = out.metrics.aggregates();
        println!(
            "W={workers} B={batch} deterministic={deterministic}: {} batches, exact={} nmi={:.3}",
            agg.batches,
            compare_exact(&cover, &reference).equal,
            lfk_nmi(&cover, &reference)
        );
    }
    Ok(())
}
