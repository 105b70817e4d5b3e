//! Sequential sliding-window clustering of a synthetic stream.

use memestream::cluster::{Params, SequentialClusterer};
use memestream::eval::{lfk_nmi, Cover};
use memestream::ingest::{bucket_all, synth_stream, SynthConfig};

fn main() -> memestream::Result<()> {
    let (tweets, truth) = synth_stream(&SynthConfig {
        tweets_total: 5000,
        duration: 1800,
        ..Default::default()
    })?;
    let params = Params::default();
    let steps = bucket_all(tweets, params.step_seconds)?;
    let mut seq = SequentialClusterer::new(params)?;
    seq.state.enable_history();
    for step in &steps {
        let r = seq.process_step(step)?;
        if step.step_index % 10 == 0 {
            println!(
                "step {:>3}: {:>3} protomemes, {:>3} marker hits, {:>3} nearest, {} outliers, {} expired",
                r.step_index, r.protomemes, r.marker_hits, r.nearest, r.outliers, r.expired
            );
        }
    }
    for snap in seq.state.snapshots().iter().take(5) {
        let markers: Vec<String> = snap.marker_list.iter().take(3).map(|m| m.to_string()).collect();
        println!("cluster {} holds {} tweets, markers {}", snap.cluster_uid, snap.tweet_ids.len(), markers.join(" "));
    }
    let recovered = Cover::from_uid_map(seq.state.history().unwrap());
    println!("LFK-NMI vs planted memes: {:.3}", lfk_nmi(&recovered, &Cover::from_named(&truth)));
    Ok(())
}
