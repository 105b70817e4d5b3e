//! Serialized sizes of the two synchronization strategies as the window grows.

use memestream::cluster::Params;
use memestream::ingest::{bucket_all, synth_stream, SynthConfig};
use memestream::parallel::messages::{deserialize_sync, serialize_sync, SyncMessage};
use memestream::parallel::{run_parallel, Bootstrap, EngineConfig, Strategy};

fn main() -> memestream::Result<()> {
    let msg = SyncMessage::SyncInit { batch_seq: 7 };
    let bytes = serialize_sync(&msg)?;
    println!("{}", String::from_utf8_lossy(&bytes));
    assert_eq!(deserialize_sync(&bytes)?, msg);

    let (tweets, _) = synth_stream(&SynthConfig {
        tweets_total: 3000,
        duration: 1080,
        ..Default::default()
    })?;
    let steps = bucket_all(tweets, 30)?;
    for window in [2, 6, 12] {
        let params = Params {
            window_steps: window,
            ..Params::default()
        };
        let mut sizes = Vec::new();
        for strategy in Strategy::ALL {
            let cfg = EngineConfig {
                params: params.clone(),
                workers: 2,
                batch_size: 40,
                strategy,
                ..Default::default()
            };
            let out = run_parallel(&steps[2..], &cfg, Bootstrap::run(&steps[..2], &params)?)?;
            sizes.push((strategy, out.metrics.aggregates().avg_message_bytes));
        }
        let line: Vec<String> = sizes.iter().map(|(s, b)| format!("{s} {b:.0} B")).collect();
        println!("l={window:>2}: {}", line.join(", "));
    }
    Ok(())
}
