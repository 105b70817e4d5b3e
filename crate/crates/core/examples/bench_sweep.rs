//! A small worker-count sweep in the shape of the CLI `bench` report.

use memestream::cluster::Params;
use memestream::eval::bench_report;
use memestream::ingest::{bucket_all, synth_stream, SynthConfig};
use memestream::parallel::{run_parallel, Bootstrap, EngineConfig, Strategy};

fn main() -> memestream::Result<()> {
    let (tweets, _) = synth_stream(&SynthConfig {
        tweets_total: 3000,
        duration: 1080,
        ..Default::default()
    })?;
    let params = Params { k: 60, ..Params::default() };
    let steps = bucket_all(tweets, params.step_seconds)?;
    let boot = Bootstrap::run(&steps[..2], &params)?;
    let mut runs = Vec::new();
    for strategy in Strategy::ALL {
        for workers in [1, 2, 4] {
            let cfg = EngineConfig {
                params: params.clone(),
                workers,
                batch_size: 40,
                strategy,
                ..Default::default()
            };
            runs.push(run_parallel(&steps[2..], &cfg, boot.clone())?.metrics);
        }
    }
    print!("{}", bench_report(&runs).to_table());
    Ok(())
}
