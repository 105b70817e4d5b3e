use memestream::cluster::{ClusterState, Params, SequentialClusterer};
use memestream::eval::{compare_exact, Cover};
use memestream::ingest::{bucket_all, synth_stream, SynthConfig, TimeStepBatch};
use memestream::parallel::{run_parallel, Bootstrap, EngineConfig, EngineOutput, Strategy};
use memestream::Error;

fn stream(tweets: usize, seed: u64) -> Vec<TimeStepBatch> {
    let cfg = SynthConfig {
        tweets_total: tweets,
        duration: tweets as i64 * 3600 / 10_000,
        seed,
        ..Default::default()
    };
    bucket_all(synth_stream(&cfg).unwrap().0, 30).unwrap()
}

fn params() -> Params {
    Params::default()
}

fn engine(strategy: Strategy, workers: usize, batch_size: usize) -> EngineConfig {
    EngineConfig {
        params: params(),
        workers,
        batch_size,
        strategy,
        trace: true,
        history: true,
        ..Default::default()
    }
}

fn sequential(steps: &[TimeStepBatch]) -> ClusterState {
    let mut seq = SequentialClusterer::new(params()).unwrap();
    seq.state.enable_history();
    for b in steps {
        seq.process_step(b).unwrap();
    }
    seq.state
}

fn run(steps: &[TimeStepBatch], boot: usize, cfg: &EngineConfig) -> EngineOutput {
    let b = Bootstrap::run(&steps[..boot], &cfg.params).unwrap();
    run_parallel(&steps[boot..], cfg, b).unwrap()
}

#[test]
fn one_worker_batch_one_matches_sequential() {
    let steps = stream(2500, 42);
    let seq = sequential(&steps);
    for strategy in Strategy::ALL {
        let out = run(&steps, 4, &engine(strategy, 1, 1));
        let cmp = compare_exact(
            &Cover::from_snapshots(&out.state.snapshots()),
            &Cover::from_snapshots(&seq.snapshots()),
        );
        assert!(cmp.equal, "{strategy}: {}", cmp.report());
        assert_eq!(out.state.snapshots(), seq.snapshots(), "{strategy}");
        assert_eq!(out.state.stats, seq.stats, "{strategy}");
        out.state.check_invariants().unwrap();
    }
}

#[test]
fn strategies_agree_after_every_sync() {
    let steps = stream(1500, 7);
    for workers in [1, 2, 4] {
        for batch in [1, 40, 512] {
            let a = run(&steps, 3, &engine(Strategy::ClusterDelta, workers, batch));
            let b = run(&steps, 3, &engine(Strategy::FullCentroids, workers, batch));
            assert_eq!(a.trace.len(), b.trace.len());
            for (x, y) in a.trace.iter().zip(&b.trace) {
                assert_eq!(x.batch_seq, y.batch_seq);
                assert_eq!(x.uids, y.uids, "W={workers} B={batch} batch {}", x.batch_seq);
                for (cx, cy) in x.centroids.iter().zip(&y.centroids) {
                    assert_eq!(cx.count, cy.count);
                    for (vx, vy) in cx.vectors().iter().zip(cy.vectors()) {
                        assert_eq!(vx.len(), vy.len());
                        for (k, v) in vx.iter() {
                            assert!((v - vy.get(k)).abs() <= 1e-9);
                        }
                    }
                }
                assert_eq!(x.stats, y.stats);
            }
            assert_eq!(a.state.snapshots(), b.state.snapshots());
            assert_eq!(a.state.history(), b.state.history());
            let (ma, mb) = (a.metrics.aggregates(), b.metrics.aggregates());
            assert_eq!(ma.tuples, mb.tuples);
            assert!(mb.avg_message_bytes > ma.avg_message_bytes, "W={workers} B={batch}");
        }
    }
}

#[test]
fn concurrent_mode_matches_deterministic_mode() {
    let steps = stream(2000, 3);
    for strategy in Strategy::ALL {
        let det = run(&steps, 3, &engine(strategy, 3, 40));
        let con = run(
            &steps,
            3,
            &EngineConfig {
                deterministic: false,
                ..engine(strategy, 3, 40)
            },
        );
        assert_eq!(det.state.snapshots(), con.state.snapshots(), "{strategy}");
        assert_eq!(det.trace, con.trace, "{strategy}");
        assert_eq!(det.metrics.without_timings().batches.len(), con.metrics.batches.len());
        let strip = |m: &memestream::eval::MetricsReport| {
            let mut m = m.without_timings();
            m.deterministic = false;
            m
        };
        assert_eq!(strip(&det.metrics), strip(&con.metrics));
    }
}

#[test]
fn batches_respect_size_and_step_boundaries() {
    let steps = stream(1500, 1);
    let out = run(&steps, 2, &engine(Strategy::ClusterDelta, 2, 17));
    let rows = &out.metrics.batches;
    assert!(rows.iter().all(|r| r.tuples >= 1 && r.tuples <= 17));
    assert!(rows.windows(2).all(|w| w[0].step <= w[1].step && w[0].batch_seq + 1 == w[1].batch_seq));
    let per_step: u64 = rows.iter().map(|r| r.tuples as u64).sum();
    assert_eq!(per_step, out.protomemes);
    assert_eq!(rows[0].batch_seq, 1);
}

#[test]
fn rejects_bad_bootstraps_and_configs() {
    let steps = stream(600, 2);
    let boot = Bootstrap::run(&steps[..2], &params()).unwrap();
    let bad = EngineConfig {
        workers: 0,
        ..engine(Strategy::ClusterDelta, 1, 1)
    };
    assert!(matches!(run_parallel(&steps[2..], &bad, boot.clone()), Err(Error::Config(_))));
    let other_k = EngineConfig {
        params: Params { k: 5, ..params() },
        ..engine(Strategy::ClusterDelta, 1, 1)
    };
    assert!(matches!(run_parallel(&steps[2..], &other_k, boot.clone()), Err(Error::Config(_))));
    assert!(matches!(
        run_parallel(&steps[1..], &engine(Strategy::ClusterDelta, 1, 1), boot),
        Err(Error::Config(_))
    ));
    assert!(matches!(Bootstrap::run(&[], &params()), Err(Error::Config(_))));
}

#[test]
fn empty_suffix_just_syncs_the_bootstrap() {
    let steps = stream(600, 4);
    for strategy in Strategy::ALL {
        let b = Bootstrap::run(&steps, &params()).unwrap();
        let expected = b.state.snapshots();
        let out = run_parallel(&[], &engine(strategy, 2, 8), b).unwrap();
        assert!(out.metrics.batches.is_empty());
        assert_eq!(out.state.snapshots(), expected);
    }
}
