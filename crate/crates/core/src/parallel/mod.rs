//! The parallel engine: one protomeme generator, W workers and a sync
//! coordinator, exchanging messages over point-to-point queues and a
//! broadcast topic.
//!
//! Batches never span a time step. Each sync message announces the step of
//! the next batch, and receivers expire their window to it, so both sync
//! strategies see the same clusters at every barrier.

pub mod bus;
mod coordinator;
pub mod messages;
mod route;
mod worker;

pub use coordinator::{CoordBatchRecord, CoordIn, Coordinator};
pub use messages::{
    deserialize_sync, serialize_sync, CentroidEntry, DeltaEntry, StatsPayload, SyncMessage, TupleKind, WorkTuple,
    SYNC_TOPIC,
};
pub use route::{fnv1a64, marker_hash, route};
pub use worker::{
    apply_delta_entries, BatchTrace, CentroidTable, GenProto, Worker, WorkerBatchRecord, WorkerView,
};

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, never, select, unbounded, Receiver, SendTimeoutError, Sender};
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterState, Params, SequentialClusterer};
use crate::error::{Error, Result};
use crate::eval::{BatchMetrics, MetricsReport};
use crate::ingest::TimeStepBatch;
use crate::protomeme::{Protomeme, ProtomemeGenerator};
use bus::{Bus, ChannelBus, DirectBus, Payload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    ClusterDelta,
    FullCentroids,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::ClusterDelta, Strategy::FullCentroids];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::ClusterDelta => "cluster-delta",
            Strategy::FullCentroids => "full-centroids",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cluster-delta" | "cluster_delta" => Ok(Strategy::ClusterDelta),
            "full-centroids" | "full_centroids" => Ok(Strategy::FullCentroids),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}` (expected cluster-delta or full-centroids)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub params: Params,
    pub workers: usize,
    pub batch_size: usize,
    pub strategy: Strategy,
    /// Single-threaded scheduler instead of one thread per role.
    pub deterministic: bool,
    /// Record every worker-0 post-sync state.
    pub trace: bool,
    /// Track every tweet each cluster generation ever held.
    pub history: bool,
    /// Compare worker fingerprints after every sync.
    pub check_consistency: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            params: Params::default(),
            workers: 1,
            batch_size: 1,
            strategy: Strategy::ClusterDelta,
            deterministic: true,
            trace: false,
            history: false,
            check_consistency: true,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.workers == 0 {
            return Err(Error::Config("need at least one worker".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Initial clusters plus the generator state (retweet index) that produced
/// them.
#[derive(Debug, Clone)]
pub struct Bootstrap {
    pub state: ClusterState,
    pub generator: ProtomemeGenerator,
}

impl Bootstrap {
    pub fn from_sequential(seq: SequentialClusterer) -> Self {
        Self {
            state: seq.state,
            generator: seq.generator,
        }
    }

    /// Run the sequential clusterer over `steps`.
    pub fn run(steps: &[TimeStepBatch], params: &Params) -> Result<Self> {
        let mut seq = SequentialClusterer::new(params.clone())?;
        for b in steps {
            seq.process_step(b)?;
        }
        if !seq.state.initialized {
            return Err(Error::Config("bootstrap steps contain no protomemes".into()));
        }
        Ok(Self::from_sequential(seq))
    }
}

#[derive(Debug, Clone)]
pub struct EngineOutput {
    /// The global state after the final sync.
    pub state: ClusterState,
    pub metrics: MetricsReport,
    /// Worker 0's state after each sync, batch 0 included.
    pub trace: Vec<BatchTrace>,
    pub protomemes: u64,
    pub unmarked_tweets: u64,
}

enum Emission {
    Batch { start: CoordIn, protos: Vec<(usize, GenProto)> },
    End(CoordIn),
}

/// Cuts each step's protomemes into batches of at most B and routes them.
struct Source<'a> {
    steps: std::slice::Iter<'a, TimeStepBatch>,
    generator: ProtomemeGenerator,
    batch_size: usize,
    workers: usize,
    chunks: VecDeque<(u64, Vec<Arc<Protomeme>>)>,
    next_batch: u64,
    next_seq: u64,
    last_step: Option<u64>,
    finished: bool,
    base: (u64, u64),
}

impl<'a> Source<'a> {
    fn new(steps: &'a [TimeStepBatch], generator: ProtomemeGenerator, batch_size: usize, workers: usize) -> Self {
        let base = (generator.generated(), generator.unmarked_tweets());
        Self {
            base,
            steps: steps.iter(),
            generator,
            batch_size,
            workers,
            chunks: VecDeque::new(),
            next_batch: 1,
            next_seq: 0,
            last_step: None,
            finished: false,
        }
    }

    fn stats(&self) -> SourceStats {
        SourceStats {
            protomemes: self.generator.generated() - self.base.0,
            unmarked: self.generator.unmarked_tweets() - self.base.1,
        }
    }

    fn next(&mut self) -> Option<Emission> {
        if self.finished {
            return None;
        }
        while self.chunks.is_empty() {
            let Some(step) = self.steps.next() else {
                self.finished = true;
                return Some(Emission::End(CoordIn::End {
                    final_step: self.last_step,
                    last_batch: self.next_batch - 1,
                }));
            };
            self.last_step = Some(step.step_index);
            let protos = self.generator.generate(step);
            for chunk in protos.chunks(self.batch_size) {
                self.chunks.push_back((step.step_index, chunk.to_vec()));
            }
        }
        let (step, chunk) = self.chunks.pop_front().expect("non-empty");
        let batch_seq = self.next_batch;
        self.next_batch += 1;
        let start = CoordIn::BatchStart {
            batch_seq,
            step,
            first_seq: self.next_seq,
            size: chunk.len(),
        };
        let protos = chunk
            .into_iter()
            .map(|p| {
                let seq = self.next_seq;
                self.next_seq += 1;
                let w = route(&p.marker, self.workers);
                (
                    w,
                    GenProto {
                        seq,
                        batch_seq,
                        protomeme: p,
                    },
                )
            })
            .collect();
        Some(Emission::Batch { start, protos })
    }
}

/// Run the engine over `steps`, starting from `bootstrap`.
pub fn run_parallel(steps: &[TimeStepBatch], cfg: &EngineConfig, bootstrap: Bootstrap) -> Result<EngineOutput> {
    cfg.validate()?;
    let mut state = bootstrap.state;
    if !state.initialized || state.current_step.is_none() {
        return Err(Error::Config("engine needs an initialised bootstrap state".into()));
    }
    if state.k() != cfg.params.k || state.window != cfg.params.window_steps {
        return Err(Error::Config("bootstrap state was built with different k or window".into()));
    }
    if let Some(first) = steps.first() {
        if state.current_step.is_some_and(|c| first.step_index <= c) {
            return Err(Error::Config("stream overlaps the bootstrap history".into()));
        }
    }
    if cfg.history {
        state.enable_history();
    }
    let coordinator = Coordinator::new(cfg.strategy, cfg.workers, cfg.params.nsigma, &state)?;
    let workers: Vec<Worker> = (0..cfg.workers)
        .map(|id| {
            let view = match cfg.strategy {
                Strategy::ClusterDelta => {
                    let mut s = state.clone();
                    if id != 0 {
                        s.disable_history();
                    }
                    WorkerView::Delta(s)
                }
                Strategy::FullCentroids => WorkerView::Centroids(CentroidTable::from_state(&state)),
            };
            Worker::new(id, cfg.workers, cfg.params.nsigma, view, cfg.trace && id == 0)
        })
        .collect();
    drop(state);
    let source = Source::new(steps, bootstrap.generator, cfg.batch_size, cfg.workers);

    let started = Instant::now();
    let (workers, coordinator, source_stats) = if cfg.deterministic {
        run_scheduled(source, workers, coordinator)?
    } else {
        run_threaded(source, workers, coordinator)?
    };
    let total = started.elapsed();
    assemble(cfg, workers, coordinator, source_stats, total)
}

struct SourceStats {
    protomemes: u64,
    unmarked: u64,
}

/// Single-threaded schedule: generator, then each worker's sync queue and
/// inbox in turn, then the coordinator, repeated until the coordinator is
/// done and every worker has seen STOP.
fn run_scheduled(
    mut source: Source<'_>,
    mut workers: Vec<Worker>,
    mut coord: Coordinator,
) -> Result<(Vec<Worker>, Coordinator, SourceStats)> {
    let bus = DirectBus::new();
    let subs: Vec<_> = workers.iter().map(|_| bus.subscribe(SYNC_TOPIC)).collect();
    let mut inboxes: Vec<VecDeque<GenProto>> = vec![VecDeque::new(); workers.len()];
    let mut coord_in: VecDeque<CoordIn> = VecDeque::new();
    let mut emitted_batches = 0u64;
    loop {
        let mut progress = false;
        if !source.finished && emitted_batches <= coord.current_batch() + 2 {
            match source.next() {
                Some(Emission::Batch { start, protos }) => {
                    coord_in.push_back(start);
                    for (w, g) in protos {
                        inboxes[w].push_back(g);
                    }
                    emitted_batches += 1;
                }
                Some(Emission::End(end)) => coord_in.push_back(end),
                None => {}
            }
            progress = true;
        }
        for (w, worker) in workers.iter_mut().enumerate() {
            let mut push = |m: CoordIn| coord_in.push_back(m);
            while let Some(bytes) = subs[w].pop() {
                worker.on_sync(&bytes, &mut push)?;
                progress = true;
            }
            while worker.accepting() {
                let Some(g) = inboxes[w].pop_front() else { break };
                worker.on_proto(g, &mut push)?;
                progress = true;
            }
        }
        while let Some(m) = coord_in.pop_front() {
            coord.on_input(m, &bus)?;
            progress = true;
        }
        if coord.done() && workers.iter().all(Worker::stopped) {
            break;
        }
        if !progress {
            return Err(Error::Aborted("deterministic schedule stalled".into()));
        }
    }
    Ok((workers, coord, source.stats()))
}

const POLL: Duration = Duration::from_millis(20);
const INBOX_CAPACITY: usize = 4096;

fn aborted(what: &str) -> Error {
    Error::Aborted(format!("{what} stopped because another role failed"))
}

fn send_or_abort<T>(tx: &Sender<T>, mut item: T, abort: &AtomicBool, who: &str) -> Result<()> {
    loop {
        match tx.send_timeout(item, POLL) {
            Ok(()) => return Ok(()),
            Err(SendTimeoutError::Timeout(back)) => {
                if abort.load(Ordering::Relaxed) {
                    return Err(aborted(who));
                }
                item = back;
            }
            Err(SendTimeoutError::Disconnected(_)) => return Err(aborted(who)),
        }
    }
}

fn worker_loop(
    worker: &mut Worker,
    inbox: Receiver<GenProto>,
    sync: Receiver<Payload>,
    coord: Sender<CoordIn>,
    abort: &AtomicBool,
) -> Result<()> {
    let closed = never::<GenProto>();
    let mut inbox_open = true;
    let mut failed = false;
    let mut send = |m: CoordIn| {
        if coord.send(m).is_err() {
            failed = true;
        }
    };
    while !worker.stopped() {
        if abort.load(Ordering::Relaxed) {
            return Err(aborted("worker"));
        }
        let src = if inbox_open && worker.accepting() { &inbox } else { &closed };
        select! {
            recv(sync) -> m => match m {
                Ok(bytes) => worker.on_sync(&bytes, &mut send)?,
                Err(_) => return Err(aborted("worker")),
            },
            recv(src) -> m => match m {
                Ok(g) => worker.on_proto(g, &mut send)?,
                Err(_) => inbox_open = false,
            },
            default(POLL) => {}
        }
    }
    if failed {
        return Err(aborted("worker"));
    }
    Ok(())
}

fn coordinator_loop(coord: &mut Coordinator, rx: Receiver<CoordIn>, bus: &dyn Bus, abort: &AtomicBool) -> Result<()> {
    while !coord.done() {
        if abort.load(Ordering::Relaxed) {
            return Err(aborted("coordinator"));
        }
        match rx.recv_timeout(POLL) {
            Ok(m) => coord.on_input(m, bus)?,
            Err(crossbeam_channel::RecvTimeoutError::Timeout) => {}
            Err(crossbeam_channel::RecvTimeoutError::Disconnected) => return Err(aborted("coordinator")),
        }
    }
    Ok(())
}

/// One thread per role.
fn run_threaded(
    mut source: Source<'_>,
    workers: Vec<Worker>,
    mut coord: Coordinator,
) -> Result<(Vec<Worker>, Coordinator, SourceStats)> {
    let abort = AtomicBool::new(false);
    let mut bus = ChannelBus::new();
    let subs: Vec<Receiver<Payload>> = workers.iter().map(|_| bus.subscribe(SYNC_TOPIC)).collect();
    let (coord_tx, coord_rx) = unbounded::<CoordIn>();
    let (inbox_txs, inbox_rxs): (Vec<_>, Vec<_>) = workers.iter().map(|_| bounded::<GenProto>(INBOX_CAPACITY)).unzip();

    let fail = |e: Error| {
        abort.store(true, Ordering::Relaxed);
        e
    };
    std::thread::scope(|s| {
        let abort = &abort;
        let generator = {
            let coord_tx = coord_tx.clone();
            s.spawn(move || -> Result<SourceStats> {
                let mut run = || -> Result<()> {
                    while let Some(e) = source.next() {
                        match e {
                            Emission::Batch { start, protos } => {
                                send_or_abort(&coord_tx, start, abort, "generator")?;
                                for (w, g) in protos {
                                    send_or_abort(&inbox_txs[w], g, abort, "generator")?;
                                }
                            }
                            Emission::End(end) => send_or_abort(&coord_tx, end, abort, "generator")?,
                        }
                    }
                    Ok(())
                };
                run().map_err(fail)?;
                drop(inbox_txs);
                Ok(source.stats())
            })
        };
        let handles: Vec<_> = workers
            .into_iter()
            .zip(inbox_rxs)
            .zip(subs)
            .map(|((mut worker, inbox), sync)| {
                let coord_tx = coord_tx.clone();
                s.spawn(move || -> Result<Worker> {
                    worker_loop(&mut worker, inbox, sync, coord_tx, abort).map_err(fail)?;
                    Ok(worker)
                })
            })
            .collect();
        drop(coord_tx);
        let coord_result = coordinator_loop(&mut coord, coord_rx, &bus, abort).map_err(fail);

        let mut errors: Vec<Error> = Vec::new();
        let stats = match generator.join() {
            Ok(r) => r.map_err(|e| errors.push(e)).ok(),
            Err(_) => {
                errors.push(fail(Error::Aborted("generator panicked".into())));
                None
            }
        };
        let mut finished = Vec::new();
        for h in handles {
            match h.join() {
                Ok(Ok(w)) => finished.push(w),
                Ok(Err(e)) => errors.push(e),
                Err(_) => errors.push(fail(Error::Aborted("worker panicked".into()))),
            }
        }
        if let Err(e) = coord_result {
            errors.push(e);
        }
        if !errors.is_empty() {
            let primary = errors.iter().position(|e| !matches!(e, Error::Aborted(_))).unwrap_or(0);
            return Err(errors.swap_remove(primary));
        }
        Ok((finished, coord, stats.expect("generator succeeded")))
    })
}

fn assemble(
    cfg: &EngineConfig,
    mut workers: Vec<Worker>,
    coord: Coordinator,
    source: SourceStats,
    total: Duration,
) -> Result<EngineOutput> {
    let n_batches = coord.records.len();
    for w in &workers {
        let seqs: Vec<u64> = w.records.iter().map(|r| r.batch_seq).collect();
        if seqs != (0..n_batches as u64).collect::<Vec<_>>() {
            return Err(Error::Consistency(format!("worker {} missed or repeated a sync", w.id)));
        }
    }
    if cfg.check_consistency {
        for b in 0..n_batches {
            let f0 = workers[0].records[b].fingerprint;
            if let Some(w) = workers.iter().find(|w| w.records[b].fingerprint != f0) {
                return Err(Error::Consistency(format!(
                    "worker {} diverged from worker 0 after sync {b}",
                    w.id
                )));
            }
        }
    }
    let tuples: usize = coord.records.iter().map(|r| r.tuples).sum();
    if tuples as u64 != source.protomemes {
        return Err(Error::Consistency(format!(
            "{} protomemes generated but {tuples} tuples synchronised",
            source.protomemes
        )));
    }
    let mut rows = Vec::with_capacity(n_batches.saturating_sub(1));
    for (b, rec) in coord.records.iter().enumerate().skip(1) {
        let per: Vec<&WorkerBatchRecord> = workers.iter().map(|w| &w.records[b]).collect();
        let compute = per.iter().map(|r| r.compute).max().unwrap_or_default();
        let sync = if cfg.deterministic {
            rec.build + per.iter().map(|r| r.apply).max().unwrap_or_default()
        } else {
            per.iter()
                .map(|r| r.applied_at)
                .max()
                .map_or(Duration::ZERO, |t| t.saturating_duration_since(rec.syncinit_at))
        };
        rows.push(BatchMetrics {
            batch_seq: rec.batch_seq,
            step: rec.step,
            tuples: rec.tuples,
            message_bytes: rec.message_bytes,
            sync_time_s: sync.as_secs_f64(),
            compute_time_s: compute.as_secs_f64(),
            live_protomemes: rec.live_protomemes,
            new_clusters: rec.new_clusters,
        });
    }
    let metrics = MetricsReport {
        strategy: cfg.strategy.to_string(),
        workers: cfg.workers,
        batch_size: cfg.batch_size,
        deterministic: cfg.deterministic,
        total_time_s: total.as_secs_f64(),
        batches: rows,
    };
    let trace = workers[0].trace.take().unwrap_or_default();
    let state = match cfg.strategy {
        Strategy::FullCentroids => coord.into_state().expect("full-centroids coordinator keeps state"),
        Strategy::ClusterDelta => match workers.swap_remove(0).view {
            WorkerView::Delta(s) => s,
            WorkerView::Centroids(_) => unreachable!("cluster-delta workers hold full state"),
        },
    };
    Ok(EngineOutput {
        state,
        metrics,
        trace,
        protomemes: source.protomemes,
        unmarked_tweets: source.unmarked,
    })
}
